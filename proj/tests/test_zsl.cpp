#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "protogram/error.hpp"
#include "protogram/features.hpp"
#include "protogram/zsl.hpp"

using namespace protogram;

namespace {

LabeledVector toy(CatalogId id, std::size_t bit, int label) {
  LabeledVector v;
  v.features.catalog = id;
  v.features.catalog_version = catalog_for(id).version;
  v.features.bits.assign(catalog_for(id).size(), 0);
  v.features.bits[bit] = 1;
  v.label = label;
  return v;
}

std::vector<LabeledVector> separable() {
  std::vector<LabeledVector> pairs;
  for (int i = 0; i < 20; ++i) pairs.push_back(toy(CatalogId::kMention, 0, +1));
  for (int i = 0; i < 60; ++i) pairs.push_back(toy(CatalogId::kMention, 1 + static_cast<std::size_t>(i % 3), -1));
  return pairs;
}

std::size_t chunk_with(const Document& d, const std::string& joined) {
  for (std::size_t i = 0; i < d.chunks.size(); ++i)
    if (d.chunks[i].joined() == joined) return i;
  FAIL("no chunk " << joined);
  return 0;
}

FieldType ft(const std::string& name) { return FieldType{name, {}, {}, {}, 0, {}}; }

}  // namespace

TEST_CASE("training separates a separable toy set") {
  const auto pairs = separable();
  const auto m = train(pairs, 11, 30);
  for (const auto& p : pairs) CHECK(classify(m, p.features) == (p.label > 0));
  CHECK(m.meta.seed == 11);
  CHECK(m.meta.epochs == 30);
  CHECK(m.weights.size() == mention_catalog().size() + 1);
}

TEST_CASE("training is a pure function of data and seed") {
  const auto pairs = separable();
  CHECK(train(pairs, 5, 20) == train(pairs, 5, 20));
  TrainOptions o;
  o.epochs = 20;
  CHECK(train(pairs, 5, o) == train(pairs, 5, 20));
}

TEST_CASE("degenerate and mixed training sets are rejected") {
  std::vector<LabeledVector> pos{toy(CatalogId::kMention, 0, 1)};
  try {
    train(pos, 1, 5);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDegenerateTraining);
  }
  CHECK_THROWS_AS(train(std::vector<LabeledVector>{}, 1, 5), Error);
  std::vector<LabeledVector> mixed{toy(CatalogId::kMention, 0, 1), toy(CatalogId::kProperty, 0, -1)};
  try {
    train(mixed, 1, 5);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kCatalogMismatch);
  }
}

TEST_CASE("scoring a vector from another catalog fails") {
  const auto m = make_model(CatalogId::kMention);
  try {
    score(m, toy(CatalogId::kProperty, 0, 1).features);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kCatalogMismatch);
  }
}

TEST_CASE("overlap resolution keeps score, then length, then position") {
  std::vector<Mention> c{
      {0, {10, 20}, 0, "A", 1.0},
      {1, {15, 25}, 1, "B", 2.0},
      {2, {30, 40}, 0, "A", 1.0},
      {3, {30, 35}, 1, "B", 1.0},
      {4, {50, 55}, 0, "A", 1.0},
      {5, {53, 58}, 1, "B", 1.0},
  };
  const auto kept = resolve_overlaps(c);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].chunk_index == 1);
  CHECK(kept[1].chunk_index == 2);
  CHECK(kept[2].chunk_index == 4);
  for (std::size_t i = 1; i < kept.size(); ++i) CHECK_FALSE(kept[i - 1].span.overlaps(kept[i].span));
}

TEST_CASE("identified mentions do not depend on type order") {
  const auto d = build_document(load_rfc(testing::data_dir() / "corpus" / "tcp.txt", "tcp"));
  auto m = make_model(CatalogId::kMention);
  const auto& names = m.feature_names;
  m.weights[static_cast<std::size_t>(std::find(names.begin(), names.end(), "exact_match_ci") - names.begin())] = 2.0;
  m.weights.back() = -1.0;
  std::vector<FieldType> types{ft("Source Port"), ft("Window"), ft("Checksum"), ft("Data Offset")};
  auto reversed = types;
  std::reverse(reversed.begin(), reversed.end());
  auto key = [](const std::vector<Mention>& v) {
    std::vector<std::pair<CharSpan, std::string>> out;
    for (const auto& x : v) out.emplace_back(x.span, x.type_name);
    return out;
  };
  const auto a = identify_mentions(m, d, types);
  CHECK_FALSE(a.empty());
  CHECK(key(a) == key(identify_mentions(m, d, reversed)));
  try {
    identify_mentions(m, d, {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kEmptyTypes);
  }
}

TEST_CASE("kind assignment counts key phrases and breaks ties by priority") {
  const auto d = testing::doc_from(
      "3.  Checksum Field\n\n"
      "   The value holds the type and the checksum.\n\n"
      "   The port and the checksum value.\n\n"
      "   The sequence number and the acknowledgment number and the acknowledgment.\n\n"
      "   Nothing relevant appears in this one.\n");
  PropertySpan s;
  s.chunk_index = chunk_with(d, "type");
  CHECK(assign_property_kind(d, s) == PropertyKind::kPacketType);
  s.chunk_index = chunk_with(d, "port");
  CHECK(assign_property_kind(d, s) == PropertyKind::kChecksum);
  s.chunk_index = chunk_with(d, "acknowledgment number");
  CHECK(assign_property_kind(d, s) == PropertyKind::kAcknowledgementNumber);
  s.chunk_index = chunk_with(d, "Nothing relevant appears");
  try {
    assign_property_kind(d, s);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUnassignableKind);
  }
}

TEST_CASE("arguments resolve through enclosing section titles") {
  const auto d = testing::doc_from(
      "3.  Checksum Field\n\n   Intro text here.\n\n"
      "3.1.  Details\n\n   Computed over everything.\n\n"
      "4.  Unrelated\n\n   Other words here.\n");
  const std::vector<FieldType> types{ft("Check"), ft("Checksum")};
  PropertySpan s;
  s.chunk_index = chunk_with(d, "Computed");
  CHECK(resolve_property_argument(s, d, types) == 1);
  s.chunk_index = chunk_with(d, "words");
  try {
    resolve_property_argument(s, d, types);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUnresolvedArgument);
  }
}

TEST_CASE("model and bundle files round-trip") {
  const auto m = train(separable(), 3, 10);
  CHECK(parse_model(serialize_model(m)) == m);
  ModelBundle b{m, make_model(CatalogId::kProperty)};
  b.property.weights[0] = 0.25;
  b.property.meta.protocols = {"x", "y"};
  CHECK(parse_bundle(serialize_bundle(b)) == b);
}

TEST_CASE("model files from another catalog or malformed files are rejected") {
  const auto text = serialize_model(make_model(CatalogId::kMention));
  auto tampered = text;
  const auto pos = tampered.find("exact_match_ci");
  REQUIRE(pos != std::string::npos);
  tampered.replace(pos, 14, "exact_match_cx");
  try {
    parse_model(tampered);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kCatalogMismatch);
  }
  CHECK_THROWS_AS(parse_model("{"), Error);
  CHECK_THROWS_AS(parse_bundle(text), Error);
}

TEST_CASE("feature catalogs hold no protocol vocabulary") {
  for (const auto* c : {&mention_catalog(), &property_catalog()})
    for (const auto& name : c->names) {
      std::string lower = name;
      std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
      std::istringstream parts(lower);
      for (std::string part; std::getline(parts, part, '_');)
        for (const char* p : {"tcp", "dccp", "ip", "ipv6", "gre", "sctp", "udp", "syn", "ack", "rst"})
          CHECK(part != p);
    }
}

TEST_CASE("training pairs record every token they read") {
  const auto dir = testing::data_dir() / "corpus";
  const auto doc = build_document(load_rfc(dir / "gre.txt", "gre"));
  const auto ann = parse_annotations(testing::read_file(dir / "gre.ann.jsonl"));
  TrainingSet set;
  add_training_document(set, doc, ann, PairOptions{});
  CHECK_FALSE(set.mention_pairs.empty());
  CHECK_FALSE(set.property_pairs.empty());
  CHECK(set.observed_tokens.count("checksum") == 1);
  CHECK(set.protocols == std::vector<std::string>{"gre"});
  const auto pos = std::count_if(set.mention_pairs.begin(), set.mention_pairs.end(),
                                 [](const LabeledVector& v) { return v.label > 0; });
  CHECK(pos > 0);
  CHECK(static_cast<std::size_t>(pos) * 6 >= set.mention_pairs.size());
}

#include "doctest.h"
#include "helpers.hpp"
#include "protogram/error.hpp"
#include "protogram/eval.hpp"

using namespace protogram;

namespace {

Mention mention(std::size_t a, std::size_t b, const std::string& type) { return {0, {a, b}, 0, type, 1.0}; }
PropertySpan pspan(std::size_t a, std::size_t b) { return {0, {a, b}, 1.0, std::nullopt, std::nullopt}; }

Chunk chunk(std::vector<std::string> toks, std::size_t start) {
  Chunk c;
  c.tokens = std::move(toks);
  c.span = {start, start + 1};
  return c;
}

}  // namespace

TEST_CASE("metric arithmetic") {
  const auto m = mention_metrics(576, 159, 100);
  CHECK(m.precision == doctest::Approx(576.0 / 735.0));
  CHECK(m.recall == doctest::Approx(576.0 / 676.0));
  CHECK(m.f1 == doctest::Approx(2 * 576.0 / (2 * 576.0 + 159 + 100)));
  const auto none = mention_metrics(0, 0, 5);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
  const auto p = property_metrics(3, 4, 2, 40);
  CHECK(p.s_tpr == doctest::Approx(0.75));
  CHECK(p.c_fpr == doctest::Approx(0.05));
}

TEST_CASE("mention matching needs the exact span and a case-folded type") {
  const std::vector<GoldMention> gold{{{0, 5}, "Checksum"}, {{10, 14}, "Window"}, {{20, 24}, "Port"}};
  const std::vector<Mention> pred{mention(0, 5, "CHECKSUM"), mention(10, 13, "Window"), mention(20, 24, "Window"),
                                  mention(0, 5, "checksum")};
  const auto m = eval_mentions(pred, gold);
  CHECK(m.tp == 1);
  CHECK(m.fp == 3);
  CHECK(m.fn == 2);
  CHECK(eval_mentions({}, gold).recall == 0.0);
  CHECK(eval_mentions(pred, {}).precision == 0.0);
}

TEST_CASE("property spans are hit by any contained chunk") {
  const std::vector<GoldPropertySpan> gold{{{{0, 50}}, PropertyKind::kChecksum, "Checksum"},
                                           {{{100, 120}, {130, 150}}, PropertyKind::kPort, "Port"},
                                           {{{200, 220}}, PropertyKind::kMultiple, "X"}};
  const std::vector<PropertySpan> pred{pspan(5, 10), pspan(20, 30), pspan(135, 140), pspan(115, 125),
                                       pspan(300, 310)};
  const auto m = eval_properties(pred, gold, 20);
  CHECK(m.hit_spans == 2);
  CHECK(m.s_tpr == doctest::Approx(2.0 / 3.0));
  CHECK(m.false_chunks == 2);
  CHECK(m.c_fpr == doctest::Approx(0.1));
  try {
    eval_properties(pred, {}, 20);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUndefinedMetric);
  }
}

TEST_CASE("overlap baseline thresholds") {
  const std::vector<FieldType> types{{"Source Port", {}, {}, {}, 0, {}}, {"Window", {}, {}, {}, 0, {}}};
  const std::vector<Chunk> chunks{chunk({"source", "port"}, 0), chunk({"port"}, 10), chunk({"the", "window"}, 20),
                                  chunk({"nothing"}, 30)};
  CHECK(overlap_baseline(types, chunks, 100).size() == 2);
  CHECK(overlap_baseline(types, chunks, 50).size() == 3);
  CHECK(overlap_baseline(types, chunks, 85).size() == 2);
  const auto half = overlap_baseline(types, chunks, 50);
  CHECK(half[1].type_name == "Source Port");
  CHECK(half[1].score == doctest::Approx(0.5));
}

TEST_CASE("rule-based weights follow feature rates") {
  auto vec = [](std::vector<std::uint8_t> head, int label) {
    LabeledVector v;
    v.features.catalog = CatalogId::kMention;
    v.features.catalog_version = mention_catalog().version;
    v.features.bits.assign(mention_catalog().size(), 0);
    std::copy(head.begin(), head.end(), v.features.bits.begin());
    v.label = label;
    return v;
  };
  const std::vector<LabeledVector> pairs{vec({1, 0, 1}, 1), vec({1, 0, 0}, 1), vec({0, 1, 1}, -1),
                                         vec({0, 1, 0}, -1)};
  const auto rb1 = rb_weights(pairs, RbVariant::kRB1);
  CHECK(rb1.weights[0] == doctest::Approx(1.0));
  CHECK(rb1.weights[1] == doctest::Approx(-1.0));
  CHECK(rb1.weights[2] == doctest::Approx(0.0));
  CHECK(rb1.bias() == doctest::Approx(-1.0));
  const auto rb2 = rb_weights(pairs, RbVariant::kRB2);
  CHECK(rb2.weights[0] == 1.0);
  CHECK(rb2.weights[1] == -1.0);
  CHECK(rb2.bias() == -1.0);
  for (const auto& p : pairs) CHECK(classify(rb2, p.features) == (p.label > 0));
}

TEST_CASE("corpus loading rejects duplicates and missing files") {
  const auto dir = testing::data_dir() / "corpus";
  CHECK_THROWS_AS(load_corpus(dir, {"gre", "gre"}), Error);
  try {
    load_corpus(dir, {"nosuch"});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kLoad);
  }
}

TEST_CASE("training sets exclude the held-out document") {
  const auto corpus = load_corpus(testing::data_dir() / "corpus", {"gre", "ipv6", "tcp"});
  const auto set = build_training_set(corpus, 1, LoocvConfig{});
  CHECK(set.protocols == std::vector<std::string>{"gre", "tcp"});
}

#include "doctest.h"
#include "helpers.hpp"
#include "protogram/annotation.hpp"
#include "protogram/error.hpp"

using namespace protogram;

TEST_CASE("markup compiles to plain text with aligned offsets") {
  const char* src =
      "@type Source Port|16\n"
      "@type Checksum|16|ci\n"
      "1.  Header\n"
      "\n"
      "   {{The [[checksum|Checksum]] covers the header.|Checksum|Checksum}}\n"
      "   The Source Port is set by the sender.  CHECKSUM again.\n";
  const auto c = compile_annotated_source(src, "toy");
  CHECK(c.text.find("[[") == std::string::npos);
  CHECK(c.text.find("{{") == std::string::npos);
  CHECK(c.text.find("@type") == std::string::npos);
  const auto doc = normalize_rfc_text(c.text, "toy");
  const auto& a = c.annotations;
  REQUIRE(a.gold_types.size() == 2);
  CHECK(a.gold_types[0].name == "Source Port");
  CHECK(a.gold_types[0].size_bits == std::optional<int>(16));
  REQUIRE(a.gold_mentions.size() == 3);
  CHECK(doc.slice(a.gold_mentions[0].span) == "checksum");
  CHECK(doc.slice(a.gold_mentions[1].span) == "Source Port");
  CHECK(doc.slice(a.gold_mentions[2].span) == "CHECKSUM");
  CHECK(a.gold_mentions[2].type_name == "Checksum");
  REQUIRE(a.gold_property_spans.size() == 1);
  CHECK(a.gold_property_spans[0].kind == PropertyKind::kChecksum);
  CHECK(doc.slice(a.gold_property_spans[0].spans[0]) == "The checksum covers the header.");
}

TEST_CASE("autolinking is case sensitive without ci and prefers longer names") {
  const char* src =
      "@type Port|16\n"
      "@type Source Port|16\n"
      "@type Reserved|3|also=Res\n"
      "@type Type|4|noauto\n"
      "1.  Header\n"
      "\n"
      "   The Source Port and port fields.  Res is zero.  Type and Reserved.\n";
  const auto c = compile_annotated_source(src, "toy");
  const auto doc = normalize_rfc_text(c.text, "toy");
  std::vector<std::string> seen;
  for (const auto& m : c.annotations.gold_mentions) seen.emplace_back(doc.slice(m.span));
  CHECK(seen == std::vector<std::string>{"Source Port", "Res", "Reserved"});
}

TEST_CASE("markup errors carry the line number") {
  try {
    compile_annotated_source("1.  Title\n\n   ok\n   {{broken|Nope|X}}\n", "toy");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kSyntax);
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  CHECK_THROWS_AS(compile_annotated_source("@type A|1|bogus\nx\n", "toy"), Error);
  CHECK_THROWS_AS(compile_annotated_source("text [[A]]\n", "toy"), Error);
  CHECK_THROWS_AS(compile_annotated_source("text [[A\n", "toy"), Error);
}

TEST_CASE("annotation JSONL round-trips") {
  const auto c = compile_annotated_source(
      "@type Length|16\n1.  Header\n\n   {{The Length of it.|PayloadLength|Length}}\n", "toy");
  const auto text = write_annotations(c.annotations);
  const auto back = parse_annotations(text);
  CHECK(back.protocol_id == "toy");
  CHECK(back.gold_types == c.annotations.gold_types);
  REQUIRE(back.gold_mentions.size() == c.annotations.gold_mentions.size());
  for (std::size_t i = 0; i < back.gold_mentions.size(); ++i) {
    CHECK(back.gold_mentions[i].span == c.annotations.gold_mentions[i].span);
    CHECK(back.gold_mentions[i].type_name == c.annotations.gold_mentions[i].type_name);
  }
  REQUIRE(back.gold_property_spans.size() == 1);
  CHECK(back.gold_property_spans[0].kind == PropertyKind::kPayloadLength);
  CHECK(back.gold_property_spans[0].argument == "Length");
  CHECK(back.gold_property_spans[0].spans == c.annotations.gold_property_spans[0].spans);
}

TEST_CASE("malformed JSONL is rejected") {
  CHECK_THROWS_AS(parse_annotations("{not json}\n"), Error);
  CHECK_THROWS_AS(parse_annotations(R"({"doc":"a","start":0,"end":1,"label_type":"weird","label":"x"})"), Error);
  CHECK_THROWS_AS(
      parse_annotations(R"({"doc":"a","start":0,"end":1,"label_type":"property","label":"NotAKind","group":0})"),
      Error);
}

TEST_CASE("validation rejects out-of-range spans and unknown mention types") {
  const auto doc = normalize_rfc_text("short text\n", "toy");
  AnnotationSet a;
  a.protocol_id = "toy";
  a.gold_types.push_back({"Length", 16, {}, {}, 0, {}});
  a.gold_mentions.push_back({{0, 5}, "Length"});
  CHECK_NOTHROW(validate_annotations(a, doc));
  a.gold_mentions.push_back({{5, 500}, "Length"});
  CHECK_THROWS_AS(validate_annotations(a, doc), Error);
  a.gold_mentions.back() = {{0, 5}, "Other"};
  CHECK_THROWS_AS(validate_annotations(a, doc), Error);
}

TEST_CASE("shipped corpus annotations validate against their documents") {
  for (const char* id : {"tcp", "dccp", "ip", "ipv6", "gre", "sctp"}) {
    const auto dir = testing::data_dir() / "corpus";
    const auto raw = load_rfc(dir / (std::string(id) + ".txt"), id);
    const auto ann = parse_annotations(testing::read_file(dir / (std::string(id) + ".ann.jsonl")));
    CHECK_NOTHROW(validate_annotations(ann, raw));
    CHECK(ann.gold_types.size() >= 6);
    CHECK(ann.gold_property_spans.size() >= 2);
  }
}

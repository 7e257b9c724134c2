#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "protogram/annotation.hpp"
#include "protogram/error.hpp"
#include "protogram/type_extraction.hpp"

using namespace protogram;

namespace {

std::vector<FieldType> extract(const Document& d) { return extract_entity_types(d.raw, d.sections); }

std::set<std::string> names_of(const std::vector<FieldType>& v) {
  std::set<std::string> out;
  for (const auto& t : v) out.insert(t.name);
  return out;
}

}  // namespace

TEST_CASE("field headings with sizes") {
  const auto d = testing::doc_from(
      "3.1.  Header Format\n\n"
      "   Source Port:  16 bits\n\n     The source port number.\n\n"
      "   Data Offset:  4 bits\n\n     The number of 32 bit words.\n\n"
      "   Options:  variable\n\n     Not a sized heading.\n\n"
      "   Sequence Number:  6 bytes\n\n     In bytes.\n");
  const auto t = extract(d);
  REQUIRE(t.size() == 3);
  CHECK(t[0].name == "Source Port");
  CHECK(t[0].size_bits == std::optional<int>(16));
  CHECK(t[1].size_bits == std::optional<int>(4));
  CHECK(t[2].size_bits == std::optional<int>(48));
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i].order == std::optional<int>(static_cast<int>(i)));
  CHECK(std::find(t[1].aliases.begin(), t[1].aliases.end(), "DO") != t[1].aliases.end());
}

TEST_CASE("shared size headings split into one type per name") {
  const auto d = testing::doc_from(
      "5.1.  Generic Header\n\n"
      "   Source and Destination Ports: 16 bits each\n\n     Port numbers.\n");
  CHECK(names_of(extract(d)) == std::set<std::string>{"Source Port", "Destination Port"});
}

TEST_CASE("column layout headings") {
  const auto d = testing::doc_from(
      "3.  IPv6 Header Format\n\n"
      "   Version             4-bit Internet Protocol version number.\n\n"
      "   Payload Length      16-bit unsigned integer.\n");
  const auto t = extract(d);
  REQUIRE(t.size() == 2);
  CHECK(t[0].name == "Version");
  CHECK(t[1].name == "Payload Length");
  CHECK(t[1].size_bits == std::optional<int>(16));
}

TEST_CASE("numbered headings with parenthetical sizes") {
  const auto d = testing::doc_from(
      "2.4.  Protocol Type (2 octets)\n\n   Body.\n\n"
      "2.3.1.  Version Number (bits 13-15)\n\n   Body.\n\n"
      "2.2.  Checksum Present (bit 0)\n\n   Body.\n\n"
      "2.7.  Introduction\n\n   Body.\n");
  const auto t = extract(d);
  REQUIRE(t.size() == 3);
  CHECK(t[0].size_bits == std::optional<int>(16));
  CHECK(t[1].size_bits == std::optional<int>(3));
  CHECK(t[2].size_bits == std::optional<int>(1));
}

TEST_CASE("repeated definitions are merged") {
  const auto d = testing::doc_from(
      "1.  Header Format\n\n   Checksum: 16 bits\n\n     A.\n\n"
      "2.  Other Header\n\n   Checksum: 16 bits\n\n     B.\n");
  const auto t = extract(d);
  REQUIRE(t.size() == 1);
  CHECK(t[0].extra_sections.size() == 1);
}

TEST_CASE("canonical names and acronyms") {
  std::vector<std::string> aliases;
  CHECK(canonical_field_name("  Checksum   Coverage (CsCov): ", &aliases) == "Checksum Coverage");
  CHECK(std::find(aliases.begin(), aliases.end(), "CsCov") != aliases.end());
  CHECK(std::find(aliases.begin(), aliases.end(), "CC") != aliases.end());
  CHECK(canonical_field_name("Window.") == "Window");
  CHECK(initials_acronym("Data Offset") == "DO");
  CHECK(initials_acronym("Acknowledgment Number") == "AN");
  CHECK(initials_acronym("Window").empty());
}

TEST_CASE("types file round-trips and rejects garbage") {
  std::vector<FieldType> types{{"Source Port", 16, 0, {}, 0, {}}, {"Options", std::nullopt, 1, {}, 0, {}}};
  const auto back = parse_types_file(write_types_file(types));
  REQUIRE(back.size() == 2);
  CHECK(back[0].name == "Source Port");
  CHECK(back[0].size_bits == std::optional<int>(16));
  CHECK_FALSE(back[1].size_bits);
  CHECK(back[1].order == std::optional<int>(1));
  CHECK_THROWS_AS(parse_types_file("Name\tabc\t0\n"), Error);
  CHECK_THROWS_AS(parse_types_file("Name\t0\t0\n"), Error);
  CHECK_THROWS_AS(parse_types_file("\t16\t0\n"), Error);
}

TEST_CASE("accuracy is the case-folded fraction of gold names found") {
  std::vector<FieldType> gold{{"Window", {}, {}, {}, 0, {}}, {"Checksum", {}, {}, {}, 0, {}}};
  std::vector<FieldType> pred{{"WINDOW", {}, {}, {}, 0, {}}, {"Other", {}, {}, {}, 0, {}}};
  CHECK(type_extraction_accuracy(pred, gold) == doctest::Approx(0.5));
  CHECK_THROWS_AS(type_extraction_accuracy(pred, {}), Error);
}

TEST_CASE("TCP excerpt yields its header fields") {
  const auto dir = testing::data_dir() / "corpus";
  const auto d = build_document(load_rfc(dir / "tcp.txt", "tcp"));
  const auto gold = parse_annotations(testing::read_file(dir / "tcp.ann.jsonl")).gold_types;
  const auto t = extract(d);
  CHECK(gold.size() == 10);
  CHECK(type_extraction_accuracy(t, gold) >= 0.8);
}

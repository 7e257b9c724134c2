#include "doctest.h"
#include "helpers.hpp"
#include "protogram/corpus.hpp"
#include "protogram/error.hpp"

using namespace protogram;

namespace {

const char* kSample =
    "RFC 9999           Sample Protocol                  March 2006\n"
    "\n"
    "5.  Packet Formats\n"
    "\n"
    "   The header is described below.  It has two fields.\n"
    "\n"
    "   Data Offset: 8 bits\n"
    "      The offset from the start of the header, in 32-bit words.\n"
    "\n"
    "\n"
    "\n"
    "Author                   Standards Track                  [Page 3]\n"
    "\f\n"
    "RFC 9999           Sample Protocol                  March 2006\n"
    "\n"
    "   Checksum: 16 bits\r\n"
    "      The checksum of the header.   \n";

}  // namespace

TEST_CASE("normalization drops page furniture and collapses blank runs") {
  std::vector<std::size_t> kept;
  const auto raw = normalize_rfc_text(kSample, "sample", &kept);
  CHECK(raw.lines.front() == "5.  Packet Formats");
  for (const auto& line : raw.lines) {
    CHECK(line.find("[Page") == std::string::npos);
    CHECK(line.find("RFC 9999") == std::string::npos);
    CHECK(line.find('\f') == std::string::npos);
    CHECK(line.find('\r') == std::string::npos);
    CHECK((line.empty() || line.back() != ' '));
  }
  for (std::size_t i = 1; i < raw.lines.size(); ++i) CHECK_FALSE((raw.lines[i].empty() && raw.lines[i - 1].empty()));
  CHECK(kept.size() == raw.lines.size());
  CHECK(raw.line_starts.size() == raw.lines.size());
  for (std::size_t i = 0; i < raw.lines.size(); ++i)
    CHECK(raw.text.substr(raw.line_starts[i], raw.lines[i].size()) == raw.lines[i]);
}

TEST_CASE("empty document after normalization is an error") {
  try {
    normalize_rfc_text("\n\f\nRFC 1 Title January 2000\n  \n", "empty");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kEmptyDocument);
  }
}

TEST_CASE("missing RFC file is a load error") {
  try {
    load_rfc("/nonexistent/rfc.txt", "x");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kLoad);
  }
}

TEST_CASE("DCCP excerpt keeps the Data Offset definition line verbatim") {
  const auto raw = load_rfc(testing::data_dir() / "corpus" / "dccp.txt", "dccp");
  bool found = false;
  for (const auto& line : raw.lines) found = found || line == "   Data Offset: 8 bits";
  CHECK(found);
}

TEST_CASE("sections follow numbered and field headings") {
  const auto doc = testing::doc_from(kSample);
  REQUIRE(doc.sections.size() == 3);
  CHECK(doc.sections[0].title == "Packet Formats");
  CHECK(doc.sections[0].level == 1);
  CHECK(doc.sections[1].title == "Data Offset: 8 bits");
  CHECK(doc.sections[1].is_field_heading);
  CHECK(doc.sections[1].parent == std::optional<std::size_t>(0));
  CHECK(doc.sections[2].title == "Checksum: 16 bits");
  for (const auto& s : doc.sections) CHECK(s.sentences.front().is_title);
}

TEST_CASE("tokenizer keeps hyphenated words and splits punctuation") {
  const auto toks = tokenize("in 32-bit words (X=1).", 10);
  std::vector<std::string> words;
  for (const auto& t : toks) words.push_back(t.text);
  CHECK(words == std::vector<std::string>{"in", "32-bit", "words", "(", "X", "=", "1", ")", "."});
  CHECK(toks[1].span.start == 13);
  CHECK(toks[1].span.end == 19);
}

TEST_CASE("sentences split at terminal punctuation and paragraph breaks") {
  const auto s = split_sentences("First one.  Second e.g. still second.\n\nThird", 0);
  REQUIRE(s.size() == 3);
  CHECK(s[2].tokens.front().text == "Third");
}

TEST_CASE("chunks never start or end on a stopword or cross punctuation") {
  const auto doc = testing::doc_from(kSample);
  REQUIRE_FALSE(doc.chunks.empty());
  for (const auto& c : doc.chunks) {
    REQUIRE_FALSE(c.tokens.empty());
    CHECK(c.tokens.size() <= 6);
    if (c.is_anaphor) continue;
    CHECK_FALSE(is_stopword(c.tokens.front()));
    CHECK_FALSE(is_stopword(c.tokens.back()));
    const auto surface = doc.raw.slice(c.span);
    for (char ch : surface) CHECK_FALSE((ch == ',' || ch == '.' || ch == '(' || ch == ')'));
  }
}

TEST_CASE("anaphora become chunks of their own") {
  const auto doc = testing::doc_from("1.  Title\n\n   This field is set.  It is zero.\n");
  int anaphors = 0;
  for (const auto& c : doc.chunks)
    if (c.is_anaphor) {
      ++anaphors;
      const auto s = doc.raw.slice(c.span);
      CHECK((s == "This field" || s == "It"));
    }
  CHECK(anaphors == 2);
}

TEST_CASE("chunk spans are unique and index the normalized text") {
  const auto doc = testing::doc_from(kSample);
  for (std::size_t i = 1; i < doc.chunks.size(); ++i) CHECK(doc.chunks[i - 1].span != doc.chunks[i].span);
  for (const auto& c : doc.chunks) CHECK(c.span.end <= doc.raw.text.size());
}

#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace protogram {

// Half-open byte range [start, end) into RawDocument::text.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool contains(const CharSpan& other) const {
    return start <= other.start && other.end <= end;
  }
  bool overlaps(const CharSpan& other) const {
    return start < other.end && other.start < end;
  }
  auto operator<=>(const CharSpan&) const = default;
};

struct RawDocument {
  std::string protocol_id;
  std::vector<std::string> lines;
  // lines joined with '\n'; every CharSpan in the pipeline indexes this.
  std::string text;
  std::vector<std::size_t> line_starts;

  std::string_view slice(CharSpan span) const {
    return std::string_view(text).substr(span.start, span.length());
  }
};

struct Token {
  std::string text;
  CharSpan span;
  bool is_punct = false;
};

struct Sentence {
  std::vector<Token> tokens;
  CharSpan span;
  bool is_title = false;
};

struct Section {
  std::string title;
  std::vector<Token> title_tokens;
  // When the section has a title, sentences[0] is the title sentence.
  std::vector<Sentence> sentences;
  int level = 0;
  CharSpan span;
  std::optional<std::size_t> parent;
  bool is_field_heading = false;
};

struct Chunk {
  std::vector<std::string> tokens;
  std::size_t section_index = 0;
  std::size_t sentence_index = 0;  // within the section
  std::size_t first_token = 0;     // within the sentence
  CharSpan span;
  bool is_anaphor = false;

  std::string joined() const;
};

// A raw document together with its segmentation and chunking.
struct Document {
  RawDocument raw;
  std::vector<Section> sections;
  std::vector<Chunk> chunks;

  const Section& section_of(const Chunk& c) const { return sections.at(c.section_index); }
  const Sentence& sentence_of(const Chunk& c) const {
    return sections.at(c.section_index).sentences.at(c.sentence_index);
  }
};

RawDocument load_rfc(const std::filesystem::path& path, std::string protocol_id);

// Normalization used by load_rfc. kept_lines (optional) receives, for each
// output line, the index of the input line it came from.
RawDocument normalize_rfc_text(std::string_view text, std::string protocol_id,
                               std::vector<std::size_t>* kept_lines = nullptr);

std::vector<Section> segment_sections(const RawDocument& doc);
std::vector<Chunk> chunk_document(const RawDocument& doc, const std::vector<Section>& sections);

Document build_document(RawDocument raw);
Document ingest(const std::filesystem::path& path, std::string protocol_id);

std::vector<Token> tokenize(std::string_view text, std::size_t base_offset);
std::vector<Sentence> split_sentences(std::string_view text, std::size_t base_offset);

bool is_stopword(std::string_view word);
bool is_page_break_line(std::string_view line);

// Tokens around a chunk within its sentence, punctuation excluded.
std::vector<std::string> chunk_context(const Document& doc, const Chunk& chunk,
                                       std::size_t window = 5);

// Line-delimited JSON debug dump (one record per section / chunk).
std::string dump_document(const Document& doc);

}  // namespace protogram

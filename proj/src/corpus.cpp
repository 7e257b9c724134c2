#include "protogram/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "json.hpp"
#include "protogram/error.hpp"
#include "protogram/text.hpp"

namespace protogram {

namespace {

constexpr std::array<std::string_view, 50> kStopwords = {
    "a",     "an",   "the",   "of",    "to",   "in",    "is",   "are",   "be",    "been",
    "and",   "or",   "for",   "on",    "at",   "by",    "with", "as",    "this",  "that",
    "it",    "its",  "from",  "if",    "not",  "no",    "into", "which", "than",  "then",
    "these", "those", "has",  "have",  "was",  "were",  "will", "must",  "may",   "should",
    "can",   "all",  "any",   "each",  "such", "when",  "there", "their", "they", "but"};

constexpr std::array<std::string_view, 5> kAbbreviations = {"e.g.", "i.e.", "etc.", "Fig.",
                                                            "Sec."};

bool is_word_byte(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || c == '_' || u >= 0x80;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    lines.emplace_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (!text.empty() && text.back() == '\n') lines.pop_back();
  return lines;
}

bool is_blank(std::string_view line) { return text::trim(line).empty(); }

const std::regex& numeric_heading_re() {
  static const std::regex re(R"(^(\d+(?:\.\d+)*)\.?\s+([A-Z].*)$)");
  return re;
}

const std::regex& field_heading_re() {
  static const std::regex re(
      R"(^( {0,3})([A-Z][A-Za-z0-9/()',\- ]*?)\s*:\s+(\d+)(?:\s+or\s+\d+)?\s*(bits?|bytes?|octets?)\b.*$)");
  return re;
}

const std::regex& column_heading_re() {
  static const std::regex re(R"(^( {1,3})([A-Z][A-Za-z0-9 ]*?[A-Za-z0-9])\s{2,}(\d+)-bit\b.*$)");
  return re;
}

enum class HeadingStyle { kNone, kNumeric, kField, kColumn };

struct HeadingMatch {
  HeadingStyle style = HeadingStyle::kNone;
  int numeric_level = 0;
  std::size_t title_begin = 0;  // column within the line
  std::size_t title_end = 0;
};

std::size_t next_nonblank(const std::vector<std::string>& lines, std::size_t i) {
  for (std::size_t j = i + 1; j < lines.size(); ++j)
    if (!is_blank(lines[j])) return j;
  return lines.size();
}

HeadingMatch classify_line(const std::vector<std::string>& lines, std::size_t i) {
  const std::string& line = lines[i];
  HeadingMatch m;
  if (line.empty()) return m;
  std::smatch sm;
  if (line[0] != ' ' && std::regex_match(line, sm, numeric_heading_re())) {
    std::string title(text::trim(sm[2].str()));
    bool toc_like = title.find("....") != std::string::npos;
    if (!toc_like && title.size() <= 72 && title.back() != '.' && title.back() != ',') {
      m.style = HeadingStyle::kNumeric;
      m.numeric_level =
          1 + static_cast<int>(std::count(sm[1].first, sm[1].second, '.'));
      m.title_begin = static_cast<std::size_t>(sm.position(2));
      m.title_end = m.title_begin + title.size();
      return m;
    }
  }
  if (std::regex_match(line, sm, field_heading_re())) {
    const std::size_t indent = sm[1].length();
    const auto name_words = text::split_words(sm[2].str());
    const std::size_t nxt = next_nonblank(lines, i);
    const bool indented_body =
        nxt < lines.size() && text::leading_spaces(lines[nxt]) > indent;
    if (!name_words.empty() && name_words.size() <= 8 && indented_body) {
      m.style = HeadingStyle::kField;
      m.title_begin = indent;
      m.title_end = text::trim(line).size() + indent;
      return m;
    }
  }
  if (std::regex_match(line, sm, column_heading_re())) {
    const std::size_t indent = sm[1].length();
    m.style = HeadingStyle::kColumn;
    m.title_begin = indent;
    m.title_end = text::trim(line).size() + indent;
    return m;
  }
  return m;
}

void push_sentence(std::vector<Sentence>& out, std::string_view text, std::size_t base,
                   std::size_t begin, std::size_t end) {
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  if (begin >= end) return;
  Sentence s;
  s.span = {base + begin, base + end};
  s.tokens = tokenize(text.substr(begin, end - begin), base + begin);
  if (!s.tokens.empty()) out.push_back(std::move(s));
}

bool ends_with_abbreviation(std::string_view text, std::size_t dot) {
  std::size_t begin = dot;
  while (begin > 0 && !std::isspace(static_cast<unsigned char>(text[begin - 1]))) --begin;
  std::string_view word = text.substr(begin, dot + 1 - begin);
  while (!word.empty() && word.front() == '(') word.remove_prefix(1);
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

}  // namespace

std::string Chunk::joined() const {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

bool is_stopword(std::string_view word) {
  const std::string lower = text::to_lower(word);
  return std::find(kStopwords.begin(), kStopwords.end(), lower) != kStopwords.end();
}

bool is_page_break_line(std::string_view line) {
  static const std::regex footer(R"(.*\[Page \d+\]\s*$)");
  static const std::regex header(
      R"(^RFC \d+\s.*\b(January|February|March|April|May|June|July|August|September|October|November|December)\s+\d{4}\s*$)");
  const std::string s(line);
  return std::regex_match(s, footer) || std::regex_match(s, header);
}

RawDocument normalize_rfc_text(std::string_view input, std::string protocol_id,
                               std::vector<std::size_t>* kept_lines) {
  RawDocument doc;
  doc.protocol_id = std::move(protocol_id);
  std::vector<std::size_t> kept;
  const auto lines = split_lines(input);
  bool previous_blank = true;  // drops leading blank lines
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line;
    line.reserve(lines[i].size());
    for (char c : lines[i])
      if (c != '\f' && c != '\r') line.push_back(c);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (is_page_break_line(line)) continue;
    const bool blank = line.empty();
    if (blank && previous_blank) continue;
    previous_blank = blank;
    doc.lines.push_back(std::move(line));
    kept.push_back(i);
  }
  while (!doc.lines.empty() && doc.lines.back().empty()) {
    doc.lines.pop_back();
    kept.pop_back();
  }
  if (doc.lines.empty())
    throw Error(ErrorKind::kEmptyDocument,
                "document '" + doc.protocol_id + "' is empty after normalization");
  for (const auto& line : doc.lines) {
    doc.line_starts.push_back(doc.text.size());
    doc.text += line;
    doc.text.push_back('\n');
  }
  doc.text.pop_back();
  if (kept_lines) *kept_lines = std::move(kept);
  return doc;
}

RawDocument load_rfc(const std::filesystem::path& path, std::string protocol_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kLoad, "cannot read RFC text file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return normalize_rfc_text(buffer.str(), std::move(protocol_id));
}

std::vector<Token> tokenize(std::string_view text, std::size_t base_offset) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (is_word_byte(c)) {
      std::size_t j = i + 1;
      while (j < text.size()) {
        if (is_word_byte(text[j])) {
          ++j;
        } else if (text[j] == '-' && j + 1 < text.size() && is_word_byte(text[j + 1])) {
          j += 2;
        } else {
          break;
        }
      }
      tokens.push_back({std::string(text.substr(i, j - i)), {base_offset + i, base_offset + j}, false});
      i = j;
      continue;
    }
    tokens.push_back({std::string(1, c), {base_offset + i, base_offset + i + 1}, true});
    ++i;
  }
  return tokens;
}

std::vector<Sentence> split_sentences(std::string_view text, std::size_t base_offset) {
  std::vector<Sentence> out;
  std::size_t begin = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      // Paragraph break: newline, optional spaces, newline.
      std::size_t j = i + 1;
      while (j < text.size() && text[j] == ' ') ++j;
      if (j < text.size() && text[j] == '\n') {
        push_sentence(out, text, base_offset, begin, i);
        begin = j + 1;
        i = j + 1;
        continue;
      }
    }
    if (c == '.' || c == '?' || c == '!') {
      const bool at_break =
          i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]));
      if (at_break && !(c == '.' && ends_with_abbreviation(text, i))) {
        push_sentence(out, text, base_offset, begin, i + 1);
        begin = i + 1;
      }
    }
    ++i;
  }
  push_sentence(out, text, base_offset, begin, text.size());
  return out;
}

std::vector<Section> segment_sections(const RawDocument& doc) {
  struct Heading {
    std::size_t line;
    HeadingMatch match;
  };
  std::vector<Heading> headings;
  for (std::size_t i = 0; i < doc.lines.size(); ++i) {
    auto m = classify_line(doc.lines, i);
    if (m.style != HeadingStyle::kNone) headings.push_back({i, m});
  }

  std::vector<Section> sections;
  auto body_sentences = [&](std::size_t begin, std::size_t end) {
    if (begin >= end) return std::vector<Sentence>{};
    return split_sentences(std::string_view(doc.text).substr(begin, end - begin), begin);
  };

  const std::size_t first_heading_start =
      headings.empty() ? doc.text.size() : doc.line_starts[headings.front().line];
  if (!text::trim(std::string_view(doc.text).substr(0, first_heading_start)).empty()) {
    Section root;
    root.level = 0;
    root.span = {0, first_heading_start == doc.text.size() ? first_heading_start
                                                           : first_heading_start - 1};
    root.sentences = body_sentences(root.span.start, root.span.end);
    sections.push_back(std::move(root));
  }

  int numeric_level = 0;
  for (std::size_t h = 0; h < headings.size(); ++h) {
    const auto& [line, match] = headings[h];
    const std::size_t line_start = doc.line_starts[line];
    const std::size_t line_end = line_start + doc.lines[line].size();
    const std::size_t section_end =
        h + 1 < headings.size() ? doc.line_starts[headings[h + 1].line] - 1 : doc.text.size();

    Section s;
    if (match.style == HeadingStyle::kNumeric) {
      numeric_level = match.numeric_level;
      s.level = numeric_level;
    } else {
      s.level = numeric_level + 1;
      s.is_field_heading = true;
    }
    const CharSpan title_span{line_start + match.title_begin, line_start + match.title_end};
    s.title = std::string(doc.slice(title_span));
    s.title_tokens = tokenize(s.title, title_span.start);
    s.span = {line_start, section_end};

    Sentence title_sentence;
    title_sentence.tokens = s.title_tokens;
    title_sentence.span = title_span;
    title_sentence.is_title = true;
    s.sentences.push_back(std::move(title_sentence));
    auto body = body_sentences(std::min(line_end + 1, section_end), section_end);
    s.sentences.insert(s.sentences.end(), std::make_move_iterator(body.begin()),
                       std::make_move_iterator(body.end()));

    for (std::size_t p = sections.size(); p-- > 0;) {
      if (sections[p].level < s.level) {
        s.parent = p;
        break;
      }
    }
    sections.push_back(std::move(s));
  }
  return sections;
}

std::vector<Chunk> chunk_document(const RawDocument& doc, const std::vector<Section>& sections) {
  (void)doc;
  constexpr std::size_t kMaxChunkTokens = 6;
  std::map<CharSpan, Chunk> by_span;
  for (std::size_t si = 0; si < sections.size(); ++si) {
    const auto& sentences = sections[si].sentences;
    for (std::size_t ti = 0; ti < sentences.size(); ++ti) {
      const auto& toks = sentences[ti].tokens;
      for (std::size_t i = 0; i < toks.size(); ++i) {
        if (toks[i].is_punct || is_stopword(toks[i].text)) continue;
        for (std::size_t n = 1; n <= kMaxChunkTokens && i + n <= toks.size(); ++n) {
          const Token& last = toks[i + n - 1];
          if (last.is_punct) break;
          if (is_stopword(last.text)) continue;
          Chunk c;
          c.section_index = si;
          c.sentence_index = ti;
          c.first_token = i;
          c.span = {toks[i].span.start, last.span.end};
          for (std::size_t k = i; k < i + n; ++k) c.tokens.push_back(toks[k].text);
          by_span.emplace(c.span, std::move(c));
        }
      }
      for (std::size_t i = 0; i < toks.size(); ++i) {
        const std::string& t = toks[i].text;
        std::size_t n = 0;
        if (t == "it" || t == "It") {
          n = 1;
        } else if ((t == "this" || t == "This" || t == "that" || t == "That") &&
                   i + 1 < toks.size() && toks[i + 1].text == "field") {
          n = 2;
        }
        if (n == 0) continue;
        Chunk c;
        c.section_index = si;
        c.sentence_index = ti;
        c.first_token = i;
        c.span = {toks[i].span.start, toks[i + n - 1].span.end};
        for (std::size_t k = i; k < i + n; ++k) c.tokens.push_back(toks[k].text);
        c.is_anaphor = true;
        auto [it, inserted] = by_span.emplace(c.span, c);
        if (!inserted) it->second.is_anaphor = true;
      }
    }
  }
  std::vector<Chunk> chunks;
  chunks.reserve(by_span.size());
  for (auto& [span, c] : by_span) chunks.push_back(std::move(c));
  return chunks;
}

Document build_document(RawDocument raw) {
  Document doc;
  doc.raw = std::move(raw);
  doc.sections = segment_sections(doc.raw);
  doc.chunks = chunk_document(doc.raw, doc.sections);
  return doc;
}

Document ingest(const std::filesystem::path& path, std::string protocol_id) {
  return build_document(load_rfc(path, std::move(protocol_id)));
}

std::vector<std::string> chunk_context(const Document& doc, const Chunk& chunk, std::size_t window) {
  const auto& toks = doc.sentence_of(chunk).tokens;
  std::vector<std::string> out;
  const std::size_t last = chunk.first_token + chunk.tokens.size();
  std::size_t taken = 0;
  for (std::size_t i = chunk.first_token; i-- > 0 && taken < window;) {
    if (toks[i].is_punct) continue;
    out.push_back(toks[i].text);
    ++taken;
  }
  taken = 0;
  for (std::size_t i = last; i < toks.size() && taken < window; ++i) {
    if (toks[i].is_punct) continue;
    out.push_back(toks[i].text);
    ++taken;
  }
  return out;
}

std::string dump_document(const Document& doc) {
  using nlohmann::json;
  std::string out;
  json header = {{"record", "document"},
                 {"protocol", doc.raw.protocol_id},
                 {"lines", doc.raw.lines.size()},
                 {"sections", doc.sections.size()},
                 {"chunks", doc.chunks.size()}};
  out += header.dump() + "\n";
  for (std::size_t i = 0; i < doc.sections.size(); ++i) {
    const auto& s = doc.sections[i];
    json rec = {{"record", "section"},  {"index", i},
                {"title", s.title},     {"level", s.level},
                {"start", s.span.start}, {"end", s.span.end},
                {"sentences", s.sentences.size()},
                {"field_heading", s.is_field_heading}};
    rec["parent"] = s.parent ? json(*s.parent) : json(nullptr);
    out += rec.dump() + "\n";
  }
  for (const auto& c : doc.chunks) {
    json rec = {{"record", "chunk"},         {"text", c.joined()},
                {"start", c.span.start},     {"end", c.span.end},
                {"section", c.section_index}, {"sentence", c.sentence_index},
                {"anaphor", c.is_anaphor}};
    out += rec.dump() + "\n";
  }
  return out;
}

}  // namespace protogram

#include "protogram/type_extraction.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "protogram/error.hpp"
#include "protogram/text.hpp"

namespace protogram {

namespace {

struct Candidate {
  std::string raw_name;
  std::optional<int> size_bits;
  bool shared_size = false;  // "... : 16 bits each"
};

int unit_bits(std::string_view unit) {
  return unit.rfind("bit", 0) == 0 ? 1 : 8;
}

std::optional<Candidate> parse_field_title(const std::string& title) {
  static const std::regex field_re(
      R"(^([A-Z][A-Za-z0-9/()',\- ]*?)\s*:\s+(\d+)(?:\s+or\s+\d+)?\s*(bits?|bytes?|octets?)\b(.*)$)");
  static const std::regex column_re(R"(^([A-Z][A-Za-z0-9 ]*?[A-Za-z0-9])\s{2,}(\d+)-bit\b.*$)");
  std::smatch m;
  if (std::regex_match(title, m, field_re)) {
    Candidate c;
    c.raw_name = m[1].str();
    c.size_bits = std::stoi(m[2].str()) * unit_bits(m[3].str());
    const std::string rest = text::to_lower(m[4].str());
    c.shared_size = text::trim(rest).rfind("each", 0) == 0;
    return c;
  }
  if (std::regex_match(title, m, column_re)) {
    Candidate c;
    c.raw_name = m[1].str();
    c.size_bits = std::stoi(m[2].str());
    return c;
  }
  return std::nullopt;
}

std::optional<Candidate> parse_numbered_title(const std::string& title) {
  // "Protocol Type (2 octets)", "Version Number (bits 13-15)", "Checksum Present (bit 0)"
  static const std::regex paren_re(
      R"(^(.*?)\s*\((?:(\d+)\s+(bits?|bytes?|octets?)|bits?\s+(\d+)(?:\s*-\s*(\d+))?)\)\s*$)");
  static const std::regex field_word_re(R"(^([A-Z][A-Za-z0-9 ]*?)\s+[Ff]ield$)");
  std::smatch m;
  if (std::regex_match(title, m, paren_re) && !text::trim(m[1].str()).empty()) {
    Candidate c;
    c.raw_name = m[1].str();
    if (m[2].matched) {
      c.size_bits = std::stoi(m[2].str()) * unit_bits(m[3].str());
    } else {
      const int lo = std::stoi(m[4].str());
      const int hi = m[5].matched ? std::stoi(m[5].str()) : lo;
      if (hi >= lo) c.size_bits = hi - lo + 1;
    }
    return c;
  }
  if (std::regex_match(title, m, field_word_re) && text::split_words(m[1].str()).size() <= 4) {
    Candidate c;
    c.raw_name = m[1].str();
    return c;
  }
  return std::nullopt;
}

// "Source and Destination Ports" -> {"Source Port", "Destination Port"};
// "Data 1, Data 2, and Data 3" -> three names.
std::vector<std::string> split_shared_names(const std::string& raw) {
  static const std::regex sep(R"(\s*,\s*(?:and\s+)?|\s+and\s+)");
  std::vector<std::string> parts;
  std::sregex_token_iterator it(raw.begin(), raw.end(), sep, -1), end;
  for (; it != end; ++it) {
    std::string p = text::collapse_spaces(it->str());
    if (!p.empty()) parts.push_back(p);
  }
  if (parts.size() < 2) return {raw};
  const auto last_words = text::split_words(parts.back());
  bool distributed = false;
  if (last_words.size() >= 2) {
    std::string tail;
    for (std::size_t i = 1; i < last_words.size(); ++i) tail += " " + last_words[i];
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      if (text::split_words(parts[i]).size() == 1) {
        parts[i] += tail;
        distributed = true;
      }
    }
  }
  if (distributed) {
    for (auto& p : parts)
      if (p.size() > 1 && p.back() == 's' && p[p.size() - 2] != 's') p.pop_back();
  }
  return parts;
}

bool is_header_format_section(const Section& s) {
  return text::contains_ci(s.title, "header") || text::contains_ci(s.title, "format");
}

}  // namespace

std::string initials_acronym(std::string_view name) {
  const auto words = text::split_words(name);
  if (words.size() < 2) return {};
  std::string out;
  for (const auto& w : words)
    if (std::isalnum(static_cast<unsigned char>(w[0])))
      out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(w[0]))));
  return out;
}

std::string canonical_field_name(std::string_view raw, std::vector<std::string>* aliases) {
  std::string name = text::collapse_spaces(raw);
  auto strip_trailing_punct = [](std::string& s) {
    while (!s.empty() && (s.back() == '.' || s.back() == ':' || s.back() == ';' || s.back() == ','))
      s.pop_back();
    s = text::collapse_spaces(s);
  };
  strip_trailing_punct(name);
  std::string surface = name;
  if (!name.empty() && name.back() == ')') {
    const auto open = name.rfind('(');
    if (open != std::string::npos && open > 0) {
      std::string inner = text::collapse_spaces(name.substr(open + 1, name.size() - open - 2));
      name = text::collapse_spaces(name.substr(0, open));
      strip_trailing_punct(name);
      if (aliases && !inner.empty()) aliases->push_back(inner);
    }
  }
  if (aliases) {
    if (surface != name) aliases->push_back(surface);
    const std::string acronym = initials_acronym(name);
    if (!acronym.empty() &&
        std::find(aliases->begin(), aliases->end(), acronym) == aliases->end())
      aliases->push_back(acronym);
  }
  return name;
}

std::vector<FieldType> extract_entity_types(const RawDocument& doc,
                                            const std::vector<Section>& sections) {
  static const std::regex definition_line_re(
      R"(^\s{4,}([A-Z][A-Za-z0-9 ]*?)\s*:\s+(\d+)\s*(bits?|bytes?|octets?)\b.*$)");

  std::vector<FieldType> out;
  std::map<std::string, std::size_t> index_by_key;
  auto add = [&](const Candidate& c, std::size_t section_index) {
    std::vector<std::string> raw_names =
        c.shared_size ? split_shared_names(c.raw_name) : std::vector<std::string>{c.raw_name};
    for (const auto& raw : raw_names) {
      FieldType t;
      t.name = canonical_field_name(raw, &t.aliases);
      if (t.name.empty()) continue;
      t.size_bits = c.size_bits;
      t.source_section = section_index;
      const std::string key = text::to_lower(t.name);
      if (auto it = index_by_key.find(key); it != index_by_key.end()) {
        auto& existing = out[it->second];
        if (existing.source_section != section_index &&
            std::find(existing.extra_sections.begin(), existing.extra_sections.end(),
                      section_index) == existing.extra_sections.end())
          existing.extra_sections.push_back(section_index);
        continue;
      }
      t.order = static_cast<int>(out.size());
      index_by_key.emplace(key, out.size());
      out.push_back(std::move(t));
    }
  };

  for (std::size_t si = 0; si < sections.size(); ++si) {
    const Section& s = sections[si];
    if (s.title.empty()) continue;
    // Rule 1: "Name: k bits|bytes" headings (plus the column layout "Name  k-bit").
    if (s.is_field_heading) {
      if (auto c = parse_field_title(s.title)) add(*c, si);
      continue;
    }
    // Rule 2: numbered headings naming a field, with a size in parentheses or
    // ending in "Field".
    if (auto c = parse_numbered_title(s.title)) {
      add(*c, si);
      continue;
    }
    // Rule 3: deeply indented definition-list lines inside a header-format section.
    if (is_header_format_section(s)) {
      std::size_t line = std::upper_bound(doc.line_starts.begin(), doc.line_starts.end(),
                                          s.span.start) -
                         doc.line_starts.begin();
      for (; line < doc.lines.size() && doc.line_starts[line] < s.span.end; ++line) {
        std::smatch m;
        if (std::regex_match(doc.lines[line], m, definition_line_re)) {
          Candidate c;
          c.raw_name = m[1].str();
          c.size_bits = std::stoi(m[2].str()) * unit_bits(m[3].str());
          add(c, si);
        }
      }
    }
  }
  return out;
}

double type_extraction_accuracy(const std::vector<FieldType>& predicted,
                                const std::vector<FieldType>& gold) {
  if (gold.empty())
    throw Error(ErrorKind::kUndefinedMetric, "type extraction accuracy needs a non-empty gold list");
  std::set<std::string> names;
  for (const auto& p : predicted) names.insert(text::to_lower(p.name));
  std::size_t hits = 0;
  for (const auto& g : gold) hits += names.count(text::to_lower(g.name));
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

std::string write_types_file(const std::vector<FieldType>& types) {
  std::ostringstream out;
  for (const auto& t : types) {
    out << t.name << '\t' << (t.size_bits ? std::to_string(*t.size_bits) : "-") << '\t'
        << (t.order ? std::to_string(*t.order) : "-") << '\n';
  }
  return out.str();
}

std::vector<FieldType> parse_types_file(std::string_view content) {
  std::vector<FieldType> out;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::size_t pos = 0;
    while (true) {
      auto tab = line.find('\t', pos);
      cols.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (cols.empty() || text::trim(cols[0]).empty())
      throw Error(ErrorKind::kSyntax, "types file line " + std::to_string(line_no) + ": missing name");
    FieldType t;
    t.name = canonical_field_name(cols[0], &t.aliases);
    auto parse_opt = [&](std::size_t i) -> std::optional<int> {
      if (i >= cols.size()) return std::nullopt;
      const auto v = text::trim(cols[i]);
      if (v.empty() || v == "-") return std::nullopt;
      try {
        return std::stoi(std::string(v));
      } catch (const std::exception&) {
        throw Error(ErrorKind::kSyntax,
                    "types file line " + std::to_string(line_no) + ": bad integer '" + std::string(v) + "'");
      }
    };
    t.size_bits = parse_opt(1);
    t.order = parse_opt(2);
    if (!t.order) t.order = static_cast<int>(out.size());
    if (t.size_bits && *t.size_bits < 1)
      throw Error(ErrorKind::kSyntax, "types file line " + std::to_string(line_no) + ": size must be >= 1");
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace protogram

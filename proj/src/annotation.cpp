#include "protogram/annotation.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "json.hpp"
#include "protogram/error.hpp"
#include "protogram/text.hpp"

namespace protogram {

namespace {

using nlohmann::json;

bool is_name_byte(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == '_';
}

struct RawSpan {
  std::size_t start = 0, end = 0;
};

struct PendingMention {
  RawSpan span;
  std::string type;
};

struct PendingProperty {
  RawSpan span;
  PropertyKind kind;
  std::string argument;
};

struct TypeDecl {
  FieldType type;
  bool autolink = true;
  bool fold_case = false;
  std::vector<std::string> also;  // extra surface forms linked to this type
};

class MarkupCompiler {
 public:
  explicit MarkupCompiler(std::string_view src) : src_(src) {}

  void run() {
    std::size_t i = 0;
    while (i < src_.size()) {
      const bool line_start = i == 0 || src_[i - 1] == '\n';
      if (line_start && src_.substr(i).starts_with("@type ")) {
        std::size_t eol = src_.find('\n', i);
        if (eol == std::string_view::npos) eol = src_.size();
        declare(src_.substr(i + 6, eol - i - 6));
        i = eol + 1;
        continue;
      }
      i = emit_until(i, src_.size(), false);
    }
  }

  std::string out;
  std::vector<TypeDecl> types;
  std::vector<PendingMention> mentions;
  std::vector<PendingProperty> properties;

 private:
  [[noreturn]] void fail(std::size_t at, const std::string& msg) const {
    const auto line = 1 + std::count(src_.begin(), src_.begin() + static_cast<std::ptrdiff_t>(at), '\n');
    throw Error(ErrorKind::kSyntax, "annotated source line " + std::to_string(line) + ": " + msg);
  }

  void declare(std::string_view spec) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : spec) {
      if (c == '|') {
        parts.emplace_back(text::trim(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    parts.emplace_back(text::trim(cur));
    TypeDecl d;
    d.type.name = parts.at(0);
    d.type.order = static_cast<int>(types.size());
    if (parts.size() > 1 && parts[1] != "-") d.type.size_bits = std::stoi(parts[1]);
    for (std::size_t k = 2; k < parts.size(); ++k) {
      if (parts[k] == "noauto") d.autolink = false;
      else if (parts[k] == "ci") d.fold_case = true;
      else if (parts[k].starts_with("also=")) d.also.push_back(parts[k].substr(5));
      else fail(0, "unknown @type flag '" + parts[k] + "'");
    }
    types.push_back(std::move(d));
  }

  // Copies source [i, stop) to out, expanding markup. Returns the position after stop.
  std::size_t emit_until(std::size_t i, std::size_t stop, bool inside_property) {
    while (i < stop) {
      if (src_.compare(i, 2, "[[") == 0) {
        const std::size_t close = src_.find("]]", i);
        if (close == std::string_view::npos || close >= stop) fail(i, "unterminated [[");
        const std::string_view inner = src_.substr(i + 2, close - i - 2);
        const auto bar = inner.find('|');
        const std::string_view surface = inner.substr(0, bar);
        const std::string type(bar == std::string_view::npos ? inner : inner.substr(bar + 1));
        const std::size_t start = out.size();
        out.append(surface);
        mentions.push_back({{start, out.size()}, type});
        i = close + 2;
        continue;
      }
      if (src_.compare(i, 2, "{{") == 0) {
        if (inside_property) fail(i, "nested {{");
        const std::size_t close = src_.find("}}", i);
        if (close == std::string_view::npos || close >= stop) fail(i, "unterminated {{");
        const std::string_view inner = src_.substr(i + 2, close - i - 2);
        const auto bar2 = inner.rfind('|');
        const auto bar1 = bar2 == std::string_view::npos ? bar2 : inner.rfind('|', bar2 - 1);
        if (bar1 == std::string_view::npos) fail(i, "property markup needs {{text|Kind|Argument}}");
        const auto kind = parse_property_kind(text::trim(inner.substr(bar1 + 1, bar2 - bar1 - 1)));
        if (!kind) fail(i, "unknown property kind");
        const std::size_t start = out.size();
        emit_until(i + 2, i + 2 + bar1, true);
        properties.push_back({{start, out.size()}, *kind, std::string(text::trim(inner.substr(bar2 + 1)))});
        i = close + 2;
        continue;
      }
      out.push_back(src_[i]);
      ++i;
    }
    return i;
  }

  std::string_view src_;
};

void autolink(MarkupCompiler& c) {
  struct Surface {
    std::string text;
    const TypeDecl* decl;
  };
  std::vector<Surface> order;
  for (const auto& t : c.types) {
    if (!t.autolink) continue;
    order.push_back({t.type.name, &t});
    for (const auto& a : t.also) order.push_back({a, &t});
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const Surface& a, const Surface& b) { return a.text.size() > b.text.size(); });
  std::vector<RawSpan> taken;
  for (const auto& m : c.mentions) taken.push_back(m.span);
  const std::string& s = c.out;
  const std::string folded = text::to_lower(s);
  for (const auto& surface : order) {
    const bool fold = surface.decl->fold_case;
    const std::string& hay = fold ? folded : s;
    const std::string needle = fold ? text::to_lower(surface.text) : surface.text;
    for (std::size_t pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
      const std::size_t end = pos + needle.size();
      if (pos > 0 && is_name_byte(s[pos - 1])) continue;
      if (end < s.size() && is_name_byte(s[end])) continue;
      const bool clash = std::any_of(taken.begin(), taken.end(), [&](const RawSpan& r) {
        return pos < r.end && r.start < end;
      });
      if (clash) continue;
      taken.push_back({pos, end});
      c.mentions.push_back({{pos, end}, surface.decl->type.name});
    }
  }
}

// Maps raw-text offsets to normalized-text offsets through the kept-line table.
class OffsetMap {
 public:
  OffsetMap(const std::string& raw, const RawDocument& doc, const std::vector<std::size_t>& kept)
      : doc_(doc) {
    raw_starts_.push_back(0);
    for (std::size_t i = 0; i < raw.size(); ++i)
      if (raw[i] == '\n') raw_starts_.push_back(i + 1);
    for (std::size_t k = 0; k < kept.size(); ++k) line_to_norm_[kept[k]] = k;
  }

  std::optional<std::size_t> map(std::size_t raw_offset, bool is_end) const {
    // An end offset belongs to the line of its last character.
    const std::size_t probe = is_end && raw_offset > 0 ? raw_offset - 1 : raw_offset;
    const auto it = std::upper_bound(raw_starts_.begin(), raw_starts_.end(), probe);
    const std::size_t line = static_cast<std::size_t>(it - raw_starts_.begin()) - 1;
    const auto norm = line_to_norm_.find(line);
    if (norm == line_to_norm_.end()) return std::nullopt;
    const std::size_t col = raw_offset - raw_starts_[line];
    const std::size_t len = doc_.lines[norm->second].size();
    if (col > len) return std::nullopt;
    return doc_.line_starts[norm->second] + col;
  }

  std::optional<CharSpan> map(RawSpan s) const {
    const auto a = map(s.start, false);
    const auto b = map(s.end, true);
    if (!a || !b || *a >= *b) return std::nullopt;
    return CharSpan{*a, *b};
  }

 private:
  const RawDocument& doc_;
  std::vector<std::size_t> raw_starts_;
  std::map<std::size_t, std::size_t> line_to_norm_;
};

json span_record(const std::string& doc, CharSpan span, const char* label_type,
                 const std::string& label) {
  return json{{"doc", doc}, {"start", span.start}, {"end", span.end},
              {"label_type", label_type}, {"label", label}};
}

}  // namespace

AnnotationSet parse_annotations(std::string_view jsonl) {
  AnnotationSet set;
  std::map<long, std::size_t> group_index;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto where = "annotation line " + std::to_string(line_no) + ": ";
    json r;
    try {
      r = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::kSyntax, where + e.what());
    }
    try {
      const std::string doc = r.at("doc").get<std::string>();
      if (set.protocol_id.empty()) set.protocol_id = doc;
      if (doc != set.protocol_id)
        throw Error(ErrorKind::kSyntax, where + "records for more than one document");
      const CharSpan span{r.at("start").get<std::size_t>(), r.at("end").get<std::size_t>()};
      const std::string type = r.at("label_type").get<std::string>();
      const std::string label = r.at("label").get<std::string>();
      if (type == "type") {
        FieldType t;
        t.name = label;
        if (r.contains("size_bits") && !r["size_bits"].is_null()) t.size_bits = r["size_bits"].get<int>();
        t.order = static_cast<int>(set.gold_types.size());
        set.gold_types.push_back(std::move(t));
      } else if (type == "mention") {
        set.gold_mentions.push_back({span, label});
      } else if (type == "property") {
        const auto kind = parse_property_kind(label);
        if (!kind) throw Error(ErrorKind::kSyntax, where + "unknown property kind '" + label + "'");
        const long group = r.value("group", static_cast<long>(set.gold_property_spans.size()) + 1000000);
        auto it = group_index.find(group);
        if (it == group_index.end()) {
          it = group_index.emplace(group, set.gold_property_spans.size()).first;
          set.gold_property_spans.push_back({{}, *kind, r.value("argument", std::string())});
        }
        set.gold_property_spans[it->second].spans.push_back(span);
      } else {
        throw Error(ErrorKind::kSyntax, where + "unknown label_type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kSyntax, where + e.what());
    }
  }
  return set;
}

std::string write_annotations(const AnnotationSet& a) {
  std::string out;
  for (const auto& t : a.gold_types) {
    json r = span_record(a.protocol_id, {0, 0}, "type", t.name);
    r["size_bits"] = t.size_bits ? json(*t.size_bits) : json(nullptr);
    out += r.dump() + "\n";
  }
  auto mentions = a.gold_mentions;
  std::sort(mentions.begin(), mentions.end(),
            [](const GoldMention& x, const GoldMention& y) { return x.span < y.span; });
  for (const auto& m : mentions) out += span_record(a.protocol_id, m.span, "mention", m.type_name).dump() + "\n";
  for (std::size_t g = 0; g < a.gold_property_spans.size(); ++g) {
    const auto& p = a.gold_property_spans[g];
    for (const auto& s : p.spans) {
      json r = span_record(a.protocol_id, s, "property", std::string(to_string(p.kind)));
      r["argument"] = p.argument;
      r["group"] = g;
      out += r.dump() + "\n";
    }
  }
  return out;
}

void validate_annotations(const AnnotationSet& a, const RawDocument& doc) {
  auto check_span = [&](CharSpan s, const std::string& what) {
    if (s.start >= s.end || s.end > doc.text.size())
      throw Error(ErrorKind::kLoad, "annotation " + what + " span [" + std::to_string(s.start) + "," +
                                        std::to_string(s.end) + ") lies outside document '" +
                                        doc.protocol_id + "'");
  };
  auto known = [&](const std::string& name) {
    return std::any_of(a.gold_types.begin(), a.gold_types.end(),
                       [&](const FieldType& t) { return text::equals_ci(t.name, name); });
  };
  for (const auto& m : a.gold_mentions) {
    check_span(m.span, "mention '" + m.type_name + "'");
    if (!known(m.type_name))
      throw Error(ErrorKind::kLoad, "mention type '" + m.type_name + "' is not a gold type");
  }
  for (const auto& p : a.gold_property_spans) {
    for (const auto& s : p.spans) check_span(s, "property");
    if (!known(p.argument))
      throw Error(ErrorKind::kLoad, "property argument '" + p.argument + "' is not a gold type");
  }
}

CompiledSource compile_annotated_source(std::string_view source, std::string protocol_id) {
  MarkupCompiler c(source);
  c.run();
  autolink(c);

  std::vector<std::size_t> kept;
  const RawDocument doc = normalize_rfc_text(c.out, protocol_id, &kept);
  const OffsetMap map(c.out, doc, kept);

  CompiledSource result;
  result.text = c.out;
  auto& a = result.annotations;
  a.protocol_id = std::move(protocol_id);
  for (const auto& t : c.types) a.gold_types.push_back(t.type);
  for (const auto& m : c.mentions) {
    const auto span = map.map(m.span);
    if (!span) continue;
    const auto it = std::find_if(a.gold_types.begin(), a.gold_types.end(),
                                 [&](const FieldType& t) { return text::equals_ci(t.name, m.type); });
    if (it == a.gold_types.end())
      throw Error(ErrorKind::kSyntax, "mention of undeclared type '" + m.type + "'");
    a.gold_mentions.push_back({*span, it->name});
  }
  std::sort(a.gold_mentions.begin(), a.gold_mentions.end(),
            [](const GoldMention& x, const GoldMention& y) { return x.span < y.span; });
  for (const auto& p : c.properties) {
    const auto span = map.map(p.span);
    if (!span) continue;
    a.gold_property_spans.push_back({{*span}, p.kind, p.argument});
  }
  validate_annotations(a, doc);
  return result;
}

}  // namespace protogram

#include "protogram/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "json.hpp"
#include "protogram/error.hpp"
#include "protogram/text.hpp"

namespace protogram {

namespace {

using nlohmann::json;

struct Ranked {
  PropertyTuple tuple;
  int field_order = 0;
};

// Higher score first; on ties the kind priority, then header position.
bool stronger(const Ranked& a, const Ranked& b) {
  if (a.tuple.score != b.tuple.score) return a.tuple.score > b.tuple.score;
  if (a.tuple.kind != b.tuple.kind) return priority_rank(a.tuple.kind) < priority_rank(b.tuple.kind);
  return a.field_order < b.field_order;
}

bool conflicts_on_field(const std::vector<Ranked>& kept, const PropertyTuple& t) {
  return std::any_of(kept.begin(), kept.end(), [&](const Ranked& k) {
    return k.tuple.field == t.field && mutually_exclusive(k.tuple.kind, t.kind);
  });
}

std::vector<GrammarField> layout(const std::vector<FieldType>& types) {
  std::vector<GrammarField> fields;
  for (std::size_t i = 0; i < types.size(); ++i) {
    const auto& t = types[i];
    if (t.size_bits && *t.size_bits < 1)
      throw Error(ErrorKind::kLayout, "field '" + t.name + "' has non-positive size");
    fields.push_back({t.name, t.size_bits, std::nullopt, t.order ? *t.order : static_cast<int>(i)});
  }
  std::stable_sort(fields.begin(), fields.end(),
                   [](const GrammarField& a, const GrammarField& b) { return a.order < b.order; });
  for (std::size_t i = 1; i < fields.size(); ++i) {
    if (fields[i].order == fields[i - 1].order)
      throw Error(ErrorKind::kLayout, "fields '" + fields[i - 1].name + "' and '" + fields[i].name +
                                          "' claim the same header position");
  }
  std::set<std::string> seen;
  for (const auto& f : fields)
    if (!seen.insert(text::to_lower(f.name)).second)
      throw Error(ErrorKind::kLayout, "field '" + f.name + "' is defined twice");
  int offset = 0;
  for (auto& f : fields) {
    if (!f.size_bits) continue;
    f.offset_bits = offset;
    offset += *f.size_bits;
  }
  return fields;
}

int header_bits_of(const std::vector<GrammarField>& fields) {
  int sum = 0;
  for (const auto& f : fields)
    if (f.size_bits) sum += *f.size_bits;
  return sum;
}

std::optional<std::string> guess_field(PropertyKind kind, const std::vector<GrammarField>& fields,
                                       const std::vector<Ranked>& kept) {
  auto usable = [&](const GrammarField& f) {
    return f.size_bits && !conflicts_on_field(kept, PropertyTuple{kind, f.name, 0.0, {}, {}});
  };
  auto lower = [](const GrammarField& f) { return text::to_lower(f.name); };
  std::vector<const GrammarField*> named;
  switch (kind) {
    case PropertyKind::kChecksum: {
      for (const auto& f : fields)
        if (usable(f) && lower(f) == "checksum") return f.name;
      for (const auto& f : fields)
        if (usable(f) && lower(f).find("checksum") != std::string::npos && *f.size_bits == 16) return f.name;
      for (const auto& f : fields)
        if (usable(f) && lower(f).find("checksum") != std::string::npos) return f.name;
      for (auto it = fields.rbegin(); it != fields.rend(); ++it)
        if (usable(*it) && *it->size_bits == 16) return it->name;
      return std::nullopt;
    }
    case PropertyKind::kPacketType: {
      for (const auto& f : fields)
        if (usable(f) && lower(f).find("type") != std::string::npos) return f.name;
      const GrammarField* best = nullptr;
      for (const auto& f : fields) {
        if (!usable(f) || (*f.size_bits != 4 && *f.size_bits != 8)) continue;
        if (!f.offset_bits || *f.offset_bits + *f.size_bits > 32) continue;
        if (!best || *f.size_bits < *best->size_bits) best = &f;
      }
      if (best) return best->name;
      return std::nullopt;
    }
    case PropertyKind::kHeaderLength: {
      for (const auto& f : fields) {
        const auto n = lower(f);
        if (usable(f) && *f.size_bits <= 8 &&
            (n.find("offset") != std::string::npos || n.find("length") != std::string::npos))
          return f.name;
      }
      return std::nullopt;
    }
    default:
      return std::nullopt;
  }
}

[[noreturn]] void bad(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

std::size_t line_of_byte(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

std::string_view to_string(Provenance p) { return p == Provenance::kExtracted ? "extracted" : "guessed"; }

const GrammarField* ProtocolGrammar::field(std::string_view name) const {
  for (const auto& f : fields)
    if (text::equals_ci(f.name, name)) return &f;
  return nullptr;
}

std::vector<PropertyKind> ProtocolGrammar::kinds_of(std::string_view name) const {
  std::vector<PropertyKind> out;
  for (const auto& p : properties)
    if (text::equals_ci(p.field, name)) out.push_back(p.kind);
  return out;
}

bool ProtocolGrammar::has_kind(std::string_view name, PropertyKind kind) const {
  const auto k = kinds_of(name);
  return std::find(k.begin(), k.end(), kind) != k.end();
}

const GrammarField* ProtocolGrammar::field_with(PropertyKind kind) const {
  for (const auto& p : properties)
    if (p.kind == kind) return field(p.field);
  return nullptr;
}

ProtocolGrammar postprocess(std::string protocol, const std::vector<PropertyTuple>& tuples,
                            const std::vector<FieldType>& types, const PostprocessOptions& options) {
  ProtocolGrammar g;
  g.protocol = std::move(protocol);
  g.fields = layout(types);
  g.header_bits = header_bits_of(g.fields);

  std::map<std::string, int> order_of;
  std::map<std::string, std::string> canonical;
  for (const auto& f : g.fields) {
    order_of[text::to_lower(f.name)] = f.order;
    canonical[text::to_lower(f.name)] = f.name;
  }

  // (1) one tuple per (kind, field), best score wins; unknown fields are dropped.
  std::map<std::pair<PropertyKind, std::string>, Ranked> best;
  for (const auto& t : tuples) {
    const auto key_field = text::to_lower(t.field);
    if (!canonical.count(key_field)) continue;
    Ranked r{t, order_of[key_field]};
    r.tuple.field = canonical[key_field];
    auto [it, inserted] = best.emplace(std::make_pair(t.kind, key_field), r);
    if (!inserted && t.score > it->second.tuple.score) it->second = r;
  }
  std::vector<Ranked> ranked;
  for (auto& [key, r] : best) ranked.push_back(std::move(r));
  std::stable_sort(ranked.begin(), ranked.end(), stronger);

  // (2) singleton kinds keep their strongest field.
  std::vector<Ranked> singles;
  std::set<PropertyKind> claimed;
  for (auto& r : ranked) {
    if (is_singleton(r.tuple.kind) && !claimed.insert(r.tuple.kind).second) continue;
    singles.push_back(std::move(r));
  }

  // (3) mutually exclusive kinds on one field: the weaker tuple goes.
  std::vector<Ranked> kept;
  for (auto& r : singles)
    if (!conflicts_on_field(kept, r.tuple)) kept.push_back(std::move(r));

  // (4) guesses for missing key kinds.
  if (options.fallback) {
    for (auto kind : {PropertyKind::kPacketType, PropertyKind::kHeaderLength, PropertyKind::kChecksum}) {
      const bool present = std::any_of(kept.begin(), kept.end(),
                                       [&](const Ranked& r) { return r.tuple.kind == kind; });
      if (present) continue;
      if (auto name = guess_field(kind, g.fields, kept)) {
        PropertyTuple t{kind, *name, 0.0, Provenance::kGuessed, std::nullopt};
        kept.push_back({t, order_of[text::to_lower(*name)]});
      }
    }
  }

  std::sort(kept.begin(), kept.end(), [](const Ranked& a, const Ranked& b) {
    if (a.field_order != b.field_order) return a.field_order < b.field_order;
    return static_cast<int>(a.tuple.kind) < static_cast<int>(b.tuple.kind);
  });
  for (auto& r : kept) g.properties.push_back(std::move(r.tuple));
  validate_grammar(g);
  return g;
}

void validate_grammar(const ProtocolGrammar& g) {
  std::set<std::string> names;
  for (const auto& f : g.fields) {
    if (f.name.empty()) bad(ErrorKind::kLayout, "grammar field with empty name");
    if (!names.insert(text::to_lower(f.name)).second)
      bad(ErrorKind::kLayout, "field '" + f.name + "' is defined twice");
    if (f.size_bits && *f.size_bits < 1) bad(ErrorKind::kLayout, "field '" + f.name + "' has non-positive size");
    if (f.size_bits.has_value() != f.offset_bits.has_value())
      bad(ErrorKind::kLayout, "field '" + f.name + "' must carry both size_bits and offset_bits or neither");
  }
  std::vector<const GrammarField*> placed;
  for (const auto& f : g.fields)
    if (f.offset_bits) placed.push_back(&f);
  std::sort(placed.begin(), placed.end(),
            [](const GrammarField* a, const GrammarField* b) { return *a->offset_bits < *b->offset_bits; });
  int expect = 0;
  for (std::size_t i = 0; i < placed.size(); ++i) {
    const auto* f = placed[i];
    if (*f->offset_bits < expect)
      bad(ErrorKind::kLayout, "fields '" + placed[i - 1]->name + "' and '" + f->name + "' overlap");
    if (*f->offset_bits > expect)
      bad(ErrorKind::kLayout, "gap before field '" + f->name + "' at bit " + std::to_string(expect));
    expect = *f->offset_bits + *f->size_bits;
  }
  if (expect != g.header_bits)
    bad(ErrorKind::kLayout, "header_bits " + std::to_string(g.header_bits) +
                                " differs from the field sizes, which sum to " + std::to_string(expect));

  std::map<PropertyKind, std::string> singleton_field;
  std::set<std::pair<std::string, PropertyKind>> seen;
  for (const auto& p : g.properties) {
    if (!g.field(p.field)) bad(ErrorKind::kLayout, "property " + std::string(to_string(p.kind)) +
                                                       " names unknown field '" + p.field + "'");
    if (!std::isfinite(p.score)) bad(ErrorKind::kLayout, "property score must be finite");
    if (!seen.insert({text::to_lower(p.field), p.kind}).second)
      bad(ErrorKind::kLayout, "duplicate property " + std::string(to_string(p.kind)) + " on '" + p.field + "'");
    if (is_singleton(p.kind)) {
      auto [it, inserted] = singleton_field.emplace(p.kind, p.field);
      if (!inserted)
        bad(ErrorKind::kSingletonViolation, std::string(to_string(p.kind)) + " appears on both '" +
                                                it->second + "' and '" + p.field + "'");
    }
  }
  for (const auto& a : g.properties)
    for (const auto& b : g.properties)
      if (&a < &b && text::equals_ci(a.field, b.field) && mutually_exclusive(a.kind, b.kind))
        bad(ErrorKind::kExclusionViolation, "field '" + a.field + "' carries exclusive kinds " +
                                                std::string(to_string(a.kind)) + " and " +
                                                std::string(to_string(b.kind)));
  std::set<std::string> type_names;
  for (const auto& t : g.packet_types)
    if (!type_names.insert(t.name).second) bad(ErrorKind::kLayout, "packet type '" + t.name + "' declared twice");
}

std::string serialize_grammar(const ProtocolGrammar& g) {
  json j;
  j["protocol"] = g.protocol;
  j["header_bits"] = g.header_bits;
  j["fields"] = json::array();
  for (const auto& f : g.fields) {
    j["fields"].push_back({{"name", f.name},
                           {"size_bits", f.size_bits ? json(*f.size_bits) : json(nullptr)},
                           {"offset_bits", f.offset_bits ? json(*f.offset_bits) : json(nullptr)},
                           {"order", f.order}});
  }
  j["properties"] = json::array();
  for (const auto& p : g.properties) {
    json r{{"kind", std::string(to_string(p.kind))},
           {"field", p.field},
           {"provenance", std::string(to_string(p.provenance))},
           {"score", p.score}};
    if (p.evidence)
      r["evidence"] = {{"start", p.evidence->span.start},
                       {"end", p.evidence->span.end},
                       {"sentence", p.evidence->sentence}};
    j["properties"].push_back(std::move(r));
  }
  if (!g.packet_types.empty()) {
    j["packet_types"] = json::array();
    for (const auto& t : g.packet_types) j["packet_types"].push_back({{"name", t.name}, {"value", t.value}});
  }
  return j.dump(2) + "\n";
}

ProtocolGrammar parse_grammar(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kSyntax, "grammar line " + std::to_string(line_of_byte(text, e.byte)) + ": " + e.what());
  }
  ProtocolGrammar g;
  try {
    g.protocol = j.at("protocol").get<std::string>();
    g.header_bits = j.at("header_bits").get<int>();
    for (const auto& f : j.at("fields")) {
      GrammarField gf;
      gf.name = f.at("name").get<std::string>();
      if (!f.at("size_bits").is_null()) gf.size_bits = f["size_bits"].get<int>();
      if (!f.at("offset_bits").is_null()) gf.offset_bits = f["offset_bits"].get<int>();
      gf.order = f.at("order").get<int>();
      g.fields.push_back(std::move(gf));
    }
    for (const auto& p : j.at("properties")) {
      PropertyTuple t;
      const auto kind_name = p.at("kind").get<std::string>();
      const auto kind = parse_property_kind(kind_name);
      if (!kind) throw Error(ErrorKind::kSyntax, "grammar: unknown property kind '" + kind_name + "'");
      t.kind = *kind;
      t.field = p.at("field").get<std::string>();
      const auto prov = p.at("provenance").get<std::string>();
      if (prov == "extracted") {
        t.provenance = Provenance::kExtracted;
      } else if (prov == "guessed") {
        t.provenance = Provenance::kGuessed;
      } else {
        throw Error(ErrorKind::kSyntax, "grammar: unknown provenance '" + prov + "'");
      }
      t.score = p.value("score", 0.0);
      if (p.contains("evidence")) {
        const auto& e = p["evidence"];
        t.evidence = Evidence{{e.at("start").get<std::size_t>(), e.at("end").get<std::size_t>()},
                              e.at("sentence").get<std::string>()};
      }
      g.properties.push_back(std::move(t));
    }
    if (j.contains("packet_types"))
      for (const auto& t : j["packet_types"])
        g.packet_types.push_back({t.at("name").get<std::string>(), t.at("value").get<std::uint64_t>()});
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSyntax, std::string("grammar: ") + e.what());
  }
  validate_grammar(g);
  return g;
}

}  // namespace protogram

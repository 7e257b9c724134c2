#include "protogram/fuzzer.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"
#include "protogram/error.hpp"
#include "protogram/rng.hpp"
#include "protogram/text.hpp"

namespace protogram {

namespace {

constexpr std::size_t kMaxEnumeratedTypes = 64;
constexpr int kRandomRegionBytes = 20;

std::uint64_t mask_of(int bits) { return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1; }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string_view to_string(FuzzConfig c) {
  switch (c) {
    case FuzzConfig::kRandom: return "random";
    case FuzzConfig::kManual: return "manual";
    case FuzzConfig::kNLPBased: return "nlp";
  }
  return "?";
}

std::optional<FuzzConfig> parse_fuzz_config(std::string_view s) {
  const auto l = text::to_lower(s);
  if (l == "random") return FuzzConfig::kRandom;
  if (l == "manual") return FuzzConfig::kManual;
  if (l == "nlp" || l == "nlpbased" || l == "nlp-based") return FuzzConfig::kNLPBased;
  return std::nullopt;
}

std::string_view to_string(ValueRuleKind k) {
  switch (k) {
    case ValueRuleKind::kZeros: return "zeros";
    case ValueRuleKind::kOnes: return "ones";
    case ValueRuleKind::kOne: return "one";
    case ValueRuleKind::kRandom: return "random";
    case ValueRuleKind::kNotMultiple: return "not-multiple";
    case ValueRuleKind::kHugeOffset: return "huge-offset";
    case ValueRuleKind::kSingleRandom: return "single-random";
  }
  return "?";
}

std::string_view to_string(DeliveryKind k) {
  switch (k) {
    case DeliveryKind::kDrop: return "drop";
    case DeliveryKind::kDuplicate: return "duplicate";
    case DeliveryKind::kDelay: return "delay";
    case DeliveryKind::kReorder: return "reorder";
  }
  return "?";
}

std::uint64_t apply_value_rule(const ValueRule& rule, std::uint64_t original, int bits) {
  const std::uint64_t mask = mask_of(bits);
  switch (rule.kind) {
    case ValueRuleKind::kZeros: return 0;
    case ValueRuleKind::kOnes: return mask;
    case ValueRuleKind::kOne: return 1 & mask;
    case ValueRuleKind::kRandom:
    case ValueRuleKind::kSingleRandom: return text::splitmix64(rule.seed) & mask;
    case ValueRuleKind::kNotMultiple: return (original + 1) & mask;
    case ValueRuleKind::kHugeOffset: return (original + (std::uint64_t{1} << (bits - 1))) & mask;
  }
  return original;
}

std::uint8_t random_byte_value(std::uint64_t seed, int index) {
  return static_cast<std::uint8_t>(text::splitmix64(seed + static_cast<std::uint64_t>(index)) & 0xFF);
}

TestStrategy null_strategy() { return TestStrategy{-1, FuzzConfig::kManual, std::nullopt, NoAction{}}; }

std::vector<TestStrategy> generate_random_strategies(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TestStrategy> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto count = static_cast<std::size_t>(1 + rng.below(kRandomRegionBytes));
    std::vector<int> pool(kRandomRegionBytes);
    std::iota(pool.begin(), pool.end(), 0);
    // Partial Fisher-Yates: the first `count` slots become the sample.
    for (std::size_t k = 0; k < count; ++k) {
      const auto j = k + static_cast<std::size_t>(rng.below(pool.size() - k));
      std::swap(pool[k], pool[j]);
    }
    std::vector<int> indices(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(indices.begin(), indices.end());
    out.push_back({static_cast<int>(i), FuzzConfig::kRandom, std::nullopt, RandomBytes{indices, rng.next()}});
  }
  return out;
}

std::vector<PacketTypeTarget> enumerate_packet_types(const ProtocolGrammar& g) {
  const GrammarField* f = g.field_with(PropertyKind::kPacketType);
  if (!f) throw Error(ErrorKind::kUngeneratable, "grammar '" + g.protocol + "' has no PacketType field");
  if (!f->size_bits || !f->offset_bits)
    throw Error(ErrorKind::kUngeneratable, "PacketType field '" + f->name + "' has no position in the header");
  std::vector<PacketTypeTarget> out;
  if (!g.packet_types.empty()) {
    for (const auto& t : g.packet_types) out.push_back({t.name, t.value});
    return out;
  }
  const std::uint64_t count = *f->size_bits >= 7 ? kMaxEnumeratedTypes
                                                 : std::min<std::uint64_t>(kMaxEnumeratedTypes, std::uint64_t{1} << *f->size_bits);
  for (std::uint64_t v = 0; v < count; ++v) out.push_back({f->name + "=" + std::to_string(v), v});
  return out;
}

std::vector<ValueRule> value_rules_for(const ProtocolGrammar& g, const GrammarField& field, FuzzConfig config,
                                       std::uint64_t seed) {
  const std::vector<ValueRule> size_rules{{ValueRuleKind::kZeros, 0},
                                          {ValueRuleKind::kOnes, 0},
                                          {ValueRuleKind::kOne, 0},
                                          {ValueRuleKind::kRandom, seed}};
  if (config != FuzzConfig::kNLPBased) return size_rules;
  if (g.has_kind(field.name, PropertyKind::kChecksum) || g.has_kind(field.name, PropertyKind::kPort))
    return {{ValueRuleKind::kSingleRandom, seed}};
  auto rules = size_rules;
  if (g.has_kind(field.name, PropertyKind::kMultiple)) rules.push_back({ValueRuleKind::kNotMultiple, 0});
  if (g.has_kind(field.name, PropertyKind::kSequenceNumber)) rules.push_back({ValueRuleKind::kHugeOffset, 0});
  return rules;
}

std::vector<TestStrategy> generate_grammar_strategies(const ProtocolGrammar& g, FuzzConfig config,
                                                      std::uint64_t seed) {
  if (config == FuzzConfig::kRandom)
    throw Error(ErrorKind::kConfiguration, "random strategies are not derived from a grammar");
  const auto types = enumerate_packet_types(g);
  std::vector<TestStrategy> out;
  int id = 0;
  auto next_seed = [&] { return text::splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(id + 1))); };
  for (const auto& t : types) {
    for (const Delivery d : {Delivery{DeliveryKind::kDrop, 0}, Delivery{DeliveryKind::kDuplicate, 0},
                             Delivery{DeliveryKind::kDelay, 3}, Delivery{DeliveryKind::kReorder, 0}}) {
      out.push_back({id, config, t, d});
      ++id;
    }
    out.push_back({id, config, t, Inject{next_seed()}});
    ++id;
    for (const auto& f : g.fields) {
      if (!f.size_bits) continue;
      for (const auto& rule : value_rules_for(g, f, config, next_seed())) {
        out.push_back({id, config, t, FieldModify{f.name, rule}});
        ++id;
      }
    }
  }
  return out;
}

std::string describe_action(const Action& a) {
  return std::visit(
      overloaded{[](const NoAction&) { return std::string("none"); },
                 [](const FieldModify& m) { return "modify " + m.field + " " + std::string(to_string(m.rule.kind)); },
                 [](const Delivery& d) {
                   std::string s(to_string(d.kind));
                   if (d.kind == DeliveryKind::kDelay) s += "(" + std::to_string(d.delay_events) + ")";
                   return s;
                 },
                 [](const Inject&) { return std::string("inject"); },
                 [](const RandomBytes& r) { return "random-bytes x" + std::to_string(r.indices.size()); }},
      a);
}

std::string strategies_json(const std::vector<TestStrategy>& strategies) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : strategies) {
    nlohmann::json j{{"id", s.id}, {"config", std::string(to_string(s.config))}};
    if (s.target) j["target"] = {{"name", s.target->name}, {"value", s.target->value}};
    std::visit(overloaded{[&](const NoAction&) { j["action"] = {{"type", "none"}}; },
                          [&](const FieldModify& m) {
                            j["action"] = {{"type", "modify"},
                                           {"field", m.field},
                                           {"rule", std::string(to_string(m.rule.kind))},
                                           {"seed", m.rule.seed}};
                          },
                          [&](const Delivery& d) {
                            j["action"] = {{"type", "delivery"},
                                           {"kind", std::string(to_string(d.kind))},
                                           {"delay_events", d.delay_events}};
                          },
                          [&](const Inject& i) { j["action"] = {{"type", "inject"}, {"seed", i.seed}}; },
                          [&](const RandomBytes& r) {
                            j["action"] = {{"type", "random-bytes"}, {"indices", r.indices}, {"seed", r.seed}};
                          }},
               s.action);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace protogram

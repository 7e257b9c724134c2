#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "protogram/grammar.hpp"

namespace protogram {

enum class FuzzConfig { kRandom, kManual, kNLPBased };

std::string_view to_string(FuzzConfig c);
std::optional<FuzzConfig> parse_fuzz_config(std::string_view s);

enum class ValueRuleKind { kZeros, kOnes, kOne, kRandom, kNotMultiple, kHugeOffset, kSingleRandom };

std::string_view to_string(ValueRuleKind k);

struct ValueRule {
  ValueRuleKind kind = ValueRuleKind::kZeros;
  std::uint64_t seed = 0;  // random / single-random only

  bool operator==(const ValueRule&) const = default;
};

// New value for a `bits`-wide field currently holding `original`.
std::uint64_t apply_value_rule(const ValueRule& rule, std::uint64_t original, int bits);

struct FieldModify {
  std::string field;
  ValueRule rule;

  bool operator==(const FieldModify&) const = default;
};

enum class DeliveryKind { kDrop, kDuplicate, kDelay, kReorder };

std::string_view to_string(DeliveryKind k);

struct Delivery {
  DeliveryKind kind = DeliveryKind::kDrop;
  int delay_events = 0;

  bool operator==(const Delivery&) const = default;
};

// A copy of each matching packet with one fresh random payload byte,
// delivered ahead of the original.
struct Inject {
  std::uint64_t seed = 0;

  bool operator==(const Inject&) const = default;
};

struct RandomBytes {
  std::vector<int> indices;  // sorted, within [0, 20)
  std::uint64_t seed = 0;

  bool operator==(const RandomBytes&) const = default;
};

// Value written at byte `index` by a RandomBytes action.
std::uint8_t random_byte_value(std::uint64_t seed, int index);

struct NoAction {
  bool operator==(const NoAction&) const = default;
};

using Action = std::variant<NoAction, FieldModify, Delivery, Inject, RandomBytes>;

struct PacketTypeTarget {
  std::string name;
  std::uint64_t value = 0;

  bool operator==(const PacketTypeTarget&) const = default;
};

struct TestStrategy {
  int id = 0;
  FuzzConfig config = FuzzConfig::kRandom;
  std::optional<PacketTypeTarget> target;
  Action action;

  bool operator==(const TestStrategy&) const = default;
};

// Strategy that leaves every packet alone.
TestStrategy null_strategy();

std::vector<TestStrategy> generate_random_strategies(std::size_t n, std::uint64_t seed);

// Declared packet types, else every value of the PacketType field (at most 64).
std::vector<PacketTypeTarget> enumerate_packet_types(const ProtocolGrammar& g);

std::vector<ValueRule> value_rules_for(const ProtocolGrammar& g, const GrammarField& field,
                                       FuzzConfig config, std::uint64_t seed);

std::vector<TestStrategy> generate_grammar_strategies(const ProtocolGrammar& g, FuzzConfig config,
                                                      std::uint64_t seed = 0);

std::string describe_action(const Action& a);
std::string strategies_json(const std::vector<TestStrategy>& strategies);

}  // namespace protogram

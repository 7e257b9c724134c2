#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "protogram/error.hpp"
#include "protogram/fuzzer.hpp"
#include "protogram/text.hpp"

using namespace protogram;

namespace {

ProtocolGrammar manual(const char* name) {
  return parse_grammar(testing::read_file(testing::data_dir() / "grammars" / name));
}

std::size_t count_rule(const std::vector<TestStrategy>& v, ValueRuleKind k) {
  std::size_t n = 0;
  for (const auto& s : v)
    if (const auto* m = std::get_if<FieldModify>(&s.action); m && m->rule.kind == k) ++n;
  return n;
}

}  // namespace

TEST_CASE("value rules") {
  CHECK(apply_value_rule({ValueRuleKind::kZeros, 0}, 77, 8) == 0);
  CHECK(apply_value_rule({ValueRuleKind::kOnes, 0}, 0, 4) == 0xF);
  CHECK(apply_value_rule({ValueRuleKind::kOnes, 0}, 0, 64) == ~std::uint64_t{0});
  CHECK(apply_value_rule({ValueRuleKind::kOne, 0}, 9, 16) == 1);
  CHECK(apply_value_rule({ValueRuleKind::kRandom, 5}, 0, 12) == (text::splitmix64(5) & 0xFFF));
  CHECK(apply_value_rule({ValueRuleKind::kRandom, 5}, 0, 12) == apply_value_rule({ValueRuleKind::kSingleRandom, 5}, 3, 12));
  // Data offset of 5 words becomes 6, no longer the multiple the receiver expects.
  CHECK(apply_value_rule({ValueRuleKind::kNotMultiple, 0}, 5, 4) == 6);
  CHECK(apply_value_rule({ValueRuleKind::kNotMultiple, 0}, 15, 4) == 0);
  CHECK(apply_value_rule({ValueRuleKind::kHugeOffset, 0}, 100, 32) == 100 + (std::uint64_t{1} << 31));
  CHECK(apply_value_rule({ValueRuleKind::kHugeOffset, 0}, 1, 1) == 0);
  for (int bits = 1; bits <= 64; ++bits)
    for (auto k : {ValueRuleKind::kRandom, ValueRuleKind::kHugeOffset, ValueRuleKind::kNotMultiple}) {
      const auto v = apply_value_rule({k, 123}, ~std::uint64_t{0}, bits);
      if (bits < 64) CHECK(v < (std::uint64_t{1} << bits));
    }
}

TEST_CASE("strategy counts for the manual TCP grammar") {
  const auto g = manual("tcp_manual.json");
  REQUIRE(enumerate_packet_types(g).size() == 6);
  const auto m = generate_grammar_strategies(g, FuzzConfig::kManual);
  const auto n = generate_grammar_strategies(g, FuzzConfig::kNLPBased);
  // Per type: 4 delivery actions, one inject, and value rules per sized field.
  CHECK(m.size() == 6 * (5 + 10 * 4));
  CHECK(n.size() == 6 * 38);
  CHECK(count_rule(m, ValueRuleKind::kNotMultiple) == 0);
  CHECK(count_rule(n, ValueRuleKind::kNotMultiple) == 6);
  CHECK(count_rule(n, ValueRuleKind::kHugeOffset) == 6);
  CHECK(count_rule(n, ValueRuleKind::kSingleRandom) == 6 * 3);
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(m[i].id == static_cast<int>(i));
    CHECK(m[i].target.has_value());
  }
  CHECK(generate_grammar_strategies(g, FuzzConfig::kManual, 3) == generate_grammar_strategies(g, FuzzConfig::kManual, 3));
}

TEST_CASE("packet types enumerate the field when none are declared") {
  auto g = manual("dccp_manual.json");
  g.packet_types.clear();
  const auto t = enumerate_packet_types(g);
  CHECK(t.size() == 16);
  CHECK(t.back().value == 15);
}

TEST_CASE("grammars without a usable PacketType are ungeneratable") {
  auto g = manual("tcp_manual.json");
  g.properties.erase(std::remove_if(g.properties.begin(), g.properties.end(),
                                    [](const PropertyTuple& p) { return p.kind == PropertyKind::kPacketType; }),
                     g.properties.end());
  try {
    generate_grammar_strategies(g, FuzzConfig::kManual);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUngeneratable);
  }
  CHECK_THROWS_AS(generate_grammar_strategies(manual("tcp_manual.json"), FuzzConfig::kRandom), Error);
}

TEST_CASE("random strategies sample byte indices without replacement") {
  const auto v = generate_random_strategies(1000, 17);
  REQUIRE(v.size() == 1000);
  std::set<std::size_t> sizes;
  for (const auto& s : v) {
    CHECK(s.config == FuzzConfig::kRandom);
    CHECK_FALSE(s.target);
    const auto& r = std::get<RandomBytes>(s.action);
    REQUIRE_FALSE(r.indices.empty());
    CHECK(r.indices.size() <= 20);
    CHECK(std::is_sorted(r.indices.begin(), r.indices.end()));
    CHECK(std::adjacent_find(r.indices.begin(), r.indices.end()) == r.indices.end());
    CHECK(r.indices.front() >= 0);
    CHECK(r.indices.back() < 20);
    sizes.insert(r.indices.size());
  }
  CHECK(sizes.size() >= 15);
  CHECK(generate_random_strategies(50, 17) ==
        std::vector<TestStrategy>(v.begin(), v.begin() + 50));
  CHECK(random_byte_value(4, 2) == random_byte_value(4, 2));
}

TEST_CASE("strategy JSON lists every strategy") {
  const auto v = generate_grammar_strategies(manual("tcp_manual.json"), FuzzConfig::kManual);
  const auto j = strategies_json(v);
  CHECK(j.find("\"inject\"") != std::string::npos);
  CHECK(j.find("\"modify\"") != std::string::npos);
  CHECK(describe_action(Delivery{DeliveryKind::kDelay, 3}) == "delay(3)");
}

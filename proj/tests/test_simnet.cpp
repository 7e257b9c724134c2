#include "doctest.h"
#include "helpers.hpp"
#include "protogram/checksum.hpp"
#include "protogram/error.hpp"
#include "protogram/simnet.hpp"

using namespace protogram;

namespace {

ProtocolGrammar manual(const char* name) {
  return parse_grammar(testing::read_file(testing::data_dir() / "grammars" / name));
}

TestStrategy targeted(const ProtocolGrammar& g, const std::string& type, Action a) {
  for (const auto& t : enumerate_packet_types(g))
    if (t.name == type) return TestStrategy{0, FuzzConfig::kManual, t, std::move(a)};
  FAIL("no packet type " << type);
  return {};
}

}  // namespace

TEST_CASE("bit helpers are big-endian and inverse") {
  std::vector<std::uint8_t> b(8, 0);
  write_bits(b, 4, 8, 0xAB);
  CHECK(b[0] == 0x0A);
  CHECK(b[1] == 0xB0);
  CHECK(read_bits(b, 4, 8) == 0xAB);
  for (int off = 0; off < 16; ++off)
    for (int size : {1, 3, 7, 13, 33, 48}) {
      std::vector<std::uint8_t> z(12, 0xFF);
      const std::uint64_t v = (0x5A5A5A5A5A5AULL >> (off % 5)) & ((std::uint64_t{1} << size) - 1);
      write_bits(z, off, size, v);
      CHECK(read_bits(z, off, size) == v);
      if (off > 0) CHECK(read_bits(z, 0, off) == (std::uint64_t{1} << off) - 1);
    }
}

TEST_CASE("TCP segments round-trip with a valid checksum") {
  TcpSegment s;
  s.src_port = 40000;
  s.dst_port = 80;
  s.seq = 0xDEADBEEF;
  s.ack = 17;
  s.flags = tcp_flags::kSyn | tcp_flags::kAck;
  s.window = 512;
  s.payload = {1, 2, 3};
  const auto bytes = serialize_tcp(s);
  CHECK(bytes.size() == 23);
  CHECK(internet_checksum(bytes) == 0);
  auto back = parse_tcp(bytes);
  s.checksum = back.checksum;
  CHECK(back == s);
  CHECK(tcp_packet_name(bytes) == "SYN-ACK");
  CHECK_THROWS_AS(parse_tcp(std::vector<std::uint8_t>(10, 0)), Error);
}

TEST_CASE("DCCP packets round-trip per type") {
  for (std::uint8_t type = 0; type < 10; ++type) {
    DccpPacket p;
    p.src_port = 5001;
    p.dst_port = 6001;
    p.type = type;
    p.seq = 0x123456789ABCULL;
    if (type != dccp_types::kRequest && type != dccp_types::kData) p.ack = 0x0000000000FFULL;
    if (type == dccp_types::kRequest || type == dccp_types::kResponse) p.service_code = 42;
    if (type == dccp_types::kReset) p.reset_code = 2;
    p.payload = {9, 8, 7, 6};
    const auto bytes = serialize_dccp(p);
    CHECK(bytes.size() == static_cast<std::size_t>(dccp_header_bytes(type)) + 4);
    auto back = parse_dccp(bytes);
    CHECK(back.data_offset * 4 == dccp_header_bytes(type));
    CHECK(dccp_checksum(bytes) == back.checksum);
    p.checksum = back.checksum;
    p.data_offset = back.data_offset;
    CHECK(back == p);
    CHECK(dccp_packet_name(bytes) == dccp_type_name(type));
  }
}

TEST_CASE("the null strategy completes both handshakes") {
  for (auto [proto, file] : {std::pair{ToyProtocol::kTCP, "tcp_manual.json"}, std::pair{ToyProtocol::kDCCP, "dccp_manual.json"}}) {
    const auto g = manual(file);
    const auto r = run_strategy(proto, null_strategy(), g);
    CHECK(r.verdict == Verdict::kCompleted);
    CHECK_FALSE(r.attack);
    CHECK(r.events_used <= 100);
    CHECK(r.proxy.packets_modified == 0);
    CHECK(r.trace.size() >= 4);
  }
  const auto tcp = run_strategy(ToyProtocol::kTCP, null_strategy(), manual("tcp_manual.json"));
  CHECK(tcp.trace.front() == "SYN");
  CHECK(tcp.trace[1] == "SYN-ACK");
}

TEST_CASE("dropping every SYN stalls the connection and reports an attack") {
  const auto g = manual("tcp_manual.json");
  const auto r = run_strategy(ToyProtocol::kTCP, targeted(g, "SYN", Delivery{DeliveryKind::kDrop, 0}), g);
  CHECK(r.verdict != Verdict::kCompleted);
  REQUIRE(r.attack);
  CHECK_FALSE(r.attack->off_path);
  for (const auto& name : r.trace) CHECK(name == "SYN");
}

TEST_CASE("duplicated ACKs are tolerated") {
  const auto g = manual("tcp_manual.json");
  const auto r = run_strategy(ToyProtocol::kTCP, targeted(g, "ACK", Delivery{DeliveryKind::kDuplicate, 0}), g);
  CHECK(r.verdict == Verdict::kCompleted);
  CHECK(r.proxy.packets_matched > 0);
}

TEST_CASE("corrupting the checksum of data segments stalls") {
  const auto g = manual("tcp_manual.json");
  const auto s = targeted(g, "DATA", FieldModify{"Checksum", {ValueRuleKind::kZeros, 0}});
  const auto r = run_strategy(ToyProtocol::kTCP, s, g);
  CHECK(r.proxy.checksum_inconsistent > 0);
  CHECK(r.verdict == Verdict::kStalled);
  CHECK(r.attack);
}

TEST_CASE("modifying other fields keeps checksums consistent") {
  const auto g = manual("tcp_manual.json");
  const auto s = targeted(g, "DATA", FieldModify{"Window", {ValueRuleKind::kOnes, 0}});
  const auto r = run_strategy(ToyProtocol::kTCP, s, g);
  CHECK(r.proxy.packets_modified > 0);
  CHECK(r.proxy.checksum_inconsistent == 0);
}

TEST_CASE("runs are deterministic") {
  const auto g = manual("dccp_manual.json");
  for (const auto& s : generate_random_strategies(30, 9)) {
    const auto a = run_strategy(ToyProtocol::kDCCP, s, g);
    const auto b = run_strategy(ToyProtocol::kDCCP, s, g);
    CHECK(a.trace == b.trace);
    CHECK(a.verdict == b.verdict);
    CHECK(a.events_used == b.events_used);
    CHECK(a.events_used <= 100);
  }
}

TEST_CASE("grammar must match the simulated protocol") {
  try {
    run_strategy(ToyProtocol::kDCCP, null_strategy(), manual("tcp_manual.json"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kConfiguration);
  }
}

TEST_CASE("coverage counts distinct traces") {
  std::vector<RunResult> rs(3);
  rs[0].trace = {"SYN"};
  rs[1].trace = {"SYN"};
  rs[2].trace = {"SYN", "ACK"};
  const auto c = coverage(rs);
  CHECK(c.unique_traces == 2);
  CHECK(c.strategies == 3);
}

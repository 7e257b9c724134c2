#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "protogram/fuzzer.hpp"
#include "protogram/grammar.hpp"

namespace protogram {

enum class ToyProtocol { kTCP, kDCCP };

std::string_view to_string(ToyProtocol p);
std::optional<ToyProtocol> parse_toy_protocol(std::string_view s);
// Fixed header size the endpoints emit and parse.
int fixed_header_bits(ToyProtocol p);

enum class Verdict { kCompleted, kStalled, kFailed };

std::string_view to_string(Verdict v);

using PacketTypeTrace = std::vector<std::string>;

struct AttackReport {
  int strategy_id = 0;
  std::string attack_class = "availability";
  bool off_path = false;
  Verdict verdict = Verdict::kStalled;
  PacketTypeTrace trace;
};

// Proxy bookkeeping.
struct ProxyStats {
  std::size_t packets_seen = 0;
  std::size_t packets_matched = 0;
  std::size_t packets_modified = 0;
  // Modified packets whose checksum no longer verifies.
  std::size_t checksum_inconsistent = 0;
  std::size_t injected = 0;
};

struct RunResult {
  int strategy_id = 0;
  PacketTypeTrace trace;
  Verdict verdict = Verdict::kStalled;
  std::size_t events_used = 0;
  std::string reason;
  std::optional<AttackReport> attack;
  ProxyStats proxy;
};

struct SimOptions {
  std::size_t event_budget = 100;
  std::size_t stall_window = 20;
  int data_packets = 5;  // each way
  int max_retries = 3;
  int rto_ticks = 4;
  int latency_ticks = 1;
};

// Grammar must describe the protocol and locate its PacketType field
// inside the fixed header.
void check_grammar_for_protocol(ToyProtocol protocol, const ProtocolGrammar& grammar);

RunResult run_strategy(ToyProtocol protocol, const TestStrategy& strategy, const ProtocolGrammar& grammar,
                       const SimOptions& options = {});

std::optional<AttackReport> detect_attack(const RunResult& result, const TestStrategy& strategy);

struct Coverage {
  std::size_t unique_traces = 0;
  std::size_t strategies = 0;
};

Coverage coverage(const std::vector<RunResult>& results);

// ---- packet helpers (big-endian bit fields) ------------------------------------

std::uint64_t read_bits(std::span<const std::uint8_t> bytes, int offset_bits, int size_bits);
void write_bits(std::span<std::uint8_t> bytes, int offset_bits, int size_bits, std::uint64_t value);

// Toy packet views, exposed for tests.
struct TcpSegment {
  std::uint16_t src_port = 0, dst_port = 0;
  std::uint32_t seq = 0, ack = 0;
  std::uint8_t data_offset = 5;
  std::uint8_t reserved = 0;
  std::uint8_t flags = 0;
  std::uint16_t window = 0;
  std::uint16_t checksum = 0;
  std::uint16_t urgent = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const TcpSegment&) const = default;
};

namespace tcp_flags {
inline constexpr std::uint8_t kFin = 0x01, kSyn = 0x02, kRst = 0x04, kPsh = 0x08, kAck = 0x10, kUrg = 0x20;
}

// Serialization fills in the checksum when fill_checksum is set.
std::vector<std::uint8_t> serialize_tcp(const TcpSegment& s, bool fill_checksum = true);
TcpSegment parse_tcp(std::span<const std::uint8_t> bytes);
std::string tcp_packet_name(std::span<const std::uint8_t> bytes);

struct DccpPacket {
  std::uint16_t src_port = 0, dst_port = 0;
  std::uint8_t data_offset = 0;
  std::uint8_t ccval = 0, cscov = 0;
  std::uint16_t checksum = 0;
  std::uint8_t res = 0;
  std::uint8_t type = 0;
  std::uint8_t x = 1;
  std::uint8_t reserved = 0;
  std::uint64_t seq = 0;  // 48 bits
  std::optional<std::uint64_t> ack;          // acknowledgement subheader
  std::optional<std::uint32_t> service_code;  // Request / Response
  std::optional<std::uint8_t> reset_code;     // Reset (followed by three data bytes)
  std::vector<std::uint8_t> payload;

  bool operator==(const DccpPacket&) const = default;
};

namespace dccp_types {
inline constexpr std::uint8_t kRequest = 0, kResponse = 1, kData = 2, kAck = 3, kDataAck = 4, kCloseReq = 5,
                              kClose = 6, kReset = 7, kSync = 8, kSyncAck = 9;
}

std::string_view dccp_type_name(std::uint8_t type);
// Header length in bytes (generic header + subheaders) for a packet type.
int dccp_header_bytes(std::uint8_t type);
std::vector<std::uint8_t> serialize_dccp(const DccpPacket& p, bool fill_checksum = true);
// Parses according to the type field; payload is whatever follows Data Offset.
DccpPacket parse_dccp(std::span<const std::uint8_t> bytes);
std::uint16_t dccp_checksum(std::span<const std::uint8_t> bytes);
std::string dccp_packet_name(std::span<const std::uint8_t> bytes);

std::string run_log_json(const std::vector<RunResult>& results, const std::vector<TestStrategy>& strategies);

}  // namespace protogram

#include "protogram/property_kind.hpp"

#include <algorithm>
#include <map>

#include "protogram/corpus.hpp"
#include "protogram/text.hpp"

namespace protogram {

namespace {

using Phrases = std::vector<std::vector<std::string>>;

Phrases make_phrases(std::initializer_list<std::string_view> raw) {
  Phrases out;
  for (auto p : raw) out.push_back(phrase_tokens(p));
  return out;
}

const std::map<PropertyKind, Phrases>& phrase_table() {
  static const std::map<PropertyKind, Phrases> table = {
      {PropertyKind::kChecksum,
       make_phrases({"checksum", "ones complement", "one's complement", "complement sum"})},
      {PropertyKind::kPort, make_phrases({"port", "port number", "ports", "de-multiplex"})},
      {PropertyKind::kMultiple,
       make_phrases({"multiple of", "in units of", "32-bit words", "32 bit words", "8-octet units",
                     "units of 8 octets"})},
      {PropertyKind::kPacketType,
       make_phrases({"type", "packet type", "type of the packet", "control bits", "control bit"})},
      {PropertyKind::kHeaderLength,
       make_phrases({"header", "offset from the start", "length of the header", "header length",
                     "where the data begins"})},
      {PropertyKind::kSequenceNumber,
       make_phrases({"sequence number", "sequence numbers", "sequence"})},
      {PropertyKind::kAcknowledgementNumber,
       make_phrases({"acknowledgment number", "acknowledgement number", "acknowledgment",
                     "acknowledgement", "next sequence number"})},
      {PropertyKind::kPayloadLength,
       make_phrases({"payload length", "length of the payload", "total length",
                     "length of the datagram", "measured in octets"})},
      {PropertyKind::kWindowFlowControl,
       make_phrases({"window", "willing to accept", "flow control"})},
  };
  return table;
}

}  // namespace

const std::array<PropertyKind, kPropertyKindCount>& all_property_kinds() {
  static const std::array<PropertyKind, kPropertyKindCount> kinds = {
      PropertyKind::kChecksum,       PropertyKind::kPort,
      PropertyKind::kMultiple,       PropertyKind::kPacketType,
      PropertyKind::kHeaderLength,   PropertyKind::kSequenceNumber,
      PropertyKind::kAcknowledgementNumber, PropertyKind::kPayloadLength,
      PropertyKind::kWindowFlowControl};
  return kinds;
}

const std::array<PropertyKind, kPropertyKindCount>& property_priority_order() {
  static const std::array<PropertyKind, kPropertyKindCount> order = {
      PropertyKind::kPacketType,     PropertyKind::kHeaderLength,
      PropertyKind::kChecksum,       PropertyKind::kPort,
      PropertyKind::kSequenceNumber, PropertyKind::kAcknowledgementNumber,
      PropertyKind::kPayloadLength,  PropertyKind::kWindowFlowControl,
      PropertyKind::kMultiple};
  return order;
}

int priority_rank(PropertyKind kind) {
  const auto& order = property_priority_order();
  return static_cast<int>(std::find(order.begin(), order.end(), kind) - order.begin());
}

std::string_view to_string(PropertyKind kind) {
  switch (kind) {
    case PropertyKind::kChecksum: return "Checksum";
    case PropertyKind::kPort: return "Port";
    case PropertyKind::kMultiple: return "Multiple";
    case PropertyKind::kPacketType: return "PacketType";
    case PropertyKind::kHeaderLength: return "HeaderLength";
    case PropertyKind::kSequenceNumber: return "SequenceNumber";
    case PropertyKind::kAcknowledgementNumber: return "AcknowledgementNumber";
    case PropertyKind::kPayloadLength: return "PayloadLength";
    case PropertyKind::kWindowFlowControl: return "WindowFlowControl";
  }
  return "?";
}

std::optional<PropertyKind> parse_property_kind(std::string_view name) {
  for (auto k : all_property_kinds())
    if (to_string(k) == name) return k;
  return std::nullopt;
}

bool is_singleton(PropertyKind kind) {
  return kind == PropertyKind::kPacketType || kind == PropertyKind::kHeaderLength ||
         kind == PropertyKind::kChecksum;
}

bool mutually_exclusive(PropertyKind a, PropertyKind b) {
  using K = PropertyKind;
  auto one_way = [](K x, K y) {
    switch (x) {
      case K::kPacketType:
        return y == K::kSequenceNumber || y == K::kAcknowledgementNumber || y == K::kChecksum ||
               y == K::kPort;
      case K::kChecksum:
        return y == K::kPort || y == K::kSequenceNumber;
      case K::kHeaderLength:
        return y == K::kChecksum || y == K::kPort;
      default:
        return false;
    }
  };
  return one_way(a, b) || one_way(b, a);
}

const std::vector<std::vector<std::string>>& key_phrases(PropertyKind kind) {
  return phrase_table().at(kind);
}

std::vector<std::string> phrase_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(s, 0))
    if (!t.is_punct) out.push_back(text::to_lower(t.text));
  return out;
}

}  // namespace protogram

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace protogram {

enum class PropertyKind {
  kChecksum,
  kPort,
  kMultiple,
  kPacketType,
  kHeaderLength,
  kSequenceNumber,
  kAcknowledgementNumber,
  kPayloadLength,
  kWindowFlowControl,
};

inline constexpr std::size_t kPropertyKindCount = 9;

// Catalog order (the enum order above).
const std::array<PropertyKind, kPropertyKindCount>& all_property_kinds();

// Tie-break order for kind assignment, highest priority first.
const std::array<PropertyKind, kPropertyKindCount>& property_priority_order();
int priority_rank(PropertyKind kind);

std::string_view to_string(PropertyKind kind);
std::optional<PropertyKind> parse_property_kind(std::string_view name);

// At most one field in a grammar may carry a singleton kind.
bool is_singleton(PropertyKind kind);
// Symmetric: kinds that cannot sit on the same field.
bool mutually_exclusive(PropertyKind a, PropertyKind b);

// Key phrases, each already normalized to lower-case word tokens.
const std::vector<std::vector<std::string>>& key_phrases(PropertyKind kind);

// Lower-case word tokens with punctuation removed, as used for phrase matching.
std::vector<std::string> phrase_tokens(std::string_view text);

}  // namespace protogram

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "protogram/corpus.hpp"
#include "protogram/property_kind.hpp"
#include "protogram/type_extraction.hpp"

namespace protogram {

enum class Provenance { kExtracted, kGuessed };

std::string_view to_string(Provenance p);

struct Evidence {
  CharSpan span;
  std::string sentence;

  bool operator==(const Evidence&) const = default;
};

struct PropertyTuple {
  PropertyKind kind = PropertyKind::kChecksum;
  std::string field;
  double score = 0.0;
  Provenance provenance = Provenance::kExtracted;
  std::optional<Evidence> evidence;

  bool operator==(const PropertyTuple&) const = default;
};

struct GrammarField {
  std::string name;
  std::optional<int> size_bits;
  std::optional<int> offset_bits;  // absent for fields outside the fixed layout
  int order = 0;

  bool operator==(const GrammarField&) const = default;
};

struct PacketTypeDecl {
  std::string name;
  std::uint64_t value = 0;

  bool operator==(const PacketTypeDecl&) const = default;
};

struct ProtocolGrammar {
  std::string protocol;
  int header_bits = 0;
  std::vector<GrammarField> fields;
  std::vector<PropertyTuple> properties;
  std::vector<PacketTypeDecl> packet_types;  // optional declared list

  const GrammarField* field(std::string_view name) const;
  std::vector<PropertyKind> kinds_of(std::string_view field) const;
  bool has_kind(std::string_view field, PropertyKind kind) const;
  // The field carrying a singleton kind, if any.
  const GrammarField* field_with(PropertyKind kind) const;

  bool operator==(const ProtocolGrammar&) const = default;
};

struct PostprocessOptions {
  bool fallback = true;
};

// Dedup, singleton and exclusion enforcement, fallback guesses, layout.
ProtocolGrammar postprocess(std::string protocol, const std::vector<PropertyTuple>& tuples,
                            const std::vector<FieldType>& types,
                            const PostprocessOptions& options = {});

// Throws on any grammar invariant violation.
void validate_grammar(const ProtocolGrammar& g);

std::string serialize_grammar(const ProtocolGrammar& g);
ProtocolGrammar parse_grammar(std::string_view text);

}  // namespace protogram

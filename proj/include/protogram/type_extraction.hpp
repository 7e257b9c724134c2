#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "protogram/corpus.hpp"

namespace protogram {

// A protocol header field symbol.
struct FieldType {
  std::string name;
  std::optional<int> size_bits;
  std::optional<int> order;
  std::vector<std::string> aliases;
  std::size_t source_section = 0;
  // Later sections whose headings defined the same name.
  std::vector<std::size_t> extra_sections;

  bool operator==(const FieldType&) const = default;
};

// Rule-based extraction from field-definition headings, in document order.
std::vector<FieldType> extract_entity_types(const RawDocument& doc,
                                            const std::vector<Section>& sections);

// |case-folded gold names found in predicted| / |gold|.
double type_extraction_accuracy(const std::vector<FieldType>& predicted,
                                const std::vector<FieldType>& gold);

// Trims, collapses whitespace and strips trailing punctuation. A trailing
// parenthetical such as "(CsCov)" is removed and returned through aliases.
std::string canonical_field_name(std::string_view raw, std::vector<std::string>* aliases = nullptr);

// "Data Offset" -> "DO". Empty for single-word names.
std::string initials_acronym(std::string_view name);

// Types file: one `name<TAB>size_bits<TAB>order` record per line; "-" marks
// an absent size or order.
std::string write_types_file(const std::vector<FieldType>& types);
std::vector<FieldType> parse_types_file(std::string_view text);

}  // namespace protogram

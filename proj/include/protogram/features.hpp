#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "protogram/corpus.hpp"
#include "protogram/type_extraction.hpp"

namespace protogram {

enum class CatalogId { kMention, kProperty };

std::string_view to_string(CatalogId id);

struct FeatureCatalog {
  CatalogId id;
  int version;
  std::vector<std::string> names;

  std::size_t size() const { return names.size(); }
};

// Binary features for (field type, chunk) pairs. Names are generic cues only;
// no protocol vocabulary appears in the catalog.
const FeatureCatalog& mention_catalog();
// Binary features for the "does this chunk express any property" scorer.
const FeatureCatalog& property_catalog();
const FeatureCatalog& catalog_for(CatalogId id);

struct FeatureVector {
  CatalogId catalog = CatalogId::kMention;
  int catalog_version = 1;
  std::vector<std::uint8_t> bits;

  bool operator==(const FeatureVector&) const = default;
};

// Everything about a chunk's surroundings that mention features look at.
struct MentionContext {
  std::vector<std::string> window;  // +-5 word tokens within the sentence
  std::string next_token;
  std::string section_title;
  bool in_title_sentence = false;
};

MentionContext make_mention_context(const Document& doc, const Chunk& chunk);

FeatureVector featurize_mention(const FieldType& entity, const Chunk& chunk,
                                const MentionContext& context);

FeatureVector featurize_property(const Document& doc, const Chunk& chunk);

// Row-major [chunk][type] feature matrix for a whole document.
struct MentionFeatureMatrix {
  std::size_t type_count = 0;
  std::vector<FeatureVector> rows;

  const FeatureVector& at(std::size_t chunk, std::size_t type) const {
    return rows[chunk * type_count + type];
  }
};

MentionFeatureMatrix featurize_document(const Document& doc, const std::vector<FieldType>& types);

// Normalized Levenshtein similarity in [0, 1].
double edit_similarity(std::string_view a, std::string_view b);
// Token-set Jaccard over case-folded tokens.
double token_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

}  // namespace protogram

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "protogram/annotation.hpp"
#include "protogram/corpus.hpp"
#include "protogram/features.hpp"
#include "protogram/property_kind.hpp"
#include "protogram/type_extraction.hpp"

namespace protogram {

struct TrainingMeta {
  std::vector<std::string> protocols;
  std::uint64_t seed = 0;
  int epochs = 0;

  bool operator==(const TrainingMeta&) const = default;
};

// Linear scorer over a binary feature catalog. weights.back() is the bias.
struct LinearModel {
  CatalogId catalog = CatalogId::kMention;
  int catalog_version = 1;
  std::vector<std::string> feature_names;
  std::vector<double> weights;
  double margin_threshold = 0.0;
  TrainingMeta meta;

  double bias() const { return weights.back(); }
  bool operator==(const LinearModel&) const = default;
};

// Empty model (all weights zero) for a catalog.
LinearModel make_model(CatalogId catalog);

struct LabeledVector {
  FeatureVector features;
  int label = 0;  // +1 / -1
};

struct TrainOptions {
  int epochs = 50;
  double lambda = 1e-4;
  double learning_rate = 0.1;
  double margin_threshold = 0.0;
};

// Regularized hinge loss minimized by seeded stochastic subgradient descent.
LinearModel train(std::span<const LabeledVector> pairs, std::uint64_t seed, int epochs);
LinearModel train(std::span<const LabeledVector> pairs, std::uint64_t seed,
                  const TrainOptions& options);

double score(const LinearModel& model, const FeatureVector& fv);
inline bool classify(const LinearModel& model, const FeatureVector& fv) {
  return score(model, fv) >= model.margin_threshold;
}

struct Mention {
  std::size_t chunk_index = 0;
  CharSpan span;
  std::size_t type_index = 0;
  std::string type_name;
  double score = 0.0;
};

struct PropertySpan {
  std::size_t chunk_index = 0;
  CharSpan span;
  double score = 0.0;
  std::optional<PropertyKind> kind;
  std::optional<std::size_t> argument;  // index into the type list
};

std::vector<Mention> identify_mentions(const LinearModel& model, const Document& doc,
                                       const std::vector<FieldType>& types);
std::vector<Mention> identify_mentions(const LinearModel& model, const Document& doc,
                                       const std::vector<FieldType>& types,
                                       const MentionFeatureMatrix& features);

// Among overlapping candidates keep the highest score, then the longer
// chunk, then the earlier one. Output is ordered by span.
std::vector<Mention> resolve_overlaps(std::vector<Mention> candidates);

std::vector<PropertySpan> identify_property_spans(const LinearModel& model, const Document& doc);
std::vector<PropertySpan> identify_property_spans(const LinearModel& model, const Document& doc,
                                                  const std::vector<FeatureVector>& features);
std::vector<FeatureVector> featurize_properties(const Document& doc);

// Kind with the most matched key-phrase tokens in the span's sentence.
PropertyKind assign_property_kind(const Document& doc, const PropertySpan& span);
// Per-kind matched key-phrase token counts for a sentence, in catalog order.
std::vector<std::size_t> key_phrase_counts(const Sentence& sentence);

// Field named in the enclosing section title (walking up to parents).
std::size_t resolve_property_argument(const PropertySpan& span, const Document& doc,
                                      const std::vector<FieldType>& types);

// ---- training data -------------------------------------------------------

struct PairOptions {
  std::size_t negatives_per_positive = 5;
  std::uint64_t seed = 0;
};

struct TrainingSet {
  std::vector<LabeledVector> mention_pairs;
  std::vector<LabeledVector> property_pairs;
  std::vector<std::string> protocols;
  // Every case-folded token the pair builder read, for zero-shot auditing.
  std::set<std::string> observed_tokens;
  std::size_t unaligned_mentions = 0;
};

void add_training_document(TrainingSet& set, const Document& doc,
                           const AnnotationSet& annotations, const PairOptions& options);

// ---- model files -----------------------------------------------------------

struct ModelBundle {
  LinearModel mention;
  LinearModel property;

  bool operator==(const ModelBundle&) const = default;
};

std::string serialize_model(const LinearModel& model);
LinearModel parse_model(std::string_view text);
std::string serialize_bundle(const ModelBundle& bundle);
ModelBundle parse_bundle(std::string_view text);

}  // namespace protogram

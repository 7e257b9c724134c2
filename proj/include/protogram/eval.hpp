#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "protogram/annotation.hpp"
#include "protogram/corpus.hpp"
#include "protogram/zsl.hpp"

namespace protogram {

struct MentionMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

// Precision is reported as 0 when nothing was predicted, recall as 0 when
// there is no gold; F1 is 0 whenever precision + recall is 0.
MentionMetrics mention_metrics(std::size_t tp, std::size_t fp, std::size_t fn);

// Exact span and case-folded type name match.
MentionMetrics eval_mentions(const std::vector<Mention>& predicted,
                             const std::vector<GoldMention>& gold);

struct PropertyMetrics {
  double s_tpr = 0.0;
  double c_fpr = 0.0;
  std::size_t gold_spans = 0;
  std::size_t hit_spans = 0;
  std::size_t false_chunks = 0;
  std::size_t negative_chunks = 0;
};

PropertyMetrics property_metrics(std::size_t hit_spans, std::size_t gold_spans,
                                 std::size_t false_chunks, std::size_t negative_chunks);

// A gold property is hit when any predicted chunk lies inside one of its ranges.
PropertyMetrics eval_properties(const std::vector<PropertySpan>& predicted,
                                const std::vector<GoldPropertySpan>& gold,
                                std::size_t total_negative_chunks);

// Chunks not contained in any gold property range.
std::size_t count_negative_chunks(const Document& doc, const std::vector<GoldPropertySpan>& gold);

// ---- baselines ----------------------------------------------------------

// Mention of the type with the highest |shared tokens| / |type tokens| when
// that ratio reaches threshold_percent. No overlap resolution.
std::vector<Mention> overlap_baseline(const std::vector<FieldType>& types,
                                      const std::vector<Chunk>& chunks, double threshold_percent);

// Property chunks whose best key-phrase token overlap reaches the threshold.
std::vector<PropertySpan> property_overlap_baseline(const Document& doc, double threshold_percent);

enum class RbVariant { kRB1, kRB2 };

LinearModel rb_weights(std::span<const LabeledVector> pairs, RbVariant variant);

// ---- corpus + leave-one-protocol-out ----------------------------------------

struct CorpusDocument {
  Document doc;
  AnnotationSet annotations;
};

// <dir>/<id>.txt with <dir>/<id>.ann.jsonl
CorpusDocument load_corpus_document(const std::filesystem::path& dir, const std::string& id);
std::vector<CorpusDocument> load_corpus(const std::filesystem::path& dir,
                                        const std::vector<std::string>& ids);

struct LoocvConfig {
  std::uint64_t seed = 7;
  TrainOptions train;
  std::size_t negatives_per_positive = 5;
  std::vector<double> overlap_thresholds{50, 70, 85, 100};
};

// Pairs from every document except the held-out one.
TrainingSet build_training_set(const std::vector<CorpusDocument>& corpus, std::size_t held_out,
                               const LoocvConfig& config);

ModelBundle train_bundle(const TrainingSet& set, const LoocvConfig& config);

struct MethodResult {
  std::string method;
  MentionMetrics metrics;
};

struct PropertyResult {
  std::string method;
  PropertyMetrics metrics;
};

struct FoldReport {
  std::string protocol;
  std::optional<std::string> error;
  std::size_t gold_types = 0;
  std::size_t extracted_types = 0;
  double type_accuracy = 0.0;
  std::size_t training_pairs = 0;
  double train_seconds = 0.0;  // not part of the written report
  // condition ("K" / "E") -> method rows
  std::map<std::string, std::vector<MethodResult>> mentions;
  std::vector<PropertyResult> properties;
  std::set<std::string> observed_tokens;  // training-time token log
};

struct LoocvReport {
  std::vector<FoldReport> folds;
  std::map<std::string, std::vector<MethodResult>> total_mentions;
  std::vector<PropertyResult> total_properties;
  double mean_type_accuracy = 0.0;
};

FoldReport run_fold(const std::vector<CorpusDocument>& corpus, std::size_t held_out,
                    const LoocvConfig& config);
LoocvReport loocv(const std::vector<CorpusDocument>& corpus, const LoocvConfig& config);

const MethodResult* find_method(const std::vector<MethodResult>& rows, const std::string& method);
const PropertyResult* find_method(const std::vector<PropertyResult>& rows, const std::string& method);

std::string report_json(const LoocvReport& report);
std::string report_table(const LoocvReport& report);

}  // namespace protogram

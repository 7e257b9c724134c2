#include "protogram/zsl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "protogram/error.hpp"
#include "protogram/rng.hpp"
#include "protogram/text.hpp"

namespace protogram {

namespace {

constexpr int kModelFormatVersion = 1;

void check_catalog(const LinearModel& model, const FeatureVector& fv) {
  if (fv.catalog != model.catalog || fv.catalog_version != model.catalog_version ||
      fv.bits.size() + 1 != model.weights.size())
    throw Error(ErrorKind::kCatalogMismatch,
                "feature vector catalog " + std::string(to_string(fv.catalog)) + " v" +
                    std::to_string(fv.catalog_version) + " does not match model catalog " +
                    std::string(to_string(model.catalog)) + " v" +
                    std::to_string(model.catalog_version));
}

std::vector<std::string> lower_words(const Sentence& s) {
  std::vector<std::string> out;
  for (const auto& t : s.tokens)
    if (!t.is_punct) out.push_back(text::to_lower(t.text));
  return out;
}

std::size_t count_occurrences(const std::vector<std::string>& hay,
                              const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i)
    if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) ++n;
  return n;
}

// FNV-1a; std::hash differs between standard libraries.
std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seeded sample of k items (order preserved from the shuffled pool).
template <typename T>
std::vector<T> sample(std::vector<T> pool, std::size_t k, Rng& rng) {
  rng.shuffle(pool);
  if (pool.size() > k) pool.resize(k);
  return pool;
}

nlohmann::json model_to_json(const LinearModel& m) {
  nlohmann::json j;
  j["catalog"] = std::string(to_string(m.catalog));
  j["catalog_version"] = m.catalog_version;
  j["features"] = m.feature_names;
  j["weights"] = m.weights;
  j["margin_threshold"] = m.margin_threshold;
  j["training_meta"] = {{"protocols", m.meta.protocols},
                        {"seed", m.meta.seed},
                        {"epochs", m.meta.epochs}};
  return j;
}

LinearModel model_from_json(const nlohmann::json& j) {
  LinearModel m;
  const std::string catalog = j.at("catalog").get<std::string>();
  if (catalog == "mention") {
    m.catalog = CatalogId::kMention;
  } else if (catalog == "property") {
    m.catalog = CatalogId::kProperty;
  } else {
    throw Error(ErrorKind::kSyntax, "unknown model catalog '" + catalog + "'");
  }
  m.catalog_version = j.at("catalog_version").get<int>();
  m.feature_names = j.at("features").get<std::vector<std::string>>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.margin_threshold = j.at("margin_threshold").get<double>();
  const auto& meta = j.at("training_meta");
  m.meta.protocols = meta.at("protocols").get<std::vector<std::string>>();
  m.meta.seed = meta.at("seed").get<std::uint64_t>();
  m.meta.epochs = meta.at("epochs").get<int>();
  const auto& expected = catalog_for(m.catalog);
  if (m.catalog_version != expected.version || m.feature_names != expected.names)
    throw Error(ErrorKind::kCatalogMismatch,
                "model feature catalog does not match this build's " + catalog + " catalog");
  if (m.weights.size() != m.feature_names.size() + 1)
    throw Error(ErrorKind::kSyntax, "model weight count must be feature count + 1");
  for (double w : m.weights)
    if (!std::isfinite(w)) throw Error(ErrorKind::kSyntax, "model weights must be finite");
  return m;
}

nlohmann::json parse_json_text(std::string_view text, std::string_view what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kSyntax, std::string(what) + ": " + e.what());
  }
}

}  // namespace

LinearModel make_model(CatalogId catalog) {
  const auto& c = catalog_for(catalog);
  LinearModel m;
  m.catalog = catalog;
  m.catalog_version = c.version;
  m.feature_names = c.names;
  m.weights.assign(c.size() + 1, 0.0);
  return m;
}

LinearModel train(std::span<const LabeledVector> pairs, std::uint64_t seed, int epochs) {
  TrainOptions options;
  options.epochs = epochs;
  return train(pairs, seed, options);
}

LinearModel train(std::span<const LabeledVector> pairs, std::uint64_t seed,
                  const TrainOptions& options) {
  if (pairs.empty()) throw Error(ErrorKind::kDegenerateTraining, "no training pairs");
  const bool has_pos = std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.label > 0; });
  const bool has_neg = std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.label < 0; });
  if (!has_pos || !has_neg)
    throw Error(ErrorKind::kDegenerateTraining,
                "training needs at least one positive and one negative pair");

  LinearModel model = make_model(pairs.front().features.catalog);
  model.margin_threshold = options.margin_threshold;
  model.meta.seed = seed;
  model.meta.epochs = options.epochs;
  for (const auto& p : pairs) check_catalog(model, p.features);

  const std::size_t dims = model.weights.size() - 1;
  std::vector<double>& w = model.weights;
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::uint64_t step = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      ++step;
      const double eta = options.learning_rate /
                         (1.0 + options.learning_rate * options.lambda * static_cast<double>(step));
      const auto& p = pairs[idx];
      const double y = p.label > 0 ? 1.0 : -1.0;
      double s = w[dims];
      for (std::size_t k = 0; k < dims; ++k)
        if (p.features.bits[k]) s += w[k];
      const double shrink = 1.0 - eta * options.lambda;
      for (std::size_t k = 0; k < dims; ++k) w[k] *= shrink;
      if (y * s < 1.0) {
        for (std::size_t k = 0; k < dims; ++k)
          if (p.features.bits[k]) w[k] += eta * y;
        w[dims] += eta * y;
      }
    }
  }
  return model;
}

double score(const LinearModel& model, const FeatureVector& fv) {
  check_catalog(model, fv);
  double s = model.bias();
  for (std::size_t k = 0; k < fv.bits.size(); ++k)
    if (fv.bits[k]) s += model.weights[k];
  return s;
}

std::vector<Mention> resolve_overlaps(std::vector<Mention> candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const Mention& a, const Mention& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.span.length() != b.span.length()) return a.span.length() > b.span.length();
    return a.span.start < b.span.start;
  });
  std::vector<Mention> kept;
  for (auto& c : candidates) {
    const bool clash = std::any_of(kept.begin(), kept.end(),
                                   [&](const Mention& k) { return k.span.overlaps(c.span); });
    if (!clash) kept.push_back(std::move(c));
  }
  std::sort(kept.begin(), kept.end(),
            [](const Mention& a, const Mention& b) { return a.span < b.span; });
  return kept;
}

std::vector<Mention> identify_mentions(const LinearModel& model, const Document& doc,
                                       const std::vector<FieldType>& types) {
  if (types.empty()) throw Error(ErrorKind::kEmptyTypes, "mention identification needs field types");
  return identify_mentions(model, doc, types, featurize_document(doc, types));
}

std::vector<Mention> identify_mentions(const LinearModel& model, const Document& doc,
                                       const std::vector<FieldType>& types,
                                       const MentionFeatureMatrix& features) {
  if (types.empty()) throw Error(ErrorKind::kEmptyTypes, "mention identification needs field types");
  std::vector<Mention> candidates;
  for (std::size_t c = 0; c < doc.chunks.size(); ++c) {
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t t = 0; t < types.size(); ++t) {
      const double s = score(model, features.at(c, t));
      if (t == 0 || s > best_score) {
        best = t;
        best_score = s;
      }
    }
    if (best_score >= model.margin_threshold)
      candidates.push_back({c, doc.chunks[c].span, best, types[best].name, best_score});
  }
  return resolve_overlaps(std::move(candidates));
}

std::vector<FeatureVector> featurize_properties(const Document& doc) {
  std::vector<FeatureVector> out;
  out.reserve(doc.chunks.size());
  for (const auto& c : doc.chunks) out.push_back(featurize_property(doc, c));
  return out;
}

std::vector<PropertySpan> identify_property_spans(const LinearModel& model, const Document& doc) {
  return identify_property_spans(model, doc, featurize_properties(doc));
}

std::vector<PropertySpan> identify_property_spans(const LinearModel& model, const Document& doc,
                                                  const std::vector<FeatureVector>& features) {
  std::vector<PropertySpan> out;
  for (std::size_t c = 0; c < doc.chunks.size(); ++c) {
    const double s = score(model, features[c]);
    if (s >= model.margin_threshold) out.push_back({c, doc.chunks[c].span, s, std::nullopt, std::nullopt});
  }
  return out;
}

std::vector<std::size_t> key_phrase_counts(const Sentence& sentence) {
  const auto words = lower_words(sentence);
  std::vector<std::size_t> counts;
  for (auto k : all_property_kinds()) {
    std::size_t n = 0;
    for (const auto& p : key_phrases(k)) n += count_occurrences(words, p) * p.size();
    counts.push_back(n);
  }
  return counts;
}

PropertyKind assign_property_kind(const Document& doc, const PropertySpan& span) {
  const auto& chunk = doc.chunks.at(span.chunk_index);
  const auto counts = key_phrase_counts(doc.sentence_of(chunk));
  std::optional<PropertyKind> best;
  std::size_t best_count = 0;
  for (auto k : property_priority_order()) {
    const std::size_t n = counts[static_cast<std::size_t>(k)];
    if (n > best_count) {
      best = k;
      best_count = n;
    }
  }
  if (!best)
    throw Error(ErrorKind::kUnassignableKind,
                "no property key phrase in the sentence of chunk '" + chunk.joined() + "'");
  return *best;
}

std::size_t resolve_property_argument(const PropertySpan& span, const Document& doc,
                                      const std::vector<FieldType>& types) {
  const auto& chunk = doc.chunks.at(span.chunk_index);
  std::optional<std::size_t> section = chunk.section_index;
  while (section) {
    const Section& s = doc.sections.at(*section);
    std::optional<std::size_t> best;
    for (std::size_t t = 0; t < types.size(); ++t) {
      if (!text::contains_ci(s.title, types[t].name)) continue;
      if (!best || types[t].name.size() > types[*best].name.size()) best = t;
    }
    if (best) return *best;
    section = s.parent;
  }
  throw Error(ErrorKind::kUnresolvedArgument,
              "no field type named in the section titles enclosing '" + chunk.joined() + "'");
}

void add_training_document(TrainingSet& set, const Document& doc,
                           const AnnotationSet& annotations, const PairOptions& options) {
  Rng rng(text::splitmix64(options.seed ^ stable_hash(doc.raw.protocol_id)));
  set.protocols.push_back(doc.raw.protocol_id);
  const auto& types = annotations.gold_types;
  for (const auto& t : types)
    for (const auto& w : phrase_tokens(t.name)) set.observed_tokens.insert(w);

  // ---- mention pairs ----
  std::map<CharSpan, std::size_t> chunk_at;
  for (std::size_t i = 0; i < doc.chunks.size(); ++i) chunk_at.emplace(doc.chunks[i].span, i);
  std::map<std::size_t, std::size_t> gold_type_of_chunk;
  for (const auto& m : annotations.gold_mentions) {
    auto it = chunk_at.find(m.span);
    auto type_it = std::find_if(types.begin(), types.end(),
                                [&](const FieldType& t) { return text::equals_ci(t.name, m.type_name); });
    if (it == chunk_at.end() || type_it == types.end()) {
      ++set.unaligned_mentions;
      continue;
    }
    gold_type_of_chunk[it->second] = static_cast<std::size_t>(type_it - types.begin());
  }

  if (!types.empty()) {
    const MentionFeatureMatrix features = featurize_document(doc, types);
    struct PairRef {
      std::size_t chunk, type;
    };
    std::vector<PairRef> positives, other_type, hard, easy;
    for (const auto& [c, t] : gold_type_of_chunk) {
      positives.push_back({c, t});
      for (std::size_t o = 0; o < types.size(); ++o)
        if (o != t) other_type.push_back({c, o});
    }
    std::vector<std::size_t> gold_type_indices;
    for (std::size_t t = 0; t < types.size(); ++t) gold_type_indices.push_back(t);
    for (std::size_t c = 0; c < doc.chunks.size(); ++c) {
      if (gold_type_of_chunk.count(c)) continue;
      for (std::size_t t : gold_type_indices) {
        const auto& fv = features.at(c, t);
        // jaccard>0, acronym, alias, anaphor or section-title cues make a negative hard.
        const bool is_hard = fv.bits[3] || fv.bits[1] || fv.bits[2] || fv.bits[7] || fv.bits[8] ||
                             fv.bits[16] || fv.bits[18];
        (is_hard ? hard : easy).push_back({c, t});
      }
    }
    const std::size_t budget = positives.size() * options.negatives_per_positive;
    std::vector<PairRef> negatives = sample(hard, budget / 2, rng);
    auto more = sample(other_type, (budget - negatives.size()) / 2, rng);
    negatives.insert(negatives.end(), more.begin(), more.end());
    more = sample(easy, budget - negatives.size(), rng);
    negatives.insert(negatives.end(), more.begin(), more.end());

    auto record = [&](const PairRef& p, int label) {
      set.mention_pairs.push_back({features.at(p.chunk, p.type), label});
      for (const auto& tok : doc.chunks[p.chunk].tokens) set.observed_tokens.insert(text::to_lower(tok));
    };
    for (const auto& p : positives) record(p, +1);
    for (const auto& p : negatives) record(p, -1);
  }

  // ---- property pairs ----
  std::vector<std::size_t> pos, hard_neg, easy_neg;
  for (std::size_t c = 0; c < doc.chunks.size(); ++c) {
    const auto& span = doc.chunks[c].span;
    bool inside = false;
    for (const auto& g : annotations.gold_property_spans)
      for (const auto& s : g.spans)
        if (s.contains(span)) inside = true;
    if (inside) {
      pos.push_back(c);
      continue;
    }
    const auto fv = featurize_property(doc, doc.chunks[c]);
    (fv.bits[0] ? hard_neg : easy_neg).push_back(c);
  }
  const std::size_t budget = pos.size() * options.negatives_per_positive;
  std::vector<std::size_t> negs = sample(hard_neg, budget / 2, rng);
  auto more = sample(easy_neg, budget - negs.size(), rng);
  negs.insert(negs.end(), more.begin(), more.end());
  auto record = [&](std::size_t c, int label) {
    set.property_pairs.push_back({featurize_property(doc, doc.chunks[c]), label});
    for (const auto& tok : doc.chunks[c].tokens) set.observed_tokens.insert(text::to_lower(tok));
  };
  for (std::size_t c : pos) record(c, +1);
  for (std::size_t c : negs) record(c, -1);
}

std::string serialize_model(const LinearModel& model) {
  nlohmann::json j = model_to_json(model);
  j["format"] = "protogram-model";
  j["format_version"] = kModelFormatVersion;
  return j.dump(2) + "\n";
}

LinearModel parse_model(std::string_view text) {
  const auto j = parse_json_text(text, "model file");
  try {
    return model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kSyntax, std::string("model file: ") + e.what());
  }
}

std::string serialize_bundle(const ModelBundle& bundle) {
  nlohmann::json j;
  j["format"] = "protogram-model-bundle";
  j["format_version"] = kModelFormatVersion;
  j["mention"] = model_to_json(bundle.mention);
  j["property"] = model_to_json(bundle.property);
  return j.dump(2) + "\n";
}

ModelBundle parse_bundle(std::string_view text) {
  const auto j = parse_json_text(text, "model bundle");
  try {
    if (j.at("format").get<std::string>() != "protogram-model-bundle")
      throw Error(ErrorKind::kSyntax, "not a model bundle file");
    if (j.at("format_version").get<int>() != kModelFormatVersion)
      throw Error(ErrorKind::kSyntax, "unsupported model bundle version");
    ModelBundle b;
    b.mention = model_from_json(j.at("mention"));
    b.property = model_from_json(j.at("property"));
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kSyntax, std::string("model bundle: ") + e.what());
  }
}

}  // namespace protogram

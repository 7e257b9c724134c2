#include "protogram/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "protogram/error.hpp"
#include "protogram/text.hpp"
#include "protogram/type_extraction.hpp"

namespace protogram {

namespace {

using nlohmann::json;

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::kLoad, "cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lower_tokens(const std::vector<std::string>& toks) {
  std::vector<std::string> out;
  for (const auto& t : toks) out.push_back(text::to_lower(t));
  return out;
}

std::string method_name(double threshold) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "O>=%g", threshold);
  return buf;
}

std::vector<Mention> safe_mentions(const LinearModel& model, const Document& doc,
                                   const std::vector<FieldType>& types) {
  if (types.empty()) return {};
  return identify_mentions(model, doc, types);
}

json mention_json(const MentionMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
          {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn}};
}

json property_json(const PropertyMetrics& m) {
  return {{"s_tpr", m.s_tpr},
          {"c_fpr", m.c_fpr},
          {"gold_spans", m.gold_spans},
          {"hit_spans", m.hit_spans},
          {"false_chunks", m.false_chunks},
          {"negative_chunks", m.negative_chunks}};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

}  // namespace

MentionMetrics mention_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
  MentionMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

MentionMetrics eval_mentions(const std::vector<Mention>& predicted, const std::vector<GoldMention>& gold) {
  std::map<CharSpan, std::vector<std::string>> gold_at;
  for (const auto& g : gold) gold_at[g.span].push_back(text::to_lower(g.type_name));
  std::size_t tp = 0;
  std::set<std::pair<CharSpan, std::string>> matched;
  for (const auto& p : predicted) {
    const auto it = gold_at.find(p.span);
    const auto name = text::to_lower(p.type_name);
    if (it != gold_at.end() && std::find(it->second.begin(), it->second.end(), name) != it->second.end() &&
        matched.insert({p.span, name}).second)
      ++tp;
  }
  return mention_metrics(tp, predicted.size() - tp, gold.size() - tp);
}

PropertyMetrics property_metrics(std::size_t hit_spans, std::size_t gold_spans, std::size_t false_chunks,
                                 std::size_t negative_chunks) {
  PropertyMetrics m;
  m.hit_spans = hit_spans;
  m.gold_spans = gold_spans;
  m.false_chunks = false_chunks;
  m.negative_chunks = negative_chunks;
  m.s_tpr = ratio(hit_spans, gold_spans);
  m.c_fpr = ratio(false_chunks, negative_chunks);
  return m;
}

PropertyMetrics eval_properties(const std::vector<PropertySpan>& predicted,
                                const std::vector<GoldPropertySpan>& gold, std::size_t total_negative_chunks) {
  if (gold.empty()) throw Error(ErrorKind::kUndefinedMetric, "S-TPR is undefined without gold property spans");
  std::size_t hits = 0;
  for (const auto& g : gold) {
    const bool hit = std::any_of(predicted.begin(), predicted.end(), [&](const PropertySpan& p) {
      return std::any_of(g.spans.begin(), g.spans.end(), [&](const CharSpan& s) { return s.contains(p.span); });
    });
    hits += hit ? 1 : 0;
  }
  std::size_t false_chunks = 0;
  for (const auto& p : predicted) {
    const bool inside = std::any_of(gold.begin(), gold.end(), [&](const GoldPropertySpan& g) {
      return std::any_of(g.spans.begin(), g.spans.end(), [&](const CharSpan& s) { return s.contains(p.span); });
    });
    false_chunks += inside ? 0 : 1;
  }
  return property_metrics(hits, gold.size(), false_chunks, total_negative_chunks);
}

std::size_t count_negative_chunks(const Document& doc, const std::vector<GoldPropertySpan>& gold) {
  std::size_t n = 0;
  for (const auto& c : doc.chunks) {
    const bool inside = std::any_of(gold.begin(), gold.end(), [&](const GoldPropertySpan& g) {
      return std::any_of(g.spans.begin(), g.spans.end(), [&](const CharSpan& s) { return s.contains(c.span); });
    });
    n += inside ? 0 : 1;
  }
  return n;
}

std::vector<Mention> overlap_baseline(const std::vector<FieldType>& types, const std::vector<Chunk>& chunks,
                                      double threshold_percent) {
  std::vector<std::set<std::string>> type_tokens;
  for (const auto& t : types) {
    const auto toks = phrase_tokens(t.name);
    type_tokens.emplace_back(toks.begin(), toks.end());
  }
  std::vector<Mention> out;
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    const auto toks = lower_tokens(chunks[c].tokens);
    const std::set<std::string> cs(toks.begin(), toks.end());
    std::optional<std::size_t> best;
    double best_ratio = 0.0;
    for (std::size_t t = 0; t < types.size(); ++t) {
      if (type_tokens[t].empty()) continue;
      std::size_t shared = 0;
      for (const auto& w : type_tokens[t]) shared += cs.count(w);
      const double r = static_cast<double>(shared) / static_cast<double>(type_tokens[t].size());
      if (r > best_ratio) {
        best = t;
        best_ratio = r;
      }
    }
    // Compare in integer percent space to avoid 0.7 * 100 rounding artefacts.
    if (best && best_ratio * 100.0 + 1e-9 >= threshold_percent)
      out.push_back({c, chunks[c].span, *best, types[*best].name, best_ratio});
  }
  return out;
}

std::vector<PropertySpan> property_overlap_baseline(const Document& doc, double threshold_percent) {
  std::vector<PropertySpan> out;
  for (std::size_t c = 0; c < doc.chunks.size(); ++c) {
    const auto toks = lower_tokens(doc.chunks[c].tokens);
    const std::set<std::string> cs(toks.begin(), toks.end());
    double best = 0.0;
    for (auto k : all_property_kinds())
      for (const auto& p : key_phrases(k)) {
        std::size_t shared = 0;
        for (const auto& w : p) shared += cs.count(w);
        best = std::max(best, static_cast<double>(shared) / static_cast<double>(p.size()));
      }
    if (best > 0.0 && best * 100.0 + 1e-9 >= threshold_percent)
      out.push_back({c, doc.chunks[c].span, best, std::nullopt, std::nullopt});
  }
  return out;
}

LinearModel rb_weights(std::span<const LabeledVector> pairs, RbVariant variant) {
  if (pairs.empty()) throw Error(ErrorKind::kDegenerateTraining, "rule-based weights need training pairs");
  LinearModel model = make_model(pairs.front().features.catalog);
  const std::size_t dims = model.weights.size() - 1;
  std::vector<std::size_t> pos_count(dims, 0), neg_count(dims, 0);
  std::size_t pos = 0, neg = 0;
  for (const auto& p : pairs) {
    if (p.features.bits.size() != dims)
      throw Error(ErrorKind::kCatalogMismatch, "rule-based weights: mixed feature catalogs");
    auto& counts = p.label > 0 ? pos_count : neg_count;
    (p.label > 0 ? pos : neg) += 1;
    for (std::size_t k = 0; k < dims; ++k) counts[k] += p.features.bits[k];
  }
  for (std::size_t k = 0; k < dims; ++k) {
    const double pr = ratio(pos_count[k], pos);
    const double nr = ratio(neg_count[k], neg);
    double w = 0.0;
    if (variant == RbVariant::kRB1) {
      if (pr > nr) w = pr;
      if (nr > pr) w = -nr;
    } else {
      if (pr > nr) w = 1.0;
      if (nr > pr) w = -1.0;
    }
    model.weights[k] = w;
  }
  // The bias input is always on, so its negative rate is 1 (or 0 with no negatives).
  model.weights[dims] = variant == RbVariant::kRB1 ? -(neg > 0 ? 1.0 : 0.0) : -1.0;
  return model;
}

CorpusDocument load_corpus_document(const std::filesystem::path& dir, const std::string& id) {
  CorpusDocument cd{ingest(dir / (id + ".txt"), id), {}};
  cd.annotations = parse_annotations(read_file(dir / (id + ".ann.jsonl")));
  if (cd.annotations.protocol_id.empty()) cd.annotations.protocol_id = id;
  if (cd.annotations.protocol_id != id)
    throw Error(ErrorKind::kLoad, "annotations in '" + id + ".ann.jsonl' belong to '" +
                                      cd.annotations.protocol_id + "'");
  validate_annotations(cd.annotations, cd.doc.raw);
  return cd;
}

std::vector<CorpusDocument> load_corpus(const std::filesystem::path& dir, const std::vector<std::string>& ids) {
  std::vector<CorpusDocument> out;
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw Error(ErrorKind::kConfiguration, "protocol '" + id + "' listed twice");
    out.push_back(load_corpus_document(dir, id));
  }
  return out;
}

TrainingSet build_training_set(const std::vector<CorpusDocument>& corpus, std::size_t held_out,
                               const LoocvConfig& config) {
  TrainingSet set;
  PairOptions opts;
  opts.seed = config.seed;
  opts.negatives_per_positive = config.negatives_per_positive;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (i == held_out) continue;
    add_training_document(set, corpus[i].doc, corpus[i].annotations, opts);
  }
  return set;
}

ModelBundle train_bundle(const TrainingSet& set, const LoocvConfig& config) {
  ModelBundle b;
  b.mention = train(set.mention_pairs, config.seed, config.train);
  b.property = train(set.property_pairs, config.seed + 1, config.train);
  b.mention.meta.protocols = set.protocols;
  b.property.meta.protocols = set.protocols;
  b.property.meta.seed = config.seed;
  return b;
}

FoldReport run_fold(const std::vector<CorpusDocument>& corpus, std::size_t held_out, const LoocvConfig& config) {
  const auto& test = corpus.at(held_out);
  FoldReport fold;
  fold.protocol = test.doc.raw.protocol_id;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    TrainingSet set = build_training_set(corpus, held_out, config);
    const ModelBundle models = train_bundle(set, config);
    fold.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fold.training_pairs = set.mention_pairs.size() + set.property_pairs.size();
    fold.observed_tokens = std::move(set.observed_tokens);
    const LinearModel rb1 = rb_weights(set.mention_pairs, RbVariant::kRB1);
    const LinearModel rb2 = rb_weights(set.mention_pairs, RbVariant::kRB2);

    const auto& gold_types = test.annotations.gold_types;
    const auto extracted = extract_entity_types(test.doc.raw, test.doc.sections);
    fold.gold_types = gold_types.size();
    fold.extracted_types = extracted.size();
    fold.type_accuracy = gold_types.empty() ? 0.0 : type_extraction_accuracy(extracted, gold_types);

    const auto& gold = test.annotations.gold_mentions;
    for (const auto& [cond, types] : {std::pair<std::string, const std::vector<FieldType>*>{"K", &gold_types},
                                      {"E", &extracted}}) {
      auto& rows = fold.mentions[cond];
      rows.push_back({"ZSL", eval_mentions(safe_mentions(models.mention, test.doc, *types), gold)});
      for (double t : config.overlap_thresholds)
        rows.push_back({method_name(t), eval_mentions(overlap_baseline(*types, test.doc.chunks, t), gold)});
      rows.push_back({"RB1", eval_mentions(safe_mentions(rb1, test.doc, *types), gold)});
      rows.push_back({"RB2", eval_mentions(safe_mentions(rb2, test.doc, *types), gold)});
    }

    const auto& gold_props = test.annotations.gold_property_spans;
    if (!gold_props.empty()) {
      const std::size_t negatives = count_negative_chunks(test.doc, gold_props);
      const auto features = featurize_properties(test.doc);
      fold.properties.push_back(
          {"ZSL", eval_properties(identify_property_spans(models.property, test.doc, features), gold_props, negatives)});
      for (double t : config.overlap_thresholds)
        fold.properties.push_back(
            {method_name(t), eval_properties(property_overlap_baseline(test.doc, t), gold_props, negatives)});
      const LinearModel prb1 = rb_weights(set.property_pairs, RbVariant::kRB1);
      const LinearModel prb2 = rb_weights(set.property_pairs, RbVariant::kRB2);
      fold.properties.push_back(
          {"RB1", eval_properties(identify_property_spans(prb1, test.doc, features), gold_props, negatives)});
      fold.properties.push_back(
          {"RB2", eval_properties(identify_property_spans(prb2, test.doc, features), gold_props, negatives)});
    }
  } catch (const Error& e) {
    fold.error = std::string(to_string(e.kind())) + ": " + e.what();
  }
  return fold;
}

LoocvReport loocv(const std::vector<CorpusDocument>& corpus, const LoocvConfig& config) {
  if (corpus.size() < 2)
    throw Error(ErrorKind::kConfiguration, "leave-one-out evaluation needs at least two annotated documents");
  LoocvReport report;
  for (std::size_t i = 0; i < corpus.size(); ++i) report.folds.push_back(run_fold(corpus, i, config));

  std::map<std::string, std::map<std::string, std::array<std::size_t, 3>>> sums;
  std::map<std::string, std::vector<std::string>> method_order;
  std::map<std::string, std::array<std::size_t, 4>> psums;
  std::vector<std::string> porder;
  double acc = 0.0;
  std::size_t ok = 0;
  for (const auto& f : report.folds) {
    if (f.error) continue;
    ++ok;
    acc += f.type_accuracy;
    for (const auto& [cond, rows] : f.mentions)
      for (const auto& r : rows) {
        auto [it, inserted] = sums[cond].try_emplace(r.method, std::array<std::size_t, 3>{0, 0, 0});
        if (inserted) method_order[cond].push_back(r.method);
        it->second[0] += r.metrics.tp;
        it->second[1] += r.metrics.fp;
        it->second[2] += r.metrics.fn;
      }
    for (const auto& r : f.properties) {
      auto [it, inserted] = psums.try_emplace(r.method, std::array<std::size_t, 4>{0, 0, 0, 0});
      if (inserted) porder.push_back(r.method);
      it->second[0] += r.metrics.hit_spans;
      it->second[1] += r.metrics.gold_spans;
      it->second[2] += r.metrics.false_chunks;
      it->second[3] += r.metrics.negative_chunks;
    }
  }
  for (const auto& [cond, order] : method_order)
    for (const auto& m : order) {
      const auto& s = sums[cond][m];
      report.total_mentions[cond].push_back({m, mention_metrics(s[0], s[1], s[2])});
    }
  for (const auto& m : porder) {
    const auto& s = psums[m];
    report.total_properties.push_back({m, property_metrics(s[0], s[1], s[2], s[3])});
  }
  report.mean_type_accuracy = ok ? acc / static_cast<double>(ok) : 0.0;
  return report;
}

const MethodResult* find_method(const std::vector<MethodResult>& rows, const std::string& method) {
  for (const auto& r : rows)
    if (r.method == method) return &r;
  return nullptr;
}

const PropertyResult* find_method(const std::vector<PropertyResult>& rows, const std::string& method) {
  for (const auto& r : rows)
    if (r.method == method) return &r;
  return nullptr;
}

std::string report_json(const LoocvReport& report) {
  json j;
  j["folds"] = json::array();
  auto mention_rows = [](const std::map<std::string, std::vector<MethodResult>>& by_cond) {
    json out = json::object();
    for (const auto& [cond, rows] : by_cond) {
      json arr = json::array();
      for (const auto& r : rows) {
        json row = mention_json(r.metrics);
        row["method"] = r.method;
        arr.push_back(std::move(row));
      }
      out[cond] = std::move(arr);
    }
    return out;
  };
  auto property_rows = [](const std::vector<PropertyResult>& rows) {
    json arr = json::array();
    for (const auto& r : rows) {
      json row = property_json(r.metrics);
      row["method"] = r.method;
      arr.push_back(std::move(row));
    }
    return arr;
  };
  for (const auto& f : report.folds) {
    json fj{{"protocol", f.protocol},
            {"gold_types", f.gold_types},
            {"extracted_types", f.extracted_types},
            {"type_accuracy", f.type_accuracy},
            {"training_pairs", f.training_pairs},
            {"observed_token_count", f.observed_tokens.size()},
            {"mentions", mention_rows(f.mentions)},
            {"properties", property_rows(f.properties)}};
    if (f.error) fj["error"] = *f.error;
    j["folds"].push_back(std::move(fj));
  }
  j["total"] = {{"mentions", mention_rows(report.total_mentions)},
                {"properties", property_rows(report.total_properties)},
                {"mean_type_accuracy", report.mean_type_accuracy}};
  return j.dump(2) + "\n";
}

std::string report_table(const LoocvReport& report) {
  std::ostringstream out;
  for (const std::string cond : {"K", "E"}) {
    out << "Entity mention identification (" << cond << ")\n";
    out << pad("Protocol", 12) << pad("Method", 9) << pad("Prec", 7) << pad("Recall", 7) << pad("F1", 7)
        << pad("TP", 6) << pad("FP", 6) << "FN\n";
    auto emit = [&](const std::string& proto, const std::vector<MethodResult>& rows) {
      for (const auto& r : rows)
        out << pad(proto, 12) << pad(r.method, 9) << pad(fmt("%.2f", r.metrics.precision), 7)
            << pad(fmt("%.2f", r.metrics.recall), 7) << pad(fmt("%.2f", r.metrics.f1), 7)
            << pad(std::to_string(r.metrics.tp), 6) << pad(std::to_string(r.metrics.fp), 6) << r.metrics.fn << "\n";
    };
    for (const auto& f : report.folds) {
      if (f.error) {
        out << pad(f.protocol, 12) << "error: " << *f.error << "\n";
        continue;
      }
      const auto it = f.mentions.find(cond);
      if (it != f.mentions.end()) emit(f.protocol, it->second);
    }
    const auto it = report.total_mentions.find(cond);
    if (it != report.total_mentions.end()) emit("Total (" + cond + ")", it->second);
    out << "\n";
  }
  out << "Property extraction\n";
  out << pad("Protocol", 12) << pad("Method", 9) << pad("S-TPR", 7) << "C-FPR\n";
  auto emit_p = [&](const std::string& proto, const std::vector<PropertyResult>& rows) {
    for (const auto& r : rows)
      out << pad(proto, 12) << pad(r.method, 9) << pad(fmt("%.2f", r.metrics.s_tpr), 7)
          << fmt("%.2f", r.metrics.c_fpr) << "\n";
  };
  for (const auto& f : report.folds)
    if (!f.error) emit_p(f.protocol, f.properties);
  emit_p("Total", report.total_properties);
  out << "\nType extraction\n";
  for (const auto& f : report.folds)
    out << pad(f.protocol, 12) << f.extracted_types << " extracted, " << f.gold_types << " gold, accuracy "
        << fmt("%.2f", f.type_accuracy) << "\n";
  out << pad("Mean", 12) << "accuracy " << fmt("%.2f", report.mean_type_accuracy) << "\n";
  return out.str();
}

}  // namespace protogram

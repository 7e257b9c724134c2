#include "protogram/pipeline.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"
#include "protogram/error.hpp"
#include "protogram/type_extraction.hpp"

namespace protogram {

ExtractResult extract_grammar(const Document& doc, const ModelBundle& models, const ExtractOptions& options) {
  ExtractResult r;
  r.types = options.types ? *options.types : extract_entity_types(doc.raw, doc.sections);
  r.summary.sections = doc.sections.size();
  r.summary.chunks = doc.chunks.size();
  r.summary.types = r.types.size();
  if (!r.types.empty()) r.mentions = identify_mentions(models.mention, doc, r.types);
  r.summary.mentions = r.mentions.size();

  r.property_spans = identify_property_spans(models.property, doc);
  r.summary.property_spans = r.property_spans.size();
  for (auto& span : r.property_spans) {
    try {
      span.kind = assign_property_kind(doc, span);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kUnassignableKind) throw;
      ++r.summary.unassignable;
      continue;
    }
    try {
      span.argument = resolve_property_argument(span, doc, r.types);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kUnresolvedArgument) throw;
      ++r.summary.unresolved;
      continue;
    }
    const auto& chunk = doc.chunks[span.chunk_index];
    const auto& sentence = doc.sentence_of(chunk);
    r.tuples.push_back({*span.kind, r.types[*span.argument].name, span.score, Provenance::kExtracted,
                        Evidence{span.span, std::string(doc.raw.slice(sentence.span))}});
  }
  r.summary.tuples = r.tuples.size();
  r.grammar = postprocess(doc.raw.protocol_id, r.tuples, r.types, options.postprocess);
  r.summary.properties = r.grammar.properties.size();
  for (const auto& p : r.grammar.properties) r.summary.guessed += p.provenance == Provenance::kGuessed ? 1 : 0;
  return r;
}

Campaign run_campaign(const CampaignConfig& config) {
  Campaign c;
  ProtocolGrammar grammar;
  if (config.grammar) {
    grammar = *config.grammar;
  } else {
    if (config.config != FuzzConfig::kRandom)
      throw Error(ErrorKind::kConfiguration, "the " + std::string(to_string(config.config)) +
                                                 " configuration needs a grammar file");
    grammar.protocol = std::string(to_string(config.protocol));
  }
  check_grammar_for_protocol(config.protocol, grammar);
  if (config.config == FuzzConfig::kRandom) {
    c.strategies = generate_random_strategies(config.strategy_budget, config.seed);
  } else {
    c.strategies = generate_grammar_strategies(grammar, config.config, config.seed);
    if (c.strategies.size() > config.strategy_budget) c.strategies.resize(config.strategy_budget);
  }
  c.results.reserve(c.strategies.size());
  for (const auto& s : c.strategies) c.results.push_back(run_strategy(config.protocol, s, grammar, config.sim));

  auto& sum = c.summary;
  sum.protocol = std::string(to_string(config.protocol));
  sum.configuration = std::string(to_string(config.config));
  const auto cov = coverage(c.results);
  sum.strategies = cov.strategies;
  sum.unique_traces = cov.unique_traces;
  std::set<std::pair<Verdict, PacketTypeTrace>> groups;
  for (const auto& r : c.results) {
    switch (r.verdict) {
      case Verdict::kCompleted: ++sum.completed; break;
      case Verdict::kStalled: ++sum.stalled; break;
      case Verdict::kFailed: ++sum.failed; break;
    }
    if (r.attack) {
      ++sum.reported_attacks;
      if (r.attack->off_path) ++sum.off_path_attacks;
      groups.insert({r.verdict, r.trace});
    }
  }
  sum.attack_groups = groups.size();
  return c;
}

std::string summary_json(const CampaignSummary& s) {
  nlohmann::json j{{"protocol", s.protocol},
                   {"configuration", s.configuration},
                   {"strategies", s.strategies},
                   {"unique_traces", s.unique_traces},
                   {"reported_attacks", s.reported_attacks},
                   {"off_path_attacks", s.off_path_attacks},
                   {"attack_groups", s.attack_groups},
                   {"completed", s.completed},
                   {"stalled", s.stalled},
                   {"failed", s.failed}};
  return j.dump(2) + "\n";
}

std::string summary_table(const std::vector<CampaignSummary>& rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-9s%-14s%8s%12s%10s%10s%8s\n", "Protocol", "Configuration", "Traces",
                "Strategies", "Attacks", "Off-path", "Groups");
  out << line;
  for (const auto& s : rows) {
    std::snprintf(line, sizeof line, "%-9s%-14s%8zu%12zu%10zu%10zu%8zu\n", s.protocol.c_str(), s.configuration.c_str(),
                  s.unique_traces, s.strategies, s.reported_attacks, s.off_path_attacks, s.attack_groups);
    out << line;
  }
  return out.str();
}

}  // namespace protogram

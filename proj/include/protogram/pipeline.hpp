#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "protogram/corpus.hpp"
#include "protogram/fuzzer.hpp"
#include "protogram/grammar.hpp"
#include "protogram/simnet.hpp"
#include "protogram/zsl.hpp"

namespace protogram {

struct ExtractOptions {
  // Known types (the "K" condition); extracted from the document otherwise.
  std::optional<std::vector<FieldType>> types;
  PostprocessOptions postprocess;
};

struct ExtractSummary {
  std::size_t sections = 0;
  std::size_t chunks = 0;
  std::size_t types = 0;
  std::size_t mentions = 0;
  std::size_t property_spans = 0;
  std::size_t unassignable = 0;
  std::size_t unresolved = 0;
  std::size_t tuples = 0;
  std::size_t properties = 0;
  std::size_t guessed = 0;
};

struct ExtractResult {
  std::vector<FieldType> types;
  std::vector<Mention> mentions;
  std::vector<PropertySpan> property_spans;  // kind and argument filled where possible
  std::vector<PropertyTuple> tuples;         // before post-processing
  ProtocolGrammar grammar;
  ExtractSummary summary;
};

ExtractResult extract_grammar(const Document& doc, const ModelBundle& models, const ExtractOptions& options = {});

struct CampaignConfig {
  ToyProtocol protocol = ToyProtocol::kTCP;
  FuzzConfig config = FuzzConfig::kRandom;
  std::optional<ProtocolGrammar> grammar;  // required for manual / nlp
  std::uint64_t seed = 1;
  std::size_t strategy_budget = 1000;
  SimOptions sim;
};

struct CampaignSummary {
  std::string protocol;
  std::string configuration;
  std::size_t strategies = 0;
  std::size_t unique_traces = 0;
  std::size_t reported_attacks = 0;
  std::size_t off_path_attacks = 0;
  std::size_t completed = 0;
  std::size_t stalled = 0;
  std::size_t failed = 0;
  // distinct (verdict, trace) groups among reported attacks
  std::size_t attack_groups = 0;
};

struct Campaign {
  std::vector<TestStrategy> strategies;
  std::vector<RunResult> results;
  CampaignSummary summary;
};

Campaign run_campaign(const CampaignConfig& config);

std::string summary_json(const CampaignSummary& s);
std::string summary_table(const std::vector<CampaignSummary>& rows);

}  // namespace protogram

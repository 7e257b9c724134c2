// protogram: RFC text -> protocol grammar -> fuzzing campaign.
//
// Every option can also come from a flat `key = value` config file given with
// --config; keys are the long option names without the leading dashes and
// command-line flags win over the file.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "protogram/error.hpp"
#include "protogram/eval.hpp"
#include "protogram/pipeline.hpp"
#include "protogram/type_extraction.hpp"

namespace fs = std::filesystem;
using protogram::Error;
using protogram::ErrorKind;

namespace {

constexpr int kExitPipeline = 1;
constexpr int kExitConfig = 2;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StageError : std::runtime_error {
  StageError(std::string stage, const Error& e)
      : std::runtime_error(e.what()), stage(std::move(stage)), kind(e.kind()) {}
  std::string stage;
  ErrorKind kind;
};

template <class F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

struct Options {
  std::string config_file;
  std::string out_dir = "out";
  std::uint64_t seed = 7;
  int epochs = 50;
  double lambda = 1e-4;
  double learning_rate = 0.1;
  double margin_threshold = 0.0;
  std::size_t negatives_per_positive = 5;
  std::vector<double> thresholds{50, 70, 85, 100};
  std::string corpus_dir = "data/corpus";
  std::vector<std::string> documents{"tcp", "dccp", "ip", "ipv6", "gre", "sctp"};
  std::string rfc;
  std::string id;
  std::string model;
  std::string types_file;
  bool no_fallback = false;
  std::string protocol = "tcp";
  std::string configuration = "random";
  std::string grammar;
  std::size_t strategy_budget = 1000;
  int event_budget = 100;
  std::vector<std::string> summaries;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " is required");
  if (!fs::is_regular_file(path)) throw ConfigError(what + " not found: " + path);
}

class Output {
 public:
  explicit Output(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream out(dir_ / name, std::ios::binary);
    out << content;
    if (!out) throw ConfigError("cannot write " + (dir_ / name).string());
  }

 private:
  fs::path dir_;
};

// The config file verbatim plus the resolved option set.
void log_config(const Output& out, const std::string& command, const Options& o, const CLI::App& app) {
  out.write(command + ".config.txt", o.config_file.empty() ? std::string() : read_file(o.config_file));
  out.write(command + ".effective-config.txt", app.config_to_str(true, false));
}

protogram::LoocvConfig loocv_config(const Options& o) {
  protogram::LoocvConfig c;
  c.seed = o.seed;
  c.train.epochs = o.epochs;
  c.train.lambda = o.lambda;
  c.train.learning_rate = o.learning_rate;
  c.train.margin_threshold = o.margin_threshold;
  c.negatives_per_positive = o.negatives_per_positive;
  c.overlap_thresholds = o.thresholds;
  return c;
}

std::vector<protogram::CorpusDocument> load_corpus(const Options& o) {
  for (const auto& id : o.documents) {
    require_file((fs::path(o.corpus_dir) / (id + ".txt")).string(), "corpus document");
    require_file((fs::path(o.corpus_dir) / (id + ".ann.jsonl")).string(), "annotation file");
  }
  return stage("ingest", [&] { return protogram::load_corpus(o.corpus_dir, o.documents); });
}

protogram::Document ingest_rfc(const Options& o) {
  require_file(o.rfc, "RFC text file");
  if (o.id.empty()) throw ConfigError("--id is required");
  return stage("ingest", [&] { return protogram::ingest(o.rfc, o.id); });
}

int cmd_ingest(const Options& o, const Output& out) {
  const auto doc = ingest_rfc(o);
  out.write(o.id + ".normalized.txt", doc.raw.text + "\n");
  out.write(o.id + ".document.json", protogram::dump_document(doc));
  std::cout << o.id << ": " << doc.raw.lines.size() << " lines, " << doc.sections.size() << " sections, "
            << doc.chunks.size() << " chunks\n";
  return 0;
}

int cmd_extract_types(const Options& o, const Output& out) {
  const auto doc = ingest_rfc(o);
  const auto types = stage("types", [&] { return protogram::extract_entity_types(doc.raw, doc.sections); });
  out.write(o.id + ".types.json", protogram::write_types_file(types));
  std::cout << o.id << ": " << types.size() << " field types\n";
  for (const auto& t : types)
    std::cout << "  " << t.name << " " << (t.size_bits ? std::to_string(*t.size_bits) : std::string("-")) << "\n";
  return 0;
}

int cmd_train(const Options& o, const Output& out) {
  const auto corpus = load_corpus(o);
  const auto cfg = loocv_config(o);
  const auto set = stage("train", [&] { return protogram::build_training_set(corpus, corpus.size(), cfg); });
  const auto bundle = stage("train", [&] { return protogram::train_bundle(set, cfg); });
  out.write("model.json", protogram::serialize_bundle(bundle));
  std::cout << "trained on " << corpus.size() << " documents: " << set.mention_pairs.size() << " mention pairs, "
            << set.property_pairs.size() << " property pairs\n";
  return 0;
}

int cmd_extract(const Options& o, const Output& out) {
  require_file(o.model, "model file");
  const auto doc = ingest_rfc(o);
  const auto bundle = stage("model", [&] { return protogram::parse_bundle(read_file(o.model)); });
  protogram::ExtractOptions opts;
  opts.postprocess.fallback = !o.no_fallback;
  if (!o.types_file.empty()) {
    require_file(o.types_file, "types file");
    opts.types = stage("types", [&] { return protogram::parse_types_file(read_file(o.types_file)); });
  }
  const auto r = stage("extract", [&] { return protogram::extract_grammar(doc, bundle, opts); });
  out.write(o.id + ".grammar.json", protogram::serialize_grammar(r.grammar));
  const auto& s = r.summary;
  nlohmann::json j{{"protocol", o.id},       {"sections", s.sections},         {"chunks", s.chunks},
                   {"types", s.types},       {"mentions", s.mentions},         {"property_spans", s.property_spans},
                   {"unassignable", s.unassignable}, {"unresolved", s.unresolved}, {"tuples", s.tuples},
                   {"properties", s.properties},     {"guessed", s.guessed}};
  out.write(o.id + ".extract.json", j.dump(2) + "\n");
  std::cout << o.id << ": " << s.types << " types, " << s.mentions << " mentions, " << s.property_spans
            << " property spans, " << s.properties << " properties (" << s.guessed << " guessed)\n";
  for (const auto& p : r.grammar.properties)
    std::cout << "  (" << protogram::to_string(p.kind) << ", " << p.field << ")\n";
  return 0;
}

int cmd_eval_nlp(const Options& o, const Output& out) {
  if (o.documents.size() < 2) throw ConfigError("eval-nlp needs at least 2 documents");
  const auto corpus = load_corpus(o);
  const auto report = stage("eval", [&] { return protogram::loocv(corpus, loocv_config(o)); });
  out.write("report.json", protogram::report_json(report));
  const auto table = protogram::report_table(report);
  out.write("report.txt", table);
  std::cout << table;
  return 0;
}

int cmd_fuzz(const Options& o, const Output& out) {
  protogram::CampaignConfig c;
  const auto proto = protogram::parse_toy_protocol(o.protocol);
  if (!proto) throw ConfigError("unknown protocol '" + o.protocol + "' (tcp or dccp)");
  const auto config = protogram::parse_fuzz_config(o.configuration);
  if (!config) throw ConfigError("unknown configuration '" + o.configuration + "' (random, manual or nlp)");
  c.protocol = *proto;
  c.config = *config;
  c.seed = o.seed;
  c.strategy_budget = o.strategy_budget;
  c.sim.event_budget = o.event_budget;
  if (!o.grammar.empty()) {
    require_file(o.grammar, "grammar file");
    c.grammar = stage("grammar", [&] { return protogram::parse_grammar(read_file(o.grammar)); });
  } else if (c.config != protogram::FuzzConfig::kRandom) {
    throw ConfigError("the " + o.configuration + " configuration needs --grammar");
  }
  const auto campaign = stage("fuzz", [&] { return protogram::run_campaign(c); });
  const std::string stem = o.protocol + "-" + std::string(protogram::to_string(c.config));
  out.write(stem + ".strategies.json", protogram::strategies_json(campaign.strategies));
  out.write(stem + ".runs.json", protogram::run_log_json(campaign.results, campaign.strategies));
  out.write(stem + ".summary.json", protogram::summary_json(campaign.summary));
  const auto table = protogram::summary_table({campaign.summary});
  out.write(stem + ".summary.txt", table);
  std::cout << table;
  return 0;
}

protogram::CampaignSummary parse_summary(const std::string& path) {
  require_file(path, "summary file");
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    protogram::CampaignSummary s;
    s.protocol = j.at("protocol").get<std::string>();
    s.configuration = j.at("configuration").get<std::string>();
    s.strategies = j.at("strategies").get<std::size_t>();
    s.unique_traces = j.at("unique_traces").get<std::size_t>();
    s.reported_attacks = j.at("reported_attacks").get<std::size_t>();
    s.off_path_attacks = j.at("off_path_attacks").get<std::size_t>();
    s.attack_groups = j.at("attack_groups").get<std::size_t>();
    s.completed = j.at("completed").get<std::size_t>();
    s.stalled = j.at("stalled").get<std::size_t>();
    s.failed = j.at("failed").get<std::size_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw StageError("report", Error(ErrorKind::kSyntax, path + ": " + e.what()));
  }
}

int cmd_report(const Options& o, const Output& out) {
  if (o.summaries.empty()) throw ConfigError("report needs --summaries");
  std::vector<protogram::CampaignSummary> rows;
  for (const auto& p : o.summaries) rows.push_back(parse_summary(p));
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) arr.push_back(nlohmann::json::parse(protogram::summary_json(r)));
  out.write("fuzz-report.json", arr.dump(2) + "\n");
  const auto table = protogram::summary_table(rows);
  out.write("fuzz-report.txt", table);
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"protogram: grammar extraction from RFC text and grammar-based fuzzing"};
  app.fallthrough();
  app.require_subcommand(1);
  CLI::Option* config_opt = app.set_config("--config", "", "flat key = value config file; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Options o;
  app.add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", o.seed, "random seed")->capture_default_str();
  app.add_option("--epochs", o.epochs, "training epochs")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--lambda", o.lambda, "regularization strength")->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--learning-rate", o.learning_rate)->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--margin-threshold", o.margin_threshold, "decision threshold on the score")->capture_default_str();
  app.add_option("--negatives-per-positive", o.negatives_per_positive)->capture_default_str();
  app.add_option("--thresholds", o.thresholds, "overlap baseline thresholds (percent)")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--corpus-dir", o.corpus_dir, "annotated corpus directory")->capture_default_str();
  app.add_option("--documents", o.documents, "corpus document ids")->delimiter(',')->capture_default_str();
  app.add_option("--rfc", o.rfc, "RFC text file");
  app.add_option("--id", o.id, "protocol id of the RFC text");
  app.add_option("--model", o.model, "trained model bundle");
  app.add_option("--types-file", o.types_file, "known field types (overrides extraction)");
  app.add_flag("--no-fallback", o.no_fallback, "disable guessed properties");
  app.add_option("--protocol", o.protocol, "tcp or dccp")->capture_default_str();
  app.add_option("--configuration", o.configuration, "random, manual or nlp")->capture_default_str();
  app.add_option("--grammar", o.grammar, "grammar file");
  app.add_option("--strategy-budget", o.strategy_budget)->capture_default_str();
  app.add_option("--event-budget", o.event_budget)->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--summaries", o.summaries, "fuzz summary files")->delimiter(',');

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&, const Output&);
  };
  const std::vector<Command> commands{
      {"ingest", "normalize and segment an RFC text file", cmd_ingest},
      {"extract-types", "extract header field types from an RFC", cmd_extract_types},
      {"train", "train mention and property models on the annotated corpus", cmd_train},
      {"extract", "extract a protocol grammar from an RFC", cmd_extract},
      {"eval-nlp", "leave-one-protocol-out evaluation of the extraction models", cmd_eval_nlp},
      {"fuzz", "run a fuzzing campaign against the simulated protocol", cmd_fuzz},
      {"report", "tabulate fuzz summaries", cmd_report},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) subs.push_back(app.add_subcommand(c.name, c.help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (config_opt->count() > 0) o.config_file = config_opt->as<std::string>();

  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      const Output out(o.out_dir);
      log_config(out, commands[i].name, o, app);
      return commands[i].run(o, out);
    } catch (const ConfigError& e) {
      std::cerr << "configuration error: " << e.what() << "\n";
      return kExitConfig;
    } catch (const StageError& e) {
      std::cerr << "error [" << e.stage << "] " << protogram::to_string(e.kind) << ": " << e.what() << "\n";
      return e.kind == ErrorKind::kConfiguration ? kExitConfig : kExitPipeline;
    }
  }
  return kExitConfig;
}

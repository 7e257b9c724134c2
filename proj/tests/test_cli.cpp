#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("protogram_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Run cli(const std::string& args, const fs::path& dir) {
  const auto err_file = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + PROTOGRAM_CLI + "\" " + args + " >/dev/null 2>\"" + err_file.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = testing::read_file(err_file);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("missing model file is a configuration error naming the path") {
  const auto dir = scratch("missing_model");
  const auto r = cli("extract --model /nonexistent/model.json --rfc " + q(testing::data_dir() / "corpus" / "dccp.txt") +
                         " --id dccp --out-dir " + q(dir),
                     dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("/nonexistent/model.json") != std::string::npos);
}

TEST_CASE("unknown fuzzing configuration is rejected") {
  const auto dir = scratch("bad_config");
  CHECK(cli("fuzz --protocol tcp --configuration sideways --out-dir " + q(dir), dir).code == 2);
  CHECK(cli("fuzz --protocol quic --configuration random --out-dir " + q(dir), dir).code == 2);
  CHECK(cli("--no-such-flag", dir).code == 2);
}

TEST_CASE("leave-one-out needs at least two documents") {
  const auto dir = scratch("one_doc");
  const auto r = cli("eval-nlp --documents gre --corpus-dir " + q(testing::data_dir() / "corpus") + " --out-dir " + q(dir), dir);
  CHECK(r.code == 2);
}

TEST_CASE("config file values apply and flags override them") {
  const auto dir = scratch("config_file");
  const auto cfg = dir / "run.toml";
  {
    std::ofstream out(cfg);
    out << "strategy-budget = 7\nevent-budget = 60\n";
  }
  const auto summary = [&] {
    return nlohmann::json::parse(testing::read_file(dir / "tcp-random.summary.json"));
  };
  REQUIRE(cli("fuzz --protocol tcp --configuration random --config " + q(cfg) + " --out-dir " + q(dir), dir).code == 0);
  CHECK(summary().at("strategies").get<int>() == 7);
  CHECK(testing::read_file(dir / "fuzz.config.txt").find("strategy-budget = 7") != std::string::npos);
  REQUIRE(cli("fuzz --protocol tcp --configuration random --config " + q(cfg) + " --strategy-budget 5 --out-dir " + q(dir),
              dir)
              .code == 0);
  CHECK(summary().at("strategies").get<int>() == 5);
  CHECK(testing::read_file(dir / "fuzz.effective-config.txt").find("strategy-budget=5") != std::string::npos);
  CHECK(cli("fuzz --config " + q(dir / "absent.toml") + " --out-dir " + q(dir), dir).code == 2);
}

TEST_CASE("a grammar for the wrong protocol fails the fuzz stage") {
  const auto dir = scratch("wrong_grammar");
  const auto r = cli("fuzz --protocol dccp --configuration manual --grammar " +
                         q(testing::data_dir() / "grammars" / "tcp_manual.json") + " --out-dir " + q(dir),
                     dir);
  CHECK(r.code != 0);
  CHECK(r.err.find("error") != std::string::npos);
}

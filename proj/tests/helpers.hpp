#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "protogram/corpus.hpp"
#include "protogram/grammar.hpp"
#include "protogram/rng.hpp"

namespace testing {

inline std::filesystem::path data_dir() { return PROTOGRAM_DATA_DIR; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline protogram::Document doc_from(std::string_view text, std::string id = "t") {
  return protogram::build_document(protogram::normalize_rfc_text(text, std::move(id)));
}

// Random field list plus property tuples for post-processing laws.
struct GrammarCase {
  std::vector<protogram::FieldType> types;
  std::vector<protogram::PropertyTuple> tuples;
};

inline GrammarCase random_grammar_case(std::uint64_t seed) {
  static const char* kNames[] = {"Source Port", "Destination Port", "Sequence Number", "Checksum",
                                 "Data Offset", "Type", "Length", "Window", "Flags", "Reserved",
                                 "Header Length", "Ack Number"};
  protogram::Rng rng(seed);
  GrammarCase c;
  const std::size_t n = 1 + rng.below(12);
  std::vector<std::string> names(std::begin(kNames), std::end(kNames));
  rng.shuffle(names);
  for (std::size_t i = 0; i < n; ++i) {
    protogram::FieldType t;
    t.name = names[i];
    if (rng.below(5) != 0) t.size_bits = static_cast<int>(1 + rng.below(32));
    t.order = static_cast<int>(i);
    c.types.push_back(std::move(t));
  }
  const std::size_t m = rng.below(25);
  const auto& kinds = protogram::all_property_kinds();
  for (std::size_t i = 0; i < m; ++i) {
    protogram::PropertyTuple t;
    t.kind = kinds[rng.below(kinds.size())];
    // Occasionally name a field that does not exist, or use another case.
    t.field = rng.below(10) == 0 ? "Phantom" : c.types[rng.below(n)].name;
    if (rng.below(6) == 0) {
      for (auto& ch : t.field) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    t.score = static_cast<double>(rng.below(8)) / 4.0;
    c.tuples.push_back(std::move(t));
  }
  return c;
}

}  // namespace testing

// Compiles an inline-markup corpus source into the plain document text and
// its line-delimited annotation file.
//
//   protogram_annotate <source> <protocol-id> <out-dir>
//
// writes <out-dir>/<protocol-id>.txt and <out-dir>/<protocol-id>.ann.jsonl

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "protogram/annotation.hpp"
#include "protogram/error.hpp"

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: protogram_annotate <source> <protocol-id> <out-dir>\n";
    return 2;
  }
  const std::filesystem::path source = argv[1];
  const std::string id = argv[2];
  const std::filesystem::path out_dir = argv[3];
  std::ifstream in(source, std::ios::binary);
  if (!in) {
    std::cerr << "cannot read " << source << "\n";
    return 2;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    const auto compiled = protogram::compile_annotated_source(ss.str(), id);
    std::filesystem::create_directories(out_dir);
    std::ofstream(out_dir / (id + ".txt"), std::ios::binary) << compiled.text;
    std::ofstream(out_dir / (id + ".ann.jsonl"), std::ios::binary)
        << protogram::write_annotations(compiled.annotations);
    const auto& a = compiled.annotations;
    std::cout << id << ": " << a.gold_types.size() << " types, " << a.gold_mentions.size() << " mentions, "
              << a.gold_property_spans.size() << " property spans\n";
  } catch (const protogram::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

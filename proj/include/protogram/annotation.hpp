#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "protogram/corpus.hpp"
#include "protogram/property_kind.hpp"
#include "protogram/type_extraction.hpp"

namespace protogram {

struct GoldMention {
  CharSpan span;
  std::string type_name;
};

struct GoldPropertySpan {
  std::vector<CharSpan> spans;
  PropertyKind kind = PropertyKind::kChecksum;
  std::string argument;
};

struct AnnotationSet {
  std::string protocol_id;
  std::vector<FieldType> gold_types;
  std::vector<GoldMention> gold_mentions;
  std::vector<GoldPropertySpan> gold_property_spans;
};

// Line-delimited records:
//   {"doc","start","end","label_type":"type"|"mention"|"property","label","argument"?}
// type records additionally carry "size_bits"; property records carry "group"
// so that one gold property may span several ranges.
AnnotationSet parse_annotations(std::string_view jsonl);
std::string write_annotations(const AnnotationSet& annotations);

// Spans inside the document, mention types among the gold types.
void validate_annotations(const AnnotationSet& annotations, const RawDocument& doc);

// Inline-markup annotation sources:
//   @type Name|size[|flags]       gold type declaration (directive line); size may be "-"
//                                 flags: noauto, ci (case-insensitive linking), also=Surface
//   [[surface|Type]] / [[Name]]   entity mention
//   {{text|Kind|Argument}}        property span (may contain mentions)
// Unmarked whole-token occurrences of type names (and their also= forms) are
// marked as mentions, longest first, unless the type is declared noauto. The output text is the plain document
// and the annotation offsets index its normalized form.
struct CompiledSource {
  std::string text;
  AnnotationSet annotations;
};

CompiledSource compile_annotated_source(std::string_view source, std::string protocol_id);

}  // namespace protogram

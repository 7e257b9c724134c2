#include "protogram/features.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "protogram/property_kind.hpp"
#include "protogram/text.hpp"

namespace protogram {

namespace {

enum MentionFeature : std::size_t {
  kExactMatch,
  kChunkInType,
  kTypeInChunk,
  kJaccard050,
  kJaccard075,
  kJaccard100,
  kEditSim080,
  kAcronym,
  kAliasMatch,
  kBothTitleCase,
  kFollowedByField,
  kContextCue,
  kSameLength,
  kChunkDigit,
  kAnaphorOwnSection,
  kTypeInSectionTitle,
  kChunkAnaphor,
  kInTitleSentence,
  kPartialOverlap,
  kStartsLowercase,
  kMentionFeatureCount
};

enum PropertyFeature : std::size_t {
  kHasKeyToken,
  kEqualsKeyPhrase,
  kContainsKeyPhrase,
  kKeyFraction050,
  kKeyFraction100,
  kSentenceHasPhrase,
  kContextHasKeyToken,
  kPropInTitle,
  kFieldDefinitionSection,
  kFirstBodySentence,
  kSingleToken,
  kLongChunk,
  kPropDigit,
  kTitleCaseChunk,
  kUnitWord,
  kPropAnaphor,
  kNormativeSentence,
  kPerKindBase,  // one feature per property kind follows
  kPropertyFeatureCount = kPerKindBase + kPropertyKindCount
};

bool starts_upper(const std::string& t) {
  return !t.empty() && std::isupper(static_cast<unsigned char>(t[0])) != 0;
}
bool starts_alpha(const std::string& t) {
  return !t.empty() && std::isalpha(static_cast<unsigned char>(t[0])) != 0;
}

bool is_subsequence(const std::vector<std::string>& needle, const std::vector<std::string>& hay) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

std::string join(const std::vector<std::string>& toks) {
  std::string out;
  for (const auto& t : toks) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

bool title_cased(const std::vector<std::string>& toks) {
  bool any = false;
  for (const auto& t : toks) {
    if (!starts_alpha(t)) continue;
    if (!starts_upper(t)) return false;
    any = true;
  }
  return any;
}

struct TypeProfile {
  std::vector<std::string> lower_tokens;
  std::string lower_name;
  std::string acronym;  // lower-case
  std::vector<std::string> lower_aliases;
  bool title_case = false;

  explicit TypeProfile(const FieldType& t) {
    lower_tokens = phrase_tokens(t.name);
    lower_name = join(lower_tokens);
    acronym = text::to_lower(initials_acronym(t.name));
    for (const auto& a : t.aliases) {
      std::string la = text::to_lower(text::collapse_spaces(a));
      if (la != acronym && la != lower_name) lower_aliases.push_back(la);
    }
    title_case = title_cased(text::split_words(t.name));
  }
};

struct ChunkProfile {
  std::vector<std::string> lower_tokens;
  std::string lower_joined;
  bool title_case = false;
  bool has_digit = false;
  bool starts_lower = false;

  explicit ChunkProfile(const Chunk& c) {
    for (const auto& t : c.tokens) lower_tokens.push_back(text::to_lower(t));
    lower_joined = join(lower_tokens);
    title_case = title_cased(c.tokens);
    has_digit = std::any_of(c.tokens.begin(), c.tokens.end(),
                            [](const std::string& t) { return text::has_digit(t); });
    starts_lower = !c.tokens.empty() && starts_alpha(c.tokens[0]) && !starts_upper(c.tokens[0]);
  }
};

const std::set<std::string>& context_cues() {
  static const std::set<std::string> cues = {"field", "bits", "header", "value", "set", "contains"};
  return cues;
}

FeatureVector featurize_profiles(const TypeProfile& type, const std::string& type_name,
                                 const Chunk& chunk, const ChunkProfile& cp,
                                 const MentionContext& ctx) {
  FeatureVector fv;
  fv.catalog = CatalogId::kMention;
  fv.catalog_version = mention_catalog().version;
  fv.bits.assign(kMentionFeatureCount, 0);
  auto set = [&](std::size_t i, bool v) { fv.bits[i] = v ? 1 : 0; };

  const bool exact = cp.lower_tokens == type.lower_tokens;
  set(kExactMatch, exact);
  const bool chunk_in_type = is_subsequence(cp.lower_tokens, type.lower_tokens);
  const bool type_in_chunk = is_subsequence(type.lower_tokens, cp.lower_tokens);
  set(kChunkInType, chunk_in_type);
  set(kTypeInChunk, type_in_chunk);
  const double jac = token_jaccard(cp.lower_tokens, type.lower_tokens);
  set(kJaccard050, jac >= 0.5);
  set(kJaccard075, jac >= 0.75);
  set(kJaccard100, jac >= 1.0);
  set(kEditSim080, edit_similarity(cp.lower_joined, type.lower_name) >= 0.8);
  set(kAcronym, cp.lower_tokens.size() == 1 && type.acronym.size() >= 2 &&
                    cp.lower_joined == type.acronym);
  set(kAliasMatch, std::find(type.lower_aliases.begin(), type.lower_aliases.end(),
                             cp.lower_joined) != type.lower_aliases.end());
  set(kBothTitleCase, cp.title_case && type.title_case);
  set(kFollowedByField, text::to_lower(ctx.next_token) == "field");
  set(kContextCue, std::any_of(ctx.window.begin(), ctx.window.end(), [](const std::string& w) {
        return context_cues().count(text::to_lower(w)) > 0;
      }));
  set(kSameLength, cp.lower_tokens.size() == type.lower_tokens.size());
  set(kChunkDigit, cp.has_digit);
  const bool in_title = !type_name.empty() && text::contains_ci(ctx.section_title, type_name);
  set(kAnaphorOwnSection, chunk.is_anaphor && in_title);
  set(kTypeInSectionTitle, in_title);
  set(kChunkAnaphor, chunk.is_anaphor);
  set(kInTitleSentence, ctx.in_title_sentence);
  const bool shares = jac > 0.0;
  set(kPartialOverlap, shares && !chunk_in_type && !type_in_chunk);
  set(kStartsLowercase, cp.starts_lower);
  return fv;
}

const std::set<std::string>& key_vocabulary() {
  static const std::set<std::string> vocab = [] {
    std::set<std::string> v;
    for (auto k : all_property_kinds())
      for (const auto& p : key_phrases(k)) v.insert(p.begin(), p.end());
    // Function words inside phrases carry no signal on their own.
    for (const char* w : {"of", "the", "in", "from", "to"}) v.erase(w);
    return v;
  }();
  return vocab;
}

bool contains_phrase(const std::vector<std::string>& toks, const std::vector<std::string>& phrase) {
  return is_subsequence(phrase, toks);
}

}  // namespace

std::string_view to_string(CatalogId id) {
  return id == CatalogId::kMention ? "mention" : "property";
}

const FeatureCatalog& mention_catalog() {
  static const FeatureCatalog catalog{
      CatalogId::kMention,
      1,
      {"exact_match_ci", "chunk_within_type", "type_within_chunk", "token_jaccard_ge_0_50",
       "token_jaccard_ge_0_75", "token_jaccard_eq_1_00", "edit_similarity_ge_0_80",
       "acronym_of_type", "alias_match", "both_title_case", "followed_by_field_word",
       "context_cue_word", "same_token_length", "chunk_has_digit", "anaphor_in_own_section",
       "type_in_section_title", "chunk_is_anaphor", "in_title_sentence", "partial_token_overlap",
       "chunk_starts_lowercase"}};
  return catalog;
}

const FeatureCatalog& property_catalog() {
  static const FeatureCatalog catalog = [] {
    FeatureCatalog c{CatalogId::kProperty,
                     1,
                     {"chunk_has_key_token", "chunk_equals_key_phrase", "chunk_contains_key_phrase",
                      "key_token_fraction_ge_0_50", "key_token_fraction_eq_1_00",
                      "sentence_has_key_phrase", "context_has_key_token", "in_title_sentence",
                      "field_definition_section", "first_body_sentence", "single_token_chunk",
                      "long_chunk", "chunk_has_digit", "title_case_chunk", "chunk_has_unit_word",
                      "chunk_is_anaphor", "normative_sentence"}};
    for (auto k : all_property_kinds())
      c.names.push_back("key_token_kind_" + text::to_lower(to_string(k)));
    return c;
  }();
  return catalog;
}

const FeatureCatalog& catalog_for(CatalogId id) {
  return id == CatalogId::kMention ? mention_catalog() : property_catalog();
}

double edit_similarity(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(text::levenshtein(a, b)) / static_cast<double>(longest);
}

double token_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::set<std::string> sa, sb;
  for (const auto& t : a) sa.insert(text::to_lower(t));
  for (const auto& t : b) sb.insert(text::to_lower(t));
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

MentionContext make_mention_context(const Document& doc, const Chunk& chunk) {
  MentionContext ctx;
  ctx.window = chunk_context(doc, chunk, 5);
  const auto& sentence = doc.sentence_of(chunk);
  const std::size_t after = chunk.first_token + chunk.tokens.size();
  if (after < sentence.tokens.size()) ctx.next_token = sentence.tokens[after].text;
  ctx.section_title = doc.section_of(chunk).title;
  ctx.in_title_sentence = sentence.is_title;
  return ctx;
}

FeatureVector featurize_mention(const FieldType& entity, const Chunk& chunk,
                                const MentionContext& context) {
  return featurize_profiles(TypeProfile(entity), entity.name, chunk, ChunkProfile(chunk), context);
}

MentionFeatureMatrix featurize_document(const Document& doc, const std::vector<FieldType>& types) {
  MentionFeatureMatrix m;
  m.type_count = types.size();
  m.rows.reserve(doc.chunks.size() * types.size());
  std::vector<TypeProfile> profiles;
  profiles.reserve(types.size());
  for (const auto& t : types) profiles.emplace_back(t);
  for (const auto& c : doc.chunks) {
    const ChunkProfile cp(c);
    const MentionContext ctx = make_mention_context(doc, c);
    for (std::size_t t = 0; t < types.size(); ++t)
      m.rows.push_back(featurize_profiles(profiles[t], types[t].name, c, cp, ctx));
  }
  return m;
}

FeatureVector featurize_property(const Document& doc, const Chunk& chunk) {
  FeatureVector fv;
  fv.catalog = CatalogId::kProperty;
  fv.catalog_version = property_catalog().version;
  fv.bits.assign(kPropertyFeatureCount, 0);
  auto set = [&](std::size_t i, bool v) { fv.bits[i] = v ? 1 : 0; };

  const auto& vocab = key_vocabulary();
  std::vector<std::string> lower;
  for (const auto& t : chunk.tokens) lower.push_back(text::to_lower(t));
  std::size_t key_tokens = 0;
  for (const auto& t : lower) key_tokens += vocab.count(t);
  set(kHasKeyToken, key_tokens > 0);

  bool equals = false, contains = false;
  for (auto k : all_property_kinds()) {
    bool kind_hit = false;
    for (const auto& p : key_phrases(k)) {
      if (lower == p) equals = true;
      if (contains_phrase(lower, p)) contains = true;
      for (const auto& w : p)
        if (vocab.count(w) && std::find(lower.begin(), lower.end(), w) != lower.end())
          kind_hit = true;
    }
    set(kPerKindBase + static_cast<std::size_t>(k), kind_hit);
  }
  set(kEqualsKeyPhrase, equals);
  set(kContainsKeyPhrase, contains);
  const double frac = lower.empty() ? 0.0
                                    : static_cast<double>(key_tokens) /
                                          static_cast<double>(lower.size());
  set(kKeyFraction050, frac >= 0.5);
  set(kKeyFraction100, frac >= 1.0);

  const Sentence& sentence = doc.sentence_of(chunk);
  std::vector<std::string> sentence_lower;
  for (const auto& t : sentence.tokens)
    if (!t.is_punct) sentence_lower.push_back(text::to_lower(t.text));
  bool sentence_phrase = false;
  for (auto k : all_property_kinds())
    for (const auto& p : key_phrases(k))
      if (contains_phrase(sentence_lower, p)) sentence_phrase = true;
  set(kSentenceHasPhrase, sentence_phrase);

  const auto window = chunk_context(doc, chunk, 5);
  set(kContextHasKeyToken, std::any_of(window.begin(), window.end(), [&](const std::string& w) {
        return vocab.count(text::to_lower(w)) > 0;
      }));
  const Section& section = doc.section_of(chunk);
  set(kPropInTitle, sentence.is_title);
  set(kFieldDefinitionSection, section.is_field_heading);
  const std::size_t first_body = section.title.empty() ? 0 : 1;
  set(kFirstBodySentence, chunk.sentence_index == first_body && !sentence.is_title);
  set(kSingleToken, chunk.tokens.size() == 1);
  set(kLongChunk, chunk.tokens.size() >= 4);
  set(kPropDigit, std::any_of(chunk.tokens.begin(), chunk.tokens.end(),
                              [](const std::string& t) { return text::has_digit(t); }));
  set(kTitleCaseChunk, title_cased(chunk.tokens));
  static const std::set<std::string> units = {"bits", "bit", "bytes", "octets", "words", "units"};
  set(kUnitWord, std::any_of(lower.begin(), lower.end(),
                             [](const std::string& t) { return units.count(t) > 0; }));
  set(kPropAnaphor, chunk.is_anaphor);
  set(kNormativeSentence, std::any_of(sentence.tokens.begin(), sentence.tokens.end(), [](const Token& t) {
        return t.text == "MUST" || t.text == "SHOULD" || t.text == "MAY";
      }));
  return fv;
}

}  // namespace protogram

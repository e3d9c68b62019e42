#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "charcurve/json_io.hpp"
#include "charcurve/rng.hpp"

namespace charcurve {

// One morphological category of the toy language. The source side marks it
// with an optional function word before the slot word and/or a suffix; the
// target side always marks it with a suffix on the slot word.
struct CategorySpec {
  std::string name;
  std::string slot;  // "subject", "verb" or "object"
  std::string src_word;
  std::string src_suffix;
  std::string tgt_suffix;
  std::string trigger;  // when set, active exactly when that category is
  std::string group;    // at most one active category per non-empty group
  double rate = 0.5;

  bool operator==(const CategorySpec&) const = default;
};

// Toy SVO -> SOV language pair. Stems are random syllable strings; target
// stems are a letter substitution of the source stems (consonants map to
// consonants, vowels to vowels). Stem frequencies are Zipfian.
struct GrammarSpec {
  std::uint64_t lexicon_seed = 7;
  int nouns = 150;
  int verbs = 60;
  int min_syllables = 1;
  int max_syllables = 3;
  double zipf = 1.0;
  double object_rate = 0.7;  // probability that a sentence has an object
  std::string determiner = "the";
  std::vector<CategorySpec> categories;

  // Throws kGrammarInvalid.
  void validate() const;
  bool operator==(const GrammarSpec&) const = default;

  // Noun Number, Verb Agreement, Past, Future, Negation.
  static GrammarSpec default_spec();
};

Json to_json(const GrammarSpec& g);
// Throws kSchemaError / kGrammarInvalid.
GrammarSpec grammar_from_json(const JsonReader& in);

struct ToySentence {
  std::string src;
  std::string tgt;
};

// Lexical choices and category flags of one sentence.
struct SentenceDraw {
  int subject = 0;
  int verb = 0;
  int object = -1;  // -1: intransitive
  std::vector<bool> active;
};

class ToyLanguage {
 public:
  explicit ToyLanguage(GrammarSpec spec);

  const GrammarSpec& spec() const { return spec_; }
  const std::vector<std::string>& source_nouns() const { return src_nouns_; }
  const std::vector<std::string>& source_verbs() const { return src_verbs_; }
  std::string cipher(const std::string& source_stem) const;

  SentenceDraw draw(Rng& rng) const;
  std::string source(const SentenceDraw& d) const;
  // flip: index of a category whose target marking is inverted (contrast), or -1.
  std::string target(const SentenceDraw& d, int flip = -1) const;
  ToySentence sample(Rng& rng) const;

 private:
  int zipf_index(Rng& rng, const std::vector<double>& cdf) const;

  GrammarSpec spec_;
  std::vector<std::string> src_nouns_, src_verbs_;
  std::vector<double> noun_cdf_, verb_cdf_;
  std::string cipher_from_, cipher_to_;
};

// n sentence pairs, deterministic in (spec, seed).
std::vector<ToySentence> generate_corpus(const ToyLanguage& lang, std::size_t n, std::uint64_t seed);

}  // namespace charcurve

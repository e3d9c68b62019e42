#include "charcurve/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "charcurve/error.hpp"

namespace charcurve {
namespace {

constexpr std::string_view kConsonants = "bcdfghjklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

bool is_slot(const std::string& s) { return s == "subject" || s == "verb" || s == "object"; }

bool lowercase_word(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::kGrammarInvalid, msg); }

std::vector<double> zipf_cdf(int n, double s) {
  std::vector<double> cdf(static_cast<std::size_t>(n));
  double total = 0.0;
  for (int r = 0; r < n; ++r) {
    total += 1.0 / std::pow(static_cast<double>(r + 1), s);
    cdf[static_cast<std::size_t>(r)] = total;
  }
  for (auto& c : cdf) c /= total;
  return cdf;
}

}  // namespace

void GrammarSpec::validate() const {
  if (nouns < 2 || verbs < 2) invalid("need at least 2 nouns and 2 verbs");
  if (min_syllables < 1 || max_syllables < min_syllables) invalid("bad syllable range");
  if (!(zipf >= 0.0)) invalid("zipf exponent must be >= 0");
  if (!(object_rate >= 0.0 && object_rate <= 1.0)) invalid("object_rate must lie in [0, 1]");
  if (determiner.empty() || !lowercase_word(determiner)) invalid("determiner must be a lowercase word");
  if (categories.empty()) invalid("at least one category is required");
  std::set<std::string> names;
  for (const auto& c : categories) {
    if (c.name.empty()) invalid("category without a name");
    if (!names.insert(c.name).second) invalid("duplicate category " + c.name);
    if (!is_slot(c.slot)) invalid(c.name + ": slot must be subject, verb or object");
    if (c.tgt_suffix.empty()) invalid(c.name + ": target suffix must be non-empty");
    for (const auto* s : {&c.src_word, &c.src_suffix, &c.tgt_suffix}) {
      if (!lowercase_word(*s)) invalid(c.name + ": affixes must be lowercase ASCII");
    }
    if (c.trigger.empty() && c.src_word.empty() && c.src_suffix.empty()) {
      invalid(c.name + ": untriggered category needs a source marker");
    }
    if (!(c.rate >= 0.0 && c.rate <= 1.0)) invalid(c.name + ": rate must lie in [0, 1]");
  }
  for (const auto& c : categories) {
    if (c.trigger.empty()) continue;
    const auto it = std::find_if(categories.begin(), categories.end(),
                                 [&](const CategorySpec& o) { return o.name == c.trigger; });
    if (it == categories.end()) invalid(c.name + ": unknown trigger " + c.trigger);
    if (it >= std::find(categories.begin(), categories.end(), c)) {
      invalid(c.name + ": trigger must be listed earlier");
    }
  }
}

GrammarSpec GrammarSpec::default_spec() {
  GrammarSpec g;
  g.categories = {
      {"Noun Number", "subject", "", "es", "ok", "", "", 0.5},
      {"Verb Agreement", "verb", "", "", "ta", "Noun Number", "", 0.5},
      {"Past", "verb", "", "ed", "um", "", "tense", 0.3},
      {"Future", "verb", "will", "", "ari", "", "tense", 0.3},
      {"Negation", "verb", "not", "", "ne", "", "", 0.3},
  };
  return g;
}

Json to_json(const GrammarSpec& g) {
  Json j;
  j["lexicon_seed"] = g.lexicon_seed;
  j["nouns"] = g.nouns;
  j["verbs"] = g.verbs;
  j["min_syllables"] = g.min_syllables;
  j["max_syllables"] = g.max_syllables;
  j["zipf"] = g.zipf;
  j["object_rate"] = g.object_rate;
  j["determiner"] = g.determiner;
  Json cats = Json::array();
  for (const auto& c : g.categories) {
    cats.push_back({{"name", c.name},
                    {"slot", c.slot},
                    {"src_word", c.src_word},
                    {"src_suffix", c.src_suffix},
                    {"tgt_suffix", c.tgt_suffix},
                    {"trigger", c.trigger},
                    {"group", c.group},
                    {"rate", c.rate}});
  }
  j["categories"] = std::move(cats);
  return j;
}

GrammarSpec grammar_from_json(const JsonReader& in) {
  in.only({"lexicon_seed", "nouns", "verbs", "min_syllables", "max_syllables", "zipf",
           "object_rate", "determiner", "categories"});
  GrammarSpec g = GrammarSpec::default_spec();
  g.lexicon_seed = in.get_u64("lexicon_seed", g.lexicon_seed);
  g.nouns = in.get_int("nouns", g.nouns);
  g.verbs = in.get_int("verbs", g.verbs);
  g.min_syllables = in.get_int("min_syllables", g.min_syllables);
  g.max_syllables = in.get_int("max_syllables", g.max_syllables);
  g.zipf = in.get_double("zipf", g.zipf);
  g.object_rate = in.get_double("object_rate", g.object_rate);
  g.determiner = in.get_string("determiner", g.determiner);
  if (in.has("categories")) {
    const Json& arr = in.node()["categories"];
    if (!arr.is_array()) throw Error(ErrorCode::kSchemaError, in.field("categories") + ": expected array");
    g.categories.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const JsonReader c(arr[i], in.field("categories") + "[" + std::to_string(i) + "]");
      c.only({"name", "slot", "src_word", "src_suffix", "tgt_suffix", "trigger", "group", "rate"});
      g.categories.push_back({c.get_string("name"), c.get_string("slot"), c.get_string("src_word", ""),
                              c.get_string("src_suffix", ""), c.get_string("tgt_suffix"),
                              c.get_string("trigger", ""), c.get_string("group", ""),
                              c.get_double("rate", 0.5)});
    }
  }
  g.validate();
  return g;
}

ToyLanguage::ToyLanguage(GrammarSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  Rng rng(spec_.lexicon_seed);
  std::set<std::string> reserved{spec_.determiner};
  for (const auto& c : spec_.categories)
    if (!c.src_word.empty()) reserved.insert(c.src_word);
  std::set<std::string> seen;
  const auto stem = [&] {
    while (true) {
      std::string s;
      const auto syllables = spec_.min_syllables +
                             static_cast<int>(rng.below(static_cast<std::uint64_t>(spec_.max_syllables - spec_.min_syllables + 1)));
      for (int i = 0; i < syllables; ++i) {
        s += kConsonants[rng.below(kConsonants.size())];
        s += kVowels[rng.below(kVowels.size())];
        if (rng.bernoulli(0.3)) s += kConsonants[rng.below(kConsonants.size())];
      }
      if (s.size() >= 2 && !reserved.count(s) && seen.insert(s).second) return s;
    }
  };
  for (int i = 0; i < spec_.nouns; ++i) src_nouns_.push_back(stem());
  for (int i = 0; i < spec_.verbs; ++i) src_verbs_.push_back(stem());
  noun_cdf_ = zipf_cdf(spec_.nouns, spec_.zipf);
  verb_cdf_ = zipf_cdf(spec_.verbs, spec_.zipf);

  std::string cons(kConsonants), vows(kVowels);
  cipher_from_ = cons + vows;
  rng.shuffle(cons);
  rng.shuffle(vows);
  cipher_to_ = cons + vows;
}

std::string ToyLanguage::cipher(const std::string& source_stem) const {
  std::string out = source_stem;
  for (auto& ch : out) {
    const auto pos = cipher_from_.find(ch);
    if (pos != std::string::npos) ch = cipher_to_[pos];
  }
  return out;
}

int ToyLanguage::zipf_index(Rng& rng, const std::vector<double>& cdf) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

SentenceDraw ToyLanguage::draw(Rng& rng) const {
  SentenceDraw d;
  d.subject = zipf_index(rng, noun_cdf_);
  d.verb = zipf_index(rng, verb_cdf_);
  d.object = rng.bernoulli(spec_.object_rate) ? zipf_index(rng, noun_cdf_) : -1;
  d.active.assign(spec_.categories.size(), false);
  std::set<std::string> used_groups;
  for (std::size_t i = 0; i < spec_.categories.size(); ++i) {
    const auto& c = spec_.categories[i];
    // Every category draws its coin so later draws do not depend on earlier outcomes.
    const bool coin = rng.bernoulli(c.rate);
    if (!c.trigger.empty()) {
      for (std::size_t j = 0; j < i; ++j)
        if (spec_.categories[j].name == c.trigger) d.active[i] = d.active[j];
      continue;
    }
    if (c.slot == "object" && d.object < 0) continue;
    if (!c.group.empty() && used_groups.count(c.group)) continue;
    d.active[i] = coin;
    if (coin && !c.group.empty()) used_groups.insert(c.group);
  }
  return d;
}

std::string ToyLanguage::source(const SentenceDraw& d) const {
  const auto word = [&](const std::string& slot, const std::string& stem) {
    std::string pre, suffix;
    for (std::size_t i = 0; i < spec_.categories.size(); ++i) {
      const auto& c = spec_.categories[i];
      if (c.slot != slot || !d.active[i]) continue;
      if (!c.src_word.empty()) pre += c.src_word + " ";
      suffix += c.src_suffix;
    }
    return pre + stem + suffix;
  };
  std::string out = spec_.determiner + " " + word("subject", src_nouns_[static_cast<std::size_t>(d.subject)]);
  out += " " + word("verb", src_verbs_[static_cast<std::size_t>(d.verb)]);
  if (d.object >= 0) {
    out += " " + spec_.determiner + " " + word("object", src_nouns_[static_cast<std::size_t>(d.object)]);
  }
  return out + " .";
}

std::string ToyLanguage::target(const SentenceDraw& d, int flip) const {
  const auto word = [&](const std::string& slot, const std::string& stem) {
    std::string out = cipher(stem);
    for (std::size_t i = 0; i < spec_.categories.size(); ++i) {
      const auto& c = spec_.categories[i];
      if (c.slot != slot) continue;
      const bool on = d.active[i] != (static_cast<int>(i) == flip);
      if (on) out += c.tgt_suffix;
    }
    return out;
  };
  std::string out = word("subject", src_nouns_[static_cast<std::size_t>(d.subject)]);
  if (d.object >= 0) out += " " + word("object", src_nouns_[static_cast<std::size_t>(d.object)]);
  out += " " + word("verb", src_verbs_[static_cast<std::size_t>(d.verb)]);
  return out + " .";
}

ToySentence ToyLanguage::sample(Rng& rng) const {
  const auto d = draw(rng);
  return ToySentence{source(d), target(d)};
}

std::vector<ToySentence> generate_corpus(const ToyLanguage& lang, std::size_t n, std::uint64_t seed) {
  std::vector<ToySentence> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, i);
    out.push_back(lang.sample(rng));
  }
  return out;
}

}  // namespace charcurve

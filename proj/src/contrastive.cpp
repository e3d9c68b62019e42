#include "charcurve/contrastive.hpp"

#include <fstream>
#include <map>
#include <memory>

#include "charcurve/error.hpp"
#include "charcurve/format.hpp"
#include "charcurve/pretok.hpp"
#include "charcurve/utf8.hpp"

namespace charcurve {

double CategoryAccuracy::accuracy() const {
  return items == 0 ? 0.0 : 100.0 * static_cast<double>(preferred) / static_cast<double>(items);
}

double ContrastiveReport::accuracy() const {
  return items == 0 ? 0.0 : 100.0 * static_cast<double>(preferred) / static_cast<double>(items);
}

PairScorer model_scorer(const ToyModel& model, const MergeList& merges, std::size_t k) {
  auto seg = std::make_shared<Segmenter>(merges, k);
  return [&model, seg](const std::string& source, const std::string& target) {
    const auto s = seg->segment_sentence(pretokenize(source));
    const auto t = seg->segment_sentence(pretokenize(target));
    return score(model, s, t);
  };
}

ContrastiveReport evaluate_contrastive(const PairScorer& scorer, std::span<const ContrastiveItem> items) {
  if (items.empty()) throw Error(ErrorCode::kEmptyItems, "no contrastive items");
  std::map<std::string, CategoryAccuracy> by_cat;
  for (const auto& item : items) {
    auto& c = by_cat[item.category];
    c.category = item.category;
    ++c.items;
    if (scorer(item.source, item.correct) > scorer(item.source, item.contrast)) ++c.preferred;
  }
  ContrastiveReport r;
  for (auto& [name, c] : by_cat) {
    r.items += c.items;
    r.preferred += c.preferred;
    r.categories.push_back(c);
  }
  return r;
}

std::vector<ContrastiveItem> read_items(std::istream& in) {
  std::vector<ContrastiveItem> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = "items line " + std::to_string(lineno);
    if (!utf8::is_valid(line)) throw Error(ErrorCode::kInvalidEncoding, where);
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      f.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (f.size() != 4) throw Error(ErrorCode::kParse, where + ": expected 4 fields");
    for (const auto& field : f)
      if (field.empty()) throw Error(ErrorCode::kParse, where + ": empty field");
    if (f[1] == f[2]) throw Error(ErrorCode::kParse, where + ": correct equals contrast");
    items.push_back({f[0], f[1], f[2], f[3]});
  }
  return items;
}

std::vector<ContrastiveItem> load_items(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path);
  return read_items(in);
}

std::string items_tsv(std::span<const ContrastiveItem> items) {
  std::string out;
  for (const auto& i : items) out += i.source + "\t" + i.correct + "\t" + i.contrast + "\t" + i.category + "\n";
  return out;
}

std::vector<ContrastiveItem> generate_synthetic_suite(const GrammarSpec& grammar, std::size_t n_items,
                                                      std::uint64_t seed) {
  const ToyLanguage lang(grammar);
  const auto& cats = lang.spec().categories;
  std::vector<ContrastiveItem> items;
  items.reserve(n_items);
  for (std::size_t i = 0; i < n_items; ++i) {
    Rng rng(seed, i);
    const auto c = static_cast<int>(rng.below(cats.size()));
    for (int attempt = 0;; ++attempt) {
      if (attempt == 1000) {
        throw Error(ErrorCode::kGrammarInvalid, "category " + cats[static_cast<std::size_t>(c)].name +
                                                    " never yields a contrast");
      }
      const auto d = lang.draw(rng);
      std::string correct = lang.target(d);
      std::string contrast = lang.target(d, c);
      if (correct == contrast) continue;
      items.push_back({lang.source(d), std::move(correct), std::move(contrast),
                       cats[static_cast<std::size_t>(c)].name});
      break;
    }
  }
  return items;
}

std::string contrastive_csv(const ContrastiveReport& report) {
  std::string out = "category,items,preferred,accuracy\n";
  const auto row = [](const std::string& name, std::size_t n, std::size_t p, double acc) {
    std::string quoted = name;
    if (quoted.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (const char ch : name) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      quoted = q + "\"";
    }
    return quoted + "," + std::to_string(n) + "," + std::to_string(p) + "," + format_fixed(acc, 2) + "\n";
  };
  for (const auto& c : report.categories) out += row(c.category, c.items, c.preferred, c.accuracy());
  out += row("overall", report.items, report.preferred, report.accuracy());
  return out;
}

}  // namespace charcurve

#include "charcurve/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

#include "charcurve/error.hpp"
#include "charcurve/utf8.hpp"

namespace charcurve {
namespace {

constexpr std::string_view kMergesHeader = "#charcurve-merges v1";
constexpr std::string_view kAlphabetTag = "#alphabet";

// Units never contain U+0000 after ingestion, so it separates the pair key.
std::string pair_key(std::string_view left, std::string_view right) {
  std::string key;
  key.reserve(left.size() + right.size() + 1);
  key.append(left);
  key.push_back('\0');
  key.append(right);
  return key;
}

void check_k(const MergeList& merges, std::size_t k) {
  if (k > merges.size()) {
    throw Error(ErrorCode::kKOutOfRange, "k=" + std::to_string(k) + " exceeds " +
                                             std::to_string(merges.size()) + " merges");
  }
}

// Rank-ordered application with optional dropout. Rules that do not occur are
// no-ops, so jumping to the lowest applicable rank at or above the cursor is
// the same as visiting every rule in turn.
Segmentation apply_merges(std::string_view pretoken, const MergeList& merges, std::size_t k,
                          double drop_p, Rng* rng) {
  Segmentation units = utf8::split_chars(pretoken);
  std::size_t cursor = 0;
  Segmentation next;
  while (units.size() > 1) {
    std::size_t best = k;
    for (std::size_t i = 0; i + 1 < units.size(); ++i) {
      const auto rank = merges.rank_of(units[i], units[i + 1]);
      if (rank && *rank >= cursor && *rank < best) best = *rank;
    }
    if (best == k) break;
    const MergeRule& rule = merges.rules()[best];
    next.clear();
    std::size_t i = 0;
    while (i < units.size()) {
      if (i + 1 < units.size() && units[i] == rule.left && units[i + 1] == rule.right) {
        if (rng != nullptr && drop_p > 0.0 && rng->bernoulli(drop_p)) {
          next.push_back(std::move(units[i]));
          next.push_back(std::move(units[i + 1]));
        } else {
          next.push_back(rule.merged());
        }
        i += 2;
      } else {
        next.push_back(std::move(units[i]));
        ++i;
      }
    }
    units.swap(next);
    cursor = best + 1;
  }
  return units;
}

// Symbol-interned incremental BPE trainer.
class BpeTrainer {
 public:
  explicit BpeTrainer(const std::map<std::string, std::uint64_t>& counts) {
    for (const auto& [token, freq] : counts) {
      if (token.empty() || freq == 0) continue;
      Word w;
      w.freq = freq;
      for (auto& ch : utf8::split_chars(token)) {
        alphabet_.insert(ch);
        w.symbols.push_back(intern(ch));
      }
      words_.push_back(std::move(w));
    }
    if (words_.empty()) throw Error(ErrorCode::kEmptyCorpus, "BPE training corpus is empty");
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      const Word& w = words_[wi];
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        const Pair p = make_pair(w.symbols[i], w.symbols[i + 1]);
        pair_counts_[p] += w.freq;
        where_[p].push_back(wi);
      }
    }
    for (const auto& [p, c] : pair_counts_) queue_.insert(entry(p, c));
    visited_.assign(words_.size(), 0);
  }

  MergeList run(std::size_t max_merges) {
    std::vector<MergeRule> rules;
    while (rules.size() < max_merges && !queue_.empty()) {
      const QueueEntry top = *queue_.begin();
      const Pair p = std::get<3>(top);
      rules.push_back(MergeRule{symbols_[first(p)], symbols_[second(p)], rules.size()});
      merge(p, rules.size());
    }
    return MergeList(std::move(rules), alphabet_);
  }

 private:
  using Pair = std::uint64_t;
  // (-count, left, right, pair): begin() is the most frequent pair, ties broken
  // by the lexicographically smallest (left, right).
  using QueueEntry = std::tuple<std::int64_t, std::string, std::string, Pair>;

  struct Word {
    std::vector<std::uint32_t> symbols;
    std::uint64_t freq = 0;
  };

  static Pair make_pair(std::uint32_t a, std::uint32_t b) {
    return (static_cast<Pair>(a) << 32) | b;
  }
  static std::uint32_t first(Pair p) { return static_cast<std::uint32_t>(p >> 32); }
  static std::uint32_t second(Pair p) { return static_cast<std::uint32_t>(p & 0xFFFFFFFFu); }

  std::uint32_t intern(const std::string& s) {
    const auto [it, inserted] = symbol_ids_.try_emplace(s, static_cast<std::uint32_t>(symbols_.size()));
    if (inserted) symbols_.push_back(s);
    return it->second;
  }

  QueueEntry entry(Pair p, std::uint64_t count) const {
    return {-static_cast<std::int64_t>(count), symbols_[first(p)], symbols_[second(p)], p};
  }

  void merge(Pair p, std::size_t stamp) {
    const std::uint32_t a = first(p);
    const std::uint32_t b = second(p);
    const std::uint32_t merged = intern(symbols_[a] + symbols_[b]);
    std::unordered_map<Pair, std::int64_t> delta;
    std::vector<std::size_t> touched = std::move(where_[p]);
    where_.erase(p);
    for (const std::size_t wi : touched) {
      if (visited_[wi] == stamp) continue;
      visited_[wi] = stamp;
      Word& w = words_[wi];
      const auto freq = static_cast<std::int64_t>(w.freq);
      bool hit = false;
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        if (w.symbols[i] == a && w.symbols[i + 1] == b) {
          hit = true;
          break;
        }
      }
      if (!hit) continue;
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        delta[make_pair(w.symbols[i], w.symbols[i + 1])] -= freq;
      }
      std::vector<std::uint32_t> out;
      out.reserve(w.symbols.size());
      for (std::size_t i = 0; i < w.symbols.size();) {
        if (i + 1 < w.symbols.size() && w.symbols[i] == a && w.symbols[i + 1] == b) {
          out.push_back(merged);
          i += 2;
        } else {
          out.push_back(w.symbols[i]);
          ++i;
        }
      }
      w.symbols.swap(out);
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        const Pair np = make_pair(w.symbols[i], w.symbols[i + 1]);
        delta[np] += freq;
        where_[np].push_back(wi);
      }
    }
    // Apply in a fixed order so queue contents never depend on hash iteration.
    std::vector<std::pair<Pair, std::int64_t>> changes(delta.begin(), delta.end());
    std::sort(changes.begin(), changes.end());
    for (const auto& [q, d] : changes) {
      if (d == 0) continue;
      auto it = pair_counts_.find(q);
      const std::uint64_t old = it == pair_counts_.end() ? 0 : it->second;
      if (old > 0) queue_.erase(entry(q, old));
      const auto updated = static_cast<std::uint64_t>(static_cast<std::int64_t>(old) + d);
      if (updated > 0) {
        pair_counts_[q] = updated;
        queue_.insert(entry(q, updated));
      } else if (it != pair_counts_.end()) {
        pair_counts_.erase(it);
      }
    }
  }

  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::uint32_t> symbol_ids_;
  std::set<std::string> alphabet_;
  std::vector<Word> words_;
  std::unordered_map<Pair, std::uint64_t> pair_counts_;
  std::unordered_map<Pair, std::vector<std::size_t>> where_;
  std::set<QueueEntry> queue_;
  std::vector<std::size_t> visited_;
};

}  // namespace

MergeList::MergeList(std::vector<MergeRule> rules, std::set<std::string> alphabet)
    : rules_(std::move(rules)), alphabet_(std::move(alphabet)) {
  index_.reserve(rules_.size());
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const MergeRule& r = rules_[i];
    if (r.rank != i) {
      throw Error(ErrorCode::kParse, "merge rank " + std::to_string(r.rank) + " at position " +
                                         std::to_string(i));
    }
    if (r.left.empty() || r.right.empty()) {
      throw Error(ErrorCode::kParse, "empty side in merge rule " + std::to_string(i));
    }
    if (!index_.emplace(pair_key(r.left, r.right), i).second) {
      throw Error(ErrorCode::kParse, "duplicate merge rule '" + r.left + " " + r.right + "'");
    }
  }
}

std::optional<std::size_t> MergeList::rank_of(std::string_view left, std::string_view right) const {
  const auto it = index_.find(pair_key(left, right));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

MergeList MergeList::prefix(std::size_t count) const {
  check_k(*this, count);
  return MergeList(std::vector<MergeRule>(rules_.begin(), rules_.begin() + static_cast<std::ptrdiff_t>(count)),
                   alphabet_);
}

MergeList train_bpe(std::span<const PreTokenizedSentence> corpus, std::size_t max_merges) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& sentence : corpus) {
    for (const auto& unit : sentence.units) ++counts[unit];
  }
  return train_bpe(counts, max_merges);
}

MergeList train_bpe(const std::map<std::string, std::uint64_t>& pretoken_counts,
                    std::size_t max_merges) {
  BpeTrainer trainer(pretoken_counts);
  return trainer.run(max_merges);
}

Segmentation segment(std::string_view pretoken, const MergeList& merges, std::size_t k) {
  check_k(merges, k);
  return apply_merges(pretoken, merges, k, 0.0, nullptr);
}

Segmentation segment_dropout(std::string_view pretoken, const MergeList& merges, std::size_t k,
                             const DropoutConfig& cfg, Rng& rng) {
  check_k(merges, k);
  if (!(cfg.p >= 0.0 && cfg.p <= 1.0)) {
    throw Error(ErrorCode::kConfigInvalid, "dropout probability must lie in [0, 1]");
  }
  return apply_merges(pretoken, merges, k, cfg.p, &rng);
}

Rng dropout_stream(const DropoutConfig& cfg, std::uint64_t line) { return Rng(cfg.seed, line); }

std::set<std::string> vocabulary(const MergeList& merges, std::size_t k) {
  check_k(merges, k);
  std::set<std::string> vocab = merges.alphabet();
  for (std::size_t i = 0; i < k; ++i) vocab.insert(merges.rules()[i].merged());
  return vocab;
}

Segmenter::Segmenter(const MergeList& merges, std::size_t k) : merges_(&merges), k_(k) {
  check_k(merges, k);
}

const Segmentation& Segmenter::segment(const std::string& pretoken) {
  auto it = cache_.find(pretoken);
  if (it == cache_.end()) {
    it = cache_.emplace(pretoken, apply_merges(pretoken, *merges_, k_, 0.0, nullptr)).first;
  }
  return it->second;
}

std::vector<std::string> Segmenter::segment_sentence(const PreTokenizedSentence& sentence) {
  std::vector<std::string> out;
  for (const auto& unit : sentence.units) {
    const auto& seg = segment(unit);
    out.insert(out.end(), seg.begin(), seg.end());
  }
  return out;
}

std::vector<std::string> segment_sentence_dropout(const PreTokenizedSentence& sentence,
                                                  const MergeList& merges, std::size_t k,
                                                  const DropoutConfig& cfg, Rng& rng) {
  std::vector<std::string> out;
  for (const auto& unit : sentence.units) {
    auto seg = segment_dropout(unit, merges, k, cfg, rng);
    out.insert(out.end(), std::make_move_iterator(seg.begin()), std::make_move_iterator(seg.end()));
  }
  return out;
}

void write_merges(std::ostream& out, const MergeList& merges) {
  out << kMergesHeader << '\n' << kAlphabetTag;
  for (const auto& ch : merges.alphabet()) out << ' ' << ch;
  out << '\n';
  for (const auto& r : merges.rules()) out << r.left << ' ' << r.right << '\n';
}

MergeList read_merges(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMergesHeader) {
    throw Error(ErrorCode::kParse, "missing merges header '" + std::string(kMergesHeader) + "'");
  }
  if (!std::getline(in, line) || line.rfind(kAlphabetTag, 0) != 0) {
    throw Error(ErrorCode::kParse, "missing " + std::string(kAlphabetTag) + " line");
  }
  std::set<std::string> alphabet;
  {
    std::istringstream fields(line.substr(kAlphabetTag.size()));
    std::string ch;
    while (fields >> ch) alphabet.insert(ch);
  }
  std::vector<MergeRule> rules;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos || line.find(' ', space + 1) != std::string::npos) {
      throw Error(ErrorCode::kParse, "bad merge line " + std::to_string(rules.size() + 3) + ": '" + line + "'");
    }
    rules.push_back(MergeRule{line.substr(0, space), line.substr(space + 1), rules.size()});
  }
  return MergeList(std::move(rules), std::move(alphabet));
}

void save_merges(const std::string& path, const MergeList& merges) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  write_merges(out, merges);
}

MergeList load_merges(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path);
  return read_merges(in);
}

}  // namespace charcurve

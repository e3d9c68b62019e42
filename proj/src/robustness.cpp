#include "charcurve/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "charcurve/curriculum.hpp"
#include "charcurve/error.hpp"
#include "charcurve/format.hpp"
#include "charcurve/utf8.hpp"

namespace charcurve {
namespace {

const std::map<char, std::string>& qwerty_neighbours() {
  static const std::map<char, std::string> table = [] {
    const std::vector<std::string> rows{"qwertyuiop", "asdfghjkl", "zxcvbnm"};
    std::map<char, std::string> t;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        std::string n;
        if (c > 0) n += rows[r][c - 1];
        if (c + 1 < rows[r].size()) n += rows[r][c + 1];
        for (const std::size_t rr : {r - 1, r + 1}) {
          if (rr >= rows.size()) continue;  // wraps for r == 0
          for (const std::size_t cc : {c, c + 1}) {
            const std::size_t col = rr < r ? cc : cc - 1;
            if (col < rows[rr].size()) n += rows[rr][col];
          }
        }
        t[rows[r][c]] = n;
      }
    }
    return t;
  }();
  return table;
}

bool ascii_letters(const std::string& w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  });
}

}  // namespace

void NoiseLexicon::add(const std::string& word, const std::string& variant) {
  if (word.empty() || variant.empty()) throw Error(ErrorCode::kParse, "empty lexicon entry");
  if (word == variant) throw Error(ErrorCode::kParse, "variant equals its word: " + word);
  auto& list = entries_[word];
  if (std::find(list.begin(), list.end(), variant) == list.end()) list.push_back(variant);
}

const std::vector<std::string>* NoiseLexicon::variants(const std::string& word) const {
  const auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

NoiseLexicon read_lexicon(std::istream& in) {
  NoiseLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(ErrorCode::kParse, "lexicon line " + std::to_string(lineno) + ": expected two fields");
    }
    if (!utf8::is_valid(line)) {
      throw Error(ErrorCode::kInvalidEncoding, "lexicon line " + std::to_string(lineno));
    }
    try {
      lex.add(line.substr(0, tab), line.substr(tab + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, "lexicon line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return lex;
}

NoiseLexicon load_lexicon(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path);
  return read_lexicon(in);
}

std::string lexicon_tsv(const NoiseLexicon& lex) {
  std::string out;
  for (const auto& [word, vars] : lex.entries())
    for (const auto& v : vars) out += word + "\t" + v + "\n";
  return out;
}

NoiseLexicon synthetic_lexicon(const std::vector<std::string>& words, int variants_per_word,
                               std::uint64_t seed, std::size_t min_length) {
  NoiseLexicon lex;
  const auto& keys = qwerty_neighbours();
  std::vector<std::string> sorted = words;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (std::size_t wi = 0; wi < sorted.size(); ++wi) {
    const auto& w = sorted[wi];
    if (w.size() < min_length || !ascii_letters(w)) continue;
    Rng rng(seed, wi);
    std::vector<std::string> made;
    for (int attempt = 0; attempt < 8 * variants_per_word && static_cast<int>(made.size()) < variants_per_word; ++attempt) {
      std::string v = w;
      const std::size_t pos = rng.below(w.size());
      if (rng.bernoulli(0.5)) {
        v.erase(pos, 1);
      } else {
        const char lower = static_cast<char>(w[pos] | 0x20);
        const auto it = keys.find(lower);
        if (it == keys.end()) continue;
        char repl = it->second[rng.below(it->second.size())];
        if (w[pos] != lower) repl = static_cast<char>(repl & ~0x20);
        v[pos] = repl;
      }
      if (v == w || std::find(made.begin(), made.end(), v) != made.end()) continue;
      made.push_back(v);
      lex.add(w, v);
    }
  }
  return lex;
}

std::string inject_noise_line(const std::string& line, const NoiseLexicon& lex, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kConfigInvalid, "noise probability must lie in [0, 1]");
  const auto chars = utf8::split_chars(line);
  std::string out;
  std::string word;
  const auto flush = [&] {
    if (word.empty()) return;
    const bool hit = rng.uniform() < p;
    const double pick = rng.uniform();
    const auto* vars = lex.variants(word);
    if (hit && vars != nullptr) {
      const auto n = vars->size();
      out += (*vars)[std::min(n - 1, static_cast<std::size_t>(pick * static_cast<double>(n)))];
    } else {
      out += word;
    }
    word.clear();
  };
  for (const auto& ch : chars) {
    if (utf8::is_space(utf8::decode(ch).front())) {
      flush();
      out += ch;
    } else {
      word += ch;
    }
  }
  flush();
  return out;
}

std::vector<std::string> inject_noise(const std::vector<std::string>& sentences,
                                      const NoiseLexicon& lex, double p, std::uint64_t seed) {
  std::vector<std::string> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    Rng rng(seed, i);
    out.push_back(inject_noise_line(sentences[i], lex, p, rng));
  }
  return out;
}

SensitivityFit fit_sensitivity(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw Error(ErrorCode::kDegenerateDesign, "need at least two points");
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::kDegenerateDesign, "all noise probabilities are equal");
  SensitivityFit f;
  f.beta = sxy / sxx;
  f.alpha = my - f.beta * mx;
  for (const auto& [x, y] : points) {
    const double r = y - (f.alpha + f.beta * x);
    f.residual_sse += r * r;
  }
  double scale = 0.0;
  for (const auto& pt : points) scale = std::max(scale, std::fabs(pt.second));
  // Zero up to rounding of the fit itself.
  if (std::fabs(f.alpha) <= 1e-12 * scale) throw Error(ErrorCode::kAlphaZero, "intercept is zero; beta/alpha undefined");
  f.ratio = f.beta / f.alpha;
  return f;
}

std::vector<SweepPoint> sweep_points(const ToyModel& model, const MergeList& merges, std::size_t k,
                                     const std::vector<std::string>& sources,
                                     const std::vector<std::string>& refs, const NoiseLexicon& lex,
                                     const std::vector<double>& p_values, std::uint64_t seed,
                                     int beam) {
  if (p_values.size() < 2 || std::find(p_values.begin(), p_values.end(), 0.0) == p_values.end()) {
    throw Error(ErrorCode::kConfigInvalid, "sweep needs at least two noise levels including 0");
  }
  std::vector<SweepPoint> out;
  for (const double p : p_values) {
    const auto noisy = inject_noise(sources, lex, p, seed);
    const auto ev = evaluate_translation(model, merges, k, noisy, refs, beam);
    out.push_back({p, ev.bleu.value, ev.chrf.value});
  }
  return out;
}

SweepResult sensitivity_sweep(const ToyModel& model, const MergeList& merges, std::size_t k,
                              const std::vector<std::string>& sources,
                              const std::vector<std::string>& refs, const NoiseLexicon& lex,
                              const std::vector<double>& p_values, std::uint64_t seed, int beam) {
  SweepResult r;
  r.points = sweep_points(model, merges, k, sources, refs, lex, p_values, seed, beam);
  std::vector<std::pair<double, double>> pts;
  for (const auto& pt : r.points) pts.emplace_back(pt.p, pt.bleu);
  r.fit = fit_sensitivity(pts);
  return r;
}

std::string sweep_csv(const SweepResult& r) {
  std::string out = "p,bleu,chrf\n";
  for (const auto& pt : r.points) {
    out += format_fixed(pt.p, 4) + "," + format_fixed(pt.bleu, 2) + "," + format_fixed(pt.chrf, 4) + "\n";
  }
  out += "# alpha=" + format_fixed(r.fit.alpha, 4) + " beta=" + format_fixed(r.fit.beta, 4) +
         " ratio=" + format_fixed(r.fit.ratio, 6) + "\n";
  return out;
}

std::vector<std::pair<double, double>> parse_points_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::pair<double, double>> pts;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::kParse, "line " + std::to_string(lineno) + ": expected p,bleu");
    const std::string a = line.substr(0, comma);
    std::string b = line.substr(comma + 1);
    if (const auto c2 = b.find(','); c2 != std::string::npos) b = b.substr(0, c2);
    try {
      std::size_t ua = 0, ub = 0;
      const double p = std::stod(a, &ua);
      const double y = std::stod(b, &ub);
      if (ua != a.size() || ub != b.size()) throw std::invalid_argument("trailing");
      pts.emplace_back(p, y);
    } catch (const std::exception&) {
      if (lineno == 1) continue;  // header
      throw Error(ErrorCode::kParse, "line " + std::to_string(lineno) + ": not a number");
    }
  }
  return pts;
}

std::string sweep_svg(const std::vector<SweepSeries>& series) {
  const double w = 480, h = 320, left = 56, right = 120, top = 20, bottom = 44;
  double max_p = 0.0, max_y = 0.0;
  for (const auto& s : series)
    for (const auto& pt : s.points) {
      max_p = std::max(max_p, pt.p);
      max_y = std::max(max_y, pt.bleu);
    }
  if (max_p <= 0.0) max_p = 1.0;
  max_y = max_y <= 0.0 ? 1.0 : std::ceil(max_y / 10.0) * 10.0;
  const double pw = w - left - right, ph = h - top - bottom;
  const auto sx = [&](double p) { return left + pw * p / max_p; };
  const auto sy = [&](double y) { return top + ph * (1.0 - y / max_y); };
  const std::vector<std::string> colours{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_fixed(w, 0) +
                    "\" height=\"" + format_fixed(h, 0) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<line x1=\"" + format_fixed(left, 1) + "\" y1=\"" + format_fixed(top + ph, 1) + "\" x2=\"" +
         format_fixed(left + pw, 1) + "\" y2=\"" + format_fixed(top + ph, 1) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + format_fixed(left, 1) + "\" y1=\"" + format_fixed(top, 1) + "\" x2=\"" +
         format_fixed(left, 1) + "\" y2=\"" + format_fixed(top + ph, 1) + "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double p = max_p * t / 4.0, y = max_y * t / 4.0;
    out += "<text x=\"" + format_fixed(sx(p), 1) + "\" y=\"" + format_fixed(top + ph + 16, 1) +
           "\" text-anchor=\"middle\">" + format_fixed(p, 2) + "</text>\n";
    out += "<text x=\"" + format_fixed(left - 6, 1) + "\" y=\"" + format_fixed(sy(y) + 4, 1) +
           "\" text-anchor=\"end\">" + format_fixed(y, 1) + "</text>\n";
  }
  out += "<text x=\"" + format_fixed(left + pw / 2, 1) + "\" y=\"" + format_fixed(h - 8, 1) +
         "\" text-anchor=\"middle\">noise probability p</text>\n";
  out += "<text x=\"14\" y=\"" + format_fixed(top + ph / 2, 1) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
         format_fixed(top + ph / 2, 1) + ")\">BLEU</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& colour = colours[i % colours.size()];
    std::string pts;
    for (const auto& pt : series[i].points) pts += format_fixed(sx(pt.p), 1) + "," + format_fixed(sy(pt.bleu), 1) + " ";
    if (!pts.empty()) pts.pop_back();
    out += "<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    for (const auto& pt : series[i].points) {
      out += "<circle cx=\"" + format_fixed(sx(pt.p), 1) + "\" cy=\"" + format_fixed(sy(pt.bleu), 1) +
             "\" r=\"3\" fill=\"" + colour + "\"/>\n";
    }
    const double ly = top + 14.0 * static_cast<double>(i + 1);
    out += "<line x1=\"" + format_fixed(left + pw + 10, 1) + "\" y1=\"" + format_fixed(ly - 4, 1) + "\" x2=\"" +
           format_fixed(left + pw + 26, 1) + "\" y2=\"" + format_fixed(ly - 4, 1) + "\" stroke=\"" + colour +
           "\" stroke-width=\"2\"/>\n";
    std::string label;
    for (const char c : series[i].label) {
      if (c == '<') label += "&lt;";
      else if (c == '>') label += "&gt;";
      else if (c == '&') label += "&amp;";
      else label += c;
    }
    out += "<text x=\"" + format_fixed(left + pw + 30, 1) + "\" y=\"" + format_fixed(ly, 1) + "\">" + label + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace charcurve

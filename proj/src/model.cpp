#include "charcurve/model.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <cmath>
#include <limits>
#include <numeric>
#include <variant>

#include "charcurve/error.hpp"

namespace charcurve {
namespace {

constexpr std::array<std::string_view, Vocab::kReserved> kReservedNames = {"<pad>", "<s>", "</s>",
                                                                         "<unk>"};

const std::vector<std::string>& reserved_storage() {
  static const std::vector<std::string> names(kReservedNames.begin(), kReservedNames.end());
  return names;
}

std::string layer_name(const char* stack, int layer, const char* part) {
  return std::string(stack) + "." + std::to_string(layer) + "." + part;
}

// Tensor shapes in canonical order; also the enumeration behind count_params.
struct TensorSpec {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  enum class Init { kEmbedding, kGlorot, kZero, kOne } init;
  bool embedding;
};

void add_attention(std::vector<TensorSpec>& out, const std::string& prefix, std::size_t d) {
  using I = TensorSpec::Init;
  for (const char* w : {"wq", "wk", "wv", "wo"}) {
    out.push_back({prefix + "." + w, d, d, I::kGlorot, false});
    out.push_back({prefix + ".b" + std::string(w + 1), 1, d, I::kZero, false});
  }
}

void add_layer_norm(std::vector<TensorSpec>& out, const std::string& prefix, std::size_t d) {
  using I = TensorSpec::Init;
  out.push_back({prefix + ".g", 1, d, I::kOne, false});
  out.push_back({prefix + ".b", 1, d, I::kZero, false});
}

void add_feed_forward(std::vector<TensorSpec>& out, const std::string& prefix, std::size_t d,
                      std::size_t ff) {
  using I = TensorSpec::Init;
  out.push_back({prefix + ".w1", d, ff, I::kGlorot, false});
  out.push_back({prefix + ".b1", 1, ff, I::kZero, false});
  out.push_back({prefix + ".w2", ff, d, I::kGlorot, false});
  out.push_back({prefix + ".b2", 1, d, I::kZero, false});
}

std::vector<TensorSpec> tensor_specs(const ModelConfig& cfg, std::size_t src_vocab,
                                     std::size_t tgt_vocab) {
  using I = TensorSpec::Init;
  const auto d = static_cast<std::size_t>(cfg.d_model);
  const auto ff = static_cast<std::size_t>(cfg.d_ff);
  std::vector<TensorSpec> out;
  out.push_back({"src_embed", src_vocab, d, I::kEmbedding, true});
  out.push_back({"tgt_embed", tgt_vocab, d, I::kEmbedding, true});
  for (int l = 0; l < cfg.layers_enc; ++l) {
    add_layer_norm(out, layer_name("enc", l, "ln1"), d);
    add_attention(out, layer_name("enc", l, "self"), d);
    add_layer_norm(out, layer_name("enc", l, "ln2"), d);
    add_feed_forward(out, layer_name("enc", l, "ff"), d, ff);
  }
  add_layer_norm(out, "enc.ln", d);
  for (int l = 0; l < cfg.layers_dec; ++l) {
    add_layer_norm(out, layer_name("dec", l, "ln1"), d);
    add_attention(out, layer_name("dec", l, "self"), d);
    add_layer_norm(out, layer_name("dec", l, "ln2"), d);
    add_attention(out, layer_name("dec", l, "cross"), d);
    add_layer_norm(out, layer_name("dec", l, "ln3"), d);
    add_feed_forward(out, layer_name("dec", l, "ff"), d, ff);
  }
  add_layer_norm(out, "dec.ln", d);
  out.push_back({"out.w", tgt_vocab, d, I::kEmbedding, true});
  out.push_back({"out.b", 1, tgt_vocab, I::kZero, true});
  return out;
}

bool is_vocab_tensor(std::string_view name) {
  return name == "src_embed" || name == "tgt_embed" || name == "out.w" || name == "out.b";
}

// Sinusoidal position encoding value for (pos, dim).
double position_code(std::size_t pos, std::size_t dim, std::size_t d_model) {
  const double rate =
      std::pow(10000.0, static_cast<double>(2 * (dim / 2)) / static_cast<double>(d_model));
  const double angle = static_cast<double>(pos) / rate;
  return dim % 2 == 0 ? std::sin(angle) : std::cos(angle);
}

template <typename T>
Matrix<T> position_block(const Offsets& offsets, std::size_t d) {
  Matrix<T> pe(offsets.back(), d);
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s)
    for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r)
      for (std::size_t c = 0; c < d; ++c) pe.at(r, c) = static_cast<T>(position_code(r - offsets[s], c, d));
  return pe;
}

// ---------------------------------------------------------------------------
// Tape forward pass over a packed batch.

template <typename T>
class TapeForward {
 public:
  using G = Graph<T>;
  using Id = typename G::Id;

  TapeForward(G& g, const ToyModel& m, Rng* rng) : g_(g), m_(m), rng_(rng) {}

  struct Result {
    Id logits;
    std::vector<int> targets;
    Offsets tgt_offsets;
  };

  Result run(std::span<const EncodedPair> batch) {
    const auto d = static_cast<std::size_t>(m_.config.d_model);
    std::vector<int> src_ids, tgt_in, tgt_out;
    Offsets src_off{0}, tgt_off{0};
    for (const auto& pair : batch) {
      src_ids.insert(src_ids.end(), pair.src.begin(), pair.src.end());
      src_ids.push_back(Vocab::kEos);
      src_off.push_back(src_ids.size());
      tgt_in.push_back(Vocab::kBos);
      tgt_in.insert(tgt_in.end(), pair.tgt.begin(), pair.tgt.end());
      tgt_out.insert(tgt_out.end(), pair.tgt.begin(), pair.tgt.end());
      tgt_out.push_back(Vocab::kEos);
      tgt_off.push_back(tgt_in.size());
    }

    Id x = embed("src_embed", src_ids, src_off, d);
    for (int l = 0; l < m_.config.layers_enc; ++l) {
      Id h = norm(x, layer_name("enc", l, "ln1"));
      x = g_.add(x, drop(attend(h, h, layer_name("enc", l, "self"), false, src_off, src_off)));
      h = norm(x, layer_name("enc", l, "ln2"));
      x = g_.add(x, drop(feed_forward(h, layer_name("enc", l, "ff"))));
    }
    const Id memory = norm(x, "enc.ln");

    Id y = embed("tgt_embed", tgt_in, tgt_off, d);
    for (int l = 0; l < m_.config.layers_dec; ++l) {
      Id h = norm(y, layer_name("dec", l, "ln1"));
      y = g_.add(y, drop(attend(h, h, layer_name("dec", l, "self"), true, tgt_off, tgt_off)));
      h = norm(y, layer_name("dec", l, "ln2"));
      y = g_.add(y, drop(attend(h, memory, layer_name("dec", l, "cross"), false, tgt_off, src_off)));
      h = norm(y, layer_name("dec", l, "ln3"));
      y = g_.add(y, drop(feed_forward(h, layer_name("dec", l, "ff"))));
    }
    y = norm(y, "dec.ln");
    const Id logits = g_.add_row(g_.matmul_nt(y, p("out.w")), p("out.b"));
    return Result{logits, std::move(tgt_out), std::move(tgt_off)};
  }

 private:
  Id p(std::string_view name) { return g_.param(m_.param(name)); }

  Id embed(const char* table, const std::vector<int>& ids, const Offsets& off, std::size_t d) {
    Id e = g_.scale(g_.gather_rows(p(table), ids), static_cast<T>(std::sqrt(static_cast<double>(d))));
    e = g_.add(e, g_.constant(position_block<T>(off, d)));
    return drop(e);
  }

  Id drop(Id x) {
    if (rng_ == nullptr) return x;
    return g_.dropout(x, m_.config.dropout, *rng_);
  }

  Id norm(Id x, const std::string& prefix) {
    return g_.layer_norm(x, p(prefix + ".g"), p(prefix + ".b"));
  }

  Id linear(Id x, const std::string& w, const std::string& b) {
    return g_.add_row(g_.matmul(x, p(w)), p(b));
  }

  Id attend(Id query_in, Id kv_in, const std::string& prefix, bool causal, const Offsets& q_off,
            const Offsets& k_off) {
    const Id q = linear(query_in, prefix + ".wq", prefix + ".bq");
    const Id k = linear(kv_in, prefix + ".wk", prefix + ".bk");
    const Id v = linear(kv_in, prefix + ".wv", prefix + ".bv");
    const Id o = g_.attention(q, k, v, static_cast<std::size_t>(m_.config.heads), causal, q_off, k_off);
    return linear(o, prefix + ".wo", prefix + ".bo");
  }

  Id feed_forward(Id x, const std::string& prefix) {
    const Id h = g_.relu(linear(x, prefix + ".w1", prefix + ".b1"));
    return linear(h, prefix + ".w2", prefix + ".b2");
  }

  G& g_;
  const ToyModel& m_;
  Rng* rng_;
};

template <typename T>
LossResult forward_loss_t(ToyModel& model, std::span<const EncodedPair> batch, bool compute_grad,
                          Rng* rng, bool smoothing) {
  Graph<T> g(compute_grad);
  TapeForward<T> fwd(g, model, rng);
  auto res = fwd.run(batch);
  const double eps = smoothing ? model.config.label_smoothing : 0.0;
  const auto loss_sum = g.cross_entropy(res.logits, res.targets, eps);
  LossResult out;
  out.tokens = res.targets.size();
  out.loss = static_cast<double>(g.value(loss_sum).data[0]) / static_cast<double>(out.tokens);
  if (compute_grad) {
    model.zero_grad();
    g.backward(loss_sum, static_cast<T>(1.0 / static_cast<double>(out.tokens)));
    for (auto& prm : model.params) {
      if (const auto* grad = g.param_grad(prm)) {
        for (std::size_t i = 0; i < prm.grad.size(); ++i) prm.grad[i] = static_cast<double>(grad->data[i]);
      }
    }
  }
  return out;
}

template <typename T>
std::vector<double> score_batch_t(const ToyModel& model, std::span<const EncodedPair> pairs) {
  Graph<T> g(false);
  TapeForward<T> fwd(g, model, nullptr);
  auto res = fwd.run(pairs);
  const auto& logits = g.value(res.logits);
  std::vector<double> out;
  out.reserve(pairs.size());
  for (std::size_t s = 0; s + 1 < res.tgt_offsets.size(); ++s) {
    double total = 0.0;
    for (std::size_t r = res.tgt_offsets[s]; r < res.tgt_offsets[s + 1]; ++r) {
      const T* row = logits.row(r);
      const double mx = static_cast<double>(*std::max_element(row, row + logits.cols));
      double z = 0.0;
      for (std::size_t c = 0; c < logits.cols; ++c) z += std::exp(static_cast<double>(row[c]) - mx);
      total += static_cast<double>(row[res.targets[r]]) - mx - std::log(z);
    }
    out.push_back(total / static_cast<double>(res.tgt_offsets[s + 1] - res.tgt_offsets[s]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Incremental inference path. Plain loops over converted weights; shares no
// code with the tape.

template <typename T>
struct Dense {
  std::size_t rows = 0, cols = 0;
  std::vector<T> v;
};

template <typename T>
struct Weights {
  std::unordered_map<std::string, Dense<T>> t;
  std::size_t d = 0, ff = 0, heads = 0;
  int layers_enc = 0, layers_dec = 0;

  explicit Weights(const ToyModel& m) {
    d = static_cast<std::size_t>(m.config.d_model);
    ff = static_cast<std::size_t>(m.config.d_ff);
    heads = static_cast<std::size_t>(m.config.heads);
    layers_enc = m.config.layers_enc;
    layers_dec = m.config.layers_dec;
    for (const auto& prm : m.params) {
      Dense<T> dense{prm.rows, prm.cols, std::vector<T>(prm.size())};
      for (std::size_t i = 0; i < prm.size(); ++i) dense.v[i] = static_cast<T>(prm.value[i]);
      t.emplace(prm.name, std::move(dense));
    }
  }
  const Dense<T>& operator[](const std::string& name) const { return t.at(name); }
};

// out[cols] = x[rows] * W[rows, cols] + b
template <typename T>
std::vector<T> affine(const std::vector<T>& x, const Dense<T>& w, const Dense<T>& b) {
  std::vector<T> out(b.v.begin(), b.v.end());
  for (std::size_t r = 0; r < w.rows; ++r) {
    const T xv = x[r];
    const T* wr = w.v.data() + r * w.cols;
    for (std::size_t c = 0; c < w.cols; ++c) out[c] += xv * wr[c];
  }
  return out;
}

template <typename T>
std::vector<T> normalize(const std::vector<T>& x, const Dense<T>& g, const Dense<T>& b) {
  const std::size_t n = x.size();
  T mean = T(0);
  for (T v : x) mean += v;
  mean /= static_cast<T>(n);
  T var = T(0);
  for (T v : x) var += (v - mean) * (v - mean);
  var /= static_cast<T>(n);
  const T inv = T(1) / std::sqrt(var + T(1e-5));
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (x[i] - mean) * inv * g.v[i] + b.v[i];
  return out;
}

// Single query against cached keys/values (each a list of d-vectors).
template <typename T>
std::vector<T> attend_one(const std::vector<T>& q, const std::vector<std::vector<T>>& keys,
                          const std::vector<std::vector<T>>& values, std::size_t heads) {
  const std::size_t d = q.size();
  const std::size_t dh = d / heads;
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
  std::vector<T> out(d, T(0));
  std::vector<T> w(keys.size());
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t c0 = h * dh;
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < keys.size(); ++j) {
      T dot = T(0);
      for (std::size_t c = 0; c < dh; ++c) dot += q[c0 + c] * keys[j][c0 + c];
      w[j] = dot * inv_sqrt;
      mx = std::max(mx, w[j]);
    }
    T sum = T(0);
    for (auto& v : w) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (std::size_t j = 0; j < keys.size(); ++j) {
      const T p = w[j] / sum;
      for (std::size_t c = 0; c < dh; ++c) out[c0 + c] += p * values[j][c0 + c];
    }
  }
  return out;
}

template <typename T>
void add_into(std::vector<T>& x, const std::vector<T>& y) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
}

template <typename T>
std::vector<T> feed_forward_one(const Weights<T>& w, const std::string& prefix, const std::vector<T>& x) {
  auto h = affine(x, w[prefix + ".w1"], w[prefix + ".b1"]);
  for (auto& v : h) v = v > T(0) ? v : T(0);
  return affine(h, w[prefix + ".w2"], w[prefix + ".b2"]);
}

template <typename T>
std::vector<T> embed_one(const Weights<T>& w, const char* table, int id, std::size_t pos) {
  const auto& e = w[table];
  std::vector<T> x(w.d);
  const T scale = static_cast<T>(std::sqrt(static_cast<double>(w.d)));
  for (std::size_t c = 0; c < w.d; ++c) {
    x[c] = e.v[static_cast<std::size_t>(id) * w.d + c] * scale +
           static_cast<T>(position_code(pos, c, w.d));
  }
  return x;
}

template <typename T>
struct DecoderState {
  std::shared_ptr<const Weights<T>> w;
  // Per decoder layer: cross-attention keys/values and self-attention cache.
  std::vector<std::vector<std::vector<T>>> cross_k, cross_v, self_k, self_v;
  std::size_t pos = 0;

  DecoderState(std::shared_ptr<const Weights<T>> weights, std::span<const int> src_ids)
      : w(std::move(weights)) {
    const Weights<T>& W = *w;
    std::vector<int> ids(src_ids.begin(), src_ids.end());
    ids.push_back(Vocab::kEos);
    std::vector<std::vector<T>> xs;
    for (std::size_t i = 0; i < ids.size(); ++i) xs.push_back(embed_one(W, "src_embed", ids[i], i));
    for (int l = 0; l < W.layers_enc; ++l) {
      const std::string pre = "enc." + std::to_string(l) + ".";
      std::vector<std::vector<T>> q, k, v;
      for (const auto& x : xs) {
        const auto h = normalize(x, W[pre + "ln1.g"], W[pre + "ln1.b"]);
        q.push_back(affine(h, W[pre + "self.wq"], W[pre + "self.bq"]));
        k.push_back(affine(h, W[pre + "self.wk"], W[pre + "self.bk"]));
        v.push_back(affine(h, W[pre + "self.wv"], W[pre + "self.bv"]));
      }
      for (std::size_t i = 0; i < xs.size(); ++i) {
        add_into(xs[i], affine(attend_one(q[i], k, v, W.heads), W[pre + "self.wo"], W[pre + "self.bo"]));
        const auto h = normalize(xs[i], W[pre + "ln2.g"], W[pre + "ln2.b"]);
        add_into(xs[i], feed_forward_one(W, pre + "ff", h));
      }
    }
    for (auto& x : xs) x = normalize(x, W["enc.ln.g"], W["enc.ln.b"]);
    const auto layers = static_cast<std::size_t>(W.layers_dec);
    cross_k.resize(layers);
    cross_v.resize(layers);
    self_k.resize(layers);
    self_v.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      const std::string pre = "dec." + std::to_string(l) + ".cross.";
      for (const auto& m : xs) {
        cross_k[l].push_back(affine(m, W[pre + "wk"], W[pre + "bk"]));
        cross_v[l].push_back(affine(m, W[pre + "wv"], W[pre + "bv"]));
      }
    }
  }

  std::vector<double> step(int input_id) {
    const Weights<T>& W = *w;
    auto x = embed_one(W, "tgt_embed", input_id, pos);
    for (int l = 0; l < W.layers_dec; ++l) {
      const auto li = static_cast<std::size_t>(l);
      const std::string pre = "dec." + std::to_string(l) + ".";
      auto h = normalize(x, W[pre + "ln1.g"], W[pre + "ln1.b"]);
      const auto q = affine(h, W[pre + "self.wq"], W[pre + "self.bq"]);
      self_k[li].push_back(affine(h, W[pre + "self.wk"], W[pre + "self.bk"]));
      self_v[li].push_back(affine(h, W[pre + "self.wv"], W[pre + "self.bv"]));
      add_into(x, affine(attend_one(q, self_k[li], self_v[li], W.heads), W[pre + "self.wo"], W[pre + "self.bo"]));
      h = normalize(x, W[pre + "ln2.g"], W[pre + "ln2.b"]);
      const auto cq = affine(h, W[pre + "cross.wq"], W[pre + "cross.bq"]);
      add_into(x, affine(attend_one(cq, cross_k[li], cross_v[li], W.heads), W[pre + "cross.wo"], W[pre + "cross.bo"]));
      h = normalize(x, W[pre + "ln3.g"], W[pre + "ln3.b"]);
      add_into(x, feed_forward_one(W, pre + "ff", h));
    }
    x = normalize(x, W["dec.ln.g"], W["dec.ln.b"]);
    ++pos;
    const auto& ow = W["out.w"];
    const auto& ob = W["out.b"];
    std::vector<double> logits(ow.rows);
    for (std::size_t r = 0; r < ow.rows; ++r) {
      T acc = ob.v[r];
      const T* wr = ow.v.data() + r * ow.cols;
      for (std::size_t c = 0; c < ow.cols; ++c) acc += x[c] * wr[c];
      logits[r] = static_cast<double>(acc);
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    for (auto& v : logits) v -= log_z;
    return logits;
  }
};

template <typename T>
struct BeamEntry {
  DecoderState<T> state;
  std::vector<int> ids;
  double log_prob = 0.0;
  std::vector<double> next;
};

template <typename T>
Hypothesis beam_search(const ToyModel& model, std::span<const int> src_ids, int beam) {
  auto weights = std::make_shared<const Weights<T>>(model);
  const auto max_units = static_cast<std::size_t>(model.config.max_seq_len - 1);
  const auto width = static_cast<std::size_t>(beam);

  std::vector<BeamEntry<T>> active;
  {
    DecoderState<T> st(weights, src_ids);
    auto next = st.step(Vocab::kBos);
    active.push_back(BeamEntry<T>{std::move(st), {}, 0.0, std::move(next)});
  }
  std::vector<Hypothesis> finished;
  while (!active.empty() && finished.size() < width) {
    struct Cand {
      double score;
      std::size_t from;
      int token;
    };
    std::vector<Cand> cands;
    for (std::size_t h = 0; h < active.size(); ++h) {
      for (std::size_t v = 0; v < active[h].next.size(); ++v) {
        const auto tok = static_cast<int>(v);
        if (tok == Vocab::kPad || tok == Vocab::kBos) continue;
        cands.push_back({active[h].log_prob + active[h].next[v], h, tok});
      }
    }
    const std::size_t keep = std::min(width - finished.size(), cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Cand& a, const Cand& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.from != b.from) return a.from < b.from;
                        return a.token < b.token;
                      });
    std::vector<BeamEntry<T>> next_active;
    for (std::size_t c = 0; c < keep; ++c) {
      const Cand& cand = cands[c];
      const BeamEntry<T>& parent = active[cand.from];
      if (cand.token == Vocab::kEos) {
        finished.push_back(Hypothesis{parent.ids, cand.score, parent.ids.size() + 1, true});
        continue;
      }
      std::vector<int> ids = parent.ids;
      ids.push_back(cand.token);
      if (ids.size() >= max_units) {
        finished.push_back(Hypothesis{std::move(ids), cand.score, parent.ids.size() + 1, false});
        continue;
      }
      BeamEntry<T> child{parent.state, std::move(ids), cand.score, {}};
      child.next = child.state.step(cand.token);
      next_active.push_back(std::move(child));
    }
    active = std::move(next_active);
  }
  for (auto& a : active) finished.push_back(Hypothesis{a.ids, a.log_prob, a.ids.size(), false});
  const auto best = std::max_element(finished.begin(), finished.end(),
                                     [](const Hypothesis& a, const Hypothesis& b) {
                                       return a.normalized() < b.normalized();
                                     });
  return *best;
}

void check_len(std::size_t len, int max_len, const char* side) {
  if (len + 1 > static_cast<std::size_t>(max_len)) {
    throw Error(ErrorCode::kSequenceTooLong, std::string(side) + " has " + std::to_string(len) +
                                                 " units; limit is " + std::to_string(max_len - 1));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

void ModelConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw Error(ErrorCode::kConfigInvalid, msg); };
  if (layers_enc < 1 || layers_dec < 1) fail("layer counts must be >= 1");
  if (d_model < 1 || heads < 1 || d_ff < 1) fail("dimensions must be >= 1");
  if (d_model % heads != 0) fail("d_model must be divisible by heads");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) fail("label_smoothing must lie in [0, 1)");
  if (max_seq_len < 2) fail("max_seq_len must be >= 2");
}

Vocab::Vocab() : rows_(reserved_storage()) { index(); }

Vocab::Vocab(const std::set<std::string>& units) : rows_(reserved_storage()) {
  for (const auto& u : units) {
    if (std::find(kReservedNames.begin(), kReservedNames.end(), u) != kReservedNames.end()) {
      throw Error(ErrorCode::kConfigInvalid, "unit '" + u + "' collides with a reserved token");
    }
    rows_.push_back(u);
  }
  index();
}

Vocab::Vocab(std::vector<std::string> rows) : rows_(std::move(rows)) {
  if (rows_.size() < kReserved ||
      !std::equal(kReservedNames.begin(), kReservedNames.end(), rows_.begin())) {
    throw Error(ErrorCode::kParse, "vocabulary must start with the reserved tokens");
  }
  index();
  if (ids_.size() != rows_.size()) throw Error(ErrorCode::kParse, "duplicate vocabulary entry");
}

void Vocab::index() {
  ids_.clear();
  ids_.reserve(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) ids_.emplace(rows_[i], static_cast<int>(i));
}

int Vocab::id(std::string_view unit) const {
  const auto it = ids_.find(std::string(unit));
  if (it == ids_.end() || it->second < static_cast<int>(kReserved)) return kUnk;
  return it->second;
}

bool Vocab::contains(std::string_view unit) const { return id(unit) != kUnk; }

std::vector<int> Vocab::encode(std::span<const std::string> units) const {
  std::vector<int> out;
  out.reserve(units.size());
  for (const auto& u : units) out.push_back(id(u));
  return out;
}

UnitSeq Vocab::decode(std::span<const int> ids) const {
  UnitSeq out;
  for (const int i : ids)
    if (i >= static_cast<int>(kReserved)) out.push_back(unit(i));
  return out;
}

std::span<const std::string> reserved_units() { return reserved_storage(); }

ParamTensor& ToyModel::param(std::string_view name) {
  for (auto& p : params)
    if (p.name == name) return p;
  throw Error(ErrorCode::kInternal, "no parameter named " + std::string(name));
}

const ParamTensor& ToyModel::param(std::string_view name) const {
  for (const auto& p : params)
    if (p.name == name) return p;
  throw Error(ErrorCode::kInternal, "no parameter named " + std::string(name));
}

void ToyModel::zero_grad() {
  for (auto& p : params) p.grad.assign(p.size(), 0.0);
}

ToyModel init_model(const ModelConfig& cfg, const Vocab& src_vocab, const Vocab& tgt_vocab,
                    std::uint64_t seed) {
  cfg.validate();
  if (src_vocab.size() <= Vocab::kReserved || tgt_vocab.size() <= Vocab::kReserved) {
    throw Error(ErrorCode::kConfigInvalid, "vocabularies must contain at least one unit");
  }
  ToyModel m{cfg, src_vocab, tgt_vocab, {}};
  const auto specs = tensor_specs(cfg, src_vocab.size(), tgt_vocab.size());
  const double embed_std = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    ParamTensor p{s.name, s.rows, s.cols, std::vector<double>(s.rows * s.cols, 0.0),
                  std::vector<double>(s.rows * s.cols, 0.0)};
    Rng rng(seed, i);
    switch (s.init) {
      case TensorSpec::Init::kEmbedding:
        for (auto& v : p.value) v = rng.normal() * embed_std;
        break;
      case TensorSpec::Init::kGlorot: {
        const double a = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
        for (auto& v : p.value) v = (2.0 * rng.uniform() - 1.0) * a;
        break;
      }
      case TensorSpec::Init::kOne:
        std::fill(p.value.begin(), p.value.end(), 1.0);
        break;
      case TensorSpec::Init::kZero:
        break;
    }
    m.params.push_back(std::move(p));
  }
  return m;
}

ParamCounts count_params(const ToyModel& model) {
  ParamCounts c;
  for (const auto& p : model.params) (is_vocab_tensor(p.name) ? c.embedding : c.non_embedding) += p.size();
  return c;
}

ToyModel restrict_vocab(const ToyModel& model, const std::set<std::string>& new_src_units,
                        const std::set<std::string>& new_tgt_units) {
  const auto restrict_rows = [](const Vocab& old, const std::set<std::string>& keep,
                                const char* side) {
    for (const auto& u : keep) {
      if (!old.contains(u)) {
        throw Error(ErrorCode::kNotASubset,
                    std::string(side) + " unit '" + u + "' is not in the current vocabulary");
      }
    }
    std::vector<std::string> rows(reserved_storage());
    std::vector<std::size_t> old_rows{0, 1, 2, 3};
    for (std::size_t r = Vocab::kReserved; r < old.size(); ++r) {
      if (keep.count(old.rows()[r])) {
        rows.push_back(old.rows()[r]);
        old_rows.push_back(r);
      }
    }
    return std::make_pair(Vocab(std::move(rows)), old_rows);
  };
  auto [src, src_rows] = restrict_rows(model.src_vocab, new_src_units, "source");
  auto [tgt, tgt_rows] = restrict_rows(model.tgt_vocab, new_tgt_units, "target");

  ToyModel out{model.config, std::move(src), std::move(tgt), {}};
  for (const auto& p : model.params) {
    ParamTensor q = p;
    const std::vector<std::size_t>* rows = nullptr;
    if (p.name == "src_embed") rows = &src_rows;
    if (p.name == "tgt_embed" || p.name == "out.w") rows = &tgt_rows;
    if (rows != nullptr) {
      q.rows = rows->size();
      q.value.clear();
      for (const std::size_t r : *rows)
        q.value.insert(q.value.end(), p.value.begin() + static_cast<std::ptrdiff_t>(r * p.cols),
                       p.value.begin() + static_cast<std::ptrdiff_t>((r + 1) * p.cols));
    } else if (p.name == "out.b") {
      q.cols = tgt_rows.size();
      q.value.clear();
      for (const std::size_t r : tgt_rows) q.value.push_back(p.value[r]);
    }
    q.grad.assign(q.value.size(), 0.0);
    out.params.push_back(std::move(q));
  }
  return out;
}

EncodedPair encode_pair(const ToyModel& model, std::span<const std::string> src,
                        std::span<const std::string> tgt) {
  check_len(src.size(), model.config.max_seq_len, "source");
  check_len(tgt.size(), model.config.max_seq_len, "target");
  return EncodedPair{model.src_vocab.encode(src), model.tgt_vocab.encode(tgt)};
}

LossResult forward_loss(ToyModel& model, std::span<const EncodedPair> batch, bool compute_grad,
                        Rng* dropout_rng, bool label_smoothing) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyInput, "empty batch");
  for (const auto& pair : batch) {
    check_len(pair.src.size(), model.config.max_seq_len, "source");
    check_len(pair.tgt.size(), model.config.max_seq_len, "target");
  }
  if (model.config.precision == Precision::kFloat64) {
    return forward_loss_t<double>(model, batch, compute_grad, dropout_rng, label_smoothing);
  }
  return forward_loss_t<float>(model, batch, compute_grad, dropout_rng, label_smoothing);
}

std::vector<double> score_batch(const ToyModel& model, std::span<const EncodedPair> pairs) {
  if (pairs.empty()) return {};
  for (const auto& pair : pairs) {
    check_len(pair.src.size(), model.config.max_seq_len, "source");
    check_len(pair.tgt.size(), model.config.max_seq_len, "target");
  }
  if (model.config.precision == Precision::kFloat64) return score_batch_t<double>(model, pairs);
  return score_batch_t<float>(model, pairs);
}

double score_ids(const ToyModel& model, const EncodedPair& pair) {
  return score_batch(model, std::span<const EncodedPair>(&pair, 1)).front();
}

double score(const ToyModel& model, std::span<const std::string> src,
             std::span<const std::string> tgt) {
  return score_ids(model, encode_pair(model, src, tgt));
}

struct StepDecoder::Impl {
  std::variant<DecoderState<float>, DecoderState<double>> state;
};

StepDecoder::StepDecoder(const ToyModel& model, std::span<const int> src_ids) {
  check_len(src_ids.size(), model.config.max_seq_len, "source");
  if (model.config.precision == Precision::kFloat64) {
    impl_ = std::make_unique<Impl>(Impl{DecoderState<double>(std::make_shared<const Weights<double>>(model), src_ids)});
  } else {
    impl_ = std::make_unique<Impl>(Impl{DecoderState<float>(std::make_shared<const Weights<float>>(model), src_ids)});
  }
}

StepDecoder::~StepDecoder() = default;
StepDecoder::StepDecoder(const StepDecoder& other) : impl_(std::make_unique<Impl>(*other.impl_)) {}
StepDecoder& StepDecoder::operator=(const StepDecoder& other) {
  if (this != &other) impl_ = std::make_unique<Impl>(*other.impl_);
  return *this;
}
StepDecoder::StepDecoder(StepDecoder&&) noexcept = default;
StepDecoder& StepDecoder::operator=(StepDecoder&&) noexcept = default;

std::vector<double> StepDecoder::step(int input_id) {
  return std::visit([&](auto& s) { return s.step(input_id); }, impl_->state);
}

std::size_t StepDecoder::position() const {
  return std::visit([](const auto& s) { return s.pos; }, impl_->state);
}

Hypothesis translate_ids(const ToyModel& model, std::span<const int> src_ids, int beam) {
  if (beam < 1) throw Error(ErrorCode::kConfigInvalid, "beam must be >= 1");
  check_len(src_ids.size(), model.config.max_seq_len, "source");
  const bool wide = model.config.precision == Precision::kFloat64;
  const auto search = [&](int width) {
    return wide ? beam_search<double>(model, src_ids, width) : beam_search<float>(model, src_ids, width);
  };
  Hypothesis best = search(beam);
  if (beam > 1) {
    Hypothesis greedy = search(1);
    if (greedy.normalized() > best.normalized()) best = std::move(greedy);
  }
  return best;
}

UnitSeq translate(const ToyModel& model, std::span<const std::string> src, int beam) {
  check_len(src.size(), model.config.max_seq_len, "source");
  const auto ids = model.src_vocab.encode(src);
  return model.tgt_vocab.decode(translate_ids(model, ids, beam).ids);
}

}  // namespace charcurve

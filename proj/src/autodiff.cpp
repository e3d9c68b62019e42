#include "charcurve/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "charcurve/error.hpp"

namespace charcurve {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInternal, std::string("shape mismatch in ") + what);
}

// c[n,m] += a[n,k] * b[k,m]
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    T* ci = c + i * m;
    const T* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ai[p];
      if (av == T(0)) continue;
      const T* bp = b + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

// c[n,m] += a[n,k] * b[m,k]^T, via a transposed copy of b so the inner loop
// vectorizes.
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m) {
  std::vector<T> bt(k * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * m + j] = b[j * k + p];
  gemm_nn(a, bt.data(), c, n, k, m);
}

// c[k,m] += a[n,k]^T * b[n,m]
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const T* ai = a + i * k;
    const T* bi = b + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ai[p];
      if (av == T(0)) continue;
      T* cp = c + p * m;
      for (std::size_t j = 0; j < m; ++j) cp[j] += av * bi[j];
    }
  }
}

}  // namespace

template <typename T>
typename Graph<T>::Id Graph<T>::push(Matrix<T> value) {
  nodes_.push_back(Node{std::move(value), {}, {}});
  return nodes_.size() - 1;
}

template <typename T>
Matrix<T>& Graph<T>::grad_of(Id id) {
  Node& n = nodes_[id];
  if (n.grad.data.size() != n.value.data.size()) n.grad = Matrix<T>(n.value.rows, n.value.cols);
  return n.grad;
}

template <typename T>
typename Graph<T>::Id Graph<T>::param(const ParamTensor& p) {
  const auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return it->second;
  Matrix<T> m(p.rows, p.cols);
  for (std::size_t i = 0; i < p.size(); ++i) m.data[i] = static_cast<T>(p.value[i]);
  const Id id = push(std::move(m));
  param_nodes_.emplace(&p, id);
  return id;
}

template <typename T>
typename Graph<T>::Id Graph<T>::constant(Matrix<T> value) {
  return push(std::move(value));
}

template <typename T>
typename Graph<T>::Id Graph<T>::gather_rows(Id table, std::span<const int> ids) {
  const std::size_t d = value(table).cols;
  Matrix<T> out(ids.size(), d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto r = static_cast<std::size_t>(ids[i]);
    require(r < value(table).rows, "gather_rows");
    std::copy_n(value(table).row(r), d, out.row(i));
  }
  const Id id = push(std::move(out));
  if (record_) {
    std::vector<int> rows(ids.begin(), ids.end());
    nodes_[id].back = [this, id, table, rows = std::move(rows), d] {
      const Matrix<T>& g = nodes_[id].grad;
      Matrix<T>& gt = grad_of(table);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        T* dst = gt.row(static_cast<std::size_t>(rows[i]));
        const T* src = g.row(i);
        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
      }
    };
  }
  return id;
}

template <typename T>
typename Graph<T>::Id Graph<T>::matmul(Id a, Id b) {
  const auto& A = value(a);
  const auto& B = value(b);
  require(A.cols == B.rows, "matmul");
  Matrix<T> out(A.rows, B.cols);
  gemm_nn(A.data.data(), B.data.data(), out.data.data(), A.rows, A.cols, B.cols);
  const Id id = push(std::move(out));
  if (record_) {
    nodes_[id].back = [this, id, a, b] {
      const auto& G = nodes_[id].grad;
      const auto& A = value(a);
      const auto& B = value(b);
      gemm_nt(G.data.data(), B.data.data(), grad_of(a).data.data(), A.rows, B.cols, A.cols);
      gemm_tn(A.data.data(), G.data.data(), grad_of(b).data.data(), A.rows, A.cols, B.cols);
    };
  }
  return id;
}

template <typename T>
typename Graph<T>::Id Graph<T>::matmul_nt(Id a, Id b) {
  const auto& A = value(a);
  const auto& B = value(b);
  require(A.cols == B.cols, "matmul_nt");
  Matrix<T> out(A.rows, B.rows);
  gemm_nt(A.data.data(), B.data.data(), out.data.data(), A.rows, A.cols, B.rows);
  const Id id = push(std::move(out));
  if (record_) {
    nodes_[id].back = [this, id, a, b] {
      const auto& G = nodes_[id].grad;
      const auto& A = value(a);
      const auto& B = value(b);
      // dA = G B, dB = G^T A
      gemm_nn(G.data.data(), B.data.data(), grad_of(a).data.data(), A.rows, B.rows, A.cols);
      gemm_tn(G.data.data(), A.data.data(), grad_of(b).data.data(), A.rows, B.rows, A.cols);
    };
  }
  return id;
}

template <typename T>
typename Graph<T>::Id Graph<T>::add(Id a, Id b) {
  const auto& A = value(a);
  const auto& B = value(b);
  require(A.rows == B.rows && A.cols == B.cols, "add");
  Matrix<T> out = A;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += B.data[i];
  const Id id = push(std::move(out));
  if (record_) {
    nodes_[id].back = [this, id, a, b] {
      const auto& G = nodes_[id].grad;
      auto& ga = grad_of(a);
      for (std::size_t i = 0; i < G.data.size(); ++i) ga.data[i] += G.data[i];
      auto& gb = grad_of(b);
      for (std::size_t i = 0; i < G.data.size(); ++i) gb.data[i] += G.data[i];
    };
  }
  return id;
}

template <typename T>
typename Graph<T>::Id Graph<T>::add_row(Id x, Id bias) {
  const auto& X = value(x);
  const auto& B = value(bias);
  require(B.rows == 1 && B.cols == X.cols, "add_row");
  Matrix<T> out = X;
  for (std::size_t r = 0; r < out.rows; ++r) {
    T* o = out.row(r);
    for (std::size_t c = 0; c < out.cols; ++c) o[c] += B.data[c];
  }
  const Id id = push(std::move(out));
  if (record_) {
    nodes_[id].back = [this, id, x, bias] {
      const auto& G = nodes_[id].grad;
      auto& gx = grad_of(x);
      auto& gb = grad_of(bias);
      for (std::size_t r = 0; r < G.rows; ++r) {
        const T* g = G.row(r);
        T* dx = gx.row(r);
        for (std::size_t c = 0; c < G.cols; ++c) {
          dx[c] += g[c];
          gb.data[c] += g[c];
        }
      }
    };
  }
  return id;
}

template <typename T>
typename Graph<T>::Id Graph<T>::scale(Id x, T factor) {
  Matrix<T> out = value(x);
  for (auto& v : out.data) v *= factor;
  const Id id = push(std::move(out));
  if (record_) {
    nodes_[id].back = [this, id, x, factor] {
      const auto& G = nodes_[id].grad;
      auto& gx = grad_of(x);
      for (std::size_t i = 0; i < G.data.size(); ++i) gx.data[i] += factor * G.data[i];
    };
  }
  return id;
}

template <typename T>
typename Graph<T>::Id Graph<T>::relu(Id x) {
  Matrix<T> out = value(x);
  for (auto& v : out.data) v = v > T(0) ? v : T(0);
  const Id id = push(std::move(out));
  if (record_) {
    nodes_[id].back = [this, id, x] {
      const auto& G = nodes_[id].grad;
      const auto& Y = value(id);
      auto& gx = grad_of(x);
      for (std::size_t i = 0; i < G.data.size(); ++i)
        if (Y.data[i] > T(0)) gx.data[i] += G.data[i];
    };
  }
  return id;
}

template <typename T>
typename Graph<T>::Id Graph<T>::layer_norm(Id x, Id gain, Id bias, T eps) {
  const auto& X = value(x);
  const auto& g = value(gain);
  const auto& b = value(bias);
  require(g.cols == X.cols && b.cols == X.cols && g.rows == 1 && b.rows == 1, "layer_norm");
  const std::size_t n = X.cols;
  Matrix<T> out(X.rows, n);
  Matrix<T> xhat(X.rows, n);
  std::vector<T> inv_std(X.rows);
  for (std::size_t r = 0; r < X.rows; ++r) {
    const T* xr = X.row(r);
    T mean = T(0);
    for (std::size_t c = 0; c < n; ++c) mean += xr[c];
    mean /= static_cast<T>(n);
    T var = T(0);
    for (std::size_t c = 0; c < n; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= static_cast<T>(n);
    const T inv = T(1) / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t c = 0; c < n; ++c) {
      const T h = (xr[c] - mean) * inv;
      xhat.at(r, c) = h;
      out.at(r, c) = h * g.data[c] + b.data[c];
    }
  }
  const Id id = push(std::move(out));
  if (record_) {
    nodes_[id].back = [this, id, x, gain, bias, xhat = std::move(xhat),
                       inv_std = std::move(inv_std), n] {
      const auto& G = nodes_[id].grad;
      const auto& g = value(gain);
      auto& gx = grad_of(x);
      auto& gg = grad_of(gain);
      auto& gb = grad_of(bias);
      std::vector<T> dxhat(n);
      for (std::size_t r = 0; r < G.rows; ++r) {
        const T* dy = G.row(r);
        const T* h = xhat.row(r);
        T sum_d = T(0);
        T sum_dh = T(0);
        for (std::size_t c = 0; c < n; ++c) {
          gg.data[c] += dy[c] * h[c];
          gb.data[c] += dy[c];
          dxhat[c] = dy[c] * g.data[c];
          sum_d += dxhat[c];
          sum_dh += dxhat[c] * h[c];
        }
        const T scale = inv_std[r] / static_cast<T>(n);
        T* dx = gx.row(r);
        for (std::size_t c = 0; c < n; ++c) {
          dx[c] += scale * (static_cast<T>(n) * dxhat[c] - sum_d - h[c] * sum_dh);
        }
      }
    };
  }
  return id;
}

template <typename T>
typename Graph<T>::Id Graph<T>::dropout(Id x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  Matrix<T> out = value(x);
  std::vector<T> mask(out.data.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng.bernoulli(rate) ? T(0) : keep_scale;
    out.data[i] *= mask[i];
  }
  const Id id = push(std::move(out));
  if (record_) {
    nodes_[id].back = [this, id, x, mask = std::move(mask)] {
      const auto& G = nodes_[id].grad;
      auto& gx = grad_of(x);
      for (std::size_t i = 0; i < G.data.size(); ++i) gx.data[i] += mask[i] * G.data[i];
    };
  }
  return id;
}

template <typename T>
typename Graph<T>::Id Graph<T>::attention(Id q, Id k, Id v, std::size_t heads, bool causal,
                                          const Offsets& q_offsets, const Offsets& k_offsets) {
  const auto& Q = value(q);
  const auto& K = value(k);
  const auto& V = value(v);
  require(Q.cols == K.cols && K.cols == V.cols && K.rows == V.rows, "attention");
  require(heads > 0 && Q.cols % heads == 0, "attention heads");
  require(q_offsets.size() == k_offsets.size() && !q_offsets.empty(), "attention offsets");
  require(q_offsets.back() == Q.rows && k_offsets.back() == K.rows, "attention offsets");
  const std::size_t d = Q.cols;
  const std::size_t dh = d / heads;
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));

  // probs[seg][head] is an [nq, nk] row-major block.
  std::vector<std::vector<T>> probs((q_offsets.size() - 1) * heads);
  Matrix<T> out(Q.rows, d);
  for (std::size_t s = 0; s + 1 < q_offsets.size(); ++s) {
    const std::size_t q0 = q_offsets[s], nq = q_offsets[s + 1] - q0;
    const std::size_t k0 = k_offsets[s], nk = k_offsets[s + 1] - k0;
    for (std::size_t h = 0; h < heads; ++h) {
      auto& P = probs[s * heads + h];
      P.assign(nq * nk, T(0));
      const std::size_t c0 = h * dh;
      for (std::size_t i = 0; i < nq; ++i) {
        const T* qi = Q.row(q0 + i) + c0;
        const std::size_t limit = causal ? std::min(nk, i + 1) : nk;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < limit; ++j) {
          const T* kj = K.row(k0 + j) + c0;
          T dot = T(0);
          for (std::size_t c = 0; c < dh; ++c) dot += qi[c] * kj[c];
          P[i * nk + j] = dot * inv_sqrt;
          mx = std::max(mx, P[i * nk + j]);
        }
        T sum = T(0);
        for (std::size_t j = 0; j < limit; ++j) {
          P[i * nk + j] = std::exp(P[i * nk + j] - mx);
          sum += P[i * nk + j];
        }
        T* oi = out.row(q0 + i) + c0;
        for (std::size_t j = 0; j < limit; ++j) {
          P[i * nk + j] /= sum;
          const T p = P[i * nk + j];
          const T* vj = V.row(k0 + j) + c0;
          for (std::size_t c = 0; c < dh; ++c) oi[c] += p * vj[c];
        }
      }
    }
  }
  const Id id = push(std::move(out));
  if (record_) {
    nodes_[id].back = [this, id, q, k, v, heads, causal, q_offsets, k_offsets,
                       probs = std::move(probs), dh, inv_sqrt] {
      const auto& G = nodes_[id].grad;
      const auto& Q = value(q);
      const auto& K = value(k);
      const auto& V = value(v);
      auto& gq = grad_of(q);
      auto& gk = grad_of(k);
      auto& gv = grad_of(v);
      std::vector<T> dp;
      for (std::size_t s = 0; s + 1 < q_offsets.size(); ++s) {
        const std::size_t q0 = q_offsets[s], nq = q_offsets[s + 1] - q0;
        const std::size_t k0 = k_offsets[s], nk = k_offsets[s + 1] - k0;
        for (std::size_t h = 0; h < heads; ++h) {
          const auto& P = probs[s * heads + h];
          const std::size_t c0 = h * dh;
          dp.assign(nk, T(0));
          for (std::size_t i = 0; i < nq; ++i) {
            const std::size_t limit = causal ? std::min(nk, i + 1) : nk;
            const T* gi = G.row(q0 + i) + c0;
            T dot_pg = T(0);
            for (std::size_t j = 0; j < limit; ++j) {
              const T* vj = V.row(k0 + j) + c0;
              T acc = T(0);
              for (std::size_t c = 0; c < dh; ++c) acc += gi[c] * vj[c];
              dp[j] = acc;
              dot_pg += acc * P[i * nk + j];
              T* dvj = gv.row(k0 + j) + c0;
              const T p = P[i * nk + j];
              for (std::size_t c = 0; c < dh; ++c) dvj[c] += p * gi[c];
            }
            const T* qi = Q.row(q0 + i) + c0;
            T* dqi = gq.row(q0 + i) + c0;
            for (std::size_t j = 0; j < limit; ++j) {
              const T ds = P[i * nk + j] * (dp[j] - dot_pg) * inv_sqrt;
              if (ds == T(0)) continue;
              const T* kj = K.row(k0 + j) + c0;
              T* dkj = gk.row(k0 + j) + c0;
              for (std::size_t c = 0; c < dh; ++c) {
                dqi[c] += ds * kj[c];
                dkj[c] += ds * qi[c];
              }
            }
          }
        }
      }
    };
  }
  return id;
}

template <typename T>
typename Graph<T>::Id Graph<T>::cross_entropy(Id logits, std::span<const int> targets,
                                              double smoothing) {
  const auto& L = value(logits);
  require(L.rows == targets.size(), "cross_entropy");
  const std::size_t vocab = L.cols;
  const T eps = static_cast<T>(smoothing);
  const T uniform = eps / static_cast<T>(vocab);
  Matrix<T> probs(L.rows, vocab);
  // Accumulate in double so the float path stays well conditioned.
  double total = 0.0;
  for (std::size_t r = 0; r < L.rows; ++r) {
    const T* lr = L.row(r);
    T mx = *std::max_element(lr, lr + vocab);
    double sum = 0.0;
    for (std::size_t c = 0; c < vocab; ++c) sum += std::exp(static_cast<double>(lr[c] - mx));
    const double log_z = static_cast<double>(mx) + std::log(sum);
    double row_loss = 0.0;
    const auto gold = static_cast<std::size_t>(targets[r]);
    require(gold < vocab, "cross_entropy target");
    for (std::size_t c = 0; c < vocab; ++c) {
      const double logp = static_cast<double>(lr[c]) - log_z;
      probs.at(r, c) = static_cast<T>(std::exp(logp));
      double q = static_cast<double>(uniform);
      if (c == gold) q += 1.0 - smoothing;
      row_loss -= q * logp;
    }
    total += row_loss;
  }
  Matrix<T> out(1, 1);
  out.data[0] = static_cast<T>(total);
  const Id id = push(std::move(out));
  if (record_) {
    std::vector<int> gold(targets.begin(), targets.end());
    nodes_[id].back = [this, id, logits, probs = std::move(probs), gold = std::move(gold), eps,
                       uniform] {
      const T g = nodes_[id].grad.data[0];
      auto& gl = grad_of(logits);
      for (std::size_t r = 0; r < probs.rows; ++r) {
        const T* p = probs.row(r);
        T* dl = gl.row(r);
        for (std::size_t c = 0; c < probs.cols; ++c) {
          T q = uniform;
          if (c == static_cast<std::size_t>(gold[r])) q += T(1) - eps;
          dl[c] += g * (p[c] - q);
        }
      }
    };
  }
  return id;
}

template <typename T>
void Graph<T>::backward(Id root, T seed) {
  if (!record_) throw Error(ErrorCode::kInternal, "backward on a graph built without recording");
  require(value(root).data.size() == 1, "backward root");
  grad_of(root).data[0] = seed;
  for (std::size_t i = root + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.data.empty()) continue;
    if (n.back) n.back();
  }
}

template <typename T>
const Matrix<T>* Graph<T>::param_grad(const ParamTensor& p) const {
  const auto it = param_nodes_.find(&p);
  if (it == param_nodes_.end()) return nullptr;
  const Node& n = nodes_[it->second];
  return n.grad.data.empty() ? nullptr : &n.grad;
}

template class Graph<float>;
template class Graph<double>;

}  // namespace charcurve

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "charcurve/rng.hpp"

namespace charcurve {

// Trainable tensor. Master values and gradients are kept in double regardless
// of the compute precision.
struct ParamTensor {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;

  std::size_t size() const { return rows * cols; }
};

// Row-major dense matrix.
template <typename T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, T(0)) {}

  T& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  T at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  T* row(std::size_t r) { return data.data() + r * cols; }
  const T* row(std::size_t r) const { return data.data() + r * cols; }
};

// Sequence boundaries inside a packed batch: segment i spans rows
// [offsets[i], offsets[i+1]).
using Offsets = std::vector<std::size_t>;

// Reverse-mode differentiation tape over dense matrices.
//
// Nodes are appended in evaluation order, so reverse creation order is a valid
// topological order for backward(). Parameter leaves are created once per
// graph; after backward() their gradients are read with param_grad().
// With record == false no backward closures are kept.
template <typename T>
class Graph {
 public:
  using Id = std::size_t;

  explicit Graph(bool record) : record_(record) {}

  Id param(const ParamTensor& p);
  Id constant(Matrix<T> value);

  Id gather_rows(Id table, std::span<const int> ids);
  Id matmul(Id a, Id b);     // a[n,k] * b[k,m]
  Id matmul_nt(Id a, Id b);  // a[n,k] * b[m,k]^T
  Id add(Id a, Id b);
  Id add_row(Id x, Id bias);  // bias[1,m] broadcast over rows
  Id scale(Id x, T factor);
  Id relu(Id x);
  Id layer_norm(Id x, Id gain, Id bias, T eps = T(1e-5));
  Id dropout(Id x, double rate, Rng& rng);

  // Multi-head scaled dot-product attention over packed segments. Query
  // segment i attends only to key segment i; causal masks keys after the
  // query position. Projections are applied by the caller.
  Id attention(Id q, Id k, Id v, std::size_t heads, bool causal, const Offsets& q_offsets,
               const Offsets& k_offsets);

  // Sum over rows of the label-smoothed cross-entropy; result is [1,1].
  // Target distribution: (1 - smoothing) on the gold id plus smoothing / V
  // spread over every id.
  Id cross_entropy(Id logits, std::span<const int> targets, double smoothing);

  const Matrix<T>& value(Id id) const { return nodes_[id].value; }

  // Seeds d(root) = seed and propagates; root must be [1,1].
  void backward(Id root, T seed = T(1));

  // Gradient of a parameter leaf after backward(); nullptr when the parameter
  // was not used or received no gradient.
  const Matrix<T>* param_grad(const ParamTensor& p) const;

 private:
  struct Node {
    Matrix<T> value;
    Matrix<T> grad;
    std::function<void()> back;
  };

  Id push(Matrix<T> value);
  Matrix<T>& grad_of(Id id);

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const ParamTensor*, Id> param_nodes_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace charcurve

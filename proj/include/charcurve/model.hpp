#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "charcurve/autodiff.hpp"
#include "charcurve/rng.hpp"

namespace charcurve {

enum class Precision { kFloat32, kFloat64 };

// Encoder-decoder Transformer shape. Desk-scale defaults; Transformer Base is
// layers 6+6, d_model 512, heads 8, d_ff 2048.
struct ModelConfig {
  int layers_enc = 1;
  int layers_dec = 1;
  int d_model = 64;
  int heads = 2;
  int d_ff = 128;
  double dropout = 0.1;
  double label_smoothing = 0.1;
  int max_seq_len = 128;
  Precision precision = Precision::kFloat32;

  // Throws kConfigInvalid.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

using UnitSeq = std::vector<std::string>;

// Unit -> row map. Rows 0-3 are always PAD, BOS, EOS, UNK.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr std::size_t kReserved = 4;

  Vocab();
  // Reserved rows followed by the units in set order.
  explicit Vocab(const std::set<std::string>& units);
  // Explicit row order; the first four rows must be the reserved names.
  explicit Vocab(std::vector<std::string> rows);

  std::size_t size() const { return rows_.size(); }
  int id(std::string_view unit) const;  // kUnk when absent
  bool contains(std::string_view unit) const;
  const std::string& unit(int id) const { return rows_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& rows() const { return rows_; }

  std::vector<int> encode(std::span<const std::string> units) const;
  // Drops reserved ids.
  UnitSeq decode(std::span<const int> ids) const;

  bool operator==(const Vocab& other) const { return rows_ == other.rows_; }

 private:
  void index();

  std::vector<std::string> rows_;
  std::unordered_map<std::string, int> ids_;
};

std::span<const std::string> reserved_units();

// Encoder-decoder parameters and vocabularies. Embeddings and the output
// projection are untied; the output projection stores one row per target unit.
struct ToyModel {
  ModelConfig config;
  Vocab src_vocab;
  Vocab tgt_vocab;
  std::vector<ParamTensor> params;

  ParamTensor& param(std::string_view name);
  const ParamTensor& param(std::string_view name) const;
  void zero_grad();
};

struct ParamCounts {
  std::size_t embedding = 0;      // source/target embeddings and output projection
  std::size_t non_embedding = 0;  // everything else
  std::size_t total() const { return embedding + non_embedding; }
};

// Deterministic in (cfg, vocab sizes, seed). Matrices get uniform Glorot init,
// embeddings N(0, 1/d_model) (they are scaled by sqrt(d_model) on lookup),
// layer-norm gains 1 and all biases 0. Every tensor draws from its own stream.
ToyModel init_model(const ModelConfig& cfg, const Vocab& src_vocab, const Vocab& tgt_vocab,
                    std::uint64_t seed);

ParamCounts count_params(const ToyModel& model);

// Keeps rows of surviving units verbatim (in their old relative order) and
// every non-vocabulary tensor unchanged. Throws kNotASubset.
ToyModel restrict_vocab(const ToyModel& model, const std::set<std::string>& new_src_units,
                        const std::set<std::string>& new_tgt_units);

struct EncodedPair {
  std::vector<int> src;
  std::vector<int> tgt;
};

// Unknown units map to UNK. Throws kSequenceTooLong when either side plus its
// EOS/BOS exceeds max_seq_len.
EncodedPair encode_pair(const ToyModel& model, std::span<const std::string> src,
                        std::span<const std::string> tgt);

struct LossResult {
  double loss = 0.0;        // mean over target positions (units + EOS)
  std::size_t tokens = 0;
};

// Label-smoothed cross-entropy of a batch. With compute_grad, parameter
// gradients are reset and filled with d(loss)/d(param). dropout_rng enables
// dropout; nullptr evaluates deterministically.
LossResult forward_loss(ToyModel& model, std::span<const EncodedPair> batch, bool compute_grad,
                        Rng* dropout_rng = nullptr, bool label_smoothing = true);

// Length-normalized log p(tgt + EOS | src).
double score(const ToyModel& model, std::span<const std::string> src,
             std::span<const std::string> tgt);
double score_ids(const ToyModel& model, const EncodedPair& pair);
std::vector<double> score_batch(const ToyModel& model, std::span<const EncodedPair> pairs);

struct Hypothesis {
  std::vector<int> ids;  // without BOS/EOS
  double log_prob = 0.0;
  std::size_t length = 0;  // scored positions, EOS included when emitted
  bool finished = false;

  double normalized() const { return length == 0 ? 0.0 : log_prob / static_cast<double>(length); }
};

// Incremental decoder with cached keys/values. It does not use the tape and
// serves translation and stepwise probability checks.
class StepDecoder {
 public:
  StepDecoder(const ToyModel& model, std::span<const int> src_ids);
  ~StepDecoder();
  StepDecoder(const StepDecoder& other);
  StepDecoder& operator=(const StepDecoder& other);
  StepDecoder(StepDecoder&&) noexcept;
  StepDecoder& operator=(StepDecoder&&) noexcept;

  // Feeds the next decoder input id (BOS first) and returns the
  // log-probabilities of the following token.
  std::vector<double> step(int input_id);
  std::size_t position() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Length-normalized beam search (beam 1 is greedy). Stops at EOS or when the
// output reaches max_seq_len - 1 units. The greedy hypothesis is always a
// candidate, so the returned normalized score is never below greedy's.
Hypothesis translate_ids(const ToyModel& model, std::span<const int> src_ids, int beam = 4);
UnitSeq translate(const ToyModel& model, std::span<const std::string> src, int beam = 4);

// Checkpoint: JSON with format "charcurve-ckpt v1", config, vocab rows and
// named parameters (shape + flat values).
void save_checkpoint(const std::string& path, const ToyModel& model);
ToyModel load_checkpoint(const std::string& path);
std::string model_to_json(const ToyModel& model);
ToyModel model_from_json(std::string_view text);

}  // namespace charcurve

#include "charcurve/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "charcurve/error.hpp"

namespace charcurve {
namespace {

struct Adam {
  std::vector<std::vector<double>> m, v;
  int t = 0;

  explicit Adam(const ToyModel& model) {
    for (const auto& p : model.params) {
      m.emplace_back(p.size(), 0.0);
      v.emplace_back(p.size(), 0.0);
    }
  }

  void step(ToyModel& model, double lr, const TrainConfig& cfg) {
    ++t;
    const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double c2 = 1.0 - std::pow(cfg.adam_beta2, t);
    for (std::size_t i = 0; i < model.params.size(); ++i) {
      auto& p = model.params[i];
      auto& mi = m[i];
      auto& vi = v[i];
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double g = p.grad[j];
        mi[j] = cfg.adam_beta1 * mi[j] + (1.0 - cfg.adam_beta1) * g;
        vi[j] = cfg.adam_beta2 * vi[j] + (1.0 - cfg.adam_beta2) * g * g;
        p.value[j] -= lr * (mi[j] / c1) / (std::sqrt(vi[j] / c2) + cfg.adam_eps);
      }
    }
  }
};

}  // namespace

void TrainConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw Error(ErrorCode::kConfigInvalid, msg); };
  if (!(lr_scale > 0.0) || !(constant_lr > 0.0)) fail("learning rates must be > 0");
  if (warmup_steps < 1) fail("warmup_steps must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (max_steps < 1) fail("max_steps must be >= 1");
  if (patience < 1) fail("patience must be >= 1");
  if (eval_every < 1) fail("eval_every must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    fail("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) fail("adam_eps must be > 0");
}

double TrainConfig::learning_rate(int step, int d_model) const {
  if (mode == TrainMode::kFinetune) return constant_lr;
  const double s = static_cast<double>(std::max(step, 1));
  const double w = static_cast<double>(warmup_steps);
  return lr_scale / std::sqrt(static_cast<double>(d_model)) *
         std::min(1.0 / std::sqrt(s), s * std::pow(w, -1.5));
}

std::string train_mode_name(TrainMode m) { return m == TrainMode::kScratch ? "scratch" : "finetune"; }

double validation_loss(const ToyModel& model, std::span<const EncodedPair> valid,
                       std::size_t batch_size) {
  if (valid.empty()) throw Error(ErrorCode::kEmptyCorpus, "empty validation set");
  // forward_loss needs a mutable model only for gradients; none are taken here.
  auto& m = const_cast<ToyModel&>(model);
  double total = 0.0;
  std::size_t tokens = 0;
  for (std::size_t i = 0; i < valid.size(); i += batch_size) {
    const auto n = std::min(batch_size, valid.size() - i);
    const auto r = forward_loss(m, valid.subspan(i, n), false, nullptr, false);
    total += r.loss * static_cast<double>(r.tokens);
    tokens += r.tokens;
  }
  return total / static_cast<double>(tokens);
}

TrainResult train(const ToyModel& init, const EpochProvider& data,
                  std::span<const EncodedPair> valid, const TrainConfig& cfg) {
  cfg.validate();
  if (valid.empty()) throw Error(ErrorCode::kEmptyCorpus, "empty validation set");
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  ToyModel model = init;
  TrainResult best{init, {}};
  TrainLog& log = best.log;
  Adam adam(model);
  Rng order_rng(cfg.seed, 1);
  Rng dropout_rng(cfg.seed, 2);
  log.best_valid = validation_loss(model, valid);

  std::size_t epoch = 0;
  std::vector<EncodedPair> pairs;
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  double loss_sum = 0.0;
  int loss_steps = 0;
  int checks_without_gain = 0;
  std::size_t sentences = 0;
  std::size_t window_sentences = 0;
  auto window_start = Clock::now();

  for (int step = 1; step <= cfg.max_steps; ++step) {
    std::vector<EncodedPair> batch;
    while (batch.size() < static_cast<std::size_t>(cfg.batch_size)) {
      if (cursor == order.size()) {
        pairs = data(epoch++);
        if (pairs.empty()) throw Error(ErrorCode::kEmptyCorpus, "empty training corpus");
        order.resize(pairs.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        order_rng.shuffle(order);
        cursor = 0;
        // A batch never spans two epochs unless the corpus is smaller than it.
        if (!batch.empty() && pairs.size() >= static_cast<std::size_t>(cfg.batch_size)) break;
      }
      batch.push_back(pairs[order[cursor++]]);
    }
    const auto r = forward_loss(model, batch, true, &dropout_rng);
    adam.step(model, cfg.learning_rate(step, model.config.d_model), cfg);
    loss_sum += r.loss;
    ++loss_steps;
    sentences += batch.size();
    window_sentences += batch.size();
    log.steps_run = step;

    if (step % cfg.eval_every == 0 || step == cfg.max_steps) {
      const auto now = Clock::now();
      TrainLogEntry e;
      e.step = step;
      e.train_loss = loss_sum / loss_steps;
      e.valid_loss = validation_loss(model, valid);
      const double secs = std::chrono::duration<double>(now - window_start).count();
      e.sents_per_sec = secs > 0.0 ? static_cast<double>(window_sentences) / secs : 0.0;
      loss_sum = 0.0;
      loss_steps = 0;
      window_sentences = 0;
      if (e.valid_loss < log.best_valid) {
        e.improved = true;
        log.best_valid = e.valid_loss;
        log.best_step = step;
        best.model = model;
        checks_without_gain = 0;
      } else {
        ++checks_without_gain;
      }
      log.entries.push_back(e);
      window_start = Clock::now();
      if (checks_without_gain >= cfg.patience) {
        log.stopped_early = true;
        break;
      }
    }
  }
  for (auto& p : best.model.params) p.grad.assign(p.size(), 0.0);
  log.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  log.sents_per_sec = log.seconds > 0.0 ? static_cast<double>(sentences) / log.seconds : 0.0;
  return best;
}

TrainResult train(const ToyModel& init, std::span<const EncodedPair> pairs,
                  std::span<const EncodedPair> valid, const TrainConfig& cfg) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyCorpus, "empty training corpus");
  const std::vector<EncodedPair> fixed(pairs.begin(), pairs.end());
  return train(init, [&fixed](std::size_t) { return fixed; }, valid, cfg);
}

std::vector<EncodedPair> make_pairs(const ToyModel& model, std::span<const UnitSeq> src,
                                    std::span<const UnitSeq> tgt) {
  if (src.size() != tgt.size()) {
    throw Error(ErrorCode::kMisalignedCorpus, std::to_string(src.size()) + " source lines vs " +
                                                  std::to_string(tgt.size()) + " target lines");
  }
  std::vector<EncodedPair> out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out.push_back(encode_pair(model, src[i], tgt[i]));
  return out;
}

}  // namespace charcurve

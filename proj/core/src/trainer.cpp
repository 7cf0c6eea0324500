#include "sddlab/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#if defined(__SSE2__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

#include "sddlab/autodiff.hpp"
#include "sddlab/error.hpp"

namespace sddlab::train {

namespace {

// Flush-to-zero and denormals-are-zero for the scope. Gradients of a model
// that has memorized its training set fall into the subnormal range, where
// x86 arithmetic is 10-100x slower.
class FlushDenormals {
 public:
#if defined(__SSE2__)
  FlushDenormals() : saved_(_mm_getcsr()) {
    _mm_setcsr(saved_ | _MM_FLUSH_ZERO_ON | _MM_DENORMALS_ZERO_ON);
  }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned int saved_;
#endif
};

std::size_t correct_predictions(const Tensor<float>& logits, std::span<const int> labels) {
  const std::size_t n = logits.extent(0);
  const std::size_t k = logits.extent(1);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const float* row = logits.data() + i * k;
    const auto best = static_cast<int>(std::max_element(row, row + k) - row);
    if (best == labels[i]) ++hits;
  }
  return hits;
}

void check_labels(const data::Dataset& dataset, std::span<const int> labels) {
  if (labels.size() != dataset.size()) {
    throw DimensionError("trainer: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(dataset.size()) + " samples");
  }
}

}  // namespace

Evaluation evaluate(const vit::ViTConfig& config, const ParamSet<float>& params,
                    const data::Dataset& dataset, std::span<const int> labels,
                    std::size_t batch_size) {
  const FlushDenormals ftz;
  check_labels(dataset, labels);
  if (dataset.size() == 0) throw ContractError("evaluate: empty dataset");
  if (batch_size == 0) throw ConfigError("evaluate: batch_size must be positive");
  double loss_sum = 0.0;
  std::size_t hits = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < dataset.size(); start += batch_size) {
    const std::size_t end = std::min(dataset.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto batch_labels = labels.subspan(start, end - start);
    Tape<float> tape;
    auto bound = vit::bind(tape, params, false);
    auto logits = vit::vit_logits(tape, config, bound, dataset.gather_images(idx));
    auto loss = cross_entropy(logits, batch_labels);
    loss_sum += static_cast<double>(loss.value().item()) * static_cast<double>(idx.size());
    hits += correct_predictions(logits.value(), batch_labels);
  }
  const auto n = static_cast<double>(dataset.size());
  return {static_cast<double>(hits) / n, loss_sum / n};
}

RoundResult train_round(const vit::ViTConfig& config, ParamSet<float>& params,
                        const pruning::PruneMask& mask, const optim::TrainPolicy& policy,
                        const data::Dataset& train, std::span<const int> labels,
                        std::uint64_t seed, const EpochCallback& on_epoch) {
  const FlushDenormals ftz;
  policy.validate();
  check_labels(train, labels);
  if (train.size() == 0) throw ContractError("train_round: empty training set");

  optim::Optimizer<float> opt(policy, params);
  opt.apply_mask(params, mask);
  pruning::apply_mask(params, mask);

  const auto batch = static_cast<std::size_t>(policy.batch_size);
  const std::size_t per_epoch = (train.size() + batch - 1) / batch;
  const std::size_t total_steps = per_epoch * static_cast<std::size_t>(policy.epochs);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> batch_labels;

  RoundResult result;
  std::size_t step = 0;
  for (int epoch = 0; epoch < policy.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t hits = 0;
    double lr = policy.base_lr;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      batch_labels.clear();
      for (std::size_t i : idx) batch_labels.push_back(labels[i]);

      Tape<float> tape;
      auto bound = vit::bind(tape, params, true);
      auto logits = vit::vit_logits(tape, config, bound, train.gather_images(idx));
      auto loss = cross_entropy(logits, std::span<const int>(batch_labels));
      tape.backward(loss);

      GradSet<float> grads;
      grads.reserve(params.size());
      for (const auto& v : bound.vars) grads.push_back(tape.grad(v));
      pruning::mask_gradients(grads, params, mask);

      lr = policy.lr_at(step, total_steps, epoch);
      opt.step(params, grads, lr);
      ++step;

      loss_sum += static_cast<double>(loss.value().item()) * static_cast<double>(idx.size());
      hits += correct_predictions(logits.value(), batch_labels);
    }
    EpochLog log;
    log.epoch = epoch;
    log.lr = lr;
    log.train_loss = loss_sum / static_cast<double>(train.size());
    log.train_acc = static_cast<double>(hits) / static_cast<double>(train.size());
    result.epochs.push_back(log);
    result.lr_final = lr;
    if (on_epoch) on_epoch(log);
  }
  result.epochs_trained = policy.epochs;
  result.steps = static_cast<std::int64_t>(step);
  return result;
}

}  // namespace sddlab::train

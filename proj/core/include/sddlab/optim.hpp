#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sddlab/param_set.hpp"
#include "sddlab/pruning.hpp"

namespace sddlab::optim {

enum class OptimizerKind { SgdMomentum, Adam };
enum class ScheduleKind { Cosine, MultiStep, Constant };

std::string to_string(OptimizerKind kind);
std::string to_string(ScheduleKind kind);
OptimizerKind optimizer_from_string(const std::string& name);
ScheduleKind schedule_from_string(const std::string& name);

struct TrainPolicy {
  OptimizerKind optimizer = OptimizerKind::Adam;
  double base_lr = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  ScheduleKind schedule = ScheduleKind::Cosine;
  double lr_min = 0.0;              // cosine floor
  std::vector<int> milestones;      // multistep, in epochs
  double factor = 0.1;              // multistep decay
  int epochs = 10;
  int batch_size = 64;
  double weight_decay = 0.0;        // lambda, added to the gradient as lambda * w
  std::vector<std::string> decay_exclude;  // name substrings exempt from lambda

  void validate() const;
  // Learning rate for optimizer step `step` (0-based) of `total_steps`,
  // taken during `epoch`.
  double lr_at(std::size_t step, std::size_t total_steps, int epoch) const;
  bool decays(const std::string& param_name) const;

  friend bool operator==(const TrainPolicy&, const TrainPolicy&) = default;

  // Reference policies: ResNet with SGD and multistep decay, ViT with Adam and cosine.
  static TrainPolicy resnet_sgd();  // SGD 0.9, lr 0.1, x0.1 at 80/120, 160 epochs, bs 128
  static TrainPolicy vit_adam();    // Adam, lr 1e-4, cosine, lambda 0.03, 200 epochs
};

// lr_min + (lr_max - lr_min) * (1 + cos(pi * t / T)) / 2
double cosine_lr(std::size_t t, std::size_t total, double lr_max, double lr_min);

// lr0 * factor^(number of milestones <= epoch)
double multistep_lr(int epoch, std::span<const int> milestones, double factor, double lr0);

// g' = g + lambda * w; v' = beta * v + g'; w' = w - lr * v'
template <typename T>
void sgd_momentum_step(std::span<T> param, std::span<const T> grad, std::span<T> velocity,
                       double lr, double beta, double weight_decay);

// Bias-corrected Adam on g' = g + lambda * w; t counts from 1.
template <typename T>
void adam_step(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v,
               std::int64_t t, double lr, double beta1, double beta2, double eps,
               double weight_decay);

// Per-parameter optimizer state for one training round.
template <typename T>
class Optimizer {
 public:
  Optimizer(const TrainPolicy& policy, const ParamSet<T>& params);

  void step(ParamSet<T>& params, const GradSet<T>& grads, double lr);
  // Zeroes moment/velocity entries of masked coordinates.
  void apply_mask(const ParamSet<T>& params, const pruning::PruneMask& mask);
  std::int64_t steps_taken() const noexcept { return t_; }

 private:
  TrainPolicy policy_;
  std::vector<std::vector<T>> first_;   // velocity (sgd) or m (adam)
  std::vector<std::vector<T>> second_;  // v (adam)
  std::vector<double> decay_;
  std::int64_t t_ = 0;
};

}  // namespace sddlab::optim

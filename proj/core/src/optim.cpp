#include "sddlab/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sddlab::optim {

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Cosine: return "cosine";
    case ScheduleKind::MultiStep: return "multistep";
    case ScheduleKind::Constant: return "constant";
  }
  return "constant";
}

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "sgd" || name == "sgd-momentum" || name == "sgd_momentum") {
    return OptimizerKind::SgdMomentum;
  }
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

ScheduleKind schedule_from_string(const std::string& name) {
  if (name == "cosine") return ScheduleKind::Cosine;
  if (name == "multistep") return ScheduleKind::MultiStep;
  if (name == "constant") return ScheduleKind::Constant;
  throw ConfigError("unknown schedule '" + name + "' (expected cosine, multistep or constant)");
}

void TrainPolicy::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("train: " + msg); };
  if (!(base_lr > 0.0)) fail("lr must be positive");
  if (!(weight_decay >= 0.0)) fail("weight_decay (lambda) must be >= 0");
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) fail("adam_eps must be positive");
  if (!(lr_min >= 0.0)) fail("lr_min must be >= 0");
  if (!(factor > 0.0)) fail("multistep factor must be positive");
  for (std::size_t i = 1; i < milestones.size(); ++i) {
    if (milestones[i] <= milestones[i - 1]) fail("milestones must be strictly increasing");
  }
}

double TrainPolicy::lr_at(std::size_t step, std::size_t total_steps, int epoch) const {
  switch (schedule) {
    case ScheduleKind::Cosine: return cosine_lr(step, total_steps, base_lr, lr_min);
    case ScheduleKind::MultiStep: return multistep_lr(epoch, milestones, factor, base_lr);
    case ScheduleKind::Constant: return base_lr;
  }
  return base_lr;
}

bool TrainPolicy::decays(const std::string& name) const {
  return std::none_of(decay_exclude.begin(), decay_exclude.end(), [&](const std::string& s) {
    return name.find(s) != std::string::npos;
  });
}

TrainPolicy TrainPolicy::resnet_sgd() {
  TrainPolicy p;
  p.optimizer = OptimizerKind::SgdMomentum;
  p.base_lr = 0.1;
  p.momentum = 0.9;
  p.schedule = ScheduleKind::MultiStep;
  p.milestones = {80, 120};
  p.factor = 0.1;
  p.epochs = 160;
  p.batch_size = 128;
  p.weight_decay = 1e-4;
  return p;
}

TrainPolicy TrainPolicy::vit_adam() {
  TrainPolicy p;
  p.optimizer = OptimizerKind::Adam;
  p.base_lr = 1e-4;
  p.schedule = ScheduleKind::Cosine;
  p.epochs = 200;
  p.batch_size = 128;
  p.weight_decay = 0.03;
  return p;
}

double cosine_lr(std::size_t t, std::size_t total, double lr_max, double lr_min) {
  if (total == 0) throw ConfigError("cosine_lr: total steps must be positive");
  if (t > total) throw ConfigError("cosine_lr: step beyond schedule length");
  const double phase = std::numbers::pi * static_cast<double>(t) / static_cast<double>(total);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(phase));
}

double multistep_lr(int epoch, std::span<const int> milestones, double factor, double lr0) {
  if (!(factor > 0.0)) throw ConfigError("multistep_lr: factor must be positive");
  double lr = lr0;
  for (int m : milestones) {
    if (epoch >= m) lr *= factor;
  }
  return lr;
}

template <typename T>
void sgd_momentum_step(std::span<T> param, std::span<const T> grad, std::span<T> velocity,
                       double lr, double beta, double weight_decay) {
  if (grad.size() != param.size() || velocity.size() != param.size()) {
    throw DimensionError("sgd_momentum_step: parameter, gradient and velocity sizes differ");
  }
  const T b = static_cast<T>(beta);
  const T wd = static_cast<T>(weight_decay);
  const T step = static_cast<T>(lr);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T g = grad[i] + wd * param[i];
    velocity[i] = b * velocity[i] + g;
    param[i] -= step * velocity[i];
  }
}

template <typename T>
void adam_step(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v,
               std::int64_t t, double lr, double beta1, double beta2, double eps,
               double weight_decay) {
  if (t < 1) throw ConfigError("adam_step: step counter starts at 1");
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size()) {
    throw DimensionError("adam_step: parameter, gradient and moment sizes differ");
  }
  const T b1 = static_cast<T>(beta1);
  const T b2 = static_cast<T>(beta2);
  const T wd = static_cast<T>(weight_decay);
  const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(beta1, static_cast<double>(t))));
  const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(beta2, static_cast<double>(t))));
  const T step = static_cast<T>(lr);
  const T e = static_cast<T>(eps);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T g = grad[i] + wd * param[i];
    m[i] = b1 * m[i] + (T(1) - b1) * g;
    v[i] = b2 * v[i] + (T(1) - b2) * g * g;
    param[i] -= step * (m[i] * c1) / (std::sqrt(v[i] * c2) + e);
  }
}

template <typename T>
Optimizer<T>::Optimizer(const TrainPolicy& policy, const ParamSet<T>& params)
    : policy_(policy) {
  policy_.validate();
  for (const auto& p : params) {
    first_.emplace_back(p.value.size(), T(0));
    if (policy_.optimizer == OptimizerKind::Adam) second_.emplace_back(p.value.size(), T(0));
    decay_.push_back(policy_.decays(p.name) ? policy_.weight_decay : 0.0);
  }
}

template <typename T>
void Optimizer<T>::step(ParamSet<T>& params, const GradSet<T>& grads, double lr) {
  if (params.size() != first_.size() || grads.size() != first_.size()) {
    throw DimensionError("optimizer: parameter set does not match optimizer state");
  }
  ++t_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].value.values();
    auto g = grads[i].values();
    if (policy_.optimizer == OptimizerKind::Adam) {
      adam_step<T>(w, g, first_[i], second_[i], t_, lr, policy_.beta1, policy_.beta2,
                   policy_.adam_eps, decay_[i]);
    } else {
      sgd_momentum_step<T>(w, g, first_[i], lr, policy_.momentum, decay_[i]);
    }
  }
}

template <typename T>
void Optimizer<T>::apply_mask(const ParamSet<T>& params, const pruning::PruneMask& mask) {
  for (const auto& e : mask.entries()) {
    const std::size_t i = params.index_of(e.name);
    for (std::size_t j = 0; j < e.keep.size(); ++j) {
      if (e.keep[j]) continue;
      first_[i][j] = T(0);
      if (!second_.empty()) second_[i][j] = T(0);
    }
  }
}

template void sgd_momentum_step<float>(std::span<float>, std::span<const float>,
                                       std::span<float>, double, double, double);
template void sgd_momentum_step<double>(std::span<double>, std::span<const double>,
                                        std::span<double>, double, double, double);
template void adam_step<float>(std::span<float>, std::span<const float>, std::span<float>,
                               std::span<float>, std::int64_t, double, double, double, double,
                               double);
template void adam_step<double>(std::span<double>, std::span<const double>, std::span<double>,
                                std::span<double>, std::int64_t, double, double, double,
                                double, double);
template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace sddlab::optim

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "sddlab/optim.hpp"
#include "sddlab/pruning.hpp"

namespace sddlab::optim {
namespace {

TEST(Cosine, Endpoints) {
  EXPECT_DOUBLE_EQ(cosine_lr(0, 100, 0.1, 0.001), 0.1);
  EXPECT_NEAR(cosine_lr(100, 100, 0.1, 0.001), 0.001, 1e-15);
  EXPECT_NEAR(cosine_lr(50, 100, 0.1, 0.001), (0.1 + 0.001) / 2, 1e-15);
}

TEST(Cosine, MonotoneNonIncreasing) {
  double prev = cosine_lr(0, 37, 1.0, 0.0);
  for (std::size_t t = 1; t <= 37; ++t) {
    const double lr = cosine_lr(t, 37, 1.0, 0.0);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
}

TEST(Cosine, ZeroLengthIsConfigError) {
  EXPECT_THROW(cosine_lr(0, 0, 0.1, 0.0), ConfigError);
  EXPECT_THROW(cosine_lr(5, 4, 0.1, 0.0), ConfigError);
}

TEST(MultiStep, ResNetMilestones) {
  const std::vector<int> ms{80, 120};
  EXPECT_DOUBLE_EQ(multistep_lr(0, ms, 0.1, 0.1), 0.1);
  EXPECT_NEAR(multistep_lr(79, ms, 0.1, 0.1), 0.1, 1e-15);
  EXPECT_NEAR(multistep_lr(100, ms, 0.1, 0.1), 0.01, 1e-15);
  EXPECT_NEAR(multistep_lr(150, ms, 0.1, 0.1), 0.001, 1e-15);
  EXPECT_DOUBLE_EQ(multistep_lr(150, {}, 0.1, 0.1), 0.1);
}

TEST(Sgd, PlainGradientDescent) {
  std::vector<double> w{1.0, -2.0};
  std::vector<double> g{0.5, 0.25};
  std::vector<double> v{0.0, 0.0};
  sgd_momentum_step<double>(w, g, v, 0.1, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(w[0], 1.0 - 0.05);
  EXPECT_DOUBLE_EQ(w[1], -2.0 - 0.025);
}

TEST(Sgd, DecayOnlyShrinks) {
  std::vector<double> w{2.0};
  std::vector<double> g{0.0};
  std::vector<double> v{0.0};
  sgd_momentum_step<double>(w, g, v, 0.1, 0.9, 0.5);
  EXPECT_DOUBLE_EQ(w[0], 2.0 - 0.1 * 0.5 * 2.0);
}

TEST(Sgd, MomentumRecursion) {
  std::vector<double> w{0.0};
  std::vector<double> g{1.5};
  std::vector<double> v{0.0};
  sgd_momentum_step<double>(w, g, v, 0.01, 0.9, 0.0);
  sgd_momentum_step<double>(w, g, v, 0.01, 0.9, 0.0);
  EXPECT_DOUBLE_EQ(v[0], 1.9 * 1.5);
  EXPECT_DOUBLE_EQ(w[0], -0.01 * 1.5 - 0.01 * 1.9 * 1.5);
}

TEST(Adam, FirstStepHasMagnitudeLr) {
  for (double g0 : {1e-3, -0.7, 42.0}) {
    std::vector<double> w{0.3};
    std::vector<double> g{g0};
    std::vector<double> m{0.0}, v{0.0};
    adam_step<double>(w, g, m, v, 1, 1e-3, 0.9, 0.999, 1e-8, 0.0);
    EXPECT_NEAR(std::abs(w[0] - 0.3), 1e-3, 1e-7);
    EXPECT_EQ(w[0] < 0.3, g0 > 0);
  }
}

TEST(Adam, ZeroGradientNoDecayIsNoop) {
  std::vector<double> w{0.3, -1.0};
  std::vector<double> g{0.0, 0.0};
  std::vector<double> m{0.0, 0.0}, v{0.0, 0.0};
  adam_step<double>(w, g, m, v, 1, 1e-3, 0.9, 0.999, 1e-8, 0.0);
  EXPECT_EQ(w[0], 0.3);
  EXPECT_EQ(w[1], -1.0);
}

TEST(Adam, DecayOnlyMovesTowardZero) {
  std::vector<double> w{0.3, -1.0};
  std::vector<double> g{0.0, 0.0};
  std::vector<double> m{0.0, 0.0}, v{0.0, 0.0};
  adam_step<double>(w, g, m, v, 1, 1e-3, 0.9, 0.999, 1e-8, 0.1);
  EXPECT_LT(w[0], 0.3);
  EXPECT_GT(w[0], 0.0);
  EXPECT_GT(w[1], -1.0);
  EXPECT_LT(w[1], 0.0);
}

TEST(Adam, StepCounterStartsAtOne) {
  std::vector<double> w{0.0}, g{1.0}, m{0.0}, v{0.0};
  EXPECT_THROW(adam_step<double>(w, g, m, v, 0, 1e-3, 0.9, 0.999, 1e-8, 0.0), ConfigError);
}

TEST(Adam, MatchesScalarRecursion) {
  const double lr = 0.01, b1 = 0.9, b2 = 0.99, eps = 1e-8, wd = 0.05;
  std::vector<double> w{0.5}, m{0.0}, v{0.0};
  double rw = 0.5, rm = 0.0, rv = 0.0;
  for (int t = 1; t <= 5; ++t) {
    const double gv = 0.1 * t - 0.2;
    std::vector<double> g{gv};
    adam_step<double>(w, g, m, v, t, lr, b1, b2, eps, wd);
    const double ge = gv + wd * rw;
    rm = b1 * rm + (1 - b1) * ge;
    rv = b2 * rv + (1 - b2) * ge * ge;
    rw -= lr * (rm / (1 - std::pow(b1, t))) / (std::sqrt(rv / (1 - std::pow(b2, t))) + eps);
    EXPECT_NEAR(w[0], rw, 1e-15);
  }
}

TEST(Policy, ScheduleDispatch) {
  TrainPolicy p;
  p.base_lr = 0.2;
  p.schedule = ScheduleKind::Constant;
  EXPECT_EQ(p.lr_at(7, 10, 3), 0.2);
  p.schedule = ScheduleKind::MultiStep;
  p.milestones = {2};
  p.factor = 0.5;
  EXPECT_EQ(p.lr_at(7, 10, 3), 0.1);
  p.schedule = ScheduleKind::Cosine;
  EXPECT_DOUBLE_EQ(p.lr_at(0, 10, 0), 0.2);
}

TEST(Policy, Validation) {
  TrainPolicy p;
  EXPECT_NO_THROW(p.validate());
  p.weight_decay = -1;
  EXPECT_THROW(p.validate(), ConfigError);
  p = TrainPolicy{};
  p.milestones = {120, 80};
  EXPECT_THROW(p.validate(), ConfigError);
  p = TrainPolicy{};
  p.base_lr = 0;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Policy, ReferencePolicies) {
  const auto r = TrainPolicy::resnet_sgd();
  EXPECT_EQ(r.optimizer, OptimizerKind::SgdMomentum);
  EXPECT_EQ(r.base_lr, 0.1);
  EXPECT_EQ(r.momentum, 0.9);
  EXPECT_EQ(r.milestones, (std::vector<int>{80, 120}));
  EXPECT_EQ(r.epochs, 160);
  EXPECT_EQ(r.batch_size, 128);
  const auto v = TrainPolicy::vit_adam();
  EXPECT_EQ(v.optimizer, OptimizerKind::Adam);
  EXPECT_EQ(v.base_lr, 1e-4);
  EXPECT_EQ(v.schedule, ScheduleKind::Cosine);
  EXPECT_EQ(v.weight_decay, 0.03);
  EXPECT_EQ(v.epochs, 200);
}

TEST(Policy, DecayExclusions) {
  TrainPolicy p;
  p.decay_exclude = {"bias", "norm"};
  EXPECT_FALSE(p.decays("blocks.0.attn.q.bias"));
  EXPECT_FALSE(p.decays("norm.gamma"));
  EXPECT_TRUE(p.decays("head.weight"));
}

TEST(Names, RoundTrip) {
  for (auto k : {OptimizerKind::Adam, OptimizerKind::SgdMomentum}) {
    EXPECT_EQ(optimizer_from_string(to_string(k)), k);
  }
  for (auto k : {ScheduleKind::Cosine, ScheduleKind::MultiStep, ScheduleKind::Constant}) {
    EXPECT_EQ(schedule_from_string(to_string(k)), k);
  }
  EXPECT_THROW(optimizer_from_string("rmsprop"), ConfigError);
}

TEST(Optimizer, MaskedCoordinatesStayZero) {
  for (auto kind : {OptimizerKind::Adam, OptimizerKind::SgdMomentum}) {
    ParamSet<double> params;
    params.add("w", Tensor<double>({4}, {0.5, -0.5, 0.25, 1.0}), true);
    auto mask = pruning::PruneMask::dense(params);
    mask.entries()[0].keep[1] = 0;
    mask.entries()[0].keep[3] = 0;
    pruning::apply_mask(params, mask);
    TrainPolicy policy;
    policy.optimizer = kind;
    policy.weight_decay = 0.1;
    Optimizer<double> opt(policy, params);
    opt.apply_mask(params, mask);
    for (int s = 0; s < 50; ++s) {
      GradSet<double> grads{Tensor<double>({4}, {1.0, -3.0, 0.5, 7.0})};
      pruning::mask_gradients(grads, params, mask);
      opt.step(params, grads, 0.01);
    }
    EXPECT_EQ(params[0].value[1], 0.0);
    EXPECT_EQ(params[0].value[3], 0.0);
    EXPECT_NE(params[0].value[0], 0.5);
    EXPECT_EQ(opt.steps_taken(), 50);
  }
}

}  // namespace
}  // namespace sddlab::optim

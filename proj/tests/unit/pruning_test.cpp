#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>

#include <gtest/gtest.h>

#include "sddlab/optim.hpp"
#include "sddlab/pruning.hpp"

namespace sddlab::pruning {
namespace {

ParamSet<double> vector_params(std::vector<double> values) {
  ParamSet<double> p;
  const std::size_t n = values.size();
  p.add("w", Tensor<double>({n}, std::move(values)), true);
  return p;
}

// Two prunable tensors (names deliberately out of insertion order), one
// non-prunable bias; values drawn from a small grid so ties are common.
ParamSet<double> tied_params(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> grid(-6, 6);
  auto fill = [&](Shape s) {
    Tensor<double> t(std::move(s));
    for (double& v : t.values()) v = 0.1 * grid(rng);
    return t;
  };
  ParamSet<double> p;
  p.add("zeta.weight", fill({7, 5}), true);
  p.add("alpha.bias", fill({5}), false);
  p.add("alpha.weight", fill({4, 6}), true);
  return p;
}

// Brute-force oracle: sort every alive coordinate by (|w|, name, index)
// and drop the first `count`.
std::vector<std::tuple<std::string, std::size_t>> oracle_removed(const ParamSet<double>& params,
                                                                 const PruneMask& mask,
                                                                 std::size_t count) {
  std::vector<std::tuple<double, std::string, std::size_t>> all;
  for (const auto& e : mask.entries()) {
    const auto& w = params.at(e.name).value;
    for (std::size_t j = 0; j < e.keep.size(); ++j) {
      if (e.keep[j]) all.emplace_back(std::abs(w[j]), e.name, j);
    }
  }
  std::sort(all.begin(), all.end());
  std::vector<std::tuple<std::string, std::size_t>> out;
  for (std::size_t i = 0; i < count; ++i) out.emplace_back(std::get<1>(all[i]), std::get<2>(all[i]));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::tuple<std::string, std::size_t>> removed_between(const PruneMask& before,
                                                                  const PruneMask& after) {
  std::vector<std::tuple<std::string, std::size_t>> out;
  for (std::size_t i = 0; i < before.entries().size(); ++i) {
    const auto& b = before.entries()[i];
    const auto& a = after.entries()[i];
    for (std::size_t j = 0; j < b.keep.size(); ++j) {
      if (b.keep[j] && !a.keep[j]) out.emplace_back(b.name, j);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

TEST(MagnitudePrune, MasksSmallestOfFive) {
  auto p = vector_params({0.1, -0.5, 0.3, 0.05, -0.2});
  const auto m = magnitude_prune(p, PruneMask::dense(p), 0.2);
  EXPECT_EQ(m.entries()[0].keep, (std::vector<std::uint8_t>{1, 1, 1, 0, 1}));
  EXPECT_EQ(p.at("w").value[3], 0.0);
  EXPECT_EQ(p.at("w").value[1], -0.5);
}

TEST(MagnitudePrune, FloorZeroLeavesMaskUnchanged) {
  auto p = vector_params({0.1, -0.5, 0.3, 0.05, -0.2});
  const auto dense = PruneMask::dense(p);
  const auto m = magnitude_prune(p, dense, 0.1);
  EXPECT_EQ(m.entries(), dense.entries());
  EXPECT_EQ(m.alive(), 5u);
}

TEST(MagnitudePrune, HundredToEightyToSixtyFour) {
  std::vector<double> v(100);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.01 * static_cast<double>(i + 1);
  auto p = vector_params(v);
  auto m = magnitude_prune(p, PruneMask::dense(p), 0.2);
  EXPECT_EQ(m.alive(), 80u);
  m = magnitude_prune(p, m, 0.2);
  EXPECT_EQ(m.alive(), 64u);
  EXPECT_EQ(m.rounds(), 2u);
}

TEST(MagnitudePrune, MatchesSortOracleWithTies) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto p = tied_params(seed);
    auto mask = PruneMask::dense(p);
    for (int round = 0; round < 6; ++round) {
      const auto alive = mask.alive();
      const auto before_params = p;
      const auto next = magnitude_prune(p, mask, 0.3);
      const auto expected = oracle_removed(before_params, mask, alive - next.alive());
      EXPECT_EQ(removed_between(mask, next), expected) << "seed " << seed << " round " << round;
      mask = next;
    }
  }
}

TEST(MagnitudePrune, GlobalPoolsAcrossTensors) {
  ParamSet<double> p;
  p.add("a", Tensor<double>({4}, {0.01, 0.02, 0.03, 0.04}), true);
  p.add("b", Tensor<double>({4}, {1, 2, 3, 4}), true);
  const auto g = magnitude_prune(p, PruneMask::dense(p), 0.5, Scope::Global);
  EXPECT_EQ(g.find("a")->keep, (std::vector<std::uint8_t>{0, 0, 0, 0}));
  ParamSet<double> q;
  q.add("a", Tensor<double>({4}, {0.01, 0.02, 0.03, 0.04}), true);
  q.add("b", Tensor<double>({4}, {1, 2, 3, 4}), true);
  const auto l = magnitude_prune(q, PruneMask::dense(q), 0.5, Scope::PerLayer);
  EXPECT_EQ(l.find("a")->keep, (std::vector<std::uint8_t>{0, 0, 1, 1}));
  EXPECT_EQ(l.find("b")->keep, (std::vector<std::uint8_t>{0, 0, 1, 1}));
}

TEST(MagnitudePrune, NonPrunableUntouched) {
  auto p = tied_params(3);
  const auto bias = p.at("alpha.bias").value;
  auto mask = PruneMask::dense(p);
  EXPECT_EQ(mask.find("alpha.bias"), nullptr);
  for (int k = 0; k < 10; ++k) mask = magnitude_prune(p, mask, 0.4);
  EXPECT_EQ(p.at("alpha.bias").value, bias);
}

TEST(MagnitudePrune, NothingAliveIsContractError) {
  auto p = vector_params({0.1, 0.2});
  auto mask = PruneMask::dense(p);
  mask.entries()[0].keep = {0, 0};
  EXPECT_THROW(magnitude_prune(p, mask, 0.2), ContractError);
}

TEST(MagnitudePrune, ShapeMismatchIsDimensionError) {
  auto p = vector_params({0.1, 0.2});
  auto mask = PruneMask::dense(p);
  mask.entries()[0].shape = {3};
  EXPECT_THROW(magnitude_prune(p, mask, 0.2), DimensionError);
}

TEST(Sparsity, FreshMaskIsZero) {
  auto p = tied_params(1);
  EXPECT_EQ(sparsity(PruneMask::dense(p)), 0.0);
}

TEST(Sparsity, FollowsGeometricSchedule) {
  for (std::size_t total : {100u, 997u, 20000u}) {
    std::vector<double> v(total);
    std::mt19937_64 rng(total);
    std::normal_distribution<double> normal;
    for (double& x : v) x = normal(rng);
    auto p = vector_params(v);
    auto mask = PruneMask::dense(p);
    for (int k = 1; k <= 42; ++k) {
      auto next = magnitude_prune(p, mask, 0.2);
      EXPECT_TRUE(next.is_subset_of(mask));
      mask = next;
      const double expected = 1.0 - std::pow(0.8, k);
      EXPECT_LE(std::abs(sparsity(mask) - expected), 1.0 / static_cast<double>(total))
          << "total " << total << " k " << k;
      if (mask.alive() == 1) break;
    }
  }
}

TEST(Sparsity, ThreeRoundsIs488) {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(static_cast<double>(i) + 0.5);
  auto p = vector_params(v);
  auto mask = PruneMask::dense(p);
  for (int k = 0; k < 3; ++k) mask = magnitude_prune(p, mask, 0.2);
  EXPECT_EQ(mask.alive(), 512u);
  EXPECT_DOUBLE_EQ(sparsity(mask), 0.488);
}

TEST(Sparsity, WholeModelCountsAllParameters) {
  ParamSet<double> p;
  p.add("w", Tensor<double>({8}, {1, 2, 3, 4, 5, 6, 7, 8}), true);
  p.add("b", Tensor<double>({2}, {1, 1}), false);
  const auto m = magnitude_prune(p, PruneMask::dense(p), 0.5);
  EXPECT_DOUBLE_EQ(sparsity(m), 0.5);
  EXPECT_DOUBLE_EQ(whole_model_sparsity(p, m), 0.4);
}

TEST(Schedule, IdealRounds) {
  PruneSchedule s;
  s.zeta_iter = 0.2;
  s.zeta_end = 0.9999;
  EXPECT_EQ(s.ideal_rounds(), 42u);
  s.zeta_end = 0.5;
  EXPECT_EQ(s.ideal_rounds(), 4u);
  s.zeta_end = 0.99;
  EXPECT_EQ(s.ideal_rounds(), 21u);
  s.zeta_iter = 1.0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Masking, AllOnesIsIdentity) {
  auto p = tied_params(4);
  const auto before = p;
  const auto mask = PruneMask::dense(p);
  apply_mask(p, mask);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i].value, before[i].value);
  GradSet<double> grads;
  for (const auto& q : p) grads.push_back(Tensor<double>::full(q.value.shape(), 1.5));
  mask_gradients(grads, p, mask);
  for (const auto& g : grads) {
    for (double x : g.values()) EXPECT_EQ(x, 1.5);
  }
}

TEST(Masking, PrunedCoordinatesStayZeroThroughTraining) {
  auto p = tied_params(5);
  auto mask = PruneMask::dense(p);
  for (int k = 0; k < 3; ++k) mask = magnitude_prune(p, mask, 0.2);
  optim::TrainPolicy policy;
  policy.weight_decay = 0.05;
  optim::Optimizer<double> opt(policy, p);
  opt.apply_mask(p, mask);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  for (int s = 0; s < 200; ++s) {
    GradSet<double> grads;
    for (const auto& q : p) {
      Tensor<double> g(q.value.shape());
      for (double& x : g.values()) x = normal(rng);
      grads.push_back(g);
    }
    mask_gradients(grads, p, mask);
    opt.step(p, grads, 1e-2);
  }
  for (const auto& e : mask.entries()) {
    const auto& w = p.at(e.name).value;
    for (std::size_t j = 0; j < e.keep.size(); ++j) {
      if (!e.keep[j]) EXPECT_EQ(w[j], 0.0) << e.name << "[" << j << "]";
    }
  }
}

TEST(Names, ScopeRoundTrip) {
  EXPECT_EQ(scope_from_string(to_string(Scope::PerLayer)), Scope::PerLayer);
  EXPECT_EQ(scope_from_string("global"), Scope::Global);
  EXPECT_THROW(scope_from_string("random"), ConfigError);
}

}  // namespace
}  // namespace sddlab::pruning

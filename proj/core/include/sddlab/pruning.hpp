#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sddlab/param_set.hpp"

namespace sddlab::pruning {

enum class Scope { Global, PerLayer };

std::string to_string(Scope scope);
Scope scope_from_string(const std::string& name);

struct PruneSchedule {
  double zeta_iter = 0.2;   // fraction of surviving weights removed per round
  double zeta_end = 0.9999; // loop stops once sparsity reaches this
  Scope scope = Scope::Global;

  void validate() const;
  // Rounds needed to reach zeta_end, ignoring integer rounding.
  std::size_t ideal_rounds() const;

  friend bool operator==(const PruneSchedule&, const PruneSchedule&) = default;
};

// Binary keep-masks for the prunable parameters of a ParamSet, in ParamSet
// order. Non-prunable parameters have no entry and are never masked.
//
// The mask also tracks the cumulative keep fraction of the schedule that
// produced it, so each round targets ceil(total * keep_fraction) survivors
// instead of compounding per-round rounding.
class PruneMask {
 public:
  struct Entry {
    std::string name;
    Shape shape;
    std::vector<std::uint8_t> keep;  // 1 = alive, 0 = pruned

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  PruneMask() = default;

  template <typename T>
  static PruneMask dense(const ParamSet<T>& params) {
    PruneMask m;
    for (const auto& p : params) {
      if (!p.prunable) continue;
      m.entries_.push_back(Entry{p.name, p.value.shape(),
                                 std::vector<std::uint8_t>(p.value.size(), 1)});
    }
    return m;
  }

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::vector<Entry>& entries() noexcept { return entries_; }
  const Entry* find(const std::string& name) const;

  std::size_t total() const;    // prunable weights in the initial model
  std::size_t alive() const;    // surviving prunable weights
  std::size_t pruned() const { return total() - alive(); }

  double keep_fraction() const noexcept { return keep_fraction_; }
  void set_keep_fraction(double f) noexcept { keep_fraction_ = f; }
  std::size_t rounds() const noexcept { return rounds_; }
  void set_rounds(std::size_t r) noexcept { rounds_ = r; }

  // True when every coordinate alive here is alive in `previous`.
  bool is_subset_of(const PruneMask& previous) const;

  friend bool operator==(const PruneMask&, const PruneMask&) = default;

 private:
  std::vector<Entry> entries_;
  double keep_fraction_ = 1.0;
  std::size_t rounds_ = 0;
};

// Masks the smallest-magnitude surviving prunable weights so that
// ceil(total * keep_fraction * (1 - zeta_iter)) survive (pooled across
// tensors for Scope::Global, per tensor otherwise). On a fresh mask this
// removes exactly floor(zeta_iter * S) weights. Ties break by parameter name,
// then flat index. Newly masked weights are set to zero in `params`.
// Throws ContractError when nothing survives.
template <typename T>
PruneMask magnitude_prune(ParamSet<T>& params, const PruneMask& mask, double zeta_iter,
                          Scope scope = Scope::Global);

// Pruned fraction of the prunable weights of the initial model.
double sparsity(const PruneMask& mask);

// Fraction of all model parameters held at zero by the mask.
template <typename T>
double whole_model_sparsity(const ParamSet<T>& params, const PruneMask& mask);

template <typename T>
void apply_mask(ParamSet<T>& params, const PruneMask& mask);

template <typename T>
void mask_gradients(GradSet<T>& grads, const ParamSet<T>& params, const PruneMask& mask);

}  // namespace sddlab::pruning

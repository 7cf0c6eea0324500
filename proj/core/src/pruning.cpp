#include "sddlab/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sddlab::pruning {

std::string to_string(Scope scope) { return scope == Scope::Global ? "global" : "per_layer"; }

Scope scope_from_string(const std::string& name) {
  if (name == "global") return Scope::Global;
  if (name == "per_layer" || name == "per-layer") return Scope::PerLayer;
  throw ConfigError("unknown prune scope '" + name + "' (expected global or per_layer)");
}

void PruneSchedule::validate() const {
  if (!(zeta_iter > 0.0 && zeta_iter < 1.0)) {
    throw ConfigError("prune: zeta_iter must lie in (0, 1)");
  }
  if (!(zeta_end > 0.0 && zeta_end < 1.0)) {
    throw ConfigError("prune: zeta_end must lie in (0, 1)");
  }
}

std::size_t PruneSchedule::ideal_rounds() const {
  validate();
  return static_cast<std::size_t>(std::ceil(std::log1p(-zeta_end) / std::log1p(-zeta_iter)));
}

const PruneMask::Entry* PruneMask::find(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::size_t PruneMask::total() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.keep.size();
  return n;
}

std::size_t PruneMask::alive() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    n += static_cast<std::size_t>(std::count(e.keep.begin(), e.keep.end(), std::uint8_t{1}));
  }
  return n;
}

bool PruneMask::is_subset_of(const PruneMask& previous) const {
  if (entries_.size() != previous.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& now = entries_[i].keep;
    const auto& before = previous.entries_[i].keep;
    if (now.size() != before.size()) return false;
    for (std::size_t j = 0; j < now.size(); ++j) {
      if (now[j] && !before[j]) return false;
    }
  }
  return true;
}

double sparsity(const PruneMask& mask) {
  const std::size_t total = mask.total();
  if (total == 0) return 0.0;
  return static_cast<double>(mask.pruned()) / static_cast<double>(total);
}

namespace {

// Survivors to keep out of `total` after scaling the keep fraction. The small
// slack absorbs representation error in products like 100 * 0.8 * 0.8.
std::size_t survivor_target(std::size_t total, double keep_fraction) {
  const double exact = static_cast<double>(total) * keep_fraction;
  const double slack = 1e-9 * std::max(1.0, static_cast<double>(total));
  return static_cast<std::size_t>(std::max(0.0, std::ceil(exact - slack)));
}

template <typename T>
struct Candidate {
  T magnitude;
  std::uint32_t rank;   // position of the parameter name in lexicographic order
  std::uint32_t entry;  // entry index in the mask
  std::size_t index;

  friend bool operator<(const Candidate& a, const Candidate& b) {
    if (a.magnitude != b.magnitude) return a.magnitude < b.magnitude;
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.index < b.index;
  }
};

void check_alignment(const PruneMask::Entry& e, const Shape& shape) {
  if (e.shape != shape) {
    throw DimensionError("mask for '" + e.name + "' has shape " + shape_string(e.shape) +
                         ", parameter has " + shape_string(shape));
  }
}

}  // namespace

template <typename T>
PruneMask magnitude_prune(ParamSet<T>& params, const PruneMask& mask, double zeta_iter,
                          Scope scope) {
  if (!(zeta_iter >= 0.0 && zeta_iter < 1.0)) {
    throw ConfigError("magnitude_prune: zeta_iter must lie in [0, 1)");
  }
  const auto& entries = mask.entries();
  for (const auto& e : entries) check_alignment(e, params.at(e.name).value.shape());
  if (mask.alive() == 0) throw ContractError("magnitude_prune: no surviving weights");

  std::vector<std::uint32_t> rank(entries.size());
  {
    std::vector<std::uint32_t> order(entries.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return entries[a].name < entries[b].name;
    });
    for (std::uint32_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  }

  const double keep = mask.keep_fraction() * (1.0 - zeta_iter);
  PruneMask next = mask;
  next.set_keep_fraction(keep);
  next.set_rounds(mask.rounds() + 1);

  auto prune_group = [&](const std::vector<std::uint32_t>& group) {
    std::vector<Candidate<T>> cands;
    std::size_t total = 0;
    for (std::uint32_t ei : group) {
      const auto& e = entries[ei];
      const auto& w = params.at(e.name).value;
      total += e.keep.size();
      for (std::size_t j = 0; j < e.keep.size(); ++j) {
        if (e.keep[j]) cands.push_back({static_cast<T>(std::abs(w[j])), rank[ei], ei, j});
      }
    }
    const std::size_t target = survivor_target(total, keep);
    if (cands.size() <= target) return;
    const std::size_t count = cands.size() - target;
    std::nth_element(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(count),
                     cands.end());
    for (std::size_t i = 0; i < count; ++i) {
      const auto& c = cands[i];
      next.entries()[c.entry].keep[c.index] = 0;
      params.at(entries[c.entry].name).value[c.index] = T(0);
    }
  };

  if (scope == Scope::Global) {
    std::vector<std::uint32_t> all(entries.size());
    std::iota(all.begin(), all.end(), 0u);
    prune_group(all);
  } else {
    for (std::uint32_t i = 0; i < entries.size(); ++i) prune_group({i});
  }
  return next;
}

template <typename T>
double whole_model_sparsity(const ParamSet<T>& params, const PruneMask& mask) {
  const std::size_t total = params.total_elements();
  if (total == 0) return 0.0;
  return static_cast<double>(mask.pruned()) / static_cast<double>(total);
}

template <typename T>
void apply_mask(ParamSet<T>& params, const PruneMask& mask) {
  for (const auto& e : mask.entries()) {
    auto& w = params.at(e.name).value;
    check_alignment(e, w.shape());
    for (std::size_t j = 0; j < e.keep.size(); ++j) {
      if (!e.keep[j]) w[j] = T(0);
    }
  }
}

template <typename T>
void mask_gradients(GradSet<T>& grads, const ParamSet<T>& params, const PruneMask& mask) {
  if (grads.size() != params.size()) {
    throw DimensionError("mask_gradients: " + std::to_string(grads.size()) +
                         " gradients for " + std::to_string(params.size()) + " parameters");
  }
  for (const auto& e : mask.entries()) {
    auto& g = grads[params.index_of(e.name)];
    check_alignment(e, g.shape());
    for (std::size_t j = 0; j < e.keep.size(); ++j) {
      if (!e.keep[j]) g[j] = T(0);
    }
  }
}

#define SDDLAB_INSTANTIATE_PRUNING(T)                                                  \
  template PruneMask magnitude_prune<T>(ParamSet<T>&, const PruneMask&, double, Scope); \
  template double whole_model_sparsity<T>(const ParamSet<T>&, const PruneMask&);       \
  template void apply_mask<T>(ParamSet<T>&, const PruneMask&);                         \
  template void mask_gradients<T>(GradSet<T>&, const ParamSet<T>&, const PruneMask&);

SDDLAB_INSTANTIATE_PRUNING(float)
SDDLAB_INSTANTIATE_PRUNING(double)

#undef SDDLAB_INSTANTIATE_PRUNING

}  // namespace sddlab::pruning

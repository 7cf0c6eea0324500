#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace sddlab::sdd {

struct CurvePoint {
  int prune_iter = 0;
  double sparsity = 0.0;
  double performance = 0.0;  // validation accuracy in [0, 1]
  double train_acc = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

using Curve = std::vector<CurvePoint>;

enum class Direction { Flat, Up, Down };

// Online detector state. The first observation only sets the anchor; each
// later one is compared to the anchor (the last non-flat value) and moves
// within +-tolerance count as flat and leave the state untouched.
struct SDDState {
  std::optional<double> p_prev;
  bool prev_increasing = false;
  bool prev_decreasing = false;
  bool already_increased = false;
  bool already_decreased = false;
  bool sdd_flag = false;
  double tolerance = 0.0;

  friend bool operator==(const SDDState&, const SDDState&) = default;
};

SDDState initial_state(double tolerance);

// One transition. The flag rises on the second reversal of direction.
SDDState step(const SDDState& state, double p);

// Direction of `p` relative to `anchor` at tolerance delta.
Direction direction(double anchor, double p, double delta);

struct Verdict {
  bool sdd = false;
  std::optional<std::size_t> trigger_index;  // curve index where the flag rose
  double tolerance = 0.0;
  std::size_t smoothing_window = 1;
};

// Centered moving average; the window shrinks at the edges. Window 1 (or 0)
// returns the input.
std::vector<double> smooth(std::span<const double> values, std::size_t window);

Verdict detect_sdd(std::span<const double> performance, double delta,
                   std::size_t smoothing_window = 1);
Verdict detect_sdd_curve(const Curve& curve, double delta, std::size_t smoothing_window = 1);

// Half-open index range [begin, end).
struct Range {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool empty() const noexcept { return begin >= end; }
  std::size_t size() const noexcept { return empty() ? 0 : end - begin; }
  friend bool operator==(const Range&, const Range&) = default;
};

struct PhaseSegmentation {
  std::array<Range, 4> phases;  // phases[0] is phase 1
};

// Phase 1: prefix within delta of the dense reference. Phase 2: from the
// first significant drop to the lowest point before the largest recovery.
// Phase 3: that recovery up to its maximum. Phase 4: the remainder. When no
// recovery exceeds delta, phases 2 and 3 are empty and everything after
// phase 1 is phase 4.
PhaseSegmentation segment_phases(std::span<const double> performance, double delta,
                                 double dense_ref);
PhaseSegmentation segment_phases(const Curve& curve, double delta, double dense_ref);

// Largest excess of an interior point of `loss` over loss[0], floored at 0.
double bump_magnitude(std::span<const double> loss);

// First sparsity whose performance falls below `threshold`, if any.
std::optional<double> collapse_sparsity(const Curve& curve, double threshold);

std::vector<double> performance_of(const Curve& curve);
std::vector<double> val_loss_of(const Curve& curve);

}  // namespace sddlab::sdd

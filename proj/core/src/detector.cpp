#include "sddlab/detector.hpp"

#include <algorithm>

namespace sddlab::sdd {

SDDState initial_state(double tolerance) {
  SDDState s;
  s.tolerance = tolerance;
  return s;
}

Direction direction(double anchor, double p, double delta) {
  if (p < anchor - delta) return Direction::Down;
  if (p > anchor + delta) return Direction::Up;
  return Direction::Flat;
}

SDDState step(const SDDState& state, double p) {
  SDDState next = state;
  if (!state.p_prev) {
    next.p_prev = p;
    return next;
  }
  const Direction dir = direction(*state.p_prev, p, state.tolerance);
  if (dir == Direction::Flat) return next;
  if (dir == Direction::Down) {
    if (state.already_decreased && !state.prev_decreasing) next.sdd_flag = true;
    next.prev_decreasing = true;
    next.prev_increasing = false;
    next.already_decreased = true;
  } else {
    if (state.already_increased && !state.prev_increasing) next.sdd_flag = true;
    next.prev_increasing = true;
    next.prev_decreasing = false;
    next.already_increased = true;
  }
  next.p_prev = p;
  return next;
}

std::vector<double> smooth(std::span<const double> values, std::size_t window) {
  std::vector<double> out(values.begin(), values.end());
  if (window <= 1 || values.empty()) return out;
  const std::size_t half = window / 2;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(values.size() - 1, i + half);
    double acc = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) acc += values[j];
    out[i] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

Verdict detect_sdd(std::span<const double> performance, double delta,
                   std::size_t smoothing_window) {
  Verdict v;
  v.tolerance = delta;
  v.smoothing_window = std::max<std::size_t>(1, smoothing_window);
  const auto series = smooth(performance, v.smoothing_window);
  SDDState state = initial_state(delta);
  for (std::size_t i = 0; i < series.size(); ++i) {
    state = step(state, series[i]);
    if (state.sdd_flag && !v.trigger_index) v.trigger_index = i;
  }
  v.sdd = state.sdd_flag;
  return v;
}

std::vector<double> performance_of(const Curve& curve) {
  std::vector<double> out;
  out.reserve(curve.size());
  for (const auto& p : curve) out.push_back(p.performance);
  return out;
}

std::vector<double> val_loss_of(const Curve& curve) {
  std::vector<double> out;
  out.reserve(curve.size());
  for (const auto& p : curve) out.push_back(p.val_loss);
  return out;
}

Verdict detect_sdd_curve(const Curve& curve, double delta, std::size_t smoothing_window) {
  const auto perf = performance_of(curve);
  return detect_sdd(perf, delta, smoothing_window);
}

PhaseSegmentation segment_phases(std::span<const double> p, double delta, double dense_ref) {
  PhaseSegmentation seg;
  const std::size_t n = p.size();
  std::size_t drop = 0;
  while (drop < n && p[drop] >= dense_ref - delta) ++drop;
  seg.phases[0] = {0, drop};
  if (drop == n) {
    for (std::size_t i = 1; i < 4; ++i) seg.phases[i] = {n, n};
    return seg;
  }

  // Largest rise p[j] - min(p[drop..j)) after the drop.
  std::size_t best_max = drop;
  std::size_t best_min = drop;
  double best_rise = 0.0;
  std::size_t running_min = drop;
  for (std::size_t j = drop + 1; j < n; ++j) {
    if (p[j - 1] < p[running_min]) running_min = j - 1;
    const double rise = p[j] - p[running_min];
    if (rise > best_rise) {
      best_rise = rise;
      best_max = j;
      best_min = running_min;
    }
  }
  if (best_rise <= delta) {
    seg.phases[1] = {drop, drop};
    seg.phases[2] = {drop, drop};
    seg.phases[3] = {drop, n};
    return seg;
  }
  seg.phases[1] = {drop, best_min + 1};
  seg.phases[2] = {best_min + 1, best_max + 1};
  seg.phases[3] = {best_max + 1, n};
  return seg;
}

PhaseSegmentation segment_phases(const Curve& curve, double delta, double dense_ref) {
  const auto perf = performance_of(curve);
  return segment_phases(perf, delta, dense_ref);
}

double bump_magnitude(std::span<const double> loss) {
  double bump = 0.0;
  for (std::size_t i = 1; i + 1 < loss.size(); ++i) bump = std::max(bump, loss[i] - loss[0]);
  return bump;
}

std::optional<double> collapse_sparsity(const Curve& curve, double threshold) {
  for (const auto& p : curve) {
    if (p.performance < threshold) return p.sparsity;
  }
  return std::nullopt;
}

}  // namespace sddlab::sdd

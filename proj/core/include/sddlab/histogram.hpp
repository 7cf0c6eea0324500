#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "sddlab/checkpoint.hpp"

namespace sddlab {

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;  // uniform bins over [lo, hi]
  std::size_t survivors = 0;
  double mean = 0.0;
  double variance = 0.0;  // population variance of the surviving weights

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double bin_lo(std::size_t i) const { return lo + bin_width() * static_cast<double>(i); }
};

// Surviving (unmasked) prunable weights of the checkpoint. Values outside
// [lo, hi] are counted in the nearest edge bin; the last bin is closed.
Histogram export_histogram(const Checkpoint& ckpt, std::size_t bins, double lo, double hi);

// bin_lo,bin_hi,count rows preceded by survivor/mean/variance comments.
std::string histogram_csv(const Histogram& h);

// Surviving prunable weights in parameter order.
std::vector<float> surviving_weights(const Checkpoint& ckpt);

}  // namespace sddlab

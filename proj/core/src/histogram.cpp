#include "sddlab/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sddlab/error.hpp"
#include "sddlab/io.hpp"

namespace sddlab {

std::vector<float> surviving_weights(const Checkpoint& ckpt) {
  std::vector<float> out;
  for (const auto& e : ckpt.mask.entries()) {
    const auto& w = ckpt.params.at(e.name).value;
    if (w.shape() != e.shape) {
      throw DimensionError("histogram: mask and parameter '" + e.name + "' disagree in shape");
    }
    for (std::size_t i = 0; i < e.keep.size(); ++i) {
      if (e.keep[i]) out.push_back(w[i]);
    }
  }
  return out;
}

Histogram export_histogram(const Checkpoint& ckpt, std::size_t bins, double lo, double hi) {
  if (bins == 0) throw ConfigError("histogram: need at least one bin");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConfigError("histogram: range must satisfy lo < hi");
  }
  const auto weights = surviving_weights(ckpt);
  if (weights.empty()) throw ContractError("histogram: no surviving weights");

  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0);
  h.survivors = weights.size();
  const double scale = static_cast<double>(bins) / (hi - lo);
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (float w : weights) {
    const double x = w;
    const double pos = std::floor((x - lo) * scale);
    const auto bin = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    ++h.counts[bin];
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  h.mean = mean;
  h.variance = m2 / static_cast<double>(n);
  return h;
}

std::string histogram_csv(const Histogram& h) {
  std::ostringstream out;
  out << "# survivors=" << h.survivors << "\n";
  out << "# mean=" << io::format_double(h.mean) << "\n";
  out << "# variance=" << io::format_double(h.variance) << "\n";
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double b_hi = i + 1 == h.counts.size() ? h.hi : h.bin_lo(i + 1);
    out << io::format_double(h.bin_lo(i)) << ',' << io::format_double(b_hi) << ','
        << h.counts[i] << '\n';
  }
  return out.str();
}

}  // namespace sddlab

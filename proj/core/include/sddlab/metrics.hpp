#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sddlab/detector.hpp"

namespace sddlab {

// One row of metrics.csv, measured once after each full training round.
struct MetricsRow {
  std::string run_id;
  int prune_iter = 0;
  double sparsity = 0.0;
  double train_acc = 0.0;
  double train_loss = 0.0;
  double val_acc = 0.0;
  double val_loss = 0.0;
  int epochs_trained = 0;
  double lr_final = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

// "run_id,prune_iter,sparsity,train_acc,train_loss,val_acc,val_loss,epochs_trained,lr_final,seed"
const std::string& metrics_header();
std::string format_metrics_row(const MetricsRow& row);
std::vector<MetricsRow> parse_metrics_csv(const std::string& text, const std::string& origin);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

sdd::Curve curve_from_metrics(const std::vector<MetricsRow>& rows);

// Any CSV with a header naming a performance column (val_acc, performance,
// accuracy or acc) and optionally sparsity, prune_iter and val_loss.
sdd::Curve read_curve_csv(const std::filesystem::path& path);

}  // namespace sddlab

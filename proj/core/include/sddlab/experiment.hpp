#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sddlab/config.hpp"
#include "sddlab/data.hpp"
#include "sddlab/detector.hpp"
#include "sddlab/metrics.hpp"

namespace sddlab {

enum class RunStatus { Running, Complete, Failed, Interrupted };

std::string to_string(RunStatus status);
RunStatus run_status_from_string(const std::string& name);

struct CheckpointEntry {
  int prune_iter = 0;
  std::string file;       // relative to the run directory
  bool retained = true;   // false once deleted by the retention policy

  friend bool operator==(const CheckpointEntry&, const CheckpointEntry&) = default;
};

struct TestRow {
  int prune_iter = 0;
  double sparsity = 0.0;
  double test_acc = 0.0;
  double test_loss = 0.0;
};

struct RunRecord {
  std::filesystem::path run_dir;
  ExperimentConfig config;
  std::string config_hash;
  RunStatus status = RunStatus::Running;
  std::string failure;
  std::vector<MetricsRow> metrics;
  std::vector<TestRow> test_metrics;
  sdd::Curve curve;
  sdd::Verdict verdict;
  std::vector<CheckpointEntry> checkpoints;
  std::vector<double> round_seconds;
  std::string flip_record_crc;
  std::string train_label_hash;
  std::vector<double> norm_mean;
  std::vector<double> norm_std;
};

// Train / validation / test splits with the noisy training labels.
struct PreparedData {
  data::Dataset train;
  data::Dataset val;
  std::optional<data::Dataset> test;
  std::vector<int> base_labels;   // training labels before symmetric noise
  std::vector<int> train_labels;  // after symmetric noise
  data::NoiseSpec noise;
};

// Deterministic in the config: splits, normalization from the clean
// training split, then label noise on the training split only.
PreparedData prepare_data(const ExperimentConfig& config);

// Seed for the minibatch order of prune iteration `prune_iter`.
std::uint64_t round_seed(std::uint64_t seed, int prune_iter);

// Retention: iteration 0, the latest, multiples of checkpoint_every and the
// configured keep list stay on disk.
bool retain_checkpoint(const ExperimentConfig& config, int prune_iter, int latest);

struct RunOptions {
  // Stop without finishing, as if killed, after this iteration completes.
  std::optional<int> stop_after;
  std::function<void(const std::string&)> log;
};

// Dense training, then prune -> retrain -> measure until the sparsity
// reaches zeta_end. Writes config.json, manifest.json, noise_flips.csv,
// metrics.csv, test_metrics.csv, epochs.csv and checkpoints/ under
// config.output_dir, which must not already hold a run.
RunRecord run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// Continues a run from its last iteration with both a metrics row and a
// checkpoint. A complete run is returned unchanged.
RunRecord resume(const std::filesystem::path& run_dir, const RunOptions& options = {});

// Reads a run directory without training.
RunRecord load_run(const std::filesystem::path& run_dir);

struct SurfaceRow {
  double lambda = 0.0;
  int prune_iter = 0;
  double sparsity = 0.0;
  double val_acc = 0.0;
  double val_loss = 0.0;
};

struct SweepCell {
  double lambda = 0.0;
  bool zero_lambda = false;  // flagged: no regularization
  std::filesystem::path run_dir;
  RunStatus status = RunStatus::Running;
  std::string failure;
  double bump = 0.0;
  sdd::Verdict verdict;
  std::optional<double> collapse_sparsity;
};

struct SweepRecord {
  std::filesystem::path dir;
  std::vector<SweepCell> cells;
  std::vector<SurfaceRow> surface;
};

std::string lambda_dir_name(double lambda);

// One run per lambda under out_dir/lambda_<value>, all sharing the base
// config's data and noise seeds. A failed run is recorded and the sweep
// continues. Existing run directories are resumed. Writes surface.csv and
// sweep.json.
SweepRecord sweep_lambda(const ExperimentConfig& base, std::span<const double> lambdas,
                         const std::filesystem::path& out_dir, const RunOptions& options = {});

SweepRecord load_sweep(const std::filesystem::path& dir);

}  // namespace sddlab

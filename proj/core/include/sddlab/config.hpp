#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sddlab/data.hpp"
#include "sddlab/optim.hpp"
#include "sddlab/pruning.hpp"
#include "sddlab/vit.hpp"

namespace sddlab {

enum class DataSource { Synthetic, Cifar10, Cifar100 };

std::string to_string(DataSource source);
DataSource data_source_from_string(const std::string& name);

struct DataConfig {
  DataSource source = DataSource::Synthetic;
  data::SyntheticSpec synthetic;           // used when source is synthetic
  std::size_t synthetic_test_samples = 0;  // held-out synthetic test set, 0 = none
  std::vector<std::string> train_files;    // CIFAR batch files
  std::vector<std::string> test_files;
  std::size_t max_train = 0;               // reduced CIFAR subset, 0 = all
  double val_fraction = 0.2;
  std::string external_labels;             // optional index,label CSV for the training pool

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct NoiseConfig {
  double epsilon = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;
};

struct DetectConfig {
  double tolerance = 0.005;
  std::size_t smoothing_window = 1;
  double collapse_factor = 1.5;  // collapse = accuracy below factor x chance

  friend bool operator==(const DetectConfig&, const DetectConfig&) = default;
};

struct ExperimentConfig {
  DataConfig data;
  NoiseConfig noise;
  vit::ViTConfig model;
  optim::TrainPolicy train;
  int retrain_epochs = 0;  // epochs per retraining round, 0 = train.epochs
  pruning::PruneSchedule prune;
  DetectConfig detect;
  std::uint64_t seed = 0;
  std::string output_dir = "runs/run";
  std::string run_id = "run";
  bool deterministic = true;
  int checkpoint_every = 5;
  std::vector<int> checkpoint_keep;  // extra iterations exempt from retention

  // Cross-module checks; throws ConfigError.
  void validate() const;
  int epochs_for_round(int prune_iter) const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

nlohmann::json to_json(const ExperimentConfig& config);
// Rejects unknown keys in every section.
ExperimentConfig config_from_json(const nlohmann::json& doc);

std::string dump_config(const ExperimentConfig& config);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// CRC-32 of the canonical serialization, as 8 hex digits.
std::string config_hash(const ExperimentConfig& config);

// Sets `dotted.key` (e.g. "train.weight_decay") to `value`, read as JSON when
// it parses and as a string otherwise, then re-validates.
ExperimentConfig with_override(const ExperimentConfig& config, const std::string& key,
                               const std::string& value);

// Reference configurations.
ExperimentConfig desk_preset();       // tiny ViT on synthetic data
ExperimentConfig vit_cifar_preset();  // ViT on CIFAR-10: Adam 1e-4, cosine, 200 epochs, lambda 0.03

}  // namespace sddlab

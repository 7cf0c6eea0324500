#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sddlab/tensor.hpp"

namespace sddlab::data {

enum class SplitTag { Train, Val, Test };
enum class CifarVariant { Cifar10, Cifar100 };

std::string to_string(SplitTag tag);
std::string to_string(CifarVariant variant);
CifarVariant cifar_variant_from_string(const std::string& name);

struct Dataset {
  Tensor<float> images;                  // [N x C x H x W]
  std::vector<int> labels;               // class indices < num_classes
  std::vector<std::size_t> source_index; // position in the originating file / generator
  std::size_t num_classes = 0;
  SplitTag split = SplitTag::Train;
  std::vector<double> channel_mean;      // empty until normalized
  std::vector<double> channel_std;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t channels() const { return images.extent(1); }
  std::size_t height() const { return images.extent(2); }
  std::size_t width() const { return images.extent(3); }
  std::size_t image_elements() const { return channels() * height() * width(); }

  // Rows `indices` in the given order; labels and provenance follow.
  Dataset subset(std::span<const std::size_t> indices) const;
  // [indices.size() x C x H x W] copy of the selected images.
  Tensor<float> gather_images(std::span<const std::size_t> indices) const;
  std::vector<int> gather_labels(std::span<const std::size_t> indices) const;
};

// One CIFAR binary batch file. CIFAR-10 records are 3073 bytes (label, then
// 1024 R, 1024 G, 1024 B pixels); CIFAR-100 records are 3074 bytes (coarse,
// fine, pixels) and the fine label is used. Pixels are scaled to [0, 1].
Dataset load_cifar(const std::filesystem::path& path, CifarVariant variant);
// Concatenation of several batch files, in order.
Dataset load_cifar(std::span<const std::filesystem::path> paths, CifarVariant variant);

struct SyntheticSpec {
  std::size_t num_classes = 4;
  std::size_t num_samples = 1000;
  std::size_t channels = 3;
  std::size_t height = 8;
  std::size_t width = 8;
  double class_signal = 1.0;  // amplitude of the per-class +-1 template
  double noise_std = 0.0;     // iid Gaussian pixel noise
  std::uint64_t seed = 0;     // templates and labels/noise
  std::uint64_t stream = 0;   // independent sample stream over the same templates

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

// Per-class random sign templates (fixed by `seed`) scaled by class_signal,
// plus Gaussian noise. Classes are balanced: sample i before shuffling has
// label i mod K.
Dataset make_synthetic(const SyntheticSpec& spec);
// The class templates used by make_synthetic, [K x C*H*W].
std::vector<std::vector<float>> synthetic_templates(const SyntheticSpec& spec);

struct LabelFlip {
  std::size_t index = 0;
  int original = 0;
  int noisy = 0;
  friend bool operator==(const LabelFlip&, const LabelFlip&) = default;
};

struct NoiseSpec {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::vector<LabelFlip> flips;  // ascending index order
};

struct NoisyLabels {
  std::vector<int> labels;
  NoiseSpec spec;
};

// Flips exactly round(epsilon * N) labels chosen uniformly at random, each
// to a class drawn uniformly from the K - 1 other classes.
NoisyLabels inject_symmetric_noise(std::span<const int> labels, double epsilon,
                                   std::size_t num_classes, std::uint64_t seed);

// Re-applies a persisted flip record; every original must match.
std::vector<int> apply_flips(std::span<const int> labels, std::span<const LabelFlip> flips);

void write_flip_record(const std::filesystem::path& path, const NoiseSpec& spec);
NoiseSpec read_flip_record(const std::filesystem::path& path);

// Replacement labels for `dataset` from an `index,label` CSV (optional
// header) keyed by source_index. Every sample must be covered exactly once.
std::vector<int> load_external_labels(const std::filesystem::path& path,
                                      const Dataset& dataset);

// Stratified, deterministic split; each class contributes
// round(val_fraction * class_count) samples to validation.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double val_fraction,
                                  std::uint64_t seed);

// Per-channel mean/std of the images.
std::pair<std::vector<double>, std::vector<double>> channel_statistics(const Dataset& dataset);
void normalize(Dataset& dataset, std::span<const double> mean, std::span<const double> stddev);

}  // namespace sddlab::data

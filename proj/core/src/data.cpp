#include "sddlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "sddlab/error.hpp"
#include "sddlab/io.hpp"

namespace sddlab::data {

namespace {

constexpr std::size_t kCifarSide = 32;
constexpr std::size_t kCifarChannels = 3;
constexpr std::size_t kCifarPixels = kCifarSide * kCifarSide * kCifarChannels;

}  // namespace

std::string to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::Train: return "train";
    case SplitTag::Val: return "val";
    case SplitTag::Test: return "test";
  }
  return "train";
}

std::string to_string(CifarVariant variant) {
  return variant == CifarVariant::Cifar10 ? "cifar10" : "cifar100";
}

CifarVariant cifar_variant_from_string(const std::string& name) {
  if (name == "cifar10") return CifarVariant::Cifar10;
  if (name == "cifar100") return CifarVariant::Cifar100;
  throw ConfigError("unknown CIFAR variant '" + name + "' (expected cifar10 or cifar100)");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_classes = num_classes;
  out.split = split;
  out.channel_mean = channel_mean;
  out.channel_std = channel_std;
  out.images = gather_images(indices);
  out.labels = gather_labels(indices);
  out.source_index.reserve(indices.size());
  for (std::size_t i : indices) out.source_index.push_back(source_index[i]);
  return out;
}

Tensor<float> Dataset::gather_images(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ContractError("gather_images: empty selection");
  const std::size_t stride = image_elements();
  Tensor<float> out({indices.size(), channels(), height(), width()});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size()) throw IndexError("sample index out of range");
    const float* src = images.data() + indices[i] * stride;
    std::copy(src, src + stride, out.data() + i * stride);
  }
  return out;
}

std::vector<int> Dataset::gather_labels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels.at(i));
  return out;
}

// ---------------------------------------------------------------------------
// CIFAR

Dataset load_cifar(const std::filesystem::path& path, CifarVariant variant) {
  const std::size_t label_bytes = variant == CifarVariant::Cifar10 ? 1 : 2;
  const std::size_t record = label_bytes + kCifarPixels;
  const std::string bytes = io::read_file(path);
  if (bytes.empty() || bytes.size() % record != 0) {
    const std::size_t whole = bytes.size() / record;
    throw FormatError(to_string(variant) + " file '" + path.string() + "': length " +
                      std::to_string(bytes.size()) + " is not a multiple of the " +
                      std::to_string(record) + "-byte record (expected " +
                      std::to_string((whole + 1) * record) + " bytes; partial record at byte offset " +
                      std::to_string(whole * record) + ")");
  }
  const std::size_t n = bytes.size() / record;
  Dataset ds;
  ds.num_classes = variant == CifarVariant::Cifar10 ? 10 : 100;
  ds.images = Tensor<float>({n, kCifarChannels, kCifarSide, kCifarSide});
  ds.labels.resize(n);
  ds.source_index.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto* rec = reinterpret_cast<const unsigned char*>(bytes.data() + i * record);
    const int label = rec[label_bytes - 1];
    if (static_cast<std::size_t>(label) >= ds.num_classes) {
      throw FormatError(to_string(variant) + " file '" + path.string() + "': label " +
                        std::to_string(label) + " at byte offset " +
                        std::to_string(i * record + label_bytes - 1) + " exceeds class count");
    }
    ds.labels[i] = label;
    ds.source_index[i] = i;
    float* dst = ds.images.data() + i * kCifarPixels;
    for (std::size_t p = 0; p < kCifarPixels; ++p) {
      dst[p] = static_cast<float>(rec[label_bytes + p]) / 255.0f;
    }
  }
  return ds;
}

Dataset load_cifar(std::span<const std::filesystem::path> paths, CifarVariant variant) {
  if (paths.empty()) throw ConfigError("load_cifar: no files given");
  std::vector<Dataset> parts;
  std::size_t total = 0;
  for (const auto& p : paths) {
    parts.push_back(load_cifar(p, variant));
    total += parts.back().size();
  }
  Dataset ds;
  ds.num_classes = parts.front().num_classes;
  ds.images = Tensor<float>({total, kCifarChannels, kCifarSide, kCifarSide});
  std::size_t offset = 0;
  for (const auto& part : parts) {
    std::copy(part.images.data(), part.images.data() + part.images.size(),
              ds.images.data() + offset * kCifarPixels);
    ds.labels.insert(ds.labels.end(), part.labels.begin(), part.labels.end());
    offset += part.size();
  }
  ds.source_index.resize(total);
  std::iota(ds.source_index.begin(), ds.source_index.end(), std::size_t{0});
  return ds;
}

// ---------------------------------------------------------------------------
// Synthetic

std::vector<std::vector<float>> synthetic_templates(const SyntheticSpec& spec) {
  if (spec.num_classes < 2) throw ConfigError("synthetic: need at least 2 classes");
  const std::size_t dim = spec.channels * spec.height * spec.width;
  if (dim == 0) throw ConfigError("synthetic: image extents must be positive");
  std::mt19937_64 rng(spec.seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::vector<float>> templates;
  while (templates.size() < spec.num_classes) {
    std::vector<float> t(dim);
    for (float& v : t) v = coin(rng) ? 1.0f : -1.0f;
    if (std::find(templates.begin(), templates.end(), t) == templates.end()) {
      templates.push_back(std::move(t));
    }
  }
  return templates;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.num_samples == 0) throw ConfigError("synthetic: need at least one sample");
  if (!(spec.noise_std >= 0.0)) throw ConfigError("synthetic: noise_std must be >= 0");
  const auto templates = synthetic_templates(spec);
  const std::size_t dim = spec.channels * spec.height * spec.width;

  std::seed_seq seq{spec.seed, spec.stream, std::uint64_t{0x5eed}};
  std::mt19937_64 rng(seq);

  std::vector<int> labels(spec.num_samples);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = static_cast<int>(i % spec.num_classes);
  }
  std::shuffle(labels.begin(), labels.end(), rng);

  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.num_classes = spec.num_classes;
  ds.images = Tensor<float>({spec.num_samples, spec.channels, spec.height, spec.width});
  ds.labels = labels;
  ds.source_index.resize(spec.num_samples);
  std::iota(ds.source_index.begin(), ds.source_index.end(), std::size_t{0});
  for (std::size_t i = 0; i < spec.num_samples; ++i) {
    const auto& t = templates[static_cast<std::size_t>(labels[i])];
    float* dst = ds.images.data() + i * dim;
    for (std::size_t p = 0; p < dim; ++p) {
      const double noise = spec.noise_std > 0.0 ? spec.noise_std * normal(rng) : 0.0;
      dst[p] = static_cast<float>(spec.class_signal * t[p] + noise);
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Label noise

NoisyLabels inject_symmetric_noise(std::span<const int> labels, double epsilon,
                                   std::size_t num_classes, std::uint64_t seed) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw ConfigError("noise: epsilon must lie in [0, 1]");
  }
  if (epsilon > 0.0 && num_classes < 2) {
    throw ConfigError("noise: symmetric noise needs at least 2 classes");
  }
  NoisyLabels out;
  out.labels.assign(labels.begin(), labels.end());
  out.spec.epsilon = epsilon;
  out.spec.seed = seed;
  const std::size_t n = labels.size();
  const auto count = static_cast<std::size_t>(std::llround(epsilon * static_cast<double>(n)));
  if (count == 0) return out;

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `count` slots become a uniform subset.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(chosen.begin(), chosen.end());

  std::uniform_int_distribution<int> other(0, static_cast<int>(num_classes) - 2);
  out.spec.flips.reserve(count);
  for (std::size_t idx : chosen) {
    const int original = labels[idx];
    if (original < 0 || static_cast<std::size_t>(original) >= num_classes) {
      throw IndexError("noise: label " + std::to_string(original) + " outside [0, " +
                       std::to_string(num_classes) + ")");
    }
    int r = other(rng);
    if (r >= original) ++r;
    out.labels[idx] = r;
    out.spec.flips.push_back({idx, original, r});
  }
  return out;
}

std::vector<int> apply_flips(std::span<const int> labels, std::span<const LabelFlip> flips) {
  std::vector<int> out(labels.begin(), labels.end());
  for (const auto& f : flips) {
    if (f.index >= out.size()) throw IndexError("flip record index out of range");
    if (out[f.index] != f.original) {
      throw FormatError("flip record disagrees with labels at index " + std::to_string(f.index));
    }
    out[f.index] = f.noisy;
  }
  return out;
}

void write_flip_record(const std::filesystem::path& path, const NoiseSpec& spec) {
  std::ostringstream out;
  out << "# epsilon=" << io::format_double(spec.epsilon) << "\n";
  out << "# seed=" << spec.seed << "\n";
  out << "index,original,noisy\n";
  for (const auto& f : spec.flips) out << f.index << ',' << f.original << ',' << f.noisy << '\n';
  io::atomic_write(path, out.str());
}

NoiseSpec read_flip_record(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  NoiseSpec spec;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    const auto t = io::trim(line);
    if (t.empty()) continue;
    if (t.starts_with("# epsilon=")) {
      spec.epsilon = io::parse_double(t.substr(10));
    } else if (t.starts_with("# seed=")) {
      spec.seed = static_cast<std::uint64_t>(std::stoull(std::string(t.substr(7))));
    } else if (t.starts_with("#")) {
      continue;
    } else if (!header) {
      if (t != "index,original,noisy") {
        throw FormatError("flip record '" + path.string() + "': unexpected header");
      }
      header = true;
    } else {
      const auto cols = io::split(t, ',');
      if (cols.size() != 3) throw FormatError("flip record '" + path.string() + "': bad row");
      spec.flips.push_back({static_cast<std::size_t>(io::parse_int(cols[0])),
                            static_cast<int>(io::parse_int(cols[1])),
                            static_cast<int>(io::parse_int(cols[2]))});
    }
  }
  return spec;
}

std::vector<int> load_external_labels(const std::filesystem::path& path, const Dataset& dataset) {
  std::istringstream in(io::read_file(path));
  std::map<std::size_t, int> by_source;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = io::trim(line);
    if (t.empty()) continue;
    const auto cols = io::split(t, ',');
    if (cols.size() != 2) {
      throw FormatError("'" + path.string() + "' line " + std::to_string(line_no) +
                        ": expected index,label");
    }
    long long index = 0;
    long long label = 0;
    try {
      index = io::parse_int(cols[0]);
      label = io::parse_int(cols[1]);
    } catch (const FormatError&) {
      if (line_no == 1) continue;  // header
      throw;
    }
    if (index < 0 || label < 0) {
      throw IndexError("'" + path.string() + "' line " + std::to_string(line_no) +
                       ": negative index or label");
    }
    if (static_cast<std::size_t>(label) >= dataset.num_classes) {
      throw IndexError("'" + path.string() + "' line " + std::to_string(line_no) + ": label " +
                       std::to_string(label) + " >= " + std::to_string(dataset.num_classes));
    }
    if (!by_source.emplace(static_cast<std::size_t>(index), static_cast<int>(label)).second) {
      throw FormatError("'" + path.string() + "' line " + std::to_string(line_no) +
                        ": duplicate index " + std::to_string(index));
    }
  }
  std::vector<int> out(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto it = by_source.find(dataset.source_index[i]);
    if (it == by_source.end()) {
      throw IndexError("'" + path.string() + "' has no label for index " +
                       std::to_string(dataset.source_index[i]));
    }
    out[i] = it->second;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits and normalization

std::pair<Dataset, Dataset> split(const Dataset& dataset, double val_fraction,
                                  std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ConfigError("split: val_fraction must lie in (0, 1)");
  }
  std::vector<std::vector<std::size_t>> by_class(dataset.num_classes);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_class.at(static_cast<std::size_t>(dataset.labels[i])).push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto take = static_cast<std::size_t>(
        std::llround(val_fraction * static_cast<double>(members.size())));
    val_idx.insert(val_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    train_idx.insert(train_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  if (train_idx.empty() || val_idx.empty()) {
    throw ConfigError("split: val_fraction leaves an empty split");
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  Dataset train = dataset.subset(train_idx);
  Dataset val = dataset.subset(val_idx);
  train.split = SplitTag::Train;
  val.split = SplitTag::Val;
  return {std::move(train), std::move(val)};
}

std::pair<std::vector<double>, std::vector<double>> channel_statistics(const Dataset& dataset) {
  const std::size_t c = dataset.channels();
  const std::size_t plane = dataset.height() * dataset.width();
  std::vector<double> mean(c, 0.0);
  std::vector<double> stddev(c, 0.0);
  const double count = static_cast<double>(dataset.size() * plane);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const float* p = dataset.images.data() + (i * c + ch) * plane;
      for (std::size_t j = 0; j < plane; ++j) acc += p[j];
    }
    mean[ch] = acc / count;
    double sq = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const float* p = dataset.images.data() + (i * c + ch) * plane;
      for (std::size_t j = 0; j < plane; ++j) sq += (p[j] - mean[ch]) * (p[j] - mean[ch]);
    }
    stddev[ch] = std::sqrt(sq / count);
    if (stddev[ch] == 0.0) stddev[ch] = 1.0;
  }
  return {mean, stddev};
}

void normalize(Dataset& dataset, std::span<const double> mean, std::span<const double> stddev) {
  const std::size_t c = dataset.channels();
  if (mean.size() != c || stddev.size() != c) {
    throw DimensionError("normalize: need one mean/std per channel");
  }
  const std::size_t plane = dataset.height() * dataset.width();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      float* p = dataset.images.data() + (i * c + ch) * plane;
      for (std::size_t j = 0; j < plane; ++j) {
        p[j] = static_cast<float>((p[j] - mean[ch]) / stddev[ch]);
      }
    }
  }
  dataset.channel_mean.assign(mean.begin(), mean.end());
  dataset.channel_std.assign(stddev.begin(), stddev.end());
}

}  // namespace sddlab::data

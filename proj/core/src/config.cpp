#include "sddlab/config.hpp"

#include <algorithm>
#include <initializer_list>
#include <string_view>

#include "sddlab/error.hpp"
#include "sddlab/io.hpp"

namespace sddlab {

using nlohmann::json;

std::string to_string(DataSource source) {
  switch (source) {
    case DataSource::Synthetic: return "synthetic";
    case DataSource::Cifar10: return "cifar10";
    case DataSource::Cifar100: return "cifar100";
  }
  return "synthetic";
}

DataSource data_source_from_string(const std::string& name) {
  if (name == "synthetic") return DataSource::Synthetic;
  if (name == "cifar10") return DataSource::Cifar10;
  if (name == "cifar100") return DataSource::Cifar100;
  throw ConfigError("unknown data source '" + name + "' (expected synthetic, cifar10 or cifar100)");
}

void ExperimentConfig::validate() const {
  model.validate();
  train.validate();
  prune.validate();
  if (!(noise.epsilon >= 0.0 && noise.epsilon <= 1.0)) {
    throw ConfigError("noise: epsilon must lie in [0, 1]");
  }
  if (!(data.val_fraction > 0.0 && data.val_fraction < 1.0)) {
    throw ConfigError("data: val_fraction must lie in (0, 1)");
  }
  if (retrain_epochs < 0) throw ConfigError("train: retrain_epochs must be >= 0");
  if (!(detect.tolerance >= 0.0)) throw ConfigError("detect: tolerance must be >= 0");
  if (!(detect.collapse_factor > 0.0)) throw ConfigError("detect: collapse_factor must be > 0");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (run_id.empty() || run_id.find_first_of(",\n\r\"") != std::string::npos) {
    throw ConfigError("run_id must be nonempty and free of commas, quotes and newlines");
  }
  if (data.source == DataSource::Synthetic) {
    const auto& s = data.synthetic;
    if (s.num_classes != model.num_classes) {
      throw ConfigError("data.synthetic.num_classes (" + std::to_string(s.num_classes) +
                        ") differs from model.num_classes (" +
                        std::to_string(model.num_classes) + ")");
    }
    if (s.channels != model.channels || s.height != model.image_size ||
        s.width != model.image_size) {
      throw ConfigError("data.synthetic image extents do not match the model input");
    }
    if (s.num_classes < 2) throw ConfigError("data.synthetic.num_classes must be >= 2");
    if (s.num_samples == 0) throw ConfigError("data.synthetic.num_samples must be > 0");
    if (!(s.noise_std >= 0.0)) throw ConfigError("data.synthetic.noise_std must be >= 0");
  } else {
    const std::size_t k = data.source == DataSource::Cifar10 ? 10 : 100;
    if (model.num_classes != k || model.channels != 3 || model.image_size != 32) {
      throw ConfigError("model must take 3x32x32 inputs with " + std::to_string(k) +
                        " classes for " + to_string(data.source));
    }
    if (data.train_files.empty()) throw ConfigError("data.train_files must list batch files");
  }
}

int ExperimentConfig::epochs_for_round(int prune_iter) const {
  return prune_iter > 0 && retrain_epochs > 0 ? retrain_epochs : train.epochs;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

void check_keys(const json& obj, std::string_view section,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) {
    throw ConfigError("config section '" + std::string(section) + "' must be an object");
  }
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError("unknown key '" + item.key() + "' in config section '" +
                        std::string(section) + "'");
    }
  }
}

template <typename V>
void read(const json& obj, const char* key, V& out, std::string_view section) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<V>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + std::string(section) + "." + key + "': " + e.what());
  }
}

json synthetic_json(const data::SyntheticSpec& s) {
  return {{"num_classes", s.num_classes}, {"num_samples", s.num_samples},
          {"channels", s.channels},       {"height", s.height},
          {"width", s.width},             {"class_signal", s.class_signal},
          {"noise_std", s.noise_std},     {"seed", s.seed},
          {"stream", s.stream}};
}

data::SyntheticSpec synthetic_from(const json& j) {
  check_keys(j, "data.synthetic",
             {"num_classes", "num_samples", "channels", "height", "width", "class_signal",
              "noise_std", "seed", "stream"});
  data::SyntheticSpec s;
  read(j, "num_classes", s.num_classes, "data.synthetic");
  read(j, "num_samples", s.num_samples, "data.synthetic");
  read(j, "channels", s.channels, "data.synthetic");
  read(j, "height", s.height, "data.synthetic");
  read(j, "width", s.width, "data.synthetic");
  read(j, "class_signal", s.class_signal, "data.synthetic");
  read(j, "noise_std", s.noise_std, "data.synthetic");
  read(j, "seed", s.seed, "data.synthetic");
  read(j, "stream", s.stream, "data.synthetic");
  return s;
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json doc;
  doc["data"] = {{"source", to_string(c.data.source)},
                 {"synthetic", synthetic_json(c.data.synthetic)},
                 {"synthetic_test_samples", c.data.synthetic_test_samples},
                 {"train_files", c.data.train_files},
                 {"test_files", c.data.test_files},
                 {"max_train", c.data.max_train},
                 {"val_fraction", c.data.val_fraction},
                 {"external_labels", c.data.external_labels}};
  doc["noise"] = {{"epsilon", c.noise.epsilon}, {"seed", c.noise.seed}};
  doc["model"] = {{"image_size", c.model.image_size},
                  {"channels", c.model.channels},
                  {"patch_size", c.model.patch_size},
                  {"embed_dim", c.model.embed_dim},
                  {"num_heads", c.model.num_heads},
                  {"depth", c.model.depth},
                  {"mlp_ratio", c.model.mlp_ratio},
                  {"num_classes", c.model.num_classes},
                  {"activation", vit::to_string(c.model.activation)},
                  {"norm_eps", c.model.norm_eps}};
  doc["train"] = {{"optimizer", optim::to_string(c.train.optimizer)},
                  {"lr", c.train.base_lr},
                  {"momentum", c.train.momentum},
                  {"beta1", c.train.beta1},
                  {"beta2", c.train.beta2},
                  {"adam_eps", c.train.adam_eps},
                  {"schedule", optim::to_string(c.train.schedule)},
                  {"lr_min", c.train.lr_min},
                  {"milestones", c.train.milestones},
                  {"factor", c.train.factor},
                  {"epochs", c.train.epochs},
                  {"retrain_epochs", c.retrain_epochs},
                  {"batch_size", c.train.batch_size},
                  {"weight_decay", c.train.weight_decay},
                  {"decay_exclude", c.train.decay_exclude}};
  doc["prune"] = {{"zeta_iter", c.prune.zeta_iter},
                  {"zeta_end", c.prune.zeta_end},
                  {"scope", pruning::to_string(c.prune.scope)}};
  doc["detect"] = {{"tolerance", c.detect.tolerance},
                   {"smoothing_window", c.detect.smoothing_window},
                   {"collapse_factor", c.detect.collapse_factor}};
  doc["seed"] = c.seed;
  doc["output_dir"] = c.output_dir;
  doc["run_id"] = c.run_id;
  doc["deterministic"] = c.deterministic;
  doc["checkpoint_every"] = c.checkpoint_every;
  doc["checkpoint_keep"] = c.checkpoint_keep;
  return doc;
}

ExperimentConfig config_from_json(const json& doc) {
  check_keys(doc, "<root>",
             {"data", "noise", "model", "train", "prune", "detect", "seed", "output_dir",
              "run_id", "deterministic", "checkpoint_every", "checkpoint_keep"});
  ExperimentConfig c;
  std::string name;

  if (doc.contains("data")) {
    const json& d = doc.at("data");
    check_keys(d, "data",
               {"source", "synthetic", "synthetic_test_samples", "train_files", "test_files",
                "max_train", "val_fraction", "external_labels"});
    if (d.contains("source")) {
      read(d, "source", name, "data");
      c.data.source = data_source_from_string(name);
    }
    if (d.contains("synthetic")) c.data.synthetic = synthetic_from(d.at("synthetic"));
    read(d, "synthetic_test_samples", c.data.synthetic_test_samples, "data");
    read(d, "train_files", c.data.train_files, "data");
    read(d, "test_files", c.data.test_files, "data");
    read(d, "max_train", c.data.max_train, "data");
    read(d, "val_fraction", c.data.val_fraction, "data");
    read(d, "external_labels", c.data.external_labels, "data");
  }
  if (doc.contains("noise")) {
    const json& n = doc.at("noise");
    check_keys(n, "noise", {"epsilon", "seed"});
    read(n, "epsilon", c.noise.epsilon, "noise");
    read(n, "seed", c.noise.seed, "noise");
  }
  if (doc.contains("model")) {
    const json& m = doc.at("model");
    check_keys(m, "model",
               {"image_size", "channels", "patch_size", "embed_dim", "num_heads", "depth",
                "mlp_ratio", "num_classes", "activation", "norm_eps"});
    read(m, "image_size", c.model.image_size, "model");
    read(m, "channels", c.model.channels, "model");
    read(m, "patch_size", c.model.patch_size, "model");
    read(m, "embed_dim", c.model.embed_dim, "model");
    read(m, "num_heads", c.model.num_heads, "model");
    read(m, "depth", c.model.depth, "model");
    read(m, "mlp_ratio", c.model.mlp_ratio, "model");
    read(m, "num_classes", c.model.num_classes, "model");
    if (m.contains("activation")) {
      read(m, "activation", name, "model");
      c.model.activation = vit::activation_from_string(name);
    }
    read(m, "norm_eps", c.model.norm_eps, "model");
  }
  if (doc.contains("train")) {
    const json& t = doc.at("train");
    check_keys(t, "train",
               {"optimizer", "lr", "momentum", "beta1", "beta2", "adam_eps", "schedule",
                "lr_min", "milestones", "factor", "epochs", "retrain_epochs", "batch_size",
                "weight_decay", "decay_exclude"});
    if (t.contains("optimizer")) {
      read(t, "optimizer", name, "train");
      c.train.optimizer = optim::optimizer_from_string(name);
    }
    read(t, "lr", c.train.base_lr, "train");
    read(t, "momentum", c.train.momentum, "train");
    read(t, "beta1", c.train.beta1, "train");
    read(t, "beta2", c.train.beta2, "train");
    read(t, "adam_eps", c.train.adam_eps, "train");
    if (t.contains("schedule")) {
      read(t, "schedule", name, "train");
      c.train.schedule = optim::schedule_from_string(name);
    }
    read(t, "lr_min", c.train.lr_min, "train");
    read(t, "milestones", c.train.milestones, "train");
    read(t, "factor", c.train.factor, "train");
    read(t, "epochs", c.train.epochs, "train");
    read(t, "retrain_epochs", c.retrain_epochs, "train");
    read(t, "batch_size", c.train.batch_size, "train");
    read(t, "weight_decay", c.train.weight_decay, "train");
    read(t, "decay_exclude", c.train.decay_exclude, "train");
  }
  if (doc.contains("prune")) {
    const json& p = doc.at("prune");
    check_keys(p, "prune", {"zeta_iter", "zeta_end", "scope"});
    read(p, "zeta_iter", c.prune.zeta_iter, "prune");
    read(p, "zeta_end", c.prune.zeta_end, "prune");
    if (p.contains("scope")) {
      read(p, "scope", name, "prune");
      c.prune.scope = pruning::scope_from_string(name);
    }
  }
  if (doc.contains("detect")) {
    const json& d = doc.at("detect");
    check_keys(d, "detect", {"tolerance", "smoothing_window", "collapse_factor"});
    read(d, "tolerance", c.detect.tolerance, "detect");
    read(d, "smoothing_window", c.detect.smoothing_window, "detect");
    read(d, "collapse_factor", c.detect.collapse_factor, "detect");
  }
  read(doc, "seed", c.seed, "<root>");
  read(doc, "output_dir", c.output_dir, "<root>");
  read(doc, "run_id", c.run_id, "<root>");
  read(doc, "deterministic", c.deterministic, "<root>");
  read(doc, "checkpoint_every", c.checkpoint_every, "<root>");
  read(doc, "checkpoint_keep", c.checkpoint_keep, "<root>");
  c.validate();
  return c;
}

std::string dump_config(const ExperimentConfig& config) { return to_json(config).dump(2) + "\n"; }

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(io::read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_hash(const ExperimentConfig& config) {
  return io::hex32(io::crc32(to_json(config).dump()));
}

ExperimentConfig with_override(const ExperimentConfig& config, const std::string& key,
                               const std::string& value) {
  json doc = to_json(config);
  json::json_pointer ptr;
  for (const auto& part : io::split(key, '.')) {
    if (part.empty()) throw ConfigError("bad override key '" + key + "'");
    ptr /= part;
  }
  if (!doc.contains(ptr)) throw ConfigError("unknown config key '" + key + "'");
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;
  }
  doc[ptr] = parsed;
  return config_from_json(doc);
}

ExperimentConfig desk_preset() {
  ExperimentConfig c;
  c.model = vit::ViTConfig{};
  c.model.num_classes = 4;
  c.data.synthetic.num_classes = 4;
  c.data.synthetic.num_samples = 4000;
  c.data.synthetic.class_signal = 0.3;
  c.data.synthetic.noise_std = 1.0;
  c.data.synthetic_test_samples = 1000;
  c.noise.epsilon = 0.3;
  c.train.optimizer = optim::OptimizerKind::Adam;
  c.train.base_lr = 3e-3;
  c.train.schedule = optim::ScheduleKind::Cosine;
  c.train.epochs = 25;
  c.train.batch_size = 64;
  c.train.weight_decay = 1e-4;
  c.prune.zeta_iter = 0.2;
  c.prune.zeta_end = 0.99;
  c.output_dir = "runs/desk";
  c.run_id = "desk";
  return c;
}

ExperimentConfig vit_cifar_preset() {
  ExperimentConfig c;
  c.data.source = DataSource::Cifar10;
  c.data.train_files = {"cifar-10-batches-bin/data_batch_1.bin",
                        "cifar-10-batches-bin/data_batch_2.bin",
                        "cifar-10-batches-bin/data_batch_3.bin",
                        "cifar-10-batches-bin/data_batch_4.bin",
                        "cifar-10-batches-bin/data_batch_5.bin"};
  c.data.test_files = {"cifar-10-batches-bin/test_batch.bin"};
  c.data.val_fraction = 0.1;
  c.noise.epsilon = 0.1;
  c.model.image_size = 32;
  c.model.channels = 3;
  c.model.patch_size = 4;
  c.model.embed_dim = 512;
  c.model.num_heads = 8;
  c.model.depth = 6;
  c.model.mlp_ratio = 1;
  c.model.num_classes = 10;
  c.train = optim::TrainPolicy::vit_adam();
  c.prune.zeta_iter = 0.2;
  c.prune.zeta_end = 0.9999;
  c.output_dir = "runs/vit_cifar10";
  c.run_id = "vit_cifar10";
  return c;
}

}  // namespace sddlab

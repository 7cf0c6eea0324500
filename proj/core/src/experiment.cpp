#include "sddlab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sddlab/checkpoint.hpp"
#include "sddlab/error.hpp"
#include "sddlab/io.hpp"
#include "sddlab/trainer.hpp"

namespace sddlab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Running: return "running";
    case RunStatus::Complete: return "complete";
    case RunStatus::Failed: return "failed";
    case RunStatus::Interrupted: return "interrupted";
  }
  return "running";
}

RunStatus run_status_from_string(const std::string& name) {
  if (name == "running") return RunStatus::Running;
  if (name == "complete") return RunStatus::Complete;
  if (name == "failed") return RunStatus::Failed;
  if (name == "interrupted") return RunStatus::Interrupted;
  throw FormatError("unknown run status '" + name + "'");
}

namespace {

constexpr const char* kConfigFile = "config.json";
constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kFlipFile = "noise_flips.csv";
constexpr const char* kMetricsFile = "metrics.csv";
constexpr const char* kTestFile = "test_metrics.csv";
constexpr const char* kEpochFile = "epochs.csv";
constexpr const char* kInitCheckpoint = "checkpoints/init.ckpt";
constexpr const char* kTestHeader = "run_id,prune_iter,sparsity,test_acc,test_loss";
constexpr const char* kEpochHeader = "run_id,prune_iter,epoch,lr,train_loss,train_acc";
constexpr const char* kSurfaceHeader = "lambda,prune_iter,sparsity,val_acc,val_loss";

std::string checkpoint_file(int prune_iter) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "checkpoints/iter_%04d.ckpt", prune_iter);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void say(const RunOptions& options, const std::string& msg) {
  if (options.log) options.log(msg);
}

std::string label_hash_hex(std::span<const int> labels) {
  return io::hex32(io::label_hash(labels));
}

std::string format_test_row(const std::string& run_id, const TestRow& r) {
  return run_id + ',' + std::to_string(r.prune_iter) + ',' + io::format_double(r.sparsity) + ',' +
         io::format_double(r.test_acc) + ',' + io::format_double(r.test_loss);
}

std::string join_lines(const std::string& header, const std::vector<std::string>& rows) {
  std::string out = header + "\n";
  for (const auto& r : rows) out += r + "\n";
  return out;
}

// Everything an in-progress run keeps in memory.
struct RunState {
  RunRecord rec;
  PreparedData data;
  ParamSet<float> params;
  pruning::PruneMask mask;
  std::vector<std::string> epoch_rows;
  std::size_t prunable_total = 0;
  std::size_t parameter_total = 0;
};

json verdict_json(const RunRecord& rec) {
  json v = {{"sdd", rec.verdict.sdd},
            {"tolerance", rec.verdict.tolerance},
            {"smoothing_window", rec.verdict.smoothing_window}};
  if (rec.verdict.trigger_index) {
    const auto i = *rec.verdict.trigger_index;
    v["trigger_index"] = i;
    v["trigger_prune_iter"] = rec.curve.at(i).prune_iter;
    v["trigger_sparsity"] = rec.curve.at(i).sparsity;
  } else {
    v["trigger_index"] = nullptr;
  }
  return v;
}

void write_manifest(const RunState& s) {
  const RunRecord& rec = s.rec;
  const auto& cfg = rec.config;
  json checkpoints = json::array();
  for (const auto& c : rec.checkpoints) {
    checkpoints.push_back({{"prune_iter", c.prune_iter},
                           {"file", c.file},
                           {"status", c.retained ? "kept" : "retention_pruned"}});
  }
  json round_seeds = json::array();
  for (const auto& m : rec.metrics) round_seeds.push_back(round_seed(cfg.seed, m.prune_iter));
  const double total_seconds =
      std::accumulate(rec.round_seconds.begin(), rec.round_seconds.end(), 0.0);
  json manifest = {
      {"run_id", cfg.run_id},
      {"config_hash", rec.config_hash},
      {"status", to_string(rec.status == RunStatus::Interrupted ? RunStatus::Running : rec.status)},
      {"failure", rec.failure},
      {"deterministic", cfg.deterministic},
      {"seeds",
       {{"run", cfg.seed},
        {"noise", cfg.noise.seed},
        {"synthetic", cfg.data.synthetic.seed},
        {"rounds", round_seeds}}},
      {"normalization", {{"mean", rec.norm_mean}, {"std", rec.norm_std}}},
      {"flip_record",
       {{"file", kFlipFile},
        {"crc32", rec.flip_record_crc},
        {"flips", s.data.noise.flips.size()},
        {"epsilon", cfg.noise.epsilon},
        {"train_label_hash", rec.train_label_hash}}},
      {"init_checkpoint", kInitCheckpoint},
      {"checkpoints", checkpoints},
      {"iterations_completed", rec.metrics.size()},
      {"prunable_weights", s.prunable_total},
      {"parameters", s.parameter_total},
      {"whole_model_sparsity",
       s.parameter_total == 0
           ? 0.0
           : static_cast<double>(s.mask.pruned()) / static_cast<double>(s.parameter_total)},
      {"timings", {{"round_seconds", rec.round_seconds}, {"total_seconds", total_seconds}}},
      {"verdict", verdict_json(rec)}};
  io::atomic_write(rec.run_dir / kManifestFile, manifest.dump(2) + "\n");
}

void write_metrics(const RunState& s) {
  std::vector<std::string> rows;
  for (const auto& m : s.rec.metrics) rows.push_back(format_metrics_row(m));
  io::atomic_write(s.rec.run_dir / kMetricsFile, join_lines(metrics_header(), rows));
  if (s.data.test) {
    std::vector<std::string> test_rows;
    for (const auto& t : s.rec.test_metrics) {
      test_rows.push_back(format_test_row(s.rec.config.run_id, t));
    }
    io::atomic_write(s.rec.run_dir / kTestFile, join_lines(kTestHeader, test_rows));
  }
  io::atomic_write(s.rec.run_dir / kEpochFile, join_lines(kEpochHeader, s.epoch_rows));
}

void update_verdict(RunRecord& rec) {
  rec.curve = curve_from_metrics(rec.metrics);
  rec.verdict = sdd::detect_sdd_curve(rec.curve, rec.config.detect.tolerance,
                                      rec.config.detect.smoothing_window);
}

bool finished(const RunState& s) {
  return pruning::sparsity(s.mask) >= s.rec.config.prune.zeta_end;
}

// Prune (after the dense round), retrain, measure and persist iteration k.
void run_round(RunState& s, int k, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord& rec = s.rec;
  const auto& cfg = rec.config;
  if (k > 0) s.mask = pruning::magnitude_prune(s.params, s.mask, cfg.prune.zeta_iter, cfg.prune.scope);

  if (label_hash_hex(s.data.train_labels) != rec.train_label_hash) {
    throw ContractError("training labels no longer match the persisted flip record");
  }
  optim::TrainPolicy policy = cfg.train;
  policy.epochs = cfg.epochs_for_round(k);
  auto on_epoch = [&](const train::EpochLog& e) {
    s.epoch_rows.push_back(cfg.run_id + ',' + std::to_string(k) + ',' + std::to_string(e.epoch) +
                           ',' + io::format_double(e.lr) + ',' + io::format_double(e.train_loss) +
                           ',' + io::format_double(e.train_acc));
  };
  const auto result = train::train_round(cfg.model, s.params, s.mask, policy, s.data.train,
                                         s.data.train_labels, round_seed(cfg.seed, k), on_epoch);
  const auto fit = train::evaluate(cfg.model, s.params, s.data.train, s.data.train_labels);
  const auto val = train::evaluate(cfg.model, s.params, s.data.val, s.data.val.labels);
  const double sparsity = pruning::sparsity(s.mask);

  MetricsRow row;
  row.run_id = cfg.run_id;
  row.prune_iter = k;
  row.sparsity = sparsity;
  row.train_acc = fit.accuracy;
  row.train_loss = fit.loss;
  row.val_acc = val.accuracy;
  row.val_loss = val.loss;
  row.epochs_trained = result.epochs_trained;
  row.lr_final = result.lr_final;
  row.seed = cfg.seed;

  Checkpoint ckpt;
  ckpt.prune_iter = k;
  ckpt.params = s.params;
  ckpt.mask = s.mask;
  ckpt.meta = {{"run_id", cfg.run_id}, {"sparsity", sparsity}, {"config_hash", rec.config_hash}};
  const std::string file = checkpoint_file(k);
  save_checkpoint(rec.run_dir / file, ckpt);

  rec.metrics.push_back(row);
  if (s.data.test) {
    const auto test = train::evaluate(cfg.model, s.params, *s.data.test, s.data.test->labels);
    rec.test_metrics.push_back({k, sparsity, test.accuracy, test.loss});
  }
  write_metrics(s);

  rec.checkpoints.push_back({k, file, true});
  std::vector<std::string> doomed;
  for (auto& c : rec.checkpoints) {
    if (c.retained && !retain_checkpoint(cfg, c.prune_iter, k)) {
      c.retained = false;
      doomed.push_back(c.file);
    }
  }
  rec.round_seconds.push_back(seconds_since(t0));
  update_verdict(rec);
  write_manifest(s);
  for (const auto& f : doomed) fs::remove(rec.run_dir / f);

  char msg[160];
  std::snprintf(msg, sizeof msg,
                "[%s] iter %d sparsity %.4f train_acc %.4f val_acc %.4f val_loss %.4f (%.1fs)",
                cfg.run_id.c_str(), k, sparsity, fit.accuracy, val.accuracy, val.loss,
                rec.round_seconds.back());
  say(options, msg);
}

// Runs iterations from `next` until the schedule ends, a stop is requested
// or training fails.
RunRecord drive(RunState& s, int next, const RunOptions& options) {
  RunRecord& rec = s.rec;
  try {
    if (next > 0 && finished(s)) {
      rec.status = RunStatus::Complete;
    } else {
      for (int k = next;; ++k) {
        run_round(s, k, options);
        if (finished(s)) {
          rec.status = RunStatus::Complete;
          break;
        }
        if (options.stop_after && k >= *options.stop_after) {
          rec.status = RunStatus::Interrupted;
          say(options, "[" + rec.config.run_id + "] stopped after iteration " + std::to_string(k));
          return rec;
        }
      }
    }
  } catch (const NumericError& e) {
    rec.status = RunStatus::Failed;
    rec.failure = e.what();
    say(options, "[" + rec.config.run_id + "] failed: " + rec.failure);
  }
  update_verdict(rec);
  write_manifest(s);
  if (rec.status == RunStatus::Complete) {
    say(options, "[" + rec.config.run_id + "] complete; sdd=" + (rec.verdict.sdd ? "true" : "false"));
  }
  return rec;
}

std::vector<fs::path> as_paths(const std::vector<std::string>& files) {
  return {files.begin(), files.end()};
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  if (!fs::exists(path)) return lines;
  std::istringstream in(io::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!io::trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

int iter_column(const std::string& row) {
  const auto cols = io::split(row, ',');
  if (cols.size() < 2) throw FormatError("malformed row '" + row + "'");
  return static_cast<int>(io::parse_int(cols[1]));
}

}  // namespace

std::uint64_t round_seed(std::uint64_t seed, int prune_iter) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(prune_iter), 0x9e3779b9u};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

bool retain_checkpoint(const ExperimentConfig& config, int prune_iter, int latest) {
  if (prune_iter == 0 || prune_iter == latest) return true;
  if (prune_iter % config.checkpoint_every == 0) return true;
  return std::find(config.checkpoint_keep.begin(), config.checkpoint_keep.end(), prune_iter) !=
         config.checkpoint_keep.end();
}

PreparedData prepare_data(const ExperimentConfig& config) {
  config.validate();
  const auto& dc = config.data;
  data::Dataset pool;
  PreparedData out;
  if (dc.source == DataSource::Synthetic) {
    pool = data::make_synthetic(dc.synthetic);
    if (dc.synthetic_test_samples > 0) {
      data::SyntheticSpec spec = dc.synthetic;
      spec.num_samples = dc.synthetic_test_samples;
      spec.stream = dc.synthetic.stream + 1;
      out.test = data::make_synthetic(spec);
    }
  } else {
    const auto variant = dc.source == DataSource::Cifar10 ? data::CifarVariant::Cifar10
                                                          : data::CifarVariant::Cifar100;
    const auto train_paths = as_paths(dc.train_files);
    pool = data::load_cifar(train_paths, variant);
    if (dc.max_train > 0 && dc.max_train < pool.size()) {
      std::vector<std::size_t> idx(pool.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::mt19937_64 rng(config.seed);
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(dc.max_train);
      std::sort(idx.begin(), idx.end());
      pool = pool.subset(idx);
    }
    if (!dc.test_files.empty()) {
      const auto test_paths = as_paths(dc.test_files);
      out.test = data::load_cifar(test_paths, variant);
    }
  }
  auto [train, val] = data::split(pool, dc.val_fraction, config.seed);
  const auto [mean, stddev] = data::channel_statistics(train);
  data::normalize(train, mean, stddev);
  data::normalize(val, mean, stddev);
  if (out.test) {
    data::normalize(*out.test, mean, stddev);
    out.test->split = data::SplitTag::Test;
  }
  out.base_labels = dc.external_labels.empty() ? train.labels
                                               : data::load_external_labels(dc.external_labels, train);
  auto noisy = data::inject_symmetric_noise(out.base_labels, config.noise.epsilon,
                                            train.num_classes, config.noise.seed);
  out.train_labels = std::move(noisy.labels);
  out.noise = std::move(noisy.spec);
  out.train = std::move(train);
  out.val = std::move(val);
  return out;
}

RunRecord run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const fs::path dir = config.output_dir;
  if (fs::exists(dir / kManifestFile)) {
    throw IoError("'" + dir.string() + "' already holds a run; use resume");
  }
  std::error_code ec;
  fs::create_directories(dir / "checkpoints", ec);
  if (ec) throw IoError("cannot create run directory '" + dir.string() + "': " + ec.message());

  RunState s;
  s.rec.run_dir = dir;
  s.rec.config = config;
  s.rec.config_hash = config_hash(config);
  io::atomic_write(dir / kConfigFile, dump_config(config));

  s.data = prepare_data(config);
  s.rec.norm_mean = s.data.train.channel_mean;
  s.rec.norm_std = s.data.train.channel_std;
  data::write_flip_record(dir / kFlipFile, s.data.noise);
  s.rec.flip_record_crc = io::hex32(io::crc32(io::read_file(dir / kFlipFile)));
  s.rec.train_label_hash = label_hash_hex(s.data.train_labels);

  s.params = vit::init_params<float>(config.model, config.seed);
  s.mask = pruning::PruneMask::dense(s.params);
  s.prunable_total = s.mask.total();
  s.parameter_total = s.params.total_elements();
  Checkpoint init;
  init.prune_iter = -1;
  init.params = s.params;
  init.mask = s.mask;
  init.meta = {{"run_id", config.run_id}, {"config_hash", s.rec.config_hash}};
  save_checkpoint(dir / kInitCheckpoint, init);
  write_manifest(s);
  say(options, "[" + config.run_id + "] " + std::to_string(s.data.train.size()) + " train / " +
                   std::to_string(s.data.val.size()) + " val samples, " +
                   std::to_string(s.data.noise.flips.size()) + " flipped labels, " +
                   std::to_string(s.prunable_total) + " prunable weights");
  return drive(s, 0, options);
}

RunRecord load_run(const fs::path& run_dir) {
  if (!fs::exists(run_dir / kManifestFile)) {
    throw IoError("'" + run_dir.string() + "' has no " + kManifestFile);
  }
  RunRecord rec;
  rec.run_dir = run_dir;
  rec.config = load_config(run_dir / kConfigFile);
  rec.config_hash = config_hash(rec.config);
  json manifest;
  try {
    manifest = json::parse(io::read_file(run_dir / kManifestFile));
    if (manifest.at("config_hash").get<std::string>() != rec.config_hash) {
      throw FormatError("'" + run_dir.string() + "': config.json does not match the manifest hash");
    }
    rec.status = run_status_from_string(manifest.at("status").get<std::string>());
    rec.failure = manifest.at("failure").get<std::string>();
    rec.flip_record_crc = manifest.at("flip_record").at("crc32").get<std::string>();
    rec.train_label_hash = manifest.at("flip_record").at("train_label_hash").get<std::string>();
    rec.norm_mean = manifest.at("normalization").at("mean").get<std::vector<double>>();
    rec.norm_std = manifest.at("normalization").at("std").get<std::vector<double>>();
    rec.round_seconds = manifest.at("timings").at("round_seconds").get<std::vector<double>>();
    for (const auto& c : manifest.at("checkpoints")) {
      rec.checkpoints.push_back({c.at("prune_iter").get<int>(), c.at("file").get<std::string>(),
                                 c.at("status").get<std::string>() == "kept"});
    }
  } catch (const json::exception& e) {
    throw FormatError("'" + (run_dir / kManifestFile).string() + "': " + e.what());
  }
  if (fs::exists(run_dir / kMetricsFile)) rec.metrics = read_metrics_csv(run_dir / kMetricsFile);
  const auto test_lines = read_lines(run_dir / kTestFile);
  for (std::size_t i = 1; i < test_lines.size(); ++i) {
    const auto cols = io::split(test_lines[i], ',');
    if (cols.size() != 5) throw FormatError("'" + (run_dir / kTestFile).string() + "': bad row");
    rec.test_metrics.push_back({static_cast<int>(io::parse_int(cols[1])), io::parse_double(cols[2]),
                                io::parse_double(cols[3]), io::parse_double(cols[4])});
  }
  update_verdict(rec);
  return rec;
}

RunRecord resume(const fs::path& run_dir, const RunOptions& options) {
  RunRecord loaded = load_run(run_dir);
  if (loaded.status == RunStatus::Complete) {
    say(options, "[" + loaded.config.run_id + "] already complete");
    return loaded;
  }
  RunState s;
  s.rec = loaded;
  const auto& cfg = s.rec.config;

  s.data = prepare_data(cfg);
  const fs::path flips = run_dir / kFlipFile;
  if (io::hex32(io::crc32(io::read_file(flips))) != s.rec.flip_record_crc) {
    throw FormatError("flip record '" + flips.string() + "' does not match its manifest checksum");
  }
  s.data.noise = data::read_flip_record(flips);
  s.data.train_labels = data::apply_flips(s.data.base_labels, s.data.noise.flips);
  if (label_hash_hex(s.data.train_labels) != s.rec.train_label_hash) {
    throw FormatError("flip record '" + flips.string() + "' does not reproduce the training labels");
  }

  // Last iteration with both a metrics row and a checkpoint on disk.
  int last = -1;
  for (auto it = s.rec.metrics.rbegin(); it != s.rec.metrics.rend(); ++it) {
    if (fs::exists(run_dir / checkpoint_file(it->prune_iter))) {
      last = it->prune_iter;
      break;
    }
  }
  const Checkpoint ckpt =
      load_checkpoint(run_dir / (last < 0 ? std::string(kInitCheckpoint) : checkpoint_file(last)));
  s.params = ckpt.params;
  s.mask = ckpt.mask;
  s.prunable_total = s.mask.total();
  s.parameter_total = s.params.total_elements();

  auto beyond = [last](int iter) { return iter > last; };
  std::erase_if(s.rec.metrics, [&](const MetricsRow& m) { return beyond(m.prune_iter); });
  std::erase_if(s.rec.test_metrics, [&](const TestRow& t) { return beyond(t.prune_iter); });
  std::erase_if(s.rec.checkpoints, [&](const CheckpointEntry& c) { return beyond(c.prune_iter); });
  s.rec.round_seconds.resize(std::min(s.rec.round_seconds.size(), s.rec.metrics.size()));
  const auto epoch_lines = read_lines(run_dir / kEpochFile);
  for (std::size_t i = 1; i < epoch_lines.size(); ++i) {
    if (!beyond(iter_column(epoch_lines[i]))) s.epoch_rows.push_back(epoch_lines[i]);
  }
  s.rec.status = RunStatus::Running;
  s.rec.failure.clear();
  update_verdict(s.rec);
  write_metrics(s);
  write_manifest(s);
  say(options, "[" + cfg.run_id + "] resuming after iteration " + std::to_string(last));
  return drive(s, last + 1, options);
}

// ---------------------------------------------------------------------------
// Sweeps

std::string lambda_dir_name(double lambda) { return "lambda_" + io::format_double(lambda); }

SweepRecord sweep_lambda(const ExperimentConfig& base, std::span<const double> lambdas,
                         const fs::path& out_dir, const RunOptions& options) {
  if (lambdas.empty()) throw ConfigError("sweep: no lambda values");
  for (double l : lambdas) {
    if (!(l >= 0.0)) throw ConfigError("sweep: lambda values must be >= 0");
  }
  fs::create_directories(out_dir);
  SweepRecord sweep;
  sweep.dir = out_dir;
  const double chance = 1.0 / static_cast<double>(base.model.num_classes);
  for (double lambda : lambdas) {
    ExperimentConfig cfg = base;
    cfg.train.weight_decay = lambda;
    cfg.output_dir = (out_dir / lambda_dir_name(lambda)).string();
    cfg.run_id = base.run_id + "_" + lambda_dir_name(lambda);
    SweepCell cell;
    cell.lambda = lambda;
    cell.zero_lambda = lambda == 0.0;
    cell.run_dir = cfg.output_dir;
    if (cell.zero_lambda) say(options, "[sweep] lambda=0 runs without regularization");
    try {
      const RunRecord rec = fs::exists(cell.run_dir / kManifestFile)
                                ? resume(cell.run_dir, options)
                                : run_experiment(cfg, options);
      cell.status = rec.status;
      cell.failure = rec.failure;
      cell.verdict = rec.verdict;
      if (!rec.curve.empty()) {
        const auto losses = sdd::val_loss_of(rec.curve);
        cell.bump = sdd::bump_magnitude(losses);
        cell.collapse_sparsity =
            sdd::collapse_sparsity(rec.curve, cfg.detect.collapse_factor * chance);
      }
      for (const auto& m : rec.metrics) {
        sweep.surface.push_back({lambda, m.prune_iter, m.sparsity, m.val_acc, m.val_loss});
      }
    } catch (const Error& e) {
      cell.status = RunStatus::Failed;
      cell.failure = e.what();
      say(options, "[sweep] lambda=" + io::format_double(lambda) + " failed: " + cell.failure);
    }
    sweep.cells.push_back(cell);
  }

  std::vector<std::string> rows;
  for (const auto& r : sweep.surface) {
    rows.push_back(io::format_double(r.lambda) + ',' + std::to_string(r.prune_iter) + ',' +
                   io::format_double(r.sparsity) + ',' + io::format_double(r.val_acc) + ',' +
                   io::format_double(r.val_loss));
  }
  io::atomic_write(out_dir / "surface.csv", join_lines(kSurfaceHeader, rows));

  json cells = json::array();
  for (const auto& c : sweep.cells) {
    json cell = {{"lambda", c.lambda},
                 {"zero_lambda", c.zero_lambda},
                 {"run_dir", fs::relative(c.run_dir, out_dir).string()},
                 {"status", to_string(c.status)},
                 {"failure", c.failure},
                 {"bump_magnitude", c.bump},
                 {"sdd", c.verdict.sdd}};
    cell["collapse_sparsity"] = c.collapse_sparsity ? json(*c.collapse_sparsity) : json(nullptr);
    cells.push_back(cell);
  }
  io::atomic_write(out_dir / "sweep.json",
                   json({{"base_run_id", base.run_id}, {"cells", cells}}).dump(2) + "\n");
  return sweep;
}

SweepRecord load_sweep(const fs::path& dir) {
  if (!fs::exists(dir / "sweep.json")) {
    throw IoError("'" + dir.string() + "' has no sweep.json");
  }
  SweepRecord sweep;
  sweep.dir = dir;
  try {
    const json doc = json::parse(io::read_file(dir / "sweep.json"));
    for (const auto& c : doc.at("cells")) {
      SweepCell cell;
      cell.lambda = c.at("lambda").get<double>();
      cell.zero_lambda = c.at("zero_lambda").get<bool>();
      cell.run_dir = dir / c.at("run_dir").get<std::string>();
      cell.status = run_status_from_string(c.at("status").get<std::string>());
      cell.failure = c.at("failure").get<std::string>();
      cell.bump = c.at("bump_magnitude").get<double>();
      cell.verdict.sdd = c.at("sdd").get<bool>();
      if (!c.at("collapse_sparsity").is_null()) {
        cell.collapse_sparsity = c.at("collapse_sparsity").get<double>();
      }
      sweep.cells.push_back(cell);
    }
  } catch (const json::exception& e) {
    throw FormatError("'" + (dir / "sweep.json").string() + "': " + e.what());
  }
  const auto lines = read_lines(dir / "surface.csv");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cols = io::split(lines[i], ',');
    if (cols.size() != 5) throw FormatError("'" + (dir / "surface.csv").string() + "': bad row");
    sweep.surface.push_back({io::parse_double(cols[0]), static_cast<int>(io::parse_int(cols[1])),
                             io::parse_double(cols[2]), io::parse_double(cols[3]),
                             io::parse_double(cols[4])});
  }
  return sweep;
}

}  // namespace sddlab

// sddlab command line: run, resume and sweep pruning experiments, classify
// curves, export weight histograms and summarize runs.
//
// Exit codes: 0 success, 2 SDD detected (detect, report), 3 usage or config
// error, 4 data/IO/format error, 5 numeric failure or failed run.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sddlab/checkpoint.hpp"
#include "sddlab/config.hpp"
#include "sddlab/detector.hpp"
#include "sddlab/error.hpp"
#include "sddlab/experiment.hpp"
#include "sddlab/histogram.hpp"
#include "sddlab/io.hpp"
#include "sddlab/metrics.hpp"
#include "sddlab/report.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kSdd = 2;
constexpr int kUsage = 3;
constexpr int kData = 4;
constexpr int kFailed = 5;

struct ConfigFlags {
  std::string config_path;
  std::string preset;
  std::string out;
  std::string run_id;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool deterministic = false;
  double lambda = 0.0;
  double epsilon = 0.0;
  int epochs = 0;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("-c,--config", f.config_path, "Experiment config JSON");
  cmd->add_option("--preset", f.preset, "Start from a preset: desk or vit-cifar");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--run-id", f.run_id, "Run identifier");
  cmd->add_option("--seed", f.seed, "Run seed (init, split, minibatch order)");
  cmd->add_flag("--deterministic", f.deterministic, "Record deterministic mode");
  cmd->add_option("--lambda", f.lambda, "l2 weight (train.weight_decay)");
  cmd->add_option("--epsilon", f.epsilon, "Symmetric label noise fraction");
  cmd->add_option("--epochs", f.epochs, "Epochs per training round");
  cmd->add_option("--set", f.overrides, "Override a config field: section.key=value")
      ->allow_extra_args(false);
}

sddlab::ExperimentConfig build_config(const CLI::App* cmd, const ConfigFlags& f) {
  using namespace sddlab;
  ExperimentConfig cfg;
  if (!f.config_path.empty()) {
    cfg = load_config(f.config_path);
  } else if (f.preset == "vit-cifar") {
    cfg = vit_cifar_preset();
  } else if (f.preset.empty() || f.preset == "desk") {
    cfg = desk_preset();
  } else {
    throw ConfigError("unknown preset '" + f.preset + "' (expected desk or vit-cifar)");
  }
  for (const auto& o : f.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + o + "'");
    cfg = with_override(cfg, o.substr(0, eq), o.substr(eq + 1));
  }
  if (cmd->count("--out")) cfg.output_dir = f.out;
  if (cmd->count("--run-id")) cfg.run_id = f.run_id;
  if (cmd->count("--seed")) cfg.seed = f.seed;
  if (cmd->count("--deterministic")) cfg.deterministic = f.deterministic;
  if (cmd->count("--lambda")) cfg.train.weight_decay = f.lambda;
  if (cmd->count("--epsilon")) cfg.noise.epsilon = f.epsilon;
  if (cmd->count("--epochs")) cfg.train.epochs = f.epochs;
  cfg.validate();
  return cfg;
}

void log_line(const std::string& msg) { std::cerr << msg << std::endl; }

int status_code(sddlab::RunStatus status) {
  return status == sddlab::RunStatus::Failed ? kFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse double descent experiments on small vision transformers"};
  app.require_subcommand(1);

  sddlab::RunOptions options;
  options.log = log_line;

  ConfigFlags run_flags;
  int stop_after = -1;
  auto* run = app.add_subcommand("run", "Train, then prune and retrain until zeta_end");
  add_config_flags(run, run_flags);
  run->add_option("--stop-after", stop_after, "Stop after this prune iteration (resumable)");

  std::string resume_dir;
  auto* res = app.add_subcommand("resume", "Continue an interrupted run");
  res->add_option("run_dir", resume_dir, "Run directory")->required();

  ConfigFlags sweep_flags;
  std::vector<double> lambdas;
  auto* sweep = app.add_subcommand("sweep", "One run per l2 weight");
  add_config_flags(sweep, sweep_flags);
  sweep->add_option("--lambdas", lambdas, "l2 weights")->required()->delimiter(',');

  std::string curve_path;
  double tolerance = 0.005;
  std::size_t window = 1;
  auto* detect = app.add_subcommand("detect", "Classify a performance curve CSV");
  detect->add_option("csv", curve_path, "Curve CSV (metrics.csv or any CSV with val_acc)")
      ->required();
  detect->add_option("--tolerance", tolerance, "Flat-move tolerance delta");
  detect->add_option("--smooth", window, "Centered moving-average window");

  std::string ckpt_path;
  std::string hist_out;
  std::size_t bins = 50;
  double lo = -0.2;
  double hi = 0.2;
  auto* hist = app.add_subcommand("hist", "Histogram of surviving weights in a checkpoint");
  hist->add_option("checkpoint", ckpt_path, "Checkpoint file")->required();
  hist->add_option("--bins", bins, "Bin count");
  hist->add_option("--lo", lo, "Lower edge");
  hist->add_option("--hi", hi, "Upper edge");
  hist->add_option("-o,--output", hist_out, "Write CSV here instead of stdout");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Summarize a run or a sweep");
  report->add_option("dir", report_dir, "Run or sweep directory")->required();

  ConfigFlags show_flags;
  auto* show = app.add_subcommand("config", "Print the effective config JSON");
  add_config_flags(show, show_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) {
      auto cfg = build_config(run, run_flags);
      if (stop_after >= 0) options.stop_after = stop_after;
      const auto rec = sddlab::run_experiment(cfg, options);
      std::cout << sddlab::analyze_run(rec).summary << "\n";
      return status_code(rec.status);
    }
    if (*res) {
      const auto rec = sddlab::resume(resume_dir, options);
      std::cout << sddlab::analyze_run(rec).summary << "\n";
      return status_code(rec.status);
    }
    if (*sweep) {
      auto cfg = build_config(sweep, sweep_flags);
      const auto rec = sddlab::sweep_lambda(cfg, lambdas, cfg.output_dir, options);
      const auto rep = sddlab::report_sweep(rec.dir);
      for (const auto& l : rep.lines) std::cout << l << "\n";
      return rep.any_failed ? kFailed : kOk;
    }
    if (*detect) {
      const auto curve = sddlab::read_curve_csv(curve_path);
      const auto v = sddlab::sdd::detect_sdd_curve(curve, tolerance, window);
      std::cout << "sdd=" << (v.sdd ? "true" : "false");
      if (v.trigger_index) {
        const auto& p = curve[*v.trigger_index];
        std::cout << " trigger_index=" << *v.trigger_index << " prune_iter=" << p.prune_iter
                  << " sparsity=" << sddlab::io::format_double(p.sparsity);
      }
      std::cout << " tolerance=" << sddlab::io::format_double(tolerance)
                << " smoothing_window=" << window << " points=" << curve.size() << "\n";
      return v.sdd ? kSdd : kOk;
    }
    if (*hist) {
      const auto ckpt = sddlab::load_checkpoint(ckpt_path);
      const auto h = sddlab::export_histogram(ckpt, bins, lo, hi);
      const auto csv = sddlab::histogram_csv(h);
      if (hist_out.empty()) {
        std::cout << csv;
      } else {
        sddlab::io::atomic_write(hist_out, csv);
      }
      return kOk;
    }
    if (*report) {
      namespace fs = std::filesystem;
      if (fs::exists(fs::path(report_dir) / "sweep.json")) {
        const auto rep = sddlab::report_sweep(report_dir);
        for (const auto& l : rep.lines) std::cout << l << "\n";
        std::cout << "surface rows: " << rep.surface_rows << "\n";
        if (rep.any_failed) return kFailed;
        return rep.any_sdd ? kSdd : kOk;
      }
      const auto rep = sddlab::report_run(report_dir);
      std::cout << rep.summary << "\n";
      if (rep.status == sddlab::RunStatus::Failed) return kFailed;
      return rep.verdict.sdd ? kSdd : kOk;
    }
    if (*show) {
      std::cout << sddlab::dump_config(build_config(show, show_flags));
      return kOk;
    }
  } catch (const sddlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const sddlab::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kFailed;
  } catch (const sddlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

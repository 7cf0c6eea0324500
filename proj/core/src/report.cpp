#include "sddlab/report.hpp"

#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sddlab/io.hpp"

namespace sddlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string phase_text(const sdd::Curve& curve, const sdd::Range& r) {
  if (r.empty()) return "empty";
  return "[" + fixed(curve[r.begin].sparsity) + ", " + fixed(curve[r.end - 1].sparsity) + "]";
}

int phase_of(const sdd::PhaseSegmentation& seg, std::size_t i) {
  for (std::size_t p = 0; p < seg.phases.size(); ++p) {
    if (i >= seg.phases[p].begin && i < seg.phases[p].end) return static_cast<int>(p) + 1;
  }
  return 0;
}

}  // namespace

RunReport analyze_run(const RunRecord& record) {
  RunReport r;
  r.status = record.status;
  r.verdict = record.verdict;
  const auto& curve = record.curve;
  const auto& cfg = record.config;
  std::string line = "run " + cfg.run_id + " [" + to_string(record.status) + "]";
  if (curve.empty()) {
    r.summary = line + ": no completed iterations";
    return r;
  }
  r.phases = sdd::segment_phases(curve, cfg.detect.tolerance, curve.front().performance);
  r.bump = sdd::bump_magnitude(sdd::val_loss_of(curve));
  const double chance = 1.0 / static_cast<double>(cfg.model.num_classes);
  r.collapse_sparsity = sdd::collapse_sparsity(curve, cfg.detect.collapse_factor * chance);

  line += ": ";
  if (r.verdict.sdd && r.verdict.trigger_index) {
    const auto& p = curve[*r.verdict.trigger_index];
    line += "SDD detected at sparsity " + fixed(p.sparsity) + " (iter " +
            std::to_string(p.prune_iter) + ")";
  } else {
    line += "no SDD";
  }
  line += "; phases";
  for (std::size_t i = 0; i < r.phases.phases.size(); ++i) {
    line += " " + std::to_string(i + 1) + "=" + phase_text(curve, r.phases.phases[i]);
  }
  line += "; bump " + fixed(r.bump);
  line += "; collapse " + (r.collapse_sparsity ? fixed(*r.collapse_sparsity) : std::string("none"));
  line += "; " + std::to_string(curve.size()) + " points";
  if (record.status == RunStatus::Failed) line += "; failure: " + record.failure;
  r.summary = line;
  return r;
}

RunReport report_run(const fs::path& run_dir) {
  const RunRecord record = load_run(run_dir);
  const RunReport r = analyze_run(record);
  const fs::path out = run_dir / "report";
  fs::create_directories(out);

  std::ostringstream curve;
  curve << "prune_iter,sparsity,val_acc,val_loss,train_acc,train_loss,test_acc,test_loss,phase\n";
  for (std::size_t i = 0; i < record.curve.size(); ++i) {
    const auto& p = record.curve[i];
    curve << p.prune_iter << ',' << io::format_double(p.sparsity) << ','
          << io::format_double(p.performance) << ',' << io::format_double(p.val_loss) << ','
          << io::format_double(p.train_acc) << ',' << io::format_double(p.train_loss) << ',';
    if (i < record.test_metrics.size()) {
      curve << io::format_double(record.test_metrics[i].test_acc) << ','
            << io::format_double(record.test_metrics[i].test_loss);
    } else {
      curve << ',';
    }
    curve << ',' << phase_of(r.phases, i) << '\n';
  }
  io::atomic_write(out / "curve.csv", curve.str());

  std::ostringstream phases;
  phases << "phase,begin_index,end_index,sparsity_begin,sparsity_end\n";
  json phase_json = json::array();
  for (std::size_t i = 0; i < r.phases.phases.size(); ++i) {
    const auto& range = r.phases.phases[i];
    phases << i + 1 << ',' << range.begin << ',' << range.end << ',';
    json entry = {{"phase", i + 1}, {"begin", range.begin}, {"end", range.end}};
    if (!range.empty()) {
      phases << io::format_double(record.curve[range.begin].sparsity) << ','
             << io::format_double(record.curve[range.end - 1].sparsity);
      entry["sparsity_begin"] = record.curve[range.begin].sparsity;
      entry["sparsity_end"] = record.curve[range.end - 1].sparsity;
    } else {
      phases << ',';
    }
    phases << '\n';
    phase_json.push_back(entry);
  }
  io::atomic_write(out / "phases.csv", phases.str());

  json doc = {{"run_id", record.config.run_id},
              {"status", to_string(record.status)},
              {"failure", record.failure},
              {"sdd", r.verdict.sdd},
              {"tolerance", r.verdict.tolerance},
              {"smoothing_window", r.verdict.smoothing_window},
              {"phases", phase_json},
              {"bump_magnitude", r.bump},
              {"points", record.curve.size()},
              {"summary", r.summary}};
  doc["trigger_index"] = r.verdict.trigger_index ? json(*r.verdict.trigger_index) : json(nullptr);
  doc["collapse_sparsity"] = r.collapse_sparsity ? json(*r.collapse_sparsity) : json(nullptr);
  io::atomic_write(out / "report.json", doc.dump(2) + "\n");
  io::atomic_write(out / "summary.txt", r.summary + "\n");
  return r;
}

SweepReport report_sweep(const fs::path& dir) {
  const SweepRecord sweep = load_sweep(dir);
  SweepReport rep;
  rep.surface_rows = sweep.surface.size();
  for (const auto& c : sweep.cells) {
    std::string line = "lambda " + io::format_double(c.lambda) + " [" + to_string(c.status) + "]";
    if (c.zero_lambda) line += " (unregularized)";
    line += ": sdd=" + std::string(c.verdict.sdd ? "true" : "false");
    line += " bump=" + fixed(c.bump);
    line += " collapse=" + (c.collapse_sparsity ? fixed(*c.collapse_sparsity) : std::string("none"));
    if (c.status == RunStatus::Failed) line += " failure: " + c.failure;
    rep.any_sdd = rep.any_sdd || c.verdict.sdd;
    rep.any_failed = rep.any_failed || c.status == RunStatus::Failed;
    rep.lines.push_back(line);
  }
  std::string text;
  for (const auto& l : rep.lines) text += l + "\n";
  text += "surface rows: " + std::to_string(rep.surface_rows) + "\n";
  io::atomic_write(dir / "sweep_report.txt", text);
  return rep;
}

}  // namespace sddlab

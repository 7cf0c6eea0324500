#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sddlab/detector.hpp"
#include "sddlab/experiment.hpp"

namespace sddlab {

struct RunReport {
  RunStatus status = RunStatus::Running;
  sdd::Verdict verdict;
  sdd::PhaseSegmentation phases;
  double bump = 0.0;
  std::optional<double> collapse_sparsity;
  std::string summary;  // one line
};

// Analysis of a run record; works on partial curves of failed runs.
RunReport analyze_run(const RunRecord& record);

// Writes report/curve.csv, report/phases.csv, report/report.json and
// report/summary.txt under the run directory.
RunReport report_run(const std::filesystem::path& run_dir);

struct SweepReport {
  std::vector<std::string> lines;  // one per lambda
  std::size_t surface_rows = 0;
  bool any_sdd = false;
  bool any_failed = false;
};

// Writes sweep_report.txt next to sweep.json.
SweepReport report_sweep(const std::filesystem::path& dir);

}  // namespace sddlab

#include "sddlab/metrics.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

#include "sddlab/error.hpp"
#include "sddlab/io.hpp"

namespace sddlab {

const std::string& metrics_header() {
  static const std::string header =
      "run_id,prune_iter,sparsity,train_acc,train_loss,val_acc,val_loss,epochs_trained,"
      "lr_final,seed";
  return header;
}

std::string format_metrics_row(const MetricsRow& r) {
  std::string out = r.run_id;
  out += ',' + std::to_string(r.prune_iter);
  for (double v : {r.sparsity, r.train_acc, r.train_loss, r.val_acc, r.val_loss}) {
    out += ',' + io::format_double(v);
  }
  out += ',' + std::to_string(r.epochs_trained);
  out += ',' + io::format_double(r.lr_final);
  out += ',' + std::to_string(r.seed);
  return out;
}

std::vector<MetricsRow> parse_metrics_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::vector<MetricsRow> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = io::trim(line);
    if (t.empty()) continue;
    if (line_no == 1) {
      if (t != metrics_header()) {
        throw FormatError("'" + origin + "': header does not match the metrics columns");
      }
      continue;
    }
    const auto cols = io::split(t, ',');
    if (cols.size() != 10) {
      throw FormatError("'" + origin + "' line " + std::to_string(line_no) + ": expected 10 columns, got " +
                        std::to_string(cols.size()));
    }
    MetricsRow r;
    try {
      r.run_id = cols[0];
      r.prune_iter = static_cast<int>(io::parse_int(cols[1]));
      r.sparsity = io::parse_double(cols[2]);
      r.train_acc = io::parse_double(cols[3]);
      r.train_loss = io::parse_double(cols[4]);
      r.val_acc = io::parse_double(cols[5]);
      r.val_loss = io::parse_double(cols[6]);
      r.epochs_trained = static_cast<int>(io::parse_int(cols[7]));
      r.lr_final = io::parse_double(cols[8]);
      r.seed = static_cast<std::uint64_t>(std::stoull(cols[9]));
    } catch (const std::exception& e) {
      throw FormatError("'" + origin + "' line " + std::to_string(line_no) + ": " + e.what());
    }
    rows.push_back(std::move(r));
  }
  if (line_no == 0) throw FormatError("'" + origin + "' is empty");
  return rows;
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  return parse_metrics_csv(io::read_file(path), path.string());
}

sdd::Curve curve_from_metrics(const std::vector<MetricsRow>& rows) {
  sdd::Curve curve;
  curve.reserve(rows.size());
  for (const auto& r : rows) {
    curve.push_back({r.prune_iter, r.sparsity, r.val_acc, r.train_acc, r.train_loss, r.val_loss});
  }
  return curve;
}

sdd::Curve read_curve_csv(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::string line;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    const auto t = io::trim(line);
    if (t.empty() || t.starts_with("#")) continue;
    header = io::split(t, ',');
  }
  if (header.empty()) throw FormatError("'" + path.string() + "' has no header row");
  for (auto& h : header) h = std::string(io::trim(h));

  auto column = [&](std::initializer_list<const char*> names) -> std::optional<std::size_t> {
    for (const char* n : names) {
      auto it = std::find(header.begin(), header.end(), n);
      if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
    }
    return std::nullopt;
  };
  const auto perf = column({"val_acc", "performance", "accuracy", "acc"});
  if (!perf) {
    throw FormatError("'" + path.string() +
                      "' needs a val_acc, performance, accuracy or acc column");
  }
  const auto sparsity = column({"sparsity"});
  const auto iter = column({"prune_iter", "iter"});
  const auto loss = column({"val_loss", "loss"});
  const auto train_acc = column({"train_acc"});
  const auto train_loss = column({"train_loss"});

  sdd::Curve curve;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = io::trim(line);
    if (t.empty() || t.starts_with("#")) continue;
    const auto cols = io::split(t, ',');
    if (cols.size() != header.size()) {
      throw FormatError("'" + path.string() + "' line " + std::to_string(line_no) +
                        ": column count differs from header");
    }
    sdd::CurvePoint p;
    p.prune_iter = iter ? static_cast<int>(io::parse_int(cols[*iter]))
                        : static_cast<int>(curve.size());
    p.performance = io::parse_double(cols[*perf]);
    if (sparsity) p.sparsity = io::parse_double(cols[*sparsity]);
    if (loss) p.val_loss = io::parse_double(cols[*loss]);
    if (train_acc) p.train_acc = io::parse_double(cols[*train_acc]);
    if (train_loss) p.train_loss = io::parse_double(cols[*train_loss]);
    curve.push_back(p);
  }
  return curve;
}

}  // namespace sddlab

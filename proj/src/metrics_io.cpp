#include "gmp/metrics_io.hpp"

#include <fstream>
#include <map>
#include <ostream>

#include "gmp/csv.hpp"
#include "gmp/errors.hpp"

namespace gmp::metrics {

using csv::format_double;

void write_metrics_header(std::ostream& out) { out << kMetricsVersionLine << '\n' << kMetricsHeader << '\n'; }

void write_metrics_row(std::ostream& out, const StepMetrics& m) {
  auto pair = [&](const PerModality<double>& x) { out << ',' << format_double(x.v) << ',' << format_double(x.a); };
  out << m.step << ',' << m.epoch << ',' << to_string(m.strategy);
  pair(m.rho);
  pair(m.sigma);
  pair(m.k);
  pair(m.p);
  pair(m.gamma);
  out << ',' << int(m.conflict.v) << ',' << int(m.conflict.a);
  pair(m.norm_gc);
  pair(m.norm_gd);
  for (double x : {m.r_va, m.R_va, m.loss_c, m.loss_d, m.pred_dL, m.actual_dL}) out << ',' << format_double(x);
  out << '\n';
}

void write_eval_header(std::ostream& out) { out << kEvalVersionLine << '\n' << kEvalHeader << '\n'; }

void write_eval_row(std::ostream& out, const EpochMetrics& m) {
  out << m.epoch << ',' << format_double(m.source_val_acc) << ',' << format_double(m.target_acc) << ','
      << format_double(m.branch_acc_v) << ',' << format_double(m.branch_acc_a) << '\n';
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

void write_metrics_csv(const std::filesystem::path& path, std::span<const StepMetrics> rows) {
  auto out = open_out(path);
  write_metrics_header(out);
  for (const auto& r : rows) write_metrics_row(out, r);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_eval_csv(const std::filesystem::path& path, std::span<const EpochMetrics> rows) {
  auto out = open_out(path);
  write_eval_header(out);
  for (const auto& r : rows) write_eval_row(out, r);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::size_t MetricsTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw ParseError("missing column", 0, std::string(name));
}

MetricsTable read_metrics_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read metrics file '" + path.string() + "'");
  MetricsTable table;
  std::string raw;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (csv::trim(raw).empty()) continue;
    if (!have_header) {
      if (raw.starts_with('#')) {
        if (raw != kMetricsVersionLine) throw ParseError("unsupported version line '" + raw + "'", line_no, "");
        continue;
      }
      for (auto cell : csv::split_line(raw)) table.columns.emplace_back(csv::trim(cell));
      if (table.columns.empty() || table.columns.front() != "step") {
        throw ParseError("expected a header starting with 'step'", line_no, "");
      }
      have_header = true;
      continue;
    }
    auto cells = csv::split_line(raw);
    if (cells.size() != table.columns.size()) {
      throw ParseError("expected " + std::to_string(table.columns.size()) + " cells, got " +
                           std::to_string(cells.size()),
                       line_no, "");
    }
    auto& row = table.rows.emplace_back();
    row.reserve(cells.size());
    for (auto cell : cells) row.emplace_back(csv::trim(cell));
    // Numeric columns are validated up front so exports never emit garbage.
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (table.columns[c] == "strategy") continue;
      (void)csv::parse_double(row[c], line_no, table.columns[c]);
    }
  }
  return table;
}

void export_plot_data(const MetricsTable& table, std::ostream& out, const PlotExportOptions& options) {
  out << kPlotVersionLine << '\n' << kPlotHeader << '\n';
  if (table.rows.empty()) return;

  static constexpr std::string_view kSeries[] = {"rho_v", "rho_a", "sigma_v", "sigma_a",
                                                 "k_v",   "k_a",   "p_v",     "p_a"};
  const std::size_t step_col = table.column("step");
  std::vector<std::size_t> cols;
  for (auto name : kSeries) cols.push_back(table.column(name));

  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < cols.size(); ++i) out << row[step_col] << ',' << kSeries[i] << ',' << row[cols[i]] << '\n';
  }

  if (!options.conflict_rate) return;
  const std::size_t epoch_col = table.column("epoch");
  const PerModality<std::size_t> conflict_col{table.column("conflict_v"), table.column("conflict_a")};
  struct Tally {
    std::string last_step;
    std::size_t n = 0;
    PerModality<std::size_t> hits{0, 0};
  };
  std::map<std::int64_t, Tally> epochs;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto& t = epochs[csv::parse_int(row[epoch_col], r + 1, "epoch")];
    t.last_step = row[step_col];
    ++t.n;
    for (Modality m : kModalities) t.hits[m] += csv::parse_double(row[conflict_col[m]], r + 1, "conflict") != 0.0;
  }
  for (const auto& [epoch, t] : epochs) {
    for (Modality m : kModalities) {
      out << t.last_step << ",conflict_rate_" << short_name(m) << ','
          << format_double(static_cast<double>(t.hits[m]) / static_cast<double>(t.n)) << '\n';
    }
  }
}

}  // namespace gmp::metrics

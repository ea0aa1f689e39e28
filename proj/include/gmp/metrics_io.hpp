#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gmp/trainer.hpp"

namespace gmp::metrics {

inline constexpr std::string_view kMetricsVersionLine = "# gmp-metrics v1";
inline constexpr std::string_view kMetricsHeader =
    "step,epoch,strategy,rho_v,rho_a,sigma_v,sigma_a,k_v,k_a,p_v,p_a,gamma_v,gamma_a,conflict_v,conflict_a,"
    "norm_gc_v,norm_gc_a,norm_gd_v,norm_gd_a,r_va,R_va,loss_c,loss_d,pred_dL,actual_dL";

inline constexpr std::string_view kEvalVersionLine = "# gmp-eval v1";
inline constexpr std::string_view kEvalHeader = "epoch,source_val_acc,target_acc,branch_acc_v,branch_acc_a";

inline constexpr std::string_view kPlotVersionLine = "# gmp-plot v1";
inline constexpr std::string_view kPlotHeader = "step,series,value";

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const StepMetrics& m);
void write_eval_header(std::ostream& out);
void write_eval_row(std::ostream& out, const EpochMetrics& m);

void write_metrics_csv(const std::filesystem::path& path, std::span<const StepMetrics> rows);
void write_eval_csv(const std::filesystem::path& path, std::span<const EpochMetrics> rows);

// Metrics CSV as header names plus raw text cells; numbers are left untouched
// so downstream exports reproduce the source values exactly.
struct MetricsTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
};

MetricsTable read_metrics_table(const std::filesystem::path& path);

struct PlotExportOptions {
  // Appends per-epoch conflict_rate_v / conflict_rate_a rows, stamped with the epoch's last step.
  bool conflict_rate = false;
};

// Long-format (step, series, value) rows for rho/sigma/k/p of both modalities.
void export_plot_data(const MetricsTable& table, std::ostream& out, const PlotExportOptions& options = {});

}  // namespace gmp::metrics

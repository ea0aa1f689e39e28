#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "gmp/config.hpp"
#include "gmp/param_set.hpp"
#include "gmp/synthdata.hpp"
#include "gmp/trainer.hpp"

namespace gmp {

struct RunSummary {
  Strategy strategy = Strategy::Gmp;
  std::uint64_t seed = 0;
  int best_epoch = 0;
  double source_val_acc = 0.0;
  double target_acc = 0.0;
  double branch_acc_v = 0.0;
  double branch_acc_a = 0.0;
  // Over the steps of the final epoch, averaged across both modalities; 0 when no step ran.
  double mean_abs_rho_dev = 0.0;
  double mean_abs_sigma_dev = 0.0;
  PerModality<double> conflict_rate{0.0, 0.0};
  int steps = 0;
  std::uint64_t dataset_hash = 0;
};

struct RunResult {
  RunSummary summary;
  std::vector<StepMetrics> steps;
  // Row 0 is the untrained model; row e is after epoch e.
  std::vector<EpochMetrics> epochs;
  // Parameters at the best source-validation epoch.
  ParamSet best_params;
};

// Trains cfg.train.strategy on the given splits. Batches are reshuffled each
// epoch from train.seed; the model is initialised from cfg.model_seed.
RunResult run_experiment(const ExperimentConfig& cfg, const synth::Splits& splits);
// Generates and splits the data from cfg first.
RunResult run_experiment(const ExperimentConfig& cfg);

synth::Splits make_splits(const ExperimentConfig& cfg);

struct AblationRow {
  RunSummary summary;
  std::string status = "ok";  // or the failure message
};

struct AblationStats {
  Strategy strategy = Strategy::Gmp;
  int runs = 0;
  double source_val_mean = 0.0, source_val_se = 0.0;
  double target_mean = 0.0, target_se = 0.0;
  double branch_v_mean = 0.0, branch_a_mean = 0.0;
  double rho_dev_mean = 0.0, sigma_dev_mean = 0.0;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::vector<AblationStats> stats;  // kAllStrategies order, successful runs only

  const AblationStats& stats_for(Strategy s) const;
};

using ProgressFn = std::function<void(const std::string&)>;

// Every strategy on every seed of cfg.run_seeds(); runs that share a seed share the data.
AblationResult run_ablation(const ExperimentConfig& cfg, std::span<const Strategy> strategies = kAllStrategies,
                            const ProgressFn& progress = {});

// Mean and standard error (sample sd / sqrt(n); 0 for n < 2).
std::pair<double, double> mean_and_se(std::span<const double> xs);

void write_ablation_runs_csv(std::ostream& out, const AblationResult& result);
void write_ablation_summary_csv(std::ostream& out, const AblationResult& result);

enum class SweepAxis { AlphaK, AlphaP, Lambda };
SweepAxis parse_sweep_axis(std::string_view name);
std::string_view to_string(SweepAxis axis) noexcept;

struct SweepRow {
  double value = 0.0;
  RunSummary summary;
};

// One run per value, in the given order, on the same seed and data.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, SweepAxis axis, std::span<const double> values,
                                const ProgressFn& progress = {});
void write_sweep_csv(std::ostream& out, SweepAxis axis, std::span<const SweepRow> rows);

struct RunArtifacts {
  std::filesystem::path config;
  std::filesystem::path metrics;
  std::filesystem::path eval;
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;
};

// Writes config snapshot, metrics, eval, checkpoint and manifest under dir.
RunArtifacts write_run_artifacts(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                                 const RunResult& result, double wall_seconds);

std::string manifest_json(const ExperimentConfig& cfg, const RunArtifacts& artifacts, const RunSummary& summary,
                          double wall_seconds);

}  // namespace gmp

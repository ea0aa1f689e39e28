// gmp: train / ablate / sweep / grad-check / export-plot-data / export-data.
//
// Exit codes: 0 success, 1 check failure, 2 usage or config error, 3 numeric abort.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "gmp/config.hpp"
#include "gmp/csv.hpp"
#include "gmp/errors.hpp"
#include "gmp/experiment.hpp"
#include "gmp/grad_check.hpp"
#include "gmp/metrics_io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string strategy;
  std::string axis;
  std::string values;
  double tolerance = 1e-4;
  bool conflict_rate = false;
  std::string metrics;
};

gmp::ExperimentConfig load(const Options& opt) {
  auto cfg = gmp::load_config(opt.config);
  if (opt.seed) {
    cfg.apply_seed(*opt.seed);
    cfg.seeds = {*opt.seed};
  }
  if (!opt.strategy.empty()) cfg.train.strategy = gmp::parse_strategy(opt.strategy);
  cfg.validate();
  return cfg;
}

std::ofstream open_file(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gmp::IoError("cannot write '" + path.string() + "'");
  return out;
}

void print_summary(const gmp::RunSummary& s) {
  std::cout << "strategy        " << gmp::to_string(s.strategy) << "\n"
            << "best_epoch      " << s.best_epoch << "\n"
            << "source_val_acc  " << s.source_val_acc << "\n"
            << "target_acc      " << s.target_acc << "\n"
            << "branch_acc_v    " << s.branch_acc_v << "\n"
            << "branch_acc_a    " << s.branch_acc_a << "\n"
            << "mean |rho-1|    " << s.mean_abs_rho_dev << "\n"
            << "mean |sigma-1|  " << s.mean_abs_sigma_dev << "\n";
}

int cmd_train(const Options& opt) {
  const auto cfg = load(opt);
  const auto start = std::chrono::steady_clock::now();
  const auto result = gmp::run_experiment(cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto artifacts = gmp::write_run_artifacts(opt.out.empty() ? "runs/train" : opt.out, cfg, result, seconds);
  print_summary(result.summary);
  std::cout << "manifest        " << artifacts.manifest.string() << "\n";
  return kExitOk;
}

int cmd_ablate(const Options& opt) {
  const auto cfg = load(opt);
  const auto result =
      gmp::run_ablation(cfg, gmp::kAllStrategies, [](const std::string& line) { std::cerr << line << "\n"; });
  const fs::path dir = opt.out.empty() ? "runs/ablate" : opt.out;
  {
    auto out = open_file(dir / "ablation_runs.csv");
    gmp::write_ablation_runs_csv(out, result);
  }
  {
    auto out = open_file(dir / "ablation_summary.csv");
    gmp::write_ablation_summary_csv(out, result);
  }
  gmp::write_ablation_summary_csv(std::cout, result);
  bool failed = false;
  for (const auto& row : result.rows) {
    if (row.status != "ok") {
      failed = true;
      std::cerr << "failed: seed " << row.summary.seed << " " << gmp::to_string(row.summary.strategy) << ": "
                << row.status << "\n";
    }
  }
  return failed ? kExitNumeric : kExitOk;
}

int cmd_sweep(const Options& opt) {
  const auto cfg = load(opt);
  const auto axis = gmp::parse_sweep_axis(opt.axis);
  std::vector<double> values;
  if (!gmp::csv::trim(opt.values).empty()) {
    for (auto item : gmp::csv::split_line(opt.values)) {
      values.push_back(gmp::csv::parse_double(gmp::csv::trim(item), 0, "--values"));
    }
  }
  const auto rows = gmp::run_sweep(cfg, axis, values, [](const std::string& line) { std::cerr << line << "\n"; });
  const fs::path dir = opt.out.empty() ? "runs/sweep" : opt.out;
  auto out = open_file(dir / ("sweep_" + std::string(gmp::to_string(axis)) + ".csv"));
  gmp::write_sweep_csv(out, axis, rows);
  gmp::write_sweep_csv(std::cout, axis, rows);
  return kExitOk;
}

int cmd_grad_check(const Options& opt) {
  if (!(opt.tolerance >= 0.0)) throw gmp::ConfigError("--tolerance must be non-negative");
  gmp::gradcheck::GradCheckConfig gc;
  gc.seed = opt.seed.value_or(0);
  gc.tolerance = opt.tolerance;
  const auto report = gmp::gradcheck::run(gc);
  std::cout << "param,loss,rel_error,status\n";
  for (const auto& b : report.blocks) {
    std::cout << b.param_id << ',' << b.loss << ',' << gmp::csv::format_double(b.rel_error) << ','
              << (b.passed ? "ok" : "FAIL") << "\n";
  }
  std::cout << "max_rel_error " << gmp::csv::format_double(report.max_rel_error) << " tolerance "
            << gmp::csv::format_double(gc.tolerance) << " seconds " << report.seconds << "\n";
  if (report.passed) {
    std::cout << "grad-check passed\n";
    return kExitOk;
  }
  for (const auto& b : report.failures()) std::cerr << "offending block: " << b.param_id << " (" << b.loss << ")\n";
  std::cout << "grad-check FAILED\n";
  return kExitCheckFailed;
}

int cmd_export_plot_data(const Options& opt) {
  const auto table = gmp::metrics::read_metrics_table(opt.metrics);
  gmp::metrics::PlotExportOptions po;
  po.conflict_rate = opt.conflict_rate;
  if (opt.out.empty()) {
    gmp::metrics::export_plot_data(table, std::cout, po);
  } else {
    auto out = open_file(opt.out);
    gmp::metrics::export_plot_data(table, out, po);
  }
  return kExitOk;
}

int cmd_export_data(const Options& opt) {
  const auto cfg = load(opt);
  const auto splits = gmp::make_splits(cfg);
  const fs::path dir = opt.out.empty() ? "runs/data" : opt.out;
  fs::create_directories(dir);
  gmp::synth::write_csv(splits.train, dir / "train.csv");
  gmp::synth::write_csv(splits.source_val, dir / "source_val.csv");
  gmp::synth::write_csv(splits.target_test, dir / "target_test.csv");
  std::cout << "dataset_hash " << gmp::synth::hash_splits(splits) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient modulation and projection for multimodal domain generalization"};
  app.require_subcommand(1);
  Options opt;

  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", opt.seed, "Seed override (data, model, training)"); };
  auto add_config = [&](CLI::App* sub) { sub->add_option("--config", opt.config, "Run configuration file")->required(); };

  auto* train = app.add_subcommand("train", "Train one strategy and write run artifacts");
  add_config(train);
  add_seed(train);
  train->add_option("--out", opt.out, "Output directory");
  train->add_option("--strategy", opt.strategy, "Strategy override");

  auto* ablate = app.add_subcommand("ablate", "Run every strategy over the configured seeds");
  add_config(ablate);
  add_seed(ablate);
  ablate->add_option("--out", opt.out, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Sweep one hyperparameter");
  add_config(sweep);
  add_seed(sweep);
  sweep->add_option("--axis", opt.axis, "alpha_k, alpha_p or lambda")->required();
  sweep->add_option("--values", opt.values, "Comma-separated values")->required();
  sweep->add_option("--out", opt.out, "Output directory");
  sweep->add_option("--strategy", opt.strategy, "Strategy override");

  auto* grad = app.add_subcommand("grad-check", "Finite-difference gradient check of a small random model");
  add_seed(grad);
  grad->add_option("--tolerance", opt.tolerance, "Maximum relative error per block")->capture_default_str();

  auto* plot = app.add_subcommand("export-plot-data", "Long-format ratio and coefficient series from a metrics CSV");
  plot->add_option("metrics", opt.metrics, "Metrics CSV")->required();
  plot->add_option("--out", opt.out, "Output file (default stdout)");
  plot->add_flag("--conflict-rate", opt.conflict_rate, "Append per-epoch conflict-rate series");

  auto* data = app.add_subcommand("export-data", "Write the generated splits as CSV");
  add_config(data);
  add_seed(data);
  data->add_option("--out", opt.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(opt);
    if (*ablate) return cmd_ablate(opt);
    if (*sweep) return cmd_sweep(opt);
    if (*grad) return cmd_grad_check(opt);
    if (*plot) return cmd_export_plot_data(opt);
    if (*data) return cmd_export_data(opt);
  } catch (const gmp::NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const gmp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

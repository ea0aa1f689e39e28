#include "gmp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include <json.hpp>

#include "gmp/csv.hpp"
#include "gmp/metrics_io.hpp"

namespace gmp {

using csv::format_double;

synth::Splits make_splits(const ExperimentConfig& cfg) {
  cfg.validate();
  return synth::split_leave_one_domain_out(synth::generate(cfg.data), cfg.target_domain, cfg.val_fraction);
}

namespace {

EpochMetrics evaluate_epoch(const ParamSet& params, const synth::Splits& splits, int epoch) {
  const auto val = evaluate(params, splits.source_val);
  const auto target = evaluate(params, splits.target_test);
  return EpochMetrics{epoch, val.fused, target.fused, target.branch_v, target.branch_a};
}

void summarize_last_epoch(RunResult& r, int last_epoch) {
  auto& s = r.summary;
  std::size_t n = 0;
  for (const auto& m : r.steps) {
    if (m.epoch != last_epoch) continue;
    ++n;
    for (Modality mod : kModalities) {
      s.mean_abs_rho_dev += std::abs(m.rho[mod] - 1.0);
      s.mean_abs_sigma_dev += std::abs(m.sigma[mod] - 1.0);
      s.conflict_rate[mod] += m.conflict[mod] ? 1.0 : 0.0;
    }
  }
  if (n == 0) return;
  s.mean_abs_rho_dev /= 2.0 * static_cast<double>(n);
  s.mean_abs_sigma_dev /= 2.0 * static_cast<double>(n);
  for (Modality mod : kModalities) s.conflict_rate[mod] /= static_cast<double>(n);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const synth::Splits& splits) {
  cfg.validate();
  RunResult r;
  ParamSet params = init_model(cfg.model());
  Trainer trainer(cfg.train);
  std::mt19937_64 shuffle_rng(cfg.train.seed);

  r.epochs.push_back(evaluate_epoch(params, splits, 0));
  r.best_params = params.clone();
  const std::size_t n = splits.train.size();
  std::vector<std::size_t> order(n);
  for (int epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t begin = 0; begin < n; begin += cfg.train.batch_size) {
      const std::size_t end = std::min(n, begin + cfg.train.batch_size);
      const auto batch = splits.train.select(std::span(order).subspan(begin, end - begin));
      r.steps.push_back(trainer.step(params, batch, epoch));
    }
    r.epochs.push_back(evaluate_epoch(params, splits, epoch));
    if (r.epochs.back().source_val_acc > r.epochs[static_cast<std::size_t>(r.summary.best_epoch)].source_val_acc) {
      r.summary.best_epoch = epoch;
      r.best_params = params.clone();
    }
  }

  const auto& best = r.epochs[static_cast<std::size_t>(r.summary.best_epoch)];
  r.summary.strategy = cfg.train.strategy;
  r.summary.seed = cfg.train.seed;
  r.summary.source_val_acc = best.source_val_acc;
  r.summary.target_acc = best.target_acc;
  r.summary.branch_acc_v = best.branch_acc_v;
  r.summary.branch_acc_a = best.branch_acc_a;
  r.summary.steps = trainer.steps_taken();
  r.summary.dataset_hash = synth::hash_splits(splits);
  summarize_last_epoch(r, cfg.train.epochs);
  return r;
}

RunResult run_experiment(const ExperimentConfig& cfg) { return run_experiment(cfg, make_splits(cfg)); }

std::pair<double, double> mean_and_se(std::span<const double> xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

const AblationStats& AblationResult::stats_for(Strategy s) const {
  for (const auto& st : stats) {
    if (st.strategy == s) return st;
  }
  throw LookupError("no ablation results for strategy '" + std::string(to_string(s)) + "'");
}

AblationResult run_ablation(const ExperimentConfig& cfg, std::span<const Strategy> strategies,
                            const ProgressFn& progress) {
  cfg.validate();
  AblationResult result;
  for (std::uint64_t seed : cfg.run_seeds()) {
    ExperimentConfig seeded = cfg;
    seeded.apply_seed(seed);
    const auto splits = make_splits(seeded);
    for (Strategy s : strategies) {
      ExperimentConfig run_cfg = seeded;
      run_cfg.train.strategy = s;
      AblationRow row;
      row.summary.strategy = s;
      row.summary.seed = seed;
      row.summary.dataset_hash = synth::hash_splits(splits);
      try {
        row.summary = run_experiment(run_cfg, splits).summary;
      } catch (const NumericError& err) {
        row.status = std::string("numeric error: ") + err.what();
      }
      if (progress) {
        progress("seed " + std::to_string(seed) + " " + std::string(to_string(s)) + ": " +
                 (row.status == "ok" ? "target_acc " + format_double(row.summary.target_acc) : row.status));
      }
      result.rows.push_back(std::move(row));
    }
  }

  for (Strategy s : strategies) {
    std::vector<double> val, target, bv, ba, rho, sigma;
    for (const auto& row : result.rows) {
      if (row.summary.strategy != s || row.status != "ok") continue;
      val.push_back(row.summary.source_val_acc);
      target.push_back(row.summary.target_acc);
      bv.push_back(row.summary.branch_acc_v);
      ba.push_back(row.summary.branch_acc_a);
      rho.push_back(row.summary.mean_abs_rho_dev);
      sigma.push_back(row.summary.mean_abs_sigma_dev);
    }
    AblationStats st;
    st.strategy = s;
    st.runs = static_cast<int>(val.size());
    std::tie(st.source_val_mean, st.source_val_se) = mean_and_se(val);
    std::tie(st.target_mean, st.target_se) = mean_and_se(target);
    st.branch_v_mean = mean_and_se(bv).first;
    st.branch_a_mean = mean_and_se(ba).first;
    st.rho_dev_mean = mean_and_se(rho).first;
    st.sigma_dev_mean = mean_and_se(sigma).first;
    result.stats.push_back(st);
  }
  return result;
}

void write_ablation_runs_csv(std::ostream& out, const AblationResult& result) {
  out << "# gmp-ablation-runs v1\n"
      << "seed,strategy,status,best_epoch,source_val_acc,target_acc,branch_acc_v,branch_acc_a,"
         "mean_abs_rho_dev,mean_abs_sigma_dev,conflict_rate_v,conflict_rate_a,dataset_hash\n";
  for (const auto& row : result.rows) {
    const auto& s = row.summary;
    std::string status = row.status;
    std::replace(status.begin(), status.end(), ',', ';');
    out << s.seed << ',' << to_string(s.strategy) << ',' << status << ',' << s.best_epoch << ','
        << format_double(s.source_val_acc) << ',' << format_double(s.target_acc) << ','
        << format_double(s.branch_acc_v) << ',' << format_double(s.branch_acc_a) << ','
        << format_double(s.mean_abs_rho_dev) << ',' << format_double(s.mean_abs_sigma_dev) << ','
        << format_double(s.conflict_rate.v) << ',' << format_double(s.conflict_rate.a) << ',' << s.dataset_hash
        << '\n';
  }
}

void write_ablation_summary_csv(std::ostream& out, const AblationResult& result) {
  out << "# gmp-ablation-summary v1\n"
      << "strategy,runs,source_val_mean,source_val_se,target_mean,target_se,branch_acc_v_mean,branch_acc_a_mean,"
         "mean_abs_rho_dev,mean_abs_sigma_dev\n";
  for (const auto& st : result.stats) {
    out << to_string(st.strategy) << ',' << st.runs << ',' << format_double(st.source_val_mean) << ','
        << format_double(st.source_val_se) << ',' << format_double(st.target_mean) << ','
        << format_double(st.target_se) << ',' << format_double(st.branch_v_mean) << ','
        << format_double(st.branch_a_mean) << ',' << format_double(st.rho_dev_mean) << ','
        << format_double(st.sigma_dev_mean) << '\n';
  }
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "alpha_k") return SweepAxis::AlphaK;
  if (name == "alpha_p") return SweepAxis::AlphaP;
  if (name == "lambda") return SweepAxis::Lambda;
  throw ConfigError("unknown sweep axis '" + std::string(name) + "' (expected alpha_k, alpha_p or lambda)");
}

std::string_view to_string(SweepAxis axis) noexcept {
  switch (axis) {
    case SweepAxis::AlphaK: return "alpha_k";
    case SweepAxis::AlphaP: return "alpha_p";
    case SweepAxis::Lambda: return "lambda";
  }
  return "?";
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, SweepAxis axis, std::span<const double> values,
                                const ProgressFn& progress) {
  if (values.empty()) throw ConfigError("sweep: empty value list");
  cfg.validate();
  const auto splits = make_splits(cfg);
  std::vector<SweepRow> rows;
  for (double v : values) {
    ExperimentConfig run_cfg = cfg;
    switch (axis) {
      case SweepAxis::AlphaK: run_cfg.train.alpha_k = v; break;
      case SweepAxis::AlphaP: run_cfg.train.alpha_p = v; break;
      case SweepAxis::Lambda: run_cfg.train.lambda = v; break;
    }
    run_cfg.validate();
    rows.push_back(SweepRow{v, run_experiment(run_cfg, splits).summary});
    if (progress) progress(std::string(to_string(axis)) + "=" + format_double(v) + ": target_acc " +
                           format_double(rows.back().summary.target_acc));
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, SweepAxis axis, std::span<const SweepRow> rows) {
  out << "# gmp-sweep v1\n" << to_string(axis) << ",source_val_acc,target_acc\n";
  for (const auto& r : rows) {
    out << format_double(r.value) << ',' << format_double(r.summary.source_val_acc) << ','
        << format_double(r.summary.target_acc) << '\n';
  }
}

std::string manifest_json(const ExperimentConfig& cfg, const RunArtifacts& artifacts, const RunSummary& summary,
                          double wall_seconds) {
  using nlohmann::ordered_json;
  const auto model = cfg.model();
  ordered_json j;
  j["format"] = "gmp-manifest v1";
  j["config_text"] = to_config_text(cfg);
  j["config"] = {
      {"data",
       {{"num_classes", cfg.data.num_classes},
        {"num_domains", cfg.data.num_domains},
        {"samples_per_class_per_domain", cfg.data.samples_per_class_per_domain},
        {"dim_v", cfg.data.dim_v},
        {"dim_a", cfg.data.dim_a},
        {"discrim_strength", {{"v", cfg.data.discrim_strength.v}, {"a", cfg.data.discrim_strength.a}}},
        {"domain_leak", {{"v", cfg.data.domain_leak.v}, {"a", cfg.data.domain_leak.a}}},
        {"noise_std", {{"v", cfg.data.noise_std.v}, {"a", cfg.data.noise_std.a}}},
        {"seed", cfg.data.seed}}},
      {"model",
       {{"input_dim_v", model.input_dim_v},
        {"input_dim_a", model.input_dim_a},
        {"encoder_hidden", model.encoder_hidden},
        {"feature_dim", model.feature_dim},
        {"num_classes", model.num_classes},
        {"num_domains", model.num_domains},
        {"seed", model.seed}}},
      {"train",
       {{"strategy", std::string(to_string(cfg.train.strategy))},
        {"lambda", cfg.train.lambda},
        {"eta", cfg.train.eta},
        {"alpha_k", cfg.train.alpha_k},
        {"alpha_p", cfg.train.alpha_p},
        {"epochs", cfg.train.epochs},
        {"batch_size", cfg.train.batch_size},
        {"seed", cfg.train.seed}}},
      {"split", {{"target_domain", cfg.target_domain}, {"val_fraction", cfg.val_fraction}}}};
  j["artifacts"] = {{"config", artifacts.config.string()},
                    {"metrics", artifacts.metrics.string()},
                    {"eval", artifacts.eval.string()},
                    {"checkpoint", artifacts.checkpoint.string()}};
  j["wall_seconds"] = wall_seconds;
  j["summary"] = {{"strategy", std::string(to_string(summary.strategy))},
                  {"seed", summary.seed},
                  {"best_epoch", summary.best_epoch},
                  {"source_val_acc", summary.source_val_acc},
                  {"target_acc", summary.target_acc},
                  {"branch_acc_v", summary.branch_acc_v},
                  {"branch_acc_a", summary.branch_acc_a},
                  {"mean_abs_rho_dev", summary.mean_abs_rho_dev},
                  {"mean_abs_sigma_dev", summary.mean_abs_sigma_dev},
                  {"conflict_rate_v", summary.conflict_rate.v},
                  {"conflict_rate_a", summary.conflict_rate.a},
                  {"steps", summary.steps},
                  {"dataset_hash", summary.dataset_hash}};
  return j.dump(2) + "\n";
}

RunArtifacts write_run_artifacts(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                                 const RunResult& result, double wall_seconds) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  RunArtifacts a{dir / "config.ini", dir / "metrics.csv", dir / "eval.csv", dir / "checkpoint.gmpc",
                 dir / "manifest.json"};
  auto write_text = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw IoError("cannot write '" + path.string() + "'");
  };
  write_text(a.config, to_config_text(cfg));
  metrics::write_metrics_csv(a.metrics, result.steps);
  metrics::write_eval_csv(a.eval, result.epochs);
  save_checkpoint(result.best_params, a.checkpoint);
  write_text(a.manifest, manifest_json(cfg, a, result.summary, wall_seconds));
  return a;
}

}  // namespace gmp

// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero on any failure.
//
//   acceptance [--out DIR] [--only N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fd_oracle.hpp"
#include "gmp/cagp.hpp"
#include "gmp/config.hpp"
#include "gmp/experiment.hpp"
#include "gmp/grad_check.hpp"
#include "gmp/igdm.hpp"
#include "gmp/model.hpp"
#include "gmp/param_set.hpp"
#include "gmp/synthdata.hpp"
#include "gmp/trainer.hpp"
#include "gmp/vec_math.hpp"

namespace fs = std::filesystem;
using namespace gmp;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path g_out;

ExperimentConfig benchmark_config() { return load_config(fs::path(GMP_SOURCE_DIR) / "configs" / "asym-v.ini"); }

// ---------------------------------------------------------------------------

Verdict gradient_correctness() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = gradcheck::run(gradcheck::GradCheckConfig{});
  const double secs = seconds_since(t0);
  v.require(report.passed, "some block above tolerance");
  v.require(report.max_rel_error < 1e-4, "max rel error " + fmt("%.3g", report.max_rel_error));
  v.require(secs < 30.0, "took " + fmt("%.1f", secs) + " s");
  v.detail = std::to_string(report.blocks.size()) + " blocks, max rel error " + fmt("%.2e", report.max_rel_error) +
             ", " + fmt("%.2f", secs) + " s" + (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

Verdict formula_suite() {
  Verdict v;
  std::mt19937_64 rng(606);

  // Uniform logits give uniform confidences.
  for (int width : {2, 4, 6, 11}) {
    const std::size_t n = 7;
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng() % static_cast<std::uint64_t>(width));
    const auto zero = ad::Tensor::zeros({n, static_cast<std::size_t>(width)});
    for (double q : igdm::semantic_confidence(zero, labels)) {
      v.require(std::abs(q - 1.0 / width) < 1e-15, "uniform semantic confidence");
    }
    for (double c : igdm::domain_confidence(zero, labels)) {
      v.require(std::abs(c - 1.0 / width) < 1e-15, "uniform domain confidence");
    }
  }

  // Reciprocity on 1000 random batches of real model outputs.
  ModelConfig mc;
  mc.input_dim_v = 12;
  mc.input_dim_a = 10;
  mc.encoder_hidden = 16;
  mc.feature_dim = 8;
  mc.num_classes = 4;
  mc.num_domains = 3;
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    mc.seed = static_cast<std::uint64_t>(t);
    const ParamSet ps = init_model(mc);
    const std::size_t n = 1 + rng() % 32;
    MultimodalBatch b;
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::vector<double> xv(n * mc.input_dim_v), xa(n * mc.input_dim_a);
    for (auto& x : xv) x = u(rng);
    for (auto& x : xa) x = u(rng);
    b.x_v = ad::Tensor::matrix(n, mc.input_dim_v, xv);
    b.x_a = ad::Tensor::matrix(n, mc.input_dim_a, xa);
    for (std::size_t i = 0; i < n; ++i) {
      b.y.push_back(static_cast<int>(rng() % 4));
      b.d.push_back(static_cast<int>(rng() % 3));
    }
    const auto s = confidence_stats(forward(ps, b), b);
    worst = std::max({worst, std::abs(s.rho.v * s.rho.a - 1.0), std::abs(s.sigma.v * s.sigma.a - 1.0)});
  }
  v.require(worst <= 1e-9, "reciprocity error " + fmt("%.3g", worst));

  // Coefficient against 25-digit oracles of 1 - tanh(x).
  struct Oracle {
    double ratio, alpha, expected;
  };
  const Oracle oracles[] = {
      {2.0, 0.5, 0.2384058440442351118805417},  // alpha * ratio = 1
      {2.0, 0.3, 0.4629504330019647141381747},  // alpha * ratio = 0.6
  };
  double oracle_err = 0.0;
  for (const auto& o : oracles) {
    oracle_err = std::max(oracle_err, std::abs(igdm::suppression_coefficient(o.ratio, o.alpha) - o.expected));
  }
  v.require(oracle_err <= 1e-12, "oracle error " + fmt("%.3g", oracle_err));
  v.require(igdm::suppression_coefficient(1.0, 0.3) == 1.0 && igdm::suppression_coefficient(0.2, 0.3) == 1.0,
            "coefficient not 1 at ratio <= 1");

  // Bounds over a wide log-range of ratios and alphas.
  std::uniform_real_distribution<double> lr(-8.0, 8.0), la(-4.0, 3.0);
  for (int t = 0; t < 100000; ++t) {
    const double k = igdm::suppression_coefficient(std::exp(lr(rng)), std::exp(la(rng)));
    if (!(k > 0.0 && k <= 1.0)) {
      v.require(false, "coefficient outside (0,1]");
      break;
    }
  }
  for (double r : {1e3, 1e6, 1e300}) {
    const double k = igdm::suppression_coefficient(r, 5.0);
    v.require(k > 0.0 && k <= 1.0, "extreme ratio coefficient");
  }
  v.detail = "max reciprocity error " + fmt("%.2e", worst) + ", oracle error " + fmt("%.2e", oracle_err) +
             (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

Verdict projection_suite() {
  Verdict v;
  std::mt19937_64 rng(1515);
  std::uniform_int_distribution<std::size_t> dim(2, 512);
  std::uniform_real_distribution<double> log_gamma(-3.0, 3.0);
  int conflicted = 0, noop = 0;
  double worst_orth = 0.0;
  while (conflicted < 10000) {
    const std::size_t n = dim(rng);
    const auto gc = testing::gaussian_vector(rng, n);
    const auto gd = testing::gaussian_vector(rng, n);
    const double gamma = std::exp(log_gamma(rng));
    const auto out = cagp::apply_cagp(gc, gd, gamma);
    if (!cagp::detect_conflict(gc, gd)) {
      ++noop;
      bool exact = out.classification == gc && out.domain == gd && !out.conflict;
      for (std::size_t i = 0; exact && i < n; ++i) exact = out.total[i] == gc[i] + gd[i];
      v.require(exact, "no-conflict pair modified");
      continue;
    }
    ++conflicted;
    const bool cls = gamma > 1.0;
    const auto& projected = cls ? out.classification : out.domain;
    const auto& original = cls ? gc : gd;
    const auto& weak_in = cls ? gd : gc;
    const auto& weak_out = cls ? out.domain : out.classification;
    const double orth = std::abs(vec::dot(projected, weak_in)) / (vec::norm(projected) * vec::norm(weak_in));
    worst_orth = std::max(worst_orth, orth);
    if (!(orth <= 1e-9)) v.require(false, "orthogonality");
    if (!(vec::norm(projected) <= vec::norm(original))) v.require(false, "norm increased");
    if (weak_out != weak_in) v.require(false, "weaker gradient changed");
    for (std::size_t i = 0; i < n; ++i) {
      if (out.total[i] != out.classification[i] + out.domain[i]) {
        v.require(false, "total is not the sum of the parts");
        break;
      }
    }
  }
  // Tie: conflicting but equally strong, nothing is projected.
  const std::vector<double> a{1.0, 0.0}, b{-1.0, 1.0};
  const auto tie = cagp::apply_cagp(a, b, 1.0);
  v.require(tie.conflict && tie.projected_task == cagp::ProjectedTask::None && tie.classification == a &&
                tie.domain == b,
            "tie branch");
  v.detail = std::to_string(conflicted) + " conflicted pairs (" + std::to_string(noop) +
             " no-conflict), worst normalised dot " + fmt("%.2e", worst_orth) + (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

Verdict first_order_identity() {
  Verdict v;
  // A live step on the benchmark data after a short warm-up.
  auto cfg = benchmark_config();
  cfg.apply_seed(0);
  const auto splits = make_splits(cfg);
  ParamSet ps = init_model(cfg.model());
  TrainConfig warm = cfg.train;
  warm.track_loss_change = false;
  Trainer warmup(warm);
  std::vector<std::size_t> rows(cfg.train.batch_size);
  for (int t = 0; t < 20; ++t) {
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = (t * rows.size() + i * 7) % splits.train.size();
    warmup.step(ps, splits.train.select(rows));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i * 11 % splits.train.size();
  const auto batch = splits.train.select(rows);

  std::ostringstream detail;
  for (Strategy s : {Strategy::Base, Strategy::Gmp}) {
    std::vector<double> errors;
    for (double eta : {1e-2, 1e-3, 1e-4}) {
      ParamSet trial = ps.clone();
      TrainConfig tc = cfg.train;
      tc.strategy = s;
      tc.eta = eta;
      tc.track_loss_change = true;
      const auto m = Trainer(tc).step(trial, batch);
      errors.push_back(std::abs(m.pred_dL - m.actual_dL));
    }
    detail << to_string(s) << " ratios";
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
      const double ratio = errors[i] / errors[i + 1];
      detail << ' ' << fmt("%.1f", ratio);
      v.require(ratio >= 20.0 && ratio <= 500.0, std::string(to_string(s)) + " ratio " + fmt("%.1f", ratio));
    }
    if (s == Strategy::Base) detail << "; ";
  }
  v.detail = detail.str() + (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

// Criteria 5 and 6 share one multi-seed ablation.
const AblationResult& benchmark_ablation() {
  static const AblationResult result = [] {
    const auto cfg = benchmark_config();
    const std::vector<Strategy> strategies{Strategy::Base,          Strategy::Gmp,         Strategy::IgdmOnly,
                                           Strategy::CagpOnly,      Strategy::UnifiedModulation,
                                           Strategy::ReverseCagp,   Strategy::FixedProjClass,
                                           Strategy::FixedProjDomain};
    auto r = run_ablation(cfg, strategies, [](const std::string& msg) { std::cerr << "  " << msg << '\n'; });
    std::ofstream runs(g_out / "benchmark_runs.csv");
    write_ablation_runs_csv(runs, r);
    std::ofstream summary(g_out / "benchmark_summary.csv");
    write_ablation_summary_csv(summary, r);
    return r;
  }();
  return result;
}

double max_run_seconds = 0.0;

Verdict benchmark_trends() {
  Verdict v;
  // Time one gmp run on its own for the per-run budget.
  {
    auto cfg = benchmark_config();
    cfg.apply_seed(0);
    const auto t0 = std::chrono::steady_clock::now();
    run_experiment(cfg);
    max_run_seconds = seconds_since(t0);
  }
  const auto& r = benchmark_ablation();
  for (const auto& row : r.rows) v.require(row.status == "ok", "run failed: " + row.status);
  const auto& base = r.stats_for(Strategy::Base);
  const auto& gmp = r.stats_for(Strategy::Gmp);
  v.require(base.runs == 5 && gmp.runs == 5, "expected 5 seeds");
  v.require(max_run_seconds < 300.0, "run took " + fmt("%.0f", max_run_seconds) + " s");
  v.require(gmp.target_mean > base.target_mean, "(a) target");
  v.require(gmp.source_val_mean >= base.source_val_mean - 0.005, "(b) source val");
  v.require(gmp.rho_dev_mean < base.rho_dev_mean, "(c) rho deviation");
  v.require(gmp.sigma_dev_mean < base.sigma_dev_mean, "(c) sigma deviation");
  v.require(gmp.branch_v_mean >= base.branch_v_mean, "(d) video branch");
  v.require(gmp.branch_a_mean >= base.branch_a_mean, "(d) audio branch");
  std::ostringstream d;
  d << "gmp/base target " << fmt("%.4f", gmp.target_mean) << '/' << fmt("%.4f", base.target_mean) << ", source "
    << fmt("%.4f", gmp.source_val_mean) << '/' << fmt("%.4f", base.source_val_mean) << ", |rho-1| "
    << fmt("%.3f", gmp.rho_dev_mean) << '/' << fmt("%.3f", base.rho_dev_mean) << ", |sigma-1| "
    << fmt("%.3f", gmp.sigma_dev_mean) << '/' << fmt("%.3f", base.sigma_dev_mean) << ", branch v "
    << fmt("%.4f", gmp.branch_v_mean) << '/' << fmt("%.4f", base.branch_v_mean) << ", branch a "
    << fmt("%.4f", gmp.branch_a_mean) << '/' << fmt("%.4f", base.branch_a_mean) << ", run " << fmt("%.1f", max_run_seconds)
    << " s";
  v.detail = d.str() + (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

Verdict ablation_ordering() {
  Verdict v;
  const auto& r = benchmark_ablation();
  const auto& full = r.stats_for(Strategy::Gmp);
  std::ostringstream table;
  table << "strategy            target   se\n";
  std::ostringstream d;
  int ties = 0;
  for (Strategy s : {Strategy::Gmp, Strategy::IgdmOnly, Strategy::CagpOnly, Strategy::UnifiedModulation,
                     Strategy::ReverseCagp, Strategy::FixedProjClass, Strategy::FixedProjDomain}) {
    const auto& st = r.stats_for(s);
    char line[96];
    std::snprintf(line, sizeof line, "%-18s  %.4f  %.4f\n", std::string(to_string(s)).c_str(), st.target_mean,
                  st.target_se);
    table << line;
    if (s == Strategy::Gmp) continue;
    const double tol = std::max(full.target_se, st.target_se);
    v.require(st.runs == 5, std::string(to_string(s)) + " missing runs");
    v.require(full.target_mean >= st.target_mean - tol, std::string(to_string(s)) + " beats full");
    if (st.target_mean > full.target_mean && st.target_mean - tol <= full.target_mean) {
      d << (ties++ ? ", " : "") << to_string(s);
    }
  }
  std::ofstream(g_out / "ablation_table.txt") << table.str();
  std::cout << table.str();
  const std::string tied = ties == 0 ? "full is highest" : "ahead of full within one SE: " + d.str();
  v.detail = tied + "; table in " + (g_out / "benchmark_summary.csv").string() + (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict determinism_and_persistence() {
  Verdict v;
  auto cfg = benchmark_config();
  cfg.apply_seed(4);
  cfg.train.epochs = 2;
  const auto a = write_run_artifacts(g_out / "det_a", cfg, run_experiment(cfg), 0.0);
  const auto b = write_run_artifacts(g_out / "det_b", cfg, run_experiment(cfg), 0.0);
  v.require(!slurp(a.metrics).empty() && slurp(a.metrics) == slurp(b.metrics), "metrics CSV differs");
  v.require(slurp(a.eval) == slurp(b.eval), "eval CSV differs");

  const ParamSet saved = load_checkpoint(a.checkpoint);
  save_checkpoint(saved, g_out / "resaved.gmpc");
  v.require(load_checkpoint(g_out / "resaved.gmpc").bitwise_equal(saved), "checkpoint round trip");
  v.require(slurp(a.checkpoint) == slurp(g_out / "resaved.gmpc"), "checkpoint bytes differ");

  const auto splits = make_splits(cfg);
  synth::write_csv(splits.train, g_out / "train.csv");
  const auto back = synth::read_csv(g_out / "train.csv");
  v.require(synth::hash_batch(back) == synth::hash_batch(splits.train) && back.y == splits.train.y &&
                back.d == splits.train.d && std::ranges::equal(back.x_v.data(), splits.train.x_v.data()) &&
                std::ranges::equal(back.x_a.data(), splits.train.x_a.data()),
            "dataset CSV round trip");
  v.detail = "metrics " + std::to_string(slurp(a.metrics).size()) + " bytes identical, checkpoint and " +
             std::to_string(splits.train.size()) + "-row dataset round trips exact" +
             (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  g_out = fs::current_path() / "acceptance_out";
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) {
      g_out = argv[++i];
    } else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--out DIR] [--only N]\n";
      return 2;
    }
  }
  fs::create_directories(g_out);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"confidence, ratio and coefficient formulas", formula_suite},
      {"conflict-adaptive projection", projection_suite},
      {"first-order loss-change identity", first_order_identity},
      {"asym-v benchmark trends", benchmark_trends},
      {"ablation ordering", ablation_ordering},
      {"determinism and persistence", determinism_and_persistence},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i + 1) != only) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failures += !v.pass;
    std::cout << "criterion " << i + 1 << ": " << (v.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << "  ["
              << v.detail << "]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}

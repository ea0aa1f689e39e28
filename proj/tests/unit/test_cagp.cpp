#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fd_oracle.hpp"
#include "gmp/cagp.hpp"
#include "gmp/trainer.hpp"
#include "gmp/vec_math.hpp"

using namespace gmp;
using namespace gmp::cagp;

using V = std::vector<double>;

TEST(DetectConflict, Examples) {
  EXPECT_FALSE(detect_conflict(V{1, 0}, V{0, 1}));
  EXPECT_TRUE(detect_conflict(V{1, 0}, V{-1, 1}));
  EXPECT_FALSE(detect_conflict(V{1, 1}, V{2, 3}));
  EXPECT_THROW(detect_conflict(V{1}, V{1, 2}), ShapeError);
}

TEST(TaskStrength, RatioOfRatios) {
  igdm::ConfidenceStats s;
  s.rho = {2.0, 0.5};
  s.sigma = {0.5, 2.0};
  EXPECT_EQ(task_strength(s, Modality::Video), 4.0);
  EXPECT_EQ(task_strength(s, Modality::Audio), 0.25);
  s.rho = {1.7, 1 / 1.7};
  s.sigma = {1.7, 1 / 1.7};
  EXPECT_EQ(task_strength(s, Modality::Video), 1.0);
}

TEST(ProjectOrthogonal, Examples) {
  const auto p = project_orthogonal(V{1, 0}, V{-1, 1});
  EXPECT_EQ(p, (V{0.5, 0.5}));
  EXPECT_EQ(vec::dot(p, V{-1, 1}), 0.0);
  EXPECT_EQ(project_orthogonal(V{-2, -4}, V{1, 2}), (V{0, 0}));
  EXPECT_EQ(project_orthogonal(V{3, 0}, V{0, 5}), (V{3, 0}));
}

TEST(ProjectOrthogonal, DegenerateWeakVectorIsANoOp) {
  EXPECT_EQ(project_orthogonal(V{1, 2}, V{0, 0}), (V{1, 2}));
}

TEST(ProjectOrthogonal, Idempotent) {
  std::mt19937_64 rng(1);
  const auto a = gmp::testing::gaussian_vector(rng, 37);
  const auto b = gmp::testing::gaussian_vector(rng, 37);
  const auto once = project_orthogonal(a, b);
  const auto twice = project_orthogonal(once, b);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(once[i], twice[i], 1e-14);
}

TEST(ApplyCagp, ClassificationStronger) {
  const auto out = apply_cagp(V{1, 0}, V{-1, 1}, 4.0);
  EXPECT_TRUE(out.conflict);
  EXPECT_EQ(out.projected_task, ProjectedTask::Classification);
  EXPECT_EQ(out.classification, (V{0.5, 0.5}));
  EXPECT_EQ(out.domain, (V{-1, 1}));
  EXPECT_EQ(out.total, (V{-0.5, 1.5}));
}

TEST(ApplyCagp, DomainStronger) {
  const auto out = apply_cagp(V{1, 0}, V{-1, 1}, 0.25);
  EXPECT_EQ(out.projected_task, ProjectedTask::Domain);
  EXPECT_EQ(out.classification, (V{1, 0}));
  EXPECT_EQ(out.domain, (V{0, 1}));
  EXPECT_EQ(out.total, (V{1, 1}));
}

TEST(ApplyCagp, NoConflictIsPlainSum) {
  for (double gamma : {0.1, 1.0, 7.0}) {
    const auto out = apply_cagp(V{1, 1}, V{2, 3}, gamma);
    EXPECT_FALSE(out.conflict);
    EXPECT_EQ(out.projected_task, ProjectedTask::None);
    EXPECT_EQ(out.total, (V{3, 4}));
  }
}

TEST(ApplyCagp, TieDoesNotProject) {
  const auto out = apply_cagp(V{1, 0}, V{-1, 1}, 1.0);
  EXPECT_TRUE(out.conflict);
  EXPECT_EQ(out.projected_task, ProjectedTask::None);
  EXPECT_EQ(out.total, (V{0, 1}));
}

TEST(ApplyCagp, ScaleEquivariant) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    auto gc = gmp::testing::gaussian_vector(rng, 16);
    auto gd = gmp::testing::gaussian_vector(rng, 16);
    const double s = std::ldexp(1.0, static_cast<int>(rng() % 9) - 4);  // power of two: exact scaling
    const auto base = apply_cagp(gc, gd, 2.0);
    const auto scaled = apply_cagp(vec::scaled(gc, s), vec::scaled(gd, s), 2.0);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(scaled.total[i], s * base.total[i], 1e-12 * s);
  }
}

TEST(ApplyCagp, ProjectionImprovesFirstOrderPrediction) {
  std::mt19937_64 rng(8);
  int checked = 0;
  while (checked < 200) {
    const auto gc = gmp::testing::gaussian_vector(rng, 8);
    const auto gd = gmp::testing::gaussian_vector(rng, 8);
    if (!detect_conflict(gc, gd)) continue;
    ++checked;
    const double eta = 0.01;
    const auto out = apply_cagp(gc, gd, 3.0);
    const double projected = -eta * (vec::squared_norm(out.classification) + vec::squared_norm(out.domain));
    EXPECT_LE(projected, predicted_loss_change(gc, gd, eta));
  }
}

// Randomised sweep over conflicted pairs in dimensions 2..512.
TEST(ApplyCagp, RandomConflictedPairsProperties) {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<std::size_t> dim(2, 512);
  std::uniform_real_distribution<double> log_gamma(-3.0, 3.0);
  int trials = 0;
  while (trials < 10000) {
    const std::size_t n = dim(rng);
    const auto gc = gmp::testing::gaussian_vector(rng, n);
    const auto gd = gmp::testing::gaussian_vector(rng, n);
    if (!detect_conflict(gc, gd)) continue;
    ++trials;
    const double gamma = std::exp(log_gamma(rng));
    const auto out = apply_cagp(gc, gd, gamma);
    ASSERT_TRUE(out.conflict);
    const bool cls = gamma > 1.0;
    ASSERT_EQ(out.projected_task, cls ? ProjectedTask::Classification : ProjectedTask::Domain);
    const auto& projected = cls ? out.classification : out.domain;
    const auto& original = cls ? gc : gd;
    const auto& weak_in = cls ? gd : gc;
    const auto& weak_out = cls ? out.domain : out.classification;
    EXPECT_LE(std::abs(vec::dot(projected, weak_in)), 1e-9 * vec::norm(projected) * vec::norm(weak_in));
    EXPECT_LE(vec::norm(projected), vec::norm(original));
    EXPECT_EQ(weak_out, weak_in);
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(out.total[i], out.classification[i] + out.domain[i]);
  }
}

TEST(Combine, BothProjectsSymmetrically) {
  const auto out = combine(V{1, 0}, V{-1, 1}, 3.0, ProjectedTask::Both);
  EXPECT_EQ(out.classification, (V{0.5, 0.5}));
  EXPECT_EQ(out.domain, (V{0, 1}));
  EXPECT_EQ(out.total, (V{0.5, 1.5}));
  const auto swapped = combine(V{-1, 1}, V{1, 0}, 3.0, ProjectedTask::Both);
  EXPECT_EQ(swapped.classification, out.domain);
  EXPECT_EQ(swapped.domain, out.classification);
}

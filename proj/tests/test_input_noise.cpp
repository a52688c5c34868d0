#include "nngpiu/errors.hpp"
#include "nngpiu/input_noise.hpp"
#include "nngpiu/kernel.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

namespace nngpiu {
namespace {

NoiseSpec iso(double var, int m, std::uint64_t seed) {
  NoiseSpec s;
  s.sigma_u_sq = var;
  s.mc_samples = m;
  s.seed = seed;
  s.auto_escalate = false;
  s.max_mc_samples = std::max(s.max_mc_samples, m);
  return s;
}

KernelSpec rbf(double s2, double l) {
  KernelSpec k;
  k.family = KernelFamily::RBF;
  k.signal_var = s2;
  k.length_scale = l;
  return k;
}

KernelSpec arcsin2(int d = 1) {
  KernelSpec k;
  k.family = KernelFamily::ArcSine;
  k.depth = 2;
  k.input_dim = d;
  return k;
}

// Gaussian convolution of the RBF kernel with two independent N(0, v) shifts.
double rbf_convolution(double s2, double l, double v, double r) {
  const double w = l * l + 2.0 * v;
  return s2 * l / std::sqrt(w) * std::exp(-r * r / (2.0 * w));
}

Point pt(const std::vector<double>& v) { return {v.data(), v.size()}; }

TEST(DrawNoise, ZeroVarianceGivesZeroDraws) {
  const NoiseSample s = draw_noise(iso(0.0, 10, 1), 1);
  EXPECT_EQ(s.mc_samples(), 10);
  EXPECT_TRUE(s.draws.isZero(0.0));
}

TEST(DrawNoise, SameSeedSameDraws) {
  const auto a = draw_noise(iso(0.3, 50, 9), 3);
  const auto b = draw_noise(iso(0.3, 50, 9), 3);
  const auto c = draw_noise(iso(0.3, 50, 10), 3);
  EXPECT_EQ(a.draws, b.draws);
  EXPECT_NE(a.draws, c.draws);
}

TEST(DrawNoise, SampleVarianceMatches) {
  const auto s = draw_noise(iso(0.1, 10000, 4), 1);
  const double mean = s.draws.mean();
  const double var = (s.draws.array() - mean).square().sum() / (s.draws.size() - 1);
  EXPECT_GE(var, 0.095);
  EXPECT_LE(var, 0.105);
}

TEST(DrawNoise, DiagonalVariancesAndScaling) {
  NoiseSpec s;
  s.distribution = NoiseDistribution::GaussianDiagonal;
  s.variances = {0.01, 4.0};
  s.mc_samples = 20000;
  s.max_mc_samples = 20000;
  s.seed = 5;
  const std::vector<double> scales{0.1, 2.0};
  const auto d = draw_noise(s, 2, scales);  // both columns become unit variance
  for (int c = 0; c < 2; ++c) {
    const double var = d.draws.col(c).squaredNorm() / d.draws.rows();
    EXPECT_NEAR(var, 1.0, 0.05);
  }
}

TEST(DrawNoise, CustomSampler) {
  NoiseSpec s;
  s.distribution = NoiseDistribution::Custom;
  s.mc_samples = 4;
  s.sampler = [](std::uint64_t seed, PointSet& draws) { draws.setConstant(static_cast<double>(seed)); };
  s.seed = 3;
  const auto d = draw_noise(s, 2);
  EXPECT_EQ(d.draws.rows(), 4);
  EXPECT_TRUE((d.draws.array() == 3.0).all());
}

TEST(NoiseSpec, Validation) {
  NoiseSpec s = iso(-1.0, 10, 0);
  EXPECT_THROW(s.validate(1), ConfigError);
  s = iso(0.1, 0, 0);
  EXPECT_THROW(s.validate(1), ConfigError);
  s.distribution = NoiseDistribution::GaussianDiagonal;
  s.mc_samples = 10;
  s.variances = {0.1};
  EXPECT_THROW(s.validate(2), ConfigError);
}

TEST(CheckCv, ZeroNoiseIsZero) {
  const std::vector<ProbePair> probes{{{0.2}, {0.9}}};
  EXPECT_NEAR(check_cv(iso(0.0, 30, 1), arcsin2(), probes), 0.0, 1e-12);
}

TEST(CheckCv, DecreasesWithSampleSize) {
  const std::vector<ProbePair> probes{{{0.2}, {0.9}}, {{-1.0}, {0.5}}};
  double previous = 1e300;
  for (int m : {30, 60, 120, 240}) {
    double mean = 0.0;
    for (std::uint64_t t = 0; t < 20; ++t) mean += check_cv(iso(0.5, m, 100 + t), rbf(1, 0.5), probes);
    mean /= 20;
    EXPECT_LT(mean, previous) << "m = " << m;
    previous = mean;
  }
}

TEST(CheckCv, LargeSampleMeetsTarget) {
  const std::vector<ProbePair> probes{{{0.2}, {0.9}}};
  EXPECT_LT(check_cv(iso(0.1, 2000, 2), arcsin2(), probes), 0.025);
}

TEST(CheckCv, EscalationDoublesUntilTargetOrGuard) {
  const std::vector<ProbePair> probes{{{0.2}, {0.9}}};
  NoiseSpec s = iso(0.1, 30, 2);
  s.auto_escalate = true;
  s.max_mc_samples = 480;
  const auto sample = draw_noise_with_cv_rule(s, rbf(1, 0.3), probes);
  const int m = sample.mc_samples();
  EXPECT_TRUE(m == 30 || m == 60 || m == 120 || m == 240 || m == 480);
  EXPECT_TRUE(sample.cv_estimate <= 0.025 || m == 480);
}

TEST(AdjustedCov, ZeroDrawsCollapseToKernel) {
  const NoiseSample zero = draw_noise(iso(0.0, 7, 1), 1);
  const std::vector<double> x{0.3}, y{-1.1};
  for (const auto& k : {arcsin2(), rbf(1.2, 0.7)}) {
    const double c = kernel_value(pt(x), pt(y), k);
    EXPECT_DOUBLE_EQ(adjusted_cov(pt(x), pt(y), AdjustCase::TrainTrain, k, zero), c);
    EXPECT_DOUBLE_EQ(adjusted_cov(pt(x), pt(y), AdjustCase::TestTrain, k, zero), c);
    EXPECT_DOUBLE_EQ(adjusted_cov(pt(x), pt(x), AdjustCase::Diagonal, k, zero), kernel_value(pt(x), pt(x), k));
    EXPECT_DOUBLE_EQ(adjusted_cov(pt(x), pt(x), AdjustCase::TestTrain, k, zero), kernel_value(pt(x), pt(x), k));
  }
}

TEST(AdjustedCov, DefinitionalSums) {
  const NoiseSample s = draw_noise(iso(0.2, 6, 3), 1);
  const std::vector<double> x{0.3}, y{-1.1};
  const auto k = arcsin2();
  double tt = 0.0, diag = 0.0, test = 0.0;
  for (int i = 0; i < 6; ++i) {
    const std::vector<double> xi{x[0] + s.draws(i, 0)};
    diag += kernel_value(pt(xi), pt(xi), k) / 6;
    test += kernel_value(pt(xi), pt(y), k) / 6;
    for (int j = 0; j < 6; ++j) {
      const std::vector<double> yj{y[0] + s.draws(j, 0)};
      tt += kernel_value(pt(xi), pt(yj), k) / 36;
    }
  }
  EXPECT_NEAR(adjusted_cov(pt(x), pt(y), AdjustCase::TrainTrain, k, s), tt, 1e-12);
  EXPECT_NEAR(adjusted_cov(pt(x), pt(x), AdjustCase::Diagonal, k, s), diag, 1e-12);
  EXPECT_NEAR(adjusted_cov(pt(x), pt(y), AdjustCase::TestTrain, k, s), test, 1e-12);
}

TEST(AdjustedCov, RbfConvolutionOracle) {
  const double v = 0.1, l = 1.0, s2 = 1.0;
  const std::vector<double> x{0.3}, y{-0.4};
  const double oracle = rbf_convolution(s2, l, v, 0.7);
  // Standard error from independent replicates at a smaller m, scaled by 1/sqrt(m).
  std::vector<double> reps;
  for (std::uint64_t r = 0; r < 20; ++r) {
    reps.push_back(adjusted_cov(pt(x), pt(y), AdjustCase::TrainTrain, rbf(s2, l), draw_noise(iso(v, 2000, 50 + r), 1)));
  }
  double mean = 0.0;
  for (double e : reps) mean += e;
  mean /= reps.size();
  double var = 0.0;
  for (double e : reps) var += (e - mean) * (e - mean);
  const double se_2000 = std::sqrt(var / (reps.size() - 1));
  const double se = se_2000 * std::sqrt(2000.0 / 20000.0);
  const double est = adjusted_cov(pt(x), pt(y), AdjustCase::TrainTrain, rbf(s2, l), draw_noise(iso(v, 20000, 7), 1));
  EXPECT_LE(std::abs(est - oracle), 3.0 * se) << "est " << est << " oracle " << oracle << " se " << se;
}

TEST(AdjustedGram, ZeroNoiseEqualsGram) {
  PointSet X(5, 2);
  X << 0.1, 0.2, -1.0, 0.5, 3.0, 1.0, 0.0, 0.0, 1.5, -2.0;
  const auto k = arcsin2(2);
  const auto zero = draw_noise(iso(0.0, 5, 1), 2);
  EXPECT_TRUE(adjusted_gram(X, k, zero).values.isApprox(gram(X, k).values, 1e-14));
  EXPECT_TRUE(adjusted_gram(X, X, k, zero).isApprox(gram(X, X, k), 1e-14));
}

TEST(AdjustedGram, EntriesMatchScalarPath) {
  PointSet X(4, 2), Xs(3, 2);
  X << 0.1, 0.2, -1.0, 0.5, 3.0, 1.0, 0.0, 0.0;
  Xs << 1.0, 1.0, -0.5, 0.2, 2.0, -1.0;
  const auto noise = draw_noise(iso(0.3, 15, 8), 2);
  for (auto fam : {KernelFamily::ArcSine, KernelFamily::ArcCosine, KernelFamily::RBF, KernelFamily::MaternHalf}) {
    KernelSpec k = arcsin2(2);
    k.family = fam;
    const Eigen::MatrixXd G = adjusted_gram(X, k, noise).values;
    const Eigen::MatrixXd C = adjusted_gram(X, Xs, k, noise);
    for (Eigen::Index i = 0; i < 4; ++i) {
      for (Eigen::Index j = 0; j < 4; ++j) {
        const auto which = i == j ? AdjustCase::Diagonal : AdjustCase::TrainTrain;
        EXPECT_NEAR(G(i, j), adjusted_cov(row_of(X, i), row_of(X, j), which, k, noise), 1e-12);
      }
      for (Eigen::Index j = 0; j < 3; ++j) {
        EXPECT_NEAR(C(i, j), adjusted_cov(row_of(X, i), row_of(Xs, j), AdjustCase::TestTrain, k, noise), 1e-12);
      }
    }
    GramAssembler assembler(X, noise, k.is_composite());
    EXPECT_TRUE(assembler.train(k).isApprox(G, 1e-13));
    EXPECT_TRUE(assembler.cross(Xs, k).isApprox(C, 1e-13));
  }
}

TEST(AdjustedGram, RbfMatchesClosedFormWithinMcTolerance) {
  PointSet X(5, 1);
  X << -1.0, -0.3, 0.2, 0.9, 1.6;
  const double v = 0.1;
  const auto G = adjusted_gram(X, rbf(1, 1), draw_noise(iso(v, 4000, 11), 1)).values;
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j)
      if (i != j) {
        EXPECT_NEAR(G(i, j), rbf_convolution(1, 1, v, X(i, 0) - X(j, 0)), 0.02);
      }
}

TEST(AdjustedGram, SymmetricPsdAndDeterministic) {
  PointSet X(12, 1);
  for (int i = 0; i < 12; ++i) X(i, 0) = 0.3 * i - 1.5;
  const auto noise = draw_noise(iso(0.2, 30, 4), 1);
  const auto G = adjusted_gram(X, arcsin2(), noise).values;
  EXPECT_TRUE(G.isApprox(G.transpose(), 0.0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8 * es.eigenvalues().maxCoeff());
  EXPECT_EQ(adjusted_gram(X, arcsin2(), draw_noise(iso(0.2, 30, 4), 1)).values, G);
}

}  // namespace
}  // namespace nngpiu

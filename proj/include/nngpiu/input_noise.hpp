#pragma once

#include "nngpiu/kernel.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace nngpiu {

enum class NoiseDistribution { GaussianIsotropic, GaussianDiagonal, Custom };

/// Fills an m x d matrix with draws for the given seed. Must be deterministic.
using NoiseSampler = std::function<void(std::uint64_t seed, PointSet& draws)>;

/// Distribution of the additive input noise u together with the Monte-Carlo
/// budget used to approximate expectations over it.
struct NoiseSpec {
  NoiseDistribution distribution = NoiseDistribution::GaussianIsotropic;
  double sigma_u_sq = 0.0;          // GaussianIsotropic
  std::vector<double> variances;    // GaussianDiagonal, one per input dimension
  NoiseSampler sampler;             // Custom
  int mc_samples = 30;
  std::uint64_t seed = 0;
  /// True when the variances are already expressed in standardized input
  /// units; false means they are in raw units and get divided by the input
  /// scales whenever standardization metadata is supplied.
  bool standardization_adjusted = false;

  /// Sample-size escalation: double mc_samples until the estimated
  /// coefficient of variation is at most cv_target or max_mc_samples is hit.
  bool auto_escalate = true;
  int max_mc_samples = 480;
  double cv_target = 0.025;

  void validate(int input_dim) const;
  bool is_degenerate() const;  // all variances zero
};

/// Frozen Monte-Carlo draws shared by every Gram entry of one model.
struct NoiseSample {
  PointSet draws;            // m x d
  double cv_estimate = 0.0;  // 0 until check_cv has been run
  int mc_samples() const { return static_cast<int>(draws.rows()); }
};

/// Draws spec.mc_samples noise vectors of dimension input_dim. When
/// input_scales is non-empty and the spec is in raw units, column k is
/// divided by input_scales[k] so the draws live in standardized units.
NoiseSample draw_noise(const NoiseSpec& spec, int input_dim,
                       std::span<const double> input_scales = {});

using ProbePair = std::pair<std::vector<double>, std::vector<double>>;

/// Maximum over probe pairs of the coefficient of variation of the
/// TrainTrain estimator, estimated by splitting the draws into 10 batches.
double check_cv(const NoiseSample& sample, const KernelSpec& kernel,
                std::span<const ProbePair> probe_pairs);
double check_cv(const NoiseSpec& spec, const KernelSpec& kernel,
                std::span<const ProbePair> probe_pairs);

/// Draws a sample and, when spec.auto_escalate is set, doubles the sample
/// size until check_cv meets spec.cv_target or the size guard binds.
NoiseSample draw_noise_with_cv_rule(const NoiseSpec& spec, const KernelSpec& kernel,
                                    std::span<const ProbePair> probe_pairs,
                                    std::span<const double> input_scales = {});

/// Picks `count` distinct random training pairs for check_cv.
std::vector<ProbePair> default_probe_pairs(const PointSet& X, int count, std::uint64_t seed);

enum class AdjustCase { TrainTrain, Diagonal, TestTrain };

/// Monte-Carlo estimate of the noise-adjusted covariance.
///  TrainTrain: (1/m^2) sum_ij c(x + u_i, x2 + u_j)
///  Diagonal:   (1/m)   sum_i  c(x + u_i, x + u_i)        (x2 ignored)
///  TestTrain:  (1/m)   sum_i  c(x + u_i, x2), x a training input, x2 noise-free
double adjusted_cov(Point x, Point x2, AdjustCase which, const KernelSpec& kernel,
                    const NoiseSample& noise);

/// Adjusted training Gram: TrainTrain off the diagonal, Diagonal on it.
GramMatrix adjusted_gram(const PointSet& X, const KernelSpec& kernel, const NoiseSample& noise);

/// Adjusted cross covariance, X.rows() x Xstar.rows(), TestTrain entries.
Eigen::MatrixXd adjusted_gram(const PointSet& X, const PointSet& Xstar, const KernelSpec& kernel,
                              const NoiseSample& noise);

/// Repeated Gram assembly over a fixed design and frozen draws while the
/// hyperparameters change (the optimizer's inner loop). Pairwise geometry of
/// the noise-shifted design is computed once and reused.
class GramAssembler {
 public:
  /// `noise` empty means the plain (unadjusted) kernel.
  GramAssembler(PointSet X, std::optional<NoiseSample> noise, bool composite_geometry);

  Eigen::MatrixXd train(const KernelSpec& kernel) const;
  /// n x n* cross covariance between the training design and test points.
  Eigen::MatrixXd cross(const PointSet& Xstar, const KernelSpec& kernel) const;
  /// Prior variance at each test point (Diagonal case when adjusted).
  Eigen::VectorXd test_diagonal(const PointSet& Xstar, const KernelSpec& kernel) const;

  const PointSet& design() const { return X_; }
  const std::optional<NoiseSample>& noise() const { return noise_; }

 private:
  PointSet X_;
  std::optional<NoiseSample> noise_;
  Eigen::Index m_ = 1;
  PointSet shifted_;  // row i*m + a holds X_i + u_a
  bool composite_geometry_;
  Eigen::MatrixXd geometry_;  // empty when too large to cache
};

}  // namespace nngpiu

#pragma once

#include "nngpiu/dataset.hpp"
#include "nngpiu/input_noise.hpp"
#include "nngpiu/kernel.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nngpiu {

// Hyperparameter names used in bounds, grids, pins and serialized models.
inline constexpr const char* kSigmaB = "sigma_b_sq";
inline constexpr const char* kSigmaW = "sigma_w_sq";
inline constexpr const char* kSignalVar = "signal_var";
inline constexpr const char* kLengthScale = "length_scale";
inline constexpr const char* kSigmaEps = "sigma_eps_sq";

enum class OptMethod { MultistartGradient, Grid };

/// How a linear mean trend is estimated. GLS re-solves the trend against the
/// current kernel inside every likelihood evaluation; TwoStage fits it once
/// by ordinary least squares and models the residuals.
enum class TrendMode { None, GLS, TwoStage };

struct ParamBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Everything that controls a fit besides the kernel family and noise model.
/// Bounds, grid axes and pinned values are in model units (after output
/// standardization, when enabled), except pinned sigma_eps_sq which is given
/// in raw output units and rescaled.
struct OptConfig {
  OptMethod method = OptMethod::MultistartGradient;
  int restarts = 10;
  std::map<std::string, ParamBounds> bounds;  // overrides of default_bounds()
  std::map<std::string, std::vector<double>> grid;
  std::map<std::string, double> pinned;
  /// Starting point of the first restart; free parameters missing here are
  /// drawn at random like the other restarts.
  std::map<std::string, double> initial;
  TrendMode trend = TrendMode::None;
  bool trend_intercept = true;
  bool standardize_inputs = false;
  bool standardize_outputs = false;
  int max_iterations = 100;
  double gradient_tolerance = 1e-5;
  double value_tolerance = 1e-9;
  double fd_step = 1e-4;  // central-difference step in log space
  std::uint64_t seed = 0;
  int cv_probe_pairs = 5;

  /// Throws ConfigError on unknown parameter names or empty/inverted ranges.
  void validate() const;
};

/// Default box for each hyperparameter.
ParamBounds default_bounds(const std::string& name);

/// One restart of the multistart search.
struct RestartRecord {
  std::map<std::string, double> init;
  std::map<std::string, double> result;
  double log_likelihood = 0.0;
  bool ok = false;
  std::string message;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// A fitted model. Immutable after construction; predictions are safe from
/// several threads.
struct TrainedModel {
  KernelSpec kernel;
  std::optional<NoiseSpec> noise;  // mc_samples holds the size actually used
  double sigma_eps_sq = 0.0;
  bool gp_term = true;  // false for the trend-only linear model
  TrendMode trend = TrendMode::None;
  bool trend_intercept = true;
  Eigen::VectorXd trend_coeffs;  // intercept first when enabled
  Standardization standardization;
  std::shared_ptr<const Dataset> data;  // raw training data
  std::vector<RestartRecord> train_log;
  double log_likelihood = 0.0;

  // Derived state, in model units.
  Eigen::MatrixXd chol_factor;  // lower factor of K + sigma_eps_sq I (+ jitter)
  double jitter = 0.0;
  Eigen::VectorXd alpha;  // (K + sigma_eps_sq I)^{-1} (y - trend)
  Eigen::MatrixXd trend_gram_inverse;  // (H^T H)^{-1}, linear model only
  std::shared_ptr<const GramAssembler> assembler;
  std::optional<NoiseSample> noise_sample;

  bool noise_adjusted() const { return noise_sample.has_value(); }
};

/// -1/2 y^T A^{-1} y - 1/2 log|A| - n/2 log(2 pi) with A = K + sigma_eps_sq I.
/// Jitter needed to factorize A is recorded on K.
double log_pseudo_likelihood(GramMatrix& K, const Eigen::VectorXd& y, double sigma_eps_sq);

/// Generalized least squares trend coefficients for covariance K + sigma_eps_sq I.
Eigen::VectorXd gls_coefficients(const Eigen::MatrixXd& K, double sigma_eps_sq,
                                 const Eigen::MatrixXd& H, const Eigen::VectorXd& y);

/// Trend design matrix: optional column of ones followed by the inputs.
Eigen::MatrixXd trend_design(const PointSet& X, bool intercept);

/// The pseudo-likelihood as a function of the free hyperparameters in log
/// space, with the design, noise draws and pinned values frozen. This is the
/// objective the multistart search maximizes. Keeps the last Gram matrix, so
/// one instance must not be evaluated from several threads at once.
class PseudoLikelihood {
 public:
  /// `data` must already be in model units.
  PseudoLikelihood(Dataset data, KernelSpec kernel, std::optional<NoiseSample> noise,
                   const OptConfig& opt, double pinned_sigma_eps_sq_model);

  const std::vector<std::string>& free_names() const { return free_names_; }
  Eigen::VectorXd lower() const;
  Eigen::VectorXd upper() const;

  double operator()(const Eigen::VectorXd& log_theta) const;

  /// Kernel spec and noise variance corresponding to a point.
  KernelSpec kernel_at(const Eigen::VectorXd& log_theta) const;
  double sigma_eps_sq_at(const Eigen::VectorXd& log_theta) const;
  std::map<std::string, double> named(const Eigen::VectorXd& log_theta) const;

  const std::shared_ptr<const GramAssembler>& assembler() const { return assembler_; }

 private:
  Dataset data_;
  KernelSpec kernel_;
  OptConfig opt_;
  std::vector<std::string> free_names_;
  std::vector<ParamBounds> free_bounds_;
  std::map<std::string, double> fixed_;
  std::shared_ptr<const GramAssembler> assembler_;
  Eigen::MatrixXd H_;
  Eigen::VectorXd target_;  // y, or OLS residuals in two-stage mode

  const Eigen::MatrixXd& train_gram(const KernelSpec& k) const;
  mutable bool cache_valid_ = false;
  mutable std::array<double, 4> cache_key_{};
  mutable Eigen::MatrixXd cached_gram_;
};

/// Estimates hyperparameters by maximizing the pseudo-likelihood and
/// conditions the model on the data. With a noise spec the adjusted kernel
/// is used throughout, over one frozen set of draws.
TrainedModel fit(const Dataset& data, const KernelSpec& kernel, const std::optional<NoiseSpec>& noise,
                 const OptConfig& opt);

/// Trend-only ordinary least squares model (no stochastic term).
TrainedModel fit_linear(const Dataset& data, const OptConfig& opt);

/// Recomputes the derived state of a model from its hyperparameters and
/// training data (used by fit and when loading a saved model).
void condition(TrainedModel& model);

std::vector<Prediction> predict(const TrainedModel& model, const PointSet& Xstar);
Prediction predict(const TrainedModel& model, Point xstar);

/// Weights w with mean = trend(x*) + w^T (y - trend(X)), in model units.
Eigen::VectorXd blup_weights(const TrainedModel& model, Point xstar);

}  // namespace nngpiu

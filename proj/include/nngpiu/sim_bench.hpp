#pragma once

#include "nngpiu/dataset.hpp"
#include "nngpiu/model_zoo.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nngpiu {

enum class TargetKind { Zigzag, NearSquareWave, Linear, Custom };

/// Scalar test function on a closed interval.
struct TargetFunction {
  TargetKind kind = TargetKind::Zigzag;
  std::string name = "zigzag";
  double lower = 0.0;
  double upper = 4.0;
  std::function<double(double)> f;  // Custom only

  /// Triangle wave |x - 2 round(x/2)| on [0, 4]: range [0, 1], period 2.
  static TargetFunction zigzag();
  /// tanh(10 sin x) on [0, 4 pi].
  static TargetFunction near_square_wave();
  /// 1 + 2x on [0, 1], for sanity checks.
  static TargetFunction linear();
  static TargetFunction from_name(const std::string& name);  // throws ConfigError
};

/// Evaluates the target; x outside the domain is clamped with a warning.
double eval_target(const TargetFunction& fn, double x);

enum class Design { Equispaced, Uniform };

struct ExperimentConfig {
  TargetFunction target = TargetFunction::zigzag();
  int n_train = 20;
  Design design = Design::Equispaced;
  double sigma_u_sq = 0.1;
  double sigma_eps_sq = 0.01;
  int replications = 20;
  int eval_grid_size = 1000;
  std::vector<ModelConfig> models;
  std::uint64_t master_seed = 0;
  /// Replication whose prediction curves are kept for plotting (-1: none).
  int curve_replication = 0;

  void validate() const;  // throws ConfigError
};

/// Seeds of one replication, derived from the master seed by SplitMix64:
///   base  = splitmix64(master_seed + (index + 1) * 0x9e3779b97f4a7c15)
///   data  = splitmix64(base ^ 1), optimizer = splitmix64(base ^ 2),
///   noise = splitmix64(base ^ 3)
/// Every model of a replication shares the optimizer and noise seeds.
struct ReplicationSeeds {
  std::uint64_t data = 0;
  std::uint64_t optimizer = 0;
  std::uint64_t noise = 0;
};

inline constexpr const char* kSeedRule =
    "splitmix64: base=sm(master+(r+1)*0x9e3779b97f4a7c15); data=sm(base^1); optimizer=sm(base^2); "
    "noise=sm(base^3)";

std::uint64_t splitmix64(std::uint64_t x);
ReplicationSeeds replication_seeds(std::uint64_t master_seed, int index);

/// y_i = f(x_i + u_i) + eps_i with the nominal x_i stored as the input.
Dataset generate_data(const ExperimentConfig& cfg, int replication_index);

/// Evaluation grid of `size` equispaced points spanning the whole domain.
PointSet evaluation_grid(const TargetFunction& fn, int size);

/// Applies a replication's seeds to a model config.
ModelConfig with_replication_seeds(ModelConfig config, const ReplicationSeeds& seeds);

struct ReplicationFailure {
  int replication = 0;
  std::string message;
};

struct ModelResult {
  std::string label;
  std::vector<std::optional<double>> values;  // one per replication (or test split)
  std::vector<ReplicationFailure> failures;
  double mean = 0.0;
  double stderr_of_mean = 0.0;
  int completed = 0;

  /// Mean and standard error over the successful entries.
  void summarize();
};

/// Mean and 95% band of one model on the evaluation grid.
struct PredictionCurve {
  std::string label;
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
};

struct BenchmarkReport {
  std::string metric;  // "mse" or "mae"
  std::vector<ModelResult> models;
  nlohmann::json config;
  std::uint64_t master_seed = 0;
  std::vector<ReplicationSeeds> seeds;
  // Plot data for the curve replication.
  std::vector<double> grid;
  std::vector<double> truth;
  std::vector<double> train_x;
  std::vector<double> train_y;
  std::vector<PredictionCurve> curves;
  // Tabular runs: per-output metric by model, keyed like the output columns.
  std::vector<std::string> output_names;
  std::vector<std::vector<double>> per_output;  // [model][output]

  const ModelResult& result(const std::string& label) const;
  nlohmann::json to_json() const;
};

/// Fits every model on every replication and scores the predictive mean
/// against the true function on the evaluation grid. A model failing one
/// replication is recorded and excluded from its own aggregate only.
BenchmarkReport run_experiment(const ExperimentConfig& cfg);

/// Column roles of a tabular data set. Each deformation pairs two output
/// columns whose predictions are combined into a total deformation.
struct Deformation {
  std::string name;
  std::string dy;
  std::string dz;
};

struct ColumnRoles {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<Deformation> deformations;
};

ColumnRoles column_roles_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ColumnRoles& roles);

/// Fits each model once per output column on `train` and reports the MAE
/// over all outputs and test rows (and per output). When deformations are
/// declared, the metric is computed on the total deformations instead.
BenchmarkReport run_tabular(const Table& train, const Table& test, const ColumnRoles& roles,
                            const std::vector<ModelConfig>& models);
BenchmarkReport run_tabular(const std::string& train_path, const std::string& test_path,
                            const ColumnRoles& roles, const std::vector<ModelConfig>& models);

/// sqrt(dy^2 + dz^2).
double total_deformation(double dy, double dz);
Eigen::VectorXd total_deformation(const Eigen::VectorXd& dy, const Eigen::VectorXd& dz);

/// Synthetic stand-in for a multi-input assembly data set: a linear trend in
/// the inputs plus a draw from a zero-mean GP with `residual_kernel`, both
/// evaluated at noise-perturbed inputs, plus observation noise. Inputs are
/// uniform on [-1, 1]^d. Train and test rows are generated the same way.
struct SyntheticTabularSpec {
  int n_train = 30;
  int n_test = 20;
  int n_inputs = 10;
  int n_outputs = 1;
  double trend_scale = 1.0;  // slopes drawn from N(0, trend_scale^2)
  KernelSpec residual_kernel;
  double sigma_u_sq = 0.05;
  double sigma_eps_sq = 0.01;
};

struct TabularSplit {
  Table train;
  Table test;
  ColumnRoles roles;
};

TabularSplit generate_tabular(const SyntheticTabularSpec& spec, std::uint64_t seed);

SyntheticTabularSpec synthetic_tabular_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticTabularSpec& spec);

/// run_tabular on `repeats` synthetic data sets. Repeat r uses the seeds of
/// replication r: data for generation, optimizer and noise for every model.
/// Values are per-repeat MAEs.
BenchmarkReport run_synthetic_tabular(const SyntheticTabularSpec& spec, const std::vector<ModelConfig>& models,
                                      int repeats, std::uint64_t master_seed);

/// Experiment configs from JSON documents ({"experiment": {...}, "models": [...]}).
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
std::vector<ModelConfig> model_configs_from_json(const nlohmann::json& models);

}  // namespace nngpiu

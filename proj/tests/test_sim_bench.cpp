#include "nngpiu/errors.hpp"
#include "nngpiu/sim_bench.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

namespace nngpiu {
namespace {

using nlohmann::json;

ModelConfig linear_model() {
  ModelConfig c;
  c.kind = ModelKind::Linear;
  c.opt.trend = TrendMode::TwoStage;
  c.label = "Linear";
  return c;
}

ModelConfig gp_model(const std::string& label) {
  ModelConfig c;
  c.kind = ModelKind::ShallowGP;
  c.kernel.family = KernelFamily::RBF;
  c.opt.restarts = 2;
  c.label = label;
  return c;
}

ExperimentConfig small(TargetFunction target, int reps) {
  ExperimentConfig cfg;
  cfg.target = std::move(target);
  cfg.n_train = 12;
  cfg.replications = reps;
  cfg.eval_grid_size = 200;
  cfg.master_seed = 42;
  return cfg;
}

TEST(Targets, Zigzag) {
  const auto z = TargetFunction::zigzag();
  for (double x : {0.0, 2.0, 4.0}) EXPECT_EQ(eval_target(z, x), 0.0);
  EXPECT_DOUBLE_EQ(eval_target(z, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(eval_target(z, 3.0), 1.0);
  EXPECT_DOUBLE_EQ(eval_target(z, 0.25), 0.25);
  EXPECT_DOUBLE_EQ(z.lower, 0.0);
  EXPECT_DOUBLE_EQ(z.upper, 4.0);
}

TEST(Targets, NearSquareWave) {
  const auto s = TargetFunction::near_square_wave();
  EXPECT_NEAR(eval_target(s, std::numbers::pi / 2), std::tanh(10.0), 1e-15);
  EXPECT_GT(eval_target(s, std::numbers::pi / 2), 0.99999999);
  EXPECT_EQ(eval_target(s, 0.0), 0.0);
  EXPECT_NEAR(s.upper, 4.0 * std::numbers::pi, 1e-15);
}

TEST(Targets, FromName) {
  EXPECT_EQ(TargetFunction::from_name("zigzag").kind, TargetKind::Zigzag);
  EXPECT_EQ(TargetFunction::from_name("near_square").kind, TargetKind::NearSquareWave);
  EXPECT_THROW(TargetFunction::from_name("sawtooth"), ConfigError);
}

TEST(Seeds, SplitRule) {
  const auto a = replication_seeds(7, 0), b = replication_seeds(7, 0), c = replication_seeds(7, 1);
  EXPECT_EQ(a.data, b.data);
  EXPECT_NE(a.data, c.data);
  EXPECT_NE(a.data, a.optimizer);
  EXPECT_NE(a.optimizer, a.noise);
  const std::uint64_t base = splitmix64(7 + 0x9e3779b97f4a7c15ULL);
  EXPECT_EQ(a.data, splitmix64(base ^ 1));
  EXPECT_EQ(a.optimizer, splitmix64(base ^ 2));
  EXPECT_EQ(a.noise, splitmix64(base ^ 3));
}

TEST(GenerateData, NoiseFreeIsExact) {
  auto cfg = small(TargetFunction::zigzag(), 1);
  cfg.n_train = 20;
  cfg.sigma_u_sq = 0.0;
  cfg.sigma_eps_sq = 0.0;
  const Dataset d = generate_data(cfg, 0);
  ASSERT_EQ(d.size(), 20);
  EXPECT_DOUBLE_EQ(d.X(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(d.X(19, 0), 4.0);
  for (Eigen::Index i = 0; i < d.size(); ++i) EXPECT_EQ(d.y(i), eval_target(cfg.target, d.X(i, 0)));
}

TEST(GenerateData, SeedingContract) {
  const auto cfg = small(TargetFunction::zigzag(), 3);
  EXPECT_EQ(generate_data(cfg, 1).y, generate_data(cfg, 1).y);
  EXPECT_NE(generate_data(cfg, 1).y, generate_data(cfg, 2).y);
}

TEST(GenerateData, UniformDesignStaysInDomain) {
  auto cfg = small(TargetFunction::near_square_wave(), 1);
  cfg.design = Design::Uniform;
  cfg.n_train = 30;
  const Dataset d = generate_data(cfg, 0);
  EXPECT_GE(d.X.minCoeff(), cfg.target.lower);
  EXPECT_LE(d.X.maxCoeff(), cfg.target.upper);
}

TEST(RunExperiment, LinearTargetIsRecovered) {
  auto cfg = small(TargetFunction::linear(), 1);
  cfg.sigma_u_sq = 0.0;
  cfg.sigma_eps_sq = 0.0;
  cfg.models = {linear_model()};
  const auto report = run_experiment(cfg);
  EXPECT_LT(report.result("Linear").mean, 1e-20);
}

TEST(RunExperiment, ByteIdenticalReports) {
  auto cfg = small(TargetFunction::zigzag(), 3);
  cfg.models = {linear_model(), gp_model("GP")};
  EXPECT_EQ(run_experiment(cfg).to_json().dump(), run_experiment(cfg).to_json().dump());
}

TEST(RunExperiment, GridRefinementChangesMseBelowOnePercent) {
  auto cfg = small(TargetFunction::near_square_wave(), 2);
  cfg.models = {gp_model("GP")};
  cfg.eval_grid_size = 1000;
  const double coarse = run_experiment(cfg).result("GP").mean;
  cfg.eval_grid_size = 2000;
  const double fine = run_experiment(cfg).result("GP").mean;
  EXPECT_LT(std::abs(fine - coarse), 0.01 * coarse);
}

TEST(RunExperiment, FailuresStayWithTheirModel) {
  auto cfg = small(TargetFunction::zigzag(), 3);
  ModelConfig broken;
  broken.kind = ModelKind::KALE;
  broken.kernel.family = KernelFamily::RBF;
  broken.label = "Broken";
  NoiseSpec n;
  n.distribution = NoiseDistribution::Custom;
  n.mc_samples = 10;
  n.auto_escalate = false;
  n.sampler = [](std::uint64_t, PointSet& draws) { draws.setConstant(std::numeric_limits<double>::quiet_NaN()); };
  broken.noise = n;
  cfg.models = {gp_model("GP"), broken};
  const auto with_broken = run_experiment(cfg);
  cfg.models = {gp_model("GP")};
  const auto alone = run_experiment(cfg);
  EXPECT_EQ(with_broken.result("Broken").completed, 0);
  EXPECT_EQ(with_broken.result("Broken").failures.size(), 3u);
  EXPECT_EQ(with_broken.result("GP").values, alone.result("GP").values);
  EXPECT_EQ(with_broken.result("GP").mean, alone.result("GP").mean);
}

TEST(RunExperiment, CurvesCoverTheGrid) {
  auto cfg = small(TargetFunction::zigzag(), 2);
  cfg.models = {gp_model("GP")};
  cfg.curve_replication = 1;
  const auto r = run_experiment(cfg);
  ASSERT_EQ(r.curves.size(), 1u);
  EXPECT_EQ(r.curves[0].mean.size(), 200u);
  EXPECT_EQ(r.grid.size(), 200u);
  EXPECT_EQ(r.train_x.size(), 12u);
  for (std::size_t i = 0; i < 200; ++i) EXPECT_LE(r.curves[0].lower[i], r.curves[0].upper[i]);
}

TEST(ExperimentConfig, JsonRoundTripAndValidation) {
  const json j = json::parse(R"({
    "experiment": {"target": "near_square", "n_train": 30, "design": "uniform", "sigma_u_sq": 0.03,
                   "replications": 4, "master_seed": 9},
    "models": [{"model": "ShallowGP", "label": "GP-RBF", "kernel": {"family": "rbf"}}]
  })");
  const ExperimentConfig cfg = experiment_config_from_json(j);
  EXPECT_EQ(cfg.design, Design::Uniform);
  EXPECT_EQ(cfg.replications, 4);
  EXPECT_EQ(to_json(experiment_config_from_json(to_json(cfg))), to_json(cfg));
  json bad = j;
  bad["experiment"]["sigma_eps"] = 0.1;
  EXPECT_THROW(experiment_config_from_json(bad), ConfigError);
  bad = j;
  bad["models"].push_back(bad["models"][0]);
  EXPECT_THROW(experiment_config_from_json(bad), ConfigError);  // duplicate label
}

TEST(TotalDeformation, Values) {
  EXPECT_EQ(total_deformation(0.0, 0.0), 0.0);
  EXPECT_EQ(total_deformation(3.0, 4.0), 5.0);
  Eigen::VectorXd dy(91), dz(91);
  for (int i = 0; i < 91; ++i) {
    dy(i) = 0.01 * i - 0.3;
    dz(i) = std::sin(0.1 * i);
  }
  const Eigen::VectorXd v = total_deformation(dy, dz);
  for (int i = 0; i < 91; ++i) EXPECT_EQ(v(i), total_deformation(dy(i), dz(i)));
}

Table table(std::vector<std::string> cols, Eigen::MatrixXd values) {
  Table t;
  t.columns = std::move(cols);
  t.values = std::move(values);
  return t;
}

TEST(Tabular, InterpolatingModelOnTrainingSet) {
  Eigen::MatrixXd v(8, 2);
  for (int i = 0; i < 8; ++i) v.row(i) << 0.5 * i, std::sin(0.5 * i);
  const Table t = table({"x", "y"}, v);
  ModelConfig gp = gp_model("GP");
  gp.opt.pinned[kSigmaEps] = 0.0;
  gp.opt.pinned[kLengthScale] = 1.0;
  gp.opt.pinned[kSignalVar] = 1.0;
  const auto r = run_tabular(t, t, {{"x"}, {"y"}, {}}, {gp});
  EXPECT_LT(r.result("GP").mean, 1e-6);
}

TEST(Tabular, ConstantOutputLinear) {
  Eigen::MatrixXd v(6, 3);
  for (int i = 0; i < 6; ++i) v.row(i) << i, i * i, 4.2;
  const Table t = table({"a", "b", "y"}, v);
  const auto r = run_tabular(t, t, {{"a", "b"}, {"y"}, {}}, {linear_model()});
  EXPECT_LT(r.result("Linear").mean, 1e-12);
}

TEST(Tabular, DeformationsAndSchemaErrors) {
  Eigen::MatrixXd v(6, 3);
  for (int i = 0; i < 6; ++i) v.row(i) << i, 3.0 * i, 4.0 * i;
  const Table t = table({"x", "dy", "dz"}, v);
  ColumnRoles roles{{"x"}, {"dy", "dz"}, {{"D1", "dy", "dz"}}};
  const auto r = run_tabular(t, t, roles, {linear_model()});
  ASSERT_EQ(r.output_names, std::vector<std::string>{"D1"});
  EXPECT_LT(r.result("Linear").mean, 1e-10);
  const Table other = table({"z", "dy", "dz"}, v);
  EXPECT_THROW(run_tabular(t, other, roles, {linear_model()}), DataError);
}

TEST(Tabular, ColumnRolesJson) {
  const json j = json::parse(R"({"inputs": ["f1"], "outputs": ["dy1", "dz1"],
                                 "deformations": [{"name": "D1", "dy": "dy1", "dz": "dz1"}]})");
  const ColumnRoles r = column_roles_from_json(j);
  EXPECT_EQ(r.deformations.at(0).dz, "dz1");
  EXPECT_EQ(to_json(r), j);
  json bad = j;
  bad["deformations"][0]["dx"] = "q";
  EXPECT_THROW(column_roles_from_json(bad), ConfigError);
}

TEST(SyntheticTabular, ShapesAndDeterminism) {
  SyntheticTabularSpec spec;
  spec.n_train = 15;
  spec.n_test = 5;
  spec.n_inputs = 4;
  const auto a = generate_tabular(spec, 3), b = generate_tabular(spec, 3);
  EXPECT_EQ(a.train.values.rows(), 15);
  EXPECT_EQ(a.test.values.rows(), 5);
  EXPECT_EQ(a.train.columns.size(), 5u);
  EXPECT_EQ(a.train.values, b.train.values);
  EXPECT_EQ(a.roles.inputs.size(), 4u);
  EXPECT_LE(a.train.values.leftCols(4).cwiseAbs().maxCoeff(), 1.0);
  EXPECT_EQ(to_json(synthetic_tabular_from_json(to_json(spec))), to_json(spec));
}

}  // namespace
}  // namespace nngpiu

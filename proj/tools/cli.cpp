#include "cli.hpp"

#include "nngpiu/dataset.hpp"
#include "nngpiu/errors.hpp"
#include "nngpiu/log.hpp"
#include "nngpiu/model_zoo.hpp"
#include "nngpiu/sim_bench.hpp"
#include "nngpiu/spectral.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#ifndef NNGPIU_VERSION
#define NNGPIU_VERSION "0.0.0"
#endif

namespace nngpiu::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path + "'");
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

json read_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string absolute_path(const std::string& path) { return fs::absolute(path).lexically_normal().string(); }

std::string file_crc(const std::string& path) { return crc32_hex(read_file(path)); }

/// Header-safe label: commas would break the CSV header row.
std::string csv_label(std::string label) {
  for (char& c : label) {
    if (c == ',' || c == '\n' || c == '\r') c = '_';
  }
  return label;
}

std::string file_label(const std::string& label) {
  std::string out;
  for (char c : label) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out.push_back(keep ? c : '_');
  }
  return out.empty() ? "kernel" : out;
}

ModelConfig with_seed(ModelConfig config, std::uint64_t seed) {
  config.opt.seed = seed;
  if (config.noise) config.noise->seed = seed;
  return config;
}

template <class Fn>
auto as_config_error(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

// What a command needs besides the resolved config: input files and the
// output directory. Files written are collected for the manifest.
struct Run {
  std::string command;
  json resolved;
  std::map<std::string, std::string> inputs;  // role -> absolute path
  fs::path out;
  json seeds = json::object();
  std::vector<std::string> outputs;

  void write(const std::string& name, const std::string& text) {
    write_file(out / name, text);
    outputs.push_back(name);
  }
  void write_table(const std::string& name, const Table& table) {
    write_csv((out / name).string(), table);
    outputs.push_back(name);
  }
};

void prepare_out_dir(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory '" + out.string() + "': " + ec.message());
}

// ---- fit -------------------------------------------------------------------

json resolve_fit(json raw, std::optional<std::uint64_t> seed) {
  return as_config_error([&] {
    if (!raw.is_object()) throw ConfigError("fit config must be an object");
    json columns;
    if (raw.contains("columns")) {
      columns = raw.at("columns");
      raw.erase("columns");
      require_known_keys(columns, {"inputs", "output"}, "columns");
    }
    ModelConfig config = model_config_from_json(raw);
    if (seed) config = with_seed(std::move(config), *seed);
    json resolved = to_json(config);
    if (!columns.is_null()) resolved["columns"] = columns;
    return resolved;
  });
}

Dataset fit_dataset(const Table& table, const json& columns) {
  std::vector<std::string> inputs;
  std::string output;
  if (table.columns.size() < 2) throw DataError("training data needs at least one input and one output column");
  as_config_error([&] {
    if (columns.is_object() && columns.contains("output")) output = columns.at("output").get<std::string>();
    else output = table.columns.back();
    if (columns.is_object() && columns.contains("inputs")) {
      inputs = columns.at("inputs").get<std::vector<std::string>>();
    } else {
      for (const auto& c : table.columns) {
        if (c != output) inputs.push_back(c);
      }
    }
    return 0;
  });
  return dataset_from_table(table, inputs, output);
}

void execute_fit(Run& run) {
  const json& cfg = run.resolved;
  json model_part = cfg;
  model_part.erase("columns");
  const ModelConfig config = as_config_error([&] { return model_config_from_json(model_part); });
  const Table table = read_csv(run.inputs.at("data"));
  const Dataset data = fit_dataset(table, cfg.contains("columns") ? cfg.at("columns") : json());
  data.validate();
  const FittedModel fitted = build_and_fit(config, data);
  const std::string text = serialize(fitted);
  run.seeds = {{"optimizer", config.opt.seed}};
  if (config.noise) run.seeds["noise"] = config.noise->seed;
  prepare_out_dir(run.out);
  run.write("model.json", text);
}

// ---- predict ---------------------------------------------------------------

void execute_predict(Run& run) {
  const FittedModel fitted = load_model(run.inputs.at("model"));
  const Table table = read_csv(run.inputs.at("data"));
  const Dataset& train = *fitted.model.data;
  std::vector<std::string> names = train.input_names;
  if (names.empty()) {
    for (int k = 0; k < train.input_dim(); ++k) names.push_back("x" + std::to_string(k + 1));
  }
  PointSet X(table.values.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t k = 0; k < names.size(); ++k) {
    X.col(static_cast<Eigen::Index>(k)) = table.values.col(table.column_index(names[k]));
  }
  if (!X.allFinite()) throw DataError("prediction inputs contain non-finite values");

  Table out;
  out.columns = names;
  out.columns.push_back("mean");
  out.columns.push_back("variance");
  out.values.resize(X.rows(), static_cast<Eigen::Index>(out.columns.size()));
  if (X.rows() > 0) {
    const auto preds = fitted.predict(X);
    const Eigen::Index d = X.cols();
    out.values.leftCols(d) = X;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      out.values(i, d) = preds[static_cast<std::size_t>(i)].mean;
      out.values(i, d + 1) = preds[static_cast<std::size_t>(i)].variance;
    }
  }
  prepare_out_dir(run.out);
  run.write_table("predictions.csv", out);
}

// ---- bench -----------------------------------------------------------------

json resolve_bench(const json& raw, const fs::path& config_dir, std::optional<std::uint64_t> seed) {
  return as_config_error([&]() -> json {
    if (!raw.is_object()) throw ConfigError("bench config must be an object");
    if (raw.contains("experiment")) {
      ExperimentConfig cfg = experiment_config_from_json(raw);
      if (seed) cfg.master_seed = *seed;
      return to_json(cfg);
    }
    if (raw.contains("tabular")) {
      require_known_keys(raw, {"tabular", "models"}, "bench config");
      const json& t = raw.at("tabular");
      require_known_keys(t, {"train", "test", "roles"}, "tabular");
      auto locate = [&](const std::string& p) {
        const fs::path path(p);
        return (path.is_absolute() ? path : config_dir / path).lexically_normal().string();
      };
      const ColumnRoles roles = column_roles_from_json(t.at("roles"));
      std::vector<ModelConfig> models = model_configs_from_json(raw.at("models"));
      json models_json = json::array();
      for (auto& m : models) models_json.push_back(to_json(seed ? with_seed(m, *seed) : m));
      return json{{"tabular",
                   {{"train", locate(t.at("train").get<std::string>())},
                    {"test", locate(t.at("test").get<std::string>())},
                    {"roles", to_json(roles)}}},
                  {"models", models_json}};
    }
    if (raw.contains("synthetic_tabular")) {
      require_known_keys(raw, {"synthetic_tabular", "models"}, "bench config");
      const json& s = raw.at("synthetic_tabular");
      require_known_keys(s, {"data", "repeats", "master_seed"}, "synthetic_tabular");
      const SyntheticTabularSpec spec = synthetic_tabular_from_json(s.value("data", json::object()));
      const int repeats = s.value("repeats", 10);
      if (repeats < 1) throw ConfigError("synthetic_tabular: repeats must be at least 1");
      const std::uint64_t master = seed ? *seed : s.value("master_seed", std::uint64_t{0});
      json models_json = json::array();
      for (const auto& m : model_configs_from_json(raw.at("models"))) models_json.push_back(to_json(m));
      return json{{"synthetic_tabular", {{"data", to_json(spec)}, {"repeats", repeats}, {"master_seed", master}}},
                  {"models", models_json}};
    }
    throw ConfigError("bench config needs one of 'experiment', 'tabular' or 'synthetic_tabular'");
  });
}

Table values_table(const BenchmarkReport& report) {
  Table t;
  t.columns.push_back("replication");
  std::size_t rows = 0;
  for (const auto& m : report.models) {
    t.columns.push_back(csv_label(m.label));
    rows = std::max(rows, m.values.size());
  }
  t.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(t.columns.size()),
                                       std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < rows; ++r) {
    t.values(static_cast<Eigen::Index>(r), 0) = static_cast<double>(r);
    for (std::size_t k = 0; k < report.models.size(); ++k) {
      const auto& v = report.models[k].values;
      if (r < v.size() && v[r]) t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k + 1)) = *v[r];
    }
  }
  return t;
}

Table curves_table(const BenchmarkReport& report) {
  Table t;
  t.columns = {"x", "truth"};
  for (const auto& c : report.curves) {
    const std::string l = csv_label(c.label);
    t.columns.insert(t.columns.end(), {l + "_mean", l + "_lower", l + "_upper"});
  }
  const auto n = static_cast<Eigen::Index>(report.grid.size());
  t.values.resize(n, static_cast<Eigen::Index>(t.columns.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(i);
    t.values(i, 0) = report.grid[s];
    t.values(i, 1) = report.truth[s];
    for (std::size_t k = 0; k < report.curves.size(); ++k) {
      const auto col = static_cast<Eigen::Index>(2 + 3 * k);
      t.values(i, col) = report.curves[k].mean[s];
      t.values(i, col + 1) = report.curves[k].lower[s];
      t.values(i, col + 2) = report.curves[k].upper[s];
    }
  }
  return t;
}

Table per_output_table(const BenchmarkReport& report) {
  Table t;
  t.columns.push_back("output");
  for (const auto& m : report.models) t.columns.push_back(csv_label(m.label));
  const auto n = static_cast<Eigen::Index>(report.output_names.size());
  t.values = Eigen::MatrixXd::Constant(n, static_cast<Eigen::Index>(t.columns.size()),
                                       std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index o = 0; o < n; ++o) {
    t.values(o, 0) = static_cast<double>(o);
    for (std::size_t k = 0; k < report.per_output.size(); ++k) {
      if (static_cast<std::size_t>(o) < report.per_output[k].size()) {
        t.values(o, static_cast<Eigen::Index>(k + 1)) = report.per_output[k][static_cast<std::size_t>(o)];
      }
    }
  }
  return t;
}

void execute_bench(Run& run) {
  const json& cfg = run.resolved;
  BenchmarkReport report;
  if (cfg.contains("experiment")) {
    const ExperimentConfig ec = as_config_error([&] { return experiment_config_from_json(cfg); });
    report = run_experiment(ec);
    run.seeds = {{"master_seed", ec.master_seed}, {"rule", kSeedRule}};
  } else if (cfg.contains("tabular")) {
    const json& t = cfg.at("tabular");
    const ColumnRoles roles = as_config_error([&] { return column_roles_from_json(t.at("roles")); });
    const auto models = as_config_error([&] { return model_configs_from_json(cfg.at("models")); });
    report = run_tabular(read_csv(run.inputs.at("train")), read_csv(run.inputs.at("test")), roles, models);
    json per_model = json::object();
    for (const auto& m : models) per_model[m.display_name()] = {{"optimizer", m.opt.seed}};
    run.seeds = per_model;
  } else {
    const json& s = cfg.at("synthetic_tabular");
    const auto spec = synthetic_tabular_from_json(s.at("data"));
    const auto models = as_config_error([&] { return model_configs_from_json(cfg.at("models")); });
    const auto master = s.at("master_seed").get<std::uint64_t>();
    report = run_synthetic_tabular(spec, models, s.at("repeats").get<int>(), master);
    run.seeds = {{"master_seed", master}, {"rule", kSeedRule}};
  }
  prepare_out_dir(run.out);
  run.write("report.json", report.to_json().dump(1) + "\n");
  run.write_table("values.csv", values_table(report));
  if (!report.grid.empty()) {
    run.write_table("curves.csv", curves_table(report));
    Table pts;
    pts.columns = {"x", "y"};
    pts.values.resize(static_cast<Eigen::Index>(report.train_x.size()), 2);
    for (std::size_t i = 0; i < report.train_x.size(); ++i) {
      pts.values(static_cast<Eigen::Index>(i), 0) = report.train_x[i];
      pts.values(static_cast<Eigen::Index>(i), 1) = report.train_y[i];
    }
    run.write_table("train_points.csv", pts);
  }
  if (!report.output_names.empty()) run.write_table("per_output.csv", per_output_table(report));
}

// ---- eigen -----------------------------------------------------------------

json resolve_eigen(const json& raw, std::optional<std::uint64_t> seed) {
  return as_config_error([&] {
    require_known_keys(raw, {"spectrum", "kernels"}, "eigen config");
    const json s = raw.value("spectrum", json::object());
    require_known_keys(s, {"n_inputs", "input_dim", "replications", "seed", "fit_first", "fit_last"}, "spectrum");
    SpectrumOptions o;
    o.n_inputs = s.value("n_inputs", o.n_inputs);
    o.input_dim = s.value("input_dim", o.input_dim);
    o.replications = s.value("replications", o.replications);
    o.seed = seed ? *seed : s.value("seed", o.seed);
    o.fit_first = s.value("fit_first", o.fit_first);
    o.fit_last = s.value("fit_last", o.fit_last);
    if (o.n_inputs < 2 || o.input_dim < 1 || o.replications < 1) {
      throw ConfigError("spectrum: n_inputs >= 2, input_dim >= 1 and replications >= 1 required");
    }
    if (o.fit_first < 1 || o.fit_last < o.fit_first + 2 || o.fit_last > o.n_inputs) {
      throw ConfigError("spectrum: fit window must satisfy fit_first >= 1, fit_last >= fit_first + 2, fit_last <= n_inputs");
    }
    const json& kernels = raw.at("kernels");
    if (!kernels.is_array() || kernels.empty()) throw ConfigError("eigen config: 'kernels' must be a non-empty array");
    json resolved_kernels = json::array();
    std::vector<std::string> labels;
    for (const auto& k : kernels) {
      require_known_keys(k, {"label", "kernel"}, "kernels[]");
      KernelSpec spec = kernel_from_json(k.at("kernel"));
      spec.input_dim = o.input_dim;
      try {
        spec.validate();
      } catch (const InputError& e) {
        throw ConfigError(std::string("kernel: ") + e.what());
      }
      const std::string label = k.value("label", std::string(to_string(spec.family)));
      if (std::find(labels.begin(), labels.end(), file_label(label)) != labels.end()) {
        throw ConfigError("eigen config: duplicate kernel label '" + label + "'");
      }
      labels.push_back(file_label(label));
      resolved_kernels.push_back({{"label", label}, {"kernel", kernel_to_json(spec)}});
    }
    return json{{"spectrum",
                 {{"n_inputs", o.n_inputs},
                  {"input_dim", o.input_dim},
                  {"replications", o.replications},
                  {"seed", o.seed},
                  {"fit_first", o.fit_first},
                  {"fit_last", o.fit_last}}},
                {"kernels", resolved_kernels}};
  });
}

void execute_eigen(Run& run) {
  const json& s = run.resolved.at("spectrum");
  SpectrumOptions o;
  o.n_inputs = s.at("n_inputs");
  o.input_dim = s.at("input_dim");
  o.replications = s.at("replications");
  o.seed = s.at("seed");
  o.fit_first = s.at("fit_first");
  o.fit_last = s.at("fit_last");
  std::vector<SpectrumReport> reports;
  for (const auto& k : run.resolved.at("kernels")) {
    KernelSpec spec = kernel_from_json(k.at("kernel"));
    spec.input_dim = o.input_dim;
    reports.push_back(eigenspectrum(spec, o, k.at("label").get<std::string>()));
  }
  run.seeds = {{"seed", o.seed}};
  prepare_out_dir(run.out);
  json spectra = json::array();
  for (const auto& r : reports) spectra.push_back(r.to_json());
  run.write("report.json", json{{"spectrum", s}, {"spectra", spectra}}.dump(1) + "\n");
  for (const auto& r : reports) {
    Table t;
    t.columns = {"index", "mean", "stderr", "mean_log", "stderr_log"};
    const auto n = static_cast<Eigen::Index>(r.mean.size());
    t.values.resize(n, 5);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      t.values.row(i) << static_cast<double>(i + 1), r.mean[u], r.stderr_of_mean[u], r.mean_log[u], r.stderr_log[u];
    }
    run.write_table("spectrum_" + file_label(r.kernel_label) + ".csv", t);
  }
}

// ---- manifest --------------------------------------------------------------

void execute(Run& run) {
  if (run.command == "fit") execute_fit(run);
  else if (run.command == "predict") execute_predict(run);
  else if (run.command == "bench") execute_bench(run);
  else if (run.command == "eigen") execute_eigen(run);
  else throw ConfigError("unknown command '" + run.command + "'");
}

void run_and_record(Run& run, const std::string& config_path, const std::string& rerun_of) {
  const std::string started = utc_timestamp();
  json input_hashes = json::object();
  for (const auto& [role, path] : run.inputs) input_hashes[role] = {{"path", path}, {"crc32", file_crc(path)}};
  execute(run);
  json manifest{{"command", run.command},
                {"tool_version", NNGPIU_VERSION},
                {"config_path", config_path.empty() ? json() : json(absolute_path(config_path))},
                {"resolved_config", run.resolved},
                {"config_hash", "crc32:" + crc32_hex(run.resolved.dump())},
                {"inputs", input_hashes},
                {"seeds", run.seeds},
                {"outputs", run.outputs},
                {"out_dir", absolute_path(run.out.string())},
                {"started_at", started},
                {"finished_at", utc_timestamp()}};
  if (!rerun_of.empty()) manifest["rerun_of"] = absolute_path(rerun_of);
  write_file(run.out / kManifestName, manifest.dump(1) + "\n");
}

void require(const std::string& value, const char* flag, const std::string& command) {
  if (value.empty()) throw ConfigError(command + " requires " + flag);
}

int dispatch_command(const Options& opt) {
  Run run;
  run.command = opt.command;
  if (opt.command != "rerun") {
    require(opt.out, "--out", opt.command);
    run.out = opt.out;
  }
  if (opt.command == "fit") {
    require(opt.config, "--config", "fit");
    require(opt.data, "--data", "fit");
    run.resolved = resolve_fit(read_json(opt.config), opt.seed);
    run.inputs["data"] = absolute_path(opt.data);
    run_and_record(run, opt.config, "");
  } else if (opt.command == "predict") {
    require(opt.model, "--model", "predict");
    require(opt.data, "--data", "predict");
    run.resolved = json::object();
    run.inputs["model"] = absolute_path(opt.model);
    run.inputs["data"] = absolute_path(opt.data);
    run_and_record(run, "", "");
  } else if (opt.command == "bench") {
    require(opt.config, "--config", "bench");
    const fs::path dir = fs::absolute(opt.config).parent_path();
    run.resolved = resolve_bench(read_json(opt.config), dir, opt.seed);
    if (run.resolved.contains("tabular")) {
      run.inputs["train"] = run.resolved["tabular"]["train"].get<std::string>();
      run.inputs["test"] = run.resolved["tabular"]["test"].get<std::string>();
    }
    run_and_record(run, opt.config, "");
  } else if (opt.command == "eigen") {
    require(opt.config, "--config", "eigen");
    run.resolved = resolve_eigen(read_json(opt.config), opt.seed);
    run_and_record(run, opt.config, "");
  } else if (opt.command == "rerun") {
    require(opt.manifest, "--manifest", "rerun");
    require(opt.out, "--out", "rerun");
    const json manifest = read_json(opt.manifest);
    as_config_error([&] {
      run.command = manifest.at("command").get<std::string>();
      run.resolved = manifest.at("resolved_config");
      for (const auto& [role, entry] : manifest.at("inputs").items()) {
        const std::string path = entry.at("path").get<std::string>();
        if (file_crc(path) != entry.at("crc32").get<std::string>()) {
          throw DataError("input '" + path + "' changed since the manifest was written");
        }
        run.inputs[role] = path;
      }
      return 0;
    });
    if (opt.seed) log_warn("--seed is ignored by rerun; seeds come from the manifest");
    run.out = opt.out;
    const json config_path = manifest.value("config_path", json());
    run_and_record(run, config_path.is_string() ? config_path.get<std::string>() : "", opt.manifest);
  } else {
    throw ConfigError("unknown command '" + opt.command + "'");
  }
  return kOk;
}

}  // namespace

int run(const Options& options) {
  set_verbose(options.verbose);
#ifdef _OPENMP
  if (options.threads > 0) omp_set_num_threads(options.threads);
#endif
  try {
    return dispatch_command(options);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const InputError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const FormatError& e) {
    std::cerr << "model file error: " << e.what() << '\n';
    return kDataError;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << '\n';
    return kNumericError;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Gaussian process toolkit with deep composite kernels and input-noise adjustment"};
  app.set_version_flag("--version", NNGPIU_VERSION);
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--threads", opt.threads, "Worker thread cap (0: default)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--verbose,-v", opt.verbose, "Debug logging to stderr");
  };
  auto seeded = [&](CLI::App* sub) { sub->add_option("--seed", seed, "Override the config's seed"); };

  auto* fit = app.add_subcommand("fit", "Fit a model to a CSV data set");
  fit->add_option("--config", opt.config, "Model config (JSON)")->required();
  fit->add_option("--data", opt.data, "Training data (CSV)")->required();
  common(fit);
  seeded(fit);

  auto* pred = app.add_subcommand("predict", "Predict with a saved model");
  pred->add_option("--model", opt.model, "Model file written by fit")->required();
  pred->add_option("--data", opt.data, "Input points (CSV)")->required();
  common(pred);

  auto* bench = app.add_subcommand("bench", "Run a benchmark experiment");
  bench->add_option("--config", opt.config, "Benchmark config (JSON)")->required();
  common(bench);
  seeded(bench);

  auto* eigen = app.add_subcommand("eigen", "Eigenvalue spectra of kernel Gram matrices");
  eigen->add_option("--config", opt.config, "Spectrum config (JSON)")->required();
  common(eigen);
  seeded(eigen);

  auto* rerun = app.add_subcommand("rerun", "Repeat a command from its manifest");
  rerun->add_option("--manifest", opt.manifest, "manifest.json of an earlier run")->required();
  common(rerun);

  for (auto* sub : {fit, pred, bench, eigen, rerun}) sub->get_option("--out")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  for (auto* sub : app.get_subcommands()) opt.command = sub->get_name();
  for (auto* sub : {fit, bench, eigen}) {
    if (sub->parsed() && sub->count("--seed") > 0) opt.seed = seed;
  }
  return run(opt);
}

}  // namespace nngpiu::cli

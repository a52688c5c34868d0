#include "nngpiu/model_zoo.hpp"

#include "nngpiu/errors.hpp"

#include <boost/crc.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace nngpiu {

using nlohmann::json;

namespace {

constexpr std::string_view kFormatName = "nngpiu-model";

std::string_view to_string(NoiseDistribution d) {
  switch (d) {
    case NoiseDistribution::GaussianIsotropic: return "gaussian_isotropic";
    case NoiseDistribution::GaussianDiagonal: return "gaussian_diagonal";
    case NoiseDistribution::Custom: return "custom";
  }
  return "unknown";
}

NoiseDistribution noise_distribution_from_string(const std::string& name) {
  if (name == "gaussian_isotropic") return NoiseDistribution::GaussianIsotropic;
  if (name == "gaussian_diagonal") return NoiseDistribution::GaussianDiagonal;
  if (name == "custom") {
    throw ConfigError("custom noise distributions cannot be configured from a file");
  }
  throw ConfigError("unknown noise distribution '" + name + "'");
}

std::string_view to_string(TrendMode t) {
  switch (t) {
    case TrendMode::None: return "none";
    case TrendMode::GLS: return "gls";
    case TrendMode::TwoStage: return "two_stage";
  }
  return "none";
}

TrendMode trend_from_json(const json& j) {
  if (j.is_boolean()) return j.get<bool>() ? TrendMode::GLS : TrendMode::None;
  const auto name = j.get<std::string>();
  if (name == "none") return TrendMode::None;
  if (name == "gls") return TrendMode::GLS;
  if (name == "two_stage") return TrendMode::TwoStage;
  throw ConfigError("unknown trend mode '" + name + "'");
}

std::vector<std::string> kernel_param_names(const KernelSpec& kernel) {
  if (kernel.is_composite()) return {kSigmaB, kSigmaW};
  return {kSignalVar, kLengthScale};
}

}  // namespace

json kernel_to_json(const KernelSpec& k) {
  json j{{"family", std::string(to_string(k.family))}};
  if (k.is_composite()) {
    j["depth"] = k.depth;
    j[kSigmaB] = k.sigma_b_sq;
    j[kSigmaW] = k.sigma_w_sq;
  } else {
    j[kSignalVar] = k.signal_var;
    j[kLengthScale] = k.length_scale;
  }
  return j;
}

KernelSpec kernel_from_json(const json& j) {
  require_known_keys(j, {"family", "depth", kSigmaB, kSigmaW, kSignalVar, kLengthScale, "input_dim"},
                     "kernel");
  try {
    KernelSpec k;
    k.family = kernel_family_from_string(j.at("family").get<std::string>());
    k.depth = j.value("depth", k.depth);
    k.sigma_b_sq = j.value(kSigmaB, k.sigma_b_sq);
    k.sigma_w_sq = j.value(kSigmaW, k.sigma_w_sq);
    k.signal_var = j.value(kSignalVar, k.signal_var);
    k.length_scale = j.value(kLengthScale, k.length_scale);
    k.input_dim = j.value("input_dim", k.input_dim);
    return k;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }
}

namespace {

json noise_to_json(const NoiseSpec& n) {
  json j{{"distribution", std::string(to_string(n.distribution))},
         {"mc_samples", n.mc_samples},
         {"seed", n.seed},
         {"standardization_adjusted", n.standardization_adjusted},
         {"cv_rule", n.auto_escalate},
         {"max_mc_samples", n.max_mc_samples},
         {"cv_target", n.cv_target}};
  if (n.distribution == NoiseDistribution::GaussianIsotropic) j["sigma_u_sq"] = n.sigma_u_sq;
  if (n.distribution == NoiseDistribution::GaussianDiagonal) j["variances"] = n.variances;
  return j;
}

NoiseSpec noise_from_json(const json& j) {
  require_known_keys(j,
                     {"distribution", "sigma_u_sq", "variances", "mc_samples", "seed",
                      "standardization_adjusted", "cv_rule", "max_mc_samples", "cv_target"},
                     "noise");
  NoiseSpec n;
  n.distribution = noise_distribution_from_string(j.value("distribution", std::string("gaussian_isotropic")));
  if (n.distribution == NoiseDistribution::GaussianIsotropic) {
    if (!j.contains("sigma_u_sq")) throw ConfigError("noise: gaussian_isotropic needs sigma_u_sq");
    if (j.contains("variances")) throw ConfigError("noise: variances given for an isotropic distribution");
    n.sigma_u_sq = j.at("sigma_u_sq").get<double>();
  } else {
    if (!j.contains("variances")) throw ConfigError("noise: gaussian_diagonal needs variances");
    if (j.contains("sigma_u_sq")) throw ConfigError("noise: sigma_u_sq given for a diagonal distribution");
    n.variances = j.at("variances").get<std::vector<double>>();
  }
  n.mc_samples = j.value("mc_samples", n.mc_samples);
  n.seed = j.value("seed", n.seed);
  n.standardization_adjusted = j.value("standardization_adjusted", n.standardization_adjusted);
  n.auto_escalate = j.value("cv_rule", n.auto_escalate);
  n.max_mc_samples = j.value("max_mc_samples", std::max(n.max_mc_samples, n.mc_samples));
  n.cv_target = j.value("cv_target", n.cv_target);
  return n;
}

json opt_to_json(const OptConfig& o) {
  json bounds = json::object();
  for (const auto& [name, b] : o.bounds) bounds[name] = {b.lower, b.upper};
  return json{{"method", o.method == OptMethod::Grid ? "grid" : "multistart"},
              {"restarts", o.restarts},
              {"bounds", bounds},
              {"grid", o.grid},
              {"pinned", o.pinned},
              {"initial", o.initial},
              {"trend_intercept", o.trend_intercept},
              {"standardize_inputs", o.standardize_inputs},
              {"standardize_outputs", o.standardize_outputs},
              {"max_iterations", o.max_iterations},
              {"gradient_tolerance", o.gradient_tolerance},
              {"value_tolerance", o.value_tolerance},
              {"fd_step", o.fd_step},
              {"seed", o.seed},
              {"cv_probe_pairs", o.cv_probe_pairs}};
}

OptConfig opt_from_json(const json& j) {
  require_known_keys(j,
                     {"method", "restarts", "bounds", "grid", "pinned", "initial", "trend_intercept",
                      "standardize_inputs", "standardize_outputs", "max_iterations", "gradient_tolerance",
                      "value_tolerance", "fd_step", "seed", "cv_probe_pairs"},
                     "opt");
  OptConfig o;
  const auto method = j.value("method", std::string("multistart"));
  if (method == "grid") o.method = OptMethod::Grid;
  else if (method != "multistart") throw ConfigError("unknown optimization method '" + method + "'");
  o.restarts = j.value("restarts", o.restarts);
  if (j.contains("bounds")) {
    for (const auto& [name, pair] : j.at("bounds").items()) {
      const auto v = pair.get<std::vector<double>>();
      if (v.size() != 2) throw ConfigError("bounds for '" + name + "' must be [lower, upper]");
      o.bounds[name] = {v[0], v[1]};
    }
  }
  if (j.contains("grid")) o.grid = j.at("grid").get<std::map<std::string, std::vector<double>>>();
  if (j.contains("pinned")) o.pinned = j.at("pinned").get<std::map<std::string, double>>();
  if (j.contains("initial")) o.initial = j.at("initial").get<std::map<std::string, double>>();
  o.trend_intercept = j.value("trend_intercept", o.trend_intercept);
  o.standardize_inputs = j.value("standardize_inputs", o.standardize_inputs);
  o.standardize_outputs = j.value("standardize_outputs", o.standardize_outputs);
  o.max_iterations = j.value("max_iterations", o.max_iterations);
  o.gradient_tolerance = j.value("gradient_tolerance", o.gradient_tolerance);
  o.value_tolerance = j.value("value_tolerance", o.value_tolerance);
  o.fd_step = j.value("fd_step", o.fd_step);
  o.seed = j.value("seed", o.seed);
  o.cv_probe_pairs = j.value("cv_probe_pairs", o.cv_probe_pairs);
  return o;
}

json matrix_to_json(const PointSet& X) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < X.cols(); ++k) row.push_back(X(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

PointSet matrix_from_json(const json& j, Eigen::Index cols) {
  PointSet X(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const json& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw FormatError("ragged matrix in model file");
    for (Eigen::Index k = 0; k < cols; ++k) X(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  return X;
}

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json data_to_json(const Dataset& d) {
  return json{{"input_names", d.input_names},
              {"output_name", d.output_name},
              {"X", matrix_to_json(d.X)},
              {"y", vector_to_json(d.y)}};
}

Dataset data_from_json(const json& j) {
  Dataset d;
  d.input_names = j.at("input_names").get<std::vector<std::string>>();
  d.output_name = j.at("output_name").get<std::string>();
  const json& X = j.at("X");
  const Eigen::Index cols = X.empty() ? 0 : static_cast<Eigen::Index>(X.at(0).size());
  d.X = matrix_from_json(X, cols);
  d.y = vector_from_json(j.at("y"));
  d.validate();
  return d;
}

json standardization_to_json(const Standardization& s) {
  return json{{"inputs", s.inputs},
              {"outputs", s.outputs},
              {"input_mean", vector_to_json(s.input_mean)},
              {"input_scale", vector_to_json(s.input_scale)},
              {"output_mean", s.output_mean},
              {"output_scale", s.output_scale}};
}

Standardization standardization_from_json(const json& j) {
  Standardization s;
  s.inputs = j.at("inputs").get<bool>();
  s.outputs = j.at("outputs").get<bool>();
  s.input_mean = vector_from_json(j.at("input_mean"));
  s.input_scale = vector_from_json(j.at("input_scale"));
  s.output_mean = j.at("output_mean").get<double>();
  s.output_scale = j.at("output_scale").get<double>();
  return s;
}

template <class Fn>
auto config_errors(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Linear: return "Linear";
    case ModelKind::ShallowGP: return "ShallowGP";
    case ModelKind::NNGP: return "NNGP";
    case ModelKind::KALE: return "KALE";
    case ModelKind::NNGPIU: return "NNGPIU";
  }
  return "unknown";
}

ModelKind model_kind_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "linear") return ModelKind::Linear;
  if (lower == "shallowgp" || lower == "gp") return ModelKind::ShallowGP;
  if (lower == "nngp") return ModelKind::NNGP;
  if (lower == "kale") return ModelKind::KALE;
  if (lower == "nngpiu") return ModelKind::NNGPIU;
  throw ConfigError("unknown model '" + std::string(name) + "'");
}

std::string ModelConfig::display_name() const {
  return label.empty() ? std::string(to_string(kind)) : label;
}

void ModelConfig::validate() const {
  const std::string who = "model '" + display_name() + "': ";
  const bool wants_noise = kind == ModelKind::KALE || kind == ModelKind::NNGPIU;
  if (wants_noise && !noise) throw ConfigError(who + "a noise block is required");
  if (!wants_noise && noise) throw ConfigError(who + "a noise block is not allowed for this model");

  switch (kind) {
    case ModelKind::Linear:
      if (opt.method == OptMethod::Grid) throw ConfigError(who + "the linear model has no hyperparameters to search");
      break;
    case ModelKind::ShallowGP:
    case ModelKind::KALE:
      if (!kernel.is_shallow()) {
        throw ConfigError(who + "needs a shallow kernel (rbf or matern12), got " +
                          std::string(nngpiu::to_string(kernel.family)));
      }
      break;
    case ModelKind::NNGP:
    case ModelKind::NNGPIU:
      if (!kernel.is_composite() || kernel.family == KernelFamily::Base) {
        throw ConfigError(who + "needs a composite kernel (arcsin or arccos), got " +
                          std::string(nngpiu::to_string(kernel.family)));
      }
      if (kernel.depth < 1) throw ConfigError(who + "composite kernels need depth >= 1");
      break;
  }
  try {
    kernel.validate();
  } catch (const InputError& e) {
    throw ConfigError(who + e.what());
  }
  opt.validate();
  if (noise) noise->validate(noise->distribution == NoiseDistribution::GaussianDiagonal
                                 ? static_cast<int>(noise->variances.size())
                                 : kernel.input_dim);

  if (kind != ModelKind::Linear) {
    auto allowed = kernel_param_names(kernel);
    allowed.emplace_back(kSigmaEps);
    auto check = [&](const std::string& name, const char* block) {
      if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
        throw ConfigError(who + "hyperparameter '" + name + "' in " + block + " does not belong to the " +
                          std::string(nngpiu::to_string(kernel.family)) + " kernel");
      }
    };
    for (const auto& [name, v] : opt.pinned) check(name, "pinned");
    for (const auto& [name, v] : opt.bounds) check(name, "bounds");
    for (const auto& [name, v] : opt.grid) check(name, "grid");
    for (const auto& [name, v] : opt.initial) check(name, "initial");
  }
}

FittedModel build_and_fit(const ModelConfig& config, const Dataset& data) {
  config.validate();
  data.validate();
  FittedModel out;
  out.config = config;
  if (config.kind == ModelKind::Linear) {
    out.model = fit_linear(data, config.opt);
    return out;
  }
  KernelSpec kernel = config.kernel;
  kernel.input_dim = data.input_dim();
  out.config.kernel.input_dim = kernel.input_dim;
  out.model = fit(data, kernel, config.noise, config.opt);
  return out;
}

void require_known_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

ModelConfig model_config_from_json(const json& j) {
  return config_errors([&] {
    require_known_keys(j, {"model", "label", "kernel", "noise", "trend", "opt"}, "model config");
    ModelConfig c;
    c.kind = model_kind_from_string(j.at("model").get<std::string>());
    c.label = j.value("label", std::string());
    if (j.contains("kernel")) {
      c.kernel = kernel_from_json(j.at("kernel"));
    } else if (c.kind == ModelKind::ShallowGP || c.kind == ModelKind::KALE) {
      c.kernel.family = KernelFamily::RBF;
    }
    if (j.contains("noise") && !j.at("noise").is_null()) c.noise = noise_from_json(j.at("noise"));
    if (j.contains("opt")) c.opt = opt_from_json(j.at("opt"));
    if (j.contains("trend")) c.opt.trend = trend_from_json(j.at("trend"));
    if (c.kind == ModelKind::Linear) c.opt.trend = TrendMode::TwoStage;
    c.validate();
    return c;
  });
}

json to_json(const ModelConfig& c) {
  json j{{"model", std::string(to_string(c.kind))},
         {"label", c.display_name()},
         {"kernel", kernel_to_json(c.kernel)},
         {"trend", std::string(to_string(c.opt.trend))},
         {"opt", opt_to_json(c.opt)}};
  if (c.noise) j["noise"] = noise_to_json(*c.noise);
  return j;
}

std::string crc32_hex(std::string_view bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(crc.checksum()));
  return buf;
}

std::string serialize(const FittedModel& fitted) {
  const TrainedModel& m = fitted.model;
  if (!m.data) throw InputError("serialize: model has no training data");
  if (m.noise && m.noise->distribution == NoiseDistribution::Custom) {
    throw FormatError("serialize: models with a custom noise sampler cannot be saved");
  }
  json data = data_to_json(*m.data);
  json hyper{{kSigmaEps, m.sigma_eps_sq}};
  if (m.gp_term) {
    const json kernel = kernel_to_json(m.kernel);
    for (const auto& [k, v] : kernel.items()) {
      if (k != "family" && k != "depth") hyper[k] = v;
    }
  }
  json train_log = json::array();
  for (const auto& r : m.train_log) {
    train_log.push_back(json{{"init", r.init},
                             {"result", r.result},
                             {"log_likelihood", std::isfinite(r.log_likelihood) ? json(r.log_likelihood) : json()},
                             {"ok", r.ok},
                             {"message", r.message}});
  }
  json doc{{"format", kFormatName},
           {"version", kModelFormatVersion},
           {"config", to_json(fitted.config)},
           {"input_dim", m.data->input_dim()},
           {"hyperparameters", hyper},
           {"noise", m.noise ? noise_to_json(*m.noise) : json()},
           {"trend_coeffs", vector_to_json(m.trend_coeffs)},
           {"standardization", standardization_to_json(m.standardization)},
           {"log_likelihood", m.log_likelihood},
           {"train_log", train_log},
           {"training_data", data},
           {"training_data_crc32", crc32_hex(data.dump())}};
  return doc.dump(1) + "\n";
}

FittedModel deserialize(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", std::string()) != kFormatName) {
      throw FormatError("not a model file");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw FormatError("model file version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kModelFormatVersion) + ")");
    }
    const json& data = doc.at("training_data");
    const std::string crc = crc32_hex(data.dump());
    if (crc != doc.at("training_data_crc32").get<std::string>()) {
      throw FormatError("training data checksum mismatch (file " +
                        doc.at("training_data_crc32").get<std::string>() + ", computed " + crc + ")");
    }

    FittedModel out;
    out.config = model_config_from_json(doc.at("config"));
    TrainedModel& m = out.model;
    m.data = std::make_shared<const Dataset>(data_from_json(data));
    m.standardization = standardization_from_json(doc.at("standardization"));
    m.trend = out.config.opt.trend;
    m.trend_intercept = out.config.opt.trend_intercept;
    m.gp_term = out.config.kind != ModelKind::Linear;
    m.kernel = out.config.kernel;
    m.kernel.input_dim = doc.at("input_dim").get<int>();
    const json& hyper = doc.at("hyperparameters");
    m.sigma_eps_sq = hyper.at(kSigmaEps).get<double>();
    m.kernel.sigma_b_sq = hyper.value(kSigmaB, m.kernel.sigma_b_sq);
    m.kernel.sigma_w_sq = hyper.value(kSigmaW, m.kernel.sigma_w_sq);
    m.kernel.signal_var = hyper.value(kSignalVar, m.kernel.signal_var);
    m.kernel.length_scale = hyper.value(kLengthScale, m.kernel.length_scale);
    if (!doc.at("noise").is_null()) m.noise = noise_from_json(doc.at("noise"));
    for (const auto& r : doc.at("train_log")) {
      RestartRecord rec;
      rec.init = r.at("init").get<std::map<std::string, double>>();
      rec.result = r.at("result").get<std::map<std::string, double>>();
      rec.log_likelihood = r.at("log_likelihood").is_null() ? -std::numeric_limits<double>::infinity()
                                                            : r.at("log_likelihood").get<double>();
      rec.ok = r.at("ok").get<bool>();
      rec.message = r.at("message").get<std::string>();
      m.train_log.push_back(std::move(rec));
    }
    if (m.data->input_dim() != m.kernel.input_dim) throw FormatError("model input_dim does not match its data");
    condition(m);
    return out;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("model file holds an invalid config: ") + e.what());
  }
}

void save_model(const std::string& path, const FittedModel& fitted) {
  const std::string text = serialize(fitted);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

FittedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize(buffer.str());
}

}  // namespace nngpiu

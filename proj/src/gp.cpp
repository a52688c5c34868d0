#include "nngpiu/gp.hpp"

#include "nngpiu/errors.hpp"
#include "nngpiu/log.hpp"
#include "nngpiu/optimize.hpp"

#include <Eigen/Dense>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace nngpiu {

namespace {

const std::set<std::string>& known_params() {
  static const std::set<std::string> names{kSigmaB, kSigmaW, kSignalVar, kLengthScale, kSigmaEps};
  return names;
}

std::vector<std::string> kernel_param_names(const KernelSpec& kernel) {
  if (kernel.is_composite()) return {kSigmaB, kSigmaW};
  return {kSignalVar, kLengthScale};
}

void set_param(KernelSpec& kernel, const std::string& name, double value) {
  if (name == kSigmaB) kernel.sigma_b_sq = value;
  else if (name == kSigmaW) kernel.sigma_w_sq = value;
  else if (name == kSignalVar) kernel.signal_var = value;
  else if (name == kLengthScale) kernel.length_scale = value;
}

double log_likelihood_from(const Factorization& f, const Eigen::VectorXd& r) {
  const Eigen::VectorXd v = f.llt.matrixL().solve(r);
  const Eigen::MatrixXd& L = f.llt.matrixLLT();
  double log_det_half = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) log_det_half += std::log(L(i, i));
  const auto n = static_cast<double>(r.size());
  return -0.5 * v.squaredNorm() - log_det_half - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd gls_from(const Factorization& f, const Eigen::MatrixXd& H, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd AinvH = f.llt.solve(H);
  const Eigen::MatrixXd M = H.transpose() * AinvH;
  return M.completeOrthogonalDecomposition().solve(AinvH.transpose() * y);
}

Eigen::VectorXd ols(const Eigen::MatrixXd& H, const Eigen::VectorXd& y) {
  return H.completeOrthogonalDecomposition().solve(y);
}

double pinned_sigma_eps_model(const OptConfig& opt, const Standardization& st) {
  const auto it = opt.pinned.find(kSigmaEps);
  if (it == opt.pinned.end()) return std::numeric_limits<double>::quiet_NaN();
  return it->second / (st.output_scale * st.output_scale);
}

}  // namespace

ParamBounds default_bounds(const std::string& name) {
  if (name == kLengthScale) return {1e-2, 1e2};
  if (name == kSigmaEps) return {1e-6, 1.0};
  if (name == kSigmaB || name == kSigmaW || name == kSignalVar) return {1e-3, 1e3};
  throw ConfigError("unknown hyperparameter '" + name + "'");
}

void OptConfig::validate() const {
  if (restarts < 1) throw ConfigError("restarts must be at least 1");
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  if (!(fd_step > 0.0)) throw ConfigError("fd_step must be positive");
  auto check_name = [](const std::string& name) {
    if (!known_params().contains(name)) throw ConfigError("unknown hyperparameter '" + name + "'");
  };
  for (const auto& [name, b] : bounds) {
    check_name(name);
    if (!(b.lower > 0.0) || !(b.upper >= b.lower) || !std::isfinite(b.upper)) {
      throw ConfigError("invalid bounds for '" + name + "'");
    }
  }
  for (const auto& [name, values] : grid) {
    check_name(name);
    if (values.empty()) throw ConfigError("empty grid axis for '" + name + "'");
    for (double v : values) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("grid values must be positive");
    }
  }
  for (const auto& [name, v] : pinned) {
    check_name(name);
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("pinned '" + name + "' must be nonnegative");
  }
  for (const auto& [name, v] : initial) {
    check_name(name);
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("initial '" + name + "' must be positive");
  }
}

Eigen::MatrixXd trend_design(const PointSet& X, bool intercept) {
  const Eigen::Index offset = intercept ? 1 : 0;
  Eigen::MatrixXd H(X.rows(), X.cols() + offset);
  if (intercept) H.col(0).setOnes();
  H.rightCols(X.cols()) = X;
  return H;
}

double log_pseudo_likelihood(GramMatrix& K, const Eigen::VectorXd& y, double sigma_eps_sq) {
  if (K.values.rows() != y.size() || K.values.cols() != y.size()) {
    throw InputError("log_pseudo_likelihood: Gram matrix and outputs disagree in size");
  }
  if (!(sigma_eps_sq >= 0.0)) throw InputError("sigma_eps_sq must be nonnegative");
  const Factorization f = factorize(K.values, sigma_eps_sq);
  K.jitter_applied = f.jitter;
  return log_likelihood_from(f, y);
}

Eigen::VectorXd gls_coefficients(const Eigen::MatrixXd& K, double sigma_eps_sq, const Eigen::MatrixXd& H,
                                 const Eigen::VectorXd& y) {
  if (H.rows() != y.size() || K.rows() != y.size()) throw InputError("gls_coefficients: size mismatch");
  return gls_from(factorize(K, sigma_eps_sq), H, y);
}

PseudoLikelihood::PseudoLikelihood(Dataset data, KernelSpec kernel, std::optional<NoiseSample> noise,
                                   const OptConfig& opt, double pinned_sigma_eps_sq_model)
    : data_(std::move(data)), kernel_(kernel), opt_(opt) {
  for (const auto& name : kernel_param_names(kernel_)) {
    if (const auto it = opt_.pinned.find(name); it != opt_.pinned.end()) {
      set_param(kernel_, name, it->second);
      fixed_[name] = it->second;
    } else {
      free_names_.push_back(name);
    }
  }
  if (std::isnan(pinned_sigma_eps_sq_model)) {
    free_names_.push_back(kSigmaEps);
  } else {
    fixed_[kSigmaEps] = pinned_sigma_eps_sq_model;
  }
  for (const auto& name : free_names_) {
    const auto it = opt_.bounds.find(name);
    free_bounds_.push_back(it != opt_.bounds.end() ? it->second : default_bounds(name));
  }
  assembler_ = std::make_shared<const GramAssembler>(data_.X, std::move(noise), kernel_.is_composite());
  target_ = data_.y;
  if (opt_.trend != TrendMode::None) {
    H_ = trend_design(data_.X, opt_.trend_intercept);
    if (opt_.trend == TrendMode::TwoStage) target_ = data_.y - H_ * ols(H_, data_.y);
  }
}

Eigen::VectorXd PseudoLikelihood::lower() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(free_bounds_.size()));
  for (std::size_t i = 0; i < free_bounds_.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = std::log(free_bounds_[i].lower);
  }
  return out;
}

Eigen::VectorXd PseudoLikelihood::upper() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(free_bounds_.size()));
  for (std::size_t i = 0; i < free_bounds_.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = std::log(free_bounds_[i].upper);
  }
  return out;
}

KernelSpec PseudoLikelihood::kernel_at(const Eigen::VectorXd& log_theta) const {
  KernelSpec k = kernel_;
  for (std::size_t i = 0; i < free_names_.size(); ++i) {
    set_param(k, free_names_[i], std::exp(log_theta(static_cast<Eigen::Index>(i))));
  }
  return k;
}

double PseudoLikelihood::sigma_eps_sq_at(const Eigen::VectorXd& log_theta) const {
  for (std::size_t i = 0; i < free_names_.size(); ++i) {
    if (free_names_[i] == kSigmaEps) return std::exp(log_theta(static_cast<Eigen::Index>(i)));
  }
  return fixed_.at(kSigmaEps);
}

std::map<std::string, double> PseudoLikelihood::named(const Eigen::VectorXd& log_theta) const {
  std::map<std::string, double> out = fixed_;
  for (std::size_t i = 0; i < free_names_.size(); ++i) {
    out[free_names_[i]] = std::exp(log_theta(static_cast<Eigen::Index>(i)));
  }
  return out;
}

double PseudoLikelihood::operator()(const Eigen::VectorXd& log_theta) const {
  if (log_theta.size() != static_cast<Eigen::Index>(free_names_.size())) {
    throw InputError("PseudoLikelihood: wrong number of parameters");
  }
  try {
    const KernelSpec k = kernel_at(log_theta);
    const Factorization f = factorize(train_gram(k), sigma_eps_sq_at(log_theta));
    if (opt_.trend == TrendMode::GLS) {
      const Eigen::VectorXd beta = gls_from(f, H_, target_);
      return log_likelihood_from(f, target_ - H_ * beta);
    }
    return log_likelihood_from(f, target_);
  } catch (const NumericError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

const Eigen::MatrixXd& PseudoLikelihood::train_gram(const KernelSpec& k) const {
  // Moves in sigma_eps_sq alone (half the gradient probes) reuse the Gram.
  const std::array<double, 4> key{k.sigma_b_sq, k.sigma_w_sq, k.signal_var, k.length_scale};
  if (!cache_valid_ || key != cache_key_) {
    cache_valid_ = false;
    cached_gram_ = assembler_->train(k);
    cache_key_ = key;
    cache_valid_ = true;
  }
  return cached_gram_;
}

TrainedModel fit(const Dataset& data, const KernelSpec& kernel, const std::optional<NoiseSpec>& noise,
                 const OptConfig& opt) {
  data.validate();
  kernel.validate();
  opt.validate();
  if (data.size() < 2) throw InputError("fit needs at least two observations");
  if (data.input_dim() != kernel.input_dim) {
    throw InputError("dataset has " + std::to_string(data.input_dim()) + " inputs, kernel expects " +
                     std::to_string(kernel.input_dim));
  }

  TrainedModel model;
  model.standardization = Standardization::from_data(data, opt.standardize_inputs, opt.standardize_outputs);
  model.data = std::make_shared<const Dataset>(data);
  model.trend = opt.trend;
  model.trend_intercept = opt.trend_intercept;
  const Dataset model_data = model.standardization.apply(data);

  std::optional<NoiseSample> sample;
  // Zero-variance noise makes every adjusted entry equal the plain kernel, so
  // the plain kernel is used directly.
  if (noise && noise->is_degenerate()) model.noise = *noise;
  if (noise && !noise->is_degenerate()) {
    KernelSpec probe_kernel = kernel;
    for (const auto& [name, value] : opt.pinned) set_param(probe_kernel, name, value);
    const auto probes = default_probe_pairs(model_data.X, opt.cv_probe_pairs, noise->seed ^ 0x5bd1e995ULL);
    std::span<const double> scales;
    if (opt.standardize_inputs) {
      scales = {model.standardization.input_scale.data(),
                static_cast<std::size_t>(model.standardization.input_scale.size())};
    }
    sample = draw_noise_with_cv_rule(*noise, probe_kernel, probes, scales);
    model.noise = *noise;
    model.noise->mc_samples = sample->mc_samples();
    model.noise_sample = sample;
  }

  const PseudoLikelihood objective(model_data, kernel, sample, opt,
                                   pinned_sigma_eps_model(opt, model.standardization));
  const auto& names = objective.free_names();
  const Eigen::VectorXd lo = objective.lower();
  const Eigen::VectorXd hi = objective.upper();

  Eigen::VectorXd best;
  double best_value = -std::numeric_limits<double>::infinity();

  if (names.empty()) {
    best = Eigen::VectorXd(0);
    best_value = objective(best);
  } else if (opt.method == OptMethod::Grid) {
    std::vector<std::vector<double>> axes;
    for (const auto& name : names) {
      const auto it = opt.grid.find(name);
      if (it == opt.grid.end()) throw ConfigError("grid search needs an axis for '" + name + "'");
      axes.push_back(it->second);
    }
    std::vector<std::size_t> idx(axes.size(), 0);
    Eigen::VectorXd point(static_cast<Eigen::Index>(axes.size()));
    while (true) {
      for (std::size_t k = 0; k < axes.size(); ++k) {
        point(static_cast<Eigen::Index>(k)) = std::log(axes[k][idx[k]]);
      }
      const double value = objective(point);
      RestartRecord rec;
      rec.init = objective.named(point);
      rec.result = rec.init;
      rec.log_likelihood = value;
      rec.ok = std::isfinite(value);
      if (!rec.ok) rec.message = "likelihood not finite";
      model.train_log.push_back(rec);
      if (value > best_value) {
        best_value = value;
        best = point;
      }
      std::size_t k = 0;
      while (k < axes.size() && ++idx[k] == axes[k].size()) idx[k++] = 0;
      if (k == axes.size()) break;
    }
  } else {
    boost::random::mt19937_64 gen(opt.seed);
    BfgsOptions bfgs;
    bfgs.max_iterations = opt.max_iterations;
    bfgs.gradient_tolerance = opt.gradient_tolerance;
    bfgs.value_tolerance = opt.value_tolerance;
    bfgs.fd_step = opt.fd_step;
    for (int r = 0; r < opt.restarts; ++r) {
      Eigen::VectorXd start(static_cast<Eigen::Index>(names.size()));
      for (std::size_t k = 0; k < names.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        boost::random::uniform_real_distribution<double> u(lo(i), hi(i));
        start(i) = u(gen);
        if (r == 0) {
          if (const auto it = opt.initial.find(names[k]); it != opt.initial.end()) {
            start(i) = std::log(it->second);
          }
        }
      }
      RestartRecord rec;
      rec.init = objective.named(start);
      try {
        const OptimizeResult res = maximize_bfgs_box(objective, start, lo, hi, bfgs);
        rec.result = objective.named(res.x);
        rec.log_likelihood = res.value;
        rec.ok = std::isfinite(res.value);
        rec.message = res.message;
        if (rec.ok && res.value > best_value) {
          best_value = res.value;
          best = res.x;
        }
      } catch (const Error& e) {
        rec.ok = false;
        rec.message = e.what();
      }
      model.train_log.push_back(rec);
    }
  }

  if (!std::isfinite(best_value)) {
    std::string diag = "all restarts failed:";
    for (std::size_t i = 0; i < model.train_log.size(); ++i) {
      diag += " [" + std::to_string(i) + "] " + model.train_log[i].message + ";";
    }
    throw TrainingError(diag);
  }

  model.kernel = objective.kernel_at(best);
  model.sigma_eps_sq = objective.sigma_eps_sq_at(best);
  model.assembler = objective.assembler();
  condition(model);
  return model;
}

TrainedModel fit_linear(const Dataset& data, const OptConfig& opt) {
  data.validate();
  if (data.size() < 1) throw InputError("linear fit needs at least one observation");
  TrainedModel model;
  model.gp_term = false;
  model.trend = TrendMode::TwoStage;
  model.trend_intercept = opt.trend_intercept;
  model.standardization = Standardization::from_data(data, opt.standardize_inputs, opt.standardize_outputs);
  model.data = std::make_shared<const Dataset>(data);
  model.kernel.input_dim = data.input_dim();
  condition(model);
  return model;
}

void condition(TrainedModel& model) {
  if (!model.data) throw InputError("model has no training data");
  const Dataset model_data = model.standardization.apply(*model.data);
  const Eigen::Index n = model_data.size();

  if (!model.gp_term) {
    const Eigen::MatrixXd H = trend_design(model_data.X, model.trend_intercept);
    model.trend_coeffs = ols(H, model_data.y);
    const Eigen::VectorXd resid = model_data.y - H * model.trend_coeffs;
    const Eigen::Index dof = std::max<Eigen::Index>(1, n - H.cols());
    model.sigma_eps_sq = resid.squaredNorm() / static_cast<double>(dof);
    model.trend_gram_inverse = (H.transpose() * H).completeOrthogonalDecomposition().pseudoInverse();
    model.log_likelihood = 0.0;
    return;
  }

  if (model.noise && !model.noise->is_degenerate() && !model.noise_sample) {
    std::span<const double> scales;
    if (model.standardization.inputs) {
      scales = {model.standardization.input_scale.data(),
                static_cast<std::size_t>(model.standardization.input_scale.size())};
    }
    model.noise_sample = draw_noise(*model.noise, model.kernel.input_dim, scales);
  }
  if (!model.assembler) {
    model.assembler =
        std::make_shared<const GramAssembler>(model_data.X, model.noise_sample, model.kernel.is_composite());
  }

  const Eigen::MatrixXd K = model.assembler->train(model.kernel);
  const Factorization f = factorize(K, model.sigma_eps_sq);
  model.jitter = f.jitter;
  model.chol_factor = f.llt.matrixL();

  Eigen::VectorXd resid = model_data.y;
  if (model.trend != TrendMode::None) {
    const Eigen::MatrixXd H = trend_design(model_data.X, model.trend_intercept);
    model.trend_coeffs = model.trend == TrendMode::GLS ? gls_from(f, H, model_data.y) : ols(H, model_data.y);
    resid -= H * model.trend_coeffs;
  } else {
    model.trend_coeffs.resize(0);
  }
  model.alpha = f.llt.solve(resid);
  model.log_likelihood = log_likelihood_from(f, resid);
}

std::vector<Prediction> predict(const TrainedModel& model, const PointSet& Xstar) {
  const int d = model.data ? model.data->input_dim() : model.kernel.input_dim;
  if (Xstar.cols() != d) {
    throw InputError("prediction inputs have " + std::to_string(Xstar.cols()) + " columns, model expects " +
                     std::to_string(d));
  }
  const PointSet Xs = model.standardization.apply_inputs(Xstar);
  const Standardization& st = model.standardization;
  std::vector<Prediction> out(static_cast<std::size_t>(Xs.rows()));
  if (Xs.rows() == 0) return out;

  auto trend_at = [&](Eigen::Index s, Eigen::VectorXd& h) {
    h.resize(model.trend_coeffs.size());
    if (h.size() == 0) return 0.0;
    const Eigen::Index offset = model.trend_intercept ? 1 : 0;
    if (model.trend_intercept) h(0) = 1.0;
    for (Eigen::Index k = 0; k < Xs.cols(); ++k) h(offset + k) = Xs(s, k);
    return h.dot(model.trend_coeffs);
  };

  if (!model.gp_term) {
    for (Eigen::Index s = 0; s < Xs.rows(); ++s) {
      Eigen::VectorXd h;
      const double mean = trend_at(s, h);
      const double var = std::max(0.0, model.sigma_eps_sq * h.dot(model.trend_gram_inverse * h));
      out[static_cast<std::size_t>(s)] = {st.output_mean + st.output_scale * mean,
                                          st.output_scale * st.output_scale * var};
    }
    return out;
  }

  const Eigen::MatrixXd kstar = model.assembler->cross(Xs, model.kernel);
  const Eigen::VectorXd kss = model.assembler->test_diagonal(Xs, model.kernel);
  const auto L = model.chol_factor.triangularView<Eigen::Lower>();
  Eigen::Index clamped = 0;
  double worst = 0.0;
  for (Eigen::Index s = 0; s < Xs.rows(); ++s) {
    const Eigen::VectorXd k = kstar.col(s);
    Eigen::VectorXd h;
    const double mean = trend_at(s, h) + k.dot(model.alpha);
    const Eigen::VectorXd v = L.solve(k);
    double var = kss(s) - v.squaredNorm();
    if (var < 0.0) {
      if (var < -1e-8 * std::abs(kss(s))) {
        ++clamped;
        worst = std::min(worst, var);
      }
      var = 0.0;
    }
    out[static_cast<std::size_t>(s)] = {st.output_mean + st.output_scale * mean,
                                        st.output_scale * st.output_scale * var};
  }
  if (clamped > 0) {
    log_warn(std::to_string(clamped) + " negative predictive variance(s) clamped to 0 (most negative " +
             std::to_string(worst) + " in model units)");
  }
  return out;
}

Prediction predict(const TrainedModel& model, Point xstar) {
  PointSet row(1, static_cast<Eigen::Index>(xstar.size()));
  for (std::size_t k = 0; k < xstar.size(); ++k) row(0, static_cast<Eigen::Index>(k)) = xstar[k];
  return predict(model, row).front();
}

Eigen::VectorXd blup_weights(const TrainedModel& model, Point xstar) {
  if (!model.gp_term) throw InputError("blup_weights: model has no stochastic term");
  PointSet row(1, static_cast<Eigen::Index>(xstar.size()));
  for (std::size_t k = 0; k < xstar.size(); ++k) row(0, static_cast<Eigen::Index>(k)) = xstar[k];
  if (row.cols() != model.data->input_dim()) throw InputError("blup_weights: dimension mismatch");
  const PointSet xs = model.standardization.apply_inputs(row);
  const Eigen::VectorXd k = model.assembler->cross(xs, model.kernel).col(0);
  const auto L = model.chol_factor.triangularView<Eigen::Lower>();
  return L.transpose().solve(L.solve(k));
}

}  // namespace nngpiu

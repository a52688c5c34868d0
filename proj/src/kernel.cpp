#include "nngpiu/kernel.hpp"

#include "kernel_detail.hpp"
#include "nngpiu/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nngpiu {

namespace {

double clamp_unit(double ratio, const char* where) {
  if (!std::isfinite(ratio)) {
    throw NumericError(std::string(where) + ": non-finite normalized covariance");
  }
  if (ratio > 1.0 + kClampTolerance || ratio < -1.0 - kClampTolerance) {
    throw NumericError(std::string(where) +
                       ": normalized covariance outside [-1, 1]; inputs are not a valid covariance");
  }
  return std::clamp(ratio, -1.0, 1.0);
}

}  // namespace

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Base: return "base";
    case KernelFamily::ArcCosine: return "arccos";
    case KernelFamily::ArcSine: return "arcsin";
    case KernelFamily::RBF: return "rbf";
    case KernelFamily::MaternHalf: return "matern12";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view name) {
  if (name == "base") return KernelFamily::Base;
  if (name == "arccos") return KernelFamily::ArcCosine;
  if (name == "arcsin") return KernelFamily::ArcSine;
  if (name == "rbf") return KernelFamily::RBF;
  if (name == "matern12") return KernelFamily::MaternHalf;
  throw ConfigError("unknown kernel family '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
  if (input_dim < 1) throw InputError("kernel input_dim must be positive");
  if (depth < 0) throw InputError("kernel depth must be nonnegative");
  if (!(sigma_w_sq > 0.0) || !std::isfinite(sigma_w_sq)) {
    throw InputError("sigma_w_sq must be positive");
  }
  if (!(sigma_b_sq >= 0.0) || !std::isfinite(sigma_b_sq)) {
    throw InputError("sigma_b_sq must be nonnegative");
  }
  if (!(length_scale > 0.0) || !std::isfinite(length_scale)) {
    throw InputError("length_scale must be positive");
  }
  if (!(signal_var > 0.0) || !std::isfinite(signal_var)) {
    throw InputError("signal_var must be positive");
  }
}

namespace detail {

void check_dim(Point x, const KernelSpec& spec) {
  if (static_cast<int>(x.size()) != spec.input_dim) {
    throw InputError("point has dimension " + std::to_string(x.size()) + ", kernel expects " +
                     std::to_string(spec.input_dim));
  }
}

DiagonalCache::DiagonalCache(const KernelSpec& spec, const PointSet& points)
    : stride_(spec.is_composite() ? spec.depth + 1 : 1),
      values_(static_cast<std::size_t>(points.rows() * stride_)),
      norms_(static_cast<std::size_t>(points.rows() * (stride_ - 1))) {
  for (Eigen::Index a = 0; a < points.rows(); ++a) {
    double* out = values_.data() + a * stride_;
    double* norm = norms_.data() + a * (stride_ - 1);
    const Point p = row_of(points, a);
    if (!spec.is_composite()) {
      out[0] = spec.signal_var;
      continue;
    }
    out[0] = base_cov(p, p, spec);
    for (Eigen::Index l = 1; l < stride_; ++l) {
      out[l] = layer_map_diagonal(out[l - 1], spec);
      norm[l - 1] = spec.family == KernelFamily::ArcSine ? 1.0 / std::sqrt(1.0 + 2.0 * out[l - 1])
                                                         : std::sqrt(out[l - 1]);
    }
  }
}

}  // namespace detail

double base_cov(Point x, Point x2, const KernelSpec& spec) {
  detail::check_dim(x, spec);
  detail::check_dim(x2, spec);
  return spec.sigma_b_sq + spec.sigma_w_sq / spec.input_dim * detail::dot(x, x2);
}

double arccos_layer(double c_xx, double c_x2x2, double c_xx2, const KernelSpec& spec) {
  if (!(c_xx > 0.0) || !(c_x2x2 > 0.0)) {
    throw NumericError("arccos_layer: diagonal covariances must be positive");
  }
  const double norm = std::sqrt(c_xx * c_x2x2);
  const double cos_t = clamp_unit(c_xx2 / norm, "arccos_layer");
  const double theta = std::acos(cos_t);
  const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
  return spec.sigma_b_sq + spec.sigma_w_sq / (2.0 * std::numbers::pi) * norm *
                               (sin_t + (std::numbers::pi - theta) * cos_t);
}

double arcsin_layer(double c_xx, double c_x2x2, double c_xx2, const KernelSpec& spec) {
  const double da = 1.0 + 2.0 * c_xx;
  const double db = 1.0 + 2.0 * c_x2x2;
  if (!(da > 0.0) || !(db > 0.0)) {
    throw NumericError("arcsin_layer: 1 + 2c must be positive");
  }
  const double ratio = clamp_unit(2.0 * c_xx2 / std::sqrt(da * db), "arcsin_layer");
  return spec.sigma_b_sq + 2.0 * spec.sigma_w_sq / std::numbers::pi * std::asin(ratio);
}

double layer_map_diagonal(double c_xx, const KernelSpec& spec) {
  switch (spec.family) {
    case KernelFamily::ArcCosine:
      if (!(c_xx > 0.0)) throw NumericError("arccos_layer: diagonal covariance must be positive");
      // theta = 0: sin 0 + pi cos 0 = pi.
      return spec.sigma_b_sq + 0.5 * spec.sigma_w_sq * c_xx;
    case KernelFamily::ArcSine: {
      const double d = 1.0 + 2.0 * c_xx;
      if (!(d > 0.0)) throw NumericError("arcsin_layer: 1 + 2c must be positive");
      return spec.sigma_b_sq +
             2.0 * spec.sigma_w_sq / std::numbers::pi * std::asin(std::min(1.0, 2.0 * c_xx / d));
    }
    default:
      return c_xx;
  }
}

double composite_cov(Point x, Point x2, const KernelSpec& spec) {
  if (!spec.is_composite()) throw InputError("composite_cov requires a composite kernel family");
  double c_xx = base_cov(x, x, spec);
  double c_x2x2 = base_cov(x2, x2, spec);
  double c_xx2 = base_cov(x, x2, spec);
  if (spec.family == KernelFamily::Base) return c_xx2;
  for (int l = 1; l <= spec.depth; ++l) {
    if (spec.family == KernelFamily::ArcCosine) {
      const double next_xx2 = arccos_layer(c_xx, c_x2x2, c_xx2, spec);
      const double next_xx = arccos_layer(c_xx, c_xx, c_xx, spec);
      const double next_x2x2 = arccos_layer(c_x2x2, c_x2x2, c_x2x2, spec);
      c_xx = next_xx;
      c_x2x2 = next_x2x2;
      c_xx2 = next_xx2;
    } else {
      const double next_xx2 = arcsin_layer(c_xx, c_x2x2, c_xx2, spec);
      const double next_xx = arcsin_layer(c_xx, c_xx, c_xx, spec);
      const double next_x2x2 = arcsin_layer(c_x2x2, c_x2x2, c_x2x2, spec);
      c_xx = next_xx;
      c_x2x2 = next_x2x2;
      c_xx2 = next_xx2;
    }
  }
  return c_xx2;
}

double composite_diag(Point x, const KernelSpec& spec) {
  if (!spec.is_composite()) throw InputError("composite_diag requires a composite kernel family");
  double c = base_cov(x, x, spec);
  if (spec.family == KernelFamily::Base) return c;
  for (int l = 1; l <= spec.depth; ++l) c = layer_map_diagonal(c, spec);
  return c;
}

double shallow_cov(Point x, Point x2, const KernelSpec& spec) {
  if (!spec.is_shallow()) throw InputError("shallow_cov requires the RBF or Matern-1/2 family");
  detail::check_dim(x, spec);
  detail::check_dim(x2, spec);
  const double r2 = detail::squared_distance(x, x2);
  if (spec.family == KernelFamily::RBF) {
    return spec.signal_var * std::exp(-r2 / (2.0 * spec.length_scale * spec.length_scale));
  }
  return spec.signal_var * std::exp(-std::sqrt(r2) / spec.length_scale);
}

double kernel_value(Point x, Point x2, const KernelSpec& spec) {
  return spec.is_composite() ? composite_cov(x, x2, spec) : shallow_cov(x, x2, spec);
}

double kernel_diag(Point x, const KernelSpec& spec) {
  if (spec.is_composite()) return composite_diag(x, spec);
  detail::check_dim(x, spec);
  return spec.signal_var;
}

GramMatrix gram(const PointSet& X, const KernelSpec& spec) {
  if (X.cols() != spec.input_dim) {
    throw InputError("gram: input has " + std::to_string(X.cols()) + " columns, kernel expects " +
                     std::to_string(spec.input_dim));
  }
  const Eigen::Index n = X.rows();
  const detail::DiagonalCache diag(spec, X);
  const detail::PairConstants k(spec);
  GramMatrix out;
  out.values.resize(n, n);
  bool bad = false;
  detail::dispatch(spec.family, [&](auto family) {
    constexpr KernelFamily F = decltype(family)::value;
#pragma omp parallel for schedule(dynamic) reduction(|| : bad)
    for (Eigen::Index i = 0; i < n; ++i) {
      out.values(i, i) = diag.top(i);
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double g = detail::geometry(row_of(X, i), row_of(X, j), spec);
        out.values(i, j) = detail::pair_value<F>(g, diag.norm(i), diag.norm(j), k, bad);
      }
    }
  });
  if (bad) detail::throw_out_of_range();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) out.values(j, i) = out.values(i, j);
  }
  return out;
}

Eigen::MatrixXd gram(const PointSet& X, const PointSet& X2, const KernelSpec& spec) {
  if (X.cols() != spec.input_dim || X2.cols() != spec.input_dim) {
    throw InputError("gram: input column count does not match kernel input_dim");
  }
  const detail::DiagonalCache diag_a(spec, X);
  const detail::DiagonalCache diag_b(spec, X2);
  const detail::PairConstants k(spec);
  Eigen::MatrixXd out(X.rows(), X2.rows());
  bool bad = false;
  detail::dispatch(spec.family, [&](auto family) {
    constexpr KernelFamily F = decltype(family)::value;
#pragma omp parallel for schedule(static) reduction(|| : bad)
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      for (Eigen::Index j = 0; j < X2.rows(); ++j) {
        const double g = detail::geometry(row_of(X, i), row_of(X2, j), spec);
        out(i, j) = detail::pair_value<F>(g, diag_a.norm(i), diag_b.norm(j), k, bad);
      }
    }
  });
  if (bad) detail::throw_out_of_range();
  return out;
}

Factorization factorize(const Eigen::MatrixXd& A, double nugget) {
  if (!A.allFinite()) throw NumericError("factorize: matrix has non-finite entries");
  Factorization f;
  Eigen::MatrixXd work = A;
  work.diagonal().array() += nugget;
  f.llt.compute(work);
  if (f.llt.info() == Eigen::Success) return f;
  for (double jitter = 1e-10; jitter <= 1.0001e-6; jitter *= 10.0) {
    work = A;
    work.diagonal().array() += nugget + jitter;
    f.llt.compute(work);
    if (f.llt.info() == Eigen::Success) {
      f.jitter = jitter;
      return f;
    }
  }
  throw NumericError("factorize: Cholesky failed even with 1e-6 diagonal jitter");
}

Factorization factorize(GramMatrix& gram) {
  Factorization f = factorize(gram.values, 0.0);
  gram.jitter_applied = f.jitter;
  return f;
}

}  // namespace nngpiu

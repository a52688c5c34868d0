#pragma once

// Assembly helpers shared by the plain and noise-adjusted Gram builders.

#include "nngpiu/errors.hpp"
#include "nngpiu/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <type_traits>
#include <vector>

namespace nngpiu::detail {

inline double dot(Point a, Point b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double squared_distance(Point a, Point b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

/// Hyperparameter-free pairwise quantity the family needs: x.x2 for the
/// composite families, |x-x2|^2 for the shallow ones.
inline double geometry(Point a, Point b, const KernelSpec& spec) {
  return spec.is_composite() ? dot(a, b) : squared_distance(a, b);
}

/// Hyperparameter combinations used in the inner loops.
struct PairConstants {
  explicit PairConstants(const KernelSpec& spec)
      : depth(spec.depth),
        sigma_b_sq(spec.sigma_b_sq),
        base_slope(spec.sigma_w_sq / spec.input_dim),
        arcsin_gain(2.0 * spec.sigma_w_sq / std::numbers::pi),
        arccos_gain(spec.sigma_w_sq / (2.0 * std::numbers::pi)),
        signal_var(spec.signal_var),
        inv_two_l2(1.0 / (2.0 * spec.length_scale * spec.length_scale)),
        inv_l(1.0 / spec.length_scale) {}

  int depth;
  double sigma_b_sq;
  double base_slope;
  double arcsin_gain;
  double arccos_gain;
  double signal_var;
  double inv_two_l2;
  double inv_l;
};

/// c^0..c^L(p, p) for every point of a set, computed once through the
/// single-argument recursion, plus the per-layer normalizer each pair
/// evaluation needs: 1/sqrt(1 + 2c) for arcsin, sqrt(c) for arccos.
class DiagonalCache {
 public:
  DiagonalCache(const KernelSpec& spec, const PointSet& points);

  const double* at(Eigen::Index a) const { return values_.data() + a * stride_; }
  double top(Eigen::Index a) const { return values_[a * stride_ + stride_ - 1]; }
  const double* norm(Eigen::Index a) const { return norms_.data() + a * (stride_ - 1); }

 private:
  Eigen::Index stride_;
  std::vector<double> values_;
  std::vector<double> norms_;
};

/// Clamps a normalized covariance into [-1, 1], raising `bad` when it is
/// further out than rounding explains (or not finite).
inline double clamp_flag(double ratio, bool& bad) {
  if (!(std::abs(ratio) <= 1.0 + kClampTolerance)) bad = true;
  return std::clamp(ratio, -1.0, 1.0);
}

/// Kernel value for a pair from its geometry and both points' normalizers.
/// Out-of-range ratios set `bad` instead of throwing so the function can run
/// inside parallel loops.
template <KernelFamily F>
inline double pair_value(double geom, const double* norm_a, const double* norm_b, const PairConstants& k,
                         bool& bad) {
  if constexpr (F == KernelFamily::RBF) {
    return k.signal_var * std::exp(-geom * k.inv_two_l2);
  } else if constexpr (F == KernelFamily::MaternHalf) {
    return k.signal_var * std::exp(-std::sqrt(geom) * k.inv_l);
  } else {
    double c = k.sigma_b_sq + k.base_slope * geom;
    if constexpr (F == KernelFamily::ArcSine) {
      for (int l = 0; l < k.depth; ++l) {
        const double ratio = clamp_flag(2.0 * c * norm_a[l] * norm_b[l], bad);
        c = k.sigma_b_sq + k.arcsin_gain * std::asin(ratio);
      }
    } else if constexpr (F == KernelFamily::ArcCosine) {
      for (int l = 0; l < k.depth; ++l) {
        const double scale = norm_a[l] * norm_b[l];
        const double cos_t = clamp_flag(c / scale, bad);
        const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
        c = k.sigma_b_sq + k.arccos_gain * scale * (sin_t + (std::numbers::pi - std::acos(cos_t)) * cos_t);
      }
    }
    return c;
  }
}

template <class Fn>
decltype(auto) dispatch(KernelFamily family, Fn&& fn) {
  switch (family) {
    case KernelFamily::Base: return fn(std::integral_constant<KernelFamily, KernelFamily::Base>{});
    case KernelFamily::ArcCosine: return fn(std::integral_constant<KernelFamily, KernelFamily::ArcCosine>{});
    case KernelFamily::ArcSine: return fn(std::integral_constant<KernelFamily, KernelFamily::ArcSine>{});
    case KernelFamily::RBF: return fn(std::integral_constant<KernelFamily, KernelFamily::RBF>{});
    case KernelFamily::MaternHalf: return fn(std::integral_constant<KernelFamily, KernelFamily::MaternHalf>{});
  }
  throw InputError("unknown kernel family");
}

inline void throw_out_of_range() {
  throw NumericError("normalized covariance outside [-1, 1]; inputs are not a valid covariance");
}

void check_dim(Point x, const KernelSpec& spec);

}  // namespace nngpiu::detail

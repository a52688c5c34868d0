#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <span>
#include <string>
#include <string_view>

namespace nngpiu {

/// Inputs are stored one point per row; rows are contiguous so a point can be
/// viewed as a span without copying.
using PointSet = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Point = std::span<const double>;

inline Point row_of(const PointSet& points, Eigen::Index i) {
  return {points.data() + i * points.cols(), static_cast<std::size_t>(points.cols())};
}

enum class KernelFamily { Base, ArcCosine, ArcSine, RBF, MaternHalf };

std::string_view to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

/// Declarative description of a covariance function.
///
/// Composite families (ArcCosine, ArcSine) apply `depth` layer maps on top of
/// the linear base covariance and use sigma_b_sq / sigma_w_sq; the same pair
/// is shared by every layer. Shallow families (RBF, MaternHalf) use
/// signal_var / length_scale and ignore depth.
struct KernelSpec {
  KernelFamily family = KernelFamily::ArcSine;
  int depth = 2;
  double sigma_b_sq = 1.0;
  double sigma_w_sq = 1.0;
  double length_scale = 1.0;
  double signal_var = 1.0;
  int input_dim = 1;

  bool is_composite() const {
    return family == KernelFamily::ArcCosine || family == KernelFamily::ArcSine ||
           family == KernelFamily::Base;
  }
  bool is_shallow() const { return !is_composite(); }

  /// Throws InputError when a hyperparameter is outside its domain.
  void validate() const;
};

/// Symmetric covariance matrix together with the diagonal jitter that was
/// needed to factorize it (zero until a factorization is requested).
struct GramMatrix {
  Eigen::MatrixXd values;
  double jitter_applied = 0.0;
};

// Scalar kernel evaluations. All of them throw InputError on a dimension
// mismatch with spec.input_dim.
double base_cov(Point x, Point x2, const KernelSpec& spec);

/// ReLU layer map. Throws NumericError for nonpositive diagonals or when the
/// normalized ratio leaves [-1, 1] by more than the clamp tolerance.
double arccos_layer(double c_xx, double c_x2x2, double c_xx2, const KernelSpec& spec);

/// Error-function layer map.
double arcsin_layer(double c_xx, double c_x2x2, double c_xx2, const KernelSpec& spec);

/// Layer map for a single point: only the diagonal value is threaded, no angle.
double layer_map_diagonal(double c_xx, const KernelSpec& spec);

/// c^L(x, x2) by threading (c(x,x), c(x2,x2), c(x,x2)) through `depth` layers.
double composite_cov(Point x, Point x2, const KernelSpec& spec);

/// c^L(x, x) through the single-argument recursion.
double composite_diag(Point x, const KernelSpec& spec);

double shallow_cov(Point x, Point x2, const KernelSpec& spec);

/// Dispatches on spec.family.
double kernel_value(Point x, Point x2, const KernelSpec& spec);
double kernel_diag(Point x, const KernelSpec& spec);

/// Symmetric Gram matrix c(X, X). Only the upper triangle is evaluated; the
/// diagonal uses the single-argument shortcut.
GramMatrix gram(const PointSet& X, const KernelSpec& spec);

/// Cross covariance c(X, X2), rows indexed by X.
Eigen::MatrixXd gram(const PointSet& X, const PointSet& X2, const KernelSpec& spec);

/// Lower Cholesky factor of A + nugget*I, escalating a diagonal jitter from
/// 1e-10 to 1e-6 when the plain factorization fails.
struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

Factorization factorize(const Eigen::MatrixXd& A, double nugget = 0.0);

/// Factorizes gram.values (no nugget) and records the jitter on the matrix.
Factorization factorize(GramMatrix& gram);

inline constexpr double kClampTolerance = 1e-10;

}  // namespace nngpiu

#include "nngpiu/input_noise.hpp"

#include "kernel_detail.hpp"
#include "nngpiu/errors.hpp"
#include "nngpiu/log.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace nngpiu {

namespace {

constexpr int kCvBatches = 10;
// Above this many noise-shifted points the pairwise geometry is not cached.
constexpr Eigen::Index kMaxCachedPoints = 2500;

PointSet shift(Point x, const NoiseSample& noise) {
  PointSet out = noise.draws;
  for (Eigen::Index a = 0; a < out.rows(); ++a) {
    for (Eigen::Index k = 0; k < out.cols(); ++k) out(a, k) += x[static_cast<std::size_t>(k)];
  }
  return out;
}

void check_noise_dim(const KernelSpec& kernel, const NoiseSample& noise) {
  if (noise.draws.cols() != kernel.input_dim) {
    throw InputError("noise draws have dimension " + std::to_string(noise.draws.cols()) +
                     ", kernel expects " + std::to_string(kernel.input_dim));
  }
  if (noise.draws.rows() < 1) throw InputError("noise sample is empty");
}

}  // namespace

void NoiseSpec::validate(int input_dim) const {
  if (mc_samples < 2) throw ConfigError("noise mc_samples must be at least 2");
  if (max_mc_samples < mc_samples) throw ConfigError("noise max_mc_samples below mc_samples");
  if (!(cv_target > 0.0)) throw ConfigError("noise cv_target must be positive");
  switch (distribution) {
    case NoiseDistribution::GaussianIsotropic:
      if (!(sigma_u_sq >= 0.0) || !std::isfinite(sigma_u_sq)) {
        throw ConfigError("noise sigma_u_sq must be nonnegative");
      }
      break;
    case NoiseDistribution::GaussianDiagonal:
      if (static_cast<int>(variances.size()) != input_dim) {
        throw ConfigError("noise variances must have one entry per input dimension");
      }
      for (double v : variances) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("noise variances must be nonnegative");
      }
      break;
    case NoiseDistribution::Custom:
      if (!sampler) throw ConfigError("custom noise distribution needs a sampler");
      break;
  }
}

bool NoiseSpec::is_degenerate() const {
  switch (distribution) {
    case NoiseDistribution::GaussianIsotropic: return sigma_u_sq == 0.0;
    case NoiseDistribution::GaussianDiagonal:
      return std::all_of(variances.begin(), variances.end(), [](double v) { return v == 0.0; });
    case NoiseDistribution::Custom: return false;
  }
  return false;
}

NoiseSample draw_noise(const NoiseSpec& spec, int input_dim, std::span<const double> input_scales) {
  spec.validate(input_dim);
  if (!input_scales.empty() && static_cast<int>(input_scales.size()) != input_dim) {
    throw InputError("draw_noise: one input scale per dimension required");
  }
  NoiseSample sample;
  sample.draws.setZero(spec.mc_samples, input_dim);
  if (spec.distribution == NoiseDistribution::Custom) {
    spec.sampler(spec.seed, sample.draws);
    if (sample.draws.rows() != spec.mc_samples || sample.draws.cols() != input_dim) {
      throw InputError("custom noise sampler returned a matrix of the wrong shape");
    }
    if (!sample.draws.allFinite()) throw NumericError("custom noise sampler produced non-finite draws");
  } else {
    std::vector<double> sd(static_cast<std::size_t>(input_dim));
    for (int k = 0; k < input_dim; ++k) {
      const double var = spec.distribution == NoiseDistribution::GaussianIsotropic
                             ? spec.sigma_u_sq
                             : spec.variances[static_cast<std::size_t>(k)];
      sd[static_cast<std::size_t>(k)] = std::sqrt(var);
    }
    boost::random::mt19937_64 gen(spec.seed);
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index a = 0; a < sample.draws.rows(); ++a) {
      for (Eigen::Index k = 0; k < input_dim; ++k) {
        sample.draws(a, k) = sd[static_cast<std::size_t>(k)] * normal(gen);
      }
    }
  }
  if (!input_scales.empty() && !spec.standardization_adjusted) {
    for (Eigen::Index k = 0; k < input_dim; ++k) {
      sample.draws.col(k) /= input_scales[static_cast<std::size_t>(k)];
    }
  }
  return sample;
}

double check_cv(const NoiseSample& sample, const KernelSpec& kernel,
                std::span<const ProbePair> probe_pairs) {
  check_noise_dim(kernel, sample);
  if (probe_pairs.empty()) throw InputError("check_cv needs at least one probe pair");
  const Eigen::Index m = sample.draws.rows();
  if (m < kCvBatches) {
    throw InputError("check_cv needs at least " + std::to_string(kCvBatches) + " noise draws");
  }
  const Eigen::Index batch = m / kCvBatches;
  double worst = 0.0;
  for (const auto& [x, x2] : probe_pairs) {
    const PointSet px = shift(Point(x), sample);
    const PointSet px2 = shift(Point(x2), sample);
    const detail::DiagonalCache dx(kernel, px);
    const detail::DiagonalCache dx2(kernel, px2);
    const detail::PairConstants k(kernel);
    std::vector<double> estimates;
    bool bad = false;
    detail::dispatch(kernel.family, [&](auto family) {
      constexpr KernelFamily F = decltype(family)::value;
      for (int b = 0; b < kCvBatches; ++b) {
        double sum = 0.0;
        for (Eigen::Index a = b * batch; a < (b + 1) * batch; ++a) {
          for (Eigen::Index c = b * batch; c < (b + 1) * batch; ++c) {
            const double g = detail::geometry(row_of(px, a), row_of(px2, c), kernel);
            sum += detail::pair_value<F>(g, dx.norm(a), dx2.norm(c), k, bad);
          }
        }
        estimates.push_back(sum / static_cast<double>(batch * batch));
      }
    });
    if (bad) detail::throw_out_of_range();
    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= kCvBatches;
    double var = 0.0;
    for (double e : estimates) var += (e - mean) * (e - mean);
    var /= kCvBatches - 1;
    if (var == 0.0) continue;
    // Batch estimates use m/B draws each; the full estimator's spread is
    // smaller by sqrt(B).
    const double cv = std::sqrt(var / kCvBatches) / std::abs(mean);
    worst = std::max(worst, std::isfinite(cv) ? cv : std::numeric_limits<double>::infinity());
  }
  return worst;
}

double check_cv(const NoiseSpec& spec, const KernelSpec& kernel,
                std::span<const ProbePair> probe_pairs) {
  return check_cv(draw_noise(spec, kernel.input_dim), kernel, probe_pairs);
}

NoiseSample draw_noise_with_cv_rule(const NoiseSpec& spec, const KernelSpec& kernel,
                                    std::span<const ProbePair> probe_pairs,
                                    std::span<const double> input_scales) {
  NoiseSpec current = spec;
  while (true) {
    NoiseSample sample = draw_noise(current, kernel.input_dim, input_scales);
    if (!spec.auto_escalate || probe_pairs.empty() || current.mc_samples < kCvBatches) {
      return sample;
    }
    sample.cv_estimate = check_cv(sample, kernel, probe_pairs);
    if (sample.cv_estimate <= spec.cv_target) return sample;
    if (current.mc_samples * 2 > spec.max_mc_samples) {
      log_warn("noise sample size guard reached at m = " + std::to_string(current.mc_samples) +
               " with CV " + std::to_string(sample.cv_estimate));
      return sample;
    }
    current.mc_samples *= 2;
  }
}

std::vector<ProbePair> default_probe_pairs(const PointSet& X, int count, std::uint64_t seed) {
  std::vector<ProbePair> out;
  const Eigen::Index n = X.rows();
  if (n < 2 || count <= 0) return out;
  boost::random::mt19937_64 gen(seed);
  boost::random::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::set<std::pair<Eigen::Index, Eigen::Index>> seen;
  const auto max_pairs = static_cast<std::size_t>(n * (n - 1) / 2);
  while (static_cast<int>(out.size()) < count && seen.size() < max_pairs) {
    Eigen::Index i = pick(gen);
    Eigen::Index j = pick(gen);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (!seen.insert({i, j}).second) continue;
    const Point a = row_of(X, i);
    const Point b = row_of(X, j);
    out.emplace_back(std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end()));
  }
  return out;
}

double adjusted_cov(Point x, Point x2, AdjustCase which, const KernelSpec& kernel,
                    const NoiseSample& noise) {
  check_noise_dim(kernel, noise);
  detail::check_dim(x, kernel);
  detail::check_dim(x2, kernel);
  const Eigen::Index m = noise.draws.rows();
  const PointSet px = shift(x, noise);
  double sum = 0.0;
  switch (which) {
    case AdjustCase::TrainTrain: {
      const PointSet px2 = shift(x2, noise);
      for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) sum += kernel_value(row_of(px, a), row_of(px2, b), kernel);
      }
      return sum / static_cast<double>(m * m);
    }
    case AdjustCase::Diagonal:
      for (Eigen::Index a = 0; a < m; ++a) sum += kernel_diag(row_of(px, a), kernel);
      return sum / static_cast<double>(m);
    case AdjustCase::TestTrain:
      for (Eigen::Index a = 0; a < m; ++a) sum += kernel_value(row_of(px, a), x2, kernel);
      return sum / static_cast<double>(m);
  }
  return 0.0;
}

GramMatrix adjusted_gram(const PointSet& X, const KernelSpec& kernel, const NoiseSample& noise) {
  check_noise_dim(kernel, noise);
  const GramAssembler assembler(X, noise, kernel.is_composite());
  return GramMatrix{assembler.train(kernel), 0.0};
}

Eigen::MatrixXd adjusted_gram(const PointSet& X, const PointSet& Xstar, const KernelSpec& kernel,
                              const NoiseSample& noise) {
  check_noise_dim(kernel, noise);
  const GramAssembler assembler(X, noise, kernel.is_composite());
  return assembler.cross(Xstar, kernel);
}

GramAssembler::GramAssembler(PointSet X, std::optional<NoiseSample> noise, bool composite_geometry)
    : X_(std::move(X)), noise_(std::move(noise)), composite_geometry_(composite_geometry) {
  if (noise_) {
    if (noise_->draws.cols() != X_.cols()) {
      throw InputError("noise draws and design have different dimensions");
    }
    m_ = noise_->draws.rows();
    if (m_ < 1) throw InputError("noise sample is empty");
  }
  const Eigen::Index n = X_.rows();
  shifted_.resize(n * m_, X_.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index a = 0; a < m_; ++a) {
      shifted_.row(i * m_ + a) = X_.row(i);
      if (noise_) shifted_.row(i * m_ + a) += noise_->draws.row(a);
    }
  }
  const Eigen::Index total = shifted_.rows();
  if (total <= kMaxCachedPoints) {
    geometry_.resize(total, total);
    for (Eigen::Index a = 0; a < total; ++a) {
      for (Eigen::Index b = a; b < total; ++b) {
        const Point pa = row_of(shifted_, a);
        const Point pb = row_of(shifted_, b);
        const double g = composite_geometry_ ? detail::dot(pa, pb) : detail::squared_distance(pa, pb);
        geometry_(a, b) = g;
        geometry_(b, a) = g;
      }
    }
  }
}

Eigen::MatrixXd GramAssembler::train(const KernelSpec& kernel) const {
  if (kernel.is_composite() != composite_geometry_) {
    throw InputError("GramAssembler was built for a different kernel family class");
  }
  if (X_.cols() != kernel.input_dim) throw InputError("design dimension does not match kernel");
  const Eigen::Index n = X_.rows();
  const detail::DiagonalCache diag(kernel, shifted_);
  const detail::PairConstants k(kernel);
  const double inv_m = 1.0 / static_cast<double>(m_);
  const double inv_m2 = 1.0 / static_cast<double>(m_ * m_);
  const bool cached = geometry_.size() > 0;
  Eigen::MatrixXd K(n, n);
  bool bad = false;
  detail::dispatch(kernel.family, [&](auto family) {
    constexpr KernelFamily F = decltype(family)::value;
#pragma omp parallel for schedule(dynamic) reduction(|| : bad)
    for (Eigen::Index i = 0; i < n; ++i) {
      double dsum = 0.0;
      for (Eigen::Index a = 0; a < m_; ++a) dsum += diag.top(i * m_ + a);
      K(i, i) = dsum * inv_m;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        double sum = 0.0;
        for (Eigen::Index a = 0; a < m_; ++a) {
          const Eigen::Index pa = i * m_ + a;
          const double* norm_a = diag.norm(pa);
          const double* geom_col = cached ? geometry_.col(pa).data() : nullptr;
          for (Eigen::Index b = 0; b < m_; ++b) {
            const Eigen::Index pb = j * m_ + b;
            const double g = cached ? geom_col[pb]
                                    : detail::geometry(row_of(shifted_, pa), row_of(shifted_, pb), kernel);
            sum += detail::pair_value<F>(g, norm_a, diag.norm(pb), k, bad);
          }
        }
        K(i, j) = sum * inv_m2;
      }
    }
  });
  if (bad) detail::throw_out_of_range();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) K(j, i) = K(i, j);
  }
  return K;
}

Eigen::MatrixXd GramAssembler::cross(const PointSet& Xstar, const KernelSpec& kernel) const {
  if (Xstar.cols() != kernel.input_dim || X_.cols() != kernel.input_dim) {
    throw InputError("cross covariance: dimension does not match kernel");
  }
  const Eigen::Index n = X_.rows();
  const detail::DiagonalCache diag(kernel, shifted_);
  const detail::DiagonalCache diag_star(kernel, Xstar);
  const detail::PairConstants k(kernel);
  const double inv_m = 1.0 / static_cast<double>(m_);
  Eigen::MatrixXd out(n, Xstar.rows());
  bool bad = false;
  detail::dispatch(kernel.family, [&](auto family) {
    constexpr KernelFamily F = decltype(family)::value;
#pragma omp parallel for schedule(static) reduction(|| : bad)
    for (Eigen::Index s = 0; s < Xstar.rows(); ++s) {
      const Point xs = row_of(Xstar, s);
      for (Eigen::Index j = 0; j < n; ++j) {
        double sum = 0.0;
        for (Eigen::Index a = 0; a < m_; ++a) {
          const Eigen::Index pa = j * m_ + a;
          const double g = detail::geometry(row_of(shifted_, pa), xs, kernel);
          sum += detail::pair_value<F>(g, diag.norm(pa), diag_star.norm(s), k, bad);
        }
        out(j, s) = sum * inv_m;
      }
    }
  });
  if (bad) detail::throw_out_of_range();
  return out;
}

Eigen::VectorXd GramAssembler::test_diagonal(const PointSet& Xstar, const KernelSpec& kernel) const {
  if (Xstar.cols() != kernel.input_dim) throw InputError("test points: dimension does not match kernel");
  Eigen::VectorXd out(Xstar.rows());
  for (Eigen::Index s = 0; s < Xstar.rows(); ++s) {
    const Point xs = row_of(Xstar, s);
    if (!noise_) {
      out(s) = kernel_diag(xs, kernel);
      continue;
    }
    const PointSet px = shift(xs, *noise_);
    const detail::DiagonalCache diag(kernel, px);
    double sum = 0.0;
    for (Eigen::Index a = 0; a < m_; ++a) sum += diag.top(a);
    out(s) = sum / static_cast<double>(m_);
  }
  return out;
}

}  // namespace nngpiu

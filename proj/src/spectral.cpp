#include "nngpiu/spectral.hpp"

#include "nngpiu/errors.hpp"

#include <Eigen/Eigenvalues>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace nngpiu {

std::vector<double> descending_eigenvalues(const Eigen::MatrixXd& A) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  const Eigen::VectorXd& ev = solver.eigenvalues();  // ascending
  return {ev.reverse().begin(), ev.reverse().end()};
}

DecayFit fit_log_linear(const std::vector<double>& log_values, int first, int last) {
  if (first < 1 || last > static_cast<int>(log_values.size()) || last - first < 2) {
    throw InputError("decay fit window [" + std::to_string(first) + ", " + std::to_string(last) +
                     "] does not fit " + std::to_string(log_values.size()) + " eigenvalues");
  }
  const int n = last - first + 1;
  double sx = 0.0, sy = 0.0;
  for (int i = first; i <= last; ++i) {
    sx += i;
    sy += log_values[static_cast<std::size_t>(i - 1)];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = first; i <= last; ++i) {
    const double dx = i - mx;
    const double dy = log_values[static_cast<std::size_t>(i - 1)] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  DecayFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

SpectrumReport eigenspectrum(const KernelSpec& kernel_in, const SpectrumOptions& options,
                             const std::string& label) {
  if (options.n_inputs < 2) throw InputError("eigenspectrum needs at least two inputs");
  if (options.replications < 1) throw InputError("eigenspectrum needs at least one replication");
  KernelSpec kernel = kernel_in;
  kernel.input_dim = options.input_dim;
  kernel.validate();

  SpectrumReport report;
  report.kernel_label = label.empty() ? std::string(to_string(kernel.family)) : label;
  report.fit_first = options.fit_first;
  report.fit_last = options.fit_last;
  const auto n = static_cast<std::size_t>(options.n_inputs);
  std::vector<std::vector<double>> logs;

  boost::random::mt19937_64 gen(options.seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  for (int r = 0; r < options.replications; ++r) {
    PointSet X(options.n_inputs, options.input_dim);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      for (Eigen::Index k = 0; k < X.cols(); ++k) X(i, k) = normal(gen);
    }
    std::vector<double> ev = descending_eigenvalues(gram(X, kernel).values);
    const double top = ev.front();
    if (ev.back() < -1e-8 * top) {
      throw NumericError("Gram matrix has a significantly negative eigenvalue " + std::to_string(ev.back()));
    }
    const double floor = std::numeric_limits<double>::epsilon() * top;
    std::vector<double> lg(n);
    for (std::size_t i = 0; i < n; ++i) {
      ev[i] = std::max(ev[i], 0.0);
      lg[i] = std::log(std::max(ev[i], floor));
    }
    report.eigenvalues.push_back(std::move(ev));
    logs.push_back(std::move(lg));
  }

  const auto reps = static_cast<double>(options.replications);
  auto mean_and_se = [&](const std::vector<std::vector<double>>& rows, std::vector<double>& mean,
                         std::vector<double>& se) {
    mean.assign(n, 0.0);
    se.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& row : rows) mean[i] += row[i];
      mean[i] /= reps;
      if (options.replications > 1) {
        double ss = 0.0;
        for (const auto& row : rows) ss += (row[i] - mean[i]) * (row[i] - mean[i]);
        se[i] = std::sqrt(ss / (reps - 1.0) / reps);
      }
    }
  };
  mean_and_se(logs, report.mean_log, report.stderr_log);
  mean_and_se(report.eigenvalues, report.mean, report.stderr_of_mean);
  report.decay = fit_log_linear(report.mean_log, options.fit_first, options.fit_last);
  return report;
}

nlohmann::json SpectrumReport::to_json() const {
  return nlohmann::json{{"label", kernel_label},
                        {"fit_window", {fit_first, fit_last}},
                        {"slope", decay.slope},
                        {"intercept", decay.intercept},
                        {"r_squared", decay.r_squared},
                        {"mean_log_eigenvalue", mean_log},
                        {"stderr_log_eigenvalue", stderr_log},
                        {"eigenvalues", eigenvalues}};
}

}  // namespace nngpiu

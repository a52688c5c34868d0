#pragma once

#include "nngpiu/kernel.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace nngpiu {

/// Least-squares line through (index, log eigenvalue) over a window.
struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

struct SpectrumReport {
  std::string kernel_label;
  std::vector<std::vector<double>> eigenvalues;  // per replication, descending, clamped at 0
  std::vector<double> mean_log;                  // mean natural-log eigenvalue per index
  std::vector<double> stderr_log;
  std::vector<double> mean;                      // mean eigenvalue per index
  std::vector<double> stderr_of_mean;
  DecayFit decay;
  int fit_first = 5;  // 1-based inclusive window
  int fit_last = 80;

  nlohmann::json to_json() const;
};

struct SpectrumOptions {
  int n_inputs = 100;
  int input_dim = 1;
  int replications = 10;
  std::uint64_t seed = 0;
  int fit_first = 5;
  int fit_last = 80;
};

/// Eigenvalues of Gram matrices over standard-normal inputs. Eigenvalues
/// below machine epsilon times the largest are floored there before taking
/// logs. Throws NumericError if an eigenvalue is below -1e-8 lambda_max.
SpectrumReport eigenspectrum(const KernelSpec& kernel, const SpectrumOptions& options,
                             const std::string& label = "");

/// Eigenvalues of a symmetric matrix in descending order.
std::vector<double> descending_eigenvalues(const Eigen::MatrixXd& A);

/// Fits log(values[i]) against i + 1 for 1-based i in [first, last].
DecayFit fit_log_linear(const std::vector<double>& log_values, int first, int last);

}  // namespace nngpiu

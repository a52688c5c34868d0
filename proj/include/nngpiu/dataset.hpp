#pragma once

#include "nngpiu/kernel.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace nngpiu {

/// Inputs (n x d) and a single output column.
struct Dataset {
  PointSet X;
  Eigen::VectorXd y;
  std::vector<std::string> input_names;
  std::string output_name = "y";

  Eigen::Index size() const { return X.rows(); }
  int input_dim() const { return static_cast<int>(X.cols()); }
  void validate() const;
};

/// Affine maps between raw and model units. Scales of 1 and means of 0 are
/// the identity, which is also what a disabled standardization holds.
struct Standardization {
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_scale;
  double output_mean = 0.0;
  double output_scale = 1.0;
  bool inputs = false;
  bool outputs = false;

  static Standardization identity(int input_dim);
  /// Column means and sample standard deviations (constant columns keep scale 1).
  static Standardization from_data(const Dataset& data, bool inputs, bool outputs);

  PointSet apply_inputs(const PointSet& X) const;
  Eigen::VectorXd apply_outputs(const Eigen::VectorXd& y) const;
  Dataset apply(const Dataset& data) const;
};

/// Whole-table view of a CSV file: header names and numeric cells.
struct Table {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;  // rows x columns

  Eigen::Index column_index(const std::string& name) const;
};

/// Reads a comma-separated file with a header row. Throws DataError on
/// ragged rows or non-numeric cells and IoError when unreadable.
Table read_csv(const std::string& path);
Table parse_csv(const std::string& text);
void write_csv(const std::string& path, const Table& table);

/// Builds a dataset from named input columns and one output column.
Dataset dataset_from_table(const Table& table, const std::vector<std::string>& inputs,
                           const std::string& output);

}  // namespace nngpiu

#include "nngpiu/dataset.hpp"

#include "nngpiu/errors.hpp"

#include <boost/algorithm/string/trim.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nngpiu {

void Dataset::validate() const {
  if (X.rows() != y.size()) {
    throw DataError("dataset has " + std::to_string(X.rows()) + " input rows but " +
                    std::to_string(y.size()) + " outputs");
  }
  if (X.cols() < 1) throw DataError("dataset has no input columns");
  if (!X.allFinite() || !y.allFinite()) throw DataError("dataset contains non-finite values");
}

Standardization Standardization::identity(int input_dim) {
  Standardization s;
  s.input_mean = Eigen::VectorXd::Zero(input_dim);
  s.input_scale = Eigen::VectorXd::Ones(input_dim);
  return s;
}

Standardization Standardization::from_data(const Dataset& data, bool inputs, bool outputs) {
  Standardization s = identity(data.input_dim());
  s.inputs = inputs;
  s.outputs = outputs;
  const auto n = static_cast<double>(data.size());
  if (inputs && data.size() > 1) {
    for (Eigen::Index k = 0; k < data.X.cols(); ++k) {
      const double mean = data.X.col(k).mean();
      const double var = (data.X.col(k).array() - mean).square().sum() / (n - 1.0);
      s.input_mean(k) = mean;
      s.input_scale(k) = var > 0.0 ? std::sqrt(var) : 1.0;
    }
  }
  if (outputs && data.size() > 1) {
    s.output_mean = data.y.mean();
    const double var = (data.y.array() - s.output_mean).square().sum() / (n - 1.0);
    s.output_scale = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

PointSet Standardization::apply_inputs(const PointSet& X) const {
  if (X.cols() != input_mean.size()) throw InputError("standardization: input dimension mismatch");
  PointSet out(X.rows(), X.cols());
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    out.col(k) = (X.col(k).array() - input_mean(k)) / input_scale(k);
  }
  return out;
}

Eigen::VectorXd Standardization::apply_outputs(const Eigen::VectorXd& y) const {
  return (y.array() - output_mean) / output_scale;
}

Dataset Standardization::apply(const Dataset& data) const {
  Dataset out = data;
  out.X = apply_inputs(data.X);
  out.y = apply_outputs(data.y);
  return out;
}

Eigen::Index Table::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<Eigen::Index>(i);
  }
  throw DataError("column '" + name + "' not found");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    boost::algorithm::trim(cell);
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw DataError("non-numeric cell '" + cell + "' at data row " + std::to_string(row + 1) +
                    ", column " + std::to_string(col + 1));
  }
  return value;
}

}  // namespace

Table parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Table table;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (boost::algorithm::trim_copy(line).empty()) continue;
    auto cells = split_line(line);
    if (!have_header) {
      for (const auto& c : cells) {
        if (c.empty()) throw DataError("empty column name in CSV header");
      }
      table.columns = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.columns.size()) {
      throw DataError("CSV row " + std::to_string(rows.size() + 1) + " has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(table.columns.size()));
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) values[c] = parse_cell(cells[c], rows.size(), c);
    rows.push_back(std::move(values));
  }
  if (!have_header) throw DataError("CSV input has no header row");
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.columns.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return table;
}

Table read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

void write_csv(const std::string& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    out << (c ? "," : "") << table.columns[c];
  }
  out << '\n';
  out.precision(17);
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
      out << (c ? "," : "") << table.values(r, c);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

Dataset dataset_from_table(const Table& table, const std::vector<std::string>& inputs,
                           const std::string& output) {
  if (inputs.empty()) throw DataError("no input columns selected");
  Dataset data;
  data.X.resize(table.values.rows(), static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    data.X.col(static_cast<Eigen::Index>(k)) = table.values.col(table.column_index(inputs[k]));
  }
  data.y = table.values.col(table.column_index(output));
  data.input_names = inputs;
  data.output_name = output;
  data.validate();
  return data;
}

}  // namespace nngpiu

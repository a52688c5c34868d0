#include "nngpiu/dataset.hpp"
#include "nngpiu/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace nngpiu {
namespace {

TEST(Csv, ParsesHeaderAndNumbers) {
  const Table t = parse_csv("a,b\r\n1,2.5\n-3e2, 4\n\n");
  ASSERT_EQ(t.columns.size(), 2u);
  EXPECT_EQ(t.columns[1], "b");
  ASSERT_EQ(t.values.rows(), 2);
  EXPECT_EQ(t.values(1, 0), -300.0);
  EXPECT_EQ(t.values(1, 1), 4.0);
}

TEST(Csv, HeaderOnlyIsEmptyTable) {
  const Table t = parse_csv("x1,x2\n");
  EXPECT_EQ(t.values.rows(), 0);
  EXPECT_EQ(t.values.cols(), 2);
}

TEST(Csv, SchemaErrors) {
  EXPECT_THROW(parse_csv("a,b\n1\n"), DataError);
  EXPECT_THROW(parse_csv("a,b\n1,zz\n"), DataError);
  EXPECT_THROW(parse_csv(""), DataError);
  EXPECT_THROW(parse_csv("a,,b\n1,2,3\n"), DataError);
  EXPECT_THROW(read_csv("/nonexistent/file.csv"), IoError);
}

TEST(Csv, ColumnLookup) {
  const Table t = parse_csv("a,b\n1,2\n");
  EXPECT_EQ(t.column_index("b"), 1);
  EXPECT_THROW(t.column_index("c"), DataError);
}

TEST(DatasetFromTable, SelectsColumns) {
  const Table t = parse_csv("y,x2,x1\n1,2,3\n4,5,6\n");
  const Dataset d = dataset_from_table(t, {"x1", "x2"}, "y");
  EXPECT_EQ(d.X(0, 0), 3.0);
  EXPECT_EQ(d.X(1, 1), 5.0);
  EXPECT_EQ(d.y(1), 4.0);
  EXPECT_EQ(d.input_names, (std::vector<std::string>{"x1", "x2"}));
  EXPECT_THROW(dataset_from_table(t, {}, "y"), DataError);
}

TEST(Dataset, RejectsNonFinite) {
  Dataset d;
  d.X = PointSet::Zero(2, 1);
  d.y = Eigen::Vector2d(1.0, std::nan(""));
  EXPECT_THROW(d.validate(), DataError);
}

TEST(Standardization, RoundTripsAndHandlesConstantColumns) {
  Dataset d;
  d.X.resize(4, 2);
  d.X << 1, 5, 2, 5, 3, 5, 4, 5;
  d.y = Eigen::Vector4d(10, 20, 30, 40);
  const auto s = Standardization::from_data(d, true, true);
  const Dataset z = s.apply(d);
  EXPECT_NEAR(z.X.col(0).mean(), 0.0, 1e-14);
  EXPECT_NEAR((z.X.col(0).array() - z.X.col(0).mean()).square().sum() / 3.0, 1.0, 1e-14);
  EXPECT_EQ(s.input_scale(1), 1.0);
  EXPECT_NEAR(z.y.mean(), 0.0, 1e-14);
  const auto id = Standardization::identity(2);
  EXPECT_EQ(id.apply(d).X, d.X);
}

}  // namespace
}  // namespace nngpiu

#include "berncert/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "berncert/csv.hpp"
#include "berncert/errors.hpp"

namespace berncert {

int LabeledData::num_classes() const {
  if (y.empty()) return 0;
  return 1 + *std::max_element(y.begin(), y.end());
}

namespace {

LabeledData shuffled(const LabeledData& data, std::mt19937_64& gen) {
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), gen);
  LabeledData out;
  out.x.resize(data.x.rows(), data.x.cols());
  out.y.resize(data.y.size());
  for (int i = 0; i < data.size(); ++i) {
    out.x.row(i) = data.x.row(order[i]);
    out.y[i] = data.y[order[i]];
  }
  return out;
}

}  // namespace

LabeledData make_moons(int n, double noise, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> jitter(0.0, noise);
  const int n_outer = n / 2;
  const int n_inner = n - n_outer;
  LabeledData data;
  data.x.resize(n, 2);
  data.y.resize(n);
  const double pi = std::numbers::pi;
  for (int i = 0; i < n_outer; ++i) {
    const double t = n_outer > 1 ? pi * i / (n_outer - 1) : 0.0;
    data.x(i, 0) = std::cos(t);
    data.x(i, 1) = std::sin(t);
    data.y[i] = 0;
  }
  for (int i = 0; i < n_inner; ++i) {
    const double t = n_inner > 1 ? pi * i / (n_inner - 1) : 0.0;
    data.x(n_outer + i, 0) = 1.0 - std::cos(t);
    data.x(n_outer + i, 1) = 0.5 - std::sin(t);
    data.y[n_outer + i] = 1;
  }
  if (noise > 0.0) {
    for (int i = 0; i < n; ++i) {
      data.x(i, 0) += jitter(gen);
      data.x(i, 1) += jitter(gen);
    }
  }
  return shuffled(data, gen);
}

LabeledData make_blobs(int n, const std::vector<Eigen::VectorXd>& centers, double stddev,
                       std::uint64_t seed) {
  if (centers.empty()) throw std::invalid_argument("make_blobs needs at least one center");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> jitter(0.0, stddev);
  const Eigen::Index m = centers.front().size();
  LabeledData data;
  data.x.resize(n, m);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const int c = i % static_cast<int>(centers.size());
    for (Eigen::Index j = 0; j < m; ++j) data.x(i, j) = centers[c][j] + jitter(gen);
    data.y[i] = c;
  }
  return shuffled(data, gen);
}

RegressionData make_wiggly(int n, double noise, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> jitter(0.0, noise);
  RegressionData data;
  data.x.resize(n);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = n > 1 ? static_cast<double>(i) / (n - 1) : 0.5;
    data.x[i] = x;
    data.y[i] = 0.5 * std::sin(2.0 * std::numbers::pi * x) + 0.2 * x + jitter(gen);
  }
  return data;
}

std::pair<LabeledData, LabeledData> split(const LabeledData& data, int n_train,
                                          std::uint64_t seed) {
  if (n_train < 0 || n_train > data.size()) throw std::invalid_argument("bad split size");
  std::mt19937_64 gen(seed);
  const LabeledData all = shuffled(data, gen);
  LabeledData train, test;
  train.x = all.x.topRows(n_train);
  train.y.assign(all.y.begin(), all.y.begin() + n_train);
  test.x = all.x.bottomRows(all.size() - n_train);
  test.y.assign(all.y.begin() + n_train, all.y.end());
  return {train, test};
}

LabeledData read_labeled_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header.size() < 2 || table.header.back() != "label") {
    throw IoError("'" + path + "': header must be x_1..x_m,label");
  }
  const std::size_t m = table.header.size() - 1;
  LabeledData data;
  data.x.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(m));
  data.y.resize(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string where = path + " row " + std::to_string(r + 1);
    for (std::size_t j = 0; j < m; ++j) data.x(r, j) = parse_double(table.rows[r][j], where);
    data.y[r] = parse_int(table.rows[r][m], where);
    if (data.y[r] < 0) throw IoError(where + ": negative label");
  }
  return data;
}

void write_labeled_csv(const std::string& path, const LabeledData& data) {
  std::ostringstream out;
  for (int j = 0; j < data.input_dim(); ++j) out << "x_" << (j + 1) << ",";
  out << "label\n";
  for (int i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.input_dim(); ++j) out << format_number(data.x(i, j)) << ",";
    out << data.y[i] << "\n";
  }
  write_text(path, out.str());
}

RegressionData read_regression_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header.size() != 2) throw IoError("'" + path + "': header must be x,y");
  RegressionData data;
  data.x.resize(static_cast<Eigen::Index>(table.rows.size()));
  data.y.resize(static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string where = path + " row " + std::to_string(r + 1);
    data.x[r] = parse_double(table.rows[r][0], where);
    data.y[r] = parse_double(table.rows[r][1], where);
  }
  return data;
}

void write_regression_csv(const std::string& path, const RegressionData& data) {
  std::ostringstream out;
  out << "x,y\n";
  for (Eigen::Index i = 0; i < data.x.size(); ++i) {
    out << format_number(data.x[i]) << "," << format_number(data.y[i]) << "\n";
  }
  write_text(path, out.str());
}

}  // namespace berncert

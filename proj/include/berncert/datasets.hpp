#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace berncert {

/// Row-per-example inputs with integer class labels.
struct LabeledData {
  Eigen::MatrixXd x;  // N x m
  std::vector<int> y;

  int size() const { return static_cast<int>(x.rows()); }
  int input_dim() const { return static_cast<int>(x.cols()); }
  int num_classes() const;  // 1 + max label
};

/// Scalar regression samples.
struct RegressionData {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

/// Two interleaving half circles with Gaussian noise, as in the usual toy benchmark.
LabeledData make_moons(int n, double noise, std::uint64_t seed);

/// Isotropic Gaussian blobs around the given centers, labels follow the center index.
LabeledData make_blobs(int n, const std::vector<Eigen::VectorXd>& centers, double stddev,
                       std::uint64_t seed);

/// Noisy samples of a smooth curve on [0,1], dense enough to over-fit.
RegressionData make_wiggly(int n, double noise, std::uint64_t seed);

/// Splits off the first `n_train` rows after a seeded shuffle.
std::pair<LabeledData, LabeledData> split(const LabeledData& data, int n_train,
                                          std::uint64_t seed);

/// CSV with header x_1..x_m,label. Throws std::runtime_error naming the path on I/O failure.
LabeledData read_labeled_csv(const std::string& path);
void write_labeled_csv(const std::string& path, const LabeledData& data);

/// CSV with header x,y.
RegressionData read_regression_csv(const std::string& path);
void write_regression_csv(const std::string& path, const RegressionData& data);

}  // namespace berncert

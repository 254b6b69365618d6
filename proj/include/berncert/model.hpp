#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace berncert {

enum class Activation { relu, sigmoid, identity };

Activation parse_activation(const std::string& tag);
std::string activation_tag(Activation act);

struct DenseLayer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
  Activation act = Activation::identity;

  int in_dim() const { return static_cast<int>(w.cols()); }
  int out_dim() const { return static_cast<int>(w.rows()); }
};

/// Feed-forward network split into a feature extractor G (layers before
/// head_index) and a classifier head (layers from head_index on).
///
/// G ends in a sigmoid so features land in (0,1)^d. A model with
/// head_index == 0 has no feature extractor; it is used for plain
/// regressors and the head then sees the raw input.
class MlpModel {
 public:
  MlpModel() = default;
  MlpModel(std::vector<DenseLayer> layers, int head_index);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }
  int head_index() const { return head_index_; }
  int input_dim() const { return layers_.front().in_dim(); }
  int feature_dim() const;
  int num_classes() const { return layers_.back().out_dim(); }

  /// G(input), a point in (0,1)^d.
  Eigen::VectorXd features(const Eigen::VectorXd& input) const;
  /// Head applied to a feature point.
  Eigen::VectorXd logits(const Eigen::VectorXd& x) const;
  /// logits(features(input)).
  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;

  /// d x m Jacobian of G at input.
  Eigen::MatrixXd features_jacobian(const Eigen::VectorXd& input) const;
  /// K x d Jacobian of the head at x.
  Eigen::MatrixXd logits_jacobian(const Eigen::VectorXd& x) const;

  int predict(const Eigen::VectorXd& input) const;

  /// Forward pass over layers [first, last) with the Jacobian of the output
  /// with respect to the input of layer `first`.
  Eigen::VectorXd run_range(const Eigen::VectorXd& v, int first, int last,
                            Eigen::MatrixXd* jacobian = nullptr) const;

 private:
  void validate() const;

  std::vector<DenseLayer> layers_;
  int head_index_ = 0;
};

/// Largest singular value of w by `iters` rounds of power iteration from a
/// fixed start vector. Throws DegenerateInputError on an all-zero matrix.
double spectral_norm(const Eigen::MatrixXd& w, int iters);

/// Power iteration that also carries the right singular vector estimate
/// between calls, for warm starts during training.
double spectral_norm(const Eigen::MatrixXd& w, int iters, Eigen::VectorXd& v);

/// Divides every feature-extractor weight matrix by its spectral norm.
/// Biases and head layers are left untouched.
MlpModel normalize_weights(const MlpModel& m, int iters);

/// Two-class fixture whose feature-space boundary is the hyperplane x_1 = t:
/// G = sigmoid(input), logits = (s (x_1 - t), -s (x_1 - t)).
MlpModel linear_boundary_model(int d, double t, double slope = 4.0);

/// Inverse sigmoid, so that features(logit(x)) == x for the fixture above.
Eigen::VectorXd logit(const Eigen::VectorXd& p);

/// Index of the largest entry; ties go to the smallest index.
int argmax(const Eigen::VectorXd& v);

}  // namespace berncert

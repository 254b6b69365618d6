#include "berncert/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "berncert/errors.hpp"

namespace berncert {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void apply_activation(Activation act, Eigen::VectorXd& z, Eigen::VectorXd* slope) {
  if (slope) slope->resize(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    switch (act) {
      case Activation::relu:
        if (slope) (*slope)[i] = z[i] > 0.0 ? 1.0 : 0.0;
        z[i] = z[i] > 0.0 ? z[i] : 0.0;
        break;
      case Activation::sigmoid: {
        const double s = sigmoid(z[i]);
        if (slope) (*slope)[i] = s * (1.0 - s);
        z[i] = s;
        break;
      }
      case Activation::identity:
        if (slope) (*slope)[i] = 1.0;
        break;
    }
  }
}

}  // namespace

Activation parse_activation(const std::string& tag) {
  if (tag == "relu") return Activation::relu;
  if (tag == "sigmoid") return Activation::sigmoid;
  if (tag == "id" || tag == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + tag + "'");
}

std::string activation_tag(Activation act) {
  switch (act) {
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::identity:
      return "id";
  }
  return "id";
}

int argmax(const Eigen::VectorXd& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

MlpModel::MlpModel(std::vector<DenseLayer> layers, int head_index)
    : layers_(std::move(layers)), head_index_(head_index) {
  validate();
}

void MlpModel::validate() const {
  if (layers_.empty()) throw std::invalid_argument("model needs at least one layer");
  if (head_index_ < 0 || head_index_ >= static_cast<int>(layers_.size())) {
    throw std::invalid_argument("head_index must point at a layer");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const DenseLayer& l = layers_[i];
    if (l.b.size() != l.w.rows()) {
      throw ShapeError("layer " + std::to_string(i) + " bias size does not match weight rows");
    }
    if (i > 0 && l.w.cols() != layers_[i - 1].w.rows()) {
      throw ShapeError("layer " + std::to_string(i) + " input size does not match layer " +
                       std::to_string(i - 1) + " output");
    }
  }
  if (head_index_ > 0 && layers_[head_index_ - 1].act != Activation::sigmoid) {
    throw std::invalid_argument("feature extractor must end with a sigmoid layer");
  }
}

int MlpModel::feature_dim() const {
  return head_index_ == 0 ? input_dim() : layers_[head_index_ - 1].out_dim();
}

Eigen::VectorXd MlpModel::run_range(const Eigen::VectorXd& v, int first, int last,
                                    Eigen::MatrixXd* jacobian) const {
  const int expected = layers_[first].in_dim();
  if (v.size() != expected) {
    throw ShapeError("input has dimension " + std::to_string(v.size()) + ", layer " +
                     std::to_string(first) + " expects " + std::to_string(expected));
  }
  Eigen::VectorXd h = v;
  if (jacobian) *jacobian = Eigen::MatrixXd::Identity(v.size(), v.size());
  Eigen::VectorXd slope;
  for (int i = first; i < last; ++i) {
    const DenseLayer& l = layers_[i];
    Eigen::VectorXd z = l.w * h + l.b;
    apply_activation(l.act, z, jacobian ? &slope : nullptr);
    if (jacobian) *jacobian = slope.asDiagonal() * (l.w * *jacobian);
    h = std::move(z);
  }
  return h;
}

Eigen::VectorXd MlpModel::features(const Eigen::VectorXd& input) const {
  if (head_index_ == 0) {
    if (input.size() != input_dim()) throw ShapeError("input dimension mismatch");
    return input;
  }
  return run_range(input, 0, head_index_);
}

Eigen::VectorXd MlpModel::logits(const Eigen::VectorXd& x) const {
  return run_range(x, head_index_, static_cast<int>(layers_.size()));
}

Eigen::VectorXd MlpModel::forward(const Eigen::VectorXd& input) const {
  return logits(features(input));
}

Eigen::MatrixXd MlpModel::features_jacobian(const Eigen::VectorXd& input) const {
  if (head_index_ == 0) {
    if (input.size() != input_dim()) throw ShapeError("input dimension mismatch");
    return Eigen::MatrixXd::Identity(input.size(), input.size());
  }
  Eigen::MatrixXd jac;
  run_range(input, 0, head_index_, &jac);
  return jac;
}

Eigen::MatrixXd MlpModel::logits_jacobian(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd jac;
  run_range(x, head_index_, static_cast<int>(layers_.size()), &jac);
  return jac;
}

int MlpModel::predict(const Eigen::VectorXd& input) const { return argmax(forward(input)); }

double spectral_norm(const Eigen::MatrixXd& w, int iters, Eigen::VectorXd& v) {
  if (iters < 1) throw std::invalid_argument("power iteration needs at least one round");
  if (w.size() == 0 || w.cwiseAbs().maxCoeff() == 0.0) {
    throw DegenerateInputError("spectral norm of an all-zero matrix");
  }
  if (v.size() != w.cols() || v.norm() == 0.0) {
    // Fixed pseudo-random start so the estimate is reproducible.
    std::mt19937_64 gen(0x5eed5eedULL);
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    v.resize(w.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = (i % 2 == 0 ? 1.0 : -1.0) * dist(gen);
  }
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd u = w * v;
    const double un = u.norm();
    if (un == 0.0) {
      // Start vector fell in the null space; fall back to the largest column.
      Eigen::Index col = 0;
      w.colwise().norm().maxCoeff(&col);
      v.setZero();
      v[col] = 1.0;
      continue;
    }
    u /= un;
    Eigen::VectorXd next = w.transpose() * u;
    sigma = next.norm();
    v = next / sigma;
  }
  if (sigma == 0.0) sigma = (w * v).norm();
  return sigma;
}

double spectral_norm(const Eigen::MatrixXd& w, int iters) {
  Eigen::VectorXd v;
  return spectral_norm(w, iters, v);
}

MlpModel normalize_weights(const MlpModel& m, int iters) {
  MlpModel out = m;
  for (int i = 0; i < m.head_index(); ++i) {
    DenseLayer& l = out.mutable_layers()[i];
    l.w /= spectral_norm(l.w, iters);
  }
  return out;
}

}  // namespace berncert

namespace berncert {

MlpModel linear_boundary_model(int d, double t, double slope) {
  if (d < 1) throw std::invalid_argument("fixture dimension must be >= 1");
  std::vector<DenseLayer> layers(2);
  layers[0].w = Eigen::MatrixXd::Identity(d, d);
  layers[0].b = Eigen::VectorXd::Zero(d);
  layers[0].act = Activation::sigmoid;
  layers[1].w = Eigen::MatrixXd::Zero(2, d);
  layers[1].w(0, 0) = slope;
  layers[1].w(1, 0) = -slope;
  layers[1].b = Eigen::Vector2d(-slope * t, slope * t);
  layers[1].act = Activation::identity;
  return MlpModel(std::move(layers), 1);
}

Eigen::VectorXd logit(const Eigen::VectorXd& p) {
  Eigen::VectorXd out(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0 && p[i] < 1.0)) throw std::domain_error("logit needs values in (0,1)");
    out[i] = std::log(p[i] / (1.0 - p[i]));
  }
  return out;
}

}  // namespace berncert

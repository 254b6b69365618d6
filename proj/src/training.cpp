#include "berncert/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace berncert {

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (power_iters_train < 1 || power_iters_freeze < 1) {
    throw std::invalid_argument("power iteration counts must be >= 1");
  }
  if (adversarial) {
    if (adversarial->steps < 1) throw std::invalid_argument("adversarial steps must be >= 1");
    if (!(adversarial->epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
    if (!(adversarial->step_size > 0.0)) throw std::invalid_argument("step size must be > 0");
  }
}

namespace {

DenseLayer random_layer(int in, int out, Activation act, std::mt19937_64& gen) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  DenseLayer l;
  l.w.resize(out, in);
  for (Eigen::Index i = 0; i < l.w.size(); ++i) l.w.data()[i] = dist(gen);
  l.b = Eigen::VectorXd::Zero(out);
  l.act = act;
  return l;
}

Eigen::MatrixXd activate(Activation act, const Eigen::MatrixXd& z, Eigen::MatrixXd& slope) {
  switch (act) {
    case Activation::relu:
      slope = (z.array() > 0.0).cast<double>();
      return z.cwiseMax(0.0);
    case Activation::sigmoid: {
      Eigen::MatrixXd s = z.unaryExpr([](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
      slope = s.array() * (1.0 - s.array());
      return s;
    }
    case Activation::identity:
      slope = Eigen::MatrixXd::Ones(z.rows(), z.cols());
      return z;
  }
  return z;
}

// Column-wise softmax.
Eigen::MatrixXd softmax_cols(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p = z;
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    p.col(c).array() -= z.col(c).maxCoeff();
    p.col(c) = p.col(c).array().exp();
    p.col(c) /= p.col(c).sum();
  }
  return p;
}

struct Gradients {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
};

// Forward/backward over a batch of columns. `output_grad` maps the network
// output to (loss, dLoss/dOutput).
template <typename OutputGrad>
double backprop(const MlpModel& model, const Eigen::MatrixXd& inputs, OutputGrad output_grad,
                Gradients& grads) {
  const auto& layers = model.layers();
  const std::size_t nl = layers.size();
  std::vector<Eigen::MatrixXd> acts(nl + 1);
  std::vector<Eigen::MatrixXd> slopes(nl);
  acts[0] = inputs;
  for (std::size_t i = 0; i < nl; ++i) {
    Eigen::MatrixXd z = layers[i].w * acts[i];
    z.colwise() += layers[i].b;
    acts[i + 1] = activate(layers[i].act, z, slopes[i]);
  }
  Eigen::MatrixXd delta;
  const double loss = output_grad(acts[nl], delta);
  grads.w.resize(nl);
  grads.b.resize(nl);
  for (std::size_t i = nl; i-- > 0;) {
    delta = delta.cwiseProduct(slopes[i]);
    grads.w[i] = delta * acts[i].transpose();
    grads.b[i] = delta.rowwise().sum();
    if (i > 0) delta = layers[i].w.transpose() * delta;
  }
  return loss;
}

class SpectralProjector {
 public:
  explicit SpectralProjector(int num_layers) : vectors_(num_layers) {}

  void apply(MlpModel& model, int iters) {
    for (int i = 0; i < model.head_index(); ++i) {
      DenseLayer& l = model.mutable_layers()[i];
      if (l.w.cwiseAbs().maxCoeff() == 0.0) continue;
      l.w /= spectral_norm(l.w, iters, vectors_[i]);
    }
  }

 private:
  std::vector<Eigen::VectorXd> vectors_;
};

void sgd_update(MlpModel& model, const Gradients& g, double lr) {
  auto& layers = model.mutable_layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].w -= lr * g.w[i];
    layers[i].b -= lr * g.b[i];
  }
}

class Adam {
 public:
  explicit Adam(const MlpModel& model) {
    for (const DenseLayer& l : model.layers()) {
      mw_.push_back(Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()));
      vw_.push_back(mw_.back());
      mb_.push_back(Eigen::VectorXd::Zero(l.b.size()));
      vb_.push_back(mb_.back());
    }
  }

  void step(MlpModel& model, const Gradients& g, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(b1, t_);
    const double c2 = 1.0 - std::pow(b2, t_);
    auto& layers = model.mutable_layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      mw_[i] = b1 * mw_[i] + (1.0 - b1) * g.w[i];
      vw_[i] = b2 * vw_[i] + (1.0 - b2) * g.w[i].cwiseAbs2();
      mb_[i] = b1 * mb_[i] + (1.0 - b1) * g.b[i];
      vb_[i] = b2 * vb_[i] + (1.0 - b2) * g.b[i].cwiseAbs2();
      layers[i].w.array() -=
          lr * (mw_[i].array() / c1) / ((vw_[i].array() / c2).sqrt() + eps);
      layers[i].b.array() -=
          lr * (mb_[i].array() / c1) / ((vb_[i].array() / c2).sqrt() + eps);
    }
  }

 private:
  std::vector<Eigen::MatrixXd> mw_, vw_;
  std::vector<Eigen::VectorXd> mb_, vb_;
  int t_ = 0;
};

}  // namespace

MlpModel init_model(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.input_dim < 1 || spec.feature_dim < 1 || spec.num_classes < 1) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  std::mt19937_64 gen(seed);
  std::vector<DenseLayer> layers;
  int prev = spec.input_dim;
  for (int w : spec.feature_hidden) {
    layers.push_back(random_layer(prev, w, Activation::relu, gen));
    prev = w;
  }
  layers.push_back(random_layer(prev, spec.feature_dim, Activation::sigmoid, gen));
  const int head_index = static_cast<int>(layers.size());
  prev = spec.feature_dim;
  for (int w : spec.head_hidden) {
    layers.push_back(random_layer(prev, w, Activation::relu, gen));
    prev = w;
  }
  layers.push_back(random_layer(prev, spec.num_classes, Activation::identity, gen));
  return normalize_weights(MlpModel(std::move(layers), head_index), 100);
}

double accuracy(const MlpModel& model, const LabeledData& data) {
  if (data.size() == 0) return 0.0;
  int correct = 0;
  for (int i = 0; i < data.size(); ++i) {
    if (model.predict(data.x.row(i).transpose()) == data.y[i]) ++correct;
  }
  return static_cast<double>(correct) / data.size();
}

TrainResult train_toy(const LabeledData& data, const ModelSpec& spec, const TrainConfig& cfg,
                      std::uint64_t seed) {
  cfg.validate();
  if (data.size() == 0) throw std::invalid_argument("training set is empty");
  if (data.input_dim() != spec.input_dim) {
    throw std::invalid_argument("dataset has " + std::to_string(data.input_dim()) +
                                " input columns, model expects " + std::to_string(spec.input_dim));
  }
  for (int label : data.y) {
    if (label < 0 || label >= spec.num_classes) {
      throw std::invalid_argument("label " + std::to_string(label) + " outside 0.." +
                                  std::to_string(spec.num_classes - 1));
    }
  }

  std::mt19937_64 gen(seed);
  MlpModel model = init_model(spec, gen());
  SpectralProjector projector(static_cast<int>(model.layers().size()));
  Adam adam(model);

  const int n = data.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Gradients grads;
  double last_loss = 0.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), gen);
    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int bs = std::min(cfg.batch_size, n - start);
      Eigen::MatrixXd inputs(spec.input_dim, bs);
      Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(spec.num_classes, bs);
      for (int c = 0; c < bs; ++c) {
        const int idx = order[start + c];
        inputs.col(c) = data.x.row(idx).transpose();
        onehot(data.y[idx], c) = 1.0;
      }
      if (cfg.adversarial) {
        AttackConfig at;
        at.norm = cfg.adversarial->norm;
        at.epsilon = cfg.adversarial->epsilon;
        at.steps = cfg.adversarial->steps;
        at.step_size = cfg.adversarial->step_size;
        at.space = AttackSpace::input;
        const DifferentiableClassifier clf = base_input_classifier(model);
        for (int c = 0; c < bs; ++c) {
          const int idx = order[start + c];
          inputs.col(c) = pgd(clf, inputs.col(c), data.y[idx], at).point;
        }
      }
      const double loss = backprop(
          model, inputs,
          [&](const Eigen::MatrixXd& out, Eigen::MatrixXd& delta) {
            const Eigen::MatrixXd p = softmax_cols(out);
            delta = (p - onehot) / bs;
            return -(onehot.array() * (p.array().max(1e-300)).log()).sum() / bs;
          },
          grads);
      adam.step(model, grads, cfg.learning_rate);
      projector.apply(model, cfg.power_iters_train);
      epoch_loss += loss * bs;
    }
    last_loss = epoch_loss / n;
  }

  TrainResult result;
  result.model = normalize_weights(model, cfg.power_iters_freeze);
  result.train_accuracy = accuracy(result.model, data);
  result.final_loss = last_loss;
  return result;
}

MlpModel train_regressor(const RegressionData& data, const std::vector<int>& hidden,
                         const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int n = static_cast<int>(data.x.size());
  if (n == 0 || data.y.size() != data.x.size()) {
    throw std::invalid_argument("regression data must be non-empty with matching x and y");
  }
  std::mt19937_64 gen(seed);
  std::vector<DenseLayer> layers;
  int prev = 1;
  for (int w : hidden) {
    layers.push_back(random_layer(prev, w, Activation::relu, gen));
    // Spread the ReLU kinks over the unit interval.
    std::uniform_real_distribution<double> kink(-1.0, 1.0);
    for (Eigen::Index i = 0; i < layers.back().b.size(); ++i) layers.back().b[i] = kink(gen);
    prev = w;
  }
  layers.push_back(random_layer(prev, 1, Activation::identity, gen));
  MlpModel model(std::move(layers), 0);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Gradients grads;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), gen);
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int bs = std::min(cfg.batch_size, n - start);
      Eigen::MatrixXd inputs(1, bs);
      Eigen::RowVectorXd target(bs);
      for (int c = 0; c < bs; ++c) {
        inputs(0, c) = data.x[order[start + c]];
        target[c] = data.y[order[start + c]];
      }
      backprop(
          model, inputs,
          [&](const Eigen::MatrixXd& out, Eigen::MatrixXd& delta) {
            delta = (out - target) / bs;
            return 0.5 * (out - target).squaredNorm() / bs;
          },
          grads);
      sgd_update(model, grads, cfg.learning_rate);
    }
  }
  return model;
}

}  // namespace berncert

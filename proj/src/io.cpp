#include "berncert/io.hpp"

#include <fstream>
#include <sstream>

#include "berncert/csv.hpp"
#include "berncert/errors.hpp"

namespace berncert {

nlohmann::json model_to_json(const MlpModel& model) {
  nlohmann::json layers = nlohmann::json::array();
  for (const DenseLayer& l : model.layers()) {
    nlohmann::json w = nlohmann::json::array();
    for (Eigen::Index r = 0; r < l.w.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < l.w.cols(); ++c) row.push_back(l.w(r, c));
      w.push_back(std::move(row));
    }
    nlohmann::json b = nlohmann::json::array();
    for (Eigen::Index i = 0; i < l.b.size(); ++i) b.push_back(l.b[i]);
    layers.push_back({{"w", std::move(w)}, {"b", std::move(b)}, {"act", activation_tag(l.act)}});
  }
  return {{"layers", std::move(layers)},
          {"head_index", model.head_index()},
          {"d", model.feature_dim()},
          {"k", model.num_classes()}};
}

MlpModel model_from_json(const nlohmann::json& j) {
  try {
    std::vector<DenseLayer> layers;
    for (const auto& lj : j.at("layers")) {
      DenseLayer l;
      const auto& w = lj.at("w");
      const auto rows = static_cast<Eigen::Index>(w.size());
      const auto cols = rows > 0 ? static_cast<Eigen::Index>(w.at(0).size()) : 0;
      l.w.resize(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(w.at(r).size()) != cols) throw ShapeError("ragged weight matrix");
        for (Eigen::Index c = 0; c < cols; ++c) l.w(r, c) = w.at(r).at(c).get<double>();
      }
      const auto& b = lj.at("b");
      l.b.resize(static_cast<Eigen::Index>(b.size()));
      for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b[i] = b.at(i).get<double>();
      l.act = parse_activation(lj.at("act").get<std::string>());
      layers.push_back(std::move(l));
    }
    MlpModel model(std::move(layers), j.at("head_index").get<int>());
    if (j.contains("d") && j.at("d").get<int>() != model.feature_dim()) {
      throw ShapeError("model JSON field d does not match the layer shapes");
    }
    if (j.contains("k") && j.at("k").get<int>() != model.num_classes()) {
      throw ShapeError("model JSON field k does not match the layer shapes");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed model JSON: ") + e.what());
  }
}

nlohmann::json smoother_to_json(const BernsteinSmoother& s) {
  return {{"n", s.degree()}, {"d", s.dim()}, {"k", s.num_classes()}, {"coeffs", s.coeffs()}};
}

BernsteinSmoother smoother_from_json(const nlohmann::json& j) {
  try {
    return BernsteinSmoother(j.at("n").get<int>(), j.at("d").get<int>(), j.at("k").get<int>(),
                             j.at("coeffs").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed smoother JSON: ") + e.what());
  }
}

std::string dump_json(const nlohmann::json& j) {
  // nlohmann prints doubles with max_digits10 (17), enough for exact round trips.
  return j.dump(1);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text(path, dump_json(j) + "\n");
}

MlpModel load_model(const std::string& path) { return model_from_json(read_json_file(path)); }

void save_model(const std::string& path, const MlpModel& model) {
  write_json_file(path, model_to_json(model));
}

}  // namespace berncert

#include "cfr/model_io.hpp"

#include <fstream>

#include "cfr/errors.hpp"

namespace cfr {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (long i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& context) {
  if (!j.is_array() || j.empty()) throw DataError(context + ": expected array of rows");
  const long rows = static_cast<long>(j.size());
  const long cols = static_cast<long>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<long>(row.size()) != cols) {
      throw DataError(context + ": ragged rows");
    }
    for (long k = 0; k < cols; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& context) {
  if (!j.is_array()) throw DataError(context + ": expected array");
  Eigen::VectorXd v(static_cast<long>(j.size()));
  for (long i = 0; i < v.size(); ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

void dump_to(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out.flush()) throw DataError("write failed for " + path);
}

}  // namespace

Eigen::VectorXd SavedModel::predict(const Eigen::MatrixXd& X) const {
  if (is_classifier) throw DataError("classifier model cannot produce regression predictions");
  if (X.cols() != beta.size()) {
    throw DataError("model expects " + std::to_string(beta.size()) + " features, data has " +
                    std::to_string(X.cols()));
  }
  // Deployment prediction is plain linear for every method; the rectifier in
  // the file is a training artifact kept for inspection and round-tripping.
  Eigen::VectorXd pred = X * beta;
  if (intercept) pred.array() += *intercept;
  return pred;
}

void save_regression_model(const std::string& path, const std::string& method,
                           const Eigen::VectorXd& beta,
                           const std::optional<RectifierWeights>& w,
                           std::optional<double> intercept,
                           const nlohmann::json& train_config,
                           const std::vector<EpochLosses>& history) {
  json j;
  j["method"] = method;
  j["p"] = beta.size();
  j["beta"] = std::vector<double>(beta.data(), beta.data() + beta.size());
  j["w"] = w ? matrix_to_json(w->w) : json(nullptr);
  j["intercept"] = intercept ? json(*intercept) : json(nullptr);
  j["train_config"] = train_config;
  json hist = json::array();
  for (const auto& h : history) hist.push_back(json::array({h.l_r, h.l_cfr}));
  j["history"] = std::move(hist);
  dump_to(path, j);
}

void save_classifier_model(const std::string& path, const CfrClassifier& clf,
                           const nlohmann::json& train_config) {
  json j;
  j["p"] = clf.z_weights.rows();
  j["C"] = clf.C;
  j["z_weights"] = matrix_to_json(clf.z_weights);
  j["class_bias"] =
      std::vector<double>(clf.class_bias.data(), clf.class_bias.data() + clf.class_bias.size());
  j["w"] = matrix_to_json(clf.weights.w);
  j["train_config"] = train_config;
  dump_to(path, j);
}

SavedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }

  SavedModel m;
  try {
    if (j.contains("C")) {
      m.is_classifier = true;
      m.p = j.at("p").get<int>();
      m.C = j.at("C").get<int>();
      m.z_weights = matrix_from_json(j.at("z_weights"), path + ": z_weights");
      m.class_bias = vector_from_json(j.at("class_bias"), path + ": class_bias");
      m.w = RectifierWeights{matrix_from_json(j.at("w"), path + ": w")};
      if (j.contains("train_config")) m.train_config = j.at("train_config");
    } else {
      m.method = j.at("method").get<std::string>();
      m.p = j.at("p").get<int>();
      m.beta = vector_from_json(j.at("beta"), path + ": beta");
      if (j.contains("w") && !j.at("w").is_null()) {
        m.w = RectifierWeights{matrix_from_json(j.at("w"), path + ": w")};
      }
      if (j.contains("intercept") && !j.at("intercept").is_null()) {
        m.intercept = j.at("intercept").get<double>();
      }
      if (j.contains("train_config")) m.train_config = j.at("train_config");
      if (j.contains("history")) {
        for (const auto& h : j.at("history")) {
          if (!h.is_array() || h.size() != 2) {
            throw DataError(path + ": history entries must be [l_r, l_cfr] pairs");
          }
          m.history.push_back({h.at(0).get<double>(), h.at(1).get<double>()});
        }
      }
    }
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }

  if (m.is_classifier) {
    if (m.z_weights.rows() != m.p || m.class_bias.size() != m.C ||
        m.z_weights.cols() != m.C || m.w->w.rows() != m.p || m.w->w.cols() != m.p) {
      throw DataError(path + ": inconsistent classifier dimensions");
    }
  } else {
    if (m.beta.size() != m.p) throw DataError(path + ": beta length does not match p");
    if (m.w && (m.w->w.rows() != m.p || m.w->w.cols() != m.p)) {
      throw DataError(path + ": w shape does not match p");
    }
    if (m.w) {
      for (long d = 0; d < m.w->w.rows(); ++d) {
        if (m.w->w(d, d) != 0.0) throw DataError(path + ": w diagonal must be zero");
      }
    }
  }
  return m;
}

}  // namespace cfr

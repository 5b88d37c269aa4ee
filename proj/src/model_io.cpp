#include "mvngb/model_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mvngb/error.hpp"
#include "mvngb/mvn.hpp"

namespace mvngb::io {
namespace {

using nlohmann::json;

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json tree_node_to_json(const RegressionTree& tree, int id) {
  const RegressionTree::Node& node = tree.nodes()[id];
  json out;
  out["n"] = node.n_samples;
  out["value"] = node.value;
  if (!node.is_leaf()) {
    out["feature"] = node.feature;
    out["threshold"] = node.threshold;
    out["left"] = tree_node_to_json(tree, node.left);
    out["right"] = tree_node_to_json(tree, node.right);
  }
  return out;
}

int tree_node_from_json(const json& j, std::vector<RegressionTree::Node>& nodes) {
  const int id = static_cast<int>(nodes.size());
  RegressionTree::Node node;
  node.n_samples = j.at("n").get<Eigen::Index>();
  node.value = j.at("value").get<double>();
  nodes.push_back(node);
  if (j.contains("feature")) {
    nodes[id].feature = j.at("feature").get<int>();
    nodes[id].threshold = j.at("threshold").get<double>();
    if (nodes[id].feature < 0) {
      throw DataError("tree split has a negative feature index");
    }
    const int left = tree_node_from_json(j.at("left"), nodes);
    nodes[id].left = left;
    const int right = tree_node_from_json(j.at("right"), nodes);
    nodes[id].right = right;
  }
  return id;
}

json config_to_json(const BoostConfig& c) {
  return {{"max_stages", c.max_stages},
          {"learning_rate", c.learning_rate},
          {"patience", c.patience},
          {"natural_gradient", c.natural_gradient},
          {"seed", c.seed},
          {"tree",
           {{"max_depth", c.tree.max_depth},
            {"min_samples_leaf", c.tree.min_samples_leaf},
            {"min_samples_split", c.tree.min_samples_split}}}};
}

BoostConfig config_from_json(const json& j) {
  BoostConfig c;
  c.max_stages = j.at("max_stages").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.patience = j.at("patience").get<int>();
  c.natural_gradient = j.at("natural_gradient").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const json& t = j.at("tree");
  c.tree.max_depth = t.at("max_depth").get<int>();
  c.tree.min_samples_leaf = t.at("min_samples_leaf").get<int>();
  c.tree.min_samples_split = t.at("min_samples_split").get<int>();
  return c;
}

json boost_model_to_json(const BoostModel& m) {
  json stages = json::array();
  for (const Stage& s : m.stages) {
    json trees = json::array();
    for (const RegressionTree& t : s.trees) {
      trees.push_back(tree_node_to_json(t, 0));
    }
    stages.push_back({{"rho", s.rho}, {"trees", std::move(trees)}});
  }
  json history = json::array();
  for (const StageRecord& r : m.history) {
    history.push_back(
        {r.stage, r.rho, number_or_null(r.train_nll), number_or_null(r.val_nll)});
  }
  return {{"family", m.family},
          {"n_features", m.n_features},
          {"theta0", std::vector<double>(m.theta0.data(), m.theta0.data() + m.theta0.size())},
          {"best_stage", m.best_stage},
          {"config", config_to_json(m.config)},
          {"stages", std::move(stages)},
          {"history", std::move(history)}};
}

BoostModel boost_model_from_json(const json& j) {
  BoostModel m;
  m.family = j.at("family").get<std::string>();
  const auto family = make_family(m.family);
  m.n_features = j.at("n_features").get<int>();
  const auto theta0 = j.at("theta0").get<std::vector<double>>();
  m.theta0 = Eigen::Map<const Vector>(theta0.data(), static_cast<Eigen::Index>(theta0.size()));
  if (m.theta0.size() != family->param_count()) {
    throw DataError("theta0 length does not match the model family");
  }
  m.best_stage = j.at("best_stage").get<int>();
  m.config = config_from_json(j.at("config"));
  for (const json& s : j.at("stages")) {
    Stage stage;
    stage.rho = s.at("rho").get<double>();
    for (const json& t : s.at("trees")) {
      std::vector<RegressionTree::Node> nodes;
      tree_node_from_json(t, nodes);
      RegressionTree tree(std::move(nodes));
      if (tree.required_features() > m.n_features) {
        throw DataError("tree splits on a feature the model does not have");
      }
      stage.trees.push_back(std::move(tree));
    }
    if (static_cast<int>(stage.trees.size()) != family->param_count()) {
      throw DataError("stage has the wrong number of trees");
    }
    m.stages.push_back(std::move(stage));
  }
  if (m.best_stage < 0 || m.best_stage > static_cast<int>(m.stages.size())) {
    throw DataError("best_stage is outside the stored stages");
  }
  for (const json& r : j.at("history")) {
    m.history.push_back({r.at(0).get<int>(), r.at(1).get<double>(), number_from(r.at(2)),
                         number_from(r.at(3))});
  }
  return m;
}

json scaling_to_json(const std::optional<MinMaxScaling>& s) {
  if (!s) {
    return nullptr;
  }
  return {{"min", s->min}, {"max", s->max}};
}

std::optional<MinMaxScaling> scaling_from_json(const json& j, std::size_t width) {
  if (j.is_null()) {
    return std::nullopt;
  }
  MinMaxScaling s{j.at("min").get<std::vector<double>>(), j.at("max").get<std::vector<double>>()};
  if (s.min.size() != width || s.max.size() != width) {
    throw DataError("scaling record has the wrong width");
  }
  return s;
}

}  // namespace

MinMaxScaling MinMaxScaling::fit(ConstRowRef values) {
  MinMaxScaling s;
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    s.min.push_back(values.col(j).minCoeff());
    s.max.push_back(values.col(j).maxCoeff());
  }
  return s;
}

double MinMaxScaling::range(std::size_t j) const {
  const double r = max[j] - min[j];
  return r > 0.0 ? r : 1.0;
}

RowMatrix MinMaxScaling::apply(ConstRowRef values) const {
  if (static_cast<std::size_t>(values.cols()) != min.size()) {
    throw InvalidArgument("scaling width does not match the data");
  }
  RowMatrix out(values.rows(), values.cols());
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    out.col(j) = (values.col(j).array() - min[j]) / range(j);
  }
  return out;
}

json to_json(const ModelFile& model) {
  json models = json::array();
  for (const BoostModel& m : model.models) {
    models.push_back(boost_model_to_json(m));
  }
  return {{"format_version", model.format_version},
          {"family", model.family},
          {"p", model.p},
          {"feature_names", model.feature_names},
          {"target_names", model.target_names},
          {"x_scaling", scaling_to_json(model.x_scaling)},
          {"y_scaling", scaling_to_json(model.y_scaling)},
          {"metadata",
           {{"n_train", model.metadata.n_train},
            {"n_val", model.metadata.n_val},
            {"seed", model.metadata.seed},
            {"created", model.metadata.created}}},
          {"models", std::move(models)}};
}

ModelFile model_from_json(const json& doc) {
  try {
    ModelFile model;
    model.format_version = doc.at("format_version").get<int>();
    if (model.format_version > kModelFormatVersion || model.format_version < 1) {
      std::ostringstream msg;
      msg << "model format version " << model.format_version << " is not supported (max "
          << kModelFormatVersion << ")";
      throw DataError(msg.str());
    }
    model.family = doc.at("family").get<std::string>();
    model.p = doc.at("p").get<int>();
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    model.target_names = doc.at("target_names").get<std::vector<std::string>>();
    if (model.p < 1 || static_cast<int>(model.target_names.size()) != model.p) {
      throw DataError("target dimension does not match the target names");
    }
    model.x_scaling = scaling_from_json(doc.at("x_scaling"), model.feature_names.size());
    model.y_scaling = scaling_from_json(doc.at("y_scaling"), model.target_names.size());
    const json& meta = doc.at("metadata");
    model.metadata.n_train = meta.at("n_train").get<Eigen::Index>();
    model.metadata.n_val = meta.at("n_val").get<Eigen::Index>();
    model.metadata.seed = meta.at("seed").get<std::uint64_t>();
    model.metadata.created = meta.at("created").get<std::string>();
    for (const json& m : doc.at("models")) {
      model.models.push_back(boost_model_from_json(m));
    }

    const std::size_t expected = model.independent() ? static_cast<std::size_t>(model.p) : 1;
    const std::string member_family =
        model.independent() ? "normal" : "mvn-" + std::to_string(model.p);
    if (!model.independent() && model.family != member_family) {
      throw DataError("unknown model family '" + model.family + "'");
    }
    if (model.models.size() != expected) {
      throw DataError("model file holds the wrong number of boosted models");
    }
    for (const BoostModel& m : model.models) {
      if (m.family != member_family ||
          m.n_features != static_cast<int>(model.feature_names.size())) {
        throw DataError("boosted model does not match the file's family or features");
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

std::string dump_model(const ModelFile& model) { return to_json(model).dump(1) + "\n"; }

ModelFile parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  return model_from_json(doc);
}

void save_model(const ModelFile& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write model to '" + path.string() + "'");
  }
  out << dump_model(model);
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open model '" + path.string() + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_model(text.str());
}

RowMatrix predict_theta(const ModelFile& model, ConstRowRef x, kernels::Exec exec) {
  if (x.cols() != static_cast<Eigen::Index>(model.feature_names.size())) {
    throw InvalidArgument("feature count does not match the model");
  }
  const RowMatrix features = model.x_scaling ? model.x_scaling->apply(x) : RowMatrix(x);
  RowMatrix theta;
  if (model.independent()) {
    theta = mvngb::predict_theta(IndependentModel{model.models}, features, exec);
  } else {
    theta = mvngb::predict_theta(model.models.front(), features, exec);
  }
  if (!model.y_scaling) {
    return theta;
  }
  // Back to original units: mu = min + r * mu_s, Sigma = D Sigma_s D.
  const int p = model.p;
  Vector range(p), offset(p);
  for (int j = 0; j < p; ++j) {
    range(j) = model.y_scaling->range(j);
    offset(j) = model.y_scaling->min[j];
  }
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    const mvn::MomentForm scaled = mvn::to_moment_form(theta.row(i).transpose());
    const Vector mean = offset + range.cwiseProduct(scaled.mean);
    const Matrix cov = range.asDiagonal() * scaled.covariance * range.asDiagonal();
    theta.row(i) = mvn::fit_theta_from_moments(mean, cov).transpose();
  }
  return theta;
}

}  // namespace mvngb::io

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mvngb/boosting.hpp"
#include "mvngb/types.hpp"

namespace mvngb::io {

inline constexpr int kModelFormatVersion = 1;

// Per-column min-max transform fitted on training data: (v - min) / (max - min).
// Constant columns use a unit range.
struct MinMaxScaling {
  std::vector<double> min;
  std::vector<double> max;

  static MinMaxScaling fit(ConstRowRef values);
  RowMatrix apply(ConstRowRef values) const;
  double range(std::size_t j) const;
};

struct TrainingMetadata {
  Eigen::Index n_train = 0;
  Eigen::Index n_val = 0;
  std::uint64_t seed = 0;
  std::string created;  // UTC, ISO 8601
};

// Persisted model: either one joint multivariate model ("mvn-<p>") or one
// univariate model per target ("univariate-set").
struct ModelFile {
  int format_version = kModelFormatVersion;
  std::string family;
  int p = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;
  std::vector<BoostModel> models;
  std::optional<MinMaxScaling> x_scaling;
  std::optional<MinMaxScaling> y_scaling;
  TrainingMetadata metadata;

  bool independent() const { return family == "univariate-set"; }
};

nlohmann::json to_json(const ModelFile& model);
// Throws DataError for malformed documents or an unsupported format_version.
ModelFile model_from_json(const nlohmann::json& doc);

std::string dump_model(const ModelFile& model);
ModelFile parse_model(const std::string& text);
void save_model(const ModelFile& model, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

// Multivariate-Gaussian parameters in the original target units for raw
// (unscaled) feature rows.
RowMatrix predict_theta(const ModelFile& model, ConstRowRef x, kernels::Exec exec = kernels::Exec::parallel);

}  // namespace mvngb::io

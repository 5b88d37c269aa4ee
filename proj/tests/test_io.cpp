#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "doctest.h"
#include "mvngb/csv.hpp"
#include "mvngb/error.hpp"
#include "mvngb/model_io.hpp"
#include "mvngb/mvn.hpp"
#include "mvngb/simulation.hpp"

using namespace mvngb;

namespace {

io::Table parse(const std::string& text) {
  std::istringstream in(text);
  return io::parse_csv(in, "input.csv");
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

io::ModelFile small_model(bool independent, bool scaled) {
  const auto train = simulation::generate(300, simulation::Variant::modified, 21);
  const auto val = simulation::generate(100, simulation::Variant::modified, 22);
  BoostConfig c;
  c.max_stages = 20;
  c.learning_rate = 0.1;
  c.patience = 3;
  io::ModelFile f;
  f.p = 2;
  f.feature_names = {"x"};
  f.target_names = {"y1", "y2"};
  RowMatrix x = train.x, y = train.y, xv = val.x, yv = val.y;
  if (scaled) {
    f.x_scaling = io::MinMaxScaling::fit(x);
    f.y_scaling = io::MinMaxScaling::fit(y);
    x = f.x_scaling->apply(x);
    xv = f.x_scaling->apply(xv);
    y = f.y_scaling->apply(y);
    yv = f.y_scaling->apply(yv);
  }
  if (independent) {
    f.family = "univariate-set";
    f.models = fit_independent(x, y, xv, yv, c).dims;
  } else {
    f.family = "mvn-2";
    f.models = {fit(x, y, xv, yv, c)};
  }
  f.metadata = {300, 100, 0, "2024-01-01T00:00:00Z"};
  return f;
}

}  // namespace

TEST_CASE("csv parsing") {
  const io::Table t = parse("a, b,c\n1,2,3\n\n-4.5,+5e-1,6\n");
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.values.rows() == 2);
  CHECK(t.values(1, 0) == -4.5);
  CHECK(t.values(1, 1) == 0.5);
  CHECK(t.select({"c", "a"})(0, 0) == 3.0);
  CHECK(t.has_column("b"));
  CHECK_THROWS_AS(t.column("d"), DataError);

  const io::Table empty = parse("x,y\n");
  CHECK(empty.values.rows() == 0);
  CHECK(empty.values.cols() == 2);
}

TEST_CASE("csv diagnostics name the file, line and column") {
  CHECK(parse_error("a,b\n1,2\n3\n") == "input.csv:3: expected 2 cells, found 1");
  CHECK(parse_error("a,b\n1,abc\n") == "input.csv:2: column 'b' is not numeric: 'abc'");
  CHECK(parse_error("a,b\n1,nan\n").find("non-finite") != std::string::npos);
  CHECK(parse_error("a,b\n1,inf\n").find("non-finite") != std::string::npos);
  CHECK(parse_error("a,b\n1,\n").find("not numeric") != std::string::npos);
  CHECK(parse_error("a,a\n1,2\n").find("duplicate") != std::string::npos);
  CHECK(parse_error("").find("missing header") != std::string::npos);
  CHECK_THROWS_AS(io::read_csv("/nonexistent/file.csv"), DataError);
}

TEST_CASE("csv writing round-trips doubles exactly") {
  RowMatrix v(2, 3);
  v << 0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0, 123456789.123;
  std::ostringstream out;
  io::write_csv(out, {"a", "b", "c"}, v);
  const io::Table back = parse(out.str());
  CHECK(back.values == v);
  CHECK(io::format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(io::format_double(0.5) == "0.5");
  CHECK(io::split_list(" y1, y2 ,,y3") == std::vector<std::string>{"y1", "y2", "y3"});
}

TEST_CASE("min-max scaling") {
  RowMatrix v(3, 2);
  v << 1, 5, 2, 5, 3, 5;
  const io::MinMaxScaling s = io::MinMaxScaling::fit(v);
  const RowMatrix a = s.apply(v);
  CHECK(a(0, 0) == 0.0);
  CHECK(a(2, 0) == 1.0);
  CHECK(a(1, 1) == 0.0);  // constant column keeps a unit range
  CHECK_THROWS_AS(s.apply(RowMatrix::Zero(1, 3)), InvalidArgument);
}

TEST_CASE("model files round-trip byte for byte") {
  for (bool independent : {false, true}) {
    for (bool scaled : {false, true}) {
      const io::ModelFile f = small_model(independent, scaled);
      const std::string text = io::dump_model(f);
      const io::ModelFile back = io::parse_model(text);
      CHECK(io::dump_model(back) == text);

      const auto test = simulation::generate(50, simulation::Variant::modified, 23);
      CHECK(io::predict_theta(f, test.x) == io::predict_theta(back, test.x));
    }
  }
}

TEST_CASE("model files preserve NaN validation losses as null") {
  io::ModelFile f = small_model(false, false);
  f.models[0].history[1].val_nll = std::numeric_limits<double>::quiet_NaN();
  const std::string text = io::dump_model(f);
  CHECK(text.find("null") != std::string::npos);
  CHECK(std::isnan(io::parse_model(text).models[0].history[1].val_nll));
}

TEST_CASE("predictions undo target scaling") {
  const io::ModelFile f = small_model(false, true);
  const auto test = simulation::generate(20, simulation::Variant::modified, 24);
  const RowMatrix theta = io::predict_theta(f, test.x);
  const RowMatrix scaled = predict_theta(f.models[0], f.x_scaling->apply(test.x));
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    const auto orig = mvn::to_moment_form(theta.row(i).transpose());
    const auto sc = mvn::to_moment_form(scaled.row(i).transpose());
    for (int j = 0; j < 2; ++j) {
      const double r = f.y_scaling->range(static_cast<std::size_t>(j));
      CHECK(orig.mean(j) == doctest::Approx(f.y_scaling->min[static_cast<std::size_t>(j)] + r * sc.mean(j)));
      CHECK(orig.covariance(j, j) == doctest::Approx(r * r * sc.covariance(j, j)));
    }
  }
}

TEST_CASE("model loading rejects bad files") {
  const io::ModelFile f = small_model(false, false);
  nlohmann::json doc = io::to_json(f);

  nlohmann::json newer = doc;
  newer["format_version"] = io::kModelFormatVersion + 1;
  CHECK_THROWS_AS(io::model_from_json(newer), DataError);

  nlohmann::json missing = doc;
  missing.erase("models");
  CHECK_THROWS_AS(io::model_from_json(missing), DataError);

  nlohmann::json wrong_family = doc;
  wrong_family["family"] = "mvn-3";
  CHECK_THROWS_AS(io::model_from_json(wrong_family), DataError);

  nlohmann::json bad_feature = doc;
  bad_feature["models"][0]["stages"][0]["trees"][0]["feature"] = 4;
  bad_feature["models"][0]["stages"][0]["trees"][0]["threshold"] = 0.0;
  bad_feature["models"][0]["stages"][0]["trees"][0]["left"] = {{"n", 1}, {"value", 0.0}};
  bad_feature["models"][0]["stages"][0]["trees"][0]["right"] = {{"n", 1}, {"value", 0.0}};
  CHECK_THROWS_AS(io::model_from_json(bad_feature), DataError);

  CHECK_THROWS_AS(io::parse_model("{not json"), DataError);
  CHECK_THROWS_AS(io::load_model("/nonexistent/model.json"), DataError);
  CHECK_THROWS_AS(io::predict_theta(f, RowMatrix::Zero(2, 3)), InvalidArgument);
}

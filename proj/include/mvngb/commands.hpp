#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mvngb/boosting.hpp"
#include "mvngb/error.hpp"
#include "mvngb/metrics.hpp"
#include "mvngb/model_io.hpp"
#include "mvngb/simulation.hpp"

// Command implementations behind the `mvngb` executable. Each command is a
// plain function so tests can drive it without spawning a process.
namespace mvngb::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

// Raised for bad flag combinations and refused overwrites; maps to kUsage.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct SimulateOptions {
  Eigen::Index n = 1000;
  std::string variant = "modified";
  std::uint64_t seed = 0;
  std::filesystem::path out;
  std::optional<std::filesystem::path> truth_out;  // default: <out stem>.truth.csv
  bool force = false;
};

// Writes x,y1,y2 and the sidecar x,mu1,mu2,var1,var2,rho.
void cmd_simulate(const SimulateOptions& options);
std::filesystem::path default_truth_path(const std::filesystem::path& out);

struct TrainOptions {
  std::filesystem::path data;
  std::vector<std::string> targets;
  std::vector<std::string> features;  // empty: every non-target column
  std::optional<std::filesystem::path> val_data;
  double val_fraction = 0.2;  // used only without val_data
  bool independent = false;
  BoostConfig config;
  bool scale_x = false;
  bool scale_y = false;
  std::filesystem::path out;
  std::optional<std::filesystem::path> log;  // default: <out stem>.log.csv
  bool force = false;
};

io::ModelFile cmd_train(const TrainOptions& options, std::ostream& status);

struct PredictOptions {
  std::filesystem::path model;
  std::filesystem::path data;
  std::filesystem::path out;
  bool force = false;
};

// Columns: mu_i, nu_i_j (i <= j, row-major), sigma_i_j (i <= j), then nll
// when every target column is present in the data.
void cmd_predict(const PredictOptions& options);
std::vector<std::string> prediction_header(int p, bool with_nll);

struct EvaluateOptions {
  std::filesystem::path model;
  std::filesystem::path data;
  std::optional<std::filesystem::path> truth;  // x,mu1,mu2,var1,var2,rho sidecar
  double alpha = 0.9;
  std::optional<std::filesystem::path> out;
  bool force = false;
};

metrics::MetricsReport cmd_evaluate(const EvaluateOptions& options, std::ostream& text);
void write_report_csv(std::ostream& out, const metrics::MetricsReport& report);
void write_report_text(std::ostream& out, const metrics::MetricsReport& report);

struct BenchmarkOptions {
  simulation::ExperimentPlan plan;
  std::filesystem::path out_dir;
  bool force = false;
  bool quiet = false;
};

// Writes <out_dir>/results.csv and <out_dir>/summary.csv.
std::vector<simulation::CellResult> cmd_benchmark(const BenchmarkOptions& options,
                                                  std::ostream& text);

// Full command-line entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace mvngb::cli

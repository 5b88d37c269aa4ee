#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mvngb/boosting.hpp"
#include "mvngb/metrics.hpp"
#include "mvngb/types.hpp"

// Bivariate heteroscedastic benchmark with a known conditional distribution:
// X ~ U(0, pi), Y | X ~ N(mu(X), Sigma(X)).
namespace mvngb::simulation {

// `modified` adds +x to mu_1 and -x^2 to mu_2; `williams_original` omits both.
enum class Variant { modified, williams_original };

std::string to_string(Variant variant);
Variant parse_variant(const std::string& name);

struct TrueMoments {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double var1 = 0.0;
  double var2 = 0.0;
  double rho = 0.0;

  Matrix covariance() const;  // off-diagonal sigma_1 sigma_2 rho
};

TrueMoments true_moments(double x, Variant variant);
ThetaVector true_params(double x, Variant variant);

struct SimulatedDataset {
  RowMatrix x;           // n x 1, in [0, pi]
  RowMatrix y;           // n x 2
  RowMatrix theta_true;  // n x 5
  Variant variant = Variant::modified;
  std::uint64_t seed = 0;
};

SimulatedDataset generate(Eigen::Index n, Variant variant, std::uint64_t seed);

enum class Method { ngb, indep_ngb, plain_gb };

std::string to_string(Method method);
Method parse_method(const std::string& name);

struct ExperimentPlan {
  std::vector<int> n_train = {500, 1000, 5000};
  int n_val = 300;
  int n_test = 1000;
  int replications = 5;
  std::vector<Method> methods = {Method::ngb, Method::indep_ngb, Method::plain_gb};
  Variant variant = Variant::modified;
  BoostConfig config;
  std::uint64_t master_seed = 0;
  double alpha = 0.9;

  // Full-size protocol: N in {500, 1000, 3000, 5000, 8000, 10000}, 50 replications.
  static ExperimentPlan full_table1();
  void validate() const;
};

struct CellResult {
  int n_train = 0;
  Method method = Method::ngb;
  int replication = 0;
  double kl = 0.0;
  double nll = 0.0;
  double rmse = 0.0;
  double pr_coverage = 0.0;
  double pr_area = 0.0;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

struct AggregateRow {
  int n_train = 0;
  Method method = Method::ngb;
  int failures = 0;
  metrics::Summary kl, nll, rmse, pr_coverage, pr_area;
};

enum class SplitRole : std::uint64_t { train = 1, validation = 2, test = 3 };

// Independent, individually reproducible seed for one dataset of one cell.
std::uint64_t sub_seed(std::uint64_t master, int n_train, int replication, SplitRole role);

// Fits and scores one method on one (N, replication) cell. Exceptions are
// recorded in CellResult::error.
CellResult run_cell(const ExperimentPlan& plan, int n_train, int replication, Method method);

// Every (N, replication, method) cell, ordered by N, then replication, then
// method. Cells run in parallel when OpenMP is available; the output does not
// depend on the thread count.
std::vector<CellResult> run_experiment(
    const ExperimentPlan& plan,
    const std::function<void(const CellResult&)>& on_cell = nullptr);

std::vector<AggregateRow> aggregate(const std::vector<CellResult>& results);

void write_results_csv(std::ostream& out, const std::vector<CellResult>& results);
void write_summary_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_summary_table(std::ostream& out, const std::vector<AggregateRow>& rows,
                         double alpha = 0.9);

}  // namespace mvngb::simulation

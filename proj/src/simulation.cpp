#include "mvngb/simulation.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "mvngb/csv.hpp"
#include "mvngb/error.hpp"
#include "mvngb/mvn.hpp"

namespace mvngb::simulation {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct CellData {
  SimulatedDataset train;
  SimulatedDataset val;
  SimulatedDataset test;
};

CellData make_cell_data(const ExperimentPlan& plan, int n_train, int replication) {
  const auto seed = [&](SplitRole role) {
    return sub_seed(plan.master_seed, n_train, replication, role);
  };
  return {generate(n_train, plan.variant, seed(SplitRole::train)),
          generate(plan.n_val, plan.variant, seed(SplitRole::validation)),
          generate(plan.n_test, plan.variant, seed(SplitRole::test))};
}

CellResult score_cell(const ExperimentPlan& plan, const CellData& data, int n_train,
                      int replication, Method method, kernels::Exec exec) {
  CellResult cell;
  cell.n_train = n_train;
  cell.method = method;
  cell.replication = replication;
  try {
    BoostConfig config = plan.config;
    config.exec = exec;
    RowMatrix predicted;
    if (method == Method::indep_ngb) {
      const IndependentModel model =
          fit_independent(data.train.x, data.train.y, data.val.x, data.val.y, config);
      predicted = predict_theta(model, data.test.x, exec);
    } else {
      config.natural_gradient = method == Method::ngb;
      const BoostModel model = fit(data.train.x, data.train.y, data.val.x, data.val.y, config);
      predicted = predict_theta(model, data.test.x, exec);
    }
    const metrics::MetricsReport report =
        metrics::evaluate(predicted, data.test.y, data.test.theta_true, plan.alpha);
    cell.kl = *report.kl_mean;
    cell.nll = report.nll_mean;
    cell.rmse = report.rmse;
    cell.pr_coverage = report.pr_coverage;
    cell.pr_area = report.pr_area_mean;
  } catch (const std::exception& e) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    cell.kl = cell.nll = cell.rmse = cell.pr_coverage = cell.pr_area = nan;
    cell.error = e.what();
    if (cell.error.empty()) {
      cell.error = "unknown failure";
    }
  }
  return cell;
}

}  // namespace

std::string to_string(Variant variant) {
  return variant == Variant::modified ? "modified" : "williams-original";
}

Variant parse_variant(const std::string& name) {
  if (name == "modified") return Variant::modified;
  if (name == "williams-original") return Variant::williams_original;
  throw InvalidArgument("unknown simulation variant '" + name +
                        "' (expected modified or williams-original)");
}

Matrix TrueMoments::covariance() const {
  Matrix cov(2, 2);
  const double off = std::sqrt(var1) * std::sqrt(var2) * rho;
  cov << var1, off, off, var2;
  return cov;
}

TrueMoments true_moments(double x, Variant variant) {
  TrueMoments m;
  m.mu1 = std::sin(2.5 * x) * std::sin(1.5 * x);
  m.mu2 = std::cos(3.5 * x) * std::cos(0.5 * x);
  if (variant == Variant::modified) {
    m.mu1 += x;
    m.mu2 -= x * x;
  }
  const double s1 = 1.0 - std::sin(2.5 * x);
  const double s2 = 1.0 - std::cos(3.5 * x);
  m.var1 = 0.01 + 0.25 * s1 * s1;
  m.var2 = 0.01 + 0.25 * s2 * s2;
  m.rho = std::sin(2.5 * x) * std::cos(0.5 * x);
  return m;
}

ThetaVector true_params(double x, Variant variant) {
  const TrueMoments m = true_moments(x, variant);
  return mvn::fit_theta_from_moments(Eigen::Vector2d(m.mu1, m.mu2), m.covariance());
}

SimulatedDataset generate(Eigen::Index n, Variant variant, std::uint64_t seed) {
  if (n < 1) {
    throw InvalidArgument("simulated dataset needs at least one row");
  }
  SimulatedDataset data;
  data.variant = variant;
  data.seed = seed;
  data.x.resize(n, 1);
  data.y.resize(n, 2);
  data.theta_true.resize(n, mvn::param_count(2));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, std::numbers::pi);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = uniform(rng);
    const ThetaVector theta = true_params(x, variant);
    data.x(i, 0) = x;
    data.theta_true.row(i) = theta.transpose();
    data.y.row(i) = mvn::sample(theta, 1, rng).row(0);
  }
  return data;
}

std::string to_string(Method method) {
  switch (method) {
    case Method::ngb:
      return "ngb";
    case Method::indep_ngb:
      return "indep-ngb";
    case Method::plain_gb:
      return "plain-gb";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "ngb") return Method::ngb;
  if (name == "indep-ngb") return Method::indep_ngb;
  if (name == "plain-gb") return Method::plain_gb;
  throw InvalidArgument("unknown method '" + name + "' (expected ngb, indep-ngb or plain-gb)");
}

ExperimentPlan ExperimentPlan::full_table1() {
  ExperimentPlan plan;
  plan.n_train = {500, 1000, 3000, 5000, 8000, 10000};
  plan.replications = 50;
  return plan;
}

void ExperimentPlan::validate() const {
  if (n_train.empty() || methods.empty()) {
    throw InvalidArgument("experiment plan needs at least one training size and one method");
  }
  for (int n : n_train) {
    if (n < 3) {
      throw InvalidArgument("training size must be at least 3");
    }
  }
  if (n_val < 1 || n_test < 1 || replications < 1) {
    throw InvalidArgument("validation size, test size and replications must be positive");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgument("prediction-region level must lie in (0, 1)");
  }
  config.validate();
}

std::uint64_t sub_seed(std::uint64_t master, int n_train, int replication, SplitRole role) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ static_cast<std::uint64_t>(n_train));
  h = splitmix64(h ^ static_cast<std::uint64_t>(replication));
  return splitmix64(h ^ static_cast<std::uint64_t>(role));
}

CellResult run_cell(const ExperimentPlan& plan, int n_train, int replication, Method method) {
  plan.validate();
  const CellData data = make_cell_data(plan, n_train, replication);
  return score_cell(plan, data, n_train, replication, method, plan.config.exec);
}

std::vector<CellResult> run_experiment(const ExperimentPlan& plan,
                                       const std::function<void(const CellResult&)>& on_cell) {
  plan.validate();
  struct Job {
    int n_train;
    int replication;
  };
  std::vector<Job> jobs;
  for (int n : plan.n_train) {
    for (int r = 0; r < plan.replications; ++r) {
      jobs.push_back({n, r});
    }
  }
  const auto n_methods = plan.methods.size();
  std::vector<CellResult> results(jobs.size() * n_methods);

  // Parallelism is over (N, replication) jobs; the fits inside a job run the
  // serial kernels, which produce identical numbers.
  const bool parallel_jobs = plan.config.exec == kernels::Exec::parallel &&
                             kernels::max_threads() > 1 && jobs.size() > 1;
  const kernels::Exec inner = parallel_jobs ? kernels::Exec::serial : plan.config.exec;
  const long n_jobs = static_cast<long>(jobs.size());

#pragma omp parallel for schedule(dynamic, 1) if (parallel_jobs)
  for (long j = 0; j < n_jobs; ++j) {
    const Job& job = jobs[j];
    CellData data;
    std::string data_error;
    try {
      data = make_cell_data(plan, job.n_train, job.replication);
    } catch (const std::exception& e) {
      data_error = e.what();
    }
    for (std::size_t m = 0; m < n_methods; ++m) {
      CellResult cell;
      if (data_error.empty()) {
        cell = score_cell(plan, data, job.n_train, job.replication, plan.methods[m], inner);
      } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        cell = {job.n_train, plan.methods[m], job.replication, nan, nan, nan, nan, nan,
                data_error};
      }
      results[j * n_methods + m] = cell;
      if (on_cell) {
#pragma omp critical(mvngb_cell_callback)
        on_cell(cell);
      }
    }
  }
  return results;
}

std::vector<AggregateRow> aggregate(const std::vector<CellResult>& results) {
  std::vector<AggregateRow> rows;
  // Preserve first-appearance order of (N, method).
  for (const CellResult& cell : results) {
    bool seen = false;
    for (const AggregateRow& row : rows) {
      seen = seen || (row.n_train == cell.n_train && row.method == cell.method);
    }
    if (seen) {
      continue;
    }
    AggregateRow row;
    row.n_train = cell.n_train;
    row.method = cell.method;
    std::vector<double> kl, nll, rmse, cov, area;
    for (const CellResult& other : results) {
      if (other.n_train != cell.n_train || other.method != cell.method) {
        continue;
      }
      if (!other.ok()) {
        ++row.failures;
        continue;
      }
      kl.push_back(other.kl);
      nll.push_back(other.nll);
      rmse.push_back(other.rmse);
      cov.push_back(other.pr_coverage);
      area.push_back(other.pr_area);
    }
    const auto summary = [](const std::vector<double>& v) {
      return metrics::summarize(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    row.kl = summary(kl);
    row.nll = summary(nll);
    row.rmse = summary(rmse);
    row.pr_coverage = summary(cov);
    row.pr_area = summary(area);
    rows.push_back(row);
  }
  return rows;
}

void write_results_csv(std::ostream& out, const std::vector<CellResult>& results) {
  out << "N,method,replication,kl,nll,rmse,pr_coverage,pr_area,status\n";
  for (const CellResult& c : results) {
    std::string status = c.ok() ? "ok" : c.error;
    for (char& ch : status) {
      if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    }
    out << c.n_train << ',' << to_string(c.method) << ',' << c.replication << ','
        << io::format_double(c.kl) << ',' << io::format_double(c.nll) << ','
        << io::format_double(c.rmse) << ',' << io::format_double(c.pr_coverage) << ','
        << io::format_double(c.pr_area) << ',' << status << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "N,method,replications,failures,kl_mean,kl_stderr,nll_mean,nll_stderr,rmse_mean,"
         "rmse_stderr,pr_coverage_mean,pr_coverage_stderr,pr_area_mean,pr_area_stderr\n";
  for (const AggregateRow& r : rows) {
    out << r.n_train << ',' << to_string(r.method) << ',' << r.kl.count << ',' << r.failures;
    for (const metrics::Summary* s : {&r.kl, &r.nll, &r.rmse, &r.pr_coverage, &r.pr_area}) {
      out << ',' << io::format_double(s->mean) << ',' << io::format_double(s->std_error);
    }
    out << '\n';
  }
}

void write_summary_table(std::ostream& out, const std::vector<AggregateRow>& rows,
                         double alpha) {
  const auto cell = [](const metrics::Summary& s, int precision) {
    std::ostringstream text;
    text << std::fixed << std::setprecision(precision) << s.mean << " ± " << s.std_error;
    return text.str();
  };
  out << std::left << std::setw(7) << "N" << std::setw(11) << "method" << std::setw(22) << "KL"
      << std::setw(22) << "NLL" << std::setw(22) << "RMSE" << std::setw(22) << metrics::pr_label(alpha) + " cov"
      << metrics::pr_label(alpha) << " area\n";
  for (const AggregateRow& r : rows) {
    out << std::left << std::setw(7) << r.n_train << std::setw(11) << to_string(r.method)
        << std::setw(22) << cell(r.kl, 3) << std::setw(22) << cell(r.nll, 3) << std::setw(22)
        << cell(r.rmse, 3) << std::setw(22) << cell(r.pr_coverage, 3) << cell(r.pr_area, 3);
    if (r.failures > 0) {
      out << "  (" << r.failures << " failed)";
    }
    out << '\n';
  }
}

}  // namespace mvngb::simulation

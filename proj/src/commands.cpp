#include "mvngb/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "mvngb/csv.hpp"
#include "mvngb/error.hpp"
#include "mvngb/kernels.hpp"
#include "mvngb/mvn.hpp"

namespace mvngb::cli {
namespace fs = std::filesystem;

namespace {

void ensure_writable(const fs::path& path, bool force) {
  if (path.empty()) {
    throw UsageError("an output path is required");
  }
  if (fs::exists(path) && !force) {
    throw UsageError("'" + path.string() + "' exists; pass --force to overwrite");
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write '" + path.string() + "'");
  }
  return out;
}

fs::path with_suffix(const fs::path& path, const std::string& suffix) {
  fs::path out = path;
  out.replace_extension();
  out += suffix;
  return out;
}

std::string utc_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  // Reproducible builds convention: a fixed epoch makes model files byte-stable.
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

RowMatrix take_rows(ConstRowRef m, const std::vector<Eigen::Index>& rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  }
  return out;
}

void write_history(std::ostream& out, const std::string& name, const BoostModel& model) {
  for (const StageRecord& r : model.history) {
    out << name << ',' << r.stage << ',' << io::format_double(r.rho) << ','
        << io::format_double(r.train_nll) << ',' << io::format_double(r.val_nll) << '\n';
  }
}

RowMatrix truth_thetas(const io::Table& truth) {
  static const std::vector<std::string> columns = {"mu1", "mu2", "var1", "var2", "rho"};
  const RowMatrix m = truth.select(columns);
  RowMatrix out(m.rows(), mvn::param_count(2));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    simulation::TrueMoments t{m(i, 0), m(i, 1), m(i, 2), m(i, 3), m(i, 4)};
    try {
      out.row(i) = mvn::fit_theta_from_moments(Eigen::Vector2d(t.mu1, t.mu2), t.covariance())
                       .transpose();
    } catch (const InvalidArgument& e) {
      std::ostringstream msg;
      msg << "truth row " << i + 1 << ": " << e.what();
      throw DataError(msg.str());
    }
  }
  return out;
}

}  // namespace

fs::path default_truth_path(const fs::path& out) { return with_suffix(out, ".truth.csv"); }

void cmd_simulate(const SimulateOptions& options) {
  if (options.n < 1) {
    throw UsageError("--n must be at least 1");
  }
  const auto variant = simulation::parse_variant(options.variant);
  const fs::path truth_path = options.truth_out.value_or(default_truth_path(options.out));
  ensure_writable(options.out, options.force);
  ensure_writable(truth_path, options.force);

  const simulation::SimulatedDataset data = simulation::generate(options.n, variant, options.seed);
  RowMatrix xy(options.n, 3);
  RowMatrix truth(options.n, 6);
  for (Eigen::Index i = 0; i < options.n; ++i) {
    const double x = data.x(i, 0);
    const simulation::TrueMoments t = simulation::true_moments(x, variant);
    xy.row(i) << x, data.y(i, 0), data.y(i, 1);
    truth.row(i) << x, t.mu1, t.mu2, t.var1, t.var2, t.rho;
  }
  auto out = open_output(options.out);
  io::write_csv(out, {"x", "y1", "y2"}, xy);
  auto truth_out = open_output(truth_path);
  io::write_csv(truth_out, {"x", "mu1", "mu2", "var1", "var2", "rho"}, truth);
}

io::ModelFile cmd_train(const TrainOptions& options, std::ostream& status) {
  if (options.targets.empty()) {
    throw UsageError("--targets is required");
  }
  options.config.validate();
  const fs::path log_path = options.log.value_or(with_suffix(options.out, ".log.csv"));
  ensure_writable(options.out, options.force);
  ensure_writable(log_path, options.force);

  const io::Table table = io::read_csv(options.data);
  std::vector<std::string> features = options.features;
  if (features.empty()) {
    for (const auto& name : table.header) {
      if (std::find(options.targets.begin(), options.targets.end(), name) ==
          options.targets.end()) {
        features.push_back(name);
      }
    }
  }
  for (const auto& name : features) {
    if (std::find(options.targets.begin(), options.targets.end(), name) != options.targets.end()) {
      throw UsageError("column '" + name + "' is both a feature and a target");
    }
  }
  if (features.empty()) {
    throw DataError("no feature columns left after removing the targets");
  }
  RowMatrix x = table.select(features);
  RowMatrix y = table.select(options.targets);
  const auto p = static_cast<Eigen::Index>(options.targets.size());
  if (x.rows() <= p) {
    std::ostringstream msg;
    msg << "training data has " << x.rows() << " rows; need more than " << p;
    throw DataError(msg.str());
  }

  RowMatrix x_val(0, x.cols());
  RowMatrix y_val(0, y.cols());
  if (options.val_data) {
    const io::Table val = io::read_csv(*options.val_data);
    x_val = val.select(features);
    y_val = val.select(options.targets);
  } else if (options.val_fraction > 0.0) {
    if (options.val_fraction >= 1.0) {
      throw UsageError("--val-fraction must lie in [0, 1)");
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(options.config.seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_val = static_cast<std::size_t>(options.val_fraction * static_cast<double>(x.rows()));
    std::vector<Eigen::Index> val_rows(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    std::vector<Eigen::Index> train_rows(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
    std::sort(val_rows.begin(), val_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    x_val = take_rows(x, val_rows);
    y_val = take_rows(y, val_rows);
    x = take_rows(x, train_rows);
    y = take_rows(y, train_rows);
  } else if (options.val_fraction < 0.0) {
    throw UsageError("--val-fraction must lie in [0, 1)");
  }

  io::ModelFile model;
  model.p = static_cast<int>(p);
  model.feature_names = features;
  model.target_names = options.targets;
  if (options.scale_x) {
    model.x_scaling = io::MinMaxScaling::fit(x);
    x = model.x_scaling->apply(x);
    if (x_val.rows() > 0) x_val = model.x_scaling->apply(x_val);
  }
  if (options.scale_y) {
    model.y_scaling = io::MinMaxScaling::fit(y);
    y = model.y_scaling->apply(y);
    if (y_val.rows() > 0) y_val = model.y_scaling->apply(y_val);
  }
  model.metadata = {x.rows(), x_val.rows(), options.config.seed, utc_timestamp()};

  if (options.independent) {
    model.family = "univariate-set";
    model.models = fit_independent(x, y, x_val, y_val, options.config).dims;
  } else {
    model.family = "mvn-" + std::to_string(p);
    model.models.push_back(fit(x, y, x_val, y_val, options.config));
  }

  io::save_model(model, options.out);
  auto log = open_output(log_path);
  log << "model,stage,rho,train_nll,val_nll\n";
  for (std::size_t k = 0; k < model.models.size(); ++k) {
    write_history(log, options.independent ? options.targets[k] : "joint", model.models[k]);
  }
  for (std::size_t k = 0; k < model.models.size(); ++k) {
    const BoostModel& m = model.models[k];
    status << (options.independent ? options.targets[k] : std::string("joint")) << ": "
           << m.stages.size() << " stages fitted, best stage " << m.best_stage;
    const StageRecord& best = m.history[static_cast<std::size_t>(m.best_stage)];
    if (x_val.rows() > 0) {
      status << ", validation nll " << best.val_nll;
    }
    status << '\n';
  }
  return model;
}

std::vector<std::string> prediction_header(int p, bool with_nll) {
  std::vector<std::string> header;
  for (int i = 1; i <= p; ++i) header.push_back("mu_" + std::to_string(i));
  for (int i = 1; i <= p; ++i)
    for (int j = i; j <= p; ++j) header.push_back("nu_" + std::to_string(i) + "_" + std::to_string(j));
  for (int i = 1; i <= p; ++i)
    for (int j = i; j <= p; ++j)
      header.push_back("sigma_" + std::to_string(i) + "_" + std::to_string(j));
  if (with_nll) header.push_back("nll");
  return header;
}

void cmd_predict(const PredictOptions& options) {
  ensure_writable(options.out, options.force);
  const io::ModelFile model = io::load_model(options.model);
  const io::Table table = io::read_csv(options.data);
  const RowMatrix theta = io::predict_theta(model, table.select(model.feature_names));

  bool with_nll = true;
  for (const auto& name : model.target_names) {
    with_nll = with_nll && table.has_column(name);
  }
  const int p = model.p;
  const int m = mvn::param_count(p);
  const int n_sigma = p * (p + 1) / 2;
  RowMatrix out(theta.rows(), m + n_sigma + (with_nll ? 1 : 0));
  const RowMatrix y = with_nll ? table.select(model.target_names) : RowMatrix();
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    const Vector row = theta.row(i).transpose();
    out.row(i).head(m) = row.transpose();
    const Matrix cov = mvn::to_moment_form(row).covariance;
    int k = m;
    for (int a = 0; a < p; ++a)
      for (int b = a; b < p; ++b) out(i, k++) = cov(a, b);
    if (with_nll) out(i, k) = mvn::nll(row, y.row(i).transpose());
  }
  auto file = open_output(options.out);
  io::write_csv(file, prediction_header(p, with_nll), out);
}

void write_report_csv(std::ostream& out, const metrics::MetricsReport& r) {
  out << "n_points,nll,rmse" << (r.kl_mean ? ",kl" : "") << ",pr_alpha,pr_coverage,pr_area\n";
  out << r.n_points << ',' << io::format_double(r.nll_mean) << ',' << io::format_double(r.rmse);
  if (r.kl_mean) out << ',' << io::format_double(*r.kl_mean);
  out << ',' << io::format_double(r.pr_alpha) << ',' << io::format_double(r.pr_coverage) << ','
      << io::format_double(r.pr_area_mean) << '\n';
}

void write_report_text(std::ostream& out, const metrics::MetricsReport& r) {
  const std::string label = metrics::pr_label(r.pr_alpha);
  const auto line = [&](const std::string& name, double value) {
    out << std::left << std::setw(16) << name << std::fixed << std::setprecision(4) << value
        << '\n';
  };
  out << std::left << std::setw(16) << "points" << r.n_points << '\n';
  line("NLL", r.nll_mean);
  line("RMSE", r.rmse);
  if (r.kl_mean) line("KL", *r.kl_mean);
  line(label + " cov", r.pr_coverage);
  line(label + " area", r.pr_area_mean);
  out.unsetf(std::ios::floatfield);
}

metrics::MetricsReport cmd_evaluate(const EvaluateOptions& options, std::ostream& text) {
  if (options.out) {
    ensure_writable(*options.out, options.force);
  }
  const io::ModelFile model = io::load_model(options.model);
  const io::Table table = io::read_csv(options.data);
  if (table.values.rows() == 0) {
    throw DataError("'" + options.data.string() + "' has no data rows to evaluate");
  }
  const RowMatrix theta = io::predict_theta(model, table.select(model.feature_names));
  const RowMatrix y = table.select(model.target_names);

  std::optional<RowMatrix> truth;
  if (options.truth) {
    if (model.p != 2) {
      throw UsageError("--truth sidecars describe bivariate targets only");
    }
    truth = truth_thetas(io::read_csv(*options.truth));
    if (truth->rows() != y.rows()) {
      throw DataError("truth file row count does not match the data");
    }
  }
  const metrics::MetricsReport report = metrics::evaluate(theta, y, truth, options.alpha);
  write_report_text(text, report);
  if (options.out) {
    auto out = open_output(*options.out);
    write_report_csv(out, report);
  }
  return report;
}

std::vector<simulation::CellResult> cmd_benchmark(const BenchmarkOptions& options,
                                                  std::ostream& text) {
  options.plan.validate();
  if (options.out_dir.empty()) {
    throw UsageError("--out-dir is required");
  }
  fs::create_directories(options.out_dir);
  const fs::path results_path = options.out_dir / "results.csv";
  const fs::path summary_path = options.out_dir / "summary.csv";
  ensure_writable(results_path, options.force);
  ensure_writable(summary_path, options.force);

  std::size_t done = 0;
  const std::size_t total = options.plan.n_train.size() *
                            static_cast<std::size_t>(options.plan.replications) *
                            options.plan.methods.size();
  const auto progress = [&](const simulation::CellResult& cell) {
    ++done;
    if (options.quiet) return;
    text << "[" << done << "/" << total << "] N=" << cell.n_train << " rep=" << cell.replication
         << " " << simulation::to_string(cell.method) << ": ";
    if (cell.ok()) {
      text << "KL " << cell.kl << ", NLL " << cell.nll << '\n';
    } else {
      text << "failed: " << cell.error << '\n';
    }
  };
  const auto results = simulation::run_experiment(options.plan, progress);
  const auto rows = simulation::aggregate(results);

  auto results_out = open_output(results_path);
  simulation::write_results_csv(results_out, results);
  auto summary_out = open_output(summary_path);
  simulation::write_summary_csv(summary_out, rows);
  if (!options.quiet) {
    simulation::write_summary_table(text, rows, options.plan.alpha);
  }
  return results;
}

namespace {

void add_config_flags(CLI::App* cmd, BoostConfig& config) {
  cmd->add_option("--max-stages", config.max_stages, "Maximum boosting stages")
      ->capture_default_str();
  cmd->add_option("--learning-rate", config.learning_rate, "Learning rate")->capture_default_str();
  cmd->add_option("--patience", config.patience, "Early-stopping patience in stages")
      ->capture_default_str();
  cmd->add_option("--max-depth", config.tree.max_depth, "Tree depth")->capture_default_str();
  cmd->add_option("--min-samples-leaf", config.tree.min_samples_leaf, "Minimum rows per leaf")
      ->capture_default_str();
  cmd->add_option("--min-samples-split", config.tree.min_samples_split,
                  "Minimum rows to split a node")
      ->capture_default_str();
  cmd->add_option("--seed", config.seed, "Random seed")->capture_default_str();
}

int report_error(const std::exception& e, int code) {
  std::cerr << "error: " << e.what() << '\n';
  return code;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Natural-gradient boosting for multivariate Gaussian regression"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (0: runtime default)");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Write a simulated dataset and its truth sidecar");
  simulate->add_option("--n", sim.n, "Rows")->capture_default_str();
  simulate->add_option("--variant", sim.variant, "modified | williams-original")
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output CSV")->required();
  simulate->add_option("--truth-out", sim.truth_out, "Truth sidecar (default <out>.truth.csv)");
  simulate->add_flag("--force", sim.force, "Overwrite existing files");

  TrainOptions train;
  bool plain_gradient = false;
  auto* train_cmd = app.add_subcommand("train", "Fit a model and write it as JSON");
  train_cmd->add_option("--data", train.data, "Training CSV")->required();
  train_cmd->add_option("--targets", train.targets, "Target columns")->delimiter(',')->required();
  train_cmd->add_option("--features", train.features, "Feature columns (default: the rest)")
      ->delimiter(',');
  train_cmd->add_option("--val", train.val_data, "Validation CSV");
  train_cmd->add_option("--val-fraction", train.val_fraction,
                        "Held-out fraction when --val is absent")
      ->capture_default_str();
  train_cmd->add_flag("--independent", train.independent, "One univariate model per target");
  train_cmd->add_flag("--plain-gradient", plain_gradient, "Use the ordinary gradient");
  train_cmd->add_flag("--scale-x", train.scale_x, "Min-max scale features");
  train_cmd->add_flag("--scale-y", train.scale_y, "Min-max scale targets");
  train_cmd->add_option("--out", train.out, "Model JSON")->required();
  train_cmd->add_option("--log", train.log, "Per-stage log CSV (default <out>.log.csv)");
  train_cmd->add_flag("--force", train.force, "Overwrite existing files");
  add_config_flags(train_cmd, train.config);

  PredictOptions pred;
  auto* predict = app.add_subcommand("predict", "Predict distribution parameters");
  predict->add_option("--model", pred.model, "Model JSON")->required();
  predict->add_option("--data", pred.data, "Input CSV")->required();
  predict->add_option("--out", pred.out, "Output CSV")->required();
  predict->add_flag("--force", pred.force, "Overwrite existing files");

  EvaluateOptions eval;
  auto* evaluate = app.add_subcommand("evaluate", "Score a model on labelled data");
  evaluate->add_option("--model", eval.model, "Model JSON")->required();
  evaluate->add_option("--data", eval.data, "Labelled CSV")->required();
  evaluate->add_option("--truth", eval.truth, "Truth sidecar from `simulate`");
  evaluate->add_option("--alpha", eval.alpha, "Prediction-region level")->capture_default_str();
  evaluate->add_option("--out", eval.out, "Metrics CSV");
  evaluate->add_flag("--force", eval.force, "Overwrite existing files");

  BenchmarkOptions bench;
  std::vector<std::string> methods = {"ngb", "indep-ngb", "plain-gb"};
  std::string variant = "modified";
  bool full = false;
  auto* benchmark = app.add_subcommand("benchmark", "Run the replicated simulation study");
  benchmark->add_option("--n-train", bench.plan.n_train, "Training sizes")
      ->delimiter(',')
      ->capture_default_str();
  benchmark->add_option("--replications", bench.plan.replications, "Replications per size")
      ->capture_default_str();
  benchmark->add_option("--methods", methods, "ngb, indep-ngb, plain-gb")
      ->delimiter(',')
      ->capture_default_str();
  benchmark->add_option("--variant", variant, "modified | williams-original")
      ->capture_default_str();
  benchmark->add_option("--n-val", bench.plan.n_val, "Validation rows")->capture_default_str();
  benchmark->add_option("--n-test", bench.plan.n_test, "Test rows")->capture_default_str();
  benchmark->add_option("--alpha", bench.plan.alpha, "Prediction-region level")
      ->capture_default_str();
  benchmark->add_flag("--full-table1", full,
                      "Full protocol: N in {500,...,10000}, 50 replications");
  benchmark->add_option("--out-dir", bench.out_dir, "Output directory")->required();
  benchmark->add_flag("--force", bench.force, "Overwrite existing files");
  benchmark->add_flag("--quiet", bench.quiet, "No progress output");
  add_config_flags(benchmark, bench.plan.config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  kernels::set_threads(threads);
  try {
    if (simulate->parsed()) {
      cmd_simulate(sim);
    } else if (train_cmd->parsed()) {
      train.config.natural_gradient = !plain_gradient;
      cmd_train(train, std::cout);
    } else if (predict->parsed()) {
      cmd_predict(pred);
    } else if (evaluate->parsed()) {
      cmd_evaluate(eval, std::cout);
    } else if (benchmark->parsed()) {
      if (full) {
        const auto full_plan = simulation::ExperimentPlan::full_table1();
        bench.plan.n_train = full_plan.n_train;
        bench.plan.replications = full_plan.replications;
      }
      bench.plan.variant = simulation::parse_variant(variant);
      bench.plan.methods.clear();
      for (const auto& name : methods) {
        bench.plan.methods.push_back(simulation::parse_method(name));
      }
      bench.plan.master_seed = bench.plan.config.seed;
      cmd_benchmark(bench, std::cout);
    }
  } catch (const UsageError& e) {
    return report_error(e, kUsage);
  } catch (const InvalidArgument& e) {
    return report_error(e, kUsage);
  } catch (const DataError& e) {
    return report_error(e, kData);
  } catch (const NumericError& e) {
    return report_error(e, kNumeric);
  } catch (const InvalidParameter& e) {
    return report_error(e, kNumeric);
  } catch (const fs::filesystem_error& e) {
    return report_error(e, kData);
  }
  return kOk;
}

}  // namespace mvngb::cli

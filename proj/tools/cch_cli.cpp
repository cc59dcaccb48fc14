#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cch/asymptotic_risk.hpp"
#include "cch/distilled_regression.hpp"
#include "cch/errors.hpp"
#include "cch/gaussian_model.hpp"
#include "cch/mi_estimation.hpp"
#include "cch/rng.hpp"
#include "cch/sweep.hpp"
#include "cch/validation.hpp"

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;  // column-major
  int rows = 0;
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cch::ConfigError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw cch::ConfigError("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) table.header.push_back(cell);
  if (table.header.empty()) throw cch::ConfigError("'" + path + "' has no columns");
  table.columns.resize(table.header.size());
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::size_t col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col >= table.columns.size()) {
        throw cch::ConfigError("'" + path + "' has a row wider than its header");
      }
      try {
        table.columns[col].push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw cch::ConfigError("'" + path + "' contains a non-numeric cell: " + cell);
      }
      ++col;
    }
    if (col != table.columns.size()) {
      throw cch::ConfigError("'" + path + "' has a row narrower than its header");
    }
    ++table.rows;
  }
  if (table.rows == 0) throw cch::ConfigError("'" + path + "' has no data rows");
  return table;
}

int run_mi(const std::string& path, int k) {
  const CsvTable table = read_csv(path);
  int label_col = -1;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c] == "label") label_col = static_cast<int>(c);
  }
  if (label_col >= 0) {
    if (table.header.size() < 2) {
      throw cch::ConfigError("label column present but no continuous columns");
    }
    std::vector<long long> labels(table.rows);
    for (int i = 0; i < table.rows; ++i) {
      labels[i] = static_cast<long long>(table.columns[label_col][i]);
    }
    Eigen::MatrixXd y(table.rows, table.header.size() - 1);
    int out_col = 0;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (static_cast<int>(c) == label_col) continue;
      for (int i = 0; i < table.rows; ++i) y(i, out_col) = table.columns[c][i];
      ++out_col;
    }
    const cch::MiEstimate est = cch::ross_mi(labels, y, k);
    std::cout << "I = " << cch::format_double_10g(est.value)
              << " nats (ross, k = " << est.k << ", n = " << est.n << ")\n";
    return 0;
  }
  if (table.header.size() < 2) {
    throw cch::ConfigError("mi needs at least two columns (x plus y)");
  }
  // Columns named x_* form the first argument when present; otherwise the
  // first column stands alone against the rest.
  std::vector<std::size_t> x_cols, y_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c].rfind("x_", 0) == 0) {
      x_cols.push_back(c);
    } else {
      y_cols.push_back(c);
    }
  }
  if (x_cols.empty()) {
    x_cols.push_back(0);
    y_cols.erase(y_cols.begin());
  }
  if (y_cols.empty()) {
    throw cch::ConfigError("mi found only x_* columns; nothing to pair them with");
  }
  Eigen::MatrixXd x(table.rows, x_cols.size());
  for (std::size_t c = 0; c < x_cols.size(); ++c) {
    for (int i = 0; i < table.rows; ++i) x(i, static_cast<int>(c)) = table.columns[x_cols[c]][i];
  }
  Eigen::MatrixXd y(table.rows, y_cols.size());
  for (std::size_t c = 0; c < y_cols.size(); ++c) {
    for (int i = 0; i < table.rows; ++i) y(i, static_cast<int>(c)) = table.columns[y_cols[c]][i];
  }
  const cch::MiEstimate est = cch::ksg_mi(x, y, k);
  std::cout << "I = " << cch::format_double_10g(est.value)
            << " nats (ksg, k = " << est.k << ", n = " << est.n << ")\n";
  return 0;
}

int run_risk(const cch::CorrelationSpec& spec, int n_train, double lambda,
             int n_seeds, const std::string& teacher_source) {
  const cch::PopulationModel model = cch::derive_population_model(spec);
  const double kappa = static_cast<double>(n_train) / spec.p;
  if (n_train == spec.p) {
    throw cch::InvalidArgumentError("risk: n equals p; pick either regime");
  }
  const bool tall = n_train > spec.p;

  double mc_mean = 0.0;
  double mc_sq = 0.0;
  cch::TeacherWeights teacher;
  std::vector<double> risks;
  for (int s = 0; s < n_seeds; ++s) {
    const cch::Dataset train = cch::sample_dataset(
        spec, n_train, cch::derive_key({0xc11, static_cast<std::uint64_t>(s)}));
    teacher = teacher_source == "empirical_ls" ? cch::fit_teacher_empirical(train)
                                               : cch::fit_teacher_population(model);
    const cch::StudentEstimate student =
        tall ? cch::fit_student_ls(train, teacher, lambda)
             : cch::fit_student_minnorm(train, teacher, lambda);
    risks.push_back(cch::excess_risk_population(student, model));
    mc_mean += risks.back();
  }
  mc_mean /= n_seeds;
  for (double r : risks) mc_sq += (r - mc_mean) * (r - mc_mean);
  const double mc_se =
      n_seeds > 1 ? std::sqrt(mc_sq / (n_seeds - 1.0) / n_seeds) : 0.0;

  if (teacher_source != "empirical_ls") teacher = cch::fit_teacher_population(model);
  const cch::AsymptoticContext ctx{model, kappa, teacher, lambda};
  const cch::RiskBreakdown rb =
      tall ? cch::asymptotic_risk_under(ctx) : cch::asymptotic_risk_over(ctx);

  std::cout << "regime: " << (tall ? "underparameterized" : "overparameterized")
            << " (kappa = " << kappa << ")\n";
  std::cout << "asymptotic total = " << cch::format_double_10g(rb.total)
            << " (bias " << cch::format_double_10g(rb.bias_term) << ", variance "
            << cch::format_double_10g(rb.variance_term) << ")\n";
  if (rb.tau) std::cout << "tau = " << cch::format_double_10g(*rb.tau) << "\n";
  if (rb.omega) std::cout << "omega = " << cch::format_double_10g(*rb.omega) << "\n";
  std::cout << "monte-carlo mean = " << cch::format_double_10g(mc_mean)
            << " (se " << cch::format_double_10g(mc_se) << ", " << n_seeds
            << " seeds, n = " << n_train << ")\n";
  return 0;
}

int run_check_spec(const cch::CorrelationSpec& spec) {
  const cch::FeasibilityReport report = cch::validate_feasibility(spec);
  std::cout << "sigma12 = " << spec.sigma12 << ", sigma13 = " << spec.sigma13
            << ", sigma23 = " << spec.sigma23 << ", p = " << spec.p << "\n";
  std::cout << "teacher residual variance v = " << report.v << "\n";
  std::cout << "student conditional variance phi = " << report.phi << "\n";
  std::cout << "correlations in range: " << (report.correlations_in_range ? "yes" : "no")
            << "\n";
  std::cout << "joint covariance positive definite: " << (report.joint_psd ? "yes" : "no")
            << "\n";
  std::cout << "feasible: " << (report.feasible ? "yes" : "no") << "\n";
  std::cout << report.message << "\n";
  return report.feasible ? 0 : 2;
}

int run_export(const cch::CorrelationSpec& spec, int n, std::uint64_t seed,
               const std::string& out_path) {
  const cch::Dataset data = cch::sample_dataset(spec, n, seed);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw cch::ConfigError("cannot open '" + out_path + "'");
  for (int j = 0; j < spec.p; ++j) out << "x1_" << j << ",";
  for (int j = 0; j < spec.p; ++j) out << "x2_" << j << ",";
  out << "y\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < spec.p; ++j) {
      out << cch::format_double_10g(data.x1(i, j)) << ",";
    }
    for (int j = 0; j < spec.p; ++j) {
      out << cch::format_double_10g(data.x2(i, j)) << ",";
    }
    out << cch::format_double_10g(data.y(i)) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distilled linear regression on a three-view Gaussian model"};
  app.require_subcommand(1);

  // sweep
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "run a sweep from a JSON config; write CSV and optional SVG charts");
  std::string config_path, out_path, svg_prefix;
  std::uint64_t seed_override = 0;
  sweep_cmd->add_option("--config", config_path, "JSON sweep config")->required();
  sweep_cmd->add_option("--out", out_path, "output CSV path");
  sweep_cmd->add_option("--svg", svg_prefix, "prefix for <prefix>mse.svg and <prefix>mi.svg");
  auto* seed_opt =
      sweep_cmd->add_option("--seed", seed_override, "override the config master seed");

  // mi
  auto* mi_cmd = app.add_subcommand("mi", "estimate mutual information from a CSV file");
  std::string mi_file;
  int mi_k = 3;
  mi_cmd->add_option("--file", mi_file, "CSV with paired columns; a 'label' column selects the discrete estimator")
      ->required();
  mi_cmd->add_option("--k", mi_k, "neighbor count");

  // risk
  auto* risk_cmd = app.add_subcommand(
      "risk", "print asymptotic and Monte-Carlo excess risk for one parameter point");
  cch::CorrelationSpec risk_spec{0.5, 0.9, 0.4, 100};
  int risk_n = 10000;
  double risk_lambda = 0.5;
  int risk_seeds = 10;
  std::string risk_teacher = "population_optimal";
  risk_cmd->add_option("--sigma12", risk_spec.sigma12, "teacher-student correlation");
  risk_cmd->add_option("--sigma13", risk_spec.sigma13, "teacher-response correlation");
  risk_cmd->add_option("--sigma23", risk_spec.sigma23, "student-response correlation");
  risk_cmd->add_option("--p", risk_spec.p, "view dimension");
  risk_cmd->add_option("--n", risk_n, "training sample size");
  risk_cmd->add_option("--lambda", risk_lambda, "distillation weight");
  risk_cmd->add_option("--seeds", risk_seeds, "Monte-Carlo seed count");
  risk_cmd->add_option("--teacher", risk_teacher,
                       "population_optimal or empirical_ls");

  // validate
  auto* validate_cmd =
      app.add_subcommand("validate", "run the numerical validation suite");
  bool quick = false;
  validate_cmd->add_flag("--quick", quick, "reduced seed counts");

  // check-spec
  auto* check_cmd =
      app.add_subcommand("check-spec", "feasibility diagnostics for a correlation spec");
  cch::CorrelationSpec check_spec{0.5, 0.9, 0.4, 100};
  check_cmd->add_option("--sigma12", check_spec.sigma12, "teacher-student correlation");
  check_cmd->add_option("--sigma13", check_spec.sigma13, "teacher-response correlation");
  check_cmd->add_option("--sigma23", check_spec.sigma23, "student-response correlation");
  check_cmd->add_option("--p", check_spec.p, "view dimension");

  // export-data
  auto* export_cmd =
      app.add_subcommand("export-data", "sample a dataset and write it as CSV");
  cch::CorrelationSpec export_spec{0.5, 0.9, 0.4, 2};
  int export_n = 1000;
  std::uint64_t export_seed = 0;
  std::string export_out;
  export_cmd->add_option("--sigma12", export_spec.sigma12, "teacher-student correlation");
  export_cmd->add_option("--sigma13", export_spec.sigma13, "teacher-response correlation");
  export_cmd->add_option("--sigma23", export_spec.sigma23, "student-response correlation");
  export_cmd->add_option("--p", export_spec.p, "view dimension");
  export_cmd->add_option("--n", export_n, "sample size");
  export_cmd->add_option("--seed", export_seed, "sampling seed");
  export_cmd->add_option("--out", export_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sweep_cmd->parsed()) {
      cch::SweepConfig config = cch::load_config_file(config_path);
      if (seed_opt->count() > 0) config.master_seed = seed_override;
      const std::vector<cch::SweepRecord> records = cch::run_sweep(config);
      if (!out_path.empty()) {
        cch::emit_csv(records, out_path);
        std::cout << "wrote " << records.size() << " records to " << out_path << "\n";
      } else {
        std::cout << cch::records_to_csv(records);
      }
      if (!svg_prefix.empty()) {
        const std::string x_label = cch::to_string(config.variable);
        cch::emit_svg(records, svg_prefix + "mse.svg",
                      {"mse_kd", "mse_no_kd", "risk_asymptotic_kd",
                       "risk_asymptotic_no_kd"},
                      x_label);
        cch::emit_svg(records, svg_prefix + "mi.svg",
                      {"i_ts_closed", "i_sy_closed", "i_ts_ksg", "i_sy_ksg", "mi_gap"},
                      x_label);
        std::cout << "wrote " << svg_prefix << "mse.svg and " << svg_prefix
                  << "mi.svg\n";
      }
      return 0;
    }
    if (mi_cmd->parsed()) return run_mi(mi_file, mi_k);
    if (risk_cmd->parsed()) {
      return run_risk(risk_spec, risk_n, risk_lambda, risk_seeds, risk_teacher);
    }
    if (validate_cmd->parsed()) {
      const auto results = cch::run_validation_checks(quick, &std::cout);
      if (!cch::all_passed(results)) {
        std::cerr << "validation failed\n";
        return 3;
      }
      std::cout << "all validation checks passed\n";
      return 0;
    }
    if (check_cmd->parsed()) return run_check_spec(check_spec);
    if (export_cmd->parsed()) {
      return run_export(export_spec, export_n, export_seed, export_out);
    }
  } catch (const cch::FeasibilityError& e) {
    std::cerr << "infeasible configuration: " << e.what() << "\n";
    return 2;
  } catch (const cch::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

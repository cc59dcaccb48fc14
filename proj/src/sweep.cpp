#include "cch/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cch/asymptotic_risk.hpp"
#include "cch/errors.hpp"
#include "cch/mi_estimation.hpp"
#include "cch/rng.hpp"
#include "cch/svg.hpp"

namespace cch {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

SweepVariable variable_from_string(const std::string& name) {
  if (name == "sigma12") return SweepVariable::sigma12;
  if (name == "lambda") return SweepVariable::lambda;
  if (name == "noise_level") return SweepVariable::noise_level;
  throw ConfigError("unknown sweep_variable '" + name +
                    "'; expected sigma12, lambda or noise_level");
}

TeacherSource teacher_source_from_string(const std::string& name) {
  if (name == "population_optimal") return TeacherSource::population_optimal;
  if (name == "empirical_ls") return TeacherSource::empirical_ls;
  throw ConfigError("unknown teacher_source '" + name +
                    "'; expected population_optimal or empirical_ls");
}

void check_known_keys(const json& j, const std::set<std::string>& allowed,
                      const char* where) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError(std::string("unknown key '") + item.key() + "' in " + where);
    }
  }
}

double require_number(const json& j, const char* key) {
  if (!j.is_number()) {
    throw ConfigError(std::string("key '") + key + "' must be a number");
  }
  return j.get<double>();
}

int require_int(const json& j, const char* key) {
  if (!j.is_number_integer()) {
    throw ConfigError(std::string("key '") + key + "' must be an integer");
  }
  return j.get<int>();
}

}  // namespace

std::string to_string(SweepVariable variable) {
  switch (variable) {
    case SweepVariable::sigma12: return "sigma12";
    case SweepVariable::lambda: return "lambda";
    case SweepVariable::noise_level: return "noise_level";
  }
  return "?";
}

SweepConfig default_config(SweepVariable variable) {
  SweepConfig config;
  config.variable = variable;
  switch (variable) {
    case SweepVariable::sigma12:
      config.grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
      break;
    case SweepVariable::lambda:
      config.grid = {0.0, 0.2, 0.5, 0.8};
      break;
    case SweepVariable::noise_level:
      config.grid = {0.0, 0.2, 0.4, 0.6, 0.8};
      break;
  }
  config.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  return config;
}

SweepConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ConfigError(std::string("config is not valid JSON: ") + err.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  check_known_keys(j,
                   {"schema_version", "spec_base", "sweep_variable", "grid", "n_train",
                    "n_test", "lambda", "seeds", "teacher_source", "ksg_k",
                    "mi_subsample", "master_seed"},
                   "config");
  if (!j.contains("schema_version")) {
    throw ConfigError("config is missing schema_version");
  }
  if (require_int(j["schema_version"], "schema_version") != kSchemaVersion) {
    std::ostringstream msg;
    msg << "unsupported schema_version " << j["schema_version"]
        << "; this build reads version " << kSchemaVersion;
    throw ConfigError(msg.str());
  }

  const SweepVariable variable =
      j.contains("sweep_variable")
          ? variable_from_string(j["sweep_variable"].get<std::string>())
          : SweepVariable::sigma12;
  SweepConfig config = default_config(variable);

  if (j.contains("spec_base")) {
    const json& sb = j["spec_base"];
    if (!sb.is_object()) throw ConfigError("spec_base must be an object");
    check_known_keys(sb, {"sigma12", "sigma13", "sigma23", "p"}, "spec_base");
    if (sb.contains("sigma12")) config.spec_base.sigma12 = require_number(sb["sigma12"], "sigma12");
    if (sb.contains("sigma13")) config.spec_base.sigma13 = require_number(sb["sigma13"], "sigma13");
    if (sb.contains("sigma23")) config.spec_base.sigma23 = require_number(sb["sigma23"], "sigma23");
    if (sb.contains("p")) config.spec_base.p = require_int(sb["p"], "p");
  }
  if (j.contains("grid")) {
    if (!j["grid"].is_array() || j["grid"].empty()) {
      throw ConfigError("grid must be a non-empty array of numbers");
    }
    config.grid.clear();
    for (const auto& v : j["grid"]) config.grid.push_back(require_number(v, "grid"));
  }
  if (j.contains("n_train")) config.n_train = require_int(j["n_train"], "n_train");
  if (j.contains("n_test")) config.n_test = require_int(j["n_test"], "n_test");
  if (j.contains("lambda")) config.lambda = require_number(j["lambda"], "lambda");
  if (j.contains("seeds")) {
    if (!j["seeds"].is_array() || j["seeds"].empty()) {
      throw ConfigError("seeds must be a non-empty array of nonnegative integers");
    }
    config.seeds.clear();
    for (const auto& v : j["seeds"]) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw ConfigError("seeds must be nonnegative integers");
      }
      config.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  if (j.contains("teacher_source")) {
    config.teacher_source =
        teacher_source_from_string(j["teacher_source"].get<std::string>());
  }
  if (j.contains("ksg_k")) config.ksg_k = require_int(j["ksg_k"], "ksg_k");
  if (j.contains("mi_subsample")) {
    config.mi_subsample = require_int(j["mi_subsample"], "mi_subsample");
  }
  if (j.contains("master_seed")) {
    if (!j["master_seed"].is_number_unsigned() &&
        !(j["master_seed"].is_number_integer() && j["master_seed"].get<long long>() >= 0)) {
      throw ConfigError("master_seed must be a nonnegative integer");
    }
    config.master_seed = j["master_seed"].get<std::uint64_t>();
  }

  validate_config(config);
  return config;
}

SweepConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_json(buffer.str());
}

void validate_config(const SweepConfig& config) {
  if (config.grid.empty()) throw ConfigError("sweep grid is empty");
  for (std::size_t i = 1; i < config.grid.size(); ++i) {
    if (!(config.grid[i] > config.grid[i - 1])) {
      throw ConfigError("sweep grid must be strictly increasing");
    }
  }
  if (config.n_train < 1 || config.n_test < 1) {
    throw ConfigError("n_train and n_test must be positive");
  }
  if (config.n_train == config.spec_base.p) {
    throw ConfigError(
        "n_train equals the dimension p; the interpolation threshold is excluded");
  }
  if (config.lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (config.seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (config.ksg_k < 1) throw ConfigError("ksg_k must be >= 1");
  if (config.mi_subsample <= config.ksg_k) {
    throw ConfigError("mi_subsample must exceed ksg_k");
  }
  if (config.teacher_source == TeacherSource::empirical_ls &&
      config.n_train <= config.spec_base.p) {
    throw ConfigError("teacher_source empirical_ls needs n_train > p");
  }
  if (config.teacher_source == TeacherSource::explicit_weights) {
    throw ConfigError("sweeps accept teacher_source population_optimal or empirical_ls");
  }

  // Every grid point must be feasible before any sampling starts.
  switch (config.variable) {
    case SweepVariable::sigma12:
      for (double value : config.grid) {
        CorrelationSpec spec = config.spec_base;
        spec.sigma12 = value;
        require_feasible(spec);
      }
      break;
    case SweepVariable::lambda:
      for (double value : config.grid) {
        if (value < 0.0) throw ConfigError("lambda grid values must be >= 0");
      }
      require_feasible(config.spec_base);
      break;
    case SweepVariable::noise_level:
      for (double value : config.grid) {
        if (value < 0.0 || value > 1.0) {
          throw ConfigError("noise_level grid values must lie in [0, 1]");
        }
      }
      require_feasible(config.spec_base);
      break;
  }
}

namespace {

struct SweepItem {
  int grid_index = 0;
  double grid_value = 0.0;
  std::uint64_t seed = 0;
};

SweepRecord compute_item(const SweepConfig& config, const SweepItem& item) {
  const bool vary_sigma12 = config.variable == SweepVariable::sigma12;
  CorrelationSpec spec = config.spec_base;
  double lambda = config.lambda;
  double eta = 0.0;
  switch (config.variable) {
    case SweepVariable::sigma12: spec.sigma12 = item.grid_value; break;
    case SweepVariable::lambda: lambda = item.grid_value; break;
    case SweepVariable::noise_level: eta = item.grid_value; break;
  }

  // Lambda and noise sweeps share one base dataset per seed so that every
  // column untouched by the swept variable is constant across the grid.
  const std::uint64_t data_index = vary_sigma12 ? item.grid_index : 0;
  const std::uint64_t train_seed =
      derive_key({config.master_seed, data_index, item.seed, stream_tag::train});
  const std::uint64_t test_seed =
      derive_key({config.master_seed, data_index, item.seed, stream_tag::test});

  const Dataset train = sample_dataset(spec, config.n_train, train_seed);
  const Dataset test = sample_dataset(spec, config.n_test, test_seed);

  PopulationModel model = derive_population_model(spec);
  if (eta > 0.0) {
    // Population surrogate of the degraded teacher view: additive isotropic
    // noise shifts Sigma11 by eta^2 I and leaves every other block alone.
    model.sigma11.diagonal().array() += eta * eta;
  }

  Dataset train_fit = train;
  Dataset test_mi = test;
  if (eta > 0.0) {
    train_fit = apply_teacher_noise(
        train, eta,
        derive_key({config.master_seed, static_cast<std::uint64_t>(item.grid_index),
                    item.seed, stream_tag::noise_train}));
    test_mi = apply_teacher_noise(
        test, eta,
        derive_key({config.master_seed, static_cast<std::uint64_t>(item.grid_index),
                    item.seed, stream_tag::noise_test}));
  }

  const TeacherWeights teacher = config.teacher_source == TeacherSource::population_optimal
                                     ? fit_teacher_population(model)
                                     : fit_teacher_empirical(train_fit);

  const bool tall = config.n_train > spec.p;
  const auto fit = [&](double lam) {
    return tall ? fit_student_ls(train_fit, teacher, lam)
                : fit_student_minnorm(train_fit, teacher, lam);
  };
  const StudentEstimate student_kd = fit(lambda);
  const StudentEstimate student_plain = fit(0.0);

  SweepRecord rec;
  rec.grid_value = item.grid_value;
  rec.seed = item.seed;
  rec.mse_kd = mean_squared_error(student_kd, test);
  rec.mse_no_kd = mean_squared_error(student_plain, test);

  const double kappa =
      static_cast<double>(config.n_train) / static_cast<double>(spec.p);
  AsymptoticContext ctx{model, kappa, teacher, lambda};
  const auto risk = tall ? asymptotic_risk_under : asymptotic_risk_over;
  rec.risk_asymptotic_kd = risk(ctx).total;
  ctx.lambda = 0.0;
  rec.risk_asymptotic_no_kd = risk(ctx).total;

  const CchMiGap gap = cch_mi_gap(model, teacher);
  rec.i_ts_closed = gap.i_ts;
  rec.i_sy_closed = gap.i_sy;
  rec.mi_gap = gap.gap;
  rec.cch_beneficial = small_lambda_condition(model, teacher).beneficial;

  // KSG estimates on held-out projections: the teacher sees its (possibly
  // degraded) view, the student projection is the population-optimal one,
  // mirroring the closed-form columns.
  const int m = std::min<int>(config.mi_subsample, config.n_test);
  const Eigen::VectorXd proj_teacher = test_mi.x1.topRows(m) * teacher.w1;
  const Eigen::VectorXd proj_student = test.x2.topRows(m) * model.w_star;
  const Eigen::VectorXd response = test.y.head(m);
  rec.i_ts_ksg = ksg_mi(proj_teacher, proj_student, config.ksg_k).value;
  rec.i_sy_ksg = ksg_mi(proj_student, response, config.ksg_k).value;
  return rec;
}

int resolve_thread_count(int n_threads) {
  if (n_threads > 0) return n_threads;
  if (const char* env = std::getenv("CCH_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

std::vector<SweepRecord> run_sweep(const SweepConfig& config, int n_threads) {
  validate_config(config);

  std::vector<SweepItem> items;
  items.reserve(config.grid.size() * config.seeds.size());
  for (std::size_t g = 0; g < config.grid.size(); ++g) {
    for (std::uint64_t seed : config.seeds) {
      items.push_back({static_cast<int>(g), config.grid[g], seed});
    }
  }

  std::vector<SweepRecord> records(items.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= items.size()) return;
      try {
        records[i] = compute_item(config, items[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int threads = std::min<int>(resolve_thread_count(n_threads),
                                    static_cast<int>(items.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::stable_sort(records.begin(), records.end(),
                   [](const SweepRecord& a, const SweepRecord& b) {
                     if (a.grid_value != b.grid_value) return a.grid_value < b.grid_value;
                     return a.seed < b.seed;
                   });
  return records;
}

std::vector<SweepRecord> run_sigma12_sweep(const SweepConfig& config, int n_threads) {
  if (config.variable != SweepVariable::sigma12) {
    throw InvalidArgumentError("run_sigma12_sweep: config sweeps " +
                               to_string(config.variable));
  }
  return run_sweep(config, n_threads);
}

std::vector<SweepRecord> run_lambda_sweep(const SweepConfig& config, int n_threads) {
  if (config.variable != SweepVariable::lambda) {
    throw InvalidArgumentError("run_lambda_sweep: config sweeps " +
                               to_string(config.variable));
  }
  return run_sweep(config, n_threads);
}

std::vector<SweepRecord> run_noise_sweep(const SweepConfig& config, int n_threads) {
  if (config.variable != SweepVariable::noise_level) {
    throw InvalidArgumentError("run_noise_sweep: config sweeps " +
                               to_string(config.variable));
  }
  return run_sweep(config, n_threads);
}

const std::vector<std::string>& sweep_column_names() {
  static const std::vector<std::string> names = {
      "grid_value",     "seed",          "mse_kd",
      "mse_no_kd",      "risk_asymptotic_kd", "risk_asymptotic_no_kd",
      "i_ts_closed",    "i_sy_closed",   "i_ts_ksg",
      "i_sy_ksg",       "mi_gap",        "cch_beneficial"};
  return names;
}

double sweep_column_value(const SweepRecord& r, const std::string& column) {
  if (column == "grid_value") return r.grid_value;
  if (column == "seed") return static_cast<double>(r.seed);
  if (column == "mse_kd") return r.mse_kd;
  if (column == "mse_no_kd") return r.mse_no_kd;
  if (column == "risk_asymptotic_kd") return r.risk_asymptotic_kd;
  if (column == "risk_asymptotic_no_kd") return r.risk_asymptotic_no_kd;
  if (column == "i_ts_closed") return r.i_ts_closed;
  if (column == "i_sy_closed") return r.i_sy_closed;
  if (column == "i_ts_ksg") return r.i_ts_ksg;
  if (column == "i_sy_ksg") return r.i_sy_ksg;
  if (column == "mi_gap") return r.mi_gap;
  if (column == "cch_beneficial") return r.cch_beneficial ? 1.0 : 0.0;
  throw InvalidArgumentError("unknown sweep column '" + column + "'");
}

std::string format_double_10g(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

std::string records_to_csv(const std::vector<SweepRecord>& records) {
  std::vector<SweepRecord> sorted = records;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SweepRecord& a, const SweepRecord& b) {
                     if (a.grid_value != b.grid_value) return a.grid_value < b.grid_value;
                     return a.seed < b.seed;
                   });
  std::ostringstream out;
  const auto& names = sweep_column_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out << ",";
    out << names[i];
  }
  out << "\n";
  for (const auto& r : sorted) {
    out << format_double_10g(r.grid_value) << "," << r.seed << ","
        << format_double_10g(r.mse_kd) << "," << format_double_10g(r.mse_no_kd) << ","
        << format_double_10g(r.risk_asymptotic_kd) << ","
        << format_double_10g(r.risk_asymptotic_no_kd) << ","
        << format_double_10g(r.i_ts_closed) << "," << format_double_10g(r.i_sy_closed)
        << "," << format_double_10g(r.i_ts_ksg) << ","
        << format_double_10g(r.i_sy_ksg) << "," << format_double_10g(r.mi_gap) << ","
        << (r.cch_beneficial ? "1" : "0") << "\n";
  }
  return out.str();
}

void emit_csv(const std::vector<SweepRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgumentError("emit_csv: cannot open '" + path + "'");
  out << records_to_csv(records);
  if (!out) throw NumericalError("emit_csv: write to '" + path + "' failed");
}

void emit_svg(const std::vector<SweepRecord>& records, const std::string& path,
              const std::vector<std::string>& y_columns, const std::string& x_label) {
  if (records.empty()) throw InvalidArgumentError("emit_svg: no records");
  if (y_columns.empty()) throw InvalidArgumentError("emit_svg: no columns selected");

  std::map<double, std::vector<const SweepRecord*>> by_grid;
  for (const auto& r : records) by_grid[r.grid_value].push_back(&r);
  if (by_grid.size() < 2) {
    throw InvalidArgumentError(
        "emit_svg: needs at least two distinct grid values to draw a line");
  }

  std::vector<ChartSeries> series;
  for (const auto& column : y_columns) {
    ChartSeries s;
    s.label = column;
    for (const auto& [grid_value, group] : by_grid) {
      double mean = 0.0;
      for (const SweepRecord* r : group) mean += sweep_column_value(*r, column);
      mean /= static_cast<double>(group.size());
      s.x.push_back(grid_value);
      s.y.push_back(mean);
    }
    series.push_back(std::move(s));
  }

  const std::string svg = render_line_chart("seed-averaged sweep", x_label,
                                            "seed-averaged value", series);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgumentError("emit_svg: cannot open '" + path + "'");
  out << svg;
  if (!out) throw NumericalError("emit_svg: write to '" + path + "' failed");
}

}  // namespace cch

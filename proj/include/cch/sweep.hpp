#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cch/distilled_regression.hpp"
#include "cch/gaussian_model.hpp"

namespace cch {

enum class SweepVariable { sigma12, lambda, noise_level };

std::string to_string(SweepVariable variable);

/// Full description of one sweep experiment. JSON configs mirror these
/// fields; absent fields take the defaults of default_config(variable).
struct SweepConfig {
  CorrelationSpec spec_base{0.5, 0.9, 0.4, 100};
  SweepVariable variable = SweepVariable::sigma12;
  std::vector<double> grid;
  int n_train = 10000;
  int n_test = 5000;
  double lambda = 0.5;
  std::vector<std::uint64_t> seeds;
  TeacherSource teacher_source = TeacherSource::population_optimal;
  int ksg_k = 3;
  int mi_subsample = 5000;
  std::uint64_t master_seed = 0;
};

SweepConfig default_config(SweepVariable variable);

/// Strict parser: unknown keys, wrong types and unsupported schema versions
/// are ConfigError. The result is validated before being returned.
SweepConfig parse_config_json(const std::string& text);
SweepConfig load_config_file(const std::string& path);

/// Rejects malformed grids and infeasible correlation specs up front, so a
/// sweep never fails halfway through.
void validate_config(const SweepConfig& config);

/// One (grid value, seed) measurement. mse_* are raw held-out mean squared
/// errors; risk_* the corresponding asymptotic predictions; i_* closed-form
/// and KSG estimates of the teacher-student and student-response mutual
/// informations; mi_gap = i_ts_closed - i_sy_closed.
struct SweepRecord {
  double grid_value = 0.0;
  std::uint64_t seed = 0;
  double mse_kd = 0.0;
  double mse_no_kd = 0.0;
  double risk_asymptotic_kd = 0.0;
  double risk_asymptotic_no_kd = 0.0;
  double i_ts_closed = 0.0;
  double i_sy_closed = 0.0;
  double i_ts_ksg = 0.0;
  double i_sy_ksg = 0.0;
  double mi_gap = 0.0;
  bool cch_beneficial = false;
};

const std::vector<std::string>& sweep_column_names();
double sweep_column_value(const SweepRecord& record, const std::string& column);

/// Runs the sweep over every (grid value, seed) pair. n_threads = 0 reads
/// the CCH_THREADS environment variable, falling back to the hardware
/// count. Output is byte-for-byte independent of the thread count.
std::vector<SweepRecord> run_sweep(const SweepConfig& config, int n_threads = 0);

/// Variable-checked wrappers over run_sweep.
std::vector<SweepRecord> run_sigma12_sweep(const SweepConfig& config, int n_threads = 0);
std::vector<SweepRecord> run_lambda_sweep(const SweepConfig& config, int n_threads = 0);
std::vector<SweepRecord> run_noise_sweep(const SweepConfig& config, int n_threads = 0);

/// CSV with a fixed header, rows sorted by (grid_value, seed), ten
/// significant digits. Identical records give identical bytes.
std::string records_to_csv(const std::vector<SweepRecord>& records);
void emit_csv(const std::vector<SweepRecord>& records, const std::string& path);

/// Seed-averaged line chart of the named columns against the grid value.
void emit_svg(const std::vector<SweepRecord>& records, const std::string& path,
              const std::vector<std::string>& y_columns,
              const std::string& x_label = "grid value");

std::string format_double_10g(double value);

}  // namespace cch

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "cch/rng.hpp"

namespace {

// CCH_CLI_PATH and CCH_CONFIG_DIR are injected by the build.
int run_cli(const std::string& args, const std::string& capture = "cli_test_out.txt") {
  const std::string cmd =
      std::string(CCH_CLI_PATH) + " " + args + " > " + capture + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

int run_shell(const std::string& cmd_line, const std::string& capture) {
  const std::string cmd = cmd_line + " > " + capture + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int count_lines(const std::string& text) {
  int lines = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++lines;
  }
  return lines;
}

double parse_mi(const std::string& output) {
  const std::size_t pos = output.find("I = ");
  REQUIRE(pos != std::string::npos);
  return std::stod(output.substr(pos + 4));
}

}  // namespace

TEST_CASE("usage errors exit with status 1") {
  CHECK(run_cli("") == 1);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("sweep") == 1);  // --config is required
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("feasibility checking exits 0 or 2") {
  CHECK(run_cli("check-spec --sigma12 0.5 --sigma13 0.9 --sigma23 0.4 --p 10") == 0);
  const std::string good = read_file("cli_test_out.txt");
  CHECK(good.find("feasible: yes") != std::string::npos);

  CHECK(run_cli("check-spec --sigma12 0 --sigma13 0.99 --sigma23 0.99 --p 10") == 2);
  const std::string bad = read_file("cli_test_out.txt");
  CHECK(bad.find("feasible: no") != std::string::npos);
}

TEST_CASE("sweep subcommand writes tables and charts") {
  const std::string config = std::string(CCH_CONFIG_DIR) + "/smoke.json";
  const int code = run_cli("sweep --config " + config +
                           " --out cli_test_sweep.csv --svg cli_test_");
  CHECK(code == 0);

  const std::string csv = read_file("cli_test_sweep.csv");
  CHECK(count_lines(csv) == 5);  // header + 2 grid values x 2 seeds
  CHECK(csv.rfind("grid_value,seed,", 0) == 0);

  const std::string mse_svg = read_file("cli_test_mse.svg");
  const std::string mi_svg = read_file("cli_test_mi.svg");
  CHECK(mse_svg.find("<svg") != std::string::npos);
  CHECK(mse_svg.find("mse_kd") != std::string::npos);
  CHECK(mi_svg.find("<svg") != std::string::npos);
  CHECK(mi_svg.find("mi_gap") != std::string::npos);

  SUBCASE("output does not depend on the worker count") {
    const std::string base_cmd = std::string(CCH_CLI_PATH) + " sweep --config " +
                                 config + " --out cli_test_sweep2.csv";
    CHECK(run_shell("CCH_THREADS=1 " + base_cmd, "cli_test_out.txt") == 0);
    const std::string serial = read_file("cli_test_sweep2.csv");
    CHECK(run_shell("CCH_THREADS=3 " + base_cmd, "cli_test_out.txt") == 0);
    const std::string threaded = read_file("cli_test_sweep2.csv");
    CHECK(serial == threaded);
    CHECK(serial == csv);
    std::remove("cli_test_sweep2.csv");
  }

  std::remove("cli_test_sweep.csv");
  std::remove("cli_test_mse.svg");
  std::remove("cli_test_mi.svg");
}

TEST_CASE("sweep subcommand surfaces configuration problems") {
  CHECK(run_cli("sweep --config cli_test_missing.json") == 1);

  {
    std::ofstream out("cli_test_bad.json");
    out << "{\"schema_version\": 1, \"spec_base\": {\"sigma13\": 0.99, "
           "\"sigma23\": 0.99}}";
  }
  CHECK(run_cli("sweep --config cli_test_bad.json") == 2);

  {
    std::ofstream out("cli_test_bad.json");
    out << "this is not json";
  }
  CHECK(run_cli("sweep --config cli_test_bad.json") == 1);
  std::remove("cli_test_bad.json");
}

TEST_CASE("information estimates from a CSV file") {
  SUBCASE("continuous pair") {
    cch::RandomStream rng(20250801);
    std::ofstream out("cli_test_pair.csv");
    out << "x,y\n";
    const double rho = 0.6;
    for (int i = 0; i < 4000; ++i) {
      const double g1 = rng.next_gaussian();
      const double g2 = rng.next_gaussian();
      out << g1 << "," << rho * g1 + std::sqrt(1.0 - rho * rho) * g2 << "\n";
    }
    out.close();
    CHECK(run_cli("mi --file cli_test_pair.csv --k 3") == 0);
    const std::string output = read_file("cli_test_out.txt");
    CHECK(output.find("ksg") != std::string::npos);
    CHECK(std::abs(parse_mi(output) - 0.22314) < 0.05);
    std::remove("cli_test_pair.csv");
  }
  SUBCASE("labeled sample") {
    cch::RandomStream rng(20250802);
    std::ofstream out("cli_test_label.csv");
    out << "label,y\n";
    for (int i = 0; i < 2000; ++i) {
      const int label = (rng.next_u64() & 1) ? 1 : 0;
      out << label << "," << 10.0 * label + rng.next_gaussian() << "\n";
    }
    out.close();
    CHECK(run_cli("mi --file cli_test_label.csv --k 3") == 0);
    const std::string output = read_file("cli_test_out.txt");
    CHECK(output.find("ross") != std::string::npos);
    CHECK(std::abs(parse_mi(output) - std::log(2.0)) < 0.06);
    std::remove("cli_test_label.csv");
  }
  SUBCASE("multi-column x_* grouping") {
    cch::RandomStream rng(20250803);
    std::ofstream out("cli_test_wide.csv");
    out << "x_0,x_1,y\n";
    for (int i = 0; i < 2000; ++i) {
      const double a = rng.next_gaussian();
      const double b = rng.next_gaussian();
      out << a << "," << b << ","
          << 0.7 * (a + b) + rng.next_gaussian() << "\n";
    }
    out.close();
    CHECK(run_cli("mi --file cli_test_wide.csv --k 3") == 0);
    const std::string output = read_file("cli_test_out.txt");
    CHECK(output.find("ksg") != std::string::npos);
    CHECK(parse_mi(output) > 0.15);
    std::remove("cli_test_wide.csv");
  }
  SUBCASE("missing file") {
    CHECK(run_cli("mi --file cli_test_nowhere.csv") == 1);
  }
}

TEST_CASE("risk subcommand reports both regimes") {
  CHECK(run_cli("risk --sigma12 0.5 --sigma13 0.9 --sigma23 0.4 --p 20 --n 400 "
                "--lambda 0.5 --seeds 2") == 0);
  std::string output = read_file("cli_test_out.txt");
  CHECK(output.find("underparameterized") != std::string::npos);
  CHECK(output.find("asymptotic total") != std::string::npos);
  CHECK(output.find("monte-carlo mean") != std::string::npos);

  CHECK(run_cli("risk --sigma12 0.5 --sigma13 0.9 --sigma23 0.4 --p 100 --n 50 "
                "--lambda 0.3 --seeds 2") == 0);
  output = read_file("cli_test_out.txt");
  CHECK(output.find("overparameterized") != std::string::npos);
  CHECK(output.find("tau = ") != std::string::npos);
  CHECK(output.find("omega = ") != std::string::npos);

  CHECK(run_cli("risk --sigma12 0 --sigma13 0.99 --sigma23 0.99 --p 10 --n 100") == 2);
}

TEST_CASE("export produces a rectangular CSV") {
  CHECK(run_cli("export-data --sigma12 0.5 --sigma13 0.9 --sigma23 0.4 --p 2 "
                "--n 50 --seed 7 --out cli_test_data.csv") == 0);
  const std::string csv = read_file("cli_test_data.csv");
  CHECK(count_lines(csv) == 51);
  CHECK(csv.rfind("x1_0,x1_1,x2_0,x2_1,y\n", 0) == 0);

  // Same seed, same bytes.
  CHECK(run_cli("export-data --sigma12 0.5 --sigma13 0.9 --sigma23 0.4 --p 2 "
                "--n 50 --seed 7 --out cli_test_data2.csv") == 0);
  CHECK(read_file("cli_test_data2.csv") == csv);
  std::remove("cli_test_data.csv");
  std::remove("cli_test_data2.csv");
}

TEST_CASE("quick self-validation passes") {
  CHECK(run_cli("validate --quick") == 0);
  const std::string output = read_file("cli_test_out.txt");
  CHECK(output.find("PASS") != std::string::npos);
  CHECK(output.find("FAIL") == std::string::npos);
  std::remove("cli_test_out.txt");
}

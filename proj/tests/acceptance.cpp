// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "pshlab/experiments.hpp"
#include "test_oracles.hpp"

namespace fs = std::filesystem;
using namespace pshlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string failing_rows(const Report& r) {
  std::string s;
  for (const auto& row : r.rows)
    if (!row.pass()) s += " [" + row.metric + "=" + format_number(row.value) + "]";
  return s;
}

Outcome report_within(const Report& r, double secs, double limit) {
  Outcome o;
  o.pass = r.passed() && secs < limit;
  std::ostringstream ss;
  ss << r.rows.size() << " rows, " << r.failures() << " failed" << failing_rows(r) << ", " << secs << " s (limit " << limit
     << " s)";
  o.detail = ss.str();
  return o;
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = run_lipschitz(resolve_config("lipschitz", ""));
  return report_within(rep, seconds_since(t0), 10.0);
}

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = run_cone_fraction(resolve_config("cone-fraction", ""));
  const double mc = oracle::monte_carlo_cone_fraction(1.0, 3, 10'000'000, 2024);
  const double q = cone_solid_angle_fraction(1.0, 3);
  auto o = report_within(rep, seconds_since(t0), 20.0);
  o.pass = o.pass && std::abs(q - mc) <= 3e-3;
  o.detail += "; independent Monte Carlo " + format_number(mc) + " vs " + format_number(q);
  return o;
}

Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = run_envelope(resolve_config("envelope", ""));
  return report_within(rep, seconds_since(t0), 30.0);
}

Outcome criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = run_regularize(resolve_config("regularize", ""));
  return report_within(rep, seconds_since(t0), 180.0);
}

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = run_counterexample(resolve_config("counterexample", "", {{"action", "falsify"}}));
  auto o = report_within(rep, seconds_since(t0), 120.0);
  // the weighted sum again, from brute-force s_k in long double
  const auto xs = build_sequence_x(66);
  long double sum = 0.0L;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const long double s = oracle::brute_sup_log_distance(xs[k].x, 200000);
    sum += std::ldexp(1.0L, -static_cast<int>(k) - 2) / (1.0L + s) * s;
  }
  o.pass = o.pass && sum <= 0.5L;
  o.detail += "; oracle sum c_k s_k = " + format_number(static_cast<double>(sum));
  return o;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PSHLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion6() {
  const auto root = fs::temp_directory_path() / "pshlab_acceptance_threads";
  fs::remove_all(root);
  const std::vector<std::string> commands{"lipschitz", "cone-fraction", "envelope", "regularize", "counterexample falsify"};
  Outcome o{true, ""};
  std::size_t files = 0;
  for (const auto& c : commands) {
    std::string tag = c;
    for (char& ch : tag)
      if (ch == ' ') ch = '_';
    const auto d1 = root / (tag + "_t1"), d8 = root / (tag + "_t8");
    const int e1 = run_cli(c + " --threads 1 --out " + d1.string());
    const int e8 = run_cli(c + " --threads 8 --out " + d8.string());
    if (e1 != e8) {
      o.pass = false;
      o.detail += " [" + tag + ": exit " + std::to_string(e1) + " vs " + std::to_string(e8) + "]";
    }
    for (const auto& entry : fs::directory_iterator(d1)) {
      if (entry.path().extension() != ".csv") continue;
      ++files;
      const auto other = d8 / entry.path().filename();
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
        o.pass = false;
        o.detail += " [" + tag + "/" + entry.path().filename().string() + " differs]";
      }
    }
  }
  fs::remove_all(root);
  o.detail = std::to_string(files) + " CSV files compared" + o.detail;
  if (files == 0) o.pass = false;
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 Lipschitz bound of the modified graph", criterion1},
      {"2 cone solid-angle fraction", criterion2},
      {"3 envelope solver", criterion3},
      {"4 boundary regularization pipeline", criterion4},
      {"5 counterexample certificates", criterion5},
      {"6 thread-count determinism", criterion6},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << ": " << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}

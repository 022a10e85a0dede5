#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pshlab/experiments.hpp"
#include "pshlab/parallel.hpp"

namespace fs = std::filesystem;
using namespace pshlab;

namespace {

// 0: every row passes, 1: some row fails, 2: usage/config/input error,
// 3: any other failure during the run.
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pshlab: numerical experiments on plurisubharmonic approximation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = "pshlab-out";
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  app.add_option("--config", config_path, "flat key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "seed for sampled estimators (overrides the config key)");
  app.add_option("--threads", threads, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);

  std::string action;
  for (const auto& name : experiment_commands()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    if (name == "counterexample")
      sub->add_option("action", action, "build, verify or falsify")->required()->check(CLI::IsMember({"build", "verify", "falsify"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    std::map<std::string, std::string> overrides;
    if (seed) overrides["seed"] = std::to_string(*seed);
    if (command == "counterexample") overrides["action"] = action;
    const auto cfg = resolve_config(command, config_path.empty() ? std::string() : read_text(config_path), overrides);
    set_thread_count(threads);

    const auto report = run_experiment(cfg);

    fs::create_directories(out_dir);
    write_bytes(fs::path(out_dir) / "config.txt", cfg.resolved_text());
    write_bytes(fs::path(out_dir) / "report.csv", report.csv());
    for (const auto& [name, bytes] : report.artifacts) write_bytes(fs::path(out_dir) / name, bytes);

    for (const auto& line : report.lines) std::cout << line << "\n";
    for (const auto& r : report.rows)
      if (!r.pass()) std::cout << "FAIL " << r.experiment << " " << r.metric << " = " << format_number(r.value) << "\n";
    std::cout << command << ": " << report.rows.size() << " rows, " << report.failures() << " failed\n";
    return report.passed() ? 0 : kExitFail;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const auto k = e.kind();
    return (k == ErrorKind::config || k == ErrorKind::io || k == ErrorKind::format) ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

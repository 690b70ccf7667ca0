#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rcamp/runner.hpp"
#include "rcamp/scenario.hpp"
#include "rcamp_oracle/dense_gp.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kRunFailure = 3;

bool parse_range(const std::string& s, std::uint64_t& a, std::uint64_t& b) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) return false;
  try {
    std::size_t used = 0;
    a = std::stoull(s.substr(0, dots), &used);
    if (used != dots) return false;
    const auto tail = s.substr(dots + 2);
    b = std::stoull(tail, &used);
    if (used != tail.size()) return false;
  } catch (const std::exception&) {
    return false;
  }
  return a <= b;
}

int run_one(rcamp::ScenarioConfig cfg, std::uint64_t seed, rcamp::mission::RunMode mode,
            const std::filesystem::path& out, int dump_every, std::mutex& io) {
  cfg.seed = seed;
  cfg.planner.seed = seed;
  try {
    const auto a = rcamp::run(cfg, mode, dump_every);
    rcamp::write_artifacts(a, out);
    std::lock_guard lock(io);
    std::cout << out.string() << ": " << rcamp::mission::to_string(a.outcome) << " after " << a.ticks.size()
              << " ticks\n";
    return kOk;
  } catch (const std::exception& e) {
    std::lock_guard lock(io);
    std::cerr << "run failed (seed " << seed << "): " << e.what() << '\n';
    return kRunFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Communication-aware planner simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string mode_name = "rcamp";
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  int dump_every = 0;

  auto* run_cmd = app.add_subcommand("run", "Run a scenario and write artifacts");
  run_cmd->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  run_cmd->add_option("--mode", mode_name, "rcamp or baseline")->check(CLI::IsMember({"rcamp", "baseline"}));
  run_cmd->add_option("--out", out_dir, "Output directory")->required();
  run_cmd->add_option("--seed", seed, "Override the scenario seed");
  run_cmd->add_option("--seeds", seeds, "Seed sweep A..B, one subdirectory per seed");
  run_cmd->add_option("--dump-every", dump_every, "Field dump period in ticks (0 = none)")->check(CLI::NonNegativeNumber);

  auto* validate_cmd = app.add_subcommand("validate", "Validate a scenario file");
  validate_cmd->add_option("--scenario", scenario_path, "Scenario JSON")->required();

  auto* oracle_cmd = app.add_subcommand("oracle", "Cross-check utilities");
  oracle_cmd->require_subcommand(1);
  auto* gp_cmd = oracle_cmd->add_subcommand("gp", "Compare GP prediction against a dense-inverse solve");
  std::size_t n = 50;
  std::uint64_t oracle_seed = 0;
  gp_cmd->add_option("--n", n, "Training samples")->check(CLI::PositiveNumber);
  gp_cmd->add_option("--seed", oracle_seed, "Instance seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  if (*oracle_cmd) {
    const auto r = rcamp::oracle::cross_check(n, 4 * n, oracle_seed);
    std::printf("max_mean_error %.3e\nmax_variance_error %.3e\nlml_error %.3e\n", r.max_mean_error,
                r.max_variance_error, r.lml_error);
    return r.max_mean_error <= 1e-8 && r.max_variance_error <= 1e-8 ? kOk : kRunFailure;
  }

  rcamp::ScenarioConfig cfg;
  try {
    cfg = rcamp::load_scenario(scenario_path);
  } catch (const rcamp::ScenarioError& e) {
    std::cerr << "invalid scenario: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "invalid scenario: " << e.what() << '\n';
    return kValidation;
  }

  if (*validate_cmd) {
    std::cout << scenario_path << ": ok\n";
    return kOk;
  }

  const auto mode = *rcamp::mission::parse_run_mode(mode_name);
  std::mutex io;
  if (seeds.empty()) {
    return run_one(cfg, seed.value_or(cfg.seed), mode, out_dir, dump_every, io);
  }

  std::uint64_t a = 0;
  std::uint64_t b = 0;
  if (!parse_range(seeds, a, b)) {
    std::cerr << "--seeds: expected A..B with A <= B\n";
    return kValidation;
  }
  std::vector<std::uint64_t> list;
  for (std::uint64_t s = a; s <= b; ++s) list.push_back(s);
  std::atomic<std::size_t> next{0};
  std::atomic<int> status{kOk};
  const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), list.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < list.size(); i = next++) {
        const auto dir = std::filesystem::path(out_dir) / ("seed_" + std::to_string(list[i]));
        if (run_one(cfg, list[i], mode, dir, dump_every, io) != kOk) status = kRunFailure;
      }
    });
  }
  for (auto& t : pool) t.join();
  return status;
}

#include "rcamp/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <fstream>
#include <stdexcept>

#include "rcamp/pgm.hpp"

namespace rcamp {

namespace {

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v, int digits) { return v ? fmt(*v, digits) : std::string{}; }

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

void check(std::ofstream& out, const std::filesystem::path& p) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

std::vector<std::uint8_t> to_image(const grf::QueryGrid& q, const Eigen::VectorXd& values,
                                   const std::function<std::uint8_t(double)>& map) {
  std::vector<std::uint8_t> img(q.size());
  for (int iy = 0; iy < q.ny; ++iy) {
    const int row = q.ny - 1 - iy;  // max y at the top
    for (int ix = 0; ix < q.nx; ++ix) {
      img[static_cast<std::size_t>(row) * q.nx + ix] = map(values[static_cast<std::size_t>(iy) * q.nx + ix]);
    }
  }
  return img;
}

}  // namespace

std::uint8_t mean_to_gray(double rss, double rss_min, double rss_max) {
  if (!(rss_max > rss_min)) return 0;
  const double u = std::clamp((rss - rss_min) / (rss_max - rss_min), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - u)));
}

std::uint8_t variance_to_gray(double variance, double variance_max) {
  if (!(variance_max > 0.0)) return 0;
  const double u = std::clamp(variance / variance_max, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(255.0 * u));
}

RunArtifacts run(const ScenarioConfig& cfg, mission::RunMode mode, int dump_every) {
  RunArtifacts a;
  a.config = cfg;
  a.mode = mode;
  mission::MissionExecutor ex(cfg, mode);
  a.query_grid = ex.query_grid();
  while (!ex.finished() && ex.ticks() < cfg.mission.max_ticks) {
    a.ticks.push_back(ex.tick());
    const int t = a.ticks.back().tick;
    if (dump_every > 0 && t % dump_every == 0 && ex.mapper().ready()) {
      a.dumps.push_back({t, *ex.current_prediction()});
    }
  }
  a.outcome = ex.finished() ? ex.outcome() : mission::Outcome::max_ticks;
  a.planner_stats = ex.planner_stats();
  a.recoveries = ex.recovery_count();
  a.final_hyperparams = ex.mapper().hyperparams();
  a.final_position = ex.state().position;
  return a;
}

nlohmann::json RunArtifacts::summary() const {
  nlohmann::json s;
  s["scenario"] = config.name;
  s["mode"] = std::string(mission::to_string(mode));
  s["seed"] = config.seed;
  s["outcome"] = std::string(mission::to_string(outcome));
  s["ticks"] = ticks.size();
  s["final_position"] = {final_position.x(), final_position.y()};
  s["recoveries"] = recoveries;

  std::size_t connected = 0;
  std::optional<double> min_filt;
  for (const auto& r : ticks) {
    if (r.connected) ++connected;
    const double f = r.filt_rss.value_or(config.mission.noise_floor);
    if (!min_filt || f < *min_filt) min_filt = f;
  }
  s["connected_ticks"] = connected;
  s["connected_fraction"] = ticks.empty() ? 0.0 : static_cast<double>(connected) / static_cast<double>(ticks.size());
  s["min_filt_rss_dbm"] = min_filt ? nlohmann::json(*min_filt) : nlohmann::json(nullptr);
  s["planner"] = {{"global_plans", planner_stats.global_plans},
                  {"global_failures", planner_stats.global_failures},
                  {"local_plans", planner_stats.local_plans},
                  {"local_failures", planner_stats.local_failures}};
  s["grf_hyperparams"] = {{"c_mean", final_hyperparams.c_mean},
                          {"sigma_e", final_hyperparams.sigma_e},
                          {"sigma_w", final_hyperparams.sigma_w},
                          {"sigma_n", final_hyperparams.sigma_n}};
  s["field_dumps"] = dumps.size();
  s["config"] = to_json(config);
  return s;
}

void write_artifacts(const RunArtifacts& a, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  {
    const auto p = dir / "rss.csv";
    auto out = open_out(p);
    out << "tick,time_s,x_m,y_m,raw_rss_dbm,filt_rss_dbm,ap_id,connected,mode\n";
    for (const auto& r : a.ticks) {
      out << r.tick << ',' << fmt(r.time, 3) << ',' << fmt(r.position.x(), 4) << ',' << fmt(r.position.y(), 4) << ','
          << fmt_opt(r.raw_rss, 4) << ',' << fmt_opt(r.filt_rss, 4) << ',' << r.ap_id.value_or("") << ','
          << (r.connected ? 1 : 0) << ',' << mission::to_string(r.mode) << '\n';
    }
    check(out, p);
  }
  {
    const auto p = dir / "path.csv";
    auto out = open_out(p);
    out << "tick,x_m,y_m\n";
    for (const auto& r : a.ticks) out << r.tick << ',' << fmt(r.position.x(), 4) << ',' << fmt(r.position.y(), 4) << '\n';
    check(out, p);
  }
  {
    const auto p = dir / "grf.csv";
    auto out = open_out(p);
    out << "tick,window_size,window_cap,ready,reoptimized\n";
    for (const auto& r : a.ticks) {
      out << r.tick << ',' << r.window_size << ',' << r.window_cap << ',' << (r.grf_ready ? 1 : 0) << ','
          << (r.reoptimized ? 1 : 0) << '\n';
    }
    check(out, p);
  }

  const double rss_min = a.config.planner.rss_min;
  const double rss_max = a.config.planner.rss_max;
  for (const auto& d : a.dumps) {
    char name[32];
    const auto& q = a.query_grid;
    const double var_max = d.prediction.variance.size() > 0 ? std::max(d.prediction.variance.maxCoeff(), 0.0) : 0.0;
    std::snprintf(name, sizeof name, "field_%04d_mean.pgm", d.tick);
    write_pgm(dir / name, q.nx, q.ny,
              to_image(q, d.prediction.mean, [&](double v) { return mean_to_gray(v, rss_min, rss_max); }),
              "mean rss, gray = 255 * (1 - clamp((rss - " + fmt(rss_min, 2) + ") / (" + fmt(rss_max, 2) + " - " +
                  fmt(rss_min, 2) + "), 0, 1))\nresolution_m " + fmt(q.resolution, 4) + " origin_m " +
                  fmt(q.bounds.x_min, 4) + " " + fmt(q.bounds.y_min, 4));
    std::snprintf(name, sizeof name, "field_%04d_var.pgm", d.tick);
    write_pgm(dir / name, q.nx, q.ny,
              to_image(q, d.prediction.variance, [&](double v) { return variance_to_gray(v, var_max); }),
              "variance db2, gray = 255 * clamp(var / " + fmt(var_max, 6) + ", 0, 1)\nresolution_m " +
                  fmt(q.resolution, 4) + " origin_m " + fmt(q.bounds.x_min, 4) + " " + fmt(q.bounds.y_min, 4));
  }

  {
    const auto p = dir / "summary.json";
    auto out = open_out(p);
    out << a.summary().dump(2) << '\n';
    check(out, p);
  }
}

}  // namespace rcamp

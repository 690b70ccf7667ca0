#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rcamp/grf.hpp"
#include "rcamp/planner.hpp"
#include "rcamp/radio.hpp"
#include "rcamp/runner.hpp"
#include "rcamp/scenario.hpp"
#include "rcamp/trav_map.hpp"

namespace py = pybind11;
using namespace rcamp;

namespace {

ScenarioConfig config_from(const std::string& scenario_json, std::optional<std::uint64_t> seed) {
  auto cfg = parse_scenario(nlohmann::json::parse(scenario_json));
  if (seed) cfg.seed = *seed;
  return cfg;
}

mission::RunMode mode_from(const std::string& s) {
  const auto m = mission::parse_run_mode(s);
  if (!m) throw py::value_error("mode must be 'rcamp' or 'baseline'");
  return *m;
}

std::vector<grf::TrainingSample> samples_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw py::value_error("samples must have shape (n, 3): x, y, rss");
  const auto r = a.unchecked<2>();
  std::vector<grf::TrainingSample> s;
  for (py::ssize_t i = 0; i < r.shape(0); ++i) s.push_back({{r(i, 0), r(i, 1)}, r(i, 2)});
  return s;
}

std::vector<Vec2> points_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw py::value_error("points must have shape (m, 2)");
  const auto r = a.unchecked<2>();
  std::vector<Vec2> p;
  for (py::ssize_t i = 0; i < r.shape(0); ++i) p.emplace_back(r(i, 0), r(i, 1));
  return p;
}

grf::Hyperparams hyper(double c_mean, double sigma_e, double sigma_w, double sigma_n) {
  grf::Hyperparams h{c_mean, sigma_e, sigma_w, sigma_n};
  h.validate();
  return h;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);
  py::register_exception<grf::UntrainedModel>(m, "UntrainedModel", PyExc_RuntimeError);

  m.def(
      "resolve_scenario",
      [](const std::string& scenario_json) { return to_json(parse_scenario(nlohmann::json::parse(scenario_json))).dump(); },
      py::arg("scenario_json"));

  m.def(
      "run",
      [](const std::string& scenario_json, const std::string& mode, std::optional<std::uint64_t> seed, int dump_every,
         std::optional<std::string> out) {
        const auto cfg = config_from(scenario_json, seed);
        RunArtifacts a;
        {
          py::gil_scoped_release release;
          a = run(cfg, mode_from(mode), dump_every);
          if (out) write_artifacts(a, *out);
        }
        const auto n = static_cast<py::ssize_t>(a.ticks.size());
        py::array_t<double> trace({n, py::ssize_t{4}});
        auto t = trace.mutable_unchecked<2>();
        for (py::ssize_t i = 0; i < n; ++i) {
          const auto& r = a.ticks[static_cast<std::size_t>(i)];
          t(i, 0) = r.position.x();
          t(i, 1) = r.position.y();
          t(i, 2) = r.filt_rss.value_or(std::numeric_limits<double>::quiet_NaN());
          t(i, 3) = r.connected ? 1.0 : 0.0;
        }
        return py::make_tuple(a.summary().dump(), trace);
      },
      py::arg("scenario_json"), py::arg("mode") = "rcamp", py::arg("seed") = py::none(), py::arg("dump_every") = 0,
      py::arg("out") = py::none());

  m.def(
      "deterministic_rss",
      [](double ap_x, double ap_y, double x, double y, double rss_d0, double eta, double d0) {
        radio::AccessPoint ap;
        ap.position = {ap_x, ap_y};
        ap.params.rss_d0 = rss_d0;
        ap.params.eta = eta;
        ap.params.d0 = d0;
        ap.params.validate();
        return *radio::deterministic_rss(ap, {x, y});
      },
      py::arg("ap_x"), py::arg("ap_y"), py::arg("x"), py::arg("y"), py::arg("rss_d0") = -40.0, py::arg("eta") = 3.0,
      py::arg("d0") = 1.0);

  m.def(
      "predict",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& samples,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& queries, double c_mean,
         double sigma_e, double sigma_w, double sigma_n) {
        const auto p = grf::predict(samples_from(samples), hyper(c_mean, sigma_e, sigma_w, sigma_n),
                                    points_from(queries));
        return py::make_tuple(p.mean, p.variance, p.confidence);
      },
      py::arg("samples"), py::arg("queries"), py::arg("c_mean") = -70.0, py::arg("sigma_e") = 10.0,
      py::arg("sigma_w") = 5.0, py::arg("sigma_n") = 2.0);

  m.def(
      "log_marginal_likelihood",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& samples, double c_mean,
         double sigma_e, double sigma_w, double sigma_n) {
        return grf::log_marginal_likelihood(samples_from(samples), hyper(c_mean, sigma_e, sigma_w, sigma_n));
      },
      py::arg("samples"), py::arg("c_mean") = -70.0, py::arg("sigma_e") = 10.0, py::arg("sigma_w") = 5.0,
      py::arg("sigma_n") = 2.0);

  m.def(
      "optimize_hyperparams",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& samples, double c_mean,
         double sigma_e, double sigma_w, double sigma_n) {
        const auto r = grf::optimize_hyperparams(samples_from(samples), hyper(c_mean, sigma_e, sigma_w, sigma_n),
                                                 grf::HyperBounds{});
        py::dict d;
        d["c_mean"] = r.h.c_mean;
        d["sigma_e"] = r.h.sigma_e;
        d["sigma_w"] = r.h.sigma_w;
        d["sigma_n"] = r.h.sigma_n;
        d["lml"] = r.lml;
        d["lml_initial"] = r.lml_initial;
        return d;
      },
      py::arg("samples"), py::arg("c_mean") = -70.0, py::arg("sigma_e") = 10.0, py::arg("sigma_w") = 5.0,
      py::arg("sigma_n") = 2.0);

  m.def(
      "plan",
      [](const py::array_t<bool, py::array::c_style | py::array::forcecast>& walls, double resolution,
         std::pair<double, double> start, std::pair<double, double> goal, std::uint64_t seed, double lambda_t,
         double clearance_min) {
        if (walls.ndim() != 2) throw py::value_error("walls must be a 2-D boolean array indexed [iy, ix]");
        const auto w = walls.unchecked<2>();
        trav::TravGrid g(static_cast<int>(w.shape(1)), static_cast<int>(w.shape(0)), resolution);
        for (int iy = 0; iy < g.ny(); ++iy)
          for (int ix = 0; ix < g.nx(); ++ix)
            if (w(iy, ix)) g.cell(ix, iy).label = trav::CellClass::wall;
        g.compute_clearance();
        g.compute_costs(trav::TravWeights{});
        const trav::TraversableMask mask(g, clearance_min);
        planner::PlannerConfig c;
        c.seed = seed;
        c.lambda_t = lambda_t;
        const auto r = planner::plan_global({start.first, start.second}, {goal.first, goal.second}, mask, nullptr, c);
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : r.path.waypoints) pts.emplace_back(p.x(), p.y());
        py::dict d;
        d["status"] = std::string(planner::to_string(r.status));
        d["waypoints"] = pts;
        d["total_cost"] = r.path.total_cost;
        d["length"] = planner::path_length(r.path.waypoints);
        d["expansions"] = r.expansions;
        return d;
      },
      py::arg("walls"), py::arg("resolution"), py::arg("start"), py::arg("goal"), py::arg("seed") = 0,
      py::arg("lambda_t") = 1.0, py::arg("clearance_min") = 0.0);
}

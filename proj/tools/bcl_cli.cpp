#include <cmath>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "bcl/harness.hpp"
#include "bcl/io.hpp"
#include "bcl/lz.hpp"

using namespace bcl;

namespace {

Json load(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::InvalidConfig, "cannot open " + path);
  return Json::parse(f);
}

RunConfig study_config(const std::string& path, bool crossing) {
  Json j = load(path);
  RunConfig base = crossing ? crossing_defaults() : isolated_defaults();
  Json merged = base.to_json();
  merged.merge_patch(j);
  return RunConfig::from_json(merged);
}

int cmd_bands(const std::string& cfg_path, const std::string& out, bool svg) {
  Json j = load(cfg_path);
  PeriodicPotential V = potential_from_json(j.value("potential", Json{{"kind", "cosine"}}));
  int n_max = j.value("bands", 6), count = j.value("p_points", 129), M = j.value("modes", 48);
  BandStructure bs = band_structure(V, uniform_p_grid(count), n_max, M);
  auto cs = detect_crossings(bs);
  io::ensure_dir(out);
  io::write_bands_csv(out + "/bands.csv", bs);
  io::write_coeffs_csv(out + "/coeffs.csv", V);
  Json cj = Json::array();
  for (const auto& c : cs) cj.push_back({{"n", c.n}, {"p_star", c.p_star}, {"gap", c.gap}});
  io::write_text(out + "/crossings.json", Json{{"version", kVersionStamp}, {"config", j}, {"crossings", cj}}.dump(2));
  if (svg) {
    std::vector<io::Series> ser;
    for (int n = 0; n < n_max; ++n) {
      io::Series s{"E" + std::to_string(n + 1), bs.p, {}};
      for (size_t i = 0; i < bs.p.size(); ++i) s.y.push_back(bs.E(i, n));
      ser.push_back(std::move(s));
    }
    io::write_svg(out + "/bands.svg", "band structure", ser);
  }
  std::cout << cs.size() << " crossings written to " << out << "\n";
  return 0;
}

int cmd_trajectory(const std::string& cfg_path, const std::string& out, bool svg) {
  Json j = load(cfg_path);
  RunConfig cfg = study_config(cfg_path, j.value("crossing", false));
  Scenario sc(cfg);
  io::ensure_dir(out);
  io::write_trajectory_csv(out + "/plus.csv", sc.plus_trajectory(), sc.plus_band().branch().label());
  std::vector<io::Series> ser{{"q plus", sc.plus_trajectory().t, sc.plus_trajectory().q}};
  Json meta{{"version", kVersionStamp}, {"config", cfg.to_json()}};
  if (cfg.crossing) {
    io::write_trajectory_csv(out + "/minus.csv", sc.minus_trajectory(), sc.minus_band().branch().label());
    ser.push_back({"q minus", sc.minus_trajectory().t, sc.minus_trajectory().q});
    meta["t_star"] = sc.t_star();
    meta["q_star"] = sc.q_star();
    meta["p_star"] = sc.p_star();
    meta["coupling"] = {sc.coupling().real(), sc.coupling().imag()};
    meta["slope_gap"] = sc.slope_gap();
  }
  io::write_text(out + "/trajectory.json", meta.dump(2));
  if (svg) io::write_svg(out + "/centers.svg", "centers of mass", ser);
  std::cout << "trajectories written to " << out << "\n";
  return 0;
}

int cmd_lz(const std::string& cfg_path, const std::string& out, bool svg) {
  Json j = load(cfg_path);
  double rate = j.value("rate", 1.0), kappa = j.value("coupling", 0.1), half = j.value("half_span", 5.0);
  double dt_over_eps = j.value("dt_over_eps", 0.02);
  std::vector<double> eps = j.value("eps", std::vector<double>{1e-2, 1e-3, 1e-4});
  std::vector<std::vector<double>> rows;
  io::Series s{"relative error", {}, {}};
  for (double e : eps) {
    LZModel m = LZModel::linear(0.0, rate, kappa, e);
    LZPath path = simulate(m, -half, half, dt_over_eps * e, 1 << 30);
    double measured = std::norm(path.c_minus.back()), predicted = predict(m);
    rows.push_back({e, measured, predicted, std::abs(measured / predicted - 1.0), path.max_norm_drift});
    s.x.push_back(e);
    s.y.push_back(rows.back()[3]);
  }
  io::ensure_dir(out);
  io::write_csv(out + "/lz.csv", {"eps", "measured", "predicted", "relative_error", "norm_drift"}, rows);
  if (svg) io::write_svg(out + "/lz.svg", "transition probability error", {s}, true, true);
  std::cout << "lz table written to " << out << "\n";
  return 0;
}

int run_study(const std::string& name, const std::string& cfg_path, const std::string& out, bool svg) {
  RunConfig cfg = study_config(cfg_path, name != "isolated");
  StudyReport r = name == "isolated"    ? run_isolated_band(cfg)
                  : name == "breakdown" ? run_breakdown_study(cfg)
                  : name == "crossing"  ? run_crossing_study(cfg)
                                        : run_inner_window(cfg);
  write_report(r, out.empty() ? cfg.out_dir : out, svg);
  for (const auto& f : r.fits)
    std::cout << (f.pass ? "PASS " : "FAIL ") << f.name << " slope " << f.fit.slope << " target " << f.target
              << " +- " << f.tolerance << "\n";
  for (const auto& g : r.gates)
    std::cout << (g.pass ? "PASS " : "FAIL ") << g.name << " " << g.value << " (" << g.requirement << ")\n";
  return r.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Band-crossing wave-packet experiments"};
  app.require_subcommand(1);
  std::string cfg, out;
  bool svg = false;
  std::vector<std::string> names{"bands", "trajectory", "lz", "isolated", "breakdown", "crossing", "inner"};
  for (const auto& n : names) {
    auto* sub = app.add_subcommand(n);
    sub->add_option("--config", cfg, "JSON configuration file");
    sub->add_option("--out", out, "output directory");
    sub->add_flag("--emit-svg", svg, "write line-plot SVGs");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string which = app.get_subcommands().front()->get_name();
  try {
    if (out.empty() && (which == "bands" || which == "trajectory" || which == "lz")) out = "out";
    if (which == "bands") return cmd_bands(cfg, out, svg);
    if (which == "trajectory") return cmd_trajectory(cfg, out, svg);
    if (which == "lz") return cmd_lz(cfg, out, svg);
    return run_study(which, cfg, out, svg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcl/ansatz.hpp"
#include "bcl/band.hpp"
#include "bcl/classical.hpp"
#include "bcl/direct.hpp"
#include "bcl/envelope.hpp"
#include "bcl/potential.hpp"

namespace bcl {

using Json = nlohmann::json;

inline constexpr const char* kVersionStamp = "bcl 1.0.0";

// {"kind": "zero" | "cosine" | "m_gap" | "coeffs", ...}
//   cosine: amplitude, harmonic      V = amplitude cos(2 pi harmonic z)
//   m_gap:  m, omega_prime
//   coeffs: re, im (index 0 holds m = -M_V)
PeriodicPotential potential_from_json(const Json& j);
// {"kind": "zero" | "linear" | "cosine" | "harmonic", alpha | beta, omega | stiffness, center}
ExternalPotential external_from_json(const Json& j);
// {"kind": "gaussian" | "hermite", sigma, order, chirp, center, k0}
Envelope envelope_from_json(const Json& j, double Y, int N);

struct RunConfig {
  Json potential = {{"kind", "cosine"}, {"amplitude", 4.0}, {"harmonic", 1}};
  Json external = {{"kind", "linear"}, {"alpha", 0.25}};
  Json envelope = {{"kind", "gaussian"}, {"sigma", 1.0}};
  double env_Y = 20.0;
  int env_N = 512;

  // Isolated studies follow raw band `band`; crossing studies follow the pair
  // (band, band + 1) through the crossing at p_star (first one met if unset).
  bool crossing = false;
  int band = 1;
  std::optional<double> p_star;

  double q0 = 2.0, p0 = 1.0, S0 = 0.0;
  std::vector<int> K = {32, 64, 128};  // eps = 1/K
  double xi = 0.45, xi_prime = 0.40;
  std::vector<double> xi_list = {0.40, 0.45};

  int L = 4, ppw = 32, modes = 48;
  double t_final = 0.5;  // isolated: measurement time; crossing: horizon T
  double dt_over_eps = 0.125;
  Scheme scheme = Scheme::Bloch;
  double collar = 0.4;
  double U_halfwidth = 0.5;
  double classical_dt = 1e-3;
  double envelope_dt = 5e-4;
  int inner_points = 9;
  std::string out_dir = "out";

  static RunConfig from_json(const Json& j);
  Json to_json() const;
  void validate() const;  // throws InvalidConfig
  std::vector<double> epsilons() const;
};

RunConfig isolated_defaults();
RunConfig crossing_defaults();

// Classical and envelope data shared by every eps of one configuration.
class Scenario {
 public:
  explicit Scenario(const RunConfig& cfg);
  ~Scenario();
  Scenario(const Scenario&) = delete;
  Scenario& operator=(const Scenario&) = delete;

  const RunConfig& config() const { return cfg_; }
  const PeriodicPotential& V() const { return V_; }
  const ExternalPotential& W() const { return W_; }
  const PeriodizedW& W_periodic() const { return *Wp_; }
  const BandInterpolant& plus_band() const { return *plus_; }
  const BandInterpolant& minus_band() const;
  const Trajectory& plus_trajectory() const;
  const Trajectory& minus_trajectory() const;
  const std::vector<Crossing>& crossings() const { return crossings_; }

  double t_star() const { return t_star_; }
  double q_star() const { return q_star_; }
  double p_star() const { return p_star_; }
  cd coupling() const { return coupling_; }
  double slope_gap() const { return slope_gap_; }
  double dqW_star() const { return dqW_star_; }
  const Envelope& plus_envelope_at_star() const { return a_star_; }
  const Envelope& excited_at_star() const { return excited_.closed_form; }
  double excited_route_difference() const { return excited_.route_difference; }

  // WP1 data on the plus branch (or the isolated band) at time t.
  WavepacketParams plus_packet(double t, double eps) const;
  // WP0 data of the excited packet on the minus branch, t >= t*.
  WavepacketParams minus_packet(double t, double eps) const;

  // Initial state on the grid for eps = 1/K.
  GridState initial_state(int K) const;
  // Throws EnvelopeClipped if the packet reaches the collars of the periodized W.
  void check_collar(const WavepacketParams& w) const;

 private:
  struct Track;

  RunConfig cfg_;
  PeriodicPotential V_;
  ExternalPotential W_;
  std::unique_ptr<PeriodizedW> Wp_;
  std::unique_ptr<BandInterpolant> plus_, minus_;
  std::vector<Crossing> crossings_;
  std::unique_ptr<Trajectory> plus_traj_;
  std::unique_ptr<ExtendedTrajectory> ext_;
  std::unique_ptr<Track> plus_track_, minus_track_;
  double t_star_ = 0.0, q_star_ = 0.0, p_star_ = 0.0, slope_gap_ = 0.0, dqW_star_ = 0.0;
  cd coupling_{};
  Envelope a_star_;
  ExcitedEnvelope excited_;
};

struct Fit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

// Least squares of log m against log eps; >= 3 pairs with positive entries.
Fit fit_scaling(const std::vector<std::pair<double, double>>& pairs);

struct ScalingReport {
  std::string name;
  std::vector<std::pair<double, double>> pairs;  // (eps, measurement)
  Fit fit;
  double target = 0.0, tolerance = 0.0;
  bool pass = false;
};

ScalingReport make_scaling_report(const std::string& name, const std::vector<std::pair<double, double>>& pairs,
                                  double target, double tolerance);

struct Gate {
  std::string name;
  double value = 0.0;
  std::string requirement;
  bool pass = false;
};

struct StudyReport {
  std::string study;
  RunConfig config;
  std::vector<ScalingReport> fits;
  std::vector<Gate> gates;
  Json metrics = Json::object();
  std::vector<std::string> csv_names;
  std::vector<std::vector<std::string>> csv_headers;
  std::vector<std::vector<std::vector<double>>> csv_rows;

  bool pass() const;
  Json to_json() const;
  void add_table(const std::string& name, std::vector<std::string> header, std::vector<std::vector<double>> rows);
};

// Gates: WP1 slope 1.0 +- 0.3 and WP0 slope 0.5 +- 0.3.
StudyReport run_isolated_band(const RunConfig& cfg);
// Gates: slope 1 - xi +- 0.15 for every xi in cfg.xi_list.
StudyReport run_breakdown_study(const RunConfig& cfg);
// Gates: residual slope 0.5 +- 0.15, overlap >= 0.9, mass ratios within 20%.
StudyReport run_crossing_study(const RunConfig& cfg);
// Gate: plateau of the minus-branch mass within 20% of the transition law.
StudyReport run_inner_window(const RunConfig& cfg);

// report.json plus one CSV per table; SVGs of the tables when emit_svg.
void write_report(const StudyReport& r, const std::string& dir, bool emit_svg = false);

// Propagates the initial state for every eps (snapshots[i] for K[i]) on the
// worker pool; BCL_THREADS caps it.
std::vector<std::vector<GridState>> propagate_all(const Scenario& sc, const std::vector<std::vector<double>>& snapshots);

}  // namespace bcl

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bcl/band.hpp"
#include "bcl/potential.hpp"

namespace bcl {

// Band dispersion seen by the classical flow.
struct BandFunctions {
  std::function<double(double)> E;
  std::function<double(double)> dEdp;
  std::string label;

  static BandFunctions from(const BandInterpolant& b);
  static BandFunctions free_parabola(double shift = 0.0);  // E = (p - shift)^2 / 2
};

struct Trajectory {
  std::vector<double> t, q, p, S;
  std::vector<double> qd, pd, Sd;  // time derivatives at the samples
  std::string band;
  double energy_drift = 0.0;

  size_t size() const { return t.size(); }
  // Cubic Hermite interpolation in t; t must lie in the sampled range.
  struct State {
    double q, p, S;
  };
  State at(double time) const;
};

Trajectory integrate_flow(const BandFunctions& band, const ExternalPotential& W, double q0, double p0, double S0,
                          double t0, double t1, double dt);

struct CrossingTime {
  double t_star = 0.0, q_star = 0.0, S_star = 0.0, p_dot = 0.0;
};

// First time p(t) passes p_star, refined by bisection on single RK4 steps.
CrossingTime detect_crossing_time(const Trajectory& traj, const BandFunctions& band, const ExternalPotential& W,
                                  double p_star, double tangential_tol = 1e-8);

struct ExtendedTrajectory {
  Trajectory plus;   // on [t0, T], follows E_+ through t*
  Trajectory minus;  // on [t* - delta', T], launched from (q*, p*, S*)
  double t_star = 0.0, q_star = 0.0, p_star = 0.0, S_star = 0.0;
  double delta = 0.1, delta_prime = 0.1;
};

// other_crossings: detected crossings (n, p) of the band structure, used to
// reject branches that reach a second degeneracy before T.
ExtendedTrajectory extend_through_crossing(const BandFunctions& plus, const BandFunctions& minus,
                                           const ExternalPotential& W, const Trajectory& incoming, double p_star,
                                           int n, double T, double delta = 0.1, double U_halfwidth = 0.5,
                                           const std::vector<Crossing>& other_crossings = {});

}  // namespace bcl

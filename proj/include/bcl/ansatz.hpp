#pragma once

#include <optional>

#include "bcl/envelope.hpp"

namespace bcl {

// Uniform periodic x-grid on [0, L) with N = L K ppw points, eps = 1/K.
struct GridState {
  int L = 1;
  int K = 16;
  int ppw = 32;
  double t = 0.0;
  VecC psi;

  static GridState make(int L, int K, int ppw);
  int N() const { return L * K * ppw; }
  double epsilon() const { return 1.0 / K; }
  double dx() const { return static_cast<double>(L) / N(); }
  double x(int j) const { return j * dx(); }
  double norm() const { return std::sqrt(psi.squaredNorm() * dx()); }
  bool same_grid(const GridState& o) const { return L == o.L && K == o.K && ppw == o.ppw; }
};

struct WavepacketParams {
  double S = 0.0, q = 0.0, p = 0.0;
  Envelope a0;
  std::optional<Envelope> a1;
  VecC chi;     // plane-wave coefficients at p
  VecC dp_chi;  // may be empty for WP0
  double epsilon = 1.0 / 16;
};

GridState assemble_wp0(const WavepacketParams& w, const GridState& grid);
GridState assemble_wp1(const WavepacketParams& w, const GridState& grid);

// WP1 on the plus branch plus sqrt(eps) WP0 on the minus branch.
GridState two_band_ansatz(const WavepacketParams& plus, const WavepacketParams& minus, const GridState& grid);

double predict_excited_mass(double dqW_star, cd coupling, double slope_gap, double incident_mass, double epsilon);

// Band-limited interpolant of an envelope evaluated at arbitrary points.
VecC envelope_at(const Envelope& e, const std::vector<double>& y);

}  // namespace bcl

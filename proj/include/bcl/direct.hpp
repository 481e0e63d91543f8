#pragma once

#include <memory>
#include <vector>

#include "bcl/ansatz.hpp"
#include "bcl/band.hpp"
#include "bcl/potential.hpp"

namespace bcl {

enum class Scheme {
  Standard,  // kinetic in Fourier space, V(x/eps) + W(x) pointwise
  Bloch,     // exact propagator of -eps^2/2 d_xx + V(x/eps) per quasi-momentum block, W pointwise
};

struct PropagatorConfig {
  double dt = 1e-3;
  Scheme scheme = Scheme::Bloch;
  std::vector<double> snapshots;  // ascending times after psi0.t
};

// Reference solver for i eps psi_t = -eps^2/2 psi_xx + V(x/eps) psi + W(x) psi on [0, L).
class Propagator {
 public:
  Propagator(const PeriodicPotential& V, const PeriodizedW& W, const GridState& grid, const PropagatorConfig& cfg);
  ~Propagator();
  Propagator(const Propagator&) = delete;
  Propagator& operator=(const Propagator&) = delete;

  // Advances psi in place over n steps of size dt.
  void advance(GridState& psi, int n) const;
  double dt() const { return dt_; }
  // dt * max|potential| / eps per half step that the scheme exponentiates pointwise.
  double half_step_phase() const { return half_phase_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  double dt_;
  double half_phase_;
};

// cfg.dt is an upper bound: each segment between snapshots is split into
// equal steps that land exactly on the snapshot time.
std::vector<GridState> propagate(const GridState& psi0, const PeriodicPotential& V, const PeriodizedW& W,
                                 const PropagatorConfig& cfg);

struct L2Error {
  double raw = 0.0;
  double phase_optimized = 0.0;
  double phase = 0.0;  // optimal global phase
};

L2Error l2_error(const GridState& psi, const GridState& ansatz);

// Mass per band of the part of psi inside [x_lo, x_hi], from projections onto
// the discrete Bloch modes of each quasi-momentum block. Index n-1 holds band
// n for n <= n_bands; the last entry is everything above.
std::vector<double> band_mass(const GridState& psi, const PeriodicPotential& V, double x_lo, double x_hi,
                              int n_bands);

// Mass of the windowed state on one branch: per quasi-momentum block the
// branch index is taken at the image of p nearest to the branch's p_star.
double branch_mass(const GridState& psi, const PeriodicPotential& V, double x_lo, double x_hi,
                   const BranchSpec& branch);

// Plane-wave coefficients aliased onto ppw modes for the block eigenproblem.
MatC block_hamiltonian(const PeriodicPotential& V, int ppw, double p);

}  // namespace bcl

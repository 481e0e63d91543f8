#pragma once

#include <functional>
#include <vector>

#include "bcl/band.hpp"
#include "bcl/classical.hpp"
#include "bcl/common.hpp"

namespace bcl {

// Samples on y_j = -Y + j * 2Y/N, treated as one period of a 2Y-periodic function.
struct Envelope {
  double Y = 20.0;
  VecC v;
  double t = 0.0;

  Envelope() = default;
  Envelope(double Y_, int N) : Y(Y_), v(VecC::Zero(N)) {}
  int size() const { return static_cast<int>(v.size()); }
  double dy() const { return 2.0 * Y / v.size(); }
  double y(int j) const { return -Y + j * dy(); }
  VecR k() const;  // angular wavenumbers in FFT order
  double norm() const { return std::sqrt(v.squaredNorm() * dy()); }
  // Share of |a|^2 on the outer 10% of the grid.
  double edge_fraction() const;
};

// Normalized Gaussian pi^{-1/4} sigma^{-1/2} exp(-(y-c)^2/(2 sigma^2) + i k0 y).
Envelope gaussian_envelope(double Y, int N, double sigma = 1.0, double center = 0.0, double k0 = 0.0);
// Gaussian times a Hermite polynomial of degree `order` and a chirp; normalized.
Envelope hermite_envelope(double Y, int N, int order, double sigma = 1.0, double chirp = 0.0);

// -i d/dy of an envelope by spectral differentiation.
Envelope spectral_derivative(const Envelope& e);

// Coefficients of the oscillator Hamiltonian and the first-order source as
// functions of time. A is the Berry connection along the trajectory.
struct OscillatorCoefficients {
  std::function<double(double)> d2E, d2W, dW_A;      // H(t)
  std::function<double(double)> d3E, d3W, dW_dpA, d2W_A;  // I(t)

  static OscillatorCoefficients constant(double d2E, double d2W, double dW_A, double d3E = 0.0, double d3W = 0.0,
                                         double dW_dpA = 0.0, double d2W_A = 0.0);
};

// Coefficients along a trajectory in the adiabatic gauge (A = 0 identically).
OscillatorCoefficients coefficients_along(const Trajectory& traj, const BandInterpolant& band,
                                          const ExternalPotential& W);

struct EnvelopePath {
  std::vector<Envelope> a;  // a[k] at t0 + k dt
  double t0 = 0.0, dt = 0.0;
  const Envelope& back() const { return a.back(); }
  // Nearest stored sample; throws if time is not on the grid to 1e-9.
  const Envelope& at(double time) const;
};

// Single steps of the schemes used by evolve_a0 / evolve_a1, for partial steps.
void a0_step(const OscillatorCoefficients& c, Envelope& a, double t, double h);
void a1_step(const OscillatorCoefficients& c, Envelope& a1, const Envelope& a0, double t, double h);

EnvelopePath evolve_a0(const OscillatorCoefficients& c, const Envelope& a0_init, double t0, double t1, double dt);
EnvelopePath evolve_a1(const OscillatorCoefficients& c, const Envelope& a1_init, const EnvelopePath& a0_path,
                       double t0, double t1, double dt);

struct ExcitedEnvelope {
  Envelope closed_form;  // chirp multiplier in the frequency domain
  Envelope quadrature;   // direct oscillatory quadrature over tau
  double route_difference = 0.0;  // L2 distance between the two
};

ExcitedEnvelope excited_envelope(const Envelope& a_star, double dqW_star, double slope_gap, cd coupling);

// Partial integrals from -infinity to each s in s_grid (ascending).
std::vector<Envelope> excited_buildup(const Envelope& a_star, double dqW_star, double slope_gap, cd coupling,
                                      const std::vector<double>& s_grid);

double sigma_norm(const Envelope& e, int l);

// Throws GridOverflow when edge_fraction exceeds tol.
void check_decay(const Envelope& e, double tol = 1e-8);

}  // namespace bcl

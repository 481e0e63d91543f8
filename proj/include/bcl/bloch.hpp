#pragma once

#include <vector>

#include "bcl/common.hpp"
#include "bcl/potential.hpp"

namespace bcl {

inline constexpr int kDefaultModes = 64;

// H_{mk}(p) = 1/2 (p + 2 pi m)^2 delta_{mk} + V_{m-k}, |m|,|k| <= M.
struct BlochMatrix {
  double p = 0.0;
  int M = 0;
  MatC H;
};

BlochMatrix assemble(const PeriodicPotential& V, double p, int M = kDefaultModes);

// Plane-wave coefficients c_m, m = -M..M, stored at index m + M.
struct BlochMode {
  int n = 0;  // 1-based band index
  double p = 0.0;
  double E = 0.0;
  VecC c;
};

std::vector<BlochMode> eigensolve(const BlochMatrix& H, int n_max);

// Full eigendecomposition plus the diagonal of dH/dp = p + 2 pi m.
struct Spectrum {
  double p = 0.0;
  int M = 0;
  VecR E;
  MatC U;
  VecR D;
};

Spectrum full_spectrum(const PeriodicPotential& V, double p, int M = kDefaultModes);
VecR band_energies(const PeriodicPotential& V, double p, int M, int count);

// chi(z) on z_j = j / n from plane-wave coefficients.
VecC chi_on_grid(const VecC& c, int n);
// <a|b> in L^2[0,1] = sum conj(a_m) b_m
inline cd inner(const VecC& a, const VecC& b) { return a.dot(b); }

struct BandStructure {
  PeriodicPotential V;
  int M = kDefaultModes;
  int n_max = 0;
  std::vector<double> p;
  Eigen::MatrixXd E;  // (p index, band) for n_max + 1 bands
  std::vector<std::vector<BlochMode>> modes;  // [p index][n - 1], n <= n_max
  Eigen::MatrixXd G;  // gap table (p index, n - 1)
};

// Uniform grid on [0, 2 pi] including both ends; count must be odd so pi is a node.
std::vector<double> uniform_p_grid(int count);

BandStructure band_structure(const PeriodicPotential& V, const std::vector<double>& p_grid, int n_max,
                             int M = kDefaultModes);

double gap(const BandStructure& bs, int n, double p);

struct Crossing {
  int n = 0;  // lower band of the pair
  double p_star = 0.0;
  double gap = 0.0;
};

std::vector<Crossing> detect_crossings(const BandStructure& bs, double tol = 1e-8);

// E, dE/dp, d2E/dp2, d3E/dp3 of the non-degenerate eigenvalue idx (0-based)
// from Rayleigh-Schrodinger perturbation sums over the full spectrum.
struct BandDerivs {
  double E = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0;
};
BandDerivs band_derivs(const Spectrum& s, int idx);

// Solves (H - E_sigma) u = P f where P removes the eigen-directions listed in
// exclude; u has no component along them.
VecC reduced_resolvent_apply(const Spectrum& s, double E_sigma, const std::vector<int>& exclude, const VecC& f,
                             double min_gap = 1e-10);

// Adiabatic-gauge derivative of eigenvector idx: -(H-E)^{-1} P (D - E')chi.
VecC dp_chi(const Spectrum& s, int idx);
// Same for a given mode; the result carries the phase of mode.c.
VecC dp_chi(const PeriodicPotential& V, const BlochMode& mode, int M = kDefaultModes);

// Eigenvector path over p.
struct ModePath {
  std::vector<double> p;
  std::vector<VecC> chi;
};

// Rotates phases so that each <chi_k|chi_{k+1}> is real and positive.
ModePath fix_gauge(ModePath path);

// A = i<chi|d_p chi> at interval midpoints, from the overlap phases.
std::vector<double> berry_connection(const ModePath& path);

struct SmoothBandPair {
  PeriodicPotential V;
  int M = kDefaultModes;
  int n = 0;
  double p_star = 0.0;
  double halfwidth = 0.5;
  std::vector<double> p;  // uniform on [p* - w, p* + w], p* is the middle node
  std::vector<double> E_plus, E_minus;
  ModePath chi_plus, chi_minus;  // gauge fixed, with chi_plus_star / chi_minus_star at p*
  double slope_plus = 0.0, slope_minus = 0.0;
  double M_gap = 0.0;
  VecC chi_plus_star, chi_minus_star;
  VecC dp_chi_plus_regular;  // d_p chi_+ at p* with both resonant directions excluded
  cd coupling{};             // <chi_-(p*)|d_p chi_+(p*)>
};

SmoothBandPair smooth_continuation(const BandStructure& bs, int n, double p_star, double U_halfwidth = 0.5,
                                   int samples = 101);

cd coupling_coefficient(const SmoothBandPair& pair);

// Degenerate basis at p* ordered (minus, plus) by the eigenvalues of dH/dp on
// the two-dimensional eigenspace; also returns the two slopes.
struct DegenerateBasis {
  VecC chi_minus, chi_plus;
  double slope_minus = 0.0, slope_plus = 0.0;
  int idx = 0;  // lower eigen-index of the pair
};
DegenerateBasis degenerate_basis(const Spectrum& s, int idx);

// chi_+ regular derivative and the chi_- component at a crossing.
struct CrossingDerivative {
  VecC regular;
  cd coupling{};
};
CrossingDerivative crossing_derivative(const Spectrum& s, const DegenerateBasis& b);

// min over phi of || chi_- - e^{i phi} e^{-2 pi i z} conj(chi_+) || at p* = pi.
double verify_symmetry_identity(const SmoothBandPair& pair);

// Max |third divided difference| of samples across the middle node.
double third_difference_max(const std::vector<double>& f, double h);

}  // namespace bcl

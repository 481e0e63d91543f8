#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bcl/common.hpp"

namespace bcl {

// 1-periodic real potential stored by its Fourier coefficients V_m, |m| <= M_V.
// V(z) = sum_m V_m exp(2 pi i m z).
class PeriodicPotential {
 public:
  PeriodicPotential() : coeffs_(1, cd{0.0, 0.0}) {}
  // coeffs has odd length 2*M_V+1, index 0 holds m = -M_V.
  explicit PeriodicPotential(std::vector<cd> coeffs);

  int max_index() const { return static_cast<int>(coeffs_.size() / 2); }
  cd coeff(int m) const {
    int mv = max_index();
    return (m < -mv || m > mv) ? cd{} : coeffs_[m + mv];
  }
  const std::vector<cd>& coeffs() const { return coeffs_; }
  double operator()(double z) const;
  bool is_zero() const;

 private:
  std::vector<cd> coeffs_;
};

PeriodicPotential make_cosine(double amplitude, int harmonics);

// Drops trailing coefficients below floor * max|V_m| so that M_V reflects the
// actual decay. Throws InvalidConfig if V_{-m} != conj(V_m) beyond tol.
PeriodicPotential make_from_coeffs(const std::vector<cd>& coeffs, double floor = 1e-15,
                                   double tol = 1e-12);

double evaluate_periodic(const PeriodicPotential& V, double z);

struct EllipticParams {
  double omega_prime = 0.8;  // omega_3 = i omega'
  int m = 1;                 // gap count
  double g2 = 0.0;
  double g3 = 0.0;
};

// Fills g2, g3 from Eisenstein sums over the lattice Z + 2i omega' Z.
EllipticParams make_elliptic(int m, double omega_prime);

// Weierstrass p for half periods (1/2, i omega'). Rows of the lattice sum are
// summed in closed form and rows are added until they fall below 1e-17.
cd weierstrass_p(cd z, const EllipticParams& params);
cd weierstrass_p_prime(cd z, const EllipticParams& params);

// Raw lattice sum over |m|,|n| <= N with Richardson extrapolation in N, used as
// an independent cross-check of weierstrass_p.
cd weierstrass_p_lattice(cd z, const EllipticParams& params, int N);

// Truncated Eisenstein sums G4, G6 over the square |m|,|n| <= N.
std::pair<double, double> eisenstein_lattice(const EllipticParams& params, int N);

struct MGapOptions {
  int samples = 4096;
  int max_index = 64;
  double floor = 1e-15;
};

PeriodicPotential make_m_gap(const EllipticParams& params, const MGapOptions& opt = {});

// Smooth external potential with closed-form derivatives.
struct ExternalPotential {
  enum class Kind { Zero, Linear, Cosine, Harmonic };
  Kind kind = Kind::Zero;
  double alpha = 0.0;   // Linear: W = -alpha q
  double beta = 0.0;    // Cosine: W = beta cos(omega q)
  double omega = 1.0;   // Cosine frequency / Harmonic stiffness
  double center = 0.0;  // Harmonic: W = omega/2 (q - center)^2

  static ExternalPotential zero() { return {}; }
  static ExternalPotential linear(double alpha);
  static ExternalPotential cosine(double beta, double omega);
  static ExternalPotential harmonic(double stiffness, double center);

  double W(double q) const;
  double dW(double q) const;
  double d2W(double q) const;
  double d3W(double q) const;

  // Largest sampled |W^(k)|, k <= 3, on [a, b].
  double derivative_bound(double a, double b, int samples = 1001) const;
  std::string describe() const;
};

// W blended to a constant inside collars of width `collar` at both ends of
// [0, L] so that it is smooth and L-periodic. Equals W on [collar, L - collar].
class PeriodizedW {
 public:
  PeriodizedW(ExternalPotential W, double L, double collar);
  double operator()(double x) const;
  double collar() const { return collar_; }
  double L() const { return L_; }
  const ExternalPotential& base() const { return W_; }

 private:
  ExternalPotential W_;
  double L_;
  double collar_;
  double w_ref_;
};

}  // namespace bcl

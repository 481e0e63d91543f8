#pragma once

#include <vector>

#include "bcl/bloch.hpp"

namespace bcl {

// Which band a trajectory follows: a raw ordered band E_n, or one of the smooth
// continuations E_+ / E_- of the pair (n, n+1) crossing at p_star.
struct BranchSpec {
  enum class Kind { Raw, Plus, Minus };
  Kind kind = Kind::Raw;
  int n = 1;
  double p_star = 0.0;

  static BranchSpec raw(int n) { return {Kind::Raw, n, 0.0}; }
  static BranchSpec plus(int n, double p_star) { return {Kind::Plus, n, p_star}; }
  static BranchSpec minus(int n, double p_star) { return {Kind::Minus, n, p_star}; }
  bool smooth() const { return kind != Kind::Raw; }
  // 0-based eigen-index followed at p (smooth branches swap at p_star).
  int index_at(double p) const;
  std::string label() const;
};

// Band energy, derivatives, and adiabatic-gauge eigenvectors of one branch on
// [p_lo, p_hi]. Derivatives come from perturbation sums at nodes spaced h apart
// and are interpolated between nodes; eigenvectors are recomputed at the query
// point and phase-aligned to the nearest node. The gauge is anchored at p_star
// for smooth branches (degenerate basis) and at the window centre otherwise.
class BandInterpolant {
 public:
  BandInterpolant(const PeriodicPotential& V, int M, BranchSpec branch, double p_lo, double p_hi, double h = 2e-3);

  const BranchSpec& branch() const { return branch_; }
  double p_lo() const { return p_lo_; }
  double p_hi() const { return p_hi_; }
  int modes() const { return M_; }
  const PeriodicPotential& potential() const { return V_; }

  double E(double p) const;
  double d1(double p) const;
  double d2(double p) const;
  double d3(double p) const;
  BandDerivs derivs(double p) const;

  VecC chi(double p) const;
  VecC dp_chi(double p) const;
  // Both at once, sharing one eigensolve.
  std::pair<VecC, VecC> chi_and_derivative(double p) const;

  // Smooth branches only: the degenerate-basis data at p_star.
  const DegenerateBasis& crossing_basis() const { return basis_; }
  cd coupling() const { return coupling_; }

 private:
  int locate(double p) const;
  void check(double p) const;

  PeriodicPotential V_;
  int M_;
  BranchSpec branch_;
  double p_lo_, p_hi_, h_, p0_;
  std::vector<double> nodes_;
  std::vector<BandDerivs> d_;
  std::vector<VecC> chi_;  // adiabatic gauge at the nodes
  DegenerateBasis basis_;
  VecC dchi_plus_star_, dchi_minus_star_;
  cd coupling_{};
};

}  // namespace bcl

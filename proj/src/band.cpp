#include "bcl/band.hpp"

#include <algorithm>
#include <cmath>

#include "bcl/parallel.hpp"

namespace bcl {

int BranchSpec::index_at(double p) const {
  switch (kind) {
    case Kind::Raw: return n - 1;
    case Kind::Plus: return p < p_star ? n - 1 : n;
    case Kind::Minus: return p < p_star ? n : n - 1;
  }
  return n - 1;
}

std::string BranchSpec::label() const {
  switch (kind) {
    case Kind::Raw: return "E" + std::to_string(n);
    case Kind::Plus: return "plus";
    case Kind::Minus: return "minus";
  }
  return "";
}

namespace {

void canonical_phase(VecC& v) {
  Eigen::Index imax;
  v.cwiseAbs().maxCoeff(&imax);
  v *= std::conj(v[imax]) / std::abs(v[imax]);
}

cd align_factor(const VecC& ref, const VecC& v) {
  cd ov = inner(ref, v);
  if (std::abs(ov) < 0.5) throw Error(ErrorCode::OverlapCollapse, "eigenvector overlap " + std::to_string(std::abs(ov)));
  return std::conj(ov) / std::abs(ov);
}

double hermite(double x0, double h, double f0, double f1, double g0, double g1, double x) {
  double t = (x - x0) / h;
  double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * g0 + (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * h * g1;
}

}  // namespace

BandInterpolant::BandInterpolant(const PeriodicPotential& V, int M, BranchSpec branch, double p_lo, double p_hi,
                                 double h)
    : V_(V), M_(M), branch_(branch), p_lo_(p_lo), p_hi_(p_hi), h_(h) {
  if (!(p_hi > p_lo) || h <= 0) throw Error(ErrorCode::InvalidConfig, "empty band window");
  const bool smooth = branch.smooth();
  double off = smooth ? 0.5 : 0.0;
  p0_ = smooth ? branch.p_star : 0.5 * (p_lo + p_hi);
  if (smooth && (branch.p_star < p_lo || branch.p_star > p_hi))
    throw Error(ErrorCode::InvalidConfig, "window does not contain p_star");
  int k_lo = static_cast<int>(std::floor((p_lo - p0_) / h - off)) - 2;
  int k_hi = static_cast<int>(std::ceil((p_hi - p0_) / h - off)) + 2;
  int count = k_hi - k_lo + 1;
  nodes_.resize(count);
  for (int k = 0; k < count; ++k) nodes_[k] = p0_ + (k_lo + k + off) * h;
  d_.resize(count);
  chi_.resize(count);
  std::vector<double> iso(count);

  parallel_for(count, [&](int k) {
    double p = nodes_[k];
    Spectrum s = full_spectrum(V_, p, M_);
    int idx = branch_.index_at(p);
    d_[k] = band_derivs(s, idx);
    chi_[k] = s.U.col(idx);
    // distance of the followed band (pair for smooth branches) to the rest
    int lo = smooth ? branch_.n - 1 : idx, hi = smooth ? branch_.n : idx;
    double g = s.E[hi + 1] - s.E[hi];
    if (lo > 0) g = std::min(g, s.E[lo] - s.E[lo - 1]);
    if (smooth) g = std::min(g, s.E[hi] - s.E[lo]);
    iso[k] = g;
  });
  for (int k = 0; k < count; ++k)
    if (iso[k] <= 1e-8)
      throw Error(ErrorCode::IsolationFailure, "branch " + branch_.label() + " not isolated at p=" +
                                                   std::to_string(nodes_[k]));

  int a = smooth ? -k_lo - 1 : (count - 1) / 2;  // anchor node (left of p_star for smooth)
  if (smooth) {
    Spectrum s0 = full_spectrum(V_, branch_.p_star, M_);
    basis_ = degenerate_basis(s0, branch_.n - 1);
    CrossingDerivative cp = crossing_derivative(s0, basis_);
    coupling_ = cp.coupling;
    dchi_plus_star_ = cp.regular + cp.coupling * basis_.chi_minus;
    DegenerateBasis sw{basis_.chi_plus, basis_.chi_minus, basis_.slope_plus, basis_.slope_minus, basis_.idx};
    CrossingDerivative cm = crossing_derivative(s0, sw);
    dchi_minus_star_ = cm.regular + cm.coupling * basis_.chi_plus;
    const VecC& star = branch_.kind == BranchSpec::Kind::Plus ? basis_.chi_plus : basis_.chi_minus;
    chi_[a] *= align_factor(star, chi_[a]);
    chi_[a + 1] *= align_factor(star, chi_[a + 1]);
    for (int k = a + 2; k < count; ++k) chi_[k] *= align_factor(chi_[k - 1], chi_[k]);
  } else {
    canonical_phase(chi_[a]);
    for (int k = a + 1; k < count; ++k) chi_[k] *= align_factor(chi_[k - 1], chi_[k]);
  }
  for (int k = a - 1; k >= 0; --k) chi_[k] *= align_factor(chi_[k + 1], chi_[k]);
}

void BandInterpolant::check(double p) const {
  if (p < p_lo_ - 1e-12 || p > p_hi_ + 1e-12)
    throw Error(ErrorCode::LeftBrillouinWindow, "p=" + std::to_string(p) + " outside [" + std::to_string(p_lo_) +
                                                    ", " + std::to_string(p_hi_) + "] for " + branch_.label());
}

int BandInterpolant::locate(double p) const {
  check(p);
  int k = static_cast<int>(std::floor((p - nodes_.front()) / h_));
  return std::clamp(k, 1, static_cast<int>(nodes_.size()) - 3);
}

double BandInterpolant::E(double p) const {
  int k = locate(p);
  return hermite(nodes_[k], h_, d_[k].E, d_[k + 1].E, d_[k].d1, d_[k + 1].d1, p);
}
double BandInterpolant::d1(double p) const {
  int k = locate(p);
  return hermite(nodes_[k], h_, d_[k].d1, d_[k + 1].d1, d_[k].d2, d_[k + 1].d2, p);
}
double BandInterpolant::d2(double p) const {
  int k = locate(p);
  return hermite(nodes_[k], h_, d_[k].d2, d_[k + 1].d2, d_[k].d3, d_[k + 1].d3, p);
}
double BandInterpolant::d3(double p) const {
  int k = locate(p);
  double t = (p - nodes_[k]) / h_;
  // cubic Lagrange through nodes k-1..k+2
  double l0 = -t * (t - 1) * (t - 2) / 6, l1 = (t + 1) * (t - 1) * (t - 2) / 2;
  double l2 = -(t + 1) * t * (t - 2) / 2, l3 = (t + 1) * t * (t - 1) / 6;
  return l0 * d_[k - 1].d3 + l1 * d_[k].d3 + l2 * d_[k + 1].d3 + l3 * d_[k + 2].d3;
}
BandDerivs BandInterpolant::derivs(double p) const { return {E(p), d1(p), d2(p), d3(p)}; }

std::pair<VecC, VecC> BandInterpolant::chi_and_derivative(double p) const {
  check(p);
  if (branch_.smooth() && std::abs(p - branch_.p_star) < 1e-5) {
    bool plus = branch_.kind == BranchSpec::Kind::Plus;
    const VecC& c0 = plus ? basis_.chi_plus : basis_.chi_minus;
    const VecC& dc = plus ? dchi_plus_star_ : dchi_minus_star_;
    VecC c = c0 + (p - branch_.p_star) * dc;
    c.normalize();
    return {c, dc};
  }
  Spectrum s = full_spectrum(V_, p, M_);
  int idx = branch_.index_at(p);
  VecC c = s.U.col(idx);
  VecC dc = bcl::dp_chi(s, idx);
  int k = static_cast<int>(std::lround((p - nodes_.front()) / h_));
  k = std::clamp(k, 0, static_cast<int>(nodes_.size()) - 1);
  cd f = align_factor(chi_[k], c);
  return {c * f, dc * f};
}

VecC BandInterpolant::chi(double p) const { return chi_and_derivative(p).first; }
VecC BandInterpolant::dp_chi(double p) const { return chi_and_derivative(p).second; }

}  // namespace bcl

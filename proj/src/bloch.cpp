#include "bcl/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace bcl {

BlochMatrix assemble(const PeriodicPotential& V, double p, int M) {
  int mv = V.max_index();
  if (M < mv) throw Error(ErrorCode::TruncationTooSmall, "M=" + std::to_string(M) + " < M_V=" + std::to_string(mv));
  int n = 2 * M + 1;
  BlochMatrix b;
  b.p = p;
  b.M = M;
  b.H = MatC::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    int m = i - M;
    double k = p + kTwoPi * m;
    b.H(i, i) = 0.5 * k * k + V.coeff(0).real();
    for (int d = 1; d <= mv && i - d >= 0; ++d) {
      cd c = V.coeff(d);
      if (c == cd{}) continue;
      // row m, column m - d carries V_{d}; its mirror carries conj
      b.H(i, i - d) = c;
      b.H(i - d, i) = std::conj(c);
    }
  }
  return b;
}

namespace {
Eigen::SelfAdjointEigenSolver<MatC> solve(const MatC& H) {
  Eigen::SelfAdjointEigenSolver<MatC> es(H);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::ConvergenceFailure, "Hermitian eigensolver did not converge");
  return es;
}
}  // namespace

std::vector<BlochMode> eigensolve(const BlochMatrix& H, int n_max) {
  int n = static_cast<int>(H.H.rows());
  if (n_max > n) throw Error(ErrorCode::InvalidConfig, "n_max exceeds matrix size");
  auto es = solve(H.H);
  std::vector<BlochMode> out(n_max);
  for (int j = 0; j < n_max; ++j) {
    out[j].n = j + 1;
    out[j].p = H.p;
    out[j].E = es.eigenvalues()[j];
    out[j].c = es.eigenvectors().col(j);
  }
  return out;
}

Spectrum full_spectrum(const PeriodicPotential& V, double p, int M) {
  auto b = assemble(V, p, M);
  auto es = solve(b.H);
  Spectrum s;
  s.p = p;
  s.M = M;
  s.E = es.eigenvalues();
  s.U = es.eigenvectors();
  s.D.resize(2 * M + 1);
  for (int i = 0; i <= 2 * M; ++i) s.D[i] = p + kTwoPi * (i - M);
  return s;
}

VecR band_energies(const PeriodicPotential& V, double p, int M, int count) {
  auto b = assemble(V, p, M);
  Eigen::SelfAdjointEigenSolver<MatC> es(b.H, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::ConvergenceFailure, "Hermitian eigensolver did not converge");
  return es.eigenvalues().head(count);
}

VecC chi_on_grid(const VecC& c, int n) {
  int M = static_cast<int>(c.size() / 2);
  VecC out(n);
  for (int j = 0; j < n; ++j) {
    double z = double(j) / n;
    cd s{};
    for (int i = 0; i < c.size(); ++i) s += c[i] * std::polar(1.0, kTwoPi * (i - M) * z);
    out[j] = s;
  }
  return out;
}

std::vector<double> uniform_p_grid(int count) {
  if (count < 3 || count % 2 == 0) throw Error(ErrorCode::InvalidConfig, "p grid count must be odd and >= 3");
  std::vector<double> p(count);
  for (int i = 0; i < count; ++i) p[i] = kTwoPi * i / (count - 1);
  p[(count - 1) / 2] = kPi;
  return p;
}

BandStructure band_structure(const PeriodicPotential& V, const std::vector<double>& p_grid, int n_max, int M) {
  for (double p : p_grid)
    if (p < -1e-12 || p > kTwoPi + 1e-12) throw Error(ErrorCode::InvalidConfig, "p grid must lie in [0, 2pi]");
  BandStructure bs;
  bs.V = V;
  bs.M = M;
  bs.n_max = n_max;
  bs.p = p_grid;
  int np = static_cast<int>(p_grid.size());
  bs.E.resize(np, n_max + 1);
  bs.G.resize(np, n_max);
  bs.modes.resize(np);
  for (int i = 0; i < np; ++i) {
    auto b = assemble(V, p_grid[i], M);
    auto es = solve(b.H);
    for (int j = 0; j <= n_max; ++j) bs.E(i, j) = es.eigenvalues()[j];
    bs.modes[i].resize(n_max);
    for (int j = 0; j < n_max; ++j) {
      bs.modes[i][j] = BlochMode{j + 1, p_grid[i], es.eigenvalues()[j], es.eigenvectors().col(j)};
      double g = bs.E(i, j + 1) - bs.E(i, j);
      if (j > 0) g = std::min(g, bs.E(i, j) - bs.E(i, j - 1));
      bs.G(i, j) = std::abs(g);
    }
  }
  return bs;
}

double gap(const BandStructure& bs, int n, double p) {
  for (size_t i = 0; i < bs.p.size(); ++i)
    if (std::abs(bs.p[i] - p) < 1e-12) return bs.G(static_cast<int>(i), n - 1);
  throw Error(ErrorCode::InvalidConfig, "p not on band-structure grid");
}

std::vector<Crossing> detect_crossings(const BandStructure& bs, double tol) {
  std::vector<Crossing> out;
  int np = static_cast<int>(bs.p.size());
  bool closed = std::abs(bs.p.back() - bs.p.front() - kTwoPi) < 1e-12;
  int nuniq = closed ? np - 1 : np;
  double dp = kTwoPi / std::max(1, np - 1);
  for (int n = 1; n <= bs.n_max; ++n) {
    auto pair_gap = [&](double p) {
      auto e = band_energies(bs.V, p, bs.M, n + 1);
      return e[n] - e[n - 1];
    };
    for (int i = 0; i < nuniq; ++i) {
      auto gi = [&](int k) {
        k = ((k % nuniq) + nuniq) % nuniq;
        return bs.E(k, n) - bs.E(k, n - 1);
      };
      double g = gi(i);
      if (!(g <= gi(i - 1) && g < gi(i + 1))) continue;
      // golden-section refinement of the pair gap on [p_i - dp, p_i + dp]
      double a = bs.p[i] - dp, b = bs.p[i] + dp;
      const double r = (std::sqrt(5.0) - 1.0) / 2.0;
      double x1 = b - r * (b - a), x2 = a + r * (b - a);
      double f1 = pair_gap(x1), f2 = pair_gap(x2);
      while (b - a > 1e-12) {
        if (f1 < f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - r * (b - a);
          f1 = pair_gap(x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + r * (b - a);
          f2 = pair_gap(x2);
        }
      }
      double ps = 0.5 * (a + b);
      double gmin = pair_gap(ps);
      if (gmin >= tol) continue;
      double pw = std::fmod(ps + kTwoPi, kTwoPi);
      double dist = std::min({std::abs(pw), std::abs(pw - kPi), std::abs(pw - kTwoPi)});
      if (dist > dp)
        throw Error(ErrorCode::CrossingOffLattice,
                    "band pair " + std::to_string(n) + " degenerate at p=" + std::to_string(pw));
      if (std::abs(pw - kTwoPi) < dp) pw -= kTwoPi;
      bool dup = false;
      for (auto& c : out)
        if (c.n == n && std::abs(c.p_star - pw) < 1e-6) dup = true;
      if (!dup) out.push_back({n, pw, gmin});
    }
  }
  return out;
}

BandDerivs band_derivs(const Spectrum& s, int idx) {
  const VecC chi = s.U.col(idx);
  double E0 = s.E[idx];
  VecC Dchi = s.D.cwiseProduct(chi);
  double d1 = inner(chi, Dchi).real();
  VecC v = s.U.adjoint() * Dchi;
  v[idx] = 0.0;
  VecC ue(v.size());
  for (int k = 0; k < v.size(); ++k) {
    if (k == idx) {
      ue[k] = 0.0;
      continue;
    }
    double dE = s.E[k] - E0;
    if (std::abs(dE) < 1e-12) throw Error(ErrorCode::SingularResolvent, "degenerate eigenvalue in band_derivs");
    ue[k] = v[k] / dE;
  }
  double e2 = -ue.dot(v).real();  // -sum |v_k|^2 / (E_k - E0)
  VecC u = s.U * ue;
  double e3 = (u.dot(s.D.cwiseProduct(u))).real() - d1 * u.squaredNorm();
  return {E0, d1, 1.0 + 2.0 * e2, 6.0 * e3};
}

VecC reduced_resolvent_apply(const Spectrum& s, double E_sigma, const std::vector<int>& exclude, const VecC& f,
                             double min_gap) {
  VecC fe = s.U.adjoint() * f;
  for (int k = 0; k < fe.size(); ++k) {
    if (std::find(exclude.begin(), exclude.end(), k) != exclude.end()) {
      fe[k] = 0.0;
      continue;
    }
    double dE = s.E[k] - E_sigma;
    if (std::abs(dE) < min_gap) throw Error(ErrorCode::SingularResolvent, "complement gap below threshold");
    fe[k] /= dE;
  }
  return s.U * fe;
}

VecC dp_chi(const Spectrum& s, int idx) {
  VecC chi = s.U.col(idx);
  double d1 = inner(chi, s.D.cwiseProduct(chi)).real();
  VecC f = s.D.cwiseProduct(chi) - d1 * chi;
  return -reduced_resolvent_apply(s, s.E[idx], {idx}, f);
}

VecC dp_chi(const PeriodicPotential& V, const BlochMode& mode, int M) {
  Spectrum s = full_spectrum(V, mode.p, M);
  int idx = mode.n - 1;
  const VecC& chi = mode.c;
  double d1 = inner(chi, s.D.cwiseProduct(chi)).real();
  VecC f = s.D.cwiseProduct(chi) - d1 * chi;
  return -reduced_resolvent_apply(s, mode.E, {idx}, f);
}

ModePath fix_gauge(ModePath path) {
  for (size_t k = 0; k + 1 < path.chi.size(); ++k) {
    cd ov = inner(path.chi[k], path.chi[k + 1]);
    if (std::abs(ov) < 0.5)
      throw Error(ErrorCode::OverlapCollapse, "overlap " + std::to_string(std::abs(ov)) + " at p=" +
                                                  std::to_string(path.p[k + 1]));
    path.chi[k + 1] *= std::conj(ov) / std::abs(ov);
  }
  return path;
}

std::vector<double> berry_connection(const ModePath& path) {
  std::vector<double> A;
  for (size_t k = 0; k + 1 < path.chi.size(); ++k) {
    cd ov = inner(path.chi[k], path.chi[k + 1]);
    A.push_back(-std::arg(ov) / (path.p[k + 1] - path.p[k]));
  }
  return A;
}

namespace {
void normalize_phase(VecC& v) {
  Eigen::Index imax;
  v.cwiseAbs().maxCoeff(&imax);
  v *= std::conj(v[imax]) / std::abs(v[imax]);
}
}  // namespace

DegenerateBasis degenerate_basis(const Spectrum& s, int idx) {
  MatC Us = s.U.middleCols(idx, 2);
  MatC B = Us.adjoint() * s.D.asDiagonal() * Us;
  B = 0.5 * (B + B.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<MatC> es(B);
  DegenerateBasis d;
  d.idx = idx;
  d.slope_minus = es.eigenvalues()[0];
  d.slope_plus = es.eigenvalues()[1];
  d.chi_minus = Us * es.eigenvectors().col(0);
  d.chi_plus = Us * es.eigenvectors().col(1);
  normalize_phase(d.chi_minus);
  normalize_phase(d.chi_plus);
  return d;
}

CrossingDerivative crossing_derivative(const Spectrum& s, const DegenerateBasis& b) {
  double E0 = 0.5 * (s.E[b.idx] + s.E[b.idx + 1]);
  VecC f = s.D.cwiseProduct(b.chi_plus);
  // P-perp removes both resonant directions
  f -= b.chi_plus * inner(b.chi_plus, f);
  f -= b.chi_minus * inner(b.chi_minus, f);
  CrossingDerivative cdv;
  cdv.regular = -reduced_resolvent_apply(s, E0, {b.idx, b.idx + 1}, f);
  cdv.coupling = inner(b.chi_minus, s.D.cwiseProduct(cdv.regular)) / (b.slope_plus - b.slope_minus);
  return cdv;
}

SmoothBandPair smooth_continuation(const BandStructure& bs, int n, double p_star, double U_halfwidth, int samples) {
  if (samples < 5 || samples % 2 == 0) throw Error(ErrorCode::InvalidConfig, "samples must be odd and >= 5");
  const int idx = n - 1;
  Spectrum s0 = full_spectrum(bs.V, p_star, bs.M);
  if (std::abs(s0.E[idx + 1] - s0.E[idx]) > 1e-6)
    throw Error(ErrorCode::NotLinearCrossing, "bands " + std::to_string(n) + "," + std::to_string(n + 1) +
                                                  " not degenerate at p*");
  DegenerateBasis db = degenerate_basis(s0, idx);
  if (db.slope_plus < 1e-6 || db.slope_minus > -1e-6)
    throw Error(ErrorCode::NotLinearCrossing, "slopes at p* are not of opposite sign");

  SmoothBandPair sp;
  sp.V = bs.V;
  sp.M = bs.M;
  sp.n = n;
  sp.p_star = p_star;
  sp.slope_plus = db.slope_plus;
  sp.slope_minus = db.slope_minus;
  sp.chi_plus_star = db.chi_plus;
  sp.chi_minus_star = db.chi_minus;
  auto cdv = crossing_derivative(s0, db);
  sp.dp_chi_plus_regular = cdv.regular;
  sp.coupling = cdv.coupling;

  double w = U_halfwidth;
  const int mid = (samples - 1) / 2;
  for (int attempt = 0; attempt < 8; ++attempt, w *= 0.5) {
    sp.halfwidth = w;
    sp.p.assign(samples, 0.0);
    sp.E_plus.assign(samples, 0.0);
    sp.E_minus.assign(samples, 0.0);
    ModePath cp, cm;
    double mgap = std::numeric_limits<double>::infinity();
    bool second_crossing = false;
    for (int k = 0; k < samples; ++k) {
      double p = p_star + w * (2.0 * k / (samples - 1) - 1.0);
      if (k == mid) p = p_star;
      sp.p[k] = p;
      Spectrum s = (k == mid) ? s0 : full_spectrum(bs.V, p, bs.M);
      int ip = (k < mid) ? idx : idx + 1;
      int im = (k < mid) ? idx + 1 : idx;
      sp.E_plus[k] = s.E[ip];
      sp.E_minus[k] = s.E[im];
      if (k == mid) {
        cp.chi.push_back(db.chi_plus);
        cm.chi.push_back(db.chi_minus);
      } else {
        cp.chi.push_back(s.U.col(ip));
        cm.chi.push_back(s.U.col(im));
        if (s.E[idx + 1] - s.E[idx] < 1e-8) second_crossing = true;
      }
      cp.p.push_back(p);
      cm.p.push_back(p);
      double lo = s.E[idx], hi = s.E[idx + 1];
      double g = s.E[idx + 2] - hi;
      if (idx > 0) g = std::min(g, lo - s.E[idx - 1]);
      mgap = std::min(mgap, g);
    }
    if (second_crossing || mgap <= 1e-8) continue;
    sp.M_gap = mgap;
    // align the whole path so the middle node is exactly the degenerate basis vector
    auto anchor = [&](ModePath path, const VecC& star) {
      path = fix_gauge(std::move(path));
      cd ph = inner(path.chi[mid], star);
      ph /= std::abs(ph);
      for (auto& c : path.chi) c *= ph;
      path.chi[mid] = star;
      return path;
    };
    sp.chi_plus = anchor(std::move(cp), db.chi_plus);
    sp.chi_minus = anchor(std::move(cm), db.chi_minus);
    // one-sided second-order divided differences must agree with the exact slope
    double h = sp.p[mid + 1] - sp.p[mid];
    double left = (3 * sp.E_plus[mid] - 4 * sp.E_plus[mid - 1] + sp.E_plus[mid - 2]) / (2 * h);
    double right = (-3 * sp.E_plus[mid] + 4 * sp.E_plus[mid + 1] - sp.E_plus[mid + 2]) / (2 * h);
    double tolr = 1e-2 * std::max(1.0, std::abs(sp.slope_plus));
    if (std::abs(left - sp.slope_plus) > tolr || std::abs(right - sp.slope_plus) > tolr)
      throw Error(ErrorCode::NotLinearCrossing, "one-sided slopes of E+ disagree across p*");
    return sp;
  }
  throw Error(ErrorCode::IsolationFailure, "pair not isolated on any U around p*");
}

cd coupling_coefficient(const SmoothBandPair& pair) { return pair.coupling; }

double verify_symmetry_identity(const SmoothBandPair& pair) {
  const VecC& cp = pair.chi_plus_star;
  const VecC& cm = pair.chi_minus_star;
  int M = static_cast<int>(cp.size() / 2);
  VecC t = VecC::Zero(cp.size());
  for (int k = -M; k <= M; ++k) {
    int src = -k - 1;
    if (src >= -M && src <= M) t[k + M] = std::conj(cp[src + M]);
  }
  cd ov = inner(t, cm);
  cd ph = ov / std::abs(ov);
  return (cm - ph * t).norm();
}

double third_difference_max(const std::vector<double>& f, double h) {
  int n = static_cast<int>(f.size());
  int mid = (n - 1) / 2;
  double m = 0.0;
  for (int k = std::max(0, mid - 3); k <= std::min(n - 4, mid); ++k) {
    double d3 = f[k + 3] - 3 * f[k + 2] + 3 * f[k + 1] - f[k];
    m = std::max(m, std::abs(d3) / (h * h * h));
  }
  return m;
}

}  // namespace bcl

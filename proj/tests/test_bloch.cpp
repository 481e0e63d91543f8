#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "bcl/bloch.hpp"

using namespace bcl;

namespace {

// Sorted free energies 1/2 (p + 2 pi m)^2.
std::vector<double> free_levels(double p, int count) {
  std::vector<double> e;
  for (int m = -20; m <= 20; ++m) e.push_back(0.5 * (p + kTwoPi * m) * (p + kTwoPi * m));
  std::sort(e.begin(), e.end());
  e.resize(count);
  return e;
}

double residual(const BlochMatrix& H, const BlochMode& m) { return (H.H * m.c - m.E * m.c).norm(); }

}  // namespace

TEST_CASE("assemble: free and cosine matrices") {
  BlochMatrix H0 = assemble(PeriodicPotential(), 0.0, 8);
  CHECK(H0.H.rows() == 17);
  for (int m = -8; m <= 8; ++m)
    CHECK(std::abs(H0.H(m + 8, m + 8) - 0.5 * std::pow(kTwoPi * m, 2)) < 1e-12);
  CHECK((H0.H - MatC(H0.H.diagonal().asDiagonal())).norm() == 0.0);

  BlochMatrix H1 = assemble(make_cosine(4.0, 1), 0.7, 8);
  CHECK((H1.H - H1.H.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
  for (int m = 0; m < 16; ++m) {
    CHECK(std::abs(H1.H(m, m + 1) - cd(2.0, 0.0)) < 1e-14);
    CHECK(std::abs(H1.H(m + 1, m) - cd(2.0, 0.0)) < 1e-14);
  }
  CHECK(std::abs(H1.H(0, 2)) == 0.0);

  PeriodicPotential big = make_m_gap(make_elliptic(1, 0.3));
  try {
    assemble(big, 0.0, big.max_index() - 1);
    FAIL("expected TruncationTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TruncationTooSmall);
  }
}

TEST_CASE("eigensolve: free folded parabola") {
  auto m = eigensolve(assemble(PeriodicPotential(), kPi, 16), 4);
  CHECK(m[0].E == doctest::Approx(kPi * kPi / 2).epsilon(1e-13));
  CHECK(m[1].E == doctest::Approx(kPi * kPi / 2).epsilon(1e-13));
  CHECK(m[2].E == doctest::Approx(9 * kPi * kPi / 2).epsilon(1e-13));
  CHECK(m[3].E == doctest::Approx(9 * kPi * kPi / 2).epsilon(1e-13));
  auto h = eigensolve(assemble(PeriodicPotential(), kPi / 2, 16), 2);
  CHECK(h[0].E == doctest::Approx(kPi * kPi / 8).epsilon(1e-13));
  CHECK(h[1].E == doctest::Approx(9 * kPi * kPi / 8).epsilon(1e-13));
}

TEST_CASE("eigensolve: residual, orthonormality, ordering") {
  BlochMatrix H = assemble(make_cosine(4.0, 1), kPi, 32);
  auto modes = eigensolve(H, 8);
  REQUIRE(modes.size() == 8);
  CHECK(modes[1].E - modes[0].E > 0.1);  // gap open at pi
  for (size_t i = 0; i < modes.size(); ++i) {
    CHECK(modes[i].n == static_cast<int>(i) + 1);
    CHECK(residual(H, modes[i]) < 1e-10);
    if (i) CHECK(modes[i].E >= modes[i - 1].E);
    for (size_t j = 0; j < modes.size(); ++j)
      CHECK(std::abs(modes[i].c.dot(modes[j].c) - (i == j ? 1.0 : 0.0)) < 1e-11);
  }
}

TEST_CASE("truncation convergence") {
  for (const auto& V : {make_cosine(4.0, 1), make_m_gap(make_elliptic(1, 0.8))}) {
    VecR a = band_energies(V, 1.1, 32, 8), b = band_energies(V, 1.1, 64, 8);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("band structure and gap of the free particle") {
  auto grid = uniform_p_grid(65);
  CHECK(grid.size() == 65);
  CHECK(grid[32] == doctest::Approx(kPi).epsilon(1e-15));
  BandStructure bs = band_structure(PeriodicPotential(), grid, 8, 16);
  for (size_t i = 0; i < grid.size(); ++i) {
    auto ref = free_levels(grid[i], 8);
    for (int n = 0; n < 8; ++n) CHECK(std::abs(bs.E(i, n) - ref[n]) < 1e-12);
  }
  CHECK(std::abs(gap(bs, 1, kPi)) < 1e-12);
  BandStructure q = band_structure(PeriodicPotential(), {kPi / 2}, 3, 16);
  CHECK(gap(q, 1, kPi / 2) == doctest::Approx(kPi * kPi).epsilon(1e-12));
  CHECK_THROWS_AS(uniform_p_grid(64), Error);
}

TEST_CASE("crossing detection") {
  auto grid = uniform_p_grid(65);
  SUBCASE("free particle: every pair at 0 or pi") {
    auto cs = detect_crossings(band_structure(PeriodicPotential(), grid, 6, 16));
    CHECK(cs.size() >= 5);
    for (const auto& c : cs) {
      double target = (c.n % 2 == 1) ? kPi : 0.0;
      CHECK(std::abs(c.p_star - target) < 1e-6);
    }
  }
  SUBCASE("one-gap potential: all n >= 2, none for n = 1") {
    auto cs = detect_crossings(band_structure(make_m_gap(make_elliptic(1, 0.8)), grid, 5, 48));
    std::vector<int> ns;
    for (const auto& c : cs) {
      ns.push_back(c.n);
      CHECK(std::min(std::abs(c.p_star), std::abs(c.p_star - kPi)) < 1e-6);
    }
    CHECK(std::find(ns.begin(), ns.end(), 1) == ns.end());
    for (int n : {2, 3, 4}) CHECK(std::find(ns.begin(), ns.end(), n) != ns.end());
  }
  SUBCASE("cosine potential: both lowest bands isolated") {
    auto cs = detect_crossings(band_structure(make_cosine(4.0, 1), grid, 3, 32), 1e-6);
    for (const auto& c : cs) CHECK(c.n > 2);
  }
}

TEST_CASE("smooth continuation of the free pair at pi") {
  BandStructure bs = band_structure(PeriodicPotential(), uniform_p_grid(65), 4, 16);
  SmoothBandPair pr = smooth_continuation(bs, 1, kPi, 0.5, 41);
  CHECK(pr.slope_plus == doctest::Approx(kPi).epsilon(1e-6));
  CHECK(pr.slope_minus == doctest::Approx(-kPi).epsilon(1e-6));
  for (size_t k = 0; k < pr.p.size(); ++k) {
    CHECK(std::abs(pr.E_plus[k] - 0.5 * pr.p[k] * pr.p[k]) < 1e-10);
    CHECK(std::abs(pr.E_minus[k] - 0.5 * std::pow(pr.p[k] - kTwoPi, 2)) < 1e-10);
  }
  CHECK(std::abs(coupling_coefficient(pr)) < 1e-12);
  CHECK(verify_symmetry_identity(pr) < 1e-12);
  CHECK(pr.M_gap > 0);

  // smooth branch vs the kinked ordered band
  double h = pr.p[1] - pr.p[0];
  std::vector<double> raw(pr.p.size());
  for (size_t k = 0; k < pr.p.size(); ++k) raw[k] = std::min(pr.E_plus[k], pr.E_minus[k]);
  CHECK(third_difference_max(pr.E_plus, h) < 1e-3);
  CHECK(third_difference_max(raw, h) > 10.0);
}

TEST_CASE("coupling at trivial and nontrivial crossings") {
  auto grid = uniform_p_grid(65);
  SUBCASE("half-periodic cosine") {
    BandStructure bs = band_structure(make_cosine(4.0, 2), grid, 4, 32);
    auto cs = detect_crossings(bs);
    REQUIRE(!cs.empty());
    for (const auto& c : cs) {
      SmoothBandPair pr = smooth_continuation(bs, c.n, c.p_star, 0.5, 21);
      CHECK(std::abs(coupling_coefficient(pr)) <= 1e-8);
      if (std::abs(c.p_star - kPi) < 1e-6) CHECK(verify_symmetry_identity(pr) <= 1e-8);
    }
  }
  SUBCASE("one-gap potential, pair (2,3) at 0 and (3,4) at pi") {
    BandStructure bs = band_structure(make_m_gap(make_elliptic(1, 0.8)), grid, 5, 64);
    SmoothBandPair p2 = smooth_continuation(bs, 2, 0.0, 0.5, 21);
    // regression constant from M = 128 (agrees with M = 64 to 1e-13)
    CHECK(std::abs(coupling_coefficient(p2)) == doctest::Approx(2.739008023837e-05).epsilon(1e-8));
    CHECK(p2.slope_plus > 0);
    CHECK(p2.slope_minus < 0);
    SmoothBandPair p3 = smooth_continuation(bs, 3, kPi, 0.5, 21);
    CHECK(verify_symmetry_identity(p3) <= 1e-6);
  }
}

TEST_CASE("coupling modulus is gauge invariant") {
  Spectrum s = full_spectrum(make_m_gap(make_elliptic(1, 0.8)), 0.0, 48);
  DegenerateBasis b = degenerate_basis(s, 1);
  double ref = std::abs(crossing_derivative(s, b).coupling);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ph(0, kTwoPi);
  for (int k = 0; k < 4; ++k) {
    DegenerateBasis r = b;
    r.chi_minus *= std::polar(1.0, ph(rng));
    r.chi_plus *= std::polar(1.0, ph(rng));
    CHECK(std::abs(std::abs(crossing_derivative(s, r).coupling) - ref) < 1e-10 * std::max(ref, 1e-10) + 1e-16);
  }
}

TEST_CASE("band derivatives match finite differences of eigenvalues") {
  PeriodicPotential V = make_cosine(4.0, 1);
  const double p = 1.1, h = 1e-3;
  BandDerivs d = band_derivs(full_spectrum(V, p, 32), 0);
  auto E = [&](double q) { return band_energies(V, q, 32, 1)[0]; };
  CHECK(d.E == doctest::Approx(E(p)).epsilon(1e-13));
  CHECK(std::abs(d.d1 - (E(p + h) - E(p - h)) / (2 * h)) < 1e-6);
  CHECK(std::abs(d.d2 - (E(p + h) - 2 * E(p) + E(p - h)) / (h * h)) < 1e-4);
  double h3 = 1e-2;
  double fd3 = (E(p + 2 * h3) - 2 * E(p + h3) + 2 * E(p - h3) - E(p - 2 * h3)) / (2 * h3 * h3 * h3);
  CHECK(std::abs(d.d3 - fd3) < 1e-2 * std::max(1.0, std::abs(fd3)));
}

TEST_CASE("dp_chi: identity, gauge, and finite-difference convergence") {
  PeriodicPotential V = make_cosine(4.0, 1);
  const int M = 32;
  const double p = 1.1;
  Spectrum s = full_spectrum(V, p, M);
  VecC chi = s.U.col(0), u = dp_chi(s, 0);
  BandDerivs d = band_derivs(s, 0);
  BlochMatrix H = assemble(V, p, M);
  VecC lhs = (H.H - d.E * MatC::Identity(H.H.rows(), H.H.cols())) * u;
  VecC rhs = -(s.D.array() - d.d1).matrix().cwiseProduct(chi);
  CHECK((lhs - rhs).norm() < 1e-9);
  CHECK(std::abs(chi.dot(u)) < 1e-10);

  // central differences of a gauge-fixed path converge at second order
  auto fd_err = [&](double h) {
    ModePath path;
    for (double q : {p - h, p, p + h}) {
      path.p.push_back(q);
      path.chi.push_back(full_spectrum(V, q, M).U.col(0));
    }
    path = fix_gauge(path);
    cd ph = path.chi[1].dot(chi);  // align with the reference gauge
    VecC fd = (path.chi[2] - path.chi[0]) / (2 * h) * (ph / std::abs(ph));
    return (fd - u).norm();
  };
  double e1 = fd_err(2e-3), e2 = fd_err(1e-3);
  CHECK(e1 < 1e-4);
  CHECK(e1 / e2 > 3.0);

  // free band with a single plane wave: derivative vanishes
  Spectrum f = full_spectrum(PeriodicPotential(), 1.0, 8);
  CHECK(dp_chi(f, 0).norm() < 1e-12);

  // mode overload carries the phase of the mode
  auto modes = eigensolve(H, 1);
  VecC v = dp_chi(V, modes[0], M);
  CHECK(std::abs(modes[0].c.dot(v)) < 1e-10);
  CHECK(std::abs(v.norm() - u.norm()) < 1e-10);
}

TEST_CASE("reduced resolvent") {
  PeriodicPotential V = make_cosine(4.0, 1);
  Spectrum s = full_spectrum(V, 0.9, 24);
  const int n = static_cast<int>(s.E.size());
  double Es = s.E[0];
  CHECK(reduced_resolvent_apply(s, Es, {0}, s.U.col(0)).norm() < 1e-12);
  VecC u = reduced_resolvent_apply(s, Es, {0}, s.U.col(3));
  CHECK((u - s.U.col(3) / (s.E[3] - Es)).norm() < 1e-12);

  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  VecC f(n);
  for (int i = 0; i < n; ++i) f[i] = cd(g(rng), g(rng));
  VecC w = reduced_resolvent_apply(s, Es, {0, 1}, f);
  VecC Pf = f - s.U.col(0) * s.U.col(0).dot(f) - s.U.col(1) * s.U.col(1).dot(f);
  MatC H = assemble(V, 0.9, 24).H;
  CHECK(((H - Es * MatC::Identity(n, n)) * w - Pf).norm() < 1e-10);
  // oracle: dense solve restricted to the complement
  MatC Q = s.U.rightCols(n - 2);
  VecC ref = Q * ((Q.adjoint() * (H - Es * MatC::Identity(n, n)) * Q).lu().solve(Q.adjoint() * f));
  CHECK((w - ref).norm() < 1e-10);
  CHECK(std::abs(s.U.col(0).dot(w)) < 1e-12);

  try {
    reduced_resolvent_apply(s, s.E[2], {0}, f);
    FAIL("expected SingularResolvent");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularResolvent);
  }
}

TEST_CASE("gauge fixing and Berry connection") {
  PeriodicPotential V = make_cosine(4.0, 1);
  ModePath path;
  for (int k = 0; k <= 40; ++k) {
    double p = 0.1 + k * 1e-3;
    path.p.push_back(p);
    path.chi.push_back(full_spectrum(V, p, 24).U.col(0));
  }
  ModePath fixed = fix_gauge(path);
  for (size_t k = 0; k + 1 < fixed.chi.size(); ++k) {
    cd ov = fixed.chi[k].dot(fixed.chi[k + 1]);
    CHECK(ov.real() > 0);
    CHECK(std::abs(ov.imag()) < 1e-12);
  }
  for (double a : berry_connection(fixed)) CHECK(std::abs(a) <= 1e-3);

  // random phases: output equals the un-phased fix up to one global phase
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ph(0, kTwoPi);
  ModePath scrambled = path;
  for (auto& c : scrambled.chi) c *= std::polar(1.0, ph(rng));
  ModePath again = fix_gauge(scrambled);
  cd g = fixed.chi[0].dot(again.chi[0]);
  for (size_t k = 0; k < fixed.chi.size(); ++k) CHECK((again.chi[k] - g * fixed.chi[k]).norm() < 1e-10);

  // re-phasing by exp(i theta(p)) shifts A by -theta'(p)
  ModePath tw = fixed;
  for (size_t k = 0; k < tw.chi.size(); ++k) tw.chi[k] *= std::polar(1.0, 0.3 * tw.p[k]);
  for (double a : berry_connection(tw)) CHECK(std::abs(a + 0.3) < 1e-3);

  // constant path
  ModePath c;
  for (int k = 0; k < 4; ++k) {
    c.p.push_back(k * 0.1);
    c.chi.push_back(VecC::Unit(5, 2));
  }
  for (double a : berry_connection(fix_gauge(c))) CHECK(std::abs(a) < 1e-15);

  ModePath bad;
  bad.p = {0.0, 0.1};
  bad.chi = {VecC::Unit(3, 0), VecC::Unit(3, 1)};
  try {
    fix_gauge(bad);
    FAIL("expected OverlapCollapse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OverlapCollapse);
  }
}

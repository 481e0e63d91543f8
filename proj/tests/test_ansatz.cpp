#include <doctest.h>

#include <cmath>

#include "bcl/ansatz.hpp"
#include "bcl/bloch.hpp"

using namespace bcl;

namespace {

double l2(const VecC& v, double dx) { return std::sqrt(v.squaredNorm() * dx); }

WavepacketParams cosine_packet(int K, double q, double p) {
  PeriodicPotential V = make_cosine(4.0, 1);
  Spectrum s = full_spectrum(V, p, 16);
  WavepacketParams w;
  w.S = 0.3;
  w.q = q;
  w.p = p;
  w.a0 = gaussian_envelope(20, 512, 1.0, 0.0, 0.4);
  w.a1 = hermite_envelope(20, 512, 1, 1.3);
  w.chi = s.U.col(0);
  w.dp_chi = dp_chi(s, 0);
  w.epsilon = 1.0 / K;
  return w;
}

}  // namespace

TEST_CASE("band-limited envelope interpolation") {
  Envelope g = gaussian_envelope(20, 512, 1.3, 0.5);
  std::vector<double> nodes{g.y(0), g.y(100), g.y(256)}, off{-3.21, 0.0123, 1.7777, 4.5};
  VecC a = envelope_at(g, nodes);
  CHECK(std::abs(a[1] - g.v[100]) < 1e-12);
  CHECK(std::abs(a[2] - g.v[256]) < 1e-12);
  VecC b = envelope_at(g, off);
  for (size_t i = 0; i < off.size(); ++i) {
    double u = (off[i] - 0.5) / 1.3;
    CHECK(std::abs(b[i] - std::pow(kPi, -0.25) / std::sqrt(1.3) * std::exp(-0.5 * u * u)) < 1e-12);
  }
}

TEST_CASE("free packet is a pure dilation of the envelope") {
  const int K = 32;
  GridState g = GridState::make(4, K, 16);
  WavepacketParams w;
  w.q = 2.0;
  w.a0 = gaussian_envelope(20, 512);
  w.chi = VecC::Unit(9, 4);  // chi = 1
  w.epsilon = 1.0 / K;
  GridState wp = assemble_wp0(w, g);
  double se = std::sqrt(w.epsilon);
  double err = 0.0;
  for (int j = 0; j < g.N(); ++j) {
    double y = (g.x(j) - 2.0) / se;
    err = std::max(err, std::abs(wp.psi[j] - std::pow(w.epsilon, -0.25) * std::pow(kPi, -0.25) * std::exp(-0.5 * y * y)));
  }
  CHECK(err < 1e-11);
  CHECK(wp.norm() == doctest::Approx(1.0).epsilon(1e-10));

  // plane-wave chi: the derivative vanishes and WP1 adds only sqrt(eps) a1 chi
  w.a1 = hermite_envelope(20, 512, 1);
  w.dp_chi = VecC::Zero(9);
  GridState w1 = assemble_wp1(w, g);
  WavepacketParams only1 = w;
  only1.a0 = *w.a1;
  GridState corr = assemble_wp0(only1, g);
  CHECK((w1.psi - wp.psi - se * corr.psi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("WP0 norm approaches the envelope norm") {
  std::vector<double> dev;
  for (int K : {16, 64, 256}) {
    WavepacketParams w = cosine_packet(K, 2.0, 1.1);
    GridState wp = assemble_wp0(w, GridState::make(4, K, 16));
    dev.push_back(std::abs(wp.norm() * wp.norm() - 1.0));
    CHECK(dev.back() <= std::sqrt(w.epsilon));
  }
  CHECK(dev[2] <= dev[0] + 1e-12);
}

TEST_CASE("WP1 correction size and reductions") {
  const int K = 128;
  WavepacketParams w = cosine_packet(K, 2.0, 1.1);
  GridState g = GridState::make(4, K, 16);
  GridState w0 = assemble_wp0(w, g), w1 = assemble_wp1(w, g);
  double se = std::sqrt(w.epsilon);
  // chi is orthogonal to d_p chi, so the cross term drops out
  double expect = std::sqrt(std::pow(w.a1->norm(), 2) + std::pow(spectral_derivative(w.a0).norm() * w.dp_chi.norm(), 2));
  CHECK(l2(w1.psi - w0.psi, g.dx()) / se == doctest::Approx(expect).epsilon(1e-3));

  WavepacketParams bare = w;
  bare.a1.reset();
  bare.dp_chi = VecC();
  CHECK((assemble_wp1(bare, g).psi - w0.psi).cwiseAbs().maxCoeff() == 0.0);

  // gauge neutrality
  WavepacketParams r = w;
  cd ph = std::polar(1.0, 0.77);
  r.chi *= ph;
  r.dp_chi *= ph;
  GridState w1r = assemble_wp1(r, g);
  CHECK((w1r.psi - ph * w1.psi).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(w1r.norm() - w1.norm()) < 1e-12);
}

TEST_CASE("assembly guards") {
  const int K = 64;
  WavepacketParams w = cosine_packet(K, 0.05, 1.1);
  try {
    assemble_wp0(w, GridState::make(4, K, 16));
    FAIL("expected EnvelopeClipped");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EnvelopeClipped);
  }
  WavepacketParams m = cosine_packet(K, 2.0, 1.1);
  CHECK_THROWS_AS(assemble_wp0(m, GridState::make(4, 32, 16)), Error);
}

TEST_CASE("two-band ansatz") {
  const int K = 256;
  GridState g = GridState::make(4, K, 16);
  WavepacketParams plus = cosine_packet(K, 1.5, 1.1);
  WavepacketParams minus = cosine_packet(K, 2.5, 2.3);
  PeriodicPotential V = make_cosine(4.0, 1);
  minus.chi = full_spectrum(V, 2.3, 16).U.col(1);
  minus.a0 = hermite_envelope(20, 512, 2, 1.0);

  WavepacketParams none = minus;
  none.a0.v.setZero();
  CHECK((two_band_ansatz(plus, none, g).psi - assemble_wp1(plus, g).psi).cwiseAbs().maxCoeff() == 0.0);

  GridState tb = two_band_ansatz(plus, minus, g);
  double eps = plus.epsilon;
  double wp1 = assemble_wp1(plus, g).norm();
  double expect = wp1 * wp1 + eps * std::pow(assemble_wp0(minus, g).norm(), 2);
  CHECK(std::abs(tb.norm() * tb.norm() - expect) <= std::pow(eps, 1.5));
  CHECK(std::abs(tb.norm() * tb.norm() - 1.0 - eps * 1.0) <= 10 * eps);
}

TEST_CASE("excited-mass prediction") {
  CHECK(predict_excited_mass(1.0, cd(0.1, 0.0), kTwoPi, 1.0, 1.0 / 256) == doctest::Approx(3.90625e-5).epsilon(1e-14));
  CHECK(predict_excited_mass(1.0, cd{}, kTwoPi, 1.0, 1.0 / 256) == 0.0);
  CHECK_THROWS_AS(predict_excited_mass(1.0, cd(0.1, 0.0), 0.0, 1.0, 0.01), Error);
  Envelope a = gaussian_envelope(48, 1024, 3.0);
  for (double dqW : {0.25, -1.0}) {
    ExcitedEnvelope ex = excited_envelope(a, dqW, 5.0, cd(0.03, 0.04));
    double eps = 1.0 / 128;
    CHECK(std::abs(eps * std::pow(ex.closed_form.norm(), 2) - predict_excited_mass(dqW, cd(0.03, 0.04), 5.0, 1.0, eps)) <
          1e-8);
  }
}

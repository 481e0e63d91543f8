#include <doctest.h>

#include <cmath>

#include "bcl/ansatz.hpp"
#include "bcl/lz.hpp"

using namespace bcl;

namespace {

// First-order amplitude kappa * int_{-T}^{T} exp(-i rate t^2 / (2 eps)) dt by composite Simpson.
cd first_order(cd kappa, double rate, double eps, double T) {
  const int n = 4000000;
  const double h = 2 * T / n;
  cd s{};
  for (int k = 0; k <= n; ++k) {
    double t = -T + k * h;
    double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    s += w * std::polar(1.0, -0.5 * rate * t * t / eps);
  }
  return kappa * s * h / 3.0;
}

}  // namespace

TEST_CASE("zero coupling leaves the coefficients untouched") {
  LZModel m = LZModel::linear(0.0, 1.0, cd{}, 1e-2);
  m.c_plus0 = cd(0.6, 0.0);
  m.c_minus0 = cd(0.0, 0.8);
  LZPath p = simulate(m, -2.0, 2.0, 2e-4);
  CHECK(p.c_plus.back() == m.c_plus0);
  CHECK(p.c_minus.back() == m.c_minus0);
  CHECK(p.max_norm_drift == 0.0);
}

TEST_CASE("transition probability at eps = 1e-4") {
  const double eps = 1e-4;
  LZModel m = LZModel::linear(0.0, 1.0, cd(0.1, 0.0), eps);
  CHECK(predict(m) == doctest::Approx(6.2832e-6).epsilon(1e-4));
  LZPath p = simulate(m, -5.0, 5.0, 0.02 * eps, 1000);
  CHECK(p.max_norm_drift <= 1e-10);
  double measured = std::norm(p.c_minus.back());
  CHECK(std::abs(measured / predict(m) - 1.0) <= 0.05);
  // same-span first-order perturbation theory, independent of the integrator
  double pert = std::norm(first_order(cd(0.1, 0.0), 1.0, eps, 5.0));
  CHECK(measured == doctest::Approx(pert).epsilon(0.02));
}

TEST_CASE("phase by quadrature matches the closed form") {
  const double eps = 1e-3;
  LZModel lin = LZModel::linear(0.3, 2.0, cd(0.05, 0.02), eps);
  LZModel num = lin;
  num.phase = nullptr;
  // a common energy shift does not change the gap
  num.E_plus = [](double t) { return (t - 0.3) + 0.2 * t * t; };
  num.E_minus = [](double t) { return -(t - 0.3) + 0.2 * t * t; };
  LZPath a = simulate(lin, -2.0, 2.5, 0.02 * eps / 2.2), b = simulate(num, -2.0, 2.5, 0.02 * eps / 2.2);
  CHECK(std::abs(a.c_minus.back() - b.c_minus.back()) < 1e-6 * std::abs(a.c_minus.back()) + 1e-12);
}

TEST_CASE("under-resolved phase is rejected") {
  LZModel m = LZModel::linear(0.0, 1.0, cd(0.1, 0.0), 1e-3);
  try {
    simulate(m, -5.0, 5.0, 1e-3);
    FAIL("expected PhaseUnderResolved");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PhaseUnderResolved);
  }
}

TEST_CASE("prediction formula and its dictionary with the packet prediction") {
  CHECK(predict(LZModel::linear(0.0, 1.0, cd{}, 1e-3)) == 0.0);
  // p-dot = -dqW, so d/dt chi+ = -dqW d_p chi+ and dE/dt = -dqW dE/dp
  const double dqW = -0.25, sg = 1.7, eps = 1.0 / 256;
  const cd kappa(2e-3, -1e-3);
  LZModel m = LZModel::linear(0.0, std::abs(dqW) * sg, -dqW * kappa, eps);
  CHECK(predict(m) == doctest::Approx(predict_excited_mass(dqW, kappa, sg, 1.0, eps)).epsilon(1e-13));
}

TEST_CASE("convergence to the prediction and small drift of the incident amplitude") {
  std::vector<double> err, drift;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    LZModel m = LZModel::linear(0.0, 1.0, cd(0.1, 0.0), eps);
    LZPath p = simulate(m, -5.0, 5.0, 0.02 * eps, 1000);
    err.push_back(std::abs(std::norm(p.c_minus.back()) / predict(m) - 1.0));
    LZPath h = simulate(m, -5.0, 0.0, 0.02 * eps);
    drift.push_back(std::abs(h.c_plus.back() - m.c_plus0));
  }
  CHECK(err[1] < err[0]);
  CHECK(err[2] < err[1]);
  CHECK(drift[1] < drift[0]);
  CHECK(drift[2] < drift[1]);
}

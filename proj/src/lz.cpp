#include "bcl/lz.hpp"

#include <algorithm>
#include <cmath>

namespace bcl {

LZModel LZModel::linear(double t_star, double rate, cd coupling, double epsilon) {
  LZModel m;
  m.t_star = t_star;
  m.epsilon = epsilon;
  m.E_plus = [=](double t) { return 0.5 * rate * (t - t_star); };
  m.E_minus = [=](double t) { return -0.5 * rate * (t - t_star); };
  m.coupling = [=](double) { return coupling; };
  m.phase = [=](double t) { return 0.5 * rate * (t - t_star) * (t - t_star); };
  m.dEdt_plus_star = 0.5 * rate;
  m.dEdt_minus_star = -0.5 * rate;
  return m;
}

namespace {

// Phase by composite Gauss-Legendre on a fine grid around t*, tabulated once.
struct PhaseTable {
  double t0, h;
  std::vector<double> v;
  double operator()(double t) const {
    double r = (t - t0) / h;
    int k = std::clamp(static_cast<int>(r), 0, static_cast<int>(v.size()) - 2);
    double s = r - k;
    return v[k] + s * (v[k + 1] - v[k]);
  }
};

}  // namespace

LZPath simulate(const LZModel& m, double t0, double t1, double dt, int record_every) {
  if (dt <= 0 || t1 <= t0) throw Error(ErrorCode::InvalidConfig, "bad time span");
  int n = static_cast<int>(std::ceil((t1 - t0) / dt - 1e-9));
  double h = (t1 - t0) / n;
  double gmax = 0.0;
  for (int k = 0; k <= 64; ++k) {
    double t = t0 + (t1 - t0) * k / 64.0;
    gmax = std::max(gmax, std::abs(m.E_plus(t) - m.E_minus(t)));
  }
  if (h * gmax / m.epsilon > 0.1)
    throw Error(ErrorCode::PhaseUnderResolved,
                "dt * max|E+ - E-| / eps = " + std::to_string(h * gmax / m.epsilon) + " > 0.1");

  std::function<double(double)> phase = m.phase;
  PhaseTable table;
  if (!phase) {
    // half-step table integrated with 3-point Gauss per interval
    int nt = 2 * n;
    table.t0 = t0;
    table.h = (t1 - t0) / nt;
    table.v.assign(nt + 1, 0.0);
    const double g = std::sqrt(0.6);
    auto f = [&](double t) { return m.E_plus(t) - m.E_minus(t); };
    for (int k = 0; k < nt; ++k) {
      double a = t0 + k * table.h, c = a + 0.5 * table.h, r = 0.5 * table.h;
      table.v[k + 1] = table.v[k] + r * (5.0 / 9 * f(c - g * r) + 8.0 / 9 * f(c) + 5.0 / 9 * f(c + g * r));
    }
    double shift = 0.0;
    {
      // Phi is measured from t*
      double r = (m.t_star - t0) / table.h;
      int k = std::clamp(static_cast<int>(r), 0, nt - 1);
      shift = table.v[k] + (r - k) * (table.v[k + 1] - table.v[k]);
    }
    for (auto& v : table.v) v -= shift;
    phase = [&table](double t) { return table(t); };
  }

  auto F = [&](double t) { return -std::conj(m.coupling(t)) * std::polar(1.0, phase(t) / m.epsilon); };

  LZPath path;
  cd cp = m.c_plus0, cm = m.c_minus0;
  double n0 = std::norm(cp) + std::norm(cm);
  auto rec = [&](double t) {
    path.t.push_back(t);
    path.c_plus.push_back(cp);
    path.c_minus.push_back(cm);
  };
  rec(t0);
  cd Fa = F(t0);
  for (int k = 0; k < n; ++k) {
    double t = t0 + k * h;
    cd Fm = F(t + 0.5 * h), Fb = F(t + h);
    cd k1p = Fa * cm, k1m = -std::conj(Fa) * cp;
    cd k2p = Fm * (cm + 0.5 * h * k1m), k2m = -std::conj(Fm) * (cp + 0.5 * h * k1p);
    cd k3p = Fm * (cm + 0.5 * h * k2m), k3m = -std::conj(Fm) * (cp + 0.5 * h * k2p);
    cd k4p = Fb * (cm + h * k3m), k4m = -std::conj(Fb) * (cp + h * k3p);
    cp += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    cm += h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
    Fa = Fb;
    path.max_norm_drift = std::max(path.max_norm_drift, std::abs(std::norm(cp) + std::norm(cm) - n0));
    if ((k + 1) % record_every == 0 || k + 1 == n) rec(t + h);
  }
  return path;
}

double predict(const LZModel& m) {
  double rate = std::abs(m.dEdt_plus_star - m.dEdt_minus_star);
  if (rate <= 0.0) throw Error(ErrorCode::DegenerateSlopes, "crossing is not linear");
  return kTwoPi * std::norm(m.coupling(m.t_star)) * m.epsilon * std::norm(m.c_plus0) / rate;
}

}  // namespace bcl

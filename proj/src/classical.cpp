#include "bcl/classical.hpp"

#include <algorithm>
#include <cmath>

namespace bcl {

BandFunctions BandFunctions::from(const BandInterpolant& b) {
  return {[&b](double p) { return b.E(p); }, [&b](double p) { return b.d1(p); }, b.branch().label()};
}

BandFunctions BandFunctions::free_parabola(double shift) {
  return {[shift](double p) { return 0.5 * (p - shift) * (p - shift); }, [shift](double p) { return p - shift; },
          "free"};
}

namespace {

struct Y {
  double q, p, S;
};

Y rhs(const BandFunctions& b, const ExternalPotential& W, const Y& y) {
  double v = b.dEdp(y.p);
  return {v, -W.dW(y.q), y.p * v - b.E(y.p) - W.W(y.q)};
}

Y rk4(const BandFunctions& b, const ExternalPotential& W, const Y& y, double h) {
  auto add = [](const Y& a, const Y& k, double s) { return Y{a.q + s * k.q, a.p + s * k.p, a.S + s * k.S}; };
  Y k1 = rhs(b, W, y);
  Y k2 = rhs(b, W, add(y, k1, h / 2));
  Y k3 = rhs(b, W, add(y, k2, h / 2));
  Y k4 = rhs(b, W, add(y, k3, h));
  return {y.q + h / 6 * (k1.q + 2 * k2.q + 2 * k3.q + k4.q), y.p + h / 6 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p),
          y.S + h / 6 * (k1.S + 2 * k2.S + 2 * k3.S + k4.S)};
}

void push(Trajectory& tr, const BandFunctions& b, const ExternalPotential& W, double t, const Y& y) {
  Y d = rhs(b, W, y);
  tr.t.push_back(t);
  tr.q.push_back(y.q);
  tr.p.push_back(y.p);
  tr.S.push_back(y.S);
  tr.qd.push_back(d.q);
  tr.pd.push_back(d.p);
  tr.Sd.push_back(d.S);
}

double herm(double h, double f0, double f1, double g0, double g1, double s) {
  double t = s / h, t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * g0 + (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * h * g1;
}

}  // namespace

Trajectory::State Trajectory::at(double time) const {
  if (t.size() < 2) throw Error(ErrorCode::InvalidConfig, "trajectory too short");
  bool asc = t.back() > t.front();
  double lo = asc ? t.front() : t.back(), hi = asc ? t.back() : t.front();
  if (time < lo - 1e-12 || time > hi + 1e-12)
    throw Error(ErrorCode::InvalidConfig, "time " + std::to_string(time) + " outside trajectory");
  double dt = t[1] - t[0];
  int k = static_cast<int>(std::floor((time - t[0]) / dt));
  k = std::clamp(k, 0, static_cast<int>(t.size()) - 2);
  double s = time - t[k];
  return {herm(dt, q[k], q[k + 1], qd[k], qd[k + 1], s), herm(dt, p[k], p[k + 1], pd[k], pd[k + 1], s),
          herm(dt, S[k], S[k + 1], Sd[k], Sd[k + 1], s)};
}

Trajectory integrate_flow(const BandFunctions& band, const ExternalPotential& W, double q0, double p0, double S0,
                          double t0, double t1, double dt) {
  if (dt <= 0) throw Error(ErrorCode::InvalidConfig, "dt must be positive");
  int n = static_cast<int>(std::ceil(std::abs(t1 - t0) / dt - 1e-9));
  n = std::max(n, 1);
  double h = (t1 - t0) / n;
  Trajectory tr;
  tr.band = band.label;
  Y y{q0, p0, S0};
  double H0 = band.E(p0) + W.W(q0);
  push(tr, band, W, t0, y);
  for (int k = 1; k <= n; ++k) {
    y = rk4(band, W, y, h);
    push(tr, band, W, t0 + k * h, y);
    tr.energy_drift = std::max(tr.energy_drift, std::abs(band.E(y.p) + W.W(y.q) - H0));
  }
  return tr;
}

CrossingTime detect_crossing_time(const Trajectory& traj, const BandFunctions& band, const ExternalPotential& W,
                                  double p_star, double tangential_tol) {
  for (size_t k = 0; k + 1 < traj.size(); ++k) {
    double a = traj.p[k] - p_star, b = traj.p[k + 1] - p_star;
    if (a == 0.0 && k > 0) continue;
    if (!(a * b <= 0.0) || (a == 0.0 && b == 0.0)) continue;
    Y y0{traj.q[k], traj.p[k], traj.S[k]};
    double h = traj.t[k + 1] - traj.t[k];
    double lo = 0.0, hi = h;
    for (int it = 0; it < 200 && std::abs(hi - lo) > 1e-14; ++it) {
      double mid = 0.5 * (lo + hi);
      double f = rk4(band, W, y0, mid).p - p_star;
      if ((f < 0) == (a < 0) && f != 0.0)
        lo = mid;
      else
        hi = mid;
    }
    double tau = 0.5 * (lo + hi);
    Y ys = rk4(band, W, y0, tau);
    CrossingTime c{traj.t[k] + tau, ys.q, ys.S, -W.dW(ys.q)};
    if (std::abs(c.p_dot) < tangential_tol)
      throw Error(ErrorCode::TangentialApproach, "p-dot at crossing is " + std::to_string(c.p_dot));
    return c;
  }
  throw Error(ErrorCode::NoCrossing, "p(t) never reaches p*=" + std::to_string(p_star));
}

namespace {

// Whether some image p' + 2 pi k, other than p_star itself, lies within the p-range.
bool reaches(double pmin, double pmax, double p_other, double p_star) {
  for (int k = -3; k <= 3; ++k) {
    double v = p_other + kTwoPi * k;
    if (std::abs(v - p_star) < 1e-9) continue;
    if (v >= pmin && v <= pmax) return true;
  }
  return false;
}

void check_second(const Trajectory& tr, double ta, double tb, int band, double p_star,
                  const std::vector<Crossing>& cs, const char* which) {
  double pmin = 1e300, pmax = -1e300;
  for (size_t k = 0; k < tr.size(); ++k)
    if (tr.t[k] >= ta && tr.t[k] <= tb) {
      pmin = std::min(pmin, tr.p[k]);
      pmax = std::max(pmax, tr.p[k]);
    }
  if (pmin > pmax) return;
  for (const auto& c : cs) {
    if (c.n != band && c.n + 1 != band) continue;
    if (reaches(pmin, pmax, c.p_star, p_star))
      throw Error(ErrorCode::SecondCrossing, std::string(which) + " branch reaches crossing (" +
                                                 std::to_string(c.n) + ", " + std::to_string(c.p_star) + ")");
  }
}

}  // namespace

ExtendedTrajectory extend_through_crossing(const BandFunctions& plus, const BandFunctions& minus,
                                           const ExternalPotential& W, const Trajectory& incoming, double p_star,
                                           int n, double T, double delta, double U_halfwidth,
                                           const std::vector<Crossing>& other_crossings) {
  if (incoming.size() < 2) throw Error(ErrorCode::InvalidConfig, "incoming trajectory too short");
  double dt = incoming.t[1] - incoming.t[0];
  double t0 = incoming.t.front();
  ExtendedTrajectory ext;
  ext.plus = integrate_flow(plus, W, incoming.q.front(), incoming.p.front(), incoming.S.front(), t0, T, dt);
  ext.plus.band = "plus";
  CrossingTime ct = detect_crossing_time(ext.plus, plus, W, p_star);
  ext.t_star = ct.t_star;
  ext.q_star = ct.q_star;
  ext.p_star = p_star;
  ext.S_star = ct.S_star;
  if (!(ext.t_star < T)) throw Error(ErrorCode::NoCrossing, "crossing after T");

  auto inside = [&](const Trajectory& tr, double d) {
    for (double s : {-d, d}) {
      double t = std::clamp(ext.t_star + s, tr.t.front(), tr.t.back());
      if (std::abs(tr.at(t).p - p_star) >= U_halfwidth) return false;
    }
    return true;
  };
  ext.delta = delta;
  while (!inside(ext.plus, ext.delta) && ext.delta > 1e-6) ext.delta *= 0.5;

  double dprime = delta;
  // both halves on the same step so the stitched grid stays uniform
  double nb = std::ceil(dprime / dt - 1e-9), nf = std::max(1.0, std::ceil((T - ext.t_star) / dt - 1e-9));
  Trajectory back = integrate_flow(minus, W, ct.q_star, p_star, ct.S_star, ext.t_star, ext.t_star - nb * dt, dt);
  Trajectory fwd = integrate_flow(minus, W, ct.q_star, p_star, ct.S_star, ext.t_star, ext.t_star + nf * dt, dt);
  Trajectory& m = ext.minus;
  m.band = "minus";
  for (size_t k = back.size(); k-- > 1;) {
    m.t.push_back(back.t[k]);
    m.q.push_back(back.q[k]);
    m.p.push_back(back.p[k]);
    m.S.push_back(back.S[k]);
    m.qd.push_back(back.qd[k]);
    m.pd.push_back(back.pd[k]);
    m.Sd.push_back(back.Sd[k]);
  }
  m.t.insert(m.t.end(), fwd.t.begin(), fwd.t.end());
  m.q.insert(m.q.end(), fwd.q.begin(), fwd.q.end());
  m.p.insert(m.p.end(), fwd.p.begin(), fwd.p.end());
  m.S.insert(m.S.end(), fwd.S.begin(), fwd.S.end());
  m.qd.insert(m.qd.end(), fwd.qd.begin(), fwd.qd.end());
  m.pd.insert(m.pd.end(), fwd.pd.begin(), fwd.pd.end());
  m.Sd.insert(m.Sd.end(), fwd.Sd.begin(), fwd.Sd.end());
  m.energy_drift = std::max(back.energy_drift, fwd.energy_drift);
  ext.delta_prime = dprime;
  while (!inside(m, ext.delta_prime) && ext.delta_prime > 1e-6) ext.delta_prime *= 0.5;

  // after t* the plus branch is band n+1 and the minus branch band n
  check_second(ext.plus, t0, ext.t_star, n, p_star, other_crossings, "plus");
  check_second(ext.plus, ext.t_star, T, n + 1, p_star, other_crossings, "plus");
  check_second(m, ext.t_star, T, n, p_star, other_crossings, "minus");
  return ext;
}

}  // namespace bcl

#include "bcl/envelope.hpp"

#include <algorithm>
#include <cmath>

#include "bcl/fft.hpp"

namespace bcl {

VecR Envelope::k() const { return fft_wavenumbers(size(), 2.0 * Y); }

double Envelope::edge_fraction() const {
  double tot = v.squaredNorm();
  if (tot == 0.0) return 0.0;
  int n = size(), w = std::max(1, n / 20);  // 5% on each side
  double edge = v.head(w).squaredNorm() + v.tail(w).squaredNorm();
  return edge / tot;
}

void check_decay(const Envelope& e, double tol) {
  double f = e.edge_fraction();
  if (f > tol) throw Error(ErrorCode::GridOverflow, "envelope edge mass fraction " + std::to_string(f));
}

Envelope gaussian_envelope(double Y, int N, double sigma, double center, double k0) {
  Envelope e(Y, N);
  double c = std::pow(kPi, -0.25) / std::sqrt(sigma);
  for (int j = 0; j < N; ++j) {
    double y = e.y(j), u = (y - center) / sigma;
    e.v[j] = c * std::exp(-0.5 * u * u) * std::polar(1.0, k0 * y);
  }
  return e;
}

Envelope hermite_envelope(double Y, int N, int order, double sigma, double chirp) {
  Envelope e(Y, N);
  for (int j = 0; j < N; ++j) {
    double u = e.y(j) / sigma;
    double h0 = 1.0, h1 = 2.0 * u;  // physicists' Hermite recurrence
    double h = order == 0 ? h0 : h1;
    for (int m = 2; m <= order; ++m) {
      h = 2.0 * u * h1 - 2.0 * (m - 1) * h0;
      h0 = h1;
      h1 = h;
    }
    e.v[j] = h * std::exp(-0.5 * u * u) * std::polar(1.0, chirp * e.y(j) * e.y(j));
  }
  e.v /= e.norm();
  return e;
}

namespace {

void fwd(VecC& v) { cached_fft(static_cast<int>(v.size())).forward(v); }
void bwd(VecC& v) {
  cached_fft(static_cast<int>(v.size())).backward(v);
  v /= static_cast<double>(v.size());
}

// Multiplies the spectrum by k^power.
VecC apply_k_power(const VecC& v, const VecR& k, int power) {
  VecC w = v;
  fwd(w);
  for (int j = 0; j < w.size(); ++j) w[j] *= std::pow(k[j], power);
  bwd(w);
  return w;
}

struct Stepper {
  const OscillatorCoefficients& c;
  VecR y, k;

  Stepper(const OscillatorCoefficients& c_, const Envelope& e) : c(c_), y(e.size()), k(e.k()) {
    for (int j = 0; j < e.size(); ++j) y[j] = e.y(j);
  }

  // Strang step of i a_t = H(t) a over [t, t + h] with coefficients at the midpoint.
  void step(VecC& a, double t, double h) const {
    double tm = t + 0.5 * h;
    double w2 = c.d2W(tm), ph = c.dW_A(tm), e2 = c.d2E(tm);
    for (int j = 0; j < a.size(); ++j) a[j] *= std::polar(1.0, -0.5 * h * (0.5 * w2 * y[j] * y[j] + ph));
    fwd(a);
    for (int j = 0; j < a.size(); ++j) a[j] *= std::polar(1.0, -h * 0.5 * e2 * k[j] * k[j]);
    bwd(a);
    for (int j = 0; j < a.size(); ++j) a[j] *= std::polar(1.0, -0.5 * h * (0.5 * w2 * y[j] * y[j] + ph));
  }

  VecC source(const VecC& a0, double t) const {
    double e3 = c.d3E(t), w3 = c.d3W(t), b = c.dW_dpA(t), g = c.d2W_A(t);
    VecC out = VecC::Zero(a0.size());
    if (e3 != 0.0 || b != 0.0) {
      VecC s = a0;
      fwd(s);
      for (int j = 0; j < s.size(); ++j) s[j] *= e3 / 6.0 * k[j] * k[j] * k[j] + b * k[j];
      bwd(s);
      out += s;
    }
    for (int j = 0; j < a0.size(); ++j) out[j] += (w3 / 6.0 * y[j] * y[j] * y[j] + g * y[j]) * a0[j];
    return out;
  }
};

int step_count(double t0, double t1, double dt) {
  if (dt <= 0) throw Error(ErrorCode::InvalidConfig, "dt must be positive");
  return std::max(1, static_cast<int>(std::ceil(std::abs(t1 - t0) / dt - 1e-9)));
}

}  // namespace

Envelope spectral_derivative(const Envelope& e) {
  Envelope d = e;
  d.v = apply_k_power(e.v, e.k(), 1);
  return d;
}

OscillatorCoefficients OscillatorCoefficients::constant(double d2E, double d2W, double dW_A, double d3E, double d3W,
                                                        double dW_dpA, double d2W_A) {
  auto k = [](double v) { return [v](double) { return v; }; };
  return {k(d2E), k(d2W), k(dW_A), k(d3E), k(d3W), k(dW_dpA), k(d2W_A)};
}

OscillatorCoefficients coefficients_along(const Trajectory& traj, const BandInterpolant& band,
                                          const ExternalPotential& W) {
  OscillatorCoefficients c;
  auto zero = [](double) { return 0.0; };
  c.d2E = [&traj, &band](double t) { return band.d2(traj.at(t).p); };
  c.d3E = [&traj, &band](double t) { return band.d3(traj.at(t).p); };
  c.d2W = [&traj, W](double t) { return W.d2W(traj.at(t).q); };
  c.d3W = [&traj, W](double t) { return W.d3W(traj.at(t).q); };
  c.dW_A = zero;
  c.dW_dpA = zero;
  c.d2W_A = zero;
  return c;
}

void a0_step(const OscillatorCoefficients& c, Envelope& a, double t, double h) {
  Stepper(c, a).step(a.v, t, h);
  a.t = t + h;
}

void a1_step(const OscillatorCoefficients& c, Envelope& a1, const Envelope& a0, double t, double h) {
  Stepper st(c, a1);
  VecC mid = a0.v;
  st.step(mid, t, 0.5 * h);
  VecC src = st.source(mid, t + 0.5 * h);
  st.step(src, t + 0.5 * h, 0.5 * h);
  st.step(a1.v, t, h);
  a1.v -= cd(0.0, h) * src;
  a1.t = t + h;
}

const Envelope& EnvelopePath::at(double time) const {
  double r = (time - t0) / dt;
  long k = std::lround(r);
  if (k < 0 || k >= static_cast<long>(a.size()) || std::abs(r - k) * dt > 1e-9)
    throw Error(ErrorCode::GridMismatch, "time " + std::to_string(time) + " not on envelope grid");
  return a[k];
}

EnvelopePath evolve_a0(const OscillatorCoefficients& c, const Envelope& a0_init, double t0, double t1, double dt) {
  int n = step_count(t0, t1, dt);
  double h = (t1 - t0) / n;
  Stepper st(c, a0_init);
  EnvelopePath path;
  path.t0 = t0;
  path.dt = h;
  path.a.reserve(n + 1);
  Envelope cur = a0_init;
  cur.t = t0;
  path.a.push_back(cur);
  for (int s = 0; s < n; ++s) {
    st.step(cur.v, t0 + s * h, h);
    cur.t = t0 + (s + 1) * h;
    check_decay(cur);
    path.a.push_back(cur);
  }
  return path;
}

EnvelopePath evolve_a1(const OscillatorCoefficients& c, const Envelope& a1_init, const EnvelopePath& a0_path,
                       double t0, double t1, double dt) {
  int n = step_count(t0, t1, dt);
  double h = (t1 - t0) / n;
  if (static_cast<int>(a0_path.a.size()) < n + 1 || std::abs(a0_path.dt - h) > 1e-12 ||
      std::abs(a0_path.t0 - t0) > 1e-12)
    throw Error(ErrorCode::GridMismatch, "a0 path does not match the a1 time grid");
  EnvelopePath path;
  path.t0 = t0;
  path.dt = h;
  path.a.reserve(n + 1);
  Envelope cur = a1_init;
  cur.t = t0;
  path.a.push_back(cur);
  for (int s = 0; s < n; ++s) {
    // a0 at the midpoint by a half step, then the exponential midpoint rule
    a1_step(c, cur, a0_path.a[s], t0 + s * h, h);
    check_decay(cur);
    path.a.push_back(cur);
  }
  return path;
}

namespace {

void check_excited_args(double dqW, double slope_gap) {
  if (!(slope_gap > 1e-10)) throw Error(ErrorCode::DegenerateSlopes, "slope gap must be positive");
  if (dqW == 0.0) throw Error(ErrorCode::InvalidConfig, "dqW at the crossing must be nonzero");
}

// Accumulates dqW * coupling * int e^{i dqW sg s^2/2} a*(y - sg s) ds with the
// trapezoid rule over uniform substeps, recording at each requested s.
std::vector<Envelope> fresnel_accumulate(const Envelope& a, double dqW, double sg, cd coupling,
                                         const std::vector<double>& s_rec) {
  const int N = a.size();
  const double Y = a.Y, dy = a.dy();
  VecR k = a.k();
  VecC ahat = a.v;
  fwd(ahat);
  double kmax = kPi / dy;
  double band = std::abs(dqW) * 2.0 * Y + sg * kmax;
  double ds = std::min(0.25 * kPi / band, 0.5 * dy / sg);
  double s_lo = -2.0 * Y / sg, s_hi = 2.0 * Y / sg;

  VecC buf(N);
  auto integrand = [&](double s, VecC& out) {
    double u = sg * s;
    for (int j = 0; j < N; ++j) buf[j] = ahat[j] * std::polar(1.0, -k[j] * u);
    bwd(buf);
    cd w = std::polar(1.0, 0.5 * dqW * sg * s * s);
    for (int j = 0; j < N; ++j) {
      double ys = a.y(j) - u;
      out[j] = (ys >= -Y && ys < Y) ? w * buf[j] : cd{};
    }
  };

  std::vector<Envelope> rec;
  rec.reserve(s_rec.size());
  VecC acc = VecC::Zero(N), f0(N), f1(N);
  double s_cur = std::min(s_lo, s_rec.empty() ? s_lo : s_rec.front());
  integrand(s_cur, f0);
  for (double target : s_rec) {
    if (target < s_cur - 1e-15) throw Error(ErrorCode::InvalidConfig, "s grid must be ascending");
    double a_end = std::min(target, s_hi);
    if (a_end > s_cur) {
      int m = static_cast<int>(std::ceil((a_end - std::max(s_cur, s_lo)) / ds));
      // below s_lo the integrand vanishes for every y on the grid
      if (s_cur < s_lo) {
        s_cur = s_lo;
        integrand(s_cur, f0);
      }
      m = std::max(m, 1);
      double h = (a_end - s_cur) / m;
      for (int i = 1; i <= m; ++i) {
        integrand(s_cur + i * h, f1);
        acc += 0.5 * h * (f0 + f1);
        f0.swap(f1);
      }
      s_cur = a_end;
    }
    Envelope e(Y, N);
    e.v = dqW * coupling * acc;
    e.t = target;
    rec.push_back(e);
  }
  return rec;
}

}  // namespace

ExcitedEnvelope excited_envelope(const Envelope& a_star, double dqW, double slope_gap, cd coupling) {
  check_excited_args(dqW, slope_gap);
  ExcitedEnvelope out;
  // closed form: (dqW kappa / sg) (g * a*) with g(u) = exp(i gamma u^2), gamma = dqW / (2 sg)
  double gamma = dqW / (2.0 * slope_gap);
  VecR k = a_star.k();
  VecC w = a_star.v;
  fwd(w);
  cd pref = std::sqrt(kPi / std::abs(gamma)) * std::polar(1.0, (gamma > 0 ? 1.0 : -1.0) * kPi / 4.0);
  for (int j = 0; j < w.size(); ++j) w[j] *= pref * std::polar(1.0, -k[j] * k[j] / (4.0 * gamma));
  bwd(w);
  out.closed_form = Envelope(a_star.Y, a_star.size());
  out.closed_form.v = (dqW * coupling / slope_gap) * w;
  out.closed_form.t = a_star.t;

  out.quadrature = fresnel_accumulate(a_star, dqW, slope_gap, coupling, {2.0 * a_star.Y / slope_gap}).front();
  out.quadrature.t = a_star.t;
  out.route_difference = std::sqrt((out.closed_form.v - out.quadrature.v).squaredNorm() * a_star.dy());
  return out;
}

std::vector<Envelope> excited_buildup(const Envelope& a_star, double dqW, double slope_gap, cd coupling,
                                      const std::vector<double>& s_grid) {
  check_excited_args(dqW, slope_gap);
  return fresnel_accumulate(a_star, dqW, slope_gap, coupling, s_grid);
}

double sigma_norm(const Envelope& e, int l) {
  if (l < 0 || l > 2) throw Error(ErrorCode::InvalidConfig, "sigma_norm supports l <= 2");
  VecR k = e.k();
  double total = 0.0;
  for (int beta = 0; beta <= l; ++beta) {
    VecC d = beta == 0 ? e.v : apply_k_power(e.v, k, beta);
    for (int alpha = 0; alpha + beta <= l; ++alpha) {
      double s = 0.0;
      for (int j = 0; j < e.size(); ++j) s += std::norm(std::pow(e.y(j), alpha) * d[j]);
      total += std::sqrt(s * e.dy());
    }
  }
  return total;
}

}  // namespace bcl

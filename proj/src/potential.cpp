#include "bcl/potential.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bcl/fft.hpp"

namespace bcl {

PeriodicPotential::PeriodicPotential(std::vector<cd> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.size() % 2 == 0) throw Error(ErrorCode::InvalidConfig, "coefficient table must have odd length");
}

double PeriodicPotential::operator()(double z) const {
  int mv = max_index();
  double v = coeffs_[mv].real();
  for (int m = 1; m <= mv; ++m) {
    cd e = std::polar(1.0, kTwoPi * m * z);
    v += 2.0 * (coeff(m) * e).real();
  }
  return v;
}

bool PeriodicPotential::is_zero() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](cd c) { return c == cd{}; });
}

PeriodicPotential make_cosine(double amplitude, int harmonics) {
  if (harmonics < 1) throw Error(ErrorCode::InvalidConfig, "harmonics must be >= 1");
  if (!std::isfinite(amplitude)) throw Error(ErrorCode::InvalidConfig, "amplitude not finite");
  std::vector<cd> c(2 * harmonics + 1, cd{});
  c[0] = c[2 * harmonics] = amplitude / 2.0;
  return PeriodicPotential(std::move(c));
}

PeriodicPotential make_from_coeffs(const std::vector<cd>& coeffs, double floor, double tol) {
  if (coeffs.size() % 2 == 0) throw Error(ErrorCode::InvalidConfig, "coefficient table must have odd length");
  int mv = static_cast<int>(coeffs.size() / 2);
  double cmax = 0.0;
  for (auto c : coeffs) cmax = std::max(cmax, std::abs(c));
  for (int m = 0; m <= mv; ++m) {
    if (std::abs(coeffs[mv + m] - std::conj(coeffs[mv - m])) > tol * std::max(1.0, cmax))
      throw Error(ErrorCode::InvalidConfig, "coefficients violate V_{-m} = conj(V_m) at m=" + std::to_string(m));
  }
  int keep = mv;
  while (keep > 0 && std::abs(coeffs[mv + keep]) <= floor * cmax) --keep;
  std::vector<cd> out(2 * keep + 1);
  for (int m = -keep; m <= keep; ++m) {
    // exact Hermitian symmetry
    cd a = coeffs[mv + m], b = std::conj(coeffs[mv - m]);
    out[keep + m] = 0.5 * (a + b);
  }
  out[keep] = out[keep].real();
  return PeriodicPotential(std::move(out));
}

double evaluate_periodic(const PeriodicPotential& V, double z) { return V(z); }

// ---------------------------------------------------------------------------
// Weierstrass p

namespace {

// csc^2 and cot via u = exp(2iw) with |u| <= 1, stable for large |Im w|.
struct TrigU {
  cd csc2;
  cd cot;
  cd cos_over_sin3;
};

TrigU trig_u(cd w) {
  double sgn = 1.0;
  if (w.imag() < 0.0) {
    w = -w;
    sgn = -1.0;
  }
  cd u = std::exp(2.0 * kI * w);
  cd one_m = 1.0 - u;
  TrigU t;
  t.csc2 = -4.0 * u / (one_m * one_m);
  t.cot = sgn * kI * (u + 1.0) / (u - 1.0);
  t.cos_over_sin3 = sgn * (-4.0 * kI * u * (u + 1.0) / ((u - 1.0) * (u - 1.0) * (u - 1.0)));
  return t;
}

void check_pole(cd z, double omega_prime) {
  double t2 = 2.0 * omega_prime;
  double m0 = std::round(z.real());
  double n0 = std::round(z.imag() / t2);
  double best = 1e300;
  for (int dm = -1; dm <= 1; ++dm)
    for (int dn = -1; dn <= 1; ++dn) {
      cd w{m0 + dm, (n0 + dn) * t2};
      best = std::min(best, std::abs(z - w));
    }
  if (best < 1e-8) throw Error(ErrorCode::PoleProximity, "argument within 1e-8 of a lattice point");
}

double quasi_g2(const EllipticParams& p) {
  // pi^2/3 + 2 sum_{n>=1} pi^2 csc^2(pi n tau), tau = 2 i omega'
  cd tau{0.0, 2.0 * std::abs(p.omega_prime)};
  double s = kPi * kPi / 3.0;
  for (int n = 1; n < 100000; ++n) {
    cd term = 2.0 * kPi * kPi * trig_u(kPi * double(n) * tau).csc2;
    s += term.real();
    if (std::abs(term) < 1e-18 * std::abs(s)) break;
  }
  return s;
}

template <class F>
cd row_sum(cd z, const EllipticParams& p, F f) {
  cd tau{0.0, 2.0 * std::abs(p.omega_prime)};
  double t2 = tau.imag();
  int nmin = static_cast<int>(std::ceil(std::abs(z.imag()) / t2)) + 2;
  cd s = f(z);
  for (int n = 1; n < 100000; ++n) {
    cd a = f(z + double(n) * tau);
    cd b = f(z - double(n) * tau);
    s += a + b;
    if (n >= nmin && std::abs(a) + std::abs(b) < 1e-17 * std::max(1.0, std::abs(s))) break;
  }
  return s;
}

}  // namespace

EllipticParams make_elliptic(int m, double omega_prime) {
  if (omega_prime == 0.0) throw Error(ErrorCode::InvalidConfig, "omega' must be nonzero");
  if (m < 1) throw Error(ErrorCode::InvalidConfig, "gap count must be positive");
  EllipticParams p;
  p.m = m;
  p.omega_prime = omega_prime;
  // Row n of the lattice sum in closed form, with c = cot(pi a), s = csc^2(pi a):
  //   sum_m (m+a)^-4 = pi^4/3 s (3c^2 + 1)
  //   sum_m (m+a)^-6 = pi^6/120 s (120c^4 + 120c^2 + 16)
  double pi4 = std::pow(kPi, 4), pi6 = std::pow(kPi, 6);
  double G4 = pi4 / 45.0, G6 = 2.0 * pi6 / 945.0;
  cd tau{0.0, 2.0 * std::abs(omega_prime)};
  for (int n = 1; n < 100000; ++n) {
    TrigU t = trig_u(kPi * double(n) * tau);
    cd c2 = t.cot * t.cot;
    cd r4 = pi4 / 6.0 * 2.0 * t.csc2 * (3.0 * c2 + 1.0);
    cd r6 = pi6 / 120.0 * t.csc2 * (120.0 * c2 * c2 + 120.0 * c2 + 16.0);
    // rows n and -n contribute equally (even powers)
    G4 += 2.0 * r4.real();
    G6 += 2.0 * r6.real();
    if (std::abs(r4) < 1e-18 * G4 && std::abs(r6) < 1e-18 * std::abs(G6)) break;
  }
  p.g2 = 60.0 * G4;
  p.g3 = 140.0 * G6;
  return p;
}

cd weierstrass_p(cd z, const EllipticParams& p) {
  check_pole(z, p.omega_prime);
  cd s = row_sum(z, p, [](cd w) { return kPi * kPi * trig_u(kPi * w).csc2; });
  return s - quasi_g2(p);
}

cd weierstrass_p_prime(cd z, const EllipticParams& p) {
  check_pole(z, p.omega_prime);
  return row_sum(z, p, [](cd w) { return -2.0 * kPi * kPi * kPi * trig_u(kPi * w).cos_over_sin3; });
}

cd weierstrass_p_lattice(cd z, const EllipticParams& p, int N) {
  check_pole(z, p.omega_prime);
  double t2 = 2.0 * std::abs(p.omega_prime);
  auto partial = [&](int K) {
    cd s = 1.0 / (z * z);
    for (int n = -K; n <= K; ++n)
      for (int m = -K; m <= K; ++m) {
        if (m == 0 && n == 0) continue;
        cd w{double(m), n * t2};
        cd d = z - w;
        s += 1.0 / (d * d) - 1.0 / (w * w);
      }
    return s;
  };
  // truncation error of the symmetric square behaves like c/N^2 + O(N^-4)
  cd a = partial(N), b = partial(2 * N);
  return (4.0 * b - a) / 3.0;
}

std::pair<double, double> eisenstein_lattice(const EllipticParams& p, int N) {
  double t2 = 2.0 * std::abs(p.omega_prime);
  double G4 = 0.0, G6 = 0.0;
  for (int n = -N; n <= N; ++n)
    for (int m = -N; m <= N; ++m) {
      if (m == 0 && n == 0) continue;
      cd w{double(m), n * t2};
      cd w2 = w * w;
      cd w4 = w2 * w2;
      G4 += (1.0 / w4).real();
      G6 += (1.0 / (w4 * w2)).real();
    }
  return {G4, G6};
}

PeriodicPotential make_m_gap(const EllipticParams& params, const MGapOptions& opt) {
  int ns = opt.samples;
  double pref = params.m * (params.m + 1) / 2.0;
  VecC v(ns);
  double vmax = 0.0, imax = 0.0;
  for (int j = 0; j < ns; ++j) {
    cd z{double(j) / ns, params.omega_prime};
    cd w = pref * weierstrass_p(z, params);
    vmax = std::max(vmax, std::abs(w));
    imax = std::max(imax, std::abs(w.imag()));
    v[j] = w.real();
  }
  if (imax > 1e-10 * std::max(1.0, vmax))
    throw Error(ErrorCode::InvalidConfig, "m-gap samples not real on the evaluation line");
  Fft fft(ns);
  fft.forward(v);
  int mv = std::min(opt.max_index, ns / 2 - 1);
  std::vector<cd> c(2 * mv + 1);
  for (int m = -mv; m <= mv; ++m) c[mv + m] = v[(m + ns) % ns] / double(ns);
  return make_from_coeffs(c, opt.floor, 1e-9 * std::max(1.0, vmax));
}

// ---------------------------------------------------------------------------
// External potentials

ExternalPotential ExternalPotential::linear(double alpha) {
  ExternalPotential w;
  w.kind = Kind::Linear;
  w.alpha = alpha;
  return w;
}

ExternalPotential ExternalPotential::cosine(double beta, double omega) {
  ExternalPotential w;
  w.kind = Kind::Cosine;
  w.beta = beta;
  w.omega = omega;
  return w;
}

ExternalPotential ExternalPotential::harmonic(double stiffness, double center) {
  ExternalPotential w;
  w.kind = Kind::Harmonic;
  w.omega = stiffness;
  w.center = center;
  return w;
}

double ExternalPotential::W(double q) const {
  switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Linear: return -alpha * q;
    case Kind::Cosine: return beta * std::cos(omega * q);
    case Kind::Harmonic: return 0.5 * omega * (q - center) * (q - center);
  }
  return 0.0;
}

double ExternalPotential::dW(double q) const {
  switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Linear: return -alpha;
    case Kind::Cosine: return -beta * omega * std::sin(omega * q);
    case Kind::Harmonic: return omega * (q - center);
  }
  return 0.0;
}

double ExternalPotential::d2W(double q) const {
  switch (kind) {
    case Kind::Zero:
    case Kind::Linear: return 0.0;
    case Kind::Cosine: return -beta * omega * omega * std::cos(omega * q);
    case Kind::Harmonic: return omega;
  }
  return 0.0;
}

double ExternalPotential::d3W(double q) const {
  if (kind == Kind::Cosine) return beta * omega * omega * omega * std::sin(omega * q);
  return 0.0;
}

double ExternalPotential::derivative_bound(double a, double b, int samples) const {
  double m = 0.0;
  for (int i = 0; i < samples; ++i) {
    double q = a + (b - a) * i / std::max(1, samples - 1);
    m = std::max({m, std::abs(W(q)), std::abs(dW(q)), std::abs(d2W(q)), std::abs(d3W(q))});
  }
  return m;
}

std::string ExternalPotential::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Zero: os << "zero"; break;
    case Kind::Linear: os << "linear(alpha=" << alpha << ")"; break;
    case Kind::Cosine: os << "cosine(beta=" << beta << ",omega=" << omega << ")"; break;
    case Kind::Harmonic: os << "harmonic(k=" << omega << ",center=" << center << ")"; break;
  }
  return os.str();
}

namespace {
double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}
}  // namespace

PeriodizedW::PeriodizedW(ExternalPotential W, double L, double collar)
    : W_(W), L_(L), collar_(collar), w_ref_(0.5 * (W.W(0.0) + W.W(L))) {
  if (collar <= 0.0 || 2.0 * collar >= L) throw Error(ErrorCode::InvalidConfig, "collar must lie in (0, L/2)");
}

double PeriodizedW::operator()(double x) const {
  double b = smooth_step(x / collar_) * smooth_step((L_ - x) / collar_);
  return b * W_.W(x) + (1.0 - b) * w_ref_;
}

}  // namespace bcl

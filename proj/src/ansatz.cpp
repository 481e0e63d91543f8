#include "bcl/ansatz.hpp"

#include <cmath>

#include "bcl/bloch.hpp"
#include "bcl/fft.hpp"

namespace bcl {

GridState GridState::make(int L, int K, int ppw) {
  if (L < 1 || K < 1 || ppw < 2) throw Error(ErrorCode::InvalidConfig, "bad grid parameters");
  GridState g;
  g.L = L;
  g.K = K;
  g.ppw = ppw;
  g.psi = VecC::Zero(g.N());
  return g;
}

VecC envelope_at(const Envelope& e, const std::vector<double>& y) {
  const int n = e.size();
  VecC c = e.v;
  cached_fft(n).forward(c);
  c /= static_cast<double>(n);
  const double dk = kTwoPi / (2.0 * e.Y);
  VecC out(y.size());
  for (size_t i = 0; i < y.size(); ++i) {
    double u = y[i] + e.Y;  // distance from the first sample
    // sum over k = -n/2 .. n/2-1 with a twiddle recurrence
    cd step = std::polar(1.0, dk * u);
    cd w = std::polar(1.0, -dk * u * (n / 2));
    cd s{};
    for (int m = -n / 2; m < n / 2; ++m) {
      s += c[(m + n) % n] * w;
      w *= step;
    }
    out[i] = s;
  }
  return out;
}

namespace {

// Envelope points that land on the x-grid, and the clipping check.
struct Footprint {
  std::vector<int> idx;
  std::vector<double> y;
};

Footprint footprint(const Envelope& e, double q, double eps, const GridState& g) {
  double se = std::sqrt(eps);
  // mass of the envelope that would fall outside [0, L]
  double out = 0.0, tot = e.v.squaredNorm();
  for (int j = 0; j < e.size(); ++j) {
    double x = q + se * e.y(j);
    if (x < 0.0 || x >= g.L) out += std::norm(e.v[j]);
  }
  if (tot > 0 && out / tot > 1e-8)
    throw Error(ErrorCode::EnvelopeClipped, "envelope mass fraction " + std::to_string(out / tot) + " outside domain");
  Footprint f;
  double xa = std::max(0.0, q - se * e.Y), xb = std::min(static_cast<double>(g.L), q + se * e.Y);
  int ja = std::max(0, static_cast<int>(std::ceil(xa / g.dx())));
  int jb = std::min(g.N() - 1, static_cast<int>(std::floor(xb / g.dx())));
  for (int j = ja; j <= jb; ++j) {
    f.idx.push_back(j);
    f.y.push_back((g.x(j) - q) / se);
  }
  return f;
}

void add_packet(GridState& out, const WavepacketParams& w, const Footprint& f, const VecC& env, const VecC& chi_vals,
                double scale) {
  const double eps = w.epsilon;
  const double pref = scale * std::pow(eps, -0.25);
  for (size_t i = 0; i < f.idx.size(); ++i) {
    int j = f.idx[i];
    double x = out.x(j);
    double phase = (w.S + w.p * (x - w.q)) / eps;
    out.psi[j] += pref * std::polar(1.0, phase) * env[i] * chi_vals[j % out.ppw];
  }
}

void check_eps(const WavepacketParams& w, const GridState& g) {
  if (std::abs(w.epsilon - g.epsilon()) > 1e-14) throw Error(ErrorCode::GridMismatch, "epsilon differs from grid");
}

}  // namespace

GridState assemble_wp0(const WavepacketParams& w, const GridState& grid) {
  check_eps(w, grid);
  GridState out = GridState::make(grid.L, grid.K, grid.ppw);
  out.t = grid.t;
  Footprint f = footprint(w.a0, w.q, w.epsilon, grid);
  VecC env = envelope_at(w.a0, f.y);
  // x/eps at grid points is j/ppw mod 1
  add_packet(out, w, f, env, chi_on_grid(w.chi, grid.ppw), 1.0);
  return out;
}

GridState assemble_wp1(const WavepacketParams& w, const GridState& grid) {
  check_eps(w, grid);
  GridState out = assemble_wp0(w, grid);
  Footprint f = footprint(w.a0, w.q, w.epsilon, grid);
  double se = std::sqrt(w.epsilon);
  if (w.a1) {
    VecC env1 = envelope_at(*w.a1, f.y);
    add_packet(out, w, f, env1, chi_on_grid(w.chi, grid.ppw), se);
  }
  if (w.dp_chi.size() > 0) {
    VecC envd = envelope_at(spectral_derivative(w.a0), f.y);
    add_packet(out, w, f, envd, chi_on_grid(w.dp_chi, grid.ppw), se);
  }
  return out;
}

GridState two_band_ansatz(const WavepacketParams& plus, const WavepacketParams& minus, const GridState& grid) {
  GridState out = assemble_wp1(plus, grid);
  GridState m = assemble_wp0(minus, grid);
  out.psi += std::sqrt(plus.epsilon) * m.psi;
  return out;
}

double predict_excited_mass(double dqW_star, cd coupling, double slope_gap, double incident_mass, double epsilon) {
  if (!(slope_gap > 0)) throw Error(ErrorCode::DegenerateSlopes, "slope gap must be positive");
  return kTwoPi * std::abs(dqW_star) * std::norm(coupling) / slope_gap * epsilon * incident_mass;
}

}  // namespace bcl

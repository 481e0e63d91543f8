#include "bcl/direct.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "bcl/fft.hpp"

namespace bcl {

MatC block_hamiltonian(const PeriodicPotential& V, int ppw, double p) {
  // rows m' in FFT order: 0..ppw/2-1, then -ppw/2..-1
  auto mode = [ppw](int r) { return r < ppw / 2 ? r : r - ppw; };
  std::vector<cd> alias(ppw, cd{});
  int mv = V.max_index();
  for (int m = -mv; m <= mv; ++m) alias[((m % ppw) + ppw) % ppw] += V.coeff(m);
  MatC H(ppw, ppw);
  for (int a = 0; a < ppw; ++a)
    for (int b = 0; b < ppw; ++b) H(a, b) = alias[((a - b) % ppw + ppw) % ppw];
  for (int a = 0; a < ppw; ++a) {
    double k = p + kTwoPi * mode(a);
    H(a, a) += 0.5 * k * k;
  }
  return H;
}

struct Propagator::Impl {
  int N, LK, ppw;
  double eps;
  VecC half_w;                 // exp(-i dt/2 W / eps) or with V for the standard scheme
  VecC kinetic;                // standard scheme multiplier
  std::vector<MatC> blocks;    // Bloch scheme block propagators
  Scheme scheme;
  const Fft* fft = nullptr;
};

Propagator::Propagator(const PeriodicPotential& V, const PeriodizedW& W, const GridState& grid,
                       const PropagatorConfig& cfg)
    : impl_(std::make_unique<Impl>()), dt_(cfg.dt) {
  if (std::abs(W.L() - grid.L) > 1e-12) throw Error(ErrorCode::GridMismatch, "W period differs from grid length");
  Impl& im = *impl_;
  im.N = grid.N();
  im.LK = grid.L * grid.K;
  im.ppw = grid.ppw;
  im.eps = grid.epsilon();
  im.scheme = cfg.scheme;
  im.fft = &cached_fft(im.N);
  const double eps = im.eps, dt = cfg.dt;

  VecR w(im.N), v(im.N);
  for (int j = 0; j < im.N; ++j) {
    w[j] = W(grid.x(j));
    v[j] = V(static_cast<double>(j % im.ppw) / im.ppw);
  }
  // constant offsets only rotate the global phase, so measure W about its mean
  double wmean = w.mean();
  double pot_max = 0.0;
  im.half_w.resize(im.N);
  for (int j = 0; j < im.N; ++j) {
    double pot = w[j] - wmean + (cfg.scheme == Scheme::Standard ? v[j] : 0.0);
    pot_max = std::max(pot_max, std::abs(pot));
    im.half_w[j] = std::polar(1.0, -0.5 * dt * (w[j] + (cfg.scheme == Scheme::Standard ? v[j] : 0.0)) / eps);
  }
  half_phase_ = 0.5 * dt * pot_max / eps;
  if (half_phase_ > 0.5)
    throw Error(ErrorCode::StabilityViolation,
                "dt*max|potential|/eps = " + std::to_string(half_phase_) + " rad per half step exceeds 0.5");

  if (cfg.scheme == Scheme::Standard) {
    VecR k = fft_wavenumbers(im.N, grid.L);
    im.kinetic.resize(im.N);
    for (int j = 0; j < im.N; ++j) im.kinetic[j] = std::polar(1.0, -dt * eps * 0.5 * k[j] * k[j]);
  } else {
    im.blocks.resize(im.LK);
    for (int j = 0; j < im.LK; ++j) {
      double p = kTwoPi * j / im.LK;
      Eigen::SelfAdjointEigenSolver<MatC> es(block_hamiltonian(V, im.ppw, p));
      VecC ph(im.ppw);
      for (int a = 0; a < im.ppw; ++a) ph[a] = std::polar(1.0, -dt * es.eigenvalues()[a] / eps);
      im.blocks[j] = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
    }
  }
}

Propagator::~Propagator() = default;

void Propagator::advance(GridState& psi, int n) const {
  const Impl& im = *impl_;
  VecC& u = psi.psi;
  VecC blk(im.ppw), out(im.ppw);
  const double inv = 1.0 / im.N;
  for (int s = 0; s < n; ++s) {
    u.array() *= im.half_w.array();
    im.fft->forward(u);
    if (im.scheme == Scheme::Standard) {
      u.array() *= im.kinetic.array();
    } else {
      for (int j = 0; j < im.LK; ++j) {
        for (int a = 0; a < im.ppw; ++a) blk[a] = u[j + im.LK * a];
        out.noalias() = im.blocks[j] * blk;
        for (int a = 0; a < im.ppw; ++a) u[j + im.LK * a] = out[a];
      }
    }
    im.fft->backward(u);
    u *= inv;
    u.array() *= im.half_w.array();
    psi.t += dt_;
  }
}

std::vector<GridState> propagate(const GridState& psi0, const PeriodicPotential& V, const PeriodizedW& W,
                                 const PropagatorConfig& cfg) {
  // each segment takes the largest step <= cfg.dt that lands on the snapshot
  std::unique_ptr<Propagator> prop;
  std::vector<GridState> snaps;
  GridState cur = psi0;
  for (double ts : cfg.snapshots) {
    double span = ts - cur.t;
    if (span < -1e-12) throw Error(ErrorCode::InvalidConfig, "snapshot times must ascend");
    int n = static_cast<int>(std::ceil(span / cfg.dt - 1e-9));
    if (n > 0) {
      double h = span / n;
      if (!prop || std::abs(prop->dt() - h) > 1e-14 * cfg.dt) {
        PropagatorConfig c = cfg;
        c.dt = h;
        prop = std::make_unique<Propagator>(V, W, cur, c);
      }
      prop->advance(cur, n);
    }
    cur.t = ts;
    snaps.push_back(cur);
  }
  return snaps;
}

L2Error l2_error(const GridState& psi, const GridState& ansatz) {
  if (!psi.same_grid(ansatz) || psi.psi.size() != ansatz.psi.size())
    throw Error(ErrorCode::GridMismatch, "states live on different grids");
  L2Error e;
  double dx = psi.dx();
  e.raw = std::sqrt((psi.psi - ansatz.psi).squaredNorm() * dx);
  cd ov = ansatz.psi.dot(psi.psi);  // <ansatz|psi>
  e.phase = std::arg(ov);
  e.phase_optimized = std::sqrt((psi.psi - std::polar(1.0, e.phase) * ansatz.psi).squaredNorm() * dx);
  return e;
}

namespace {

// Windowed state in Fourier space; throws WindowEmpty.
VecC windowed_spectrum(const GridState& psi, double x_lo, double x_hi) {
  const int N = psi.N();
  VecC u = VecC::Zero(N);
  int count = 0;
  for (int j = 0; j < N; ++j) {
    double x = psi.x(j);
    if (x >= x_lo && x < x_hi) {
      u[j] = psi.psi[j];
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::WindowEmpty, "band_mass window contains no grid points");
  cached_fft(N).forward(u);
  return u;
}

}  // namespace

double branch_mass(const GridState& psi, const PeriodicPotential& V, double x_lo, double x_hi,
                   const BranchSpec& branch) {
  const int N = psi.N(), LK = psi.L * psi.K, ppw = psi.ppw;
  VecC u = windowed_spectrum(psi, x_lo, x_hi);
  const double scale = static_cast<double>(psi.L) / (static_cast<double>(N) * N);
  VecC blk(ppw);
  double mass = 0.0;
  for (int j = 0; j < LK; ++j) {
    for (int a = 0; a < ppw; ++a) blk[a] = u[j + LK * a];
    if (blk.squaredNorm() == 0.0) continue;
    double p = kTwoPi * j / LK;
    double img = p + kTwoPi * std::round((branch.p_star - p) / kTwoPi);
    Eigen::SelfAdjointEigenSolver<MatC> es(block_hamiltonian(V, ppw, p));
    const int lo = branch.n - 1;
    double E = std::abs(es.eigenvalues()[lo]);
    if (branch.smooth() && lo + 1 < ppw && es.eigenvalues()[lo + 1] - es.eigenvalues()[lo] < 1e-9 * (1.0 + E)) {
      // degenerate block: split the pair by the slope operator like the crossing basis
      MatC Us = es.eigenvectors().middleCols(lo, 2);
      VecR d(ppw);
      for (int a = 0; a < ppw; ++a) d[a] = p + kTwoPi * (a < ppw / 2 ? a : a - ppw);
      MatC B = Us.adjoint() * d.asDiagonal() * Us;
      Eigen::SelfAdjointEigenSolver<MatC> sl(0.5 * (B + B.adjoint()));
      VecC chi = Us * sl.eigenvectors().col(branch.kind == BranchSpec::Kind::Minus ? 0 : 1);
      mass += std::norm(chi.dot(blk)) * scale;
      continue;
    }
    mass += std::norm(es.eigenvectors().col(branch.index_at(img)).dot(blk)) * scale;
  }
  return mass;
}

std::vector<double> band_mass(const GridState& psi, const PeriodicPotential& V, double x_lo, double x_hi,
                              int n_bands) {
  const int N = psi.N(), LK = psi.L * psi.K, ppw = psi.ppw;
  VecC u = windowed_spectrum(psi, x_lo, x_hi);
  n_bands = std::min(n_bands, ppw);
  std::vector<double> mass(n_bands + 1, 0.0);
  // Parseval: sum |psi|^2 dx = (L / N^2) sum |psi_hat|^2
  const double scale = static_cast<double>(psi.L) / (static_cast<double>(N) * N);
  VecC blk(ppw);
  for (int j = 0; j < LK; ++j) {
    for (int a = 0; a < ppw; ++a) blk[a] = u[j + LK * a];
    double bn = blk.squaredNorm();
    if (bn == 0.0) continue;
    Eigen::SelfAdjointEigenSolver<MatC> es(block_hamiltonian(V, ppw, kTwoPi * j / LK));
    VecC c = es.eigenvectors().adjoint() * blk;
    double acc = 0.0;
    for (int n = 0; n < n_bands; ++n) {
      double m = std::norm(c[n]) * scale;
      mass[n] += m;
      acc += m;
    }
    mass[n_bands] += bn * scale - acc;
  }
  return mass;
}

}  // namespace bcl

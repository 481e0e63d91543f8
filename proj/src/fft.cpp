#include "bcl/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace bcl {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Fft::Fft(int n) : n_(n) {
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto* buf = fftw_alloc_complex(static_cast<size_t>(n));
  fwd_ = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  bwd_ = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
}

Fft::~Fft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

void Fft::forward(cd* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(fwd_), p, p);
}

void Fft::backward(cd* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(bwd_), p, p);
}

const Fft& cached_fft(int n) {
  thread_local std::map<int, std::unique_ptr<Fft>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Fft>(n);
  return *slot;
}

VecR fft_wavenumbers(int n, double L) {
  VecR k(n);
  for (int j = 0; j < n; ++j) {
    int jj = (j <= n / 2 - 1 || n == 1) ? j : j - n;
    if (n % 2 == 1) jj = (j <= n / 2) ? j : j - n;
    k[j] = kTwoPi * jj / L;
  }
  return k;
}

}  // namespace bcl

#pragma once

#include <memory>

#include "bcl/common.hpp"

namespace bcl {

// Unnormalized complex DFT of fixed size backed by FFTW.
// forward: X_k = sum_j x_j e^{-2 pi i jk/n}; backward has the + sign.
class Fft {
 public:
  explicit Fft(int n);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  int size() const { return n_; }
  void forward(cd* data) const;
  void backward(cd* data) const;
  void forward(VecC& v) const { forward(v.data()); }
  void backward(VecC& v) const { backward(v.data()); }

 private:
  int n_;
  void* fwd_;
  void* bwd_;
};

// Per-thread plan cache.
const Fft& cached_fft(int n);

// Angular wavenumbers 2 pi j / L in FFT order for n samples on a period L.
VecR fft_wavenumbers(int n, double L);

}  // namespace bcl

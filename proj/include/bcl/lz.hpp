#pragma once

#include <functional>
#include <vector>

#include "bcl/common.hpp"

namespace bcl {

// Two-level crossing model in the adiabatic basis:
// c+' = F c-, c-' = -conj(F) c+, F = -conj(kappa(t)) exp(i Phi(t) / eps),
// Phi(t) = int_{t*}^t (E+ - E-).
struct LZModel {
  std::function<double(double)> E_plus, E_minus;
  std::function<cd(double)> coupling;  // <chi_-|d/dt chi_+>
  std::function<double(double)> phase;  // Phi(t); numerical quadrature when empty
  double t_star = 0.0;
  double epsilon = 1e-3;
  cd c_plus0{1.0, 0.0}, c_minus0{0.0, 0.0};
  double dEdt_plus_star = 0.0, dEdt_minus_star = 0.0;  // slopes at t*

  // E+- = +-(t - t*)/2 * rate, constant coupling; phase in closed form.
  static LZModel linear(double t_star, double rate, cd coupling, double epsilon);
};

struct LZPath {
  std::vector<double> t;
  std::vector<cd> c_plus, c_minus;
  double max_norm_drift = 0.0;
};

// Classical RK4 with fixed step dt; `record_every` thins the stored path.
LZPath simulate(const LZModel& model, double t0, double t1, double dt, int record_every = 1);

// 2 pi |kappa(t*)|^2 eps |c+(0)|^2 / |dE+/dt - dE-/dt| at t*.
double predict(const LZModel& model);

}  // namespace bcl

#include "fit/schedule.hpp"

#include <string>

#include "fit/error.hpp"

namespace fit::diffusion {

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw ParameterError("noise schedule needs at least one step");
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end)) {
    throw ParameterError("beta endpoints must satisfy 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule sched;
  sched.beta_start_ = beta_start;
  sched.beta_end_ = beta_end;
  sched.alpha_bar_.reserve(steps);
  double prod = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / (steps - 1);
    const double beta = beta_start + (beta_end - beta_start) * frac;
    prod *= 1.0 - beta;
    sched.alpha_bar_.push_back(prod);
  }
  return sched;
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > steps()) {
    throw RangeError("timestep " + std::to_string(t) + " outside [0, " + std::to_string(steps()) +
                     "]");
  }
  return t == 0 ? 1.0 : alpha_bar_[t - 1];
}

}  // namespace fit::diffusion

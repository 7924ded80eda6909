#pragma once

#include <vector>

namespace fit::diffusion {

// Cumulative signal coefficients alpha_bar_t for t = 1..T, built from a linear
// beta schedule. alpha_bar(0) is defined as 1.
class NoiseSchedule {
 public:
  static constexpr int kDefaultSteps = 1000;
  static constexpr double kDefaultBetaStart = 1e-4;
  static constexpr double kDefaultBetaEnd = 0.02;

  static NoiseSchedule linear(int steps = kDefaultSteps, double beta_start = kDefaultBetaStart,
                              double beta_end = kDefaultBetaEnd);

  int steps() const { return static_cast<int>(alpha_bar_.size()); }
  double beta_start() const { return beta_start_; }
  double beta_end() const { return beta_end_; }

  // Throws RangeError unless 0 <= t <= T.
  double alpha_bar(int t) const;

  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

 private:
  NoiseSchedule() = default;

  double beta_start_ = 0.0;
  double beta_end_ = 0.0;
  std::vector<double> alpha_bar_;
};

}  // namespace fit::diffusion

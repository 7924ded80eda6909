#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "fit/imaging.hpp"
#include "fit/latent.hpp"
#include "fit/schedule.hpp"

namespace fit::diffusion {

using latent::LatentGrid;

class Denoiser {
 public:
  virtual ~Denoiser() = default;
  // Estimate of the clean latent given the noisy latent at timestep t >= 1.
  virtual LatentGrid predict_x0(const LatentGrid& z_t, int t) const = 0;
};

// Exact posterior mean E[x0 | z_t] when x0 is drawn uniformly from a finite
// set of clean latents and z_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps.
// Weights are softmax_i(-|z_t - sqrt(ab_t) x_i|^2 / (2 (1 - ab_t))).
class EmpiricalDenoiser final : public Denoiser {
 public:
  EmpiricalDenoiser(std::vector<LatentGrid> points, const NoiseSchedule& sched);

  LatentGrid predict_x0(const LatentGrid& z_t, int t) const override;

  // Posterior weights over the support points, summing to 1.
  std::vector<double> weights(const LatentGrid& z_t, int t) const;

  const std::vector<LatentGrid>& points() const { return points_; }

 private:
  std::vector<LatentGrid> points_;
  std::vector<double> squared_norms_;
  NoiseSchedule sched_;
};

// Exact posterior mean when x0 ~ N(mean, cov) with cov fitted to a set of
// clean latents: the sample covariance restricted to the span of the centered
// data, plus `floor_variance` on the orthogonal complement. The posterior mean
// is linear in z_t, so the denoiser blends rather than snaps to data points.
class GaussianDenoiser final : public Denoiser {
 public:
  GaussianDenoiser(const std::vector<LatentGrid>& points, const NoiseSchedule& sched,
                   double floor_variance = 1e-4);

  LatentGrid predict_x0(const LatentGrid& z_t, int t) const override;

  const std::vector<double>& variances() const { return variances_; }
  double floor_variance() const { return floor_variance_; }
  const LatentGrid& mean() const { return mean_; }
  // Orthonormal principal directions, one per entry of variances().
  const std::vector<LatentGrid>& directions() const { return directions_; }

 private:
  LatentGrid mean_;
  std::vector<LatentGrid> directions_;
  std::vector<double> variances_;
  double floor_variance_;
  NoiseSchedule sched_;
};

enum class GuidanceMode { interleaved, end_only, off };
// Where the pooling sits relative to the DDIM update of each iteration.
enum class PoolOrder { before_step, after_step };

std::string_view to_string(GuidanceMode mode);
GuidanceMode parse_guidance_mode(std::string_view text);  // "interleaved", "end-only", "off"
std::string_view to_string(PoolOrder order);
PoolOrder parse_pool_order(std::string_view text);  // "before", "after"

struct GuidanceConfig {
  double w = 0.25;
  double d = 1.0;
  bool use_similarity = true;
  bool use_decay = true;
  imaging::Symmetrizer symmetrizer;
  GuidanceMode mode = GuidanceMode::interleaved;
  PoolOrder order = PoolOrder::before_step;

  // Throws ParameterError on negative weights.
  void validate() const;
};

// lambda = clamp(s * w / step_index^d, 0, 1), where the similarity and decay
// factors are replaced by 1 when disabled.
double pooling_weight(double similarity, const GuidanceConfig& cfg, int step_index);

LatentGrid ddim_step(const LatentGrid& z_t, int t, int t_prev, const Denoiser& den,
                     const NoiseSchedule& sched);

struct PoolResult {
  LatentGrid latent;
  double lambda = 0.0;
  double similarity = 1.0;
};

// One pooling step: decode, symmetrize, re-encode and blend toward the
// symmetrized latent with weight lambda.
PoolResult regularize_pool(const LatentGrid& z_t, int step_index, const GuidanceConfig& cfg,
                           const latent::Codec& codec);

// `steps` + 1 evenly spaced integer timesteps from t_start down to 0.
// Throws ParameterError if they would not be strictly decreasing.
std::vector<int> timestep_ladder(int t_start, int steps);

struct StepTrace {
  int step_index = 0;
  int t = 0;
  int t_prev = 0;
  double lambda = 0.0;
  double similarity = 1.0;
};

struct SampleResult {
  imaging::ImageGrid image;
  LatentGrid latent;
  std::vector<StepTrace> trace;
};

SampleResult guided_sample(const LatentGrid& z_start, int t_start, int steps, const Denoiser& den,
                           const NoiseSchedule& sched, const GuidanceConfig& cfg,
                           const latent::Codec& codec);

struct InterpolationSettings {
  double alpha = 0.5;
  int t_start = 600;
  int steps = 50;
  std::uint64_t seed = 0;
};

SampleResult interpolate_pair(const imaging::ImageGrid& img_a, const imaging::ImageGrid& img_b,
                              const GuidanceConfig& cfg, const latent::Codec& codec,
                              const Denoiser& den, const NoiseSchedule& sched,
                              const InterpolationSettings& settings);

}  // namespace fit::diffusion

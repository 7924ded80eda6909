#include "fit/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "fit/error.hpp"

namespace fit::diffusion {

using latent::cosine_similarity_norm;
using latent::linear_combination;

EmpiricalDenoiser::EmpiricalDenoiser(std::vector<LatentGrid> points, const NoiseSchedule& sched)
    : points_(std::move(points)), sched_(sched) {
  if (points_.empty()) throw InsufficientDataError("empirical denoiser needs at least one point");
  for (const auto& p : points_) {
    latent::require_same_shape(points_.front(), p, "EmpiricalDenoiser");
  }
}

std::vector<double> EmpiricalDenoiser::weights(const LatentGrid& z_t, int t) const {
  latent::require_same_shape(points_.front(), z_t, "EmpiricalDenoiser::predict_x0");
  if (t < 1 || t > sched_.steps()) {
    throw RangeError("denoiser timestep " + std::to_string(t) + " outside [1, " +
                     std::to_string(sched_.steps()) + "]");
  }
  const double ab = sched_.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double inv_two_var = 1.0 / (2.0 * (1.0 - ab));

  std::vector<double> logits(points_.size());
  const auto z = z_t.data();
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto x = points_[i].data();
    double dist2 = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double diff = z[j] - signal * x[j];
      dist2 += diff * diff;
    }
    logits[i] = -dist2 * inv_two_var;
  }
  // log-sum-exp
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& l : logits) {
    l = std::exp(l - max_logit);
    total += l;
  }
  for (double& l : logits) l /= total;
  return logits;
}

LatentGrid EmpiricalDenoiser::predict_x0(const LatentGrid& z_t, int t) const {
  const auto w = weights(z_t, t);
  LatentGrid out(z_t.shape());
  auto dst = out.data();
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (w[i] == 0.0) continue;
    const auto x = points_[i].data();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w[i] * x[j];
  }
  return out;
}

GaussianDenoiser::GaussianDenoiser(const std::vector<LatentGrid>& points,
                                   const NoiseSchedule& sched, double floor_variance)
    : floor_variance_(floor_variance), sched_(sched) {
  if (points.size() < 2) throw InsufficientDataError("gaussian denoiser needs at least two points");
  if (!(floor_variance > 0.0)) throw ParameterError("floor_variance must be positive");
  const auto n = static_cast<Eigen::Index>(points.size());
  const auto dim = static_cast<Eigen::Index>(points.front().size());
  Eigen::MatrixXd x(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    latent::require_same_shape(points.front(), points[i], "GaussianDenoiser");
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(points[i].data().data(), dim);
  }
  const Eigen::RowVectorXd mu = x.colwise().mean();
  x.rowwise() -= mu;
  mean_ = LatentGrid(points.front().shape(), std::vector<double>(mu.data(), mu.data() + dim));

  // Principal directions from the n x n Gram matrix.
  const Eigen::MatrixXd gram = x * x.transpose() / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) throw DomainError("gaussian denoiser: eigensolver failed");
  const double top = solver.eigenvalues().maxCoeff();
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    const double var = solver.eigenvalues()[k];
    if (!(var > 1e-10 * top)) continue;
    Eigen::VectorXd u = x.transpose() * solver.eigenvectors().col(k);
    u /= u.norm();
    directions_.emplace_back(points.front().shape(), std::vector<double>(u.data(), u.data() + dim));
    variances_.push_back(var + floor_variance_);
  }
}

LatentGrid GaussianDenoiser::predict_x0(const LatentGrid& z_t, int t) const {
  latent::require_same_shape(mean_, z_t, "GaussianDenoiser::predict_x0");
  if (t < 1 || t > sched_.steps()) {
    throw RangeError("denoiser timestep " + std::to_string(t) + " outside [1, " +
                     std::to_string(sched_.steps()) + "]");
  }
  const double ab = sched_.alpha_bar(t);
  const double a = std::sqrt(ab);
  const double noise_var = 1.0 - ab;
  auto gain = [&](double var) { return a * var / (ab * var + noise_var); };

  // residual = z_t - a * mean; x0 = mean + g_floor * residual + sum_k (g_k - g_floor) u_k u_k^T residual
  LatentGrid residual = linear_combination(1.0, z_t, -a, mean_);
  const double g_floor = gain(floor_variance_);
  LatentGrid out = linear_combination(1.0, mean_, g_floor, residual);
  for (std::size_t k = 0; k < directions_.size(); ++k) {
    const double coeff = (gain(variances_[k]) - g_floor) * directions_[k].dot(residual);
    const auto u = directions_[k].data();
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += coeff * u[j];
  }
  return out;
}

std::string_view to_string(GuidanceMode mode) {
  switch (mode) {
    case GuidanceMode::end_only:
      return "end-only";
    case GuidanceMode::off:
      return "off";
    case GuidanceMode::interleaved:
      break;
  }
  return "interleaved";
}

GuidanceMode parse_guidance_mode(std::string_view text) {
  if (text == "interleaved") return GuidanceMode::interleaved;
  if (text == "end-only" || text == "end_only") return GuidanceMode::end_only;
  if (text == "off") return GuidanceMode::off;
  throw ParameterError("unknown guidance mode '" + std::string(text) +
                       "' (expected interleaved, end-only or off)");
}

std::string_view to_string(PoolOrder order) {
  return order == PoolOrder::after_step ? "after" : "before";
}

PoolOrder parse_pool_order(std::string_view text) {
  if (text == "before") return PoolOrder::before_step;
  if (text == "after") return PoolOrder::after_step;
  throw ParameterError("unknown pool order '" + std::string(text) + "' (expected before or after)");
}

void GuidanceConfig::validate() const {
  if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("guidance weight w must be >= 0");
  if (!(d >= 0.0) || !std::isfinite(d)) throw ParameterError("decay exponent d must be >= 0");
  symmetrizer.validate();
}

double pooling_weight(double similarity, const GuidanceConfig& cfg, int step_index) {
  if (step_index < 1) throw ParameterError("step_index must be >= 1");
  const double s = cfg.use_similarity ? similarity : 1.0;
  const double decay = cfg.use_decay ? std::pow(static_cast<double>(step_index), cfg.d) : 1.0;
  return std::clamp(s * cfg.w / decay, 0.0, 1.0);
}

LatentGrid ddim_step(const LatentGrid& z_t, int t, int t_prev, const Denoiser& den,
                     const NoiseSchedule& sched) {
  if (t_prev >= t || t_prev < 0) {
    throw OrderingError("ddim_step requires t > t_prev >= 0, got t=" + std::to_string(t) +
                        " t_prev=" + std::to_string(t_prev));
  }
  const double ab = sched.alpha_bar(t);
  const double ab_prev = sched.alpha_bar(t_prev);
  const LatentGrid x0 = den.predict_x0(z_t, t);
  latent::require_same_shape(z_t, x0, "ddim_step");

  const double signal = std::sqrt(ab);
  const double inv_noise = 1.0 / std::sqrt(1.0 - ab);
  const double signal_prev = std::sqrt(ab_prev);
  const double noise_prev = std::sqrt(1.0 - ab_prev);
  LatentGrid out(z_t.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double eps = (z_t[i] - signal * x0[i]) * inv_noise;
    out[i] = signal_prev * x0[i] + noise_prev * eps;
  }
  return out;
}

PoolResult regularize_pool(const LatentGrid& z_t, int step_index, const GuidanceConfig& cfg,
                           const latent::Codec& codec) {
  if (cfg.mode != GuidanceMode::interleaved) {
    throw ParameterError("regularize_pool requires interleaved guidance");
  }
  if (step_index < 1) throw ParameterError("step_index must be >= 1");
  if (cfg.symmetrizer.kind == imaging::SymmetrizerKind::none || cfg.w == 0.0) {
    return {z_t, 0.0, 1.0};
  }
  const imaging::ImageGrid x_t = codec.decode(z_t);
  const LatentGrid z_r = codec.encode(cfg.symmetrizer.project(x_t));
  const double s = cfg.use_similarity ? cosine_similarity_norm(z_t, z_r) : 1.0;
  const double lambda = pooling_weight(s, cfg, step_index);
  // z + lambda * (z_r - z): a symmetric z_t comes back unchanged.
  LatentGrid pooled = z_t;
  for (std::size_t j = 0; j < pooled.size(); ++j) pooled[j] += lambda * (z_r[j] - z_t[j]);
  return {std::move(pooled), lambda, s};
}

std::vector<int> timestep_ladder(int t_start, int steps) {
  if (steps < 1) throw ParameterError("steps must be >= 1");
  if (t_start < steps) {
    throw ParameterError("t_start (" + std::to_string(t_start) + ") must be at least steps (" +
                         std::to_string(steps) + ") for a strictly decreasing ladder");
  }
  std::vector<int> ladder(steps + 1);
  for (int i = 0; i <= steps; ++i) {
    ladder[i] = static_cast<int>(
        std::lround(static_cast<double>(t_start) * (steps - i) / static_cast<double>(steps)));
  }
  return ladder;
}

SampleResult guided_sample(const LatentGrid& z_start, int t_start, int steps, const Denoiser& den,
                           const NoiseSchedule& sched, const GuidanceConfig& cfg,
                           const latent::Codec& codec) {
  cfg.validate();
  if (t_start > sched.steps()) {
    throw RangeError("t_start " + std::to_string(t_start) + " exceeds schedule length " +
                     std::to_string(sched.steps()));
  }
  const auto ladder = timestep_ladder(t_start, steps);
  const bool interleaved = cfg.mode == GuidanceMode::interleaved;

  SampleResult result;
  result.trace.reserve(steps);
  LatentGrid z = z_start;
  for (int i = 1; i <= steps; ++i) {
    StepTrace step{i, ladder[i - 1], ladder[i], 0.0, 1.0};
    auto pool = [&] {
      auto pooled = regularize_pool(z, i, cfg, codec);
      z = std::move(pooled.latent);
      step.lambda = pooled.lambda;
      step.similarity = pooled.similarity;
    };
    if (interleaved && cfg.order == PoolOrder::before_step) pool();
    z = ddim_step(z, step.t, step.t_prev, den, sched);
    if (interleaved && cfg.order == PoolOrder::after_step) pool();
    result.trace.push_back(step);
  }

  result.image = codec.decode(z);
  if (cfg.mode == GuidanceMode::end_only) result.image = cfg.symmetrizer.project(result.image);
  result.image.clamp();
  result.latent = std::move(z);
  return result;
}

SampleResult interpolate_pair(const imaging::ImageGrid& img_a, const imaging::ImageGrid& img_b,
                              const GuidanceConfig& cfg, const latent::Codec& codec,
                              const Denoiser& den, const NoiseSchedule& sched,
                              const InterpolationSettings& settings) {
  if (!img_a.same_shape(img_b)) {
    throw DimensionError("interpolate_pair: reference images differ in size");
  }
  const auto z0a = codec.encode(img_a);
  const auto z0b = codec.encode(img_b);
  const auto [za, zb] = latent::add_shared_noise(z0a, z0b, settings.t_start, sched, settings.seed);
  const auto z = latent::slerp(za, zb, settings.alpha);
  return guided_sample(z, settings.t_start, settings.steps, den, sched, cfg, codec);
}

}  // namespace fit::diffusion

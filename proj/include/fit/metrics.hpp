#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fit/imaging.hpp"

namespace fit::metrics {

// 1 - |R(img) - img|_2 / sqrt(H*W*C). Both operands are zeroed outside the
// symmetrizer's disk before differencing.
double symmetry_score(const imaging::ImageGrid& img, const imaging::Symmetrizer& sym);

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  Eigen::Index dimension() const { return mean.size(); }
};

// Sample mean and unbiased (n - 1) covariance. Needs at least two vectors.
GaussianStats fit_gaussian(std::span<const std::vector<double>> features);

// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)), clamped at zero.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::vector<double> extract(const imaging::ImageGrid& img) const = 0;
  virtual int dimension() const = 0;
  virtual std::string name() const = 0;
};

// Grayscale, bilinear resize to side x side, flattened.
class DownsampleFeatures final : public FeatureExtractor {
 public:
  explicit DownsampleFeatures(int side = 8) : side_(side) {}
  std::vector<double> extract(const imaging::ImageGrid& img) const override;
  int dimension() const override { return side_ * side_; }
  std::string name() const override { return "downsample"; }

 private:
  int side_;
};

// Fixed seeded Gaussian projection of the raw pixels, scaled by 1/sqrt(D).
class RandomProjFeatures final : public FeatureExtractor {
 public:
  RandomProjFeatures(int input_dimension, std::uint64_t seed, int features = 64);
  std::vector<double> extract(const imaging::ImageGrid& img) const override;
  int dimension() const override { return features_; }
  std::string name() const override { return "randproj"; }

 private:
  int input_dimension_;
  int features_;
  Eigen::MatrixXd projection_;
};

std::unique_ptr<FeatureExtractor> make_feature_extractor(const std::string& name,
                                                         int input_dimension,
                                                         std::uint64_t seed = 0);

// Features of every image, then fit_gaussian.
GaussianStats corpus_stats(std::span<const imaging::ImageGrid> images,
                           const FeatureExtractor& features);

double mean(std::span<const double> values);

}  // namespace fit::metrics

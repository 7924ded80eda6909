#include "fit/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "fit/error.hpp"
#include "fit/random.hpp"

namespace fit::metrics {

using imaging::ImageGrid;

namespace {

constexpr double kEigenClip = 1e-6;

// Symmetric PSD square root; eigenvalues in [-kEigenClip, 0) clip to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw DomainError("eigendecomposition failed");
  Eigen::VectorXd vals = solver.eigenvalues();
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals[i] < -kEigenClip) {
      throw DomainError("covariance has eigenvalue " + std::to_string(vals[i]) +
                        " below the PSD tolerance");
    }
    vals[i] = std::sqrt(std::max(vals[i], 0.0));
  }
  return solver.eigenvectors() * vals.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace

double symmetry_score(const ImageGrid& img, const imaging::Symmetrizer& sym) {
  if (sym.kind == imaging::SymmetrizerKind::none) return 1.0;
  const ImageGrid projected = sym.apply(img);
  const ImageGrid masked = imaging::mask_disk(img, sym.spec);
  double sq = 0.0;
  const auto a = projected.data();
  const auto b = masked.data();
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return 1.0 - std::sqrt(sq) / std::sqrt(static_cast<double>(img.size()));
}

GaussianStats fit_gaussian(std::span<const std::vector<double>> features) {
  if (features.size() < 2) {
    throw InsufficientDataError("fit_gaussian needs at least 2 feature vectors, got " +
                                std::to_string(features.size()));
  }
  const auto dim = static_cast<Eigen::Index>(features.front().size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(features.size()), dim);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (static_cast<Eigen::Index>(features[i].size()) != dim) {
      throw DimensionError("fit_gaussian: feature vectors differ in dimension");
    }
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (!std::isfinite(features[i][j])) throw DomainError("fit_gaussian: non-finite feature");
      x(static_cast<Eigen::Index>(i), j) = features[i][j];
    }
  }
  GaussianStats stats;
  stats.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - stats.mean.transpose();
  stats.cov = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
  return stats;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.dimension() != b.dimension() || a.cov.rows() != a.dimension() ||
      b.cov.rows() != b.dimension() || a.cov.cols() != a.dimension() ||
      b.cov.cols() != b.dimension()) {
    throw DimensionError("frechet_distance: dimension mismatch");
  }
  if (!a.mean.allFinite() || !b.mean.allFinite() || !a.cov.allFinite() || !b.cov.allFinite()) {
    throw DomainError("frechet_distance: non-finite statistics");
  }
  const Eigen::MatrixXd sqrt_a = psd_sqrt(a.cov);
  const Eigen::MatrixXd inner = sqrt_a * b.cov * sqrt_a;
  // Tr((S_a S_b)^(1/2)) = Tr((S_a^(1/2) S_b S_a^(1/2))^(1/2)), the latter symmetric.
  const double trace_sqrt = psd_sqrt(inner).trace();
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double d = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * trace_sqrt;
  if (!std::isfinite(d)) throw DomainError("frechet_distance: non-finite result");
  return std::max(d, 0.0);
}

std::vector<double> DownsampleFeatures::extract(const ImageGrid& img) const {
  std::vector<double> out(static_cast<std::size_t>(side_) * side_);
  const double scale_r = static_cast<double>(img.height()) / side_;
  const double scale_c = static_cast<double>(img.width()) / side_;
  auto gray = [&](int r, int c) {
    r = std::clamp(r, 0, img.height() - 1);
    c = std::clamp(c, 0, img.width() - 1);
    double sum = 0.0;
    for (int ch = 0; ch < img.channels(); ++ch) sum += img(ch, r, c);
    return sum / img.channels();
  };
  for (int i = 0; i < side_; ++i) {
    const double sr = (i + 0.5) * scale_r - 0.5;
    const int r0 = static_cast<int>(std::floor(sr));
    const double fr = sr - r0;
    for (int j = 0; j < side_; ++j) {
      const double sc = (j + 0.5) * scale_c - 0.5;
      const int c0 = static_cast<int>(std::floor(sc));
      const double fc = sc - c0;
      out[static_cast<std::size_t>(i) * side_ + j] =
          (1 - fr) * ((1 - fc) * gray(r0, c0) + fc * gray(r0, c0 + 1)) +
          fr * ((1 - fc) * gray(r0 + 1, c0) + fc * gray(r0 + 1, c0 + 1));
    }
  }
  return out;
}

RandomProjFeatures::RandomProjFeatures(int input_dimension, std::uint64_t seed, int features)
    : input_dimension_(input_dimension), features_(features), projection_(features, input_dimension) {
  if (input_dimension < 1 || features < 1) throw ParameterError("projection sizes must be positive");
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(input_dimension));
  for (Eigen::Index i = 0; i < projection_.rows(); ++i) {
    for (Eigen::Index j = 0; j < projection_.cols(); ++j) projection_(i, j) = scale * rng.normal();
  }
}

std::vector<double> RandomProjFeatures::extract(const ImageGrid& img) const {
  if (static_cast<int>(img.size()) != input_dimension_) {
    throw DimensionError("random projection expects " + std::to_string(input_dimension_) +
                         " pixels, got " + std::to_string(img.size()));
  }
  const auto pixels = img.data();
  const Eigen::Map<const Eigen::VectorXd> x(pixels.data(), static_cast<Eigen::Index>(pixels.size()));
  const Eigen::VectorXd y = projection_ * x;
  return {y.data(), y.data() + y.size()};
}

std::unique_ptr<FeatureExtractor> make_feature_extractor(const std::string& name,
                                                         int input_dimension, std::uint64_t seed) {
  if (name == "downsample") return std::make_unique<DownsampleFeatures>();
  if (name == "randproj") return std::make_unique<RandomProjFeatures>(input_dimension, seed);
  throw ParameterError("unknown feature extractor '" + name + "' (expected downsample or randproj)");
}

GaussianStats corpus_stats(std::span<const ImageGrid> images, const FeatureExtractor& features) {
  std::vector<std::vector<double>> rows;
  rows.reserve(images.size());
  for (const auto& img : images) rows.push_back(features.extract(img));
  return fit_gaussian(rows);
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace fit::metrics

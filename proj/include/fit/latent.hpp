#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fit/imaging.hpp"
#include "fit/schedule.hpp"

namespace fit::latent {

struct LatentShape {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t size() const { return static_cast<std::size_t>(height) * width * channels; }
  bool operator==(const LatentShape&) const = default;
};

// Flat real vector with (H, W, C) metadata, planar like ImageGrid.
class LatentGrid {
 public:
  LatentGrid() = default;
  explicit LatentGrid(LatentShape shape, double fill = 0.0);
  // Throws DimensionError on a length mismatch and DomainError on non-finite data.
  LatentGrid(LatentShape shape, std::vector<double> data);

  const LatentShape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  double dot(const LatentGrid& other) const;
  double norm() const;

  bool operator==(const LatentGrid&) const = default;

 private:
  LatentShape shape_;
  std::vector<double> data_;
};

void require_same_shape(const LatentGrid& a, const LatentGrid& b, const char* what);

// a*x + b*y, elementwise.
LatentGrid linear_combination(double a, const LatentGrid& x, double b, const LatentGrid& y);

// Maps images to latents and back (the E and D of the pooling step). Latent
// values live in [-1, 1] for in-range images: pixel p maps to 2p - 1.
class Codec {
 public:
  virtual ~Codec() = default;
  virtual LatentGrid encode(const imaging::ImageGrid& img) const = 0;
  // Output is clamped to [0, 1].
  virtual imaging::ImageGrid decode(const LatentGrid& z) const = 0;
  virtual LatentShape latent_shape(int height, int width, int channels) const = 0;
  virtual std::string name() const = 0;
};

class IdentityCodec final : public Codec {
 public:
  LatentGrid encode(const imaging::ImageGrid& img) const override;
  imaging::ImageGrid decode(const LatentGrid& z) const override;
  LatentShape latent_shape(int height, int width, int channels) const override;
  std::string name() const override { return "identity"; }
};

// 2x2 average-pool encoder with a bilinear (half-pixel aligned, edge-clamped)
// 2x upsampling decoder. The decoder preserves the mean of the latent.
class PoolCodec final : public Codec {
 public:
  LatentGrid encode(const imaging::ImageGrid& img) const override;
  imaging::ImageGrid decode(const LatentGrid& z) const override;
  LatentShape latent_shape(int height, int width, int channels) const override;
  std::string name() const override { return "pool"; }
};

// Accepts "identity" or "pool". Throws ParameterError.
std::unique_ptr<Codec> make_codec(const std::string& name);

inline constexpr double kSlerpDegenerateAngle = 1e-5;

// Spherical linear interpolation. Falls back to linear interpolation when the
// angle between a and b is within kSlerpDegenerateAngle of 0 or pi.
LatentGrid slerp(const LatentGrid& a, const LatentGrid& b, double alpha);

// Noises both latents to timestep t with one shared standard-normal draw.
std::pair<LatentGrid, LatentGrid> add_shared_noise(const LatentGrid& z0a, const LatentGrid& z0b,
                                                   int t, const diffusion::NoiseSchedule& sched,
                                                   std::uint64_t seed);

// Cosine similarity rescaled from [-1, 1] to [0, 1].
double cosine_similarity_norm(const LatentGrid& a, const LatentGrid& b);

}  // namespace fit::latent

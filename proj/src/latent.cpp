#include "fit/latent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fit/error.hpp"
#include "fit/random.hpp"

namespace fit::latent {

using imaging::ImageGrid;

LatentGrid::LatentGrid(LatentShape shape, double fill) : shape_(shape), data_(shape.size(), fill) {
  if (!std::isfinite(fill)) throw DomainError("latent fill must be finite");
}

LatentGrid::LatentGrid(LatentShape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw DimensionError("latent data length " + std::to_string(data_.size()) +
                         " does not match shape size " + std::to_string(shape_.size()));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw DomainError("latent contains a non-finite value");
  }
}

double LatentGrid::dot(const LatentGrid& other) const {
  require_same_shape(*this, other, "dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) sum += data_[i] * other.data_[i];
  return sum;
}

double LatentGrid::norm() const { return std::sqrt(dot(*this)); }

void require_same_shape(const LatentGrid& a, const LatentGrid& b, const char* what) {
  if (!(a.shape() == b.shape())) {
    throw DimensionError(std::string(what) + ": latent shape mismatch");
  }
}

LatentGrid linear_combination(double a, const LatentGrid& x, double b, const LatentGrid& y) {
  require_same_shape(x, y, "linear_combination");
  LatentGrid out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

LatentGrid IdentityCodec::encode(const ImageGrid& img) const {
  LatentGrid z(latent_shape(img.height(), img.width(), img.channels()));
  const auto src = img.data();
  for (std::size_t i = 0; i < src.size(); ++i) z[i] = 2.0 * src[i] - 1.0;
  return z;
}

ImageGrid IdentityCodec::decode(const LatentGrid& z) const {
  const auto& s = z.shape();
  ImageGrid img(s.height, s.width, s.channels);
  auto dst = img.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::clamp((z[i] + 1.0) * 0.5, 0.0, 1.0);
  return img;
}

LatentShape IdentityCodec::latent_shape(int height, int width, int channels) const {
  return {height, width, channels};
}

LatentGrid PoolCodec::encode(const ImageGrid& img) const {
  const LatentShape s = latent_shape(img.height(), img.width(), img.channels());
  LatentGrid z(s);
  std::size_t i = 0;
  for (int c = 0; c < s.channels; ++c) {
    for (int r = 0; r < s.height; ++r) {
      for (int col = 0; col < s.width; ++col) {
        const double mean = 0.25 * (img(c, 2 * r, 2 * col) + img(c, 2 * r, 2 * col + 1) +
                                    img(c, 2 * r + 1, 2 * col) + img(c, 2 * r + 1, 2 * col + 1));
        z[i++] = 2.0 * mean - 1.0;
      }
    }
  }
  return z;
}

ImageGrid PoolCodec::decode(const LatentGrid& z) const {
  const auto& s = z.shape();
  const int h = 2 * s.height;
  const int w = 2 * s.width;
  ImageGrid img(h, w, s.channels);
  // Output pixel i sits at source coordinate (i + 0.5) / 2 - 0.5.
  auto tap = [](int i, int n, int& lo, int& hi, double& frac) {
    const double src = (i + 0.5) * 0.5 - 0.5;
    const double f = std::floor(src);
    frac = src - f;
    lo = std::clamp(static_cast<int>(f), 0, n - 1);
    hi = std::clamp(static_cast<int>(f) + 1, 0, n - 1);
  };
  const auto plane = static_cast<std::size_t>(s.height) * s.width;
  for (int c = 0; c < s.channels; ++c) {
    const double* base = z.data().data() + c * plane;
    for (int r = 0; r < h; ++r) {
      int r0, r1;
      double fr;
      tap(r, s.height, r0, r1, fr);
      for (int col = 0; col < w; ++col) {
        int c0, c1;
        double fc;
        tap(col, s.width, c0, c1, fc);
        const double v = (1.0 - fr) * ((1.0 - fc) * base[r0 * s.width + c0] + fc * base[r0 * s.width + c1]) +
                         fr * ((1.0 - fc) * base[r1 * s.width + c0] + fc * base[r1 * s.width + c1]);
        img(c, r, col) = std::clamp((v + 1.0) * 0.5, 0.0, 1.0);
      }
    }
  }
  return img;
}

LatentShape PoolCodec::latent_shape(int height, int width, int channels) const {
  if (height % 2 != 0 || width % 2 != 0) {
    throw DimensionError("pool codec requires even image dimensions");
  }
  return {height / 2, width / 2, channels};
}

std::unique_ptr<Codec> make_codec(const std::string& name) {
  if (name == "identity") return std::make_unique<IdentityCodec>();
  if (name == "pool") return std::make_unique<PoolCodec>();
  throw ParameterError("unknown codec '" + name + "' (expected identity or pool)");
}

LatentGrid slerp(const LatentGrid& a, const LatentGrid& b, double alpha) {
  require_same_shape(a, b, "slerp");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw RangeError("slerp alpha outside [0, 1]");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw DomainError("slerp of a zero vector");
  if (alpha == 0.0) return a;
  if (alpha == 1.0) return b;
  const double cos_theta = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  if (theta < kSlerpDegenerateAngle || std::numbers::pi - theta < kSlerpDegenerateAngle) {
    return linear_combination(1.0 - alpha, a, alpha, b);
  }
  const double sin_theta = std::sin(theta);
  return linear_combination(std::sin((1.0 - alpha) * theta) / sin_theta, a,
                            std::sin(alpha * theta) / sin_theta, b);
}

std::pair<LatentGrid, LatentGrid> add_shared_noise(const LatentGrid& z0a, const LatentGrid& z0b,
                                                   int t, const diffusion::NoiseSchedule& sched,
                                                   std::uint64_t seed) {
  require_same_shape(z0a, z0b, "add_shared_noise");
  if (t < 1 || t > sched.steps()) {
    throw RangeError("noising timestep " + std::to_string(t) + " outside [1, " +
                     std::to_string(sched.steps()) + "]");
  }
  const double signal = std::sqrt(sched.alpha_bar(t));
  const double noise = std::sqrt(1.0 - sched.alpha_bar(t));
  Rng rng(seed);
  LatentGrid za(z0a.shape());
  LatentGrid zb(z0b.shape());
  for (std::size_t i = 0; i < z0a.size(); ++i) {
    const double eps = rng.normal();
    za[i] = signal * z0a[i] + noise * eps;
    zb[i] = signal * z0b[i] + noise * eps;
  }
  return {std::move(za), std::move(zb)};
}

double cosine_similarity_norm(const LatentGrid& a, const LatentGrid& b) {
  require_same_shape(a, b, "cosine_similarity_norm");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw DomainError("cosine similarity of a zero vector");
  const double cos = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return 0.5 * (1.0 + cos);
}

}  // namespace fit::latent

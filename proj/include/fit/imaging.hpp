#pragma once

#include <cstddef>
#include <filesystem>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

namespace fit::imaging {

// H x W x C raster of intensities in [0, 1]. Storage is planar: each channel is
// a row-major H*W block.
class ImageGrid {
 public:
  ImageGrid() = default;
  ImageGrid(int height, int width, int channels, double fill = 0.0);
  // Throws DimensionError on a size mismatch and DomainError on values
  // outside [0, 1] or non-finite values.
  ImageGrid(int height, int width, int channels, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }
  bool is_square() const { return height_ == width_; }

  double operator()(int c, int row, int col) const { return data_[index(c, row, col)]; }
  double& operator()(int c, int row, int col) { return data_[index(c, row, col)]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  std::span<const double> plane(int c) const {
    return std::span<const double>(data_).subspan(c * plane_size(), plane_size());
  }

  bool same_shape(const ImageGrid& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  // Clamps every intensity into [0, 1].
  void clamp();

  bool operator==(const ImageGrid&) const = default;

 private:
  std::size_t index(int c, int row, int col) const {
    return (static_cast<std::size_t>(c) * height_ + row) * width_ + col;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

enum class Resampling { bilinear, nearest };

struct SymmetrySpec {
  int n_fold = 2;
  double center_row = 0.0;
  double center_col = 0.0;
  double disk_radius = 1.0;
  Resampling resampling = Resampling::bilinear;

  // Centered on the pixel grid with the largest inscribed disk that keeps a
  // one pixel margin: center ((H-1)/2, (W-1)/2), radius min(H, W)/2 - 1.
  static SymmetrySpec for_image(int height, int width, int n_fold,
                                Resampling resampling = Resampling::bilinear);

  // Throws ParameterError if n_fold < 2, the radius is not positive, or the
  // disk leaves an image of the given size.
  void validate(int height, int width) const;

  bool in_disk(double row, double col) const;

  // Polar angle of (row, col) about the center, in [0, 2*pi).
  double angle_of(double row, double col) const;

  // Sector index in [0, n_fold) of the polar angle of (row, col).
  int sector_of(double row, double col) const;

  double sector_angle() const { return 2.0 * std::numbers::pi / n_fold; }
};

enum class SymmetrizerKind { none, ra, ss };

std::string_view to_string(SymmetrizerKind kind);
// Accepts "none", "ra", "ss" (case-insensitive). Throws ParameterError.
SymmetrizerKind parse_symmetrizer_kind(std::string_view text);

// R(.) of the pooling step: rotate-and-average (ra), select-sector-and-stitch
// (ss), or the identity (none).
struct Symmetrizer {
  SymmetrizerKind kind = SymmetrizerKind::none;
  SymmetrySpec spec;
  int ss_reference_sector = 0;

  void validate() const;
  // R(img): symmetrized disk, zero outside it.
  ImageGrid apply(const ImageGrid& img) const;
  // Projection used during sampling: the disk is symmetrized and pixels
  // outside it keep their input values, since the constraint does not
  // involve them.
  ImageGrid project(const ImageGrid& img) const;
};

// Rotation by `angle` radians about spec.center using inverse mapping. Samples
// whose source position lies outside the disk read as zero; results are clamped
// to [0, 1].
ImageGrid rotate(const ImageGrid& img, double angle, const SymmetrySpec& spec);

// Single-channel {0, 1} indicator of sector k: polar angle in
// [2*pi*k/n, 2*pi*(k+1)/n) and radius within the disk.
ImageGrid sector_mask(const SymmetrySpec& spec, int height, int width, int k);

// Single-channel {0, 1} indicator of the disk.
ImageGrid disk_mask(const SymmetrySpec& spec, int height, int width);

// Zeroes all pixels outside the disk.
ImageGrid mask_disk(const ImageGrid& img, const SymmetrySpec& spec);

// Mean of the n rotations by 2*pi*k/n, k = 0..n-1. Zero outside the disk.
ImageGrid symmetrize_ra(const ImageGrid& img, const SymmetrySpec& spec);

// Copies sector `ref` into every other sector k, rotated by 2*pi*(k-ref)/n.
ImageGrid symmetrize_ss(const ImageGrid& img, const SymmetrySpec& spec, int ref);

// Mean absolute difference over disk pixels (all channels).
double disk_mean_abs_diff(const ImageGrid& a, const ImageGrid& b, const SymmetrySpec& spec);

// 8-bit PNG, grayscale or RGB. Values map linearly to [0, 1] on load and are
// rounded to nearest on save.
ImageGrid read_png(const std::filesystem::path& path);
void write_png(const ImageGrid& img, const std::filesystem::path& path);

// Concatenates images of equal height and channel count left to right.
ImageGrid hstack(std::span<const ImageGrid> images);

}  // namespace fit::imaging

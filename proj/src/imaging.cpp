#include "fit/imaging.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "fit/error.hpp"

namespace fit::imaging {

namespace {

constexpr double kTrigSnap = 1e-12;
constexpr double kWeightSnap = 1e-12;
constexpr double kDiskSlack = 1e-9;

double snap_unit(double v) {
  if (std::abs(v) < kTrigSnap) return 0.0;
  if (std::abs(v - 1.0) < kTrigSnap) return 1.0;
  if (std::abs(v + 1.0) < kTrigSnap) return -1.0;
  return v;
}

struct Rotation {
  double cos_a;
  double sin_a;

  explicit Rotation(double angle)
      : cos_a(snap_unit(std::cos(angle))), sin_a(snap_unit(std::sin(angle))) {}

  bool is_identity() const { return cos_a == 1.0 && sin_a == 0.0; }
};

void require_square(const ImageGrid& img, const char* what) {
  if (!img.is_square()) {
    throw DimensionError(std::string(what) + ": image must be square, got " +
                         std::to_string(img.height()) + "x" + std::to_string(img.width()));
  }
}

double read_or_zero(std::span<const double> plane, int height, int width, int row, int col) {
  if (row < 0 || col < 0 || row >= height || col >= width) return 0.0;
  return plane[static_cast<std::size_t>(row) * width + col];
}

// Value at output pixel (row, col) of `plane` rotated by `rot` about the symmetry
// center, without clamping.
double sample_rotated(std::span<const double> plane, int height, int width,
                      const SymmetrySpec& spec, const Rotation& rot, int row, int col) {
  const double dy = row - spec.center_row;
  const double dx = col - spec.center_col;
  if (rot.is_identity()) {
    return spec.in_disk(row, col) ? plane[static_cast<std::size_t>(row) * width + col] : 0.0;
  }
  const double sx = rot.cos_a * dx + rot.sin_a * dy;
  const double sy = -rot.sin_a * dx + rot.cos_a * dy;
  if (sx * sx + sy * sy > spec.disk_radius * spec.disk_radius + kDiskSlack) return 0.0;
  const double src_row = spec.center_row + sy;
  const double src_col = spec.center_col + sx;

  if (spec.resampling == Resampling::nearest) {
    return read_or_zero(plane, height, width, static_cast<int>(std::floor(src_row + 0.5)),
                        static_cast<int>(std::floor(src_col + 0.5)));
  }

  double r0 = std::floor(src_row);
  double c0 = std::floor(src_col);
  double fr = src_row - r0;
  double fc = src_col - c0;
  // Snap near-integer coordinates so exact rotations stay exact.
  if (fr > 1.0 - kWeightSnap) {
    r0 += 1.0;
    fr = 0.0;
  } else if (fr < kWeightSnap) {
    fr = 0.0;
  }
  if (fc > 1.0 - kWeightSnap) {
    c0 += 1.0;
    fc = 0.0;
  } else if (fc < kWeightSnap) {
    fc = 0.0;
  }
  const int ir = static_cast<int>(r0);
  const int ic = static_cast<int>(c0);
  double v = (1.0 - fr) * (1.0 - fc) * read_or_zero(plane, height, width, ir, ic);
  if (fc > 0.0) v += (1.0 - fr) * fc * read_or_zero(plane, height, width, ir, ic + 1);
  if (fr > 0.0) {
    v += fr * (1.0 - fc) * read_or_zero(plane, height, width, ir + 1, ic);
    if (fc > 0.0) v += fr * fc * read_or_zero(plane, height, width, ir + 1, ic + 1);
  }
  return v;
}

}  // namespace

ImageGrid::ImageGrid(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height <= 0 || width <= 0) throw DimensionError("image dimensions must be positive");
  if (channels != 1 && channels != 3) {
    throw DimensionError("images have 1 or 3 channels, got " + std::to_string(channels));
  }
  if (!(fill >= 0.0 && fill <= 1.0)) throw DomainError("fill intensity outside [0, 1]");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

ImageGrid::ImageGrid(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height <= 0 || width <= 0) throw DimensionError("image dimensions must be positive");
  if (channels != 1 && channels != 3) {
    throw DimensionError("images have 1 or 3 channels, got " + std::to_string(channels));
  }
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw DimensionError("image data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(height) + "x" +
                         std::to_string(width) + "x" + std::to_string(channels));
  }
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("image intensity outside [0, 1]");
  }
}

void ImageGrid::clamp() {
  for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
}

SymmetrySpec SymmetrySpec::for_image(int height, int width, int n_fold, Resampling resampling) {
  SymmetrySpec spec;
  spec.n_fold = n_fold;
  spec.center_row = (height - 1) / 2.0;
  spec.center_col = (width - 1) / 2.0;
  spec.disk_radius = std::min(height, width) / 2.0 - 1.0;
  spec.resampling = resampling;
  return spec;
}

void SymmetrySpec::validate(int height, int width) const {
  if (n_fold < 2) throw ParameterError("n_fold must be at least 2, got " + std::to_string(n_fold));
  if (!(disk_radius > 0.0)) throw ParameterError("disk_radius must be positive");
  if (center_row - disk_radius < 0.0 || center_row + disk_radius > height - 1.0 ||
      center_col - disk_radius < 0.0 || center_col + disk_radius > width - 1.0) {
    throw ParameterError("symmetry disk does not fit inside the image");
  }
}

bool SymmetrySpec::in_disk(double row, double col) const {
  const double dy = row - center_row;
  const double dx = col - center_col;
  return dx * dx + dy * dy <= disk_radius * disk_radius + kDiskSlack;
}

double SymmetrySpec::angle_of(double row, double col) const {
  double a = std::atan2(row - center_row, col - center_col);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  if (a >= 2.0 * std::numbers::pi) a = 0.0;
  return a;
}

int SymmetrySpec::sector_of(double row, double col) const {
  const int k = static_cast<int>(std::floor(angle_of(row, col) / sector_angle()));
  return std::clamp(k, 0, n_fold - 1);
}

std::string_view to_string(SymmetrizerKind kind) {
  switch (kind) {
    case SymmetrizerKind::ra:
      return "ra";
    case SymmetrizerKind::ss:
      return "ss";
    case SymmetrizerKind::none:
      break;
  }
  return "none";
}

SymmetrizerKind parse_symmetrizer_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "ra") return SymmetrizerKind::ra;
  if (lower == "ss") return SymmetrizerKind::ss;
  if (lower == "none") return SymmetrizerKind::none;
  throw ParameterError("unknown symmetrizer '" + std::string(text) + "' (expected ra, ss or none)");
}

void Symmetrizer::validate() const {
  if (kind == SymmetrizerKind::none) return;
  if (spec.n_fold < 2) throw ParameterError("n_fold must be at least 2");
  if (kind == SymmetrizerKind::ss &&
      (ss_reference_sector < 0 || ss_reference_sector >= spec.n_fold)) {
    throw IndexError("reference sector " + std::to_string(ss_reference_sector) +
                     " out of range for n_fold " + std::to_string(spec.n_fold));
  }
}

ImageGrid Symmetrizer::apply(const ImageGrid& img) const {
  switch (kind) {
    case SymmetrizerKind::ra:
      return symmetrize_ra(img, spec);
    case SymmetrizerKind::ss:
      return symmetrize_ss(img, spec, ss_reference_sector);
    case SymmetrizerKind::none:
      break;
  }
  return img;
}

ImageGrid Symmetrizer::project(const ImageGrid& img) const {
  if (kind == SymmetrizerKind::none) return img;
  ImageGrid out = apply(img);
  for (int c = 0; c < img.channels(); ++c) {
    for (int r = 0; r < img.height(); ++r) {
      for (int col = 0; col < img.width(); ++col) {
        if (!spec.in_disk(r, col)) out(c, r, col) = img(c, r, col);
      }
    }
  }
  return out;
}

ImageGrid rotate(const ImageGrid& img, double angle, const SymmetrySpec& spec) {
  require_square(img, "rotate");
  spec.validate(img.height(), img.width());
  const Rotation rot(angle);
  ImageGrid out(img.height(), img.width(), img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    const auto plane = img.plane(c);
    for (int r = 0; r < img.height(); ++r) {
      for (int col = 0; col < img.width(); ++col) {
        out(c, r, col) = std::clamp(
            sample_rotated(plane, img.height(), img.width(), spec, rot, r, col), 0.0, 1.0);
      }
    }
  }
  return out;
}

ImageGrid sector_mask(const SymmetrySpec& spec, int height, int width, int k) {
  if (k < 0 || k >= spec.n_fold) {
    throw IndexError("sector index " + std::to_string(k) + " out of range for n_fold " +
                     std::to_string(spec.n_fold));
  }
  spec.validate(height, width);
  ImageGrid mask(height, width, 1);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (spec.in_disk(r, c) && spec.sector_of(r, c) == k) mask(0, r, c) = 1.0;
    }
  }
  return mask;
}

ImageGrid disk_mask(const SymmetrySpec& spec, int height, int width) {
  spec.validate(height, width);
  ImageGrid mask(height, width, 1);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (spec.in_disk(r, c)) mask(0, r, c) = 1.0;
    }
  }
  return mask;
}

ImageGrid mask_disk(const ImageGrid& img, const SymmetrySpec& spec) {
  ImageGrid out = img;
  for (int c = 0; c < img.channels(); ++c) {
    for (int r = 0; r < img.height(); ++r) {
      for (int col = 0; col < img.width(); ++col) {
        if (!spec.in_disk(r, col)) out(c, r, col) = 0.0;
      }
    }
  }
  return out;
}

ImageGrid symmetrize_ra(const ImageGrid& img, const SymmetrySpec& spec) {
  require_square(img, "symmetrize_ra");
  spec.validate(img.height(), img.width());
  std::vector<Rotation> rotations;
  for (int k = 0; k < spec.n_fold; ++k) rotations.emplace_back(k * spec.sector_angle());

  ImageGrid out(img.height(), img.width(), img.channels());
  const double inv_n = 1.0 / spec.n_fold;
  for (int c = 0; c < img.channels(); ++c) {
    const auto plane = img.plane(c);
    for (int r = 0; r < img.height(); ++r) {
      for (int col = 0; col < img.width(); ++col) {
        if (!spec.in_disk(r, col)) continue;
        double sum = 0.0;
        for (const auto& rot : rotations) {
          sum += sample_rotated(plane, img.height(), img.width(), spec, rot, r, col);
        }
        out(c, r, col) = std::clamp(sum * inv_n, 0.0, 1.0);
      }
    }
  }
  return out;
}

ImageGrid symmetrize_ss(const ImageGrid& img, const SymmetrySpec& spec, int ref) {
  require_square(img, "symmetrize_ss");
  spec.validate(img.height(), img.width());
  if (ref < 0 || ref >= spec.n_fold) {
    throw IndexError("reference sector " + std::to_string(ref) + " out of range for n_fold " +
                     std::to_string(spec.n_fold));
  }
  std::vector<Rotation> rotations;
  for (int k = 0; k < spec.n_fold; ++k) rotations.emplace_back((k - ref) * spec.sector_angle());

  ImageGrid out(img.height(), img.width(), img.channels());
  for (int r = 0; r < img.height(); ++r) {
    for (int col = 0; col < img.width(); ++col) {
      if (!spec.in_disk(r, col)) continue;
      const auto& rot = rotations[spec.sector_of(r, col)];
      for (int c = 0; c < img.channels(); ++c) {
        out(c, r, col) = std::clamp(
            sample_rotated(img.plane(c), img.height(), img.width(), spec, rot, r, col), 0.0, 1.0);
      }
    }
  }
  return out;
}

double disk_mean_abs_diff(const ImageGrid& a, const ImageGrid& b, const SymmetrySpec& spec) {
  if (!a.same_shape(b)) throw DimensionError("disk_mean_abs_diff: shape mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (int c = 0; c < a.channels(); ++c) {
    for (int r = 0; r < a.height(); ++r) {
      for (int col = 0; col < a.width(); ++col) {
        if (!spec.in_disk(r, col)) continue;
        sum += std::abs(a(c, r, col) - b(c, r, col));
        ++count;
      }
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

ImageGrid read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG '" + path.string() + "': " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG '" + path.string() + "': " + image.message);
  }
  const int h = static_cast<int>(image.height);
  const int w = static_cast<int>(image.width);
  ImageGrid img(h, w, channels);
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      for (int c = 0; c < channels; ++c) {
        img(c, r, col) = buffer[(static_cast<std::size_t>(r) * w + col) * channels + c] / 255.0;
      }
    }
  }
  return img;
}

void write_png(const ImageGrid& img, const std::filesystem::path& path) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw DimensionError("PNG output supports 1 or 3 channels");
  }
  const int h = img.height();
  const int w = img.width();
  const int channels = img.channels();
  std::vector<png_byte> buffer(static_cast<std::size_t>(h) * w * channels);
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      for (int c = 0; c < channels; ++c) {
        const double v = std::clamp(img(c, r, col), 0.0, 1.0);
        buffer[(static_cast<std::size_t>(r) * w + col) * channels + c] =
            static_cast<png_byte>(std::lround(v * 255.0));
      }
    }
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() + "': " + image.message);
  }
}

ImageGrid hstack(std::span<const ImageGrid> images) {
  if (images.empty()) throw DimensionError("hstack: no images");
  const int h = images.front().height();
  const int channels = images.front().channels();
  int total_w = 0;
  for (const auto& img : images) {
    if (img.height() != h || img.channels() != channels) {
      throw DimensionError("hstack: height or channel mismatch");
    }
    total_w += img.width();
  }
  ImageGrid out(h, total_w, channels);
  int offset = 0;
  for (const auto& img : images) {
    for (int c = 0; c < channels; ++c) {
      for (int r = 0; r < h; ++r) {
        for (int col = 0; col < img.width(); ++col) out(c, r, offset + col) = img(c, r, col);
      }
    }
    offset += img.width();
  }
  return out;
}

}  // namespace fit::imaging

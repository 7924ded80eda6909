#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fit/imaging.hpp"
#include "fit/random.hpp"

namespace fit::synthdata {

// Radii are fractions of the image half-size. Intensities are the rim (also
// used for the hub), spoke and background levels.
struct WheelParams {
  int n_spokes = 6;
  double spoke_width = 0.3;  // radians
  double rim_outer = 0.9;
  double rim_inner = 0.7;
  double hub_radius = 0.2;
  double rim_intensity = 0.8;
  double spoke_intensity = 0.7;
  double background_intensity = 0.15;
  double asymmetry = 0.0;
  double edge_softness = 2.0;  // pixels
  std::uint64_t seed = 0;

  // All-zero radii are accepted and render the background only. Otherwise
  // hub_radius < rim_inner < rim_outer <= 1. Throws ParameterError.
  void validate() const;

  bool operator==(const WheelParams&) const = default;
};

void to_json(nlohmann::json& j, const WheelParams& p);
void from_json(const nlohmann::json& j, WheelParams& p);

inline constexpr int kDefaultImageSize = 64;

// Analytic polar rendering about the image center with 2x2 supersampling.
// With asymmetry == 0 the wheel is exactly n_spokes-fold symmetric; otherwise
// each spoke's angle and width are jittered by amounts scaled by asymmetry.
imaging::ImageGrid generate_wheel(const WheelParams& p, int size = kDefaultImageSize);

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  double sample(Rng& rng) const;
};

struct ParamRanges {
  int n_spokes_min = 3;
  int n_spokes_max = 8;
  Range spoke_width{0.18, 0.45};
  Range rim_outer{0.82, 0.95};
  Range rim_inner{0.62, 0.74};
  Range hub_radius{0.12, 0.24};
  Range rim_intensity{0.65, 0.9};
  Range spoke_intensity{0.5, 0.8};
  Range background_intensity{0.05, 0.25};
  Range asymmetry{0.0, 0.0};

  void validate() const;
};

void to_json(nlohmann::json& j, const ParamRanges& r);
void from_json(const nlohmann::json& j, ParamRanges& r);

// Seeded parameter draws; n_spokes cycles through its range so every count is
// equally represented.
std::vector<WheelParams> sample_params(int count, const ParamRanges& ranges, std::uint64_t seed);

struct ManifestEntry {
  int id = 0;
  WheelParams params;
  std::string file;
};

struct Manifest {
  int version = 1;
  int size = kDefaultImageSize;
  std::uint64_t seed = 0;
  ParamRanges ranges;
  std::vector<ManifestEntry> entries;
};

void to_json(nlohmann::json& j, const Manifest& m);
void from_json(const nlohmann::json& j, Manifest& m);

inline constexpr const char* kManifestName = "manifest.json";

// Writes `count` PNGs and manifest.json into out_dir (created if missing).
Manifest generate_dataset(int count, const ParamRanges& ranges, std::uint64_t seed, int size,
                          const std::filesystem::path& out_dir);

Manifest read_manifest(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);

// Renders every manifest entry in memory.
std::vector<imaging::ImageGrid> render_manifest(const Manifest& m);

}  // namespace fit::synthdata

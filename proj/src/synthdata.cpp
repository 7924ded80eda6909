#include "fit/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "fit/error.hpp"

namespace fit::synthdata {

using imaging::ImageGrid;
using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrapped_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), kTwoPi);
  return d > std::numbers::pi ? kTwoPi - d : d;
}

bool unit(double v) { return v >= 0.0 && v <= 1.0; }

void check_range(const Range& r, const char* name, double lo, double hi) {
  if (!(r.lo <= r.hi) || r.lo < lo || r.hi > hi) {
    throw ParameterError(std::string("invalid range for ") + name);
  }
}

}  // namespace

void WheelParams::validate() const {
  if (n_spokes < 2) throw ParameterError("n_spokes must be at least 2");
  if (!(spoke_width >= 0.0)) throw ParameterError("spoke_width must be non-negative");
  if (!(asymmetry >= 0.0)) throw ParameterError("asymmetry must be non-negative");
  if (!(edge_softness >= 0.0)) throw ParameterError("edge_softness must be non-negative");
  if (!unit(rim_intensity) || !unit(spoke_intensity) || !unit(background_intensity)) {
    throw ParameterError("wheel intensities must lie in [0, 1]");
  }
  const bool degenerate = hub_radius == 0.0 && rim_inner == 0.0 && rim_outer == 0.0;
  if (degenerate) return;
  if (!(hub_radius >= 0.0 && hub_radius < rim_inner && rim_inner < rim_outer && rim_outer <= 1.0)) {
    throw ParameterError("wheel radii must satisfy 0 <= hub < rim_inner < rim_outer <= 1");
  }
}

void to_json(json& j, const WheelParams& p) {
  j = json{{"n_spokes", p.n_spokes},
           {"spoke_width", p.spoke_width},
           {"rim_outer", p.rim_outer},
           {"rim_inner", p.rim_inner},
           {"hub_radius", p.hub_radius},
           {"rim_intensity", p.rim_intensity},
           {"spoke_intensity", p.spoke_intensity},
           {"background_intensity", p.background_intensity},
           {"asymmetry", p.asymmetry},
           {"edge_softness", p.edge_softness},
           {"seed", p.seed}};
}

void from_json(const json& j, WheelParams& p) {
  j.at("n_spokes").get_to(p.n_spokes);
  j.at("spoke_width").get_to(p.spoke_width);
  j.at("rim_outer").get_to(p.rim_outer);
  j.at("rim_inner").get_to(p.rim_inner);
  j.at("hub_radius").get_to(p.hub_radius);
  j.at("rim_intensity").get_to(p.rim_intensity);
  j.at("spoke_intensity").get_to(p.spoke_intensity);
  j.at("background_intensity").get_to(p.background_intensity);
  j.at("asymmetry").get_to(p.asymmetry);
  p.edge_softness = j.value("edge_softness", WheelParams{}.edge_softness);
  j.at("seed").get_to(p.seed);
}

ImageGrid generate_wheel(const WheelParams& p, int size) {
  p.validate();
  if (size < 16 || size % 2 != 0) {
    throw ParameterError("wheel size must be even and at least 16, got " + std::to_string(size));
  }

  // Per-spoke center angle and half width.
  std::vector<double> centers(p.n_spokes);
  std::vector<double> half_widths(p.n_spokes);
  Rng rng(p.seed);
  for (int k = 0; k < p.n_spokes; ++k) {
    const double shift = rng.uniform(-1.0, 1.0);
    const double stretch = rng.uniform(-1.0, 1.0);
    centers[k] = kTwoPi * k / p.n_spokes + p.asymmetry * shift * std::numbers::pi / p.n_spokes;
    half_widths[k] = 0.5 * p.spoke_width * std::max(0.1, 1.0 + p.asymmetry * stretch);
  }

  if (p.rim_outer == 0.0) return ImageGrid(size, size, 1, p.background_intensity);

  // Edges ramp linearly over edge_softness pixels; zero gives hard edges.
  const double half = size / 2.0;
  const double soft = p.edge_softness / half;
  auto inside = [soft](double signed_dist) {
    if (soft <= 0.0) return signed_dist <= 0.0 ? 1.0 : 0.0;
    return std::clamp(0.5 - signed_dist / soft, 0.0, 1.0);
  };
  auto shade = [&](double y, double x) {
    const double rho = std::hypot(y, x);
    // Membership of the rim annulus, the hub disk and the spoke wedges.
    const double rim = std::min(inside(p.rim_inner - rho), inside(rho - p.rim_outer));
    const double hub = p.hub_radius > 0.0 ? inside(rho - p.hub_radius) : 0.0;
    double spoke = 0.0;
    if (p.n_spokes > 0 && rho > 0.0) {
      double phi = std::atan2(y, x);
      if (phi < 0.0) phi += kTwoPi;
      for (int k = 0; k < p.n_spokes; ++k) {
        const double arc = (wrapped_distance(phi, centers[k]) - half_widths[k]) * rho;
        spoke = std::max(spoke, inside(arc));
      }
      spoke = std::min(spoke, inside(rho - p.rim_outer));
    }
    const double metal = std::max(rim, hub);
    const double spoke_only = std::min(spoke, 1.0 - metal);
    const double background = std::max(0.0, 1.0 - metal - spoke_only);
    return metal * p.rim_intensity + spoke_only * p.spoke_intensity +
           background * p.background_intensity;
  };

  const double center = (size - 1) / 2.0;
  ImageGrid img(size, size, 1);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      double sum = 0.0;
      for (double oy : {-0.25, 0.25}) {
        for (double ox : {-0.25, 0.25}) {
          sum += shade((r + oy - center) / half, (c + ox - center) / half);
        }
      }
      img(0, r, c) = 0.25 * sum;
    }
  }
  return img;
}

double Range::sample(Rng& rng) const { return lo == hi ? lo : rng.uniform(lo, hi); }

void ParamRanges::validate() const {
  if (n_spokes_min < 2 || n_spokes_max < n_spokes_min) throw ParameterError("invalid n_spokes range");
  check_range(spoke_width, "spoke_width", 0.0, std::numbers::pi);
  check_range(rim_outer, "rim_outer", 0.0, 1.0);
  check_range(rim_inner, "rim_inner", 0.0, 1.0);
  check_range(hub_radius, "hub_radius", 0.0, 1.0);
  check_range(rim_intensity, "rim_intensity", 0.0, 1.0);
  check_range(spoke_intensity, "spoke_intensity", 0.0, 1.0);
  check_range(background_intensity, "background_intensity", 0.0, 1.0);
  check_range(asymmetry, "asymmetry", 0.0, 1e9);
  if (!(hub_radius.hi < rim_inner.lo && rim_inner.hi < rim_outer.lo)) {
    throw ParameterError("radius ranges must be ordered hub < rim_inner < rim_outer");
  }
}

void to_json(json& j, const Range& r) { j = json::array({r.lo, r.hi}); }
void from_json(const json& j, Range& r) {
  r.lo = j.at(0).get<double>();
  r.hi = j.at(1).get<double>();
}

void to_json(json& j, const ParamRanges& r) {
  j = json{{"n_spokes", json::array({r.n_spokes_min, r.n_spokes_max})},
           {"spoke_width", r.spoke_width},
           {"rim_outer", r.rim_outer},
           {"rim_inner", r.rim_inner},
           {"hub_radius", r.hub_radius},
           {"rim_intensity", r.rim_intensity},
           {"spoke_intensity", r.spoke_intensity},
           {"background_intensity", r.background_intensity},
           {"asymmetry", r.asymmetry}};
}

void from_json(const json& j, ParamRanges& r) {
  if (j.contains("n_spokes")) {
    r.n_spokes_min = j["n_spokes"].at(0).get<int>();
    r.n_spokes_max = j["n_spokes"].at(1).get<int>();
  }
  auto read = [&j](const char* key, Range& range) {
    if (j.contains(key)) j[key].get_to(range);
  };
  read("spoke_width", r.spoke_width);
  read("rim_outer", r.rim_outer);
  read("rim_inner", r.rim_inner);
  read("hub_radius", r.hub_radius);
  read("rim_intensity", r.rim_intensity);
  read("spoke_intensity", r.spoke_intensity);
  read("background_intensity", r.background_intensity);
  read("asymmetry", r.asymmetry);
}

std::vector<WheelParams> sample_params(int count, const ParamRanges& ranges, std::uint64_t seed) {
  if (count < 1) throw ParameterError("count must be at least 1");
  ranges.validate();
  Rng rng(seed);
  const int n_counts = ranges.n_spokes_max - ranges.n_spokes_min + 1;
  std::vector<WheelParams> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    WheelParams p;
    p.n_spokes = ranges.n_spokes_min + i % n_counts;
    p.spoke_width = ranges.spoke_width.sample(rng);
    p.rim_outer = ranges.rim_outer.sample(rng);
    p.rim_inner = ranges.rim_inner.sample(rng);
    p.hub_radius = ranges.hub_radius.sample(rng);
    p.rim_intensity = ranges.rim_intensity.sample(rng);
    p.spoke_intensity = ranges.spoke_intensity.sample(rng);
    p.background_intensity = ranges.background_intensity.sample(rng);
    p.asymmetry = ranges.asymmetry.sample(rng);
    p.seed = mix_seed(seed, static_cast<std::uint64_t>(i));
    // Spokes must stay narrower than their angular pitch.
    p.spoke_width = std::min(p.spoke_width, 0.6 * kTwoPi / p.n_spokes);
    out.push_back(p);
  }
  return out;
}

void to_json(json& j, const Manifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    json item = e.params;
    item["id"] = e.id;
    item["file"] = e.file;
    entries.push_back(std::move(item));
  }
  j = json{{"version", m.version},
           {"size", m.size},
           {"seed", m.seed},
           {"ranges", m.ranges},
           {"entries", std::move(entries)}};
}

void from_json(const json& j, Manifest& m) {
  j.at("version").get_to(m.version);
  j.at("size").get_to(m.size);
  if (j.contains("seed")) j["seed"].get_to(m.seed);
  if (j.contains("ranges")) j["ranges"].get_to(m.ranges);
  m.entries.clear();
  for (const auto& item : j.at("entries")) {
    ManifestEntry e;
    item.at("id").get_to(e.id);
    item.at("file").get_to(e.file);
    e.params = item.get<WheelParams>();
    m.entries.push_back(std::move(e));
  }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Manifest generate_dataset(int count, const ParamRanges& ranges, std::uint64_t seed, int size,
                          const std::filesystem::path& out_dir) {
  const auto params = sample_params(count, ranges, seed);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  Manifest m;
  m.size = size;
  m.seed = seed;
  m.ranges = ranges;
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "wheel_%05d.png", i);
    imaging::write_png(generate_wheel(params[i], size), out_dir / name);
    m.entries.push_back({i, params[i], name});
  }
  write_json_file(m, out_dir / kManifestName);
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest '" + path.string() + "'");
  try {
    return json::parse(in).get<Manifest>();
  } catch (const json::exception& e) {
    throw IoError("malformed manifest '" + path.string() + "': " + e.what());
  }
}

std::vector<ImageGrid> render_manifest(const Manifest& m) {
  std::vector<ImageGrid> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) out.push_back(generate_wheel(e.params, m.size));
  return out;
}

}  // namespace fit::synthdata

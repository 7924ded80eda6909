#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "fit/diffusion.hpp"
#include "fit/imaging.hpp"
#include "fit/latent.hpp"
#include "fit/metrics.hpp"
#include "fit/synthdata.hpp"

namespace fit::cli {

struct GuidanceSettings {
  double w = 0.25;
  double d = 1.0;
  bool use_similarity = true;
  bool use_decay = true;
  std::string mode = "interleaved";
  std::string order = "before";
  std::string symmetrizer = "ra";
  int n_fold = 6;
  int ss_reference_sector = 0;
  std::string resampling = "bilinear";
};

struct ScheduleSettings {
  int steps = diffusion::NoiseSchedule::kDefaultSteps;
  double beta_start = diffusion::NoiseSchedule::kDefaultBetaStart;
  double beta_end = diffusion::NoiseSchedule::kDefaultBetaEnd;
};

// Wheel corpus used as denoiser support and as the pool of parent images.
// An empty `dir` means the corpus is rendered in memory from the ranges.
struct DataSettings {
  std::string dir;
  int count = 100;
  std::uint64_t seed = 1;
  synthdata::ParamRanges ranges = [] {
    synthdata::ParamRanges r;
    r.n_spokes_min = 6;
    r.n_spokes_max = 6;
    r.asymmetry = {0.0, 0.3};
    return r;
  }();
};

struct RunConfig {
  std::uint64_t seed = 0;
  int size = synthdata::kDefaultImageSize;
  double alpha = 0.5;
  int t_start = 600;
  int steps = 50;
  std::string codec = "identity";
  std::string denoiser = "gaussian";
  double floor_variance = 1e-4;
  ScheduleSettings schedule;
  GuidanceSettings guidance;
  DataSettings data;
  // Clean (asymmetry 0) corpus that Fréchet distances are measured against.
  int reference_count = 200;
  std::uint64_t reference_seed = 2;
  std::string features = "downsample";
  std::uint64_t feature_seed = 0;
  int count = 100;        // dataset command
  int depth = 4;          // branch command: 2^depth - 1 images per pair
  int pairs = 4;          // branch command
  int batch_pairs = 50;   // sweep / ablate
  std::vector<double> w_values{0.0, 0.1, 0.25, 0.35, 0.5};
  std::string out = "out";

  diffusion::GuidanceConfig guidance_config() const;
  imaging::Symmetrizer symmetrizer(imaging::SymmetrizerKind kind) const;
  diffusion::NoiseSchedule noise_schedule() const;
  diffusion::InterpolationSettings interpolation(std::uint64_t seed_override) const;
  void validate() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
// Missing keys keep their defaults, so partial config files are valid.
void from_json(const nlohmann::json& j, RunConfig& c);
RunConfig load_config(const std::filesystem::path& path);

// Codec, schedule, corpus and denoiser shared by the sampling commands.
class Context {
 public:
  explicit Context(const RunConfig& cfg);

  const RunConfig& config() const { return cfg_; }
  const latent::Codec& codec() const { return *codec_; }
  const diffusion::NoiseSchedule& schedule() const { return sched_; }
  const diffusion::Denoiser& denoiser() const { return *denoiser_; }
  const std::vector<imaging::ImageGrid>& corpus() const { return corpus_; }
  const std::vector<std::string>& corpus_ids() const { return corpus_ids_; }
  const metrics::FeatureExtractor& features() const { return *features_; }

  diffusion::SampleResult interpolate(const imaging::ImageGrid& a, const imaging::ImageGrid& b,
                                      const diffusion::GuidanceConfig& guidance,
                                      std::uint64_t seed) const;

 private:
  RunConfig cfg_;
  std::unique_ptr<latent::Codec> codec_;
  diffusion::NoiseSchedule sched_;
  std::vector<imaging::ImageGrid> corpus_;
  std::vector<std::string> corpus_ids_;
  std::unique_ptr<diffusion::Denoiser> denoiser_;
  std::unique_ptr<metrics::FeatureExtractor> features_;
};

// Clean (asymmetry 0) wheels drawn from the data ranges.
std::vector<imaging::ImageGrid> render_reference(const RunConfig& cfg);

// Distinct unordered index pairs drawn with a seeded generator.
std::vector<std::pair<int, int>> sample_pairs(int count, int pool_size, std::uint64_t seed);

// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads.
void parallel_for(int n, const std::function<void(int)>& fn);

struct DatasetResult {
  synthdata::Manifest manifest;
};
DatasetResult cmd_dataset(const RunConfig& cfg);

struct InterpolateResult {
  diffusion::SampleResult sample;
  double sym_ra = 0.0;
  double sym_ss = 0.0;
};
InterpolateResult cmd_interpolate(const RunConfig& cfg, const std::filesystem::path& img_a,
                                  const std::filesystem::path& img_b);

struct LineageNode {
  std::string id;
  std::string file;  // empty for parent images
  std::vector<std::string> parents;
  int pair = 0;
  int generation = 0;  // 0 for parents
  std::uint64_t seed = 0;
  std::string split;   // validation or test
};

struct BranchPlan {
  std::vector<LineageNode> nodes;  // parents first, then children in generation order
  int generated = 0;
};

// Lineage of the branching harness: each pair produces a child, and the
// child is paired with each of its two parents recursively up to `depth`.
BranchPlan plan_branch(int pair_count, int depth, std::uint64_t seed);

struct BranchResult {
  BranchPlan plan;
};
// Parent pairs are sampled from the corpus unless `pair_files` is given.
BranchResult cmd_branch(const RunConfig& cfg, bool dry_run,
                        const std::vector<std::pair<std::filesystem::path, std::filesystem::path>>&
                            pair_files = {});

struct SweepRow {
  double w = 0.0;
  double mean_sym_ra = 0.0;
  double mean_sym_ss = 0.0;
  double frechet_distance = 0.0;
};
struct SweepResult {
  SweepRow baseline;  // mode = off
  std::vector<SweepRow> rows;
};
SweepResult cmd_sweep(const RunConfig& cfg);

struct EvalResult {
  std::vector<std::string> ids;
  std::vector<double> sym_ra;
  std::vector<double> sym_ss;
  double mean_sym_ra = 0.0;
  double mean_sym_ss = 0.0;
  double frechet_distance = 0.0;
  int generated_count = 0;
  int reference_count = 0;
};
EvalResult cmd_eval(const RunConfig& cfg, const std::filesystem::path& generated_dir,
                    const std::filesystem::path& reference_dir);

struct AblationRow {
  std::string variant;
  double mean_sym_ra = 0.0;
  double mean_sym_ss = 0.0;
  double frechet_distance = 0.0;
  double final_lambda = 0.0;  // lambda of the last iteration at similarity 1
};
struct AblationResult {
  std::vector<AblationRow> rows;
};
// Matched-seed batch over: full guidance, no similarity, no decay, end-only
// and unguided.
AblationResult cmd_ablate(const RunConfig& cfg);

// Loads every PNG in a directory, sorted by file name.
std::vector<std::pair<std::string, imaging::ImageGrid>> load_png_dir(
    const std::filesystem::path& dir);

}  // namespace fit::cli

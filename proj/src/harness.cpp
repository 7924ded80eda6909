#include "fit/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <atomic>
#include <mutex>
#include <thread>

#include "fit/error.hpp"
#include "fit/random.hpp"

namespace fit::cli {

using imaging::ImageGrid;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
void read_if(const json& j, const char* key, T& field) {
  if (j.contains(key)) j.at(key).get_to(field);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
    if (!out_) throw IoError("failed writing '" + path_.string() + "'");
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

json trace_json(const std::vector<diffusion::StepTrace>& trace) {
  json out = json::array();
  for (const auto& s : trace) {
    out.push_back({{"step", s.step_index},
                   {"t", s.t},
                   {"t_prev", s.t_prev},
                   {"lambda", s.lambda},
                   {"similarity", s.similarity}});
  }
  return out;
}

double sym_of(const ImageGrid& img, const RunConfig& cfg, imaging::SymmetrizerKind kind) {
  return metrics::symmetry_score(img, cfg.symmetrizer(kind));
}

struct BatchOutput {
  std::vector<ImageGrid> images;
  std::vector<double> sym_ra;
  std::vector<double> sym_ss;
};

BatchOutput run_batch(const Context& ctx, const diffusion::GuidanceConfig& guidance,
                      const std::vector<std::pair<int, int>>& pairs) {
  const auto& cfg = ctx.config();
  BatchOutput out;
  out.images.resize(pairs.size());
  out.sym_ra.resize(pairs.size());
  out.sym_ss.resize(pairs.size());
  parallel_for(static_cast<int>(pairs.size()), [&](int i) {
    const auto [a, b] = pairs[i];
    out.images[i] = ctx.interpolate(ctx.corpus()[a], ctx.corpus()[b], guidance,
                                    mix_seed(cfg.seed, static_cast<std::uint64_t>(i)))
                        .image;
    out.sym_ra[i] = sym_of(out.images[i], cfg, imaging::SymmetrizerKind::ra);
    out.sym_ss[i] = sym_of(out.images[i], cfg, imaging::SymmetrizerKind::ss);
  });
  return out;
}

std::vector<std::pair<int, int>> batch_pairs(const Context& ctx) {
  return sample_pairs(ctx.config().batch_pairs, static_cast<int>(ctx.corpus().size()),
                      mix_seed(ctx.config().seed, 0x5eed));
}

}  // namespace

diffusion::GuidanceConfig RunConfig::guidance_config() const {
  diffusion::GuidanceConfig g;
  g.w = guidance.w;
  g.d = guidance.d;
  g.use_similarity = guidance.use_similarity;
  g.use_decay = guidance.use_decay;
  g.mode = diffusion::parse_guidance_mode(guidance.mode);
  g.order = diffusion::parse_pool_order(guidance.order);
  g.symmetrizer = symmetrizer(imaging::parse_symmetrizer_kind(guidance.symmetrizer));
  return g;
}

imaging::Symmetrizer RunConfig::symmetrizer(imaging::SymmetrizerKind kind) const {
  imaging::Resampling resampling;
  if (guidance.resampling == "bilinear") {
    resampling = imaging::Resampling::bilinear;
  } else if (guidance.resampling == "nearest") {
    resampling = imaging::Resampling::nearest;
  } else {
    throw ParameterError("unknown resampling '" + guidance.resampling + "'");
  }
  imaging::Symmetrizer sym;
  sym.kind = kind;
  sym.spec = imaging::SymmetrySpec::for_image(size, size, guidance.n_fold, resampling);
  sym.ss_reference_sector = guidance.ss_reference_sector;
  sym.validate();
  return sym;
}

diffusion::NoiseSchedule RunConfig::noise_schedule() const {
  return diffusion::NoiseSchedule::linear(schedule.steps, schedule.beta_start, schedule.beta_end);
}

diffusion::InterpolationSettings RunConfig::interpolation(std::uint64_t seed_override) const {
  return {alpha, t_start, steps, seed_override};
}

void RunConfig::validate() const {
  if (size < 16 || size % 2 != 0) throw ParameterError("size must be even and at least 16");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
  if (t_start < 1 || t_start > schedule.steps) {
    throw ParameterError("t_start must lie in [1, " + std::to_string(schedule.steps) + "]");
  }
  if (steps < 1) throw ParameterError("steps must be at least 1");
  if (depth < 1) throw ParameterError("depth must be at least 1");
  if (pairs < 1) throw ParameterError("pairs must be at least 1");
  if (batch_pairs < 2) throw ParameterError("batch_pairs must be at least 2");
  if (data.count < 2) throw ParameterError("data.count must be at least 2");
  guidance_config().validate();
  symmetrizer(imaging::SymmetrizerKind::ss);
  diffusion::timestep_ladder(t_start, steps);
}

void to_json(json& j, const RunConfig& c) {
  j = json{
      {"seed", c.seed},
      {"size", c.size},
      {"alpha", c.alpha},
      {"t_start", c.t_start},
      {"steps", c.steps},
      {"codec", c.codec},
      {"denoiser", c.denoiser},
      {"floor_variance", c.floor_variance},
      {"schedule",
       {{"T", c.schedule.steps}, {"beta_start", c.schedule.beta_start}, {"beta_end", c.schedule.beta_end}}},
      {"guidance",
       {{"w", c.guidance.w},
        {"d", c.guidance.d},
        {"use_similarity", c.guidance.use_similarity},
        {"use_decay", c.guidance.use_decay},
        {"mode", c.guidance.mode},
        {"order", c.guidance.order},
        {"symmetrizer", c.guidance.symmetrizer},
        {"n_fold", c.guidance.n_fold},
        {"ss_reference_sector", c.guidance.ss_reference_sector},
        {"resampling", c.guidance.resampling}}},
      {"data",
       {{"dir", c.data.dir}, {"count", c.data.count}, {"seed", c.data.seed}, {"ranges", c.data.ranges}}},
      {"reference_count", c.reference_count},
      {"reference_seed", c.reference_seed},
      {"features", c.features},
      {"feature_seed", c.feature_seed},
      {"count", c.count},
      {"depth", c.depth},
      {"pairs", c.pairs},
      {"batch_pairs", c.batch_pairs},
      {"w_values", c.w_values},
      {"out", c.out},
  };
}

void from_json(const json& j, RunConfig& c) {
  read_if(j, "seed", c.seed);
  read_if(j, "size", c.size);
  read_if(j, "alpha", c.alpha);
  read_if(j, "t_start", c.t_start);
  read_if(j, "steps", c.steps);
  read_if(j, "codec", c.codec);
  read_if(j, "denoiser", c.denoiser);
  read_if(j, "floor_variance", c.floor_variance);
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    read_if(s, "T", c.schedule.steps);
    read_if(s, "beta_start", c.schedule.beta_start);
    read_if(s, "beta_end", c.schedule.beta_end);
  }
  if (j.contains("guidance")) {
    const auto& g = j["guidance"];
    read_if(g, "w", c.guidance.w);
    read_if(g, "d", c.guidance.d);
    read_if(g, "use_similarity", c.guidance.use_similarity);
    read_if(g, "use_decay", c.guidance.use_decay);
    read_if(g, "mode", c.guidance.mode);
    read_if(g, "order", c.guidance.order);
    read_if(g, "symmetrizer", c.guidance.symmetrizer);
    read_if(g, "n_fold", c.guidance.n_fold);
    read_if(g, "ss_reference_sector", c.guidance.ss_reference_sector);
    read_if(g, "resampling", c.guidance.resampling);
  }
  if (j.contains("data")) {
    const auto& d = j["data"];
    read_if(d, "dir", c.data.dir);
    read_if(d, "count", c.data.count);
    read_if(d, "seed", c.data.seed);
    if (d.contains("ranges")) from_json(d["ranges"], c.data.ranges);
  }
  read_if(j, "reference_count", c.reference_count);
  read_if(j, "reference_seed", c.reference_seed);
  read_if(j, "features", c.features);
  read_if(j, "feature_seed", c.feature_seed);
  read_if(j, "count", c.count);
  read_if(j, "depth", c.depth);
  read_if(j, "pairs", c.pairs);
  read_if(j, "batch_pairs", c.batch_pairs);
  read_if(j, "w_values", c.w_values);
  read_if(j, "out", c.out);
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  try {
    return json::parse(in).get<RunConfig>();
  } catch (const json::exception& e) {
    throw ParameterError("malformed config '" + path.string() + "': " + e.what());
  }
}

Context::Context(const RunConfig& cfg)
    : cfg_(cfg), codec_(latent::make_codec(cfg.codec)), sched_(cfg.noise_schedule()) {
  cfg_.validate();
  if (cfg.data.dir.empty()) {
    const auto params = synthdata::sample_params(cfg.data.count, cfg.data.ranges, cfg.data.seed);
    for (std::size_t i = 0; i < params.size(); ++i) {
      corpus_.push_back(synthdata::generate_wheel(params[i], cfg.size));
      char id[32];
      std::snprintf(id, sizeof(id), "wheel_%05zu", i);
      corpus_ids_.emplace_back(id);
    }
  } else {
    for (auto& [id, img] : load_png_dir(cfg.data.dir)) {
      corpus_ids_.push_back(id);
      corpus_.push_back(std::move(img));
    }
  }
  if (corpus_.size() < 2) throw InsufficientDataError("data corpus needs at least two images");
  for (const auto& img : corpus_) {
    if (img.height() != cfg.size || img.width() != cfg.size) {
      throw DimensionError("corpus image size differs from configured size " +
                           std::to_string(cfg.size));
    }
  }

  std::vector<latent::LatentGrid> latents;
  latents.reserve(corpus_.size());
  for (const auto& img : corpus_) latents.push_back(codec_->encode(img));
  if (cfg.denoiser == "gaussian") {
    denoiser_ = std::make_unique<diffusion::GaussianDenoiser>(latents, sched_, cfg.floor_variance);
  } else if (cfg.denoiser == "empirical") {
    denoiser_ = std::make_unique<diffusion::EmpiricalDenoiser>(std::move(latents), sched_);
  } else {
    throw ParameterError("unknown denoiser '" + cfg.denoiser + "' (expected gaussian or empirical)");
  }
  features_ = metrics::make_feature_extractor(
      cfg.features, static_cast<int>(corpus_.front().size()), cfg.feature_seed);
}

diffusion::SampleResult Context::interpolate(const ImageGrid& a, const ImageGrid& b,
                                             const diffusion::GuidanceConfig& guidance,
                                             std::uint64_t seed) const {
  return diffusion::interpolate_pair(a, b, guidance, *codec_, *denoiser_, sched_,
                                     cfg_.interpolation(seed));
}

std::vector<ImageGrid> render_reference(const RunConfig& cfg) {
  auto ranges = cfg.data.ranges;
  ranges.asymmetry = {0.0, 0.0};
  std::vector<ImageGrid> out;
  for (const auto& p : synthdata::sample_params(cfg.reference_count, ranges, cfg.reference_seed)) {
    out.push_back(synthdata::generate_wheel(p, cfg.size));
  }
  return out;
}

std::vector<std::pair<int, int>> sample_pairs(int count, int pool_size, std::uint64_t seed) {
  if (pool_size < 2) throw InsufficientDataError("need at least two images to form pairs");
  Rng rng(seed);
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int a = static_cast<int>(rng.uniform_int(0, pool_size - 1));
    int b = static_cast<int>(rng.uniform_int(0, pool_size - 2));
    if (b >= a) ++b;
    pairs.emplace_back(a, b);
  }
  return pairs;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers =
      std::min(n, static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> threads;
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  threads.clear();
  if (error) std::rethrow_exception(error);
}

std::vector<std::pair<std::string, ImageGrid>> load_png_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InsufficientDataError("no PNG images in '" + dir.string() + "'");
  std::vector<std::pair<std::string, ImageGrid>> out;
  out.reserve(files.size());
  for (const auto& f : files) out.emplace_back(f.stem().string(), imaging::read_png(f));
  return out;
}

DatasetResult cmd_dataset(const RunConfig& cfg) {
  DatasetResult result;
  result.manifest = synthdata::generate_dataset(cfg.count, cfg.data.ranges, cfg.seed, cfg.size, cfg.out);
  synthdata::write_json_file(json{{"command", "dataset"}, {"config", cfg}, {"manifest", synthdata::kManifestName}},
                             fs::path(cfg.out) / "run.json");
  return result;
}

InterpolateResult cmd_interpolate(const RunConfig& cfg, const fs::path& img_a, const fs::path& img_b) {
  const ImageGrid a = imaging::read_png(img_a);
  const ImageGrid b = imaging::read_png(img_b);
  if (!a.same_shape(b)) throw DimensionError("reference images differ in size or channels");
  RunConfig local = cfg;
  local.size = a.height();
  const Context ctx(local);
  const auto guidance = local.guidance_config();

  InterpolateResult result;
  result.sample = ctx.interpolate(a, b, guidance, local.seed);
  result.sym_ra = sym_of(result.sample.image, local, imaging::SymmetrizerKind::ra);
  result.sym_ss = sym_of(result.sample.image, local, imaging::SymmetrizerKind::ss);

  const fs::path out(local.out);
  ensure_dir(out);
  imaging::write_png(result.sample.image, out / "result.png");
  const ImageGrid panels[] = {a, result.sample.image, b};
  imaging::write_png(imaging::hstack(panels), out / "triptych.png");
  synthdata::write_json_file(
      json{{"command", "interpolate"},
           {"config", local},
           {"inputs", {img_a.string(), img_b.string()}},
           {"outputs", {"result.png", "triptych.png"}},
           {"sym_ra", result.sym_ra},
           {"sym_ss", result.sym_ss},
           {"trace", trace_json(result.sample.trace)}},
      out / "run.json");
  return result;
}

BranchPlan plan_branch(int pair_count, int depth, std::uint64_t seed) {
  if (pair_count < 1) throw ParameterError("branch needs at least one pair");
  if (depth < 1) throw ParameterError("branch depth must be at least 1");

  // Seeded half/half split by parent pair, so both sets use separate prompts.
  std::vector<int> order(pair_count);
  for (int i = 0; i < pair_count; ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0x511f));
  for (int i = pair_count - 1; i > 0; --i) {
    std::swap(order[i], order[static_cast<std::size_t>(rng.uniform_int(0, i))]);
  }
  std::vector<std::string> split(pair_count);
  for (int i = 0; i < pair_count; ++i) split[order[i]] = i < (pair_count + 1) / 2 ? "validation" : "test";

  BranchPlan plan;
  for (int p = 0; p < pair_count; ++p) {
    char base[32];
    std::snprintf(base, sizeof(base), "p%04d", p);
    const std::string pa = std::string(base) + "_a";
    const std::string pb = std::string(base) + "_b";
    plan.nodes.push_back({pa, "", {}, p, 0, 0, split[p]});
    plan.nodes.push_back({pb, "", {}, p, 0, 0, split[p]});

    // Breadth-first over (x, y, remaining depth).
    struct Job {
      std::string x, y;
      int generation;
    };
    std::vector<Job> frontier{{pa, pb, 1}};
    int counter = 0;
    while (!frontier.empty()) {
      std::vector<Job> next;
      for (const auto& job : frontier) {
        char id[48];
        std::snprintf(id, sizeof(id), "%s_c%03d", base, counter);
        const std::uint64_t child_seed =
            mix_seed(mix_seed(seed, static_cast<std::uint64_t>(p)), static_cast<std::uint64_t>(counter));
        ++counter;
        plan.nodes.push_back({id, std::string(id) + ".png", {job.x, job.y}, p, job.generation,
                              child_seed, split[p]});
        ++plan.generated;
        if (job.generation < depth) {
          next.push_back({id, job.x, job.generation + 1});
          next.push_back({id, job.y, job.generation + 1});
        }
      }
      frontier = std::move(next);
    }
  }
  return plan;
}

BranchResult cmd_branch(const RunConfig& cfg, bool dry_run,
                        const std::vector<std::pair<fs::path, fs::path>>& pair_files) {
  const int pair_count = pair_files.empty() ? cfg.pairs : static_cast<int>(pair_files.size());
  BranchResult result;
  result.plan = plan_branch(pair_count, cfg.depth, cfg.seed);
  auto& nodes = result.plan.nodes;
  const fs::path out(cfg.out);
  ensure_dir(out);

  if (!dry_run) {
    const Context ctx(cfg);
    const auto guidance = cfg.guidance_config();
    const auto pairs = pair_files.empty()
                           ? sample_pairs(pair_count, static_cast<int>(ctx.corpus().size()),
                                          mix_seed(cfg.seed, 0xb4a2c4))
                           : std::vector<std::pair<int, int>>{};
    // Nodes of one pair are contiguous: two parents followed by its children.
    std::vector<std::size_t> first(pair_count + 1, nodes.size());
    for (std::size_t i = nodes.size(); i-- > 0;) first[nodes[i].pair] = i;
    const fs::path image_dir = out / "images";
    ensure_dir(image_dir);

    parallel_for(pair_count, [&](int p) {
      std::map<std::string, ImageGrid> images;
      const std::size_t begin = first[p];
      const std::size_t end = p + 1 < pair_count ? first[p + 1] : nodes.size();
      for (std::size_t i = begin; i < end; ++i) {
        auto& node = nodes[i];
        if (node.generation == 0) {
          const bool is_a = node.id.back() == 'a';
          if (pair_files.empty()) {
            const int idx = is_a ? pairs[p].first : pairs[p].second;
            node.file = "corpus:" + ctx.corpus_ids()[idx];
            images[node.id] = ctx.corpus()[idx];
          } else {
            const auto& path = is_a ? pair_files[p].first : pair_files[p].second;
            node.file = path.string();
            images[node.id] = imaging::read_png(path);
          }
          continue;
        }
        auto sample = ctx.interpolate(images.at(node.parents[0]), images.at(node.parents[1]),
                                      guidance, node.seed);
        imaging::write_png(sample.image, image_dir / node.file);
        images[node.id] = std::move(sample.image);
      }
    });
  }

  json lineage = json::array();
  for (const auto& n : nodes) {
    lineage.push_back({{"id", n.id},
                       {"file", n.file},
                       {"parents", n.parents},
                       {"pair", n.pair},
                       {"generation", n.generation},
                       {"seed", n.seed},
                       {"split", n.split}});
  }
  json pair_list = json::array();
  for (const auto& [a, b] : pair_files) pair_list.push_back({a.string(), b.string()});
  synthdata::write_json_file(json{{"command", "branch"},
                                  {"config", cfg},
                                  {"dry_run", dry_run},
                                  {"pair_files", pair_list},
                                  {"generated", result.plan.generated},
                                  {"nodes", lineage}},
                             out / "lineage.json");
  return result;
}

SweepResult cmd_sweep(const RunConfig& cfg) {
  if (cfg.w_values.size() < 2) throw ParameterError("sweep needs at least two w values");
  const Context ctx(cfg);
  const auto pairs = batch_pairs(ctx);
  const auto reference = metrics::corpus_stats(render_reference(cfg), ctx.features());

  auto summarize = [&](double w, const BatchOutput& batch) {
    return SweepRow{w, metrics::mean(batch.sym_ra), metrics::mean(batch.sym_ss),
                    metrics::frechet_distance(metrics::corpus_stats(batch.images, ctx.features()),
                                              reference)};
  };

  SweepResult result;
  auto guidance = cfg.guidance_config();
  guidance.mode = diffusion::GuidanceMode::off;
  result.baseline = summarize(0.0, run_batch(ctx, guidance, pairs));
  guidance.mode = diffusion::GuidanceMode::interleaved;
  for (double w : cfg.w_values) {
    guidance.w = w;
    result.rows.push_back(summarize(w, run_batch(ctx, guidance, pairs)));
  }

  const fs::path out(cfg.out);
  ensure_dir(out);
  CsvWriter csv(out / "sweep.csv", {"w", "mean_sym_ra", "mean_sym_ss", "frechet_distance"});
  json rows = json::array();
  for (const auto& r : result.rows) {
    csv.row({fmt(r.w), fmt(r.mean_sym_ra), fmt(r.mean_sym_ss), fmt(r.frechet_distance)});
    rows.push_back({{"w", r.w},
                    {"mean_sym_ra", r.mean_sym_ra},
                    {"mean_sym_ss", r.mean_sym_ss},
                    {"frechet_distance", r.frechet_distance}});
  }
  synthdata::write_json_file(
      json{{"command", "sweep"},
           {"config", cfg},
           {"pairs", pairs.size()},
           {"baseline",
            {{"mode", "off"},
             {"mean_sym_ra", result.baseline.mean_sym_ra},
             {"mean_sym_ss", result.baseline.mean_sym_ss},
             {"frechet_distance", result.baseline.frechet_distance}}},
           {"rows", rows}},
      out / "sweep.json");
  return result;
}

EvalResult cmd_eval(const RunConfig& cfg, const fs::path& generated_dir, const fs::path& reference_dir) {
  const auto generated = load_png_dir(generated_dir);
  const auto reference = load_png_dir(reference_dir);
  EvalResult result;
  result.generated_count = static_cast<int>(generated.size());
  result.reference_count = static_cast<int>(reference.size());

  RunConfig local = cfg;
  local.size = generated.front().second.height();
  const auto ra = local.symmetrizer(imaging::SymmetrizerKind::ra);
  const auto ss = local.symmetrizer(imaging::SymmetrizerKind::ss);
  std::vector<ImageGrid> gen_images;
  std::vector<ImageGrid> ref_images;
  for (const auto& [id, img] : generated) {
    result.ids.push_back(id);
    result.sym_ra.push_back(metrics::symmetry_score(img, ra));
    result.sym_ss.push_back(metrics::symmetry_score(img, ss));
    gen_images.push_back(img);
  }
  for (const auto& entry : reference) ref_images.push_back(entry.second);
  result.mean_sym_ra = metrics::mean(result.sym_ra);
  result.mean_sym_ss = metrics::mean(result.sym_ss);

  const auto features = metrics::make_feature_extractor(
      local.features, static_cast<int>(gen_images.front().size()), local.feature_seed);
  result.frechet_distance = metrics::frechet_distance(metrics::corpus_stats(gen_images, *features),
                                                      metrics::corpus_stats(ref_images, *features));

  const fs::path out(local.out);
  ensure_dir(out);
  CsvWriter csv(out / "eval.csv", {"image_id", "sym_ra", "sym_ss"});
  for (std::size_t i = 0; i < result.ids.size(); ++i) {
    csv.row({result.ids[i], fmt(result.sym_ra[i]), fmt(result.sym_ss[i])});
  }
  synthdata::write_json_file(
      json{{"command", "eval"},
           {"config", local},
           {"generated_dir", generated_dir.string()},
           {"reference_dir", reference_dir.string()},
           {"frechet_distance", result.frechet_distance},
           {"features", {{"kind", features->name()}, {"dimension", features->dimension()}, {"seed", local.feature_seed}}},
           {"generated_count", result.generated_count},
           {"reference_count", result.reference_count},
           {"mean_sym_ra", result.mean_sym_ra},
           {"mean_sym_ss", result.mean_sym_ss}},
      out / "eval.json");
  return result;
}

AblationResult cmd_ablate(const RunConfig& cfg) {
  const Context ctx(cfg);
  const auto pairs = batch_pairs(ctx);
  const auto reference = metrics::corpus_stats(render_reference(cfg), ctx.features());
  const auto base = cfg.guidance_config();

  struct Variant {
    const char* name;
    diffusion::GuidanceConfig guidance;
  };
  std::vector<Variant> variants{{"similarity+decay", base}};
  variants.push_back({"no-similarity", base});
  variants.back().guidance.use_similarity = false;
  variants.push_back({"no-decay", base});
  variants.back().guidance.use_decay = false;
  variants.push_back({"end-only", base});
  variants.back().guidance.mode = diffusion::GuidanceMode::end_only;
  variants.push_back({"off", base});
  variants.back().guidance.mode = diffusion::GuidanceMode::off;

  AblationResult result;
  for (const auto& v : variants) {
    const auto batch = run_batch(ctx, v.guidance, pairs);
    const bool pooled = v.guidance.mode == diffusion::GuidanceMode::interleaved;
    result.rows.push_back(
        {v.name, metrics::mean(batch.sym_ra), metrics::mean(batch.sym_ss),
         metrics::frechet_distance(metrics::corpus_stats(batch.images, ctx.features()), reference),
         pooled ? diffusion::pooling_weight(1.0, v.guidance, cfg.steps) : 0.0});
  }

  const fs::path out(cfg.out);
  ensure_dir(out);
  CsvWriter csv(out / "ablation.csv",
                {"variant", "mean_sym_ra", "mean_sym_ss", "frechet_distance", "final_lambda"});
  json rows = json::array();
  for (const auto& r : result.rows) {
    csv.row({r.variant, fmt(r.mean_sym_ra), fmt(r.mean_sym_ss), fmt(r.frechet_distance),
             fmt(r.final_lambda)});
    rows.push_back({{"variant", r.variant},
                    {"mean_sym_ra", r.mean_sym_ra},
                    {"mean_sym_ss", r.mean_sym_ss},
                    {"frechet_distance", r.frechet_distance},
                    {"final_lambda", r.final_lambda}});
  }
  synthdata::write_json_file(
      json{{"command", "ablate"}, {"config", cfg}, {"pairs", pairs.size()}, {"rows", rows}},
      out / "ablation.json");
  return result;
}

}  // namespace fit::cli

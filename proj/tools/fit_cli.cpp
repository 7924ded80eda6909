// fit: dataset, interpolate, branch, sweep, eval and ablate commands.
#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fit/error.hpp"
#include "fit/harness.hpp"

namespace {

using fit::cli::RunConfig;

// Flag values land here and are applied on top of the --config file.
class Overrides {
 public:
  template <typename T, typename Set>
  CLI::Option* add(CLI::App& app, const std::string& name, const std::string& help, Set set) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app.add_option(name, *value, help);
    appliers_.push_back([opt, value, set](RunConfig& cfg) {
      if (opt->count() > 0) set(cfg, *value);
    });
    return opt;
  }

  void add_flag(CLI::App& app, const std::string& name, const std::string& help,
                std::function<void(RunConfig&)> set) {
    CLI::Option* opt = app.add_flag(name, help);
    appliers_.push_back([opt, set](RunConfig& cfg) {
      if (opt->count() > 0) set(cfg);
    });
  }

  void apply(RunConfig& cfg) const {
    for (const auto& f : appliers_) f(cfg);
  }

 private:
  std::vector<std::function<void(RunConfig&)>> appliers_;
};

void add_common(CLI::App& app, Overrides& o) {
  o.add<std::string>(app, "--out", "output directory", [](RunConfig& c, const std::string& v) { c.out = v; });
  o.add<std::uint64_t>(app, "--seed", "run seed", [](RunConfig& c, std::uint64_t v) { c.seed = v; });
  o.add<int>(app, "--size", "image side in pixels", [](RunConfig& c, int v) { c.size = v; });
  o.add<int>(app, "--n-fold", "rotational order", [](RunConfig& c, int v) { c.guidance.n_fold = v; });
}

void add_sampling(CLI::App& app, Overrides& o) {
  o.add<double>(app, "--w", "pooling weight", [](RunConfig& c, double v) { c.guidance.w = v; });
  o.add<double>(app, "--d", "decay exponent", [](RunConfig& c, double v) { c.guidance.d = v; });
  o.add<std::string>(app, "--symmetrizer", "ra, ss or none",
                     [](RunConfig& c, const std::string& v) { c.guidance.symmetrizer = v; })
      ->check(CLI::IsMember({"ra", "ss", "none"}));
  o.add<std::string>(app, "--mode", "interleaved, end-only or off",
                     [](RunConfig& c, const std::string& v) { c.guidance.mode = v; })
      ->check(CLI::IsMember({"interleaved", "end-only", "off"}));
  o.add<std::string>(app, "--order", "pool before or after each step",
                     [](RunConfig& c, const std::string& v) { c.guidance.order = v; })
      ->check(CLI::IsMember({"before", "after"}));
  o.add<int>(app, "--steps", "DDIM steps", [](RunConfig& c, int v) { c.steps = v; });
  o.add<int>(app, "--t-start", "starting timestep", [](RunConfig& c, int v) { c.t_start = v; });
  o.add<double>(app, "--alpha", "interpolation coefficient", [](RunConfig& c, double v) { c.alpha = v; });
  o.add<std::string>(app, "--codec", "identity or pool",
                     [](RunConfig& c, const std::string& v) { c.codec = v; });
  o.add<std::string>(app, "--denoiser", "gaussian or empirical",
                     [](RunConfig& c, const std::string& v) { c.denoiser = v; });
  o.add<std::string>(app, "--dataset-dir", "denoiser dataset directory (default: rendered)",
                     [](RunConfig& c, const std::string& v) { c.data.dir = v; });
  o.add_flag(app, "--no-similarity", "drop the similarity factor",
             [](RunConfig& c) { c.guidance.use_similarity = false; });
  o.add_flag(app, "--no-decay", "drop the 1/i^d decay", [](RunConfig& c) { c.guidance.use_decay = false; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symmetry-constrained image interpolation"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  Overrides o;

  auto* dataset = app.add_subcommand("dataset", "render a procedural wheel dataset");
  add_common(*dataset, o);
  o.add<int>(*dataset, "--count", "number of images", [](RunConfig& c, int v) { c.count = v; });

  auto* interpolate = app.add_subcommand("interpolate", "interpolate two images");
  add_common(*interpolate, o);
  add_sampling(*interpolate, o);
  std::string img_a, img_b;
  interpolate->add_option("a", img_a, "first image")->required()->check(CLI::ExistingFile);
  interpolate->add_option("b", img_b, "second image")->required()->check(CLI::ExistingFile);

  auto* branch = app.add_subcommand("branch", "branching interpolation harness");
  add_common(*branch, o);
  add_sampling(*branch, o);
  o.add<int>(*branch, "--pairs", "parent pairs drawn from the dataset", [](RunConfig& c, int v) { c.pairs = v; });
  o.add<int>(*branch, "--depth", "branching depth", [](RunConfig& c, int v) { c.depth = v; });
  bool dry_run = false;
  branch->add_flag("--dry-run", dry_run, "write the lineage plan without rendering");
  std::vector<std::string> pair_images;
  branch->add_option("images", pair_images, "explicit parent images, taken two at a time")
      ->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "pooling weight sweep");
  add_common(*sweep, o);
  add_sampling(*sweep, o);
  o.add<std::vector<double>>(*sweep, "--w-values", "weights to sweep",
                             [](RunConfig& c, const std::vector<double>& v) { c.w_values = v; });
  o.add<int>(*sweep, "--batch", "pairs per batch", [](RunConfig& c, int v) { c.batch_pairs = v; });

  auto* eval = app.add_subcommand("eval", "score a generated directory against a reference directory");
  add_common(*eval, o);
  std::string gen_dir, ref_dir;
  eval->add_option("generated", gen_dir, "generated images")->required()->check(CLI::ExistingDirectory);
  eval->add_option("reference", ref_dir, "reference images")->required()->check(CLI::ExistingDirectory);
  o.add<std::string>(*eval, "--features", "downsample or randproj",
                     [](RunConfig& c, const std::string& v) { c.features = v; });
  o.add<int>(*eval, "--ss-reference", "SS reference sector",
             [](RunConfig& c, int v) { c.guidance.ss_reference_sector = v; });

  auto* ablate = app.add_subcommand("ablate", "similarity, decay and end-only ablations");
  add_common(*ablate, o);
  add_sampling(*ablate, o);
  o.add<int>(*ablate, "--batch", "pairs per batch", [](RunConfig& c, int v) { c.batch_pairs = v; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : fit::cli::load_config(config_path);
    o.apply(cfg);
    cfg.validate();

    if (*dataset) {
      const auto r = fit::cli::cmd_dataset(cfg);
      std::printf("wrote %zu images to %s\n", r.manifest.entries.size(), cfg.out.c_str());
    } else if (*interpolate) {
      const auto r = fit::cli::cmd_interpolate(cfg, img_a, img_b);
      std::printf("sym_ra %.6f sym_ss %.6f -> %s\n", r.sym_ra, r.sym_ss, cfg.out.c_str());
    } else if (*branch) {
      if (pair_images.size() % 2 != 0) throw fit::ParameterError("branch images must come in pairs");
      std::vector<std::pair<std::filesystem::path, std::filesystem::path>> pairs;
      for (std::size_t i = 0; i < pair_images.size(); i += 2) pairs.emplace_back(pair_images[i], pair_images[i + 1]);
      const auto r = fit::cli::cmd_branch(cfg, dry_run, pairs);
      std::printf("%s %d images -> %s\n", dry_run ? "planned" : "generated", r.plan.generated, cfg.out.c_str());
    } else if (*sweep) {
      const auto r = fit::cli::cmd_sweep(cfg);
      std::printf("baseline sym_ra %.6f sym_ss %.6f fd %.6f\n", r.baseline.mean_sym_ra, r.baseline.mean_sym_ss,
                  r.baseline.frechet_distance);
      for (const auto& row : r.rows) {
        std::printf("w %.3f sym_ra %.6f sym_ss %.6f fd %.6f\n", row.w, row.mean_sym_ra, row.mean_sym_ss,
                    row.frechet_distance);
      }
    } else if (*eval) {
      const auto r = fit::cli::cmd_eval(cfg, gen_dir, ref_dir);
      std::printf("sym_ra %.6f sym_ss %.6f fd %.6f (%d vs %d images)\n", r.mean_sym_ra, r.mean_sym_ss,
                  r.frechet_distance, r.generated_count, r.reference_count);
    } else if (*ablate) {
      for (const auto& row : fit::cli::cmd_ablate(cfg).rows) {
        std::printf("%-18s sym_ra %.6f sym_ss %.6f fd %.6f final_lambda %.6g\n", row.variant.c_str(),
                    row.mean_sym_ra, row.mean_sym_ss, row.frechet_distance, row.final_lambda);
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fit: error: %s\n", e.what());
    return 1;
  }
  return 0;
}

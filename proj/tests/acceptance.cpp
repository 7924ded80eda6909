// Acceptance suite: one PASS/FAIL line per criterion.
// usage: acceptance <path-to-fit-cli>
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <string>

#include "fit/diffusion.hpp"
#include "fit/harness.hpp"
#include "fit/metrics.hpp"
#include "fit/random.hpp"
#include "fit/synthdata.hpp"

namespace fs = std::filesystem;
using namespace fit;
using imaging::ImageGrid;
using imaging::Resampling;
using imaging::Symmetrizer;
using imaging::SymmetrizerKind;
using imaging::SymmetrySpec;
using latent::LatentGrid;
using latent::LatentShape;

namespace {

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %-28s %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs `fn`; an exception counts as a failure of criterion `id`.
void criterion(int id, const char* name, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

std::vector<ImageGrid> random_wheels(int count, double asym_hi, std::uint64_t seed) {
  synthdata::ParamRanges r;
  r.asymmetry = {0.0, asym_hi};
  std::vector<ImageGrid> out;
  for (const auto& p : synthdata::sample_params(count, r, seed)) out.push_back(synthdata::generate_wheel(p, 64));
  return out;
}

LatentGrid random_latent(LatentShape shape, Rng& rng, double scale = 1.0) {
  LatentGrid z(shape);
  for (double& v : z.data()) v = scale * rng.normal();
  return z;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = file_bytes(e.path());
  return out;
}

int run(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

void idempotence() {
  const auto t0 = std::chrono::steady_clock::now();
  synthdata::ParamRanges r;
  r.asymmetry = {0.0, 0.3};
  const auto params = synthdata::sample_params(100, r, 101);
  double worst_ra = 0.0, worst_ss = 0.0;
  for (const auto& p : params) {
    const auto img = synthdata::generate_wheel(p, 64);
    const auto spec = SymmetrySpec::for_image(64, 64, p.n_spokes);
    const auto ra = imaging::symmetrize_ra(img, spec);
    const auto ss = imaging::symmetrize_ss(img, spec, 0);
    worst_ra = std::max(worst_ra, imaging::disk_mean_abs_diff(imaging::symmetrize_ra(ra, spec), ra, spec));
    worst_ss = std::max(worst_ss, imaging::disk_mean_abs_diff(imaging::symmetrize_ss(ss, spec, 0), ss, spec));
  }
  double worst_exact = 0.0;
  const auto nearest = SymmetrySpec::for_image(64, 64, 4, Resampling::nearest);
  for (std::size_t i = 0; i < 100; ++i) {
    const auto img = synthdata::generate_wheel(params[i], 64);
    const auto ra = imaging::symmetrize_ra(img, nearest);
    worst_exact = std::max(worst_exact, imaging::disk_mean_abs_diff(imaging::symmetrize_ra(ra, nearest), ra, nearest));
  }
  const double secs = seconds_since(t0);
  report(1, "symmetrizer idempotence",
         worst_ra <= 0.02 && worst_ss <= 0.02 && worst_exact <= 1e-9 && secs < 30.0,
         fmt("max RA %.4f, SS %.4f (<= 0.02); RA nearest n=4 %.2e (<= 1e-9); %.1fs", worst_ra, worst_ss,
             worst_exact, secs));
}

void fixed_point() {
  const auto t0 = std::chrono::steady_clock::now();
  synthdata::ParamRanges r;
  double min_ra = 1.0, min_ss = 1.0;
  for (const auto& p : synthdata::sample_params(100, r, 202)) {
    const auto img = synthdata::generate_wheel(p, 64);
    const auto spec = SymmetrySpec::for_image(64, 64, p.n_spokes);
    min_ra = std::min(min_ra, metrics::symmetry_score(img, {SymmetrizerKind::ra, spec, 0}));
    min_ss = std::min(min_ss, metrics::symmetry_score(img, {SymmetrizerKind::ss, spec, 0}));
  }
  const double secs = seconds_since(t0);
  report(2, "symmetric fixed point", min_ra >= 0.98 && min_ss >= 0.98 && secs < 30.0,
         fmt("min Sym RA %.4f, SS %.4f (>= 0.98) over 100 wheels; %.1fs", min_ra, min_ss, secs));
}

void denoiser_oracle() {
  const auto sched = diffusion::NoiseSchedule::linear();
  Rng rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 9));
    const LatentShape shape{64, 64, 1};
    std::vector<LatentGrid> pts;
    for (int i = 0; i < n; ++i) pts.push_back(random_latent(shape, rng, 0.5));
    const diffusion::EmpiricalDenoiser den(pts, sched);
    const int t = static_cast<int>(rng.uniform_int(1, 1000));
    const double ab = sched.alpha_bar(t);
    const auto& anchor = pts[rng.uniform_int(0, n - 1)];
    const auto eps = random_latent(shape, rng);
    LatentGrid z(shape);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = std::sqrt(ab) * anchor[j] + std::sqrt(1 - ab) * eps[j];

    // Direct weighted sum in extended precision.
    std::vector<long double> w(n);
    long double total = 0.0L;
    for (int i = 0; i < n; ++i) {
      long double d2 = 0.0L;
      for (std::size_t j = 0; j < z.size(); ++j) {
        const long double diff = z[j] - std::sqrt(static_cast<long double>(ab)) * pts[i][j];
        d2 += diff * diff;
      }
      w[i] = std::exp(-d2 / (2.0L * (1.0L - ab)));
      total += w[i];
    }
    const auto got = den.predict_x0(z, t);
    double num = 0.0, norm = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      long double acc = 0.0L;
      for (int i = 0; i < n; ++i) acc += w[i] * pts[i][j];
      const double want = static_cast<double>(acc / total);
      num += (got[j] - want) * (got[j] - want);
      norm += want * want;
    }
    worst = std::max(worst, std::sqrt(num / norm));
  }
  report(3, "denoiser oracle", worst <= 1e-9, fmt("max relative error %.2e (<= 1e-9), 100 draws, F=4096", worst));
}

void pooling_units() {
  diffusion::GuidanceConfig cfg;
  cfg.w = 0.25;
  cfg.d = 1.0;
  bool exact = true;
  for (int i = 1; i <= 1000; ++i) exact = exact && diffusion::pooling_weight(1.0, cfg, i) == 0.25 / i;

  latent::IdentityCodec codec;
  cfg.symmetrizer = {SymmetrizerKind::ra, SymmetrySpec::for_image(64, 64, 6), 0};
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto z = codec.encode(synthdata::generate_wheel([&] {
      synthdata::WheelParams p;
      p.n_spokes = 3 + k % 6;
      p.asymmetry = 0.3;
      p.seed = k;
      return p;
    }(), 64));
    const auto z_r = codec.encode(cfg.symmetrizer.project(codec.decode(z)));
    const auto out = diffusion::regularize_pool(z, 1 + k, cfg, codec);
    const double before = latent::linear_combination(1.0, z, -1.0, z_r).norm();
    const double after = latent::linear_combination(1.0, out.latent, -1.0, z_r).norm();
    worst = std::max(worst, std::abs(after - (1.0 - out.lambda) * before) / before);
  }
  cfg.w = 0.0;
  const auto z = codec.encode(random_wheels(1, 0.3, 5)[0]);
  const bool identity = diffusion::regularize_pool(z, 1, cfg, codec).latent == z;
  report(4, "pooling weight and contraction", exact && worst <= 1e-12 && identity,
         std::string("lambda == 0.25/i exact: ") + (exact ? "yes" : "no") +
             fmt("; contraction rel err %.1e (<= 1e-12)", worst) + "; w=0 bitwise: " + (identity ? "yes" : "no"));
}

struct Batch {
  std::vector<ImageGrid> images;
  std::vector<double> sym_ra, sym_ss;
};

Batch run_batch(const cli::Context& ctx, const diffusion::GuidanceConfig& g,
                const std::vector<std::pair<int, int>>& pairs) {
  Batch b;
  const auto& cfg = ctx.config();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto img = ctx.interpolate(ctx.corpus()[pairs[i].first], ctx.corpus()[pairs[i].second], g,
                                     mix_seed(cfg.seed, i)).image;
    b.sym_ra.push_back(metrics::symmetry_score(img, cfg.symmetrizer(SymmetrizerKind::ra)));
    b.sym_ss.push_back(metrics::symmetry_score(img, cfg.symmetrizer(SymmetrizerKind::ss)));
    b.images.push_back(img);
  }
  return b;
}

void guidance_direction(const cli::RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const cli::Context ctx(cfg);
  const auto pairs = cli::sample_pairs(50, static_cast<int>(ctx.corpus().size()), 505);
  auto g = cfg.guidance_config();
  g.mode = diffusion::GuidanceMode::off;
  const auto off = run_batch(ctx, g, pairs);
  g.mode = diffusion::GuidanceMode::interleaved;
  g.symmetrizer = cfg.symmetrizer(SymmetrizerKind::ra);
  const auto fit_ra = run_batch(ctx, g, pairs);
  g.symmetrizer = cfg.symmetrizer(SymmetrizerKind::ss);
  const auto fit_ss = run_batch(ctx, g, pairs);
  int win_ra = 0, win_ss = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    win_ra += fit_ra.sym_ra[i] >= off.sym_ra[i];
    win_ss += fit_ss.sym_ss[i] >= off.sym_ss[i];
  }
  const double m_off_ra = metrics::mean(off.sym_ra), m_ra = metrics::mean(fit_ra.sym_ra);
  const double m_off_ss = metrics::mean(off.sym_ss), m_ss = metrics::mean(fit_ss.sym_ss);
  const double secs = seconds_since(t0);
  const bool ok = m_ra > m_off_ra && m_ss > m_off_ss && win_ra >= 45 && win_ss >= 45 && secs < 300.0;
  report(5, "guidance direction", ok,
         fmt("Sym RA %.4f vs off %.4f, SS %.4f vs off %.4f", m_ra, m_off_ra, m_ss, m_off_ss) +
             fmt("; pairs not worse RA %.0f/50, SS %.0f/50 (>= 45); %.0fs", win_ra, win_ss, secs));
}

// Same batch with the memorizing empirical denoiser; printed only.
void guidance_direction_empirical(cli::RunConfig cfg) {
  cfg.denoiser = "empirical";
  const cli::Context ctx(cfg);
  const auto pairs = cli::sample_pairs(50, static_cast<int>(ctx.corpus().size()), 505);
  auto g = cfg.guidance_config();
  g.mode = diffusion::GuidanceMode::off;
  const auto off = run_batch(ctx, g, pairs);
  g.mode = diffusion::GuidanceMode::interleaved;
  const auto fit_ra = run_batch(ctx, g, pairs);
  int win = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) win += fit_ra.sym_ra[i] >= off.sym_ra[i];
  std::printf("      info: empirical denoiser, Sym RA %.4f vs off %.4f, pairs not worse %d/50\n",
              metrics::mean(fit_ra.sym_ra), metrics::mean(off.sym_ra), win);
}

void sweep_direction(cli::RunConfig cfg, const fs::path& scratch) {
  cfg.out = (scratch / "sweep").string();
  cfg.w_values = {0.0, 0.1, 0.25, 0.35, 0.5};
  const auto r = cli::cmd_sweep(cfg);
  int inversions = 0;
  std::string col;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (i > 0 && r.rows[i].mean_sym_ra < r.rows[i - 1].mean_sym_ra) ++inversions;
    col += fmt("%.4f ", r.rows[i].mean_sym_ra);
  }
  const bool base = r.rows[0].mean_sym_ra == r.baseline.mean_sym_ra && r.rows[0].mean_sym_ss == r.baseline.mean_sym_ss;
  report(6, "weight sweep direction", inversions <= 1 && base,
         "Sym RA over w {0,.1,.25,.35,.5}: " + col + fmt("; inversions %.0f (<= 1); w=0 == off: ", inversions) +
             (base ? "yes" : "no"));
}

std::map<std::string, cli::AblationRow> ablation_rows(cli::RunConfig cfg, const fs::path& scratch) {
  static std::map<std::string, cli::AblationRow> rows;
  if (rows.empty()) {
    cfg.out = (scratch / "ablate").string();
    for (const auto& row : cli::cmd_ablate(cfg).rows) rows[row.variant] = row;
  }
  return rows;
}

void decay_ablation(const cli::RunConfig& cfg, const fs::path& scratch) {
  const auto rows = ablation_rows(cfg, scratch);
  const auto& on = rows.at("similarity+decay");
  const auto& no_decay = rows.at("no-decay");
  const double needed = std::pow(cfg.steps, cfg.guidance.d);
  const bool ratio = no_decay.final_lambda >= needed * on.final_lambda;
  report(7, "decay ablation", ratio,
         fmt("final lambda %.4g vs %.4g, ratio %.1f (>= %.0f)", no_decay.final_lambda, on.final_lambda,
             no_decay.final_lambda / on.final_lambda, needed) +
             fmt("; FD decay-on %.4f, decay-off %.4f, no-similarity %.4f", on.frechet_distance,
                 no_decay.frechet_distance, rows.at("no-similarity").frechet_distance));
  std::printf("      decay-off FD %s decay-on FD (expected direction: higher)\n",
              no_decay.frechet_distance > on.frechet_distance ? ">" : "<=");
}

void end_only(const cli::RunConfig& cfg, const fs::path& scratch) {
  const auto rows = ablation_rows(cfg, scratch);
  const cli::Context ctx(cfg);
  auto g = cfg.guidance_config();
  g.mode = diffusion::GuidanceMode::end_only;
  g.symmetrizer = cfg.symmetrizer(SymmetrizerKind::ra);
  const auto pairs = cli::sample_pairs(cfg.batch_pairs, static_cast<int>(ctx.corpus().size()), 808);
  const auto batch = run_batch(ctx, g, pairs);
  double lowest = 1.0;
  for (double s : batch.sym_ra) lowest = std::min(lowest, s);
  report(8, "end-only constraint", lowest >= 0.98,
         fmt("min Sym RA %.4f (>= 0.98) over %.0f outputs; FD end-only %.4f, interleaved %.4f", lowest,
             batch.sym_ra.size(), rows.at("end-only").frechet_distance,
             rows.at("similarity+decay").frechet_distance));
}

void frechet_cases() {
  Rng rng(909);
  auto psd = [&](int dim) {
    Eigen::MatrixXd a(dim, dim + 3);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    return Eigen::MatrixXd(a * a.transpose() / (dim + 3));
  };
  auto vec = [&](int dim) {
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.normal();
    return v;
  };
  double ident = 0.0, scalar = 0.0, shift = 0.0, sym = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int dim = 2 + k % 10;
    const metrics::GaussianStats a{vec(dim), psd(dim)}, b{vec(dim), psd(dim)};
    ident = std::max(ident, std::abs(metrics::frechet_distance(a, a)));
    sym = std::max(sym, std::abs(metrics::frechet_distance(a, b) - metrics::frechet_distance(b, a)));
    const Eigen::VectorXd delta = vec(dim);
    const metrics::GaussianStats c{a.mean + delta, a.cov};
    shift = std::max(shift, std::abs(metrics::frechet_distance(a, c) - delta.squaredNorm()));
    const double m1 = rng.normal(), m2 = rng.normal(), s1 = rng.uniform(0.01, 3), s2 = rng.uniform(0.01, 3);
    const metrics::GaussianStats p{Eigen::VectorXd::Constant(1, m1), Eigen::MatrixXd::Constant(1, 1, s1 * s1)};
    const metrics::GaussianStats q{Eigen::VectorXd::Constant(1, m2), Eigen::MatrixXd::Constant(1, 1, s2 * s2)};
    scalar = std::max(scalar, std::abs(metrics::frechet_distance(p, q) - ((m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2))));
  }
  report(9, "frechet analytic cases", ident <= 1e-8 && scalar <= 1e-9 && shift <= 1e-8 && sym <= 1e-8,
         fmt("identical %.1e, 1-D %.1e, mean shift %.1e, symmetry %.1e", ident, scalar, shift, sym));
}

void slerp_noise() {
  Rng rng(1010);
  const auto sched = diffusion::NoiseSchedule::linear();
  bool endpoints = true;
  double ortho = 0.0, diff = 0.0;
  bool same = true;
  for (int k = 0; k < 50; ++k) {
    const LatentShape shape{16, 16, 1};
    const auto a = random_latent(shape, rng), b = random_latent(shape, rng);
    endpoints = endpoints && latent::slerp(a, b, 0.0) == a && latent::slerp(a, b, 1.0) == b;

    // Gram-Schmidt to an orthonormal pair.
    LatentGrid u = a, v = b;
    const double nu = u.norm();
    for (double& x : u.data()) x /= nu;
    const double proj = v.dot(u);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] -= proj * u[j];
    const double nv = v.norm();
    for (double& x : v.data()) x /= nv;
    const auto m = latent::slerp(u, v, 0.5);
    for (std::size_t j = 0; j < m.size(); ++j) ortho = std::max(ortho, std::abs(m[j] - (u[j] + v[j]) / std::sqrt(2.0)));

    const int t = static_cast<int>(rng.uniform_int(1, 1000));
    const auto [na, nb] = latent::add_shared_noise(a, b, t, sched, k);
    const double s = std::sqrt(sched.alpha_bar(t));
    for (std::size_t j = 0; j < a.size(); ++j) diff = std::max(diff, std::abs((na[j] - nb[j]) - s * (a[j] - b[j])));
    const auto [pa, pb] = latent::add_shared_noise(a, a, t, sched, k);
    same = same && pa == pb;
  }
  report(10, "slerp and shared noise", endpoints && ortho <= 1e-9 && diff <= 1e-12 && same,
         std::string("endpoints exact: ") + (endpoints ? "yes" : "no") +
             fmt("; orthogonal midpoint err %.1e (<= 1e-9); noise difference err %.1e (<= 1e-12)", ortho, diff) +
             "; equal inputs bitwise: " + (same ? "yes" : "no"));
}

void determinism(const std::string& cli, const fs::path& scratch) {
  const std::vector<std::string> commands{
      "dataset --count 8 --seed 7 --out out/ds",
      "interpolate out/ds/wheel_00000.png out/ds/wheel_00001.png --out out/interp",
      "interpolate out/ds/wheel_00002.png out/ds/wheel_00003.png --symmetrizer ss --mode end-only --out out/end",
      "branch --pairs 1 --depth 2 --steps 20 --out out/branch",
      "sweep --batch 4 --steps 20 --w-values 0 0.25 --out out/sweep",
      "eval out/branch/images out/ds --out out/eval",
      "ablate --batch 4 --steps 20 --out out/ablate",
  };
  std::vector<std::map<std::string, std::string>> trees;
  bool ran = true;
  for (const char* run_dir : {"run_a", "run_b"}) {
    const fs::path dir = scratch / run_dir;
    fs::create_directories(dir);
    for (const auto& c : commands) ran = ran && run("cd '" + dir.string() + "' && '" + cli + "' " + c) == 0;
    trees.push_back(tree_bytes(dir / "out"));
  }
  int differing = 0;
  for (const auto& [name, bytes] : trees[0]) {
    const auto it = trees[1].find(name);
    if (it == trees[1].end() || it->second != bytes) ++differing;
  }
  report(11, "determinism", ran && differing == 0 && trees[0].size() == trees[1].size() && !trees[0].empty(),
         fmt("%.0f commands, %.0f files compared, %.0f differ", commands.size(), trees[0].size(), differing) +
             (ran ? "" : "; a command failed"));
}

void scale_echo(const std::string& cli, const fs::path& scratch) {
  const auto plan = cli::plan_branch(380, cli::RunConfig{}.depth, 0);
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path out = scratch / "branch4";
  const bool ran = run("'" + cli + "' branch --pairs 4 --out '" + out.string() + "'") == 0;
  const double secs = seconds_since(t0);
  int files = 0;
  if (fs::exists(out / "images"))
    for (const auto& e : fs::directory_iterator(out / "images")) files += e.path().extension() == ".png";
  report(12, "scale echo", plan.generated == 5700 && ran && files == 60 && secs < 600.0,
         fmt("380 pairs -> %.0f images (== 5700); 4 pairs -> %.0f PNGs (== 60) in %.1fs (< 600)", plan.generated,
             files, secs));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <path-to-fit-cli>\n");
    return 2;
  }
  const std::string cli = fs::absolute(argv[1]).string();
  const fs::path scratch = fs::temp_directory_path() / "fit_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  cli::RunConfig cfg;
  cfg.batch_pairs = 50;

  criterion(1, "symmetrizer idempotence", idempotence);
  criterion(2, "symmetric fixed point", fixed_point);
  criterion(3, "denoiser oracle", denoiser_oracle);
  criterion(4, "pooling weight and contraction", pooling_units);
  criterion(5, "guidance direction", [&] {
    guidance_direction(cfg);
    guidance_direction_empirical(cfg);
  });
  criterion(6, "weight sweep direction", [&] { sweep_direction(cfg, scratch); });
  criterion(7, "decay ablation", [&] { decay_ablation(cfg, scratch); });
  criterion(8, "end-only constraint", [&] { end_only(cfg, scratch); });
  criterion(9, "frechet analytic cases", frechet_cases);
  criterion(10, "slerp and shared noise", slerp_noise);
  criterion(11, "determinism", [&] { determinism(cli, scratch); });
  criterion(12, "scale echo", [&] { scale_echo(cli, scratch); });

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}

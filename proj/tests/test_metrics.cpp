#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fit/error.hpp"
#include "fit/metrics.hpp"
#include "fit/random.hpp"
#include "test_util.hpp"

using namespace fit::metrics;
using fit::imaging::ImageGrid;
using fit::imaging::Resampling;
using fit::imaging::Symmetrizer;
using fit::imaging::SymmetrizerKind;
using fit::imaging::SymmetrySpec;

namespace {

Symmetrizer make_sym(SymmetrizerKind kind, int size, int n, Resampling res = Resampling::bilinear) {
  return {kind, SymmetrySpec::for_image(size, size, n, res), 0};
}

GaussianStats stats(std::vector<double> mean, Eigen::MatrixXd cov) {
  return {Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size())), std::move(cov)};
}

Eigen::MatrixXd random_psd(int dim, std::uint64_t seed) {
  fit::Rng rng(seed);
  Eigen::MatrixXd a(dim, dim + 2);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  return a * a.transpose() / (dim + 2);
}

Eigen::VectorXd random_vec(int dim, std::uint64_t seed) {
  fit::Rng rng(seed);
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.normal();
  return v;
}

// Trace of (Sa Sb)^(1/2) from the eigenvalues of the (non-symmetric) product.
double frechet_oracle(const GaussianStats& a, const GaussianStats& b) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a.cov * b.cov);
  double tr = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) tr += std::sqrt(std::max(0.0, es.eigenvalues()[i].real()));
  return (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * tr;
}

double batch_mean_sym(double asymmetry, SymmetrizerKind kind) {
  double total = 0.0;
  for (int i = 0; i < 20; ++i) total += symmetry_score(fit::test::wheel(6, asymmetry, 300 + i), make_sym(kind, 64, 6));
  return total / 20.0;
}

}  // namespace

TEST_CASE("symmetry score of an exact fixed point is one") {
  const int n = 16;
  ImageGrid img(n, n, 1);
  // Orbits of the quarter turn share a value.
  for (int r = 0; r < n / 2; ++r)
    for (int c = 0; c < n / 2; ++c) {
      const double v = (r * 7 + c * 3) % 11 / 10.0;
      img(0, r, c) = img(0, c, n - 1 - r) = img(0, n - 1 - r, n - 1 - c) = img(0, n - 1 - c, r) = v;
    }
  CHECK(symmetry_score(img, make_sym(SymmetrizerKind::ra, n, 4, Resampling::nearest)) == 1.0);
  CHECK(symmetry_score(img, make_sym(SymmetrizerKind::ss, n, 4, Resampling::nearest)) == 1.0);
  CHECK(symmetry_score(fit::test::random_image(n, 1), Symmetrizer{}) == 1.0);
}

TEST_CASE("symmetry score of a constant residual on half the disk") {
  // Two-fold SS copies the lower half onto the upper half, which sits c below it.
  const int n = 16;
  const double c = 0.3;
  const auto sym = make_sym(SymmetrizerKind::ss, n, 2, Resampling::nearest);
  ImageGrid img(n, n, 1);
  double upper = 0.0;
  for (int r = 0; r < n; ++r)
    for (int col = 0; col < n; ++col) {
      img(0, r, col) = r >= n / 2 ? 0.5 + c : 0.5;
      if (r < n / 2 && sym.spec.in_disk(r, col)) upper += 1.0;
    }
  const double want = 1.0 - c * std::sqrt(upper) / n;
  CHECK(symmetry_score(img, sym) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("symmetry score matches its definition") {
  for (auto kind : {SymmetrizerKind::ra, SymmetrizerKind::ss}) {
    const auto sym = make_sym(kind, 32, 5);
    const auto img = fit::test::random_image(32, 4, 3);
    const auto r = sym.apply(img);
    const auto m = fit::imaging::mask_disk(img, sym.spec);
    double ss = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) ss += (r.data()[i] - m.data()[i]) * (r.data()[i] - m.data()[i]);
    const double score = symmetry_score(img, sym);
    CHECK(score == doctest::Approx(1.0 - std::sqrt(ss / img.size())).epsilon(1e-14));
    CHECK(score >= 0.0);
    CHECK(score <= 1.0);
  }
}

TEST_CASE("symmetry score drops with asymmetry") {
  for (auto kind : {SymmetrizerKind::ra, SymmetrizerKind::ss}) {
    const auto sym = make_sym(kind, 64, 6);
    for (int i = 0; i < 10; ++i)
      CHECK(symmetry_score(fit::test::wheel(6, 0.3, i), sym) < symmetry_score(fit::test::wheel(6, 0.0, i), sym));
    double prev = 2.0;
    for (double a : {0.0, 0.1, 0.2, 0.3}) {
      const double m = batch_mean_sym(a, kind);
      CHECK(m < prev);
      prev = m;
    }
  }
}

TEST_CASE("fit gaussian two-point and degenerate cases") {
  const std::vector<double> v{1.0, -2.0, 0.5};
  std::vector<std::vector<double>> pm{v, {-1.0, 2.0, -0.5}};
  const auto s = fit_gaussian(pm);
  const Eigen::Vector3d vv(v.data());
  CHECK(s.mean.norm() == 0.0);
  CHECK((s.cov - 2.0 * vv * vv.transpose()).norm() <= 1e-15);

  std::vector<std::vector<double>> same(5, v);
  const auto d = fit_gaussian(same);
  CHECK((d.mean - vv).norm() == 0.0);
  CHECK(d.cov.norm() == 0.0);

  std::vector<std::vector<double>> one{v};
  CHECK_THROWS_AS(fit_gaussian(one), fit::InsufficientDataError);
  std::vector<std::vector<double>> ragged{v, {1.0}};
  CHECK_THROWS_AS(fit_gaussian(ragged), fit::DimensionError);
}

TEST_CASE("fit gaussian on a standard normal sample") {
  fit::Rng rng(99);
  std::vector<std::vector<double>> xs(10000, std::vector<double>(4));
  for (auto& x : xs)
    for (double& v : x) v = rng.normal();
  const auto s = fit_gaussian(xs);
  CHECK(s.mean.cwiseAbs().maxCoeff() <= 0.05);
  CHECK((s.cov - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 0.1);
}

TEST_CASE("frechet distance analytic cases") {
  const auto a = stats({0.3, -1.0, 2.0}, random_psd(3, 1));
  CHECK(std::abs(frechet_distance(a, a)) <= 1e-8);

  for (auto [m1, s1, m2, s2] : {std::array{0.0, 1.0, 0.0, 4.0}, std::array{1.5, 0.2, -0.5, 3.0},
                                 std::array{2.0, 1e-3, 2.0, 1e-3}}) {
    Eigen::MatrixXd c1(1, 1), c2(1, 1);
    c1 << s1 * s1;
    c2 << s2 * s2;
    const double want = (m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2);
    CHECK(std::abs(frechet_distance(stats({m1}, c1), stats({m2}, c2)) - want) <= 1e-9);
  }

  const auto cov = random_psd(5, 2);
  const Eigen::VectorXd mu = random_vec(5, 3);
  const Eigen::VectorXd delta = random_vec(5, 4);
  const GaussianStats p{mu, cov}, q{mu + delta, cov};
  CHECK(std::abs(frechet_distance(p, q) - delta.squaredNorm()) <= 1e-8);
}

TEST_CASE("frechet distance agrees with an eigenvalue oracle and is symmetric") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int dim = 2 + seed % 6;
    const GaussianStats a{random_vec(dim, seed), random_psd(dim, seed + 10)};
    const GaussianStats b{random_vec(dim, seed + 20), random_psd(dim, seed + 30)};
    const double ab = frechet_distance(a, b);
    CHECK(ab >= 0.0);
    CHECK(std::abs(ab - frechet_oracle(a, b)) <= 1e-8);
    CHECK(std::abs(ab - frechet_distance(b, a)) <= 1e-8);
  }
  // Rank-deficient covariances.
  Eigen::MatrixXd low = Eigen::MatrixXd::Zero(3, 3);
  low(0, 0) = 1.0;
  const GaussianStats a{Eigen::VectorXd::Zero(3), low}, b{Eigen::VectorXd::Zero(3), random_psd(3, 5)};
  CHECK(std::abs(frechet_distance(a, b) - frechet_oracle(a, b)) <= 1e-8);
}

TEST_CASE("frechet distance errors") {
  const GaussianStats a{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
  const GaussianStats b{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3)};
  CHECK_THROWS_AS(frechet_distance(a, b), fit::DimensionError);
  GaussianStats nan = a;
  nan.mean[0] = std::nan("");
  CHECK_THROWS_AS(frechet_distance(a, nan), fit::DomainError);
  GaussianStats neg = a;
  neg.cov(1, 1) = -1.0;
  CHECK_THROWS_AS(frechet_distance(neg, a), fit::DomainError);
}

TEST_CASE("downsample features") {
  DownsampleFeatures f;
  CHECK(f.dimension() == 64);
  const ImageGrid flat(64, 64, 1, 0.4);
  for (double v : f.extract(flat)) CHECK(v == doctest::Approx(0.4).epsilon(1e-14));
  const ImageGrid rgb(32, 32, 3, 0.6);
  const auto g = f.extract(rgb);
  CHECK(g.size() == 64);
  for (double v : g) CHECK(v == doctest::Approx(0.6).epsilon(1e-14));
  const auto img = fit::test::wheel(6, 0.1, 1);
  CHECK(f.extract(img) == f.extract(img));
}

TEST_CASE("random projection features are seeded") {
  const auto img = fit::test::random_image(16, 2);
  RandomProjFeatures a(256, 1), b(256, 1), c(256, 2);
  CHECK(a.dimension() == 64);
  CHECK(a.extract(img) == b.extract(img));
  CHECK_FALSE(a.extract(img) == c.extract(img));
  CHECK_THROWS_AS(a.extract(fit::test::random_image(8, 2)), fit::DimensionError);
  CHECK(make_feature_extractor("randproj", 256, 1)->extract(img) == a.extract(img));
  CHECK(make_feature_extractor("downsample", 256)->name() == "downsample");
  CHECK_THROWS_AS(make_feature_extractor("inception", 256), fit::ParameterError);
}

TEST_CASE("corpus against itself has zero distance") {
  std::vector<ImageGrid> corpus;
  for (int i = 0; i < 30; ++i) corpus.push_back(fit::test::wheel(3 + i % 5, 0.1, i));
  DownsampleFeatures f;
  const auto s = corpus_stats(corpus, f);
  CHECK(std::abs(frechet_distance(s, s)) <= 1e-8);
  CHECK(mean(std::vector<double>{1.0, 2.0, 6.0}) == 3.0);
}

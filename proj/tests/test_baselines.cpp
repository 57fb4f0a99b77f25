#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/QR>

#include "detrank/baselines.hpp"
#include "detrank/error.hpp"
#include "detrank/random.hpp"

using namespace detrank;

namespace {

struct Labeled {
  Eigen::MatrixXd features;
  std::vector<std::uint32_t> labels;
};

// Two Gaussian classes of equal size, class 1 shifted by `offset` along every axis.
Labeled two_clusters(std::uint64_t seed, Eigen::Index per_class, Eigen::Index dim, double offset) {
  Rng rng(seed);
  Labeled out;
  out.features.resize(2 * per_class, dim);
  for (Eigen::Index i = 0; i < 2 * per_class; ++i) {
    const std::uint32_t c = i < per_class ? 0 : 1;
    for (Eigen::Index j = 0; j < dim; ++j) out.features(i, j) = rng.normal() + c * offset;
    out.labels.push_back(c);
  }
  return out;
}

}  // namespace

TEST_CASE("scatter matrices") {
  Eigen::MatrixXd f(4, 2);
  f << 0, 0, 2, 0, 10, 10, 12, 10;
  const std::vector<std::uint32_t> labels{0, 0, 1, 1};
  const auto s = compute_scatter(f, labels, 2);
  CHECK(s.class_means.row(0).isApprox(Eigen::RowVector2d(1, 0)));
  CHECK(s.class_means.row(1).isApprox(Eigen::RowVector2d(11, 10)));
  Eigen::Matrix2d within;
  within << 1, 0, 0, 0;
  CHECK(s.within.isApprox(within));
  // two classes of 2 at +-(5, 5) from the global mean (6, 5)
  Eigen::Matrix2d between;
  between << 25, 25, 25, 25;
  CHECK(s.between.isApprox(between));
  // total covariance decomposes into within + between
  Eigen::MatrixXd centered = f.rowwise() - f.colwise().mean();
  CHECK((centered.transpose() * centered / 4.0).isApprox(s.within + s.between));
}

TEST_CASE("empty class is rejected") {
  Eigen::MatrixXd f = Eigen::MatrixXd::Random(4, 2);
  const std::vector<std::uint32_t> labels{0, 0, 2, 2};
  CHECK_THROWS_WITH_AS((void)compute_scatter(f, labels, 3), "class 1 has no objects",
                       ValidationError);
}

TEST_CASE("reg-fda projection") {
  const auto data = two_clusters(3, 50, 4, 3.0);
  const auto s = compute_scatter(data.features, data.labels, 2);
  const auto fda = fit_reg_fda(s, {});
  CHECK(fda.projection.rows() == 4);
  CHECK(fda.projection.cols() == 1);
  CHECK(fda.lambda > 0.0);
  CHECK(fda.lambda < 1.0);

  // the leading direction maximizes the regularized Rayleigh quotient
  const Eigen::MatrixXd reg =
      (1 - fda.lambda) * s.within + fda.lambda * Eigen::MatrixXd::Identity(4, 4);
  auto quotient = [&](const Eigen::VectorXd& u) {
    return u.dot(s.between * u) / u.dot(reg * u);
  };
  const double best = quotient(fda.projection.col(0));
  Rng rng(4);
  for (int n = 0; n < 200; ++n) {
    Eigen::VectorXd u(4);
    for (int j = 0; j < 4; ++j) u(j) = rng.normal();
    CHECK(quotient(u) <= best * (1 + 1e-12));
  }
}

TEST_CASE("lambda follows the largest within-class eigenvalue") {
  ScatterPair s;
  s.within = Eigen::Vector3d(0.5, 0.1, 0.2).asDiagonal();
  s.between = Eigen::Matrix3d::Identity();
  s.class_counts = {2, 2, 2};
  CHECK(fit_reg_fda(s, {1.0}).lambda == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(fit_reg_fda(s, {4.0}).lambda == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(fit_reg_fda(s, {}).projection.cols() == 2);
  CHECK_THROWS_AS((void)fit_reg_fda(s, {0.0}), UsageError);
}

TEST_CASE("sfda does not depend on sample size") {
  const auto data = two_clusters(9, 30, 3, 2.0);
  Labeled doubled;
  doubled.features.resize(120, 3);
  doubled.features << data.features, data.features;
  doubled.labels = data.labels;
  doubled.labels.insert(doubled.labels.end(), data.labels.begin(), data.labels.end());
  CHECK(sfda_score(doubled.features, doubled.labels, 2).score ==
        doctest::Approx(sfda_score(data.features, data.labels, 2).score).epsilon(1e-10));
}

TEST_CASE("sfda on separated clusters") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto data = two_clusters(seed, 60, 5, 20.0);
    CHECK(sfda_score(data.features, data.labels, 2).score > 0.99);
  }
}

TEST_CASE("sfda on indistinguishable classes") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto data = two_clusters(100 + seed, 200, 4, 0.0);
    const double s = sfda_score(data.features, data.labels, 2).score;
    CHECK(std::abs(s - 0.5) <= 0.02);
  }
}

TEST_CASE("sfda separability ordering") {
  const auto near = two_clusters(7, 80, 4, 0.5);
  const auto far = two_clusters(7, 80, 4, 2.0);
  CHECK(sfda_score(far.features, far.labels, 2).score >
        sfda_score(near.features, near.labels, 2).score);
}

TEST_CASE("sfda is not applicable to one class") {
  const auto b = synth_bundle(40, 6, 1, 0.5, 1);
  CHECK_THROWS_AS((void)sfda_score(b), NotApplicableError);
}

TEST_CASE("sfda on a synthetic bundle") {
  const auto b = synth_bundle(120, 16, 3, 0.5, 1);
  const auto r = sfda_score(b);
  CHECK(r.score > 0.0);
  CHECK(r.score <= 1.0);
  CHECK(r.fda.projection.cols() == 2);
}

TEST_CASE("knas closed forms") {
  Rng rng(11);
  Eigen::VectorXd v(6);
  for (int j = 0; j < 6; ++j) v(j) = rng.normal();

  SUBCASE("identical rows") {
    const Eigen::MatrixXd g = v.transpose().replicate(9, 1);
    CHECK(knas_score(g) == doctest::Approx(v.squaredNorm()).epsilon(1e-14));
  }
  SUBCASE("orthogonal rows of equal norm") {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd::Random(6, 6));
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(6, 6);
    const double norm = 2.5;
    const Eigen::MatrixXd g = norm * q.topRows(4);
    CHECK(std::abs(knas_score(g) - norm * norm / 4.0) <= 1e-10);
  }
  SUBCASE("rows that cancel") {
    Eigen::MatrixXd g(2, 6);
    g.row(0) = v.transpose();
    g.row(1) = -v.transpose();
    CHECK(knas_score(g) == 0.0);
  }
  SUBCASE("mean pairwise inner product") {
    const Eigen::MatrixXd g = Eigen::MatrixXd::Random(7, 5);
    const double brute = (g * g.transpose()).sum() / 49.0;
    CHECK(knas_score(g) == doctest::Approx(brute).epsilon(1e-12));
    CHECK(knas_score(g, 3) == doctest::Approx(brute / 3.0).epsilon(1e-12));
  }
  SUBCASE("bad input") {
    CHECK_THROWS_AS((void)knas_score(Eigen::MatrixXd(0, 3)), ValidationError);
    CHECK_THROWS_AS((void)knas_score(Eigen::MatrixXd::Ones(2, 2), 0), UsageError);
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "elr/targets.hpp"

#include "oracles.hpp"

#include <cmath>
#include <sstream>

using namespace elr;

TEST_CASE("ensemble update arithmetic") {
  TargetTable table(3, 2, 0.7);
  Eigen::Vector2d p(0.2, 0.8);
  ensemble_update(table, 1, p);
  CHECK(table.t(1, 0) == doctest::Approx(0.06).epsilon(1e-14));
  CHECK(table.t(1, 1) == doctest::Approx(0.24).epsilon(1e-14));
  CHECK(table.t.row(0).isZero(0.0));  // other rows untouched
  CHECK(table.t.row(2).isZero(0.0));
  CHECK_THROWS_AS(ensemble_update(table, 3, p), std::out_of_range);
}

TEST_CASE("beta zero copies the probabilities") {
  TargetTable table(1, 2, 0.0);
  Eigen::Vector2d p(0.3, 0.7);
  ensemble_update(table, 0, p);
  CHECK(table.t(0, 0) == 0.3);
  CHECK(table.t(0, 1) == 0.7);
}

TEST_CASE("constant updates converge geometrically") {
  TargetTable table(1, 2, 0.7);
  Eigen::Vector2d p(0.4, 0.6);
  const int k = 30;
  for (int step = 0; step < k; ++step) ensemble_update(table, 0, p);
  const double gap = (table.t.row(0).transpose() - p).norm();
  CHECK(gap == doctest::Approx(std::pow(0.7, k) * p.norm()).epsilon(1e-9));
}

TEST_CASE("update is linear in p") {
  Eigen::Vector2d p1(0.9, 0.1), p2(0.2, 0.8);
  TargetTable a(1, 2, 0.6), b(1, 2, 0.6), c(1, 2, 0.6);
  a.t.row(0) << 0.3, 0.4;
  b.t = a.t;
  c.t = a.t;
  ensemble_update(a, 0, (p1 + p2) / 2.0);
  ensemble_update(b, 0, p1);
  ensemble_update(c, 0, p2);
  const Eigen::RowVectorXd average = (b.t.row(0) + c.t.row(0)) / 2.0;
  CHECK((a.t.row(0) - average).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("rows stay inside [0, 1-beta^k] with simplex updates") {
  Rng rng(7);
  std::normal_distribution<double> gauss(0.0, 2.0);
  const double beta = 0.8;
  TargetTable table(4, 3, beta);
  for (int k = 1; k <= 200; ++k) {
    for (Eigen::Index i = 0; i < 4; ++i) {
      Eigen::Vector3d z(gauss(rng), gauss(rng), gauss(rng));
      Eigen::Vector3d e = z.array().exp();
      ensemble_update(table, i, Eigen::VectorXd(e / e.sum()));
    }
    const double cap = 1.0 - std::pow(beta, k);
    CHECK(table.t.minCoeff() >= 0.0);
    CHECK(table.t.maxCoeff() <= cap + 1e-12);
    CHECK(table.t.rowwise().sum().maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("mixup: weights in [0.5, 1], self-mix identity, determinism") {
  Rng rng(5);
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(8, 3);
  Eigen::MatrixXd Y = Eigen::MatrixXd::Random(8, 2).cwiseAbs();
  Eigen::MatrixXd T = Eigen::MatrixXd::Random(8, 2).cwiseAbs();
  const auto mixed = mixup_batch(X, Y, T, 1.0, rng);
  REQUIRE(mixed.size() == 8);
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    CHECK(mixed[i].ell_prime >= 0.5);
    CHECK(mixed[i].ell_prime <= 1.0);
    if (mixed[i].partner == static_cast<Eigen::Index>(i)) {
      CHECK(mixed[i].x == X.row(static_cast<Eigen::Index>(i)).transpose());
    } else {
      const double lp = mixed[i].ell_prime;
      const Eigen::VectorXd expect = lp * X.row(static_cast<Eigen::Index>(i)).transpose() +
                                     (1.0 - lp) * X.row(mixed[i].partner).transpose();
      CHECK((mixed[i].x - expect).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  Rng rng_a(9), rng_b(9);
  const auto a = mixup_batch(X, Y, T, 0.4, rng_a);
  const auto b = mixup_batch(X, Y, T, 0.4, rng_b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].partner == b[i].partner);
    CHECK(a[i].ell_prime == b[i].ell_prime);
  }
  CHECK_THROWS_AS(mixup_batch(X.topRows(0), Y.topRows(0), T.topRows(0), 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(mixup_batch(X, Y, T, 0.0, rng), std::invalid_argument);
}

TEST_CASE("mixup weights at alpha=1 follow Uniform[0.5, 1]") {
  Rng rng(123);
  const Eigen::Index n = 100000;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, 1), Y = Eigen::MatrixXd::Zero(n, 2), T = Eigen::MatrixXd::Zero(n, 2);
  const auto mixed = mixup_batch(X, Y, T, 1.0, rng);
  std::vector<double> samples;
  samples.reserve(mixed.size());
  for (const auto& m : mixed) samples.push_back(m.ell_prime);
  const double d = oracle::ks_statistic(std::move(samples), [](double x) {
    if (x < 0.5) return 0.0;
    if (x > 1.0) return 1.0;
    return (x - 0.5) / 0.5;
  });
  CHECK(d < 0.01);
}

TEST_CASE("label refinement") {
  Eigen::Vector2d one_hot(1.0, 0.0), t(0.8, 0.2);
  CHECK(refine_labels(one_hot, t) == one_hot);  // one-hot survives

  Eigen::Vector2d y(0.5, 0.5);
  const Eigen::VectorXd refined = refine_labels(y, t);
  CHECK(refined[0] == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(refined[1] == doctest::Approx(0.2).epsilon(1e-14));

  const Eigen::VectorXd cold = refine_labels(y, Eigen::Vector2d(0.0, 0.0));
  CHECK(cold[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(cold[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("ramp schedule") {
  CHECK(ramp(40000, 40000, 3.0) == 3.0);
  CHECK(ramp(50000, 40000, 3.0) == 3.0);  // saturates past the ramp
  CHECK(ramp(0, 40000, 1.0) == doctest::Approx(std::exp(-5.0)).epsilon(1e-14));
  CHECK(ramp(20000, 40000, 2.0) == doctest::Approx(2.0 * std::exp(-1.25)).epsilon(1e-14));
  CHECK_THROWS_AS(ramp(1, 0, 1.0), std::invalid_argument);
}

TEST_CASE("target table dump") {
  TargetTable table(2, 2, 0.5);
  ensemble_update(table, 0, Eigen::Vector2d(0.25, 0.75));
  std::stringstream ss;
  write_targets(ss, table);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "t0 t1");
  double a, b;
  ss >> a >> b;
  CHECK(a == 0.125);
  CHECK(b == 0.375);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "elr/analysis.hpp"
#include "elr/losses.hpp"
#include "elr/model.hpp"
#include "elr/rng.hpp"

#include "oracles.hpp"

#include <cmath>

using namespace elr;

namespace {

NoisyDataset binary_data(Eigen::Index n, Eigen::Index p, double sigma, double delta, std::uint64_t seed) {
  return inject_symmetric_noise(gen_mixture(n, p, 2, sigma, seed), delta, seed);
}

Eigen::MatrixXd one_hot_probs(const std::vector<int>& labels, int classes) {
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (Eigen::Index i = 0; i < probs.rows(); ++i) probs(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  return probs;
}

}  // namespace

TEST_CASE("breakdown at the two extremes") {
  const NoisyDataset data = binary_data(60, 4, 0.3, 0.5, 3);
  REQUIRE(!data.wrong_set.empty());

  const Breakdown truth = breakdown(one_hot_probs(data.true_labels, 2), data.observed_labels, data.true_labels,
                                    data.clean_set, data.wrong_set);
  CHECK(truth.clean_correct == 1.0);
  CHECK(truth.wrong_correct == 1.0);
  CHECK(truth.wrong_memorized == 0.0);

  const Breakdown memo = breakdown(one_hot_probs(data.observed_labels, 2), data.observed_labels, data.true_labels,
                                   data.clean_set, data.wrong_set);
  CHECK(memo.clean_correct == 1.0);
  CHECK(memo.wrong_memorized == 1.0);
  CHECK(memo.wrong_correct == 0.0);
}

TEST_CASE("breakdown matches a hand count on a small case") {
  // 6 examples, 3 classes: indices 0-2 clean, 3-5 wrong
  std::vector<int> true_labels = {0, 1, 2, 0, 1, 2};
  std::vector<int> observed = {0, 1, 2, 1, 2, 0};
  std::vector<Eigen::Index> clean = {0, 1, 2}, wrong = {3, 4, 5};
  Eigen::MatrixXd probs(6, 3);
  probs << 0.7, 0.2, 0.1,   // pred 0 = true (clean correct)
           0.1, 0.2, 0.7,   // pred 2 != true (clean incorrect)
           0.2, 0.2, 0.6,   // pred 2 = true (clean correct)
           0.2, 0.7, 0.1,   // pred 1 = observed (memorized)
           0.8, 0.1, 0.1,   // pred 0 = neither (other)
           0.1, 0.1, 0.8;   // pred 2 = true (wrong correct)
  const Breakdown b = breakdown(probs, observed, true_labels, clean, wrong);
  CHECK(b.clean_correct == doctest::Approx(2.0 / 3.0));
  CHECK(b.clean_incorrect == doctest::Approx(1.0 / 3.0));
  CHECK(b.wrong_memorized == doctest::Approx(1.0 / 3.0));
  CHECK(b.wrong_other == doctest::Approx(1.0 / 3.0));
  CHECK(b.wrong_correct == doctest::Approx(1.0 / 3.0));
  CHECK(b.clean_correct + b.clean_incorrect == doctest::Approx(1.0));
  CHECK(b.wrong_correct + b.wrong_memorized + b.wrong_other == doctest::Approx(1.0));
}

TEST_CASE("breakdown ties go to the lowest class index") {
  std::vector<int> true_labels = {1}, observed = {1};
  std::vector<Eigen::Index> clean = {0}, wrong;
  Eigen::MatrixXd probs(1, 2);
  probs << 0.5, 0.5;
  const Breakdown b = breakdown(probs, observed, true_labels, clean, wrong);
  CHECK(b.clean_correct == 0.0);  // tie resolves to class 0, not the true class 1
  CHECK(b.wrong_empty);
}

TEST_CASE("mislabeled accuracy extremes") {
  const NoisyDataset data = binary_data(200, 6, 1e-9, 0.4, 5);
  const Eigen::VectorXd v = data.direction();
  CHECK(mislabeled_accuracy(v, data) == 1.0);
  CHECK(mislabeled_accuracy(Eigen::VectorXd(-v), data) == 0.0);
}

TEST_CASE("random separators score near one half on the wrong set (mean over seeds)") {
  double acc_sum = 0.0;
  int runs = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const NoisyDataset data = binary_data(50, 100, 0.1, 0.4, seed);
    if (data.wrong_set.empty()) continue;
    const ModelParams params = init_params(Arch::linear(2, 100), seed, 2.0);
    acc_sum += mislabeled_accuracy(params.theta_binary(), data);
    ++runs;
  }
  const double mean = acc_sum / runs;
  CHECK(mean > 0.4);
  CHECK(mean < 0.6);
}

TEST_CASE("gradient correlation") {
  Eigen::Vector3d v(1.0, 0.0, 0.0);
  CHECK(grad_correlation(Eigen::Vector3d(-1.0, 0.0, 0.0), v).value == 1.0);
  CHECK(grad_correlation(Eigen::Vector3d(0.0, 2.0, 0.0), v).value == 0.0);
  const GradCorrelation zero = grad_correlation(Eigen::Vector3d::Zero(), v);
  CHECK(zero.zero_grad);
  CHECK(zero.value == 0.0);
}

TEST_CASE("kappa statistics") {
  const NoisyDataset data = binary_data(300, 5, 0.2, 0.4, 9);
  const KappaStats at_zero = kappa_stats(Eigen::VectorXd::Zero(5), data);
  CHECK(at_zero.mean_sq_clean == 1.0);  // tanh(0) - eps squared is exactly 1
  CHECK(at_zero.mean_sq_wrong == 1.0);

  // saturated separator aligned with the true signs
  const NoisyDataset crisp = binary_data(300, 5, 0.0, 0.4, 9);
  const Eigen::VectorXd big = 50.0 * crisp.direction();
  const KappaStats sat = kappa_stats(big, crisp);
  CHECK(sat.mean_sq_clean < 1e-10);
  CHECK(sat.mean_sq_wrong > 4.0 - 1e-10);
}

TEST_CASE("target agreement") {
  const NoisyDataset data = binary_data(100, 4, 0.3, 0.4, 11);
  Eigen::MatrixXd truth = one_hot_probs(data.true_labels, 2);
  const TargetAgreement a = target_agreement(truth, data.observed_labels, data.true_labels);
  CHECK(a.match_true == 1.0);
  CHECK(a.match_observed == doctest::Approx(1.0 - data.wrong_fraction()));
  CHECK(!a.cold);

  const TargetAgreement b =
      target_agreement(one_hot_probs(data.observed_labels, 2), data.observed_labels, data.true_labels);
  CHECK(b.match_observed == 1.0);

  const TargetAgreement cold =
      target_agreement(Eigen::MatrixXd::Zero(data.size(), 2), data.observed_labels, data.true_labels);
  CHECK(cold.cold);

  const TargetAgreement wrong_only =
      target_agreement(truth, data.observed_labels, data.true_labels, data.wrong_set);
  CHECK(wrong_only.match_observed == 0.0);
  CHECK(wrong_only.match_true == 1.0);
}

TEST_CASE("separability: dimension excess, single point, alternating square") {
  Rng rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd X(5, 8);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index k = 0; k < 8; ++k) X(i, k) = gauss(rng);
  std::vector<int> labels = {1, -1, 1, 1, -1};
  const SeparabilityReport r = check_separability(X, labels);
  CHECK(r.verdict == Separability::Separable);
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(labels[static_cast<std::size_t>(i)] * X.row(i).dot(r.certificate) >= 1.0);

  Eigen::MatrixXd one(1, 3);
  one << 0.3, -0.2, 0.9;
  CHECK(check_separability(one, {-1}).verdict == Separability::Separable);

  Eigen::MatrixXd square(4, 2);
  square << 1, 0, 0, 1, -1, 0, 0, -1;
  CHECK(check_separability(square, {1, -1, 1, -1}).verdict == Separability::NotSeparable);
}

TEST_CASE("separability agrees with the hull oracle on random small instances") {
  Rng rng(77);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  int undecided = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 2 + trial % 9;
    const Eigen::Index p = 1 + trial % 3;
    Eigen::MatrixXd X(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < p; ++k) X(i, k) = gauss(rng);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& s : labels) s = coin(rng) ? 1 : -1;

    const SeparabilityReport report = check_separability(X, labels);
    if (report.verdict == Separability::Undecided) {
      ++undecided;
      continue;
    }
    const bool expected = oracle::separable_oracle(X, labels);
    CHECK((report.verdict == Separability::Separable) == expected);
    if (report.verdict == Separability::Separable) {
      for (Eigen::Index i = 0; i < n; ++i)
        CHECK(labels[static_cast<std::size_t>(i)] * X.row(i).dot(report.certificate) >= 1.0);
    }
  }
  CHECK(undecided <= 2);
}

TEST_CASE("cover count closed cases") {
  using boost::multiprecision::cpp_int;
  CHECK(cover_count(3, 3) == cpp_int(8));
  CHECK(cover_count(4, 2) == cpp_int(8));
  for (std::int64_t n = 1; n <= 10; ++n) CHECK(cover_count(n, 1) == cpp_int(2));
  for (std::int64_t n = 1; n <= 64; ++n) {
    CHECK(cover_count(n, n) == cpp_int(1) << n);
    CHECK(cover_count(n, n + 5) == cpp_int(1) << n);  // saturates for p >= n
  }
  // monotone nondecreasing in p
  for (std::int64_t p = 1; p <= 12; ++p) CHECK(cover_count(9, p) >= cover_count(9, p - 1 > 0 ? p - 1 : 1));
  CHECK_THROWS_AS(cover_count(0, 1), std::invalid_argument);
}

TEST_CASE("cover count matches brute-force dichotomy enumeration") {
  using boost::multiprecision::cpp_int;
  Rng rng(123);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index n = 3; n <= 6; ++n) {
    for (Eigen::Index p = 1; p <= 3; ++p) {
      Eigen::MatrixXd X(n, p);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < p; ++k) X(i, k) = gauss(rng);
      const std::uint64_t counted = oracle::count_separable_dichotomies(X);
      CHECK(cover_count(n, p) == cpp_int(counted));
    }
  }
}

TEST_CASE("memorization probability bound") {
  // p = n keeps only the k = 0 term
  CHECK(memorization_prob_bound(30, 30, 0.4) == doctest::Approx(2.0 * std::pow(0.8, 30)).epsilon(1e-12));
  CHECK(memorization_prob_bound(30, 10, 0.0) == 2.0);
  CHECK(memorization_prob_bound(10, 11, 0.4) == 0.0);

  const double ours = memorization_prob_bound(50, 45, 0.4);
  const double reference = 2.0 * oracle::binomial_cdf_highprec(50, 5, 0.2);
  CHECK(std::abs(ours - reference) / reference < 1e-10);

  const double big = memorization_prob_bound(500, 400, 0.5);
  const double reference_big = 2.0 * oracle::binomial_cdf_highprec(500, 100, 0.25);
  CHECK(std::abs(big - reference_big) / reference_big < 1e-9);
}

TEST_CASE("finite-difference harness") {
  // a linear function is exact under central differences
  Eigen::Vector3d slope(1.5, -2.0, 0.25), point(0.1, 0.2, -0.4);
  auto linear = [&slope](const Eigen::VectorXd& z) { return slope.dot(z); };
  const FdReport lin = fd_gradient_check(linear, slope, point, 1e-5);
  CHECK(lin.max_rel_err < 1e-10);
  CHECK(!lin.clamped);

  // cross entropy at a random point
  Eigen::Vector3d z(0.3, -0.7, 1.1);
  const Eigen::VectorXd p = softmax(z);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(3);
  y[1] = 1.0;
  auto ce_fn = [&](const Eigen::VectorXd& logits) { return ce_loss(softmax(logits), 1); };
  CHECK(fd_gradient_check(ce_fn, ce_coeff(p, y), z, 1e-5).max_rel_err < 1e-6);

  // the clamp boundary skips the check
  Eigen::Vector2d sharp(40.0, -40.0), t(1.0, 0.0);
  auto elr_fn = [&](const Eigen::VectorXd& logits) { return elr_penalty(softmax(logits), t); };
  auto guard = [&](const Eigen::VectorXd& logits) { return 1.0 - softmax(logits).dot(t) <= 2.0 * kInnerClamp; };
  const FdReport clamped = fd_gradient_check(elr_fn, elr_coeff(softmax(sharp), t, 1.0), sharp, 1e-5, guard);
  CHECK(clamped.clamped);

  CHECK_THROWS_AS(fd_gradient_check(linear, slope, point, 1e-3), std::invalid_argument);
}

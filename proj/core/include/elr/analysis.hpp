#pragma once

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "elr/dataset.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace elr {

// Fraction taxonomy of Fig-1 style accuracy plots. Clean fractions and wrong
// fractions each sum to one (when their sets are nonempty).
struct Breakdown {
  double clean_correct = 0.0;
  double clean_incorrect = 0.0;
  double wrong_correct = 0.0;    // prediction equals the true label
  double wrong_memorized = 0.0;  // prediction equals the observed wrong label
  double wrong_other = 0.0;
  bool wrong_empty = false;
};

// Predictions are argmax rows of probs; ties break to the lowest class index.
Breakdown breakdown(const Eigen::Ref<const Eigen::MatrixXd>& probs, const std::vector<int>& observed,
                    const std::vector<int>& true_labels, const std::vector<Eigen::Index>& clean_set,
                    const std::vector<Eigen::Index>& wrong_set);

// Fraction of the wrong set whose sign(theta^T x) matches the true label sign.
double mislabeled_accuracy(const Eigen::VectorXd& theta, const NoisyDataset& data);

struct GradCorrelation {
  double value = 0.0;
  bool zero_grad = false;
};

// -grad^T v / ||grad||; a zero gradient is flagged and reports 0.
GradCorrelation grad_correlation(const Eigen::VectorXd& grad, const Eigen::VectorXd& v);

// kappa_i = tanh(theta^T x_i) - eps_i with eps the observed +-1 label;
// mean squared kappa over the clean and wrong sets separately.
struct KappaStats {
  double mean_sq_clean = 0.0;
  double mean_sq_wrong = 0.0;
  bool clean_empty = false;
  bool wrong_empty = false;
};

KappaStats kappa_stats(const Eigen::VectorXd& theta, const NoisyDataset& data);

struct TargetAgreement {
  double match_observed = 0.0;
  double match_true = 0.0;
  bool cold = false;  // all target rows still zero
};

TargetAgreement target_agreement(const Eigen::Ref<const Eigen::MatrixXd>& targets,
                                 const std::vector<int>& observed, const std::vector<int>& true_labels);
// Restricted to a subset of example indices (e.g. the wrong set).
TargetAgreement target_agreement(const Eigen::Ref<const Eigen::MatrixXd>& targets,
                                 const std::vector<int>& observed, const std::vector<int>& true_labels,
                                 const std::vector<Eigen::Index>& subset);

enum class Separability { Separable, NotSeparable, Undecided };

// Homogeneous (through-origin) linear separability report. `certificate` is a
// margin-1 separator when Separable: labels[i] * x_i^T certificate >= 1 for
// every i, re-verified before the verdict is returned. When NotSeparable the
// dual convex combination of signed points has norm <= dual_tolerance (a
// Gordan-type infeasibility certificate). Solver non-convergence yields
// Undecided, never a guess.
struct SeparabilityReport {
  Separability verdict = Separability::Undecided;
  Eigen::VectorXd certificate;
  double dual_norm = 0.0;
  int iterations = 0;
};

SeparabilityReport check_separability(const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<int>& sign_labels,
                                      int max_iterations = 200000, double dual_tolerance = 1e-9);

// Schlafli/Cover count of homogeneously separable dichotomies of n points in
// general position in R^p: 2 * sum_{k=0}^{p-1} binom(n-1, k). Exact integer.
boost::multiprecision::cpp_int cover_count(std::int64_t n, std::int64_t p);

// 2 * P[Bin(n, delta/2) <= n - p], the non-separability bound. Exact tail sum
// in log-space. Requires p <= n; p > n returns 0 (empty tail).
double memorization_prob_bound(std::int64_t n, std::int64_t p, double delta);

struct FdReport {
  double max_rel_err = 0.0;
  bool clamped = false;  // check skipped: a clamp boundary is within h
};

// Central finite differences of `loss` over logits against the supplied
// analytic gradient. Relative error per coordinate is
// |analytic - numeric| / max(1, |analytic|). `near_clamp`, when given, is
// evaluated at the perturbed points; any hit skips the check.
FdReport fd_gradient_check(const std::function<double(const Eigen::VectorXd&)>& loss,
                           const Eigen::VectorXd& analytic_grad, const Eigen::VectorXd& logits, double h,
                           const std::function<bool(const Eigen::VectorXd&)>& near_clamp = nullptr);

// Full gradient-oracle suite: finite-difference checks of the CE, ELR and KL
// coefficient vectors at C in {2, 3, 10}, the binary closed form against the
// general C = 2 coefficient, and the softmax chain-rule identity.
struct GradcheckOptions {
  int trials = 100;
  std::uint64_t seed = 20240501;
  bool inject_elr_sign_flip = false;  // test hook: must make the suite fail
};

struct GradcheckWorst {
  double err = 0.0;
  int classes = 0;
  int trial = -1;

  void update(double e, int c, int t) {
    if (e > err) {
      err = e;
      classes = c;
      trial = t;
    }
  }
};

struct GradcheckResult {
  GradcheckWorst ce, elr, kl, total;    // finite-difference relative errors, tolerance 1e-6
  GradcheckWorst binary;                // closed form vs general C=2, absolute, tolerance 1e-12
  GradcheckWorst identity;              // chain-rule identity, relative, tolerance 1e-10
  int clamp_skips = 0;

  double worst_ce() const { return ce.err; }
  double worst_elr() const { return elr.err; }
  double worst_kl() const { return kl.err; }
  double worst_total() const { return total.err; }
  double worst_binary() const { return binary.err; }
  double worst_identity() const { return identity.err; }

  bool pass(double fd_tol = 1e-6, double binary_tol = 1e-12, double identity_tol = 1e-10) const {
    return ce.err <= fd_tol && elr.err <= fd_tol && kl.err <= fd_tol && total.err <= fd_tol &&
           binary.err <= binary_tol && identity.err <= identity_tol;
  }
};

GradcheckResult run_gradient_checks(const GradcheckOptions& options);

}  // namespace elr

#include "elr/analysis.hpp"

#include "elr/losses.hpp"
#include "elr/model.hpp"
#include "elr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace elr {

namespace {

Eigen::Index argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < row.size(); ++c)
    if (row[c] > row[best]) best = c;  // strict: ties stay at the lowest index
  return best;
}

}  // namespace

Breakdown breakdown(const Eigen::Ref<const Eigen::MatrixXd>& probs, const std::vector<int>& observed,
                    const std::vector<int>& true_labels, const std::vector<Eigen::Index>& clean_set,
                    const std::vector<Eigen::Index>& wrong_set) {
  Breakdown out;
  if (!clean_set.empty()) {
    Eigen::Index correct = 0;
    for (Eigen::Index i : clean_set) {
      if (argmax_lowest(probs.row(i)) == true_labels[static_cast<std::size_t>(i)]) ++correct;
    }
    out.clean_correct = static_cast<double>(correct) / static_cast<double>(clean_set.size());
    out.clean_incorrect = 1.0 - out.clean_correct;
  }
  if (wrong_set.empty()) {
    out.wrong_empty = true;
    return out;
  }
  Eigen::Index n_correct = 0, n_memorized = 0;
  for (Eigen::Index i : wrong_set) {
    const Eigen::Index pred = argmax_lowest(probs.row(i));
    if (pred == true_labels[static_cast<std::size_t>(i)]) ++n_correct;
    else if (pred == observed[static_cast<std::size_t>(i)]) ++n_memorized;
  }
  const double w = static_cast<double>(wrong_set.size());
  out.wrong_correct = static_cast<double>(n_correct) / w;
  out.wrong_memorized = static_cast<double>(n_memorized) / w;
  out.wrong_other = 1.0 - out.wrong_correct - out.wrong_memorized;
  return out;
}

double mislabeled_accuracy(const Eigen::VectorXd& theta, const NoisyDataset& data) {
  if (data.classes != 2) throw std::invalid_argument("mislabeled_accuracy: two-class only");
  if (data.wrong_set.empty()) throw std::invalid_argument("mislabeled_accuracy: empty wrong set");
  const Eigen::VectorXd scores = data.inputs * theta;
  Eigen::Index hits = 0;
  for (Eigen::Index i : data.wrong_set) {
    const int sign = scores[i] > 0.0 ? 1 : (scores[i] < 0.0 ? -1 : 0);
    if (sign == data.true_sign(i)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.wrong_set.size());
}

GradCorrelation grad_correlation(const Eigen::VectorXd& grad, const Eigen::VectorXd& v) {
  const double norm = grad.norm();
  if (norm == 0.0) return {0.0, true};
  return {-grad.dot(v) / norm, false};
}

KappaStats kappa_stats(const Eigen::VectorXd& theta, const NoisyDataset& data) {
  if (data.classes != 2) throw std::invalid_argument("kappa_stats: two-class only");
  KappaStats out;
  out.clean_empty = data.clean_set.empty();
  out.wrong_empty = data.wrong_set.empty();
  const Eigen::VectorXd scores = data.inputs * theta;
  auto mean_sq = [&](const std::vector<Eigen::Index>& set) {
    double acc = 0.0;
    for (Eigen::Index i : set) {
      const double kappa = std::tanh(scores[i]) - static_cast<double>(data.observed_sign(i));
      acc += kappa * kappa;
    }
    return acc / static_cast<double>(set.size());
  };
  if (!out.clean_empty) out.mean_sq_clean = mean_sq(data.clean_set);
  if (!out.wrong_empty) out.mean_sq_wrong = mean_sq(data.wrong_set);
  return out;
}

TargetAgreement target_agreement(const Eigen::Ref<const Eigen::MatrixXd>& targets, const std::vector<int>& observed,
                                 const std::vector<int>& true_labels) {
  std::vector<Eigen::Index> all(static_cast<std::size_t>(targets.rows()));
  for (Eigen::Index i = 0; i < targets.rows(); ++i) all[static_cast<std::size_t>(i)] = i;
  return target_agreement(targets, observed, true_labels, all);
}

TargetAgreement target_agreement(const Eigen::Ref<const Eigen::MatrixXd>& targets, const std::vector<int>& observed,
                                 const std::vector<int>& true_labels, const std::vector<Eigen::Index>& subset) {
  TargetAgreement out;
  out.cold = targets.isZero(0.0);
  if (subset.empty()) return out;
  Eigen::Index hit_obs = 0, hit_true = 0;
  for (Eigen::Index i : subset) {
    const Eigen::Index pred = argmax_lowest(targets.row(i));
    if (pred == observed[static_cast<std::size_t>(i)]) ++hit_obs;
    if (pred == true_labels[static_cast<std::size_t>(i)]) ++hit_true;
  }
  out.match_observed = static_cast<double>(hit_obs) / static_cast<double>(subset.size());
  out.match_true = static_cast<double>(hit_true) / static_cast<double>(subset.size());
  return out;
}

SeparabilityReport check_separability(const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<int>& sign_labels,
                                      int max_iterations, double dual_tolerance) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (static_cast<Eigen::Index>(sign_labels.size()) != n)
    throw std::invalid_argument("check_separability: label count mismatch");

  // Signed points a_i = eps_i x_i, rescaled so the largest has unit norm.
  Eigen::MatrixXd A(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sign_labels[static_cast<std::size_t>(i)] != 1 && sign_labels[static_cast<std::size_t>(i)] != -1)
      throw std::invalid_argument("check_separability: labels must be +-1");
    A.row(i) = static_cast<double>(sign_labels[static_cast<std::size_t>(i)]) * X.row(i);
  }
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, A.row(i).norm());
  SeparabilityReport report;
  if (scale == 0.0) {  // all points at the origin: no through-origin separator
    report.verdict = Separability::NotSeparable;
    return report;
  }
  A /= scale;

  // Try the early exit that decides most separable instances: a candidate w
  // separates iff min_i a_i^T w > 0; a margin-1 certificate is w / min.
  auto try_certificate = [&](const Eigen::VectorXd& w) -> bool {
    Eigen::VectorXd margins = A * w;
    const double m = margins.minCoeff();
    if (m <= 0.0) return false;
    Eigen::VectorXd theta = w * ((1.0 + 1e-9) / (m * scale));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = static_cast<double>(sign_labels[static_cast<std::size_t>(i)]) * X.row(i).dot(theta);
      if (!(s >= 1.0)) return false;
    }
    report.certificate = theta;
    report.verdict = Separability::Separable;
    return true;
  };

  // Gilbert iteration for the minimum-norm point of conv{a_i}. Norm -> 0
  // certifies infeasibility (Gordan); a strictly positive-margin iterate
  // certifies separability.
  Eigen::VectorXd w = A.row(0).transpose();
  for (int iter = 0; iter < max_iterations; ++iter) {
    report.iterations = iter;
    report.dual_norm = w.norm() * scale;
    if (w.norm() <= dual_tolerance) {
      report.verdict = Separability::NotSeparable;
      return report;
    }
    Eigen::VectorXd scores = A * w;
    Eigen::Index worst = 0;
    scores.minCoeff(&worst);
    if (scores[worst] > 0.0 && try_certificate(w)) return report;

    const Eigen::VectorXd b = A.row(worst).transpose();
    const Eigen::VectorXd d = w - b;
    const double dd = d.squaredNorm();
    if (dd == 0.0) {
      // w coincides with its own worst vertex; it is the min-norm point.
      report.verdict = try_certificate(w) ? Separability::Separable : Separability::Undecided;
      return report;
    }
    double mu = w.dot(d) / dd;
    mu = std::clamp(mu, 0.0, 1.0);
    w = (1.0 - mu) * w + mu * b;
  }
  report.dual_norm = w.norm() * scale;
  if (w.norm() <= dual_tolerance) {
    report.verdict = Separability::NotSeparable;
  } else if (!try_certificate(w)) {
    report.verdict = Separability::Undecided;
  }
  return report;
}

boost::multiprecision::cpp_int cover_count(std::int64_t n, std::int64_t p) {
  if (n < 1 || p < 1) throw std::invalid_argument("cover_count: n and p must be >= 1");
  using boost::multiprecision::cpp_int;
  // 2 * sum_{k=0}^{p-1} binom(n-1, k), with the sum saturating at 2^(n-1).
  cpp_int sum = 0;
  cpp_int binom = 1;  // binom(n-1, 0)
  for (std::int64_t k = 0; k <= std::min(p - 1, n - 1); ++k) {
    sum += binom;
    binom = binom * (n - 1 - k) / (k + 1);
  }
  return 2 * sum;
}

double memorization_prob_bound(std::int64_t n, std::int64_t p, double delta) {
  if (n < 1) throw std::invalid_argument("memorization_prob_bound: n must be >= 1");
  if (delta < 0.0 || delta > 1.0) throw std::invalid_argument("memorization_prob_bound: delta must be in [0, 1]");
  if (p > n) return 0.0;  // empty tail; the bound is meaningful only for p <= n
  const double q = delta / 2.0;
  const std::int64_t m = n - p;
  if (q == 0.0) return 2.0;  // Bin(n, 0) = 0 <= n - p always
  if (q == 1.0) return m >= n ? 2.0 : 0.0;

  // log-space tail sum: sum_{k=0}^{m} exp(lchoose(n,k) + k log q + (n-k) log(1-q))
  const double log_q = std::log(q);
  const double log_1q = std::log1p(-q);
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(static_cast<std::size_t>(m) + 1);
  for (std::int64_t k = 0; k <= m; ++k) {
    const double lchoose = std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
                           std::lgamma(static_cast<double>(n - k) + 1.0);
    const double t = lchoose + static_cast<double>(k) * log_q + static_cast<double>(n - k) * log_1q;
    terms[static_cast<std::size_t>(k)] = t;
    max_term = std::max(max_term, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return std::min(2.0 * std::exp(max_term) * acc, 2.0);
}

FdReport fd_gradient_check(const std::function<double(const Eigen::VectorXd&)>& loss,
                           const Eigen::VectorXd& analytic_grad, const Eigen::VectorXd& logits, double h,
                           const std::function<bool(const Eigen::VectorXd&)>& near_clamp) {
  if (h < 1e-7 || h > 1e-4) throw std::invalid_argument("fd_gradient_check: h must be in [1e-7, 1e-4]");
  FdReport report;
  Eigen::VectorXd point = logits;
  for (Eigen::Index c = 0; c < logits.size(); ++c) {
    point[c] = logits[c] + h;
    if (near_clamp && near_clamp(point)) {
      report.clamped = true;
      return report;
    }
    const double up = loss(point);
    point[c] = logits[c] - h;
    if (near_clamp && near_clamp(point)) {
      report.clamped = true;
      return report;
    }
    const double down = loss(point);
    point[c] = logits[c];
    const double numeric = (up - down) / (2.0 * h);
    const double rel = std::abs(analytic_grad[c] - numeric) / std::max(1.0, std::abs(analytic_grad[c]));
    report.max_rel_err = std::max(report.max_rel_err, rel);
  }
  return report;
}

namespace {

Eigen::VectorXd random_simplex(int classes, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.5);
  Eigen::VectorXd logits(classes);
  for (int c = 0; c < classes; ++c) logits[c] = gauss(rng);
  return softmax(logits);
}

}  // namespace

GradcheckResult run_gradient_checks(const GradcheckOptions& options) {
  GradcheckResult result;
  Rng rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 3);
  const double h = 1e-5;
  const double sign = options.inject_elr_sign_flip ? -1.0 : 1.0;

  for (int classes : {2, 3, 10}) {
    for (int trial = 0; trial < options.trials; ++trial) {
      Eigen::VectorXd logits(classes);
      for (int c = 0; c < classes; ++c) logits[c] = gauss(rng);
      const Eigen::VectorXd p = softmax(logits);
      const int y_class = std::uniform_int_distribution<int>(0, classes - 1)(rng);
      Eigen::VectorXd y = Eigen::VectorXd::Zero(classes);
      y[y_class] = 1.0;

      // Targets cycle through the regimes the trainer produces: raw entries
      // in [0,1] (unnormalized), a proper distribution, cold zeros, one-hot.
      Eigen::VectorXd t(classes);
      switch (coin(rng)) {
        case 0:
          for (int c = 0; c < classes; ++c) t[c] = unit(rng);
          break;
        case 1:
          t = random_simplex(classes, rng);
          break;
        case 2:
          t.setZero();
          break;
        default:
          t.setZero();
          t[std::uniform_int_distribution<int>(0, classes - 1)(rng)] = 1.0;
          break;
      }
      const double lambda = 0.25 + 3.0 * unit(rng);

      auto near_elr_clamp = [&t](const Eigen::VectorXd& z) {
        return 1.0 - softmax(z).dot(t) <= 2.0 * kInnerClamp;
      };

      // CE
      auto ce_fn = [&](const Eigen::VectorXd& z) { return ce_loss(softmax(z), y_class); };
      auto ce_report = fd_gradient_check(ce_fn, ce_coeff(p, y), logits, h);
      result.ce.update(ce_report.max_rel_err, classes, trial);

      // ELR penalty alone
      auto elr_fn = [&](const Eigen::VectorXd& z) { return lambda * elr_penalty(softmax(z), t); };
      auto elr_report = fd_gradient_check(elr_fn, sign * elr_coeff(p, t, lambda), logits, h, near_elr_clamp);
      if (elr_report.clamped) {
        ++result.clamp_skips;
      } else {
        result.elr.update(elr_report.max_rel_err, classes, trial);
      }

      // KL penalty alone
      auto kl_fn = [&](const Eigen::VectorXd& z) { return lambda * kl_penalty(softmax(z), t); };
      auto kl_report = fd_gradient_check(kl_fn, kl_coeff(p, t, lambda), logits, h);
      result.kl.update(kl_report.max_rel_err, classes, trial);

      // Total ELR loss = ce + lambda * penalty
      auto total_fn = [&](const Eigen::VectorXd& z) {
        const Eigen::VectorXd pz = softmax(z);
        return ce_loss(pz, y_class) + lambda * elr_penalty(pz, t);
      };
      Eigen::VectorXd total = ce_coeff(p, y) + sign * elr_coeff(p, t, lambda);
      auto total_report = fd_gradient_check(total_fn, total, logits, h, near_elr_clamp);
      if (total_report.clamped) {
        ++result.clamp_skips;
      } else {
        result.total.update(total_report.max_rel_err, classes, trial);
      }

      // Chain-rule identity for the ELR penalty: dR/ds_c = -t_c / (1 - <p,t>)
      const double denom = std::max(1.0 - p.dot(t), kInnerClamp);
      if (1.0 - p.dot(t) > 2.0 * kInnerClamp) {
        const Eigen::VectorXd dR_ds = -t / denom;
        const Eigen::VectorXd via_chain = coeff_from_prob_partials(p, dR_ds);
        const Eigen::VectorXd via_lemma = sign * elr_coeff(p, t, 1.0);
        for (Eigen::Index c = 0; c < via_chain.size(); ++c) {
          const double rel = std::abs(via_chain[c] - via_lemma[c]) / std::max(1.0, std::abs(via_chain[c]));
          result.identity.update(rel, classes, trial);
        }
      }
    }
  }

  // Binary closed form vs the general coefficient at C = 2.
  const int sweeps = std::max(1000, options.trials * 10);
  std::uniform_real_distribution<double> open(0.001, 0.999);
  for (int k = 0; k < sweeps; ++k) {
    const double s = open(rng);
    const double q = open(rng);
    Eigen::VectorXd p2(2), t2(2);
    p2 << s, 1.0 - s;
    t2 << q, 1.0 - q;
    const double scale = binary_elr_grad_scale(s, q);
    const double g1 = (sign * elr_coeff(p2, t2, 1.0))[0];
    result.binary.update(std::abs(scale - (-g1)), 2, k);
  }
  return result;
}

}  // namespace elr

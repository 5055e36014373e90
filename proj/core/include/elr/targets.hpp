#pragma once

#include <Eigen/Dense>

#include "elr/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace elr {

// Per-example target probabilities maintained by temporal ensembling.
// Rows start at zero, stay entrywise in [0, 1 - beta^k] and never sum
// past 1 as long as the updates are simplex vectors.
struct TargetTable {
  Eigen::MatrixXd t;  // n x C
  double beta = 0.7;

  TargetTable(Eigen::Index n, int classes, double beta_momentum)
      : t(Eigen::MatrixXd::Zero(n, classes)), beta(beta_momentum) {}

  Eigen::Index size() const { return t.rows(); }
  bool cold() const { return t.isZero(0.0); }
};

// Row i <- beta * row i + (1 - beta) * p. Other rows untouched.
void ensemble_update(TargetTable& table, Eigen::Index i, const Eigen::Ref<const Eigen::VectorXd>& p);

struct MixedExample {
  Eigen::VectorXd x, y, t;
  double ell_prime = 1.0;
  Eigen::Index partner = 0;
};

// For each example draw a partner j uniformly from the batch and one
// ell ~ Beta(alpha, alpha); the mixing weight is ell' = max(ell, 1 - ell).
// X is B x p; Y and T are B x C (soft labels and target rows).
std::vector<MixedExample> mixup_batch(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                      const Eigen::Ref<const Eigen::MatrixXd>& Y,
                                      const Eigen::Ref<const Eigen::MatrixXd>& T, double alpha, Rng& rng);

// Entrywise product y .* t renormalized; t clamped below at 1e-12 first.
// A degenerate all-zero product returns y unchanged.
Eigen::VectorXd refine_labels(const Eigen::VectorXd& y, const Eigen::VectorXd& t);

// cap * exp(-5 (1 - min(step, ramp_steps)/ramp_steps)^2); equals cap once
// step >= ramp_steps.
double ramp(std::int64_t step, std::int64_t ramp_steps, double cap);

// Target table dump in the columnar text format (header row, one example
// per row) for offline inspection.
void write_targets(std::ostream& os, const TargetTable& table);

}  // namespace elr

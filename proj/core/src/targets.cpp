#include "elr/targets.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace elr {

void ensemble_update(TargetTable& table, Eigen::Index i, const Eigen::Ref<const Eigen::VectorXd>& p) {
  if (i < 0 || i >= table.t.rows()) throw std::out_of_range("ensemble_update: example index out of range");
  if (p.size() != table.t.cols()) throw std::invalid_argument("ensemble_update: class count mismatch");
  table.t.row(i) = table.beta * table.t.row(i) + (1.0 - table.beta) * p.transpose();
}

std::vector<MixedExample> mixup_batch(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                      const Eigen::Ref<const Eigen::MatrixXd>& Y,
                                      const Eigen::Ref<const Eigen::MatrixXd>& T, double alpha, Rng& rng) {
  const Eigen::Index b = X.rows();
  if (b == 0) throw std::invalid_argument("mixup_batch: empty batch");
  if (Y.rows() != b || T.rows() != b) throw std::invalid_argument("mixup_batch: row count mismatch");
  if (alpha <= 0.0) throw std::invalid_argument("mixup_batch: alpha must be > 0");

  std::uniform_int_distribution<Eigen::Index> pick(0, b - 1);
  // Beta(alpha, alpha) via two gamma draws.
  std::gamma_distribution<double> gamma(alpha, 1.0);

  std::vector<MixedExample> mixed;
  mixed.reserve(static_cast<std::size_t>(b));
  for (Eigen::Index i = 0; i < b; ++i) {
    const Eigen::Index j = pick(rng);
    const double g1 = gamma(rng);
    const double g2 = gamma(rng);
    const double ell = (g1 + g2 > 0.0) ? g1 / (g1 + g2) : 0.5;
    const double lp = std::max(ell, 1.0 - ell);
    MixedExample m;
    m.ell_prime = lp;
    m.partner = j;
    if (j == i) {  // self-mix is the identity regardless of ell
      m.x = X.row(i).transpose();
      m.y = Y.row(i).transpose();
      m.t = T.row(i).transpose();
    } else {
      m.x = lp * X.row(i).transpose() + (1.0 - lp) * X.row(j).transpose();
      m.y = lp * Y.row(i).transpose() + (1.0 - lp) * Y.row(j).transpose();
      m.t = lp * T.row(i).transpose() + (1.0 - lp) * T.row(j).transpose();
    }
    mixed.push_back(std::move(m));
  }
  return mixed;
}

Eigen::VectorXd refine_labels(const Eigen::VectorXd& y, const Eigen::VectorXd& t) {
  Eigen::VectorXd product = y.array() * t.array().max(1e-12);
  const double sum = product.sum();
  if (sum <= 0.0) return y;  // cold targets keep the label as-is
  return product / sum;
}

double ramp(std::int64_t step, std::int64_t ramp_steps, double cap) {
  if (ramp_steps <= 0) throw std::invalid_argument("ramp: ramp_steps must be > 0");
  const double frac = static_cast<double>(std::min(step, ramp_steps)) / static_cast<double>(ramp_steps);
  const double arg = 1.0 - frac;
  return cap * std::exp(-5.0 * arg * arg);
}

void write_targets(std::ostream& os, const TargetTable& table) {
  for (Eigen::Index c = 0; c < table.t.cols(); ++c) os << "t" << c << (c + 1 == table.t.cols() ? '\n' : ' ');
  char buf[64];
  for (Eigen::Index i = 0; i < table.t.rows(); ++i) {
    for (Eigen::Index c = 0; c < table.t.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", table.t(i, c));
      os << buf << (c + 1 == table.t.cols() ? '\n' : ' ');
    }
  }
}

}  // namespace elr

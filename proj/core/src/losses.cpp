#include "elr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace elr {

double ce_loss(const Eigen::VectorXd& p, int y_class) {
  if (y_class < 0 || y_class >= p.size()) throw std::invalid_argument("ce_loss: class index out of range");
  return -std::log(std::max(p[y_class], kLogClamp));
}

double ce_loss_soft(const Eigen::VectorXd& p, const Eigen::VectorXd& y) {
  double loss = 0.0;
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    if (y[c] != 0.0) loss -= y[c] * std::log(std::max(p[c], kLogClamp));
  }
  return loss;
}

Eigen::VectorXd ce_coeff(const Eigen::VectorXd& p, const Eigen::VectorXd& y) { return p - y; }

double elr_penalty(const Eigen::VectorXd& p, const Eigen::VectorXd& t) {
  return std::log(std::max(1.0 - p.dot(t), kInnerClamp));
}

Eigen::VectorXd elr_coeff(const Eigen::VectorXd& p, const Eigen::VectorXd& t, double lambda) {
  const double denom = std::max(1.0 - p.dot(t), kInnerClamp);
  // g_c = p_c * sum_k (t_k - t_c) p_k / denom. The sum is kept in this form
  // rather than collapsed to <p,t> - t_c: with uniform targets every term is
  // exactly zero, which the trainer's reduction guarantees rely on.
  Eigen::VectorXd g(p.size());
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k) sum += (t[k] - t[c]) * p[k];
    g[c] = p[c] * sum / denom;
  }
  return lambda * g;
}

double binary_elr_grad_scale(double s, double q) {
  const double denom = std::max(q + s - 2.0 * q * s, kInnerClamp);
  return (2.0 * q - 1.0) * s * (1.0 - s) / denom;
}

Eigen::VectorXd normalize_target(const Eigen::VectorXd& t) {
  const double sum = t.sum();
  if (sum <= 0.0) return Eigen::VectorXd::Constant(t.size(), 1.0 / static_cast<double>(t.size()));
  return t / sum;
}

double kl_penalty(const Eigen::VectorXd& p, const Eigen::VectorXd& t) {
  const Eigen::VectorXd that = normalize_target(t);
  double value = 0.0;
  for (Eigen::Index c = 0; c < p.size(); ++c) value -= that[c] * std::log(std::max(p[c], kLogClamp));
  return value;
}

Eigen::VectorXd kl_coeff(const Eigen::VectorXd& p, const Eigen::VectorXd& t, double lambda) {
  return lambda * (p - normalize_target(t));
}

Eigen::VectorXd total_coeff(const Eigen::VectorXd& p, const Eigen::VectorXd& y, const Eigen::VectorXd& t,
                            double lambda, CoeffMode mode) {
  switch (mode) {
    case CoeffMode::Ce:
      return ce_coeff(p, y);
    case CoeffMode::Elr:
      return ce_coeff(p, y) + elr_coeff(p, t, lambda);
    case CoeffMode::Kl:
      return ce_coeff(p, y) + kl_coeff(p, t, lambda);
  }
  throw std::logic_error("total_coeff: unknown mode");
}

Eigen::VectorXd coeff_from_prob_partials(const Eigen::VectorXd& s, const Eigen::VectorXd& dR_ds) {
  const double weighted = s.dot(dR_ds);
  Eigen::VectorXd out(s.size());
  for (Eigen::Index j = 0; j < s.size(); ++j) out[j] = -s[j] * (weighted - dR_ds[j]);
  return out;
}

LossBreakdown loss_breakdown(const Eigen::VectorXd& p, int y_class, const Eigen::VectorXd& t, double lambda,
                             CoeffMode mode) {
  LossBreakdown out;
  out.ce_value = ce_loss(p, y_class);
  out.lambda = lambda;
  switch (mode) {
    case CoeffMode::Ce:
      out.reg_value = 0.0;
      break;
    case CoeffMode::Elr:
      out.reg_value = elr_penalty(p, t);
      break;
    case CoeffMode::Kl:
      out.reg_value = kl_penalty(p, t);
      break;
  }
  out.total = out.ce_value + lambda * out.reg_value;
  return out;
}

}  // namespace elr

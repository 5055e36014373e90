#pragma once

#include <Eigen/Dense>

namespace elr {

// Coefficient modes: which e enters grad_from_coeffs.
//   Ce:  e = p - y
//   Elr: e = p - y + lambda * g,      g_c = p_c * sum_k (t_k - t_c) p_k / (1 - <p,t>)
//   Kl:  e = p - y + lambda * (p - t) with t renormalized to the simplex
enum class CoeffMode { Ce, Elr, Kl };

// Clamp floors. kInnerClamp guards the 1 - <p,t> singularity (the denominator
// vanishes when the model exactly matches a one-hot target); kLogClamp guards
// log p.
inline constexpr double kInnerClamp = 1e-8;
inline constexpr double kLogClamp = 1e-12;

// -log p_y with p clamped below at kLogClamp.
double ce_loss(const Eigen::VectorXd& p, int y_class);
// Soft-label cross entropy, -sum_c y_c log p_c (used by mixup training).
double ce_loss_soft(const Eigen::VectorXd& p, const Eigen::VectorXd& y);

Eigen::VectorXd ce_coeff(const Eigen::VectorXd& p, const Eigen::VectorXd& y);

// log(max(1 - <p,t>, kInnerClamp)). Targets need not be normalized; they
// start at zero under temporal ensembling.
double elr_penalty(const Eigen::VectorXd& p, const Eigen::VectorXd& t);

// lambda * g per the gradient of lambda * elr_penalty with respect to logits.
Eigen::VectorXd elr_coeff(const Eigen::VectorXd& p, const Eigen::VectorXd& t, double lambda);

// Closed-form per-example logit-gradient magnitude of the two-class
// regularizer: (2q - 1) s (1 - s) / (q + s - 2 q s), with s the class-1
// sigmoid output and q the class-1 target. Equals -g_1 of elr_coeff at
// p = (s, 1-s), t = (q, 1-q), lambda = 1.
double binary_elr_grad_scale(double s, double q);

// Renormalize t to the simplex; an all-zero t becomes uniform.
Eigen::VectorXd normalize_target(const Eigen::VectorXd& t);

// Cross-entropy-to-targets penalty -sum_c that_c log p_c (that normalized).
double kl_penalty(const Eigen::VectorXd& p, const Eigen::VectorXd& t);

// lambda * (p - that) with that = normalize_target(t).
Eigen::VectorXd kl_coeff(const Eigen::VectorXd& p, const Eigen::VectorXd& t, double lambda);

Eigen::VectorXd total_coeff(const Eigen::VectorXd& p, const Eigen::VectorXd& y, const Eigen::VectorXd& t,
                            double lambda, CoeffMode mode);

// Generic softmax chain rule: given dR/ds at s, the logit gradient is
// -s_j * sum_i s_i (dR/ds_i - dR/ds_j). Exposed so closed-form coefficients
// can be cross-checked against their chain-rule route.
Eigen::VectorXd coeff_from_prob_partials(const Eigen::VectorXd& s, const Eigen::VectorXd& dR_ds);

struct LossBreakdown {
  double ce_value = 0.0;
  double reg_value = 0.0;  // raw penalty (elr_penalty or kl_penalty); 0 for Ce
  double lambda = 0.0;
  double total = 0.0;  // ce_value + lambda * reg_value
};

LossBreakdown loss_breakdown(const Eigen::VectorXd& p, int y_class, const Eigen::VectorXd& t, double lambda,
                             CoeffMode mode);

}  // namespace elr

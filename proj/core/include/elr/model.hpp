#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace elr {

enum class ArchKind { Linear, Mlp };

struct Arch {
  ArchKind kind = ArchKind::Linear;
  Eigen::Index input_dim = 0;
  Eigen::Index hidden = 0;  // MLP only
  int classes = 2;

  static Arch linear(int classes, Eigen::Index p) { return {ArchKind::Linear, p, 0, classes}; }
  static Arch mlp(Eigen::Index p, Eigen::Index hidden, int classes) { return {ArchKind::Mlp, p, hidden, classes}; }
};

// Weight matrices per layer. Linear: one C x p matrix. MLP: hidden x p and
// C x hidden with a tanh hidden layer. No biases; the model is homogeneous.
struct ModelParams {
  Arch arch;
  std::vector<Eigen::MatrixXd> weights;

  // theta = Theta_1 - Theta_2, the binary separator (Linear, classes == 2).
  Eigen::VectorXd theta_binary() const;
  bool finite() const;
};

struct ParamGrad {
  std::vector<Eigen::MatrixXd> weights;
  bool finite() const;
};

// Running average of model weights, zero-initialized (so with gamma = 0 it
// equals the last seen parameters exactly).
struct AveragedParams {
  Arch arch;
  std::vector<Eigen::MatrixXd> weights;

  static AveragedParams zeros_like(const ModelParams& params);
  ModelParams snapshot() const { return ModelParams{arch, weights}; }
};

// Linear two-class: rows are +theta0/2 and -theta0/2 with theta0 uniform on
// the radius-`radius` sphere, so ||Theta_1 - Theta_2|| = radius (default 2).
// Linear multi-class: each row uniform on the radius/2 sphere. MLP: Gaussian
// entries scaled by 1/sqrt(fan_in).
ModelParams init_params(const Arch& arch, std::uint64_t seed, double radius = 2.0);

Eigen::VectorXd forward(const ModelParams& params, const Eigen::Ref<const Eigen::VectorXd>& x);
// Batch logits, one row per example.
Eigen::MatrixXd forward_batch(const ModelParams& params, const Eigen::Ref<const Eigen::MatrixXd>& X);

// Numerically stable softmax (max-subtraction).
Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);
Eigen::MatrixXd softmax_rows(const Eigen::Ref<const Eigen::MatrixXd>& logits);

// The single gradient entry point: every loss variant supplies one coefficient
// vector e per example, and the parameter gradient is the batch mean of the
// model Jacobian applied to e. X is B x p, coeffs is B x C.
ParamGrad grad_from_coeffs(const ModelParams& params, const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::MatrixXd>& coeffs);

void sgd_step(ModelParams& params, const ParamGrad& grad, double eta);

// avg <- gamma * avg + (1 - gamma) * params, elementwise.
void weight_average(AveragedParams& avg, const ModelParams& params, double gamma);

// Flat text format: one shape header per layer followed by rows of decimals.
void write_weights(std::ostream& os, const ModelParams& params);
ModelParams read_weights(std::istream& is);

// FNV-1a over the raw weight bytes; used for bit-level trajectory checks.
std::uint64_t weights_hash(const ModelParams& params);

}  // namespace elr

#include "elr/model.hpp"

#include "elr/rng.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace elr {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

void check_arch(const Arch& arch) {
  if (arch.input_dim < 1) throw std::invalid_argument("arch: input_dim must be >= 1");
  if (arch.classes < 2) throw std::invalid_argument("arch: classes must be >= 2");
  if (arch.kind == ArchKind::Mlp && arch.hidden < 1) throw std::invalid_argument("arch: hidden must be >= 1");
}

}  // namespace

Eigen::VectorXd ModelParams::theta_binary() const {
  if (arch.kind != ArchKind::Linear || arch.classes != 2)
    throw std::logic_error("theta_binary requires a two-class linear model");
  return (weights[0].row(0) - weights[0].row(1)).transpose();
}

bool ModelParams::finite() const {
  for (const auto& w : weights)
    if (!all_finite(w)) return false;
  return true;
}

bool ParamGrad::finite() const {
  for (const auto& w : weights)
    if (!all_finite(w)) return false;
  return true;
}

AveragedParams AveragedParams::zeros_like(const ModelParams& params) {
  AveragedParams avg;
  avg.arch = params.arch;
  for (const auto& w : params.weights) avg.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  return avg;
}

ModelParams init_params(const Arch& arch, std::uint64_t seed, double radius) {
  check_arch(arch);
  if (radius < 0.0) throw std::invalid_argument("init_params: radius must be >= 0");
  Rng rng = make_rng(seed, Stream::Init);
  std::normal_distribution<double> gauss(0.0, 1.0);

  ModelParams params;
  params.arch = arch;
  if (arch.kind == ArchKind::Linear) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(arch.classes, arch.input_dim);
    if (arch.classes == 2) {
      // rows +theta0/2 and -theta0/2 with ||theta0|| = radius
      Eigen::VectorXd theta0(arch.input_dim);
      for (Eigen::Index k = 0; k < arch.input_dim; ++k) theta0[k] = gauss(rng);
      double norm = theta0.norm();
      if (norm > 0.0 && radius > 0.0) theta0 *= radius / norm;
      else theta0.setZero();
      w.row(0) = 0.5 * theta0.transpose();
      w.row(1) = -0.5 * theta0.transpose();
    } else {
      for (int c = 0; c < arch.classes; ++c) {
        Eigen::VectorXd row(arch.input_dim);
        for (Eigen::Index k = 0; k < arch.input_dim; ++k) row[k] = gauss(rng);
        double norm = row.norm();
        if (norm > 0.0 && radius > 0.0) row *= (radius / 2.0) / norm;
        else row.setZero();
        w.row(c) = row.transpose();
      }
    }
    params.weights.push_back(std::move(w));
  } else {
    const double s1 = 1.0 / std::sqrt(static_cast<double>(arch.input_dim));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(arch.hidden));
    Eigen::MatrixXd w1(arch.hidden, arch.input_dim), w2(arch.classes, arch.hidden);
    for (Eigen::Index r = 0; r < w1.rows(); ++r)
      for (Eigen::Index c = 0; c < w1.cols(); ++c) w1(r, c) = s1 * gauss(rng);
    for (Eigen::Index r = 0; r < w2.rows(); ++r)
      for (Eigen::Index c = 0; c < w2.cols(); ++c) w2(r, c) = s2 * gauss(rng);
    params.weights.push_back(std::move(w1));
    params.weights.push_back(std::move(w2));
  }
  return params;
}

Eigen::VectorXd forward(const ModelParams& params, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != params.arch.input_dim) throw std::invalid_argument("forward: input dimension mismatch");
  if (params.arch.kind == ArchKind::Linear) return params.weights[0] * x;
  return params.weights[1] * (params.weights[0] * x).array().tanh().matrix();
}

Eigen::MatrixXd forward_batch(const ModelParams& params, const Eigen::Ref<const Eigen::MatrixXd>& X) {
  if (X.cols() != params.arch.input_dim) throw std::invalid_argument("forward_batch: input dimension mismatch");
  if (params.arch.kind == ArchKind::Linear) return X * params.weights[0].transpose();
  Eigen::MatrixXd hidden = (X * params.weights[0].transpose()).array().tanh();
  return hidden * params.weights[1].transpose();
}

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

Eigen::MatrixXd softmax_rows(const Eigen::Ref<const Eigen::MatrixXd>& logits) {
  const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  Eigen::MatrixXd e = (logits.colwise() - row_max).array().exp();
  const Eigen::VectorXd sums = e.rowwise().sum();
  return e.array().colwise() / sums.array();
}

ParamGrad grad_from_coeffs(const ModelParams& params, const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::MatrixXd>& coeffs) {
  if (X.rows() != coeffs.rows()) throw std::invalid_argument("grad_from_coeffs: batch size mismatch");
  if (X.cols() != params.arch.input_dim) throw std::invalid_argument("grad_from_coeffs: input dimension mismatch");
  if (coeffs.cols() != params.arch.classes) throw std::invalid_argument("grad_from_coeffs: class count mismatch");
  const double inv_b = 1.0 / static_cast<double>(X.rows());

  ParamGrad grad;
  if (params.arch.kind == ArchKind::Linear) {
    grad.weights.push_back(inv_b * (coeffs.transpose() * X));
    return grad;
  }
  // Exact backprop of the linear functional <e, logits> through tanh.
  Eigen::MatrixXd hidden = (X * params.weights[0].transpose()).array().tanh();  // B x hidden
  Eigen::MatrixXd d_hidden = coeffs * params.weights[1];                        // B x hidden
  Eigen::MatrixXd d_pre = d_hidden.array() * (1.0 - hidden.array().square());   // B x hidden
  grad.weights.push_back(inv_b * (d_pre.transpose() * X));                      // hidden x p
  grad.weights.push_back(inv_b * (coeffs.transpose() * hidden));                // C x hidden
  return grad;
}

void sgd_step(ModelParams& params, const ParamGrad& grad, double eta) {
  if (eta <= 0.0) throw std::invalid_argument("sgd_step: eta must be > 0");
  if (grad.weights.size() != params.weights.size()) throw std::invalid_argument("sgd_step: layer count mismatch");
  for (std::size_t l = 0; l < params.weights.size(); ++l) params.weights[l] -= eta * grad.weights[l];
}

void weight_average(AveragedParams& avg, const ModelParams& params, double gamma) {
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("weight_average: gamma must be in [0, 1)");
  for (std::size_t l = 0; l < params.weights.size(); ++l)
    avg.weights[l] = gamma * avg.weights[l] + (1.0 - gamma) * params.weights[l];
}

void write_weights(std::ostream& os, const ModelParams& params) {
  os << "arch " << (params.arch.kind == ArchKind::Linear ? "linear" : "mlp") << ' ' << params.arch.input_dim << ' '
     << params.arch.hidden << ' ' << params.arch.classes << '\n';
  char buf[64];
  for (const auto& w : params.weights) {
    os << "layer " << w.rows() << ' ' << w.cols() << '\n';
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", w(r, c));
        os << buf << (c + 1 == w.cols() ? '\n' : ' ');
      }
    }
  }
}

ModelParams read_weights(std::istream& is) {
  std::string tag, kind;
  ModelParams params;
  if (!(is >> tag >> kind >> params.arch.input_dim >> params.arch.hidden >> params.arch.classes) || tag != "arch")
    throw std::runtime_error("weights read: bad arch header");
  params.arch.kind = (kind == "linear") ? ArchKind::Linear : ArchKind::Mlp;
  while (is >> tag) {
    Eigen::Index rows, cols;
    if (tag != "layer" || !(is >> rows >> cols)) throw std::runtime_error("weights read: bad layer header");
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        if (!(is >> w(r, c))) throw std::runtime_error("weights read: short layer");
    params.weights.push_back(std::move(w));
  }
  if (params.weights.empty()) throw std::runtime_error("weights read: no layers");
  return params;
}

std::uint64_t weights_hash(const ModelParams& params) {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](const void* bytes, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& w : params.weights) {
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        const double v = w(r, c);
        mix(&v, sizeof(v));
      }
  }
  return h;
}

}  // namespace elr

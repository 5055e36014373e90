#include "elr/dataset.hpp"

#include "elr/rng.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace elr {

namespace {

Eigen::VectorXd unit_sphere_draw(Eigen::Index p, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(p);
  for (Eigen::Index k = 0; k < p; ++k) v[k] = gauss(rng);
  double norm = v.norm();
  if (norm == 0.0) {  // astronomically unlikely; retry keeps the draw valid
    return unit_sphere_draw(p, rng);
  }
  return v / norm;
}

// C orthonormal mean rows via Gram-Schmidt on Gaussian draws.
Eigen::MatrixXd orthonormal_means(Eigen::Index p, int classes, Rng& rng) {
  Eigen::MatrixXd means(classes, p);
  for (int c = 0; c < classes; ++c) {
    Eigen::VectorXd v = unit_sphere_draw(p, rng);
    for (int k = 0; k < c; ++k) v -= means.row(k).dot(v) * means.row(k).transpose();
    double norm = v.norm();
    if (norm < 1e-8) {
      --c;  // near-degenerate draw, redo this row
      continue;
    }
    means.row(c) = v.transpose() / norm;
  }
  return means;
}

CleanDataset fill_inputs(Eigen::Index n, Eigen::MatrixXd means, int classes, double sigma, std::uint64_t seed) {
  const Eigen::Index p = means.cols();
  CleanDataset data;
  data.means = std::move(means);
  data.classes = classes;
  data.sigma = sigma;
  data.seed = seed;
  data.inputs.resize(n, p);
  data.true_labels.resize(static_cast<std::size_t>(n));

  Rng rng = make_rng(seed, Stream::Inputs);
  std::uniform_int_distribution<int> pick_class(0, classes - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = pick_class(rng);
    data.true_labels[static_cast<std::size_t>(i)] = c;
    for (Eigen::Index k = 0; k < p; ++k) {
      data.inputs(i, k) = data.means(c, k) + sigma * gauss(rng);
    }
  }
  return data;
}

void check_common(Eigen::Index n, Eigen::Index p, int classes, double sigma) {
  if (n < 1) throw std::invalid_argument("gen_mixture: n must be >= 1");
  if (p < 1) throw std::invalid_argument("gen_mixture: p must be >= 1");
  if (classes < 2) throw std::invalid_argument("gen_mixture: classes must be >= 2");
  if (sigma < 0.0) throw std::invalid_argument("gen_mixture: sigma must be >= 0");
}

NoisyDataset with_observed(const CleanDataset& data, std::vector<int> observed, double delta) {
  NoisyDataset out;
  static_cast<CleanDataset&>(out) = data;
  out.observed_labels = std::move(observed);
  out.delta = delta;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    if (out.observed_labels[idx] == out.true_labels[idx]) {
      out.clean_set.push_back(i);
    } else {
      out.wrong_set.push_back(i);
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXd CleanDataset::direction() const {
  if (means.rows() == 0) throw std::logic_error("dataset has no stored means (read back from disk?)");
  return means.row(0).transpose();
}

double NoisyDataset::wrong_fraction() const {
  return size() == 0 ? 0.0 : static_cast<double>(wrong_set.size()) / static_cast<double>(size());
}

CleanDataset gen_mixture(Eigen::Index n, Eigen::Index p, int classes, double sigma, std::uint64_t seed) {
  check_common(n, p, classes, sigma);
  Rng means_rng = make_rng(seed, Stream::Means);
  Eigen::MatrixXd means;
  if (classes == 2) {
    Eigen::VectorXd v = unit_sphere_draw(p, means_rng);
    means.resize(2, p);
    means.row(0) = v.transpose();
    means.row(1) = -v.transpose();
  } else {
    if (p < classes) throw std::invalid_argument("gen_mixture: p < classes for the orthonormal construction");
    means = orthonormal_means(p, classes, means_rng);
  }
  return fill_inputs(n, std::move(means), classes, sigma, seed);
}

CleanDataset gen_mixture(Eigen::Index n, const Eigen::VectorXd& direction, double sigma, std::uint64_t seed) {
  check_common(n, direction.size(), 2, sigma);
  Eigen::MatrixXd means(2, direction.size());
  means.row(0) = direction.transpose();
  means.row(1) = -direction.transpose();
  return fill_inputs(n, std::move(means), 2, sigma, seed);
}

NoisyDataset inject_symmetric_noise(const CleanDataset& data, double delta, std::uint64_t seed,
                                    bool exclude_true_class) {
  if (delta < 0.0 || delta > 1.0) throw std::invalid_argument("inject_symmetric_noise: delta must be in [0, 1]");
  Rng rng = make_rng(seed, Stream::Noise);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> any_class(0, data.classes - 1);
  std::uniform_int_distribution<int> other_class(0, data.classes - 2);

  std::vector<int> observed = data.true_labels;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (unit(rng) >= delta) continue;
    if (exclude_true_class) {
      int draw = other_class(rng);
      if (draw >= data.true_labels[i]) ++draw;
      observed[i] = draw;
    } else {
      observed[i] = any_class(rng);  // the true class may be redrawn
    }
  }
  return with_observed(data, std::move(observed), delta);
}

NoisyDataset inject_asymmetric_noise(const CleanDataset& data, double delta, std::uint64_t seed) {
  if (delta < 0.0 || delta > 1.0) throw std::invalid_argument("inject_asymmetric_noise: delta must be in [0, 1]");
  Rng rng = make_rng(seed, Stream::Noise);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<int> observed = data.true_labels;
  for (auto& label : observed) {
    if (unit(rng) < delta) label = (label + 1) % data.classes;
  }
  return with_observed(data, std::move(observed), delta);
}

NoisyDataset without_noise(const CleanDataset& data) {
  return with_observed(data, data.true_labels, 0.0);
}

void write_columnar(std::ostream& os, const NoisyDataset& data) {
  const Eigen::Index p = data.dim();
  for (Eigen::Index k = 0; k < p; ++k) os << "x" << k << ' ';
  os << "true_label observed_label\n";
  char buf[64];
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index k = 0; k < p; ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.inputs(i, k));
      os << buf << ' ';
    }
    os << data.true_labels[static_cast<std::size_t>(i)] << ' '
       << data.observed_labels[static_cast<std::size_t>(i)] << '\n';
  }
}

NoisyDataset read_columnar(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("columnar read: missing header");
  std::istringstream hs(header);
  std::vector<std::string> cols;
  for (std::string c; hs >> c;) cols.push_back(c);
  if (cols.size() < 3 || cols[cols.size() - 2] != "true_label" || cols.back() != "observed_label")
    throw std::runtime_error("columnar read: unexpected header");
  const Eigen::Index p = static_cast<Eigen::Index>(cols.size()) - 2;

  std::vector<double> values;
  std::vector<int> true_labels, observed;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    for (Eigen::Index k = 0; k < p; ++k) {
      double v;
      if (!(ls >> v)) throw std::runtime_error("columnar read: short row");
      values.push_back(v);
    }
    int t, o;
    if (!(ls >> t >> o)) throw std::runtime_error("columnar read: missing labels");
    true_labels.push_back(t);
    observed.push_back(o);
  }
  const Eigen::Index n = static_cast<Eigen::Index>(true_labels.size());

  CleanDataset clean;
  clean.inputs.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < p; ++k) clean.inputs(i, k) = values[static_cast<std::size_t>(i * p + k)];
  clean.true_labels = true_labels;
  int max_label = 1;
  for (std::size_t i = 0; i < true_labels.size(); ++i)
    max_label = std::max({max_label, true_labels[i], observed[i]});
  clean.classes = max_label + 1;
  return with_observed(clean, std::move(observed), 0.0);
}

std::uint64_t dataset_fingerprint(const NoisyDataset& data) {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](const void* bytes, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  const Eigen::Index n = data.size(), p = data.dim();
  mix(&n, sizeof(n));
  mix(&p, sizeof(p));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < p; ++k) {
      const double v = data.inputs(i, k);
      mix(&v, sizeof(v));
    }
    mix(&data.true_labels[static_cast<std::size_t>(i)], sizeof(int));
    mix(&data.observed_labels[static_cast<std::size_t>(i)], sizeof(int));
  }
  return h;
}

}  // namespace elr

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace elr {

// Gaussian-mixture classification data. For the two-class case the means are
// +v and -v for a unit vector v; inputs are mean + sigma * z with z standard
// normal. Immutable after construction.
struct CleanDataset {
  Eigen::MatrixXd inputs;        // n x p, one example per row
  std::vector<int> true_labels;  // class index per example, in [0, classes)
  Eigen::MatrixXd means;         // classes x p; empty when read back from disk
  int classes = 2;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }

  // The two-class mean direction v (= means row 0).
  Eigen::VectorXd direction() const;

  // +1 for class 0, -1 for class 1 (two-class convention).
  int true_sign(Eigen::Index i) const { return true_labels[static_cast<std::size_t>(i)] == 0 ? 1 : -1; }
};

struct NoisyDataset : CleanDataset {
  std::vector<int> observed_labels;
  std::vector<Eigen::Index> clean_set;  // observed == true
  std::vector<Eigen::Index> wrong_set;  // observed != true
  double delta = 0.0;

  int observed_sign(Eigen::Index i) const { return observed_labels[static_cast<std::size_t>(i)] == 0 ? 1 : -1; }
  double wrong_fraction() const;
};

// Draw n examples from the mixture. For classes == 2 the direction v is drawn
// uniformly on the unit sphere; for classes > 2 the means are orthonormalized
// Gaussian draws (requires p >= classes). Deterministic given the seed.
CleanDataset gen_mixture(Eigen::Index n, Eigen::Index p, int classes, double sigma, std::uint64_t seed);

// Two-class variant with a caller-supplied direction.
CleanDataset gen_mixture(Eigen::Index n, const Eigen::VectorXd& direction, double sigma, std::uint64_t seed);

// Each label is kept with probability 1 - delta and otherwise replaced by a
// uniform draw over all classes (the true class may be redrawn, so the
// realized wrong fraction concentrates near delta * (C-1) / C). Setting
// exclude_true_class redraws over the other classes only.
NoisyDataset inject_symmetric_noise(const CleanDataset& data, double delta, std::uint64_t seed,
                                    bool exclude_true_class = false);

// With probability delta a label of class c becomes class (c+1) mod C.
NoisyDataset inject_asymmetric_noise(const CleanDataset& data, double delta, std::uint64_t seed);

// Wrap clean labels as a NoisyDataset with delta = 0 (no noise).
NoisyDataset without_noise(const CleanDataset& data);

// Columnar text format: header row, then one example per row holding the p
// input coordinates, the true class index and the observed class index.
void write_columnar(std::ostream& os, const NoisyDataset& data);
NoisyDataset read_columnar(std::istream& is);

// FNV-1a hash of the columnar serialization; used as the dataset fingerprint
// in run manifests.
std::uint64_t dataset_fingerprint(const NoisyDataset& data);

}  // namespace elr

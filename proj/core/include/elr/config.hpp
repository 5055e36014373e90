#pragma once

#include "elr/dataset.hpp"
#include "elr/trainer.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace elr {

enum class NoiseKind { None, Symmetric, Asymmetric };

struct DataSpec {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  int classes = 2;
  double sigma = 0.1;
  double delta = 0.0;
  NoiseKind noise = NoiseKind::Symmetric;
  bool exclude_true_class = false;
  std::uint64_t data_seed = 0;

  NoisyDataset build() const;
  bool operator==(const DataSpec&) const = default;
};

// One experiment = dataset spec + training config. Parsed from a flat
// `key = value` text file ('#' comments). Unknown keys are errors, not
// warnings; `mode`, `n` and `p` are required.
struct ExperimentConfig {
  DataSpec data;
  TrainConfig train;

  void validate() const;
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Canonical serialization (every key explicit); parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace elr

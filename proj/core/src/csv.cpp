#include "elr/csv.hpp"

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace elr {

const std::vector<std::string>& runlog_columns() {
  static const std::vector<std::string> columns = {
      "epoch",          "loss_ce",        "loss_reg",       "loss_total",
      "clean_correct",  "clean_incorrect", "wrong_correct", "wrong_memorized",
      "wrong_other",    "kappa_sq_clean", "kappa_sq_wrong", "grad_corr_v",
      "theta_dot_v",    "target_match_observed", "target_match_true",
      "target_match_observed_wrong", "ell_prime_mean"};
  return columns;
}

std::string format_double(double v) {
  if (v == 0.0) v = 0.0;  // normalize -0 so equal runs stay byte-equal
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::vector<double> record_values(const EpochRecord& r) {
  return {static_cast<double>(r.epoch),
          r.loss_ce,
          r.loss_reg,
          r.loss_total,
          r.acc.clean_correct,
          r.acc.clean_incorrect,
          r.acc.wrong_correct,
          r.acc.wrong_memorized,
          r.acc.wrong_other,
          r.kappa_sq_clean,
          r.kappa_sq_wrong,
          r.grad_corr_v,
          r.theta_dot_v,
          r.target_match_observed,
          r.target_match_true,
          r.target_match_observed_wrong,
          r.ell_prime_mean};
}

}  // namespace

void write_runlog_csv(std::ostream& os, const RunLog& log) {
  const auto& columns = runlog_columns();
  for (std::size_t c = 0; c < columns.size(); ++c) os << columns[c] << (c + 1 == columns.size() ? '\n' : ',');
  for (const auto& rec : log.records) {
    os << rec.epoch;
    const auto values = record_values(rec);
    for (std::size_t c = 1; c < values.size(); ++c) os << ',' << format_double(values[c]);
    os << '\n';
  }
}

std::string runlog_csv_string(const RunLog& log) {
  std::ostringstream os;
  write_runlog_csv(os, log);
  return os.str();
}

std::vector<EpochRecord> read_runlog_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("runlog csv: missing header");
  std::vector<std::string> cols;
  {
    std::istringstream hs(header);
    for (std::string c; std::getline(hs, c, ',');) cols.push_back(c);
  }
  if (cols != runlog_columns()) throw std::runtime_error("runlog csv: unexpected column schema");

  std::vector<EpochRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<double> values;
    for (std::string cell; std::getline(ls, cell, ',');) values.push_back(std::stod(cell));
    if (values.size() != runlog_columns().size()) throw std::runtime_error("runlog csv: short row");
    EpochRecord r;
    std::size_t k = 0;
    r.epoch = static_cast<int>(values[k++]);
    r.loss_ce = values[k++];
    r.loss_reg = values[k++];
    r.loss_total = values[k++];
    r.acc.clean_correct = values[k++];
    r.acc.clean_incorrect = values[k++];
    r.acc.wrong_correct = values[k++];
    r.acc.wrong_memorized = values[k++];
    r.acc.wrong_other = values[k++];
    r.kappa_sq_clean = values[k++];
    r.kappa_sq_wrong = values[k++];
    r.grad_corr_v = values[k++];
    r.theta_dot_v = values[k++];
    r.target_match_observed = values[k++];
    r.target_match_true = values[k++];
    r.target_match_observed_wrong = values[k++];
    r.ell_prime_mean = values[k++];
    out.push_back(r);
  }
  return out;
}

void atomic_write_file(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path temp = target.parent_path() / (target.filename().string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream os(temp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open temp file for '" + path + "'");
    os << contents;
    if (!os.flush()) throw std::runtime_error("write failed for '" + path + "'");
  }
  fs::rename(temp, target);
}

}  // namespace elr

// Command-line front end: run, gradcheck, separability, compare, sweep.
// Exit codes: 0 success, 1 verification failure, 2 usage/config error,
// 3 diverged run.

#include <CLI11.hpp>
#include <json.hpp>

#include "elr/analysis.hpp"
#include "elr/config.hpp"
#include "elr/csv.hpp"
#include "elr/trainer.hpp"
#include "elr/version.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <semaphore>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerification = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw elr::ConfigError("cannot open '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// A config argument may be a plain key=value file or a manifest.json from a
// previous run; the manifest embeds the effective config text.
elr::ExperimentConfig load_config_or_manifest(const std::string& path) {
  const std::string text = read_file(path);
  std::string config_text = text;
  if (!text.empty() && text.front() == '{') {
    json manifest = json::parse(text);
    if (!manifest.contains("config")) throw elr::ConfigError("manifest '" + path + "' has no config field");
    config_text = manifest["config"].get<std::string>();
  }
  return elr::parse_config_string(config_text);
}

std::string fingerprint_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct RunOutput {
  elr::RunLog log;
  elr::RunLog log2;  // second network (elr_plus only)
  bool two_networks = false;
  elr::NoisyDataset data;
};

RunOutput execute(const elr::ExperimentConfig& config) {
  RunOutput out;
  out.data = config.data.build();
  if (config.train.mode == elr::TrainMode::ElrPlus) {
    out.two_networks = true;
    auto [a, b] = elr::train_elr_plus(config.train, out.data);
    out.log = std::move(a);
    out.log2 = std::move(b);
  } else {
    out.log = elr::train(config.train, out.data);
  }
  return out;
}

void write_run_outputs(const std::string& out_dir, const elr::ExperimentConfig& config, const RunOutput& run,
                       double duration_seconds, bool dump_weights, bool dump_dataset, bool dump_targets = false) {
  fs::create_directories(out_dir);
  elr::atomic_write_file(out_dir + "/metrics.csv", elr::runlog_csv_string(run.log));
  if (run.two_networks) elr::atomic_write_file(out_dir + "/metrics2.csv", elr::runlog_csv_string(run.log2));

  json manifest;
  manifest["artifact_version"] = elr::kVersion;
  manifest["root_seed"] = config.train.seed;
  manifest["data_seed"] = config.data.data_seed;
  manifest["dataset_fingerprint"] = fingerprint_hex(elr::dataset_fingerprint(run.data));
  manifest["duration_seconds"] = duration_seconds;
  manifest["diverged"] = run.log.diverged;
  manifest["config"] = elr::serialize_config(config);
  elr::atomic_write_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");

  if (dump_weights && !run.log.diverged) {
    std::ostringstream os;
    elr::write_weights(os, run.log.final_params);
    elr::atomic_write_file(out_dir + "/weights.txt", os.str());
  }
  if (dump_dataset) {
    std::ostringstream os;
    elr::write_columnar(os, run.data);
    elr::atomic_write_file(out_dir + "/dataset.txt", os.str());
  }
  if (dump_targets) {
    auto dump_table = [&](const elr::RunLog& log, const char* name) {
      elr::TargetTable table(log.final_targets.rows(), static_cast<int>(log.final_targets.cols()),
                             config.train.beta);
      table.t = log.final_targets;
      std::ostringstream os;
      elr::write_targets(os, table);
      elr::atomic_write_file(out_dir + "/" + name, os.str());
    };
    dump_table(run.log, "targets.csv");
    if (run.two_networks) dump_table(run.log2, "targets2.csv");
  }
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool has_seed, std::uint64_t seed,
            bool dump_weights, bool dump_dataset, bool dump_targets) {
  elr::ExperimentConfig config = load_config_or_manifest(config_path);
  if (has_seed) config.train.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  const RunOutput run = execute(config);
  const double duration = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_run_outputs(out_dir, config, run, duration, dump_weights, dump_dataset, dump_targets);
  if (run.log.diverged) {
    std::cerr << "run diverged at epoch " << run.log.diverged_epoch << " (log truncated)\n";
    return kExitDiverged;
  }
  const auto& last = run.log.last();
  std::cout << "wrote " << out_dir << "/metrics.csv (" << run.log.records.size() << " records); final epoch "
            << last.epoch << ": clean_correct=" << last.acc.clean_correct
            << " wrong_memorized=" << last.acc.wrong_memorized << "\n";
  return kExitOk;
}

int cmd_gradcheck(int trials, std::uint64_t seed, bool inject_sign_flip) {
  elr::GradcheckOptions options;
  options.trials = trials;
  options.seed = seed;
  options.inject_elr_sign_flip = inject_sign_flip;
  const elr::GradcheckResult result = elr::run_gradient_checks(options);
  std::printf("gradcheck over %d trials per class count (C in {2,3,10}), rng seed %llu\n", trials,
              static_cast<unsigned long long>(seed));
  std::printf("  worst rel err  ce    : %.3e\n", result.worst_ce());
  std::printf("  worst rel err  elr   : %.3e\n", result.worst_elr());
  std::printf("  worst rel err  kl    : %.3e\n", result.worst_kl());
  std::printf("  worst rel err  total : %.3e\n", result.worst_total());
  std::printf("  worst abs err  binary closed form vs general C=2 : %.3e\n", result.worst_binary());
  std::printf("  worst rel err  chain-rule identity               : %.3e\n", result.worst_identity());
  std::printf("  clamp-boundary skips : %d\n", result.clamp_skips);
  if (!result.pass()) {
    auto blame = [&](const char* mode, const elr::GradcheckWorst& w, double tol) {
      if (w.err > tol)
        std::printf("  breach in %s: err %.3e at C=%d, trial %d (seed %llu)\n", mode, w.err, w.classes, w.trial,
                    static_cast<unsigned long long>(seed));
    };
    blame("ce", result.ce, 1e-6);
    blame("elr", result.elr, 1e-6);
    blame("kl", result.kl, 1e-6);
    blame("total", result.total, 1e-6);
    blame("binary", result.binary, 1e-12);
    blame("identity", result.identity, 1e-10);
    std::printf("FAIL: tolerance breach (fd 1e-6, binary 1e-12, identity 1e-10)\n");
    return kExitVerification;
  }
  std::printf("PASS\n");
  return kExitOk;
}

int cmd_separability(Eigen::Index n, Eigen::Index p, double delta, int trials, std::uint64_t seed, double sigma,
                     const std::string& out_path) {
  int separable = 0, not_separable = 0, undecided = 0;
  std::ostringstream csv;
  csv << "trial,seed,n,p,delta,verdict,dual_norm,iterations,bound\n";
  const double bound = elr::memorization_prob_bound(n, p, delta);
  for (int trial = 0; trial < trials; ++trial) {
    const std::uint64_t trial_seed = elr::mix64(seed + static_cast<std::uint64_t>(trial));
    const elr::CleanDataset clean = elr::gen_mixture(n, p, 2, sigma, trial_seed);
    const elr::NoisyDataset noisy = elr::inject_symmetric_noise(clean, delta, trial_seed);
    std::vector<int> signs(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) signs[static_cast<std::size_t>(i)] = noisy.observed_sign(i);
    const elr::SeparabilityReport report = elr::check_separability(noisy.inputs, signs);
    const char* verdict = "undecided";
    if (report.verdict == elr::Separability::Separable) {
      ++separable;
      verdict = "separable";
    } else if (report.verdict == elr::Separability::NotSeparable) {
      ++not_separable;
      verdict = "not_separable";
    } else {
      ++undecided;
    }
    csv << trial << ',' << trial_seed << ',' << n << ',' << p << ',' << elr::format_double(delta) << ',' << verdict
        << ',' << elr::format_double(report.dual_norm) << ',' << report.iterations << ',' << elr::format_double(bound)
        << '\n';
  }
  if (!out_path.empty()) elr::atomic_write_file(out_path, csv.str());
  const double total = static_cast<double>(trials);
  std::printf("separability n=%lld p=%lld delta=%g sigma=%g trials=%d\n", static_cast<long long>(n),
              static_cast<long long>(p), delta, sigma, trials);
  std::printf("  separable     : %d (%.4f)\n", separable, separable / total);
  std::printf("  not separable : %d (%.4f)\n", not_separable, not_separable / total);
  std::printf("  undecided     : %d (%.4f)\n", undecided, undecided / total);
  std::printf("  bound 2*P[Bin(n, delta/2) <= n-p] = %.6e\n", bound);
  return kExitOk;
}

// Bounded-concurrency runner for compare and sweep.
void run_jobs(std::vector<std::function<void()>>& tasks, int jobs) {
  std::counting_semaphore<256> slots(std::max(1, std::min(jobs, 256)));
  std::vector<std::future<void>> futures;
  futures.reserve(tasks.size());
  for (auto& task : tasks) {
    slots.acquire();
    futures.push_back(std::async(std::launch::async, [&task, &slots] {
      task();
      slots.release();
    }));
  }
  for (auto& f : futures) f.get();
}

int cmd_compare(const std::vector<std::string>& config_paths, const std::string& out_path, int jobs) {
  if (config_paths.size() < 2) {
    std::cerr << "compare needs at least 2 configs\n";
    return kExitUsage;
  }
  std::vector<elr::ExperimentConfig> configs;
  std::vector<std::string> labels;
  for (const auto& path : config_paths) {
    configs.push_back(load_config_or_manifest(path));
    labels.push_back(fs::path(path).stem().string());
  }
  for (std::size_t i = 1; i < configs.size(); ++i) {
    if (!(configs[i].data == configs[0].data)) {
      std::cerr << "compare: dataset spec of '" << config_paths[i] << "' differs from '" << config_paths[0] << "'\n";
      return kExitUsage;
    }
  }

  std::vector<RunOutput> runs(configs.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    tasks.emplace_back([&runs, &configs, i] { runs[i] = execute(configs[i]); });
  }
  run_jobs(tasks, jobs);

  std::ostringstream csv;
  csv << "label,mode,epoch,metric,value\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string mode = elr::to_string(configs[i].train.mode);
    for (const auto& rec : runs[i].log.records) {
      const std::vector<std::pair<const char*, double>> metrics = {
          {"loss_ce", rec.loss_ce},
          {"loss_reg", rec.loss_reg},
          {"loss_total", rec.loss_total},
          {"clean_correct", rec.acc.clean_correct},
          {"wrong_correct", rec.acc.wrong_correct},
          {"wrong_memorized", rec.acc.wrong_memorized},
          {"wrong_other", rec.acc.wrong_other},
          {"kappa_sq_clean", rec.kappa_sq_clean},
          {"kappa_sq_wrong", rec.kappa_sq_wrong},
          {"grad_corr_v", rec.grad_corr_v},
          {"theta_dot_v", rec.theta_dot_v},
          {"target_match_observed", rec.target_match_observed},
          {"target_match_observed_wrong", rec.target_match_observed_wrong}};
      for (const auto& [name, value] : metrics)
        csv << labels[i] << ',' << mode << ',' << rec.epoch << ',' << name << ',' << elr::format_double(value) << '\n';
    }
  }
  elr::atomic_write_file(out_path, csv.str());
  bool diverged = false;
  for (const auto& run : runs) diverged = diverged || run.log.diverged;
  std::cout << "wrote " << out_path << " (" << runs.size() << " runs)\n";
  return diverged ? kExitDiverged : kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, const std::vector<std::uint64_t>& seeds,
              int jobs) {
  if (seeds.empty()) {
    std::cerr << "sweep needs at least one seed (--seeds or --num-seeds)\n";
    return kExitUsage;
  }
  const elr::ExperimentConfig base = load_config_or_manifest(config_path);
  std::vector<RunOutput> runs(seeds.size());
  std::vector<elr::ExperimentConfig> configs(seeds.size(), base);
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    configs[i].train.seed = seeds[i];
    tasks.emplace_back([&runs, &configs, i] { runs[i] = execute(configs[i]); });
  }
  run_jobs(tasks, jobs);

  std::ostringstream summary;
  summary << "seed,diverged,final_epoch,clean_correct,wrong_correct,wrong_memorized,loss_total\n";
  bool diverged = false;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const std::string run_dir = out_dir + "/seed_" + std::to_string(seeds[i]);
    write_run_outputs(run_dir, configs[i], runs[i], 0.0, false, false);
    const auto& last = runs[i].log.last();
    diverged = diverged || runs[i].log.diverged;
    summary << seeds[i] << ',' << (runs[i].log.diverged ? 1 : 0) << ',' << last.epoch << ','
            << elr::format_double(last.acc.clean_correct) << ',' << elr::format_double(last.acc.wrong_correct) << ','
            << elr::format_double(last.acc.wrong_memorized) << ',' << elr::format_double(last.loss_total) << '\n';
  }
  elr::atomic_write_file(out_dir + "/summary.csv", summary.str());
  std::cout << "wrote " << out_dir << "/summary.csv (" << seeds.size() << " seeds)\n";
  return diverged ? kExitDiverged : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noisy-label training lab (linear early-learning dynamics)"};
  app.require_subcommand(1);

  std::string run_config, run_out = "out";
  std::uint64_t run_seed = 0;
  bool run_dump_weights = false, run_dump_dataset = false, run_dump_targets = false;
  auto* run = app.add_subcommand("run", "execute one training run from a config or manifest");
  run->add_option("config", run_config, "config file (key = value) or manifest.json")->required();
  run->add_option("--out", run_out, "output directory");
  auto* seed_opt = run->add_option("--seed", run_seed, "override the training seed");
  run->add_flag("--dump-weights", run_dump_weights, "also write weights.txt");
  run->add_flag("--dump-dataset", run_dump_dataset, "also write dataset.txt (columnar format)");
  run->add_flag("--dump-targets", run_dump_targets, "also write targets.csv (final target table)");

  int gc_trials = 100;
  std::uint64_t gc_seed = 20240501;
  bool gc_flip = false;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference oracle suite for all coefficient modes");
  gradcheck->add_option("--trials", gc_trials, "random instances per class count")->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", gc_seed, "rng seed");
  gradcheck->add_flag("--inject-sign-flip", gc_flip, "test hook: flip the elr coefficient sign (must fail)");

  Eigen::Index sep_n = 50, sep_p = 49;
  double sep_delta = 0.4, sep_sigma = 0.1;
  int sep_trials = 200;
  std::uint64_t sep_seed = 1;
  std::string sep_out;
  auto* separability = app.add_subcommand("separability", "Monte Carlo separability of noisy classes vs the bound");
  separability->add_option("--n", sep_n, "examples")->required();
  separability->add_option("--p", sep_p, "dimension")->required();
  separability->add_option("--delta", sep_delta, "noise level")->required();
  separability->add_option("--trials", sep_trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
  separability->add_option("--seed", sep_seed, "rng seed");
  separability->add_option("--sigma", sep_sigma, "input noise std");
  separability->add_option("--out", sep_out, "per-trial CSV path");

  std::vector<std::string> cmp_configs;
  std::string cmp_out = "compare.csv";
  int cmp_jobs = 1;
  auto* compare = app.add_subcommand("compare", "run several configs on the identical dataset instance");
  compare->add_option("configs", cmp_configs, "config files sharing a dataset spec")->required()->expected(-1);
  compare->add_option("--out", cmp_out, "merged long-format CSV path");
  compare->add_option("--jobs", cmp_jobs, "concurrent runs")->check(CLI::PositiveNumber);

  std::string sweep_config, sweep_out = "sweep";
  std::vector<std::uint64_t> sweep_seeds;
  int sweep_num_seeds = 0;
  std::uint64_t sweep_seed_base = 1;
  int sweep_jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "replicate one config across seeds");
  sweep->add_option("config", sweep_config, "config file")->required();
  sweep->add_option("--seeds", sweep_seeds, "explicit seed list")->delimiter(',');
  sweep->add_option("--num-seeds", sweep_num_seeds, "derive this many seeds from --seed-base");
  sweep->add_option("--seed-base", sweep_seed_base, "base for derived seeds");
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_option("--jobs", sweep_jobs, "concurrent runs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed())
      return cmd_run(run_config, run_out, seed_opt->count() > 0, run_seed, run_dump_weights, run_dump_dataset,
                     run_dump_targets);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_trials, gc_seed, gc_flip);
    if (separability->parsed())
      return cmd_separability(sep_n, sep_p, sep_delta, sep_trials, sep_seed, sep_sigma, sep_out);
    if (compare->parsed()) return cmd_compare(cmp_configs, cmp_out, cmp_jobs);
    if (sweep->parsed()) {
      std::vector<std::uint64_t> seeds = sweep_seeds;
      for (int i = 0; i < sweep_num_seeds; ++i) seeds.push_back(sweep_seed_base + static_cast<std::uint64_t>(i));
      return cmd_sweep(sweep_config, sweep_out, seeds, sweep_jobs);
    }
  } catch (const elr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVerification;
  }
  return kExitUsage;
}

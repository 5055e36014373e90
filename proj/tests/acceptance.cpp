// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 4-6 share one set of trajectories (same regime), so their
// reported runtime is the shared wall time.

#include "elr/analysis.hpp"
#include "elr/config.hpp"
#include "elr/csv.hpp"
#include "elr/trainer.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

using namespace elr;

namespace {

int failures = 0;

void report(int criterion, bool pass, double seconds, double budget, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("[%s] criterion %d (%.2fs / budget %.0fs): %s\n", pass ? "PASS" : "FAIL", criterion, seconds, budget,
              detail.c_str());
}

double since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

NoisyDataset fig_dataset(std::uint64_t seed) {
  DataSpec spec;
  spec.n = 50;
  spec.p = 100;
  spec.sigma = 0.1;
  spec.delta = 0.4;
  spec.data_seed = seed;
  return spec.build();
}

TrainConfig fig_config(TrainMode mode, std::uint64_t seed, int epochs) {
  TrainConfig config;
  config.mode = mode;
  config.eta = 0.1;
  config.epochs = epochs;
  config.beta = 0.7;
  config.seed = seed;
  return config;
}

// ---- criterion 1: gradient oracle suite ----------------------------------
void criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  GradcheckOptions options;
  options.trials = 100;
  const GradcheckResult r = run_gradient_checks(options);  // includes the 1000-pair binary sweep
  const double secs = since(start);
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "fd rel err ce=%.2e elr=%.2e kl=%.2e total=%.2e (tol 1e-6); binary=%.2e (tol 1e-12); "
                "identity=%.2e (tol 1e-10)",
                r.worst_ce(), r.worst_elr(), r.worst_kl(), r.worst_total(), r.worst_binary(), r.worst_identity());
  report(1, r.pass() && secs < 10.0, secs, 10, detail);
}

// ---- criterion 2: uniform-target and lambda = 0 reductions ----------------
void criterion_2() {
  const auto start = std::chrono::steady_clock::now();
  const NoisyDataset data = fig_dataset(7);
  const int epochs = 200;

  const RunLog ce = train(fig_config(TrainMode::Ce, 1, epochs), data);

  TrainConfig elr0 = fig_config(TrainMode::Elr, 1, epochs);
  elr0.lambda = 0.0;
  const RunLog zero = train(elr0, data);
  const bool zero_bits = runlog_csv_string(ce) == runlog_csv_string(zero) && ce.weight_hashes == zero.weight_hashes;

  TrainConfig frozen = fig_config(TrainMode::Elr, 1, epochs);
  frozen.lambda = 3.0;
  frozen.freeze_targets_uniform = true;
  const RunLog uniform = train(frozen, data);
  bool uniform_bits = ce.weight_hashes == uniform.weight_hashes && ce.records.size() == uniform.records.size();
  if (uniform_bits) {
    for (std::size_t r = 0; r < ce.records.size(); ++r) {
      const EpochRecord& a = ce.records[r];
      const EpochRecord& b = uniform.records[r];
      // all trajectory metrics bit-equal; only the loss definition and the
      // target-agreement columns may differ by construction
      uniform_bits = uniform_bits && a.loss_ce == b.loss_ce && a.acc.clean_correct == b.acc.clean_correct &&
                     a.acc.clean_incorrect == b.acc.clean_incorrect && a.acc.wrong_correct == b.acc.wrong_correct &&
                     a.acc.wrong_memorized == b.acc.wrong_memorized && a.acc.wrong_other == b.acc.wrong_other &&
                     a.kappa_sq_clean == b.kappa_sq_clean && a.kappa_sq_wrong == b.kappa_sq_wrong &&
                     a.grad_corr_v == b.grad_corr_v && a.theta_dot_v == b.theta_dot_v;
    }
  }
  const double secs = since(start);
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "lambda=0 run bit-identical to ce (full RunLog): %s; frozen-uniform-target run bit-identical on "
                "weights and trajectory metrics: %s",
                zero_bits ? "yes" : "NO", uniform_bits ? "yes" : "NO");
  report(2, zero_bits && uniform_bits && secs < 5.0, secs, 5, detail);
}

// ---- criterion 3: linear early learning + memorization --------------------
std::vector<RunLog> elr_runs_c3;  // reused by criteria 8 and 9
std::vector<RunLog> ce_runs_c3;

void criterion_3() {
  const auto start = std::chrono::steady_clock::now();
  const int epochs = 4000;
  bool ce_ok = true, elr_ok = true;
  char worst[160] = "";
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const NoisyDataset data = fig_dataset(seed);

    const RunLog ce = train(fig_config(TrainMode::Ce, seed, epochs), data);
    double peak_wc = 0.0;
    for (const auto& rec : ce.records) peak_wc = std::max(peak_wc, rec.acc.wrong_correct);
    const double final_mem = ce.last().acc.wrong_memorized;
    const double final_wc = ce.last().acc.wrong_correct;
    ce_ok = ce_ok && final_mem >= 0.99 && peak_wc >= final_wc + 0.3;

    TrainConfig elr_cfg = fig_config(TrainMode::Elr, seed, epochs);
    elr_cfg.lambda = 3.0;
    const RunLog elr = train(elr_cfg, data);
    elr_ok = elr_ok && elr.last().acc.clean_correct >= 0.9 && elr.last().acc.wrong_memorized <= 0.2;
    if (seed == 1)
      std::snprintf(worst, sizeof(worst), "seed1: ce mem=%.2f peak_wc=%.2f; elr clean=%.2f mem=%.2f", final_mem,
                    peak_wc, elr.last().acc.clean_correct, elr.last().acc.wrong_memorized);
    ce_runs_c3.push_back(ce);
    elr_runs_c3.push_back(elr);
  }
  const double secs = since(start);
  report(3, ce_ok && elr_ok && secs < 60.0, secs, 60,
         std::string("5 seeds: ce memorizes >= 0.99 with early hump >= final+0.3: ") + (ce_ok ? "yes" : "NO") +
             "; elr clean >= 0.9 and memorized <= 0.2: " + (elr_ok ? "yes" : "NO") + " (" + worst + ")");
}

// ---- criteria 4-6: Prop A.2 / Prop A.3 / Thm A.2 on shared runs ------------
void criteria_4_5_6() {
  const auto start = std::chrono::steady_clock::now();
  const Eigen::Index n = 3000, p = 2700;  // p/n = 0.9, inside (0.8, 1)
  const double sigma = 0.05, delta = 0.4, eta = 0.25;
  const int epochs = 8, seeds = 10;

  bool corr_ok = true, kappa_ok = true, horizon_ok = true;
  double min_corr = 1.0, min_drop = 10.0, min_rise = 10.0;
  double a0_sum = 0.0, aT_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    DataSpec spec;
    spec.n = n;
    spec.p = p;
    spec.sigma = sigma;
    spec.delta = delta;
    spec.data_seed = seed;
    const NoisyDataset data = spec.build();

    TrainConfig config = fig_config(TrainMode::Ce, seed, epochs);
    config.eta = eta;
    const RunLog log = train(config, data);

    // T = first record with theta.v >= 1/10
    std::size_t T = log.records.size();
    for (std::size_t r = 0; r < log.records.size(); ++r) {
      if (log.records[r].theta_dot_v >= 0.1) {
        T = r;
        break;
      }
    }
    if (T == log.records.size() || T == 0) {
      horizon_ok = false;
      continue;
    }
    for (std::size_t r = 0; r < T; ++r) {
      min_corr = std::min(min_corr, log.records[r].grad_corr_v);
      corr_ok = corr_ok && log.records[r].grad_corr_v >= 1.0 / 6.0;
    }
    const double drop = log.records[0].kappa_sq_clean - log.records[T].kappa_sq_clean;
    const double rise = log.records[T].kappa_sq_wrong - log.records[0].kappa_sq_wrong;
    min_drop = std::min(min_drop, drop);
    min_rise = std::min(min_rise, rise);
    kappa_ok = kappa_ok && drop >= 0.05 && rise >= 0.05;

    // wrong_correct is the argmax accuracy on the wrong set, i.e. A-hat
    a0_sum += log.records[0].acc.wrong_correct;
    aT_sum += log.records[T].acc.wrong_correct;
  }
  const double secs = since(start);
  const double a0_mean = a0_sum / seeds, aT_mean = aT_sum / seeds;

  char d4[160], d5[160], d6[200];
  std::snprintf(d4, sizeof(d4), "n=%lld p=%lld sigma=%.2f: min pre-T gradient correlation with v = %.3f (>= 1/6)",
                static_cast<long long>(n), static_cast<long long>(p), sigma, min_corr);
  report(4, horizon_ok && corr_ok && secs < 30.0, secs, 30, d4);
  std::snprintf(d5, sizeof(d5), "min kappa^2 clean drop = %.3f, min wrong rise = %.3f (each >= 0.05)", min_drop,
                min_rise);
  report(5, horizon_ok && kappa_ok && secs < 30.0, secs, 30, d5);
  std::snprintf(d6, sizeof(d6),
                "mean over 10 seeds: A(theta_0)=%.3f (in [0.35,0.65]), A(theta_T)=%.3f (>= 0.9); finite-size "
                "brackets stand in for the asymptotic thresholds",
                a0_mean, aT_mean);
  report(6, horizon_ok && a0_mean >= 0.35 && a0_mean <= 0.65 && aT_mean >= 0.9 && secs < 30.0, secs, 30, d6);
}

// ---- criterion 7: Cover machinery and the separability bound --------------
void criterion_7() {
  const auto start = std::chrono::steady_clock::now();
  using boost::multiprecision::cpp_int;

  // (a) exact dichotomy counts against brute-force enumeration
  bool cover_ok = true;
  Rng rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index n = 3; n <= 8; ++n) {
    for (Eigen::Index p = 1; p <= 3; ++p) {
      for (int repeat = 0; repeat < 2; ++repeat) {
        Eigen::MatrixXd X(n, p);
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index k = 0; k < p; ++k) X(i, k) = gauss(rng);
        cover_ok = cover_ok && cover_count(n, p) == cpp_int(oracle::count_separable_dichotomies(X));
      }
    }
  }

  // (b) Monte Carlo separability of noisy classes at n=50, p=49, delta=0.4
  const int trials = 200;
  int not_separable = 0, undecided = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::uint64_t seed = mix64(900 + static_cast<std::uint64_t>(trial));
    const NoisyDataset noisy = inject_symmetric_noise(gen_mixture(50, 49, 2, 0.1, seed), 0.4, seed);
    std::vector<int> signs(50);
    for (Eigen::Index i = 0; i < 50; ++i) signs[static_cast<std::size_t>(i)] = noisy.observed_sign(i);
    const SeparabilityReport report = check_separability(noisy.inputs, signs);
    if (report.verdict == Separability::NotSeparable) ++not_separable;
    if (report.verdict == Separability::Undecided) ++undecided;
  }
  const double q_hat = static_cast<double>(not_separable) / trials;
  const double bound = memorization_prob_bound(50, 49, 0.4);
  const double se = std::sqrt(std::max(q_hat * (1.0 - q_hat), bound * (1.0 - bound)) / trials);
  const bool mc_ok = q_hat <= bound + 3.0 * se && undecided == 0;

  // (c) p >= n is always separable
  bool excess_ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint64_t seed = mix64(7000 + static_cast<std::uint64_t>(trial));
    const NoisyDataset noisy = inject_symmetric_noise(gen_mixture(20, 25, 2, 0.1, seed), 0.4, seed);
    std::vector<int> signs(20);
    for (Eigen::Index i = 0; i < 20; ++i) signs[static_cast<std::size_t>(i)] = noisy.observed_sign(i);
    excess_ok = excess_ok && check_separability(noisy.inputs, signs).verdict == Separability::Separable;
  }

  const double secs = since(start);
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "cover counts match enumeration (n<=8, p<=3): %s; MC non-separable %d/%d vs bound %.3e + 3SE: %s "
                "(undecided %d); p>=n all separable: %s",
                cover_ok ? "yes" : "NO", not_separable, trials, bound, mc_ok ? "yes" : "NO", undecided,
                excess_ok ? "yes" : "NO");
  report(7, cover_ok && mc_ok && excess_ok && secs < 60.0, secs, 60, detail);
}

// ---- criterion 8: KL regularization memorizes (desk-scale analogue) -------
void criterion_8() {
  const auto start = std::chrono::steady_clock::now();
  bool ok = true;
  double worst_gap = 10.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const NoisyDataset data = fig_dataset(seed);
    const double elr_mem = elr_runs_c3[seed - 1].last().acc.wrong_memorized;
    for (double lambda : {1.0, 5.0}) {
      TrainConfig config = fig_config(TrainMode::Kl, seed, 4000);
      config.lambda = lambda;
      const RunLog log = train(config, data);
      const double gap = log.last().acc.wrong_memorized - elr_mem;
      worst_gap = std::min(worst_gap, gap);
      ok = ok && gap >= 0.3;
    }
  }
  const double secs = since(start);
  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "kl (lambda in {1,5}) final memorized exceeds elr's by >= 0.3 on 5 seeds: min gap = %.2f "
                "(desk-scale linear analogue of the image-benchmark comparison)",
                worst_gap);
  report(8, ok && secs < 60.0, secs, 60, detail);
}

// ---- criterion 9: targets overfit under ce, not under elr -----------------
void criterion_9() {
  const auto start = std::chrono::steady_clock::now();
  bool ce_ok = true, elr_ok = true;
  double min_ce = 1.0, max_elr = 0.0;
  for (std::size_t run = 0; run < 5; ++run) {
    const double ce_agree = ce_runs_c3[run].last().target_match_observed;
    const double elr_wrong_agree = elr_runs_c3[run].last().target_match_observed_wrong;
    min_ce = std::min(min_ce, ce_agree);
    max_elr = std::max(max_elr, elr_wrong_agree);
    ce_ok = ce_ok && ce_agree >= 0.9;
    elr_ok = elr_ok && elr_wrong_agree <= 0.6;
  }
  const double secs = since(start);
  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "ce-mode ensembled targets match observed labels >= 0.9 (min %.2f); elr wrong-set agreement "
                "<= 0.6 (max %.2f)",
                min_ce, max_elr);
  report(9, ce_ok && elr_ok && secs < 60.0, secs, 60, detail);
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion_1();
  criterion_2();
  criterion_3();
  criteria_4_5_6();
  criterion_7();
  criterion_8();
  criterion_9();
  std::printf(
      "[NOTE] criterion 10: image-benchmark accuracy tables and training-time comparisons are out of scope at desk "
      "scale by design; criteria 1-9 stand in for them.\n");
  if (failures > 0) {
    std::printf("%d criterion(s) FAILED\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}

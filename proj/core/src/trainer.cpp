#include "elr/trainer.hpp"

#include "elr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace elr {

namespace {

CoeffMode coeff_mode_of(TrainMode mode) {
  switch (mode) {
    case TrainMode::Ce:
      return CoeffMode::Ce;
    case TrainMode::Kl:
      return CoeffMode::Kl;
    case TrainMode::Elr:
    case TrainMode::ElrPlus:
      return CoeffMode::Elr;
  }
  throw std::logic_error("unknown train mode");
}

Arch arch_of(const TrainConfig& config, const NoisyDataset& data) {
  return config.arch == ArchKind::Linear ? Arch::linear(data.classes, data.dim())
                                         : Arch::mlp(data.dim(), config.hidden, data.classes);
}

Eigen::MatrixXd one_hot_rows(const std::vector<int>& labels, int classes) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  return y;
}

double effective_lambda(const TrainConfig& config, std::int64_t step) {
  if (config.ramp_steps <= 0) return config.lambda;
  return ramp(step, config.ramp_steps, config.lambda);
}

bool binary_linear(const TrainConfig& config, const NoisyDataset& data) {
  return config.arch == ArchKind::Linear && data.classes == 2 && data.means.rows() > 0;
}

// Shared per-epoch instrumentation. `ensemble_probs`, when given, replaces
// the single-network probabilities in the accuracy metrics (two-network runs).
EpochRecord make_record(int epoch, const TrainConfig& config, const NoisyDataset& data, const ModelParams& params,
                        const TargetTable& targets, const Eigen::MatrixXd* ensemble_probs, double lambda_eff,
                        double ell_prime_mean) {
  const CoeffMode cmode = coeff_mode_of(config.mode);
  EpochRecord rec;
  rec.epoch = epoch;
  rec.ell_prime_mean = ell_prime_mean;

  Eigen::MatrixXd own_probs = softmax_rows(forward_batch(params, data.inputs));
  const Eigen::Index n = data.size();
  double ce_acc = 0.0, reg_acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd p = own_probs.row(i).transpose();
    const Eigen::VectorXd t = targets.t.row(i).transpose();
    const LossBreakdown lb = loss_breakdown(p, data.observed_labels[static_cast<std::size_t>(i)], t, lambda_eff, cmode);
    ce_acc += lb.ce_value;
    reg_acc += lb.reg_value;
  }
  rec.loss_ce = ce_acc / static_cast<double>(n);
  rec.loss_reg = lambda_eff * (reg_acc / static_cast<double>(n));
  rec.loss_total = rec.loss_ce + rec.loss_reg;

  rec.acc = breakdown(ensemble_probs ? *ensemble_probs : own_probs, data.observed_labels, data.true_labels,
                      data.clean_set, data.wrong_set);

  const TargetAgreement overall = target_agreement(targets.t, data.observed_labels, data.true_labels);
  if (!overall.cold) {
    rec.target_match_observed = overall.match_observed;
    rec.target_match_true = overall.match_true;
    if (!data.wrong_set.empty()) {
      rec.target_match_observed_wrong =
          target_agreement(targets.t, data.observed_labels, data.true_labels, data.wrong_set).match_observed;
    }
  }

  if (binary_linear(config, data)) {
    const Eigen::VectorXd theta = params.theta_binary();
    const Eigen::VectorXd v = data.direction();
    rec.theta_dot_v = theta.dot(v);
    const KappaStats ks = kappa_stats(theta, data);
    rec.kappa_sq_clean = ks.mean_sq_clean;
    rec.kappa_sq_wrong = ks.mean_sq_wrong;

    // Correlation of the full-batch gradient at these parameters with v,
    // measured on the theta = Theta_1 - Theta_2 dynamics.
    Eigen::MatrixXd coeffs(n, data.classes);
    const Eigen::MatrixXd y = one_hot_rows(data.observed_labels, data.classes);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd t = targets.t.row(i).transpose();
      Eigen::VectorXd yi = y.row(i).transpose();
      if (config.refine_labels) yi = refine_labels(yi, t);
      coeffs.row(i) = total_coeff(own_probs.row(i).transpose(), yi, t, lambda_eff, cmode).transpose();
    }
    const ParamGrad grad = grad_from_coeffs(params, data.inputs, coeffs);
    const Eigen::VectorXd theta_grad = (grad.weights[0].row(0) - grad.weights[0].row(1)).transpose();
    rec.grad_corr_v = grad_correlation(theta_grad, v).value;
  }
  return rec;
}

bool record_finite(const EpochRecord& rec) {
  for (double v : {rec.loss_ce, rec.loss_reg, rec.loss_total, rec.acc.clean_correct, rec.acc.clean_incorrect,
                   rec.acc.wrong_correct, rec.acc.wrong_memorized, rec.acc.wrong_other, rec.kappa_sq_clean,
                   rec.kappa_sq_wrong, rec.grad_corr_v, rec.theta_dot_v, rec.target_match_observed,
                   rec.target_match_true, rec.target_match_observed_wrong, rec.ell_prime_mean}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::vector<std::vector<Eigen::Index>> make_batches(Eigen::Index n, Eigen::Index batch_size, Rng& shuffle_rng) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  if (batch_size <= 0 || batch_size >= n) return {perm};
  std::shuffle(perm.begin(), perm.end(), shuffle_rng);
  std::vector<std::vector<Eigen::Index>> batches;
  for (Eigen::Index start = 0; start < n; start += batch_size) {
    const Eigen::Index end = std::min(n, start + batch_size);
    batches.emplace_back(perm.begin() + start, perm.begin() + end);
  }
  return batches;
}

}  // namespace

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::Ce:
      return "ce";
    case TrainMode::Kl:
      return "kl";
    case TrainMode::Elr:
      return "elr";
    case TrainMode::ElrPlus:
      return "elr_plus";
  }
  throw std::logic_error("unknown train mode");
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "ce") return TrainMode::Ce;
  if (s == "kl") return TrainMode::Kl;
  if (s == "elr") return TrainMode::Elr;
  if (s == "elr_plus") return TrainMode::ElrPlus;
  throw std::invalid_argument("unknown mode '" + s + "' (expected ce | kl | elr | elr_plus)");
}

void TrainConfig::validate() const {
  if (eta <= 0.0) throw std::invalid_argument("config: eta must be > 0");
  if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
  if (lambda < 0.0) throw std::invalid_argument("config: lambda must be >= 0");
  if (beta < 0.0 || beta >= 1.0) throw std::invalid_argument("config: beta must be in [0, 1)");
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("config: gamma must be in [0, 1)");
  if (batch_size < 0) throw std::invalid_argument("config: batch_size must be positive or full");
  if (metric_every < 1) throw std::invalid_argument("config: metric_every must be >= 1");
  if (mode == TrainMode::ElrPlus && mixup && alpha_mixup <= 0.0)
    throw std::invalid_argument("config: alpha_mixup must be > 0 when mixup is enabled");
  if (arch == ArchKind::Mlp && hidden < 1) throw std::invalid_argument("config: hidden must be >= 1");
  if (init_radius < 0.0) throw std::invalid_argument("config: init_radius must be >= 0");
  if (ramp_steps < 0) throw std::invalid_argument("config: ramp_steps must be >= 0");
}

RunLog train(const TrainConfig& config, const NoisyDataset& data) {
  config.validate();
  if (config.mode == TrainMode::ElrPlus)
    throw std::invalid_argument("train: use train_elr_plus for two-network runs");
  const CoeffMode cmode = coeff_mode_of(config.mode);
  const Arch arch = arch_of(config, data);
  const Eigen::Index n = data.size();
  const int classes = data.classes;

  ModelParams params = init_params(arch, config.seed, config.init_radius);
  TargetTable targets(n, classes, config.beta);
  if (config.freeze_targets_uniform) targets.t.setConstant(1.0 / static_cast<double>(classes));
  Rng shuffle_rng = make_rng(config.seed, Stream::Shuffle);
  const Eigen::MatrixXd y_all = one_hot_rows(data.observed_labels, classes);

  RunLog log;
  log.weight_hashes.push_back(weights_hash(params));
  std::int64_t step = 0;
  {
    EpochRecord rec = make_record(0, config, data, params, targets, nullptr, effective_lambda(config, step), 1.0);
    if (!record_finite(rec)) {
      log.diverged = true;
      log.diverged_epoch = 0;
      log.final_params = params;
      log.final_targets = targets.t;
      return log;
    }
    log.records.push_back(std::move(rec));
  }

  const bool full_batch = config.batch_size <= 0 || config.batch_size >= n;
  Eigen::MatrixXd xb_storage;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batches = make_batches(n, config.batch_size, shuffle_rng);
    for (const auto& batch : batches) {
      const double lambda_eff = effective_lambda(config, step);
      ++step;
      const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
      if (!full_batch) {
        xb_storage.resize(b, data.dim());
        for (Eigen::Index r = 0; r < b; ++r) xb_storage.row(r) = data.inputs.row(batch[static_cast<std::size_t>(r)]);
      }
      const Eigen::Ref<const Eigen::MatrixXd> xb = full_batch ? data.inputs : xb_storage;
      const Eigen::MatrixXd probs = softmax_rows(forward_batch(params, xb));

      // Targets update first; the loss coefficients see the updated rows.
      if (!config.freeze_targets_uniform) {
        for (Eigen::Index r = 0; r < b; ++r)
          ensemble_update(targets, batch[static_cast<std::size_t>(r)], probs.row(r).transpose());
      }

      Eigen::MatrixXd coeffs(b, classes);
      for (Eigen::Index r = 0; r < b; ++r) {
        const Eigen::Index i = batch[static_cast<std::size_t>(r)];
        const Eigen::VectorXd p = probs.row(r).transpose();
        const Eigen::VectorXd t = targets.t.row(i).transpose();
        Eigen::VectorXd y = y_all.row(i).transpose();
        if (config.refine_labels) y = refine_labels(y, t);
        coeffs.row(r) = total_coeff(p, y, t, lambda_eff, cmode).transpose();
      }
      const ParamGrad grad = grad_from_coeffs(params, xb, coeffs);
      if (!grad.finite()) {
        log.diverged = true;
        log.diverged_epoch = epoch;
        log.final_params = params;
        log.final_targets = targets.t;
        return log;
      }
      sgd_step(params, grad, config.eta);
      if (!params.finite()) {
        log.diverged = true;
        log.diverged_epoch = epoch;
        log.final_params = params;
        log.final_targets = targets.t;
        return log;
      }
    }
    log.weight_hashes.push_back(weights_hash(params));
    if (epoch % config.metric_every == 0 || epoch == config.epochs) {
      EpochRecord rec = make_record(epoch, config, data, params, targets, nullptr, effective_lambda(config, step), 1.0);
      if (!record_finite(rec)) {  // saturated weights can break the metrics before the step does
        log.diverged = true;
        log.diverged_epoch = epoch;
        log.final_params = params;
        log.final_targets = targets.t;
        return log;
      }
      log.records.push_back(std::move(rec));
    }
  }
  log.final_params = params;
  log.final_targets = targets.t;
  return log;
}

std::pair<RunLog, RunLog> train_elr_plus(const TrainConfig& config, const NoisyDataset& data) {
  config.validate();
  if (config.mode != TrainMode::ElrPlus) throw std::invalid_argument("train_elr_plus: mode must be elr_plus");
  const Arch arch = arch_of(config, data);
  const Eigen::Index n = data.size();
  const int classes = data.classes;

  const std::uint64_t second_seed = config.tie_networks ? config.seed : mix64(config.seed ^ 0x9c0ffeeULL);
  ModelParams params[2] = {init_params(arch, config.seed, config.init_radius),
                           init_params(arch, second_seed, config.init_radius)};
  AveragedParams averaged[2] = {AveragedParams::zeros_like(params[0]), AveragedParams::zeros_like(params[1])};
  TargetTable targets[2] = {TargetTable(n, classes, config.beta), TargetTable(n, classes, config.beta)};
  Rng mixup_rng[2] = {make_rng(config.seed, Stream::Mixup), make_rng(config.seed, Stream::MixupSecond)};
  Rng shuffle_rng = make_rng(config.seed, Stream::Shuffle);
  const Eigen::MatrixXd y_all = one_hot_rows(data.observed_labels, classes);

  RunLog logs[2];
  // explicit return type: an auto-deduced Eigen expression would dangle
  auto ensemble_probs = [&]() -> Eigen::MatrixXd {
    return 0.5 * (softmax_rows(forward_batch(params[0], data.inputs)) +
                  softmax_rows(forward_batch(params[1], data.inputs)));
  };

  std::int64_t step = 0;
  {
    const Eigen::MatrixXd shared = ensemble_probs();
    for (int k = 0; k < 2; ++k) {
      logs[k].weight_hashes.push_back(weights_hash(params[k]));
      EpochRecord rec =
          make_record(0, config, data, params[k], targets[k], &shared, effective_lambda(config, step), 1.0);
      if (!record_finite(rec)) {
        for (int m = 0; m < 2; ++m) {
          logs[m].diverged = true;
          logs[m].diverged_epoch = 0;
          logs[m].final_params = params[m];
          logs[m].final_targets = targets[m].t;
        }
        return {logs[0], logs[1]};
      }
      logs[k].records.push_back(std::move(rec));
    }
  }

  const bool full_batch = config.batch_size <= 0 || config.batch_size >= n;
  Eigen::MatrixXd xb_storage;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double ell_sum[2] = {0.0, 0.0};
    std::int64_t ell_count[2] = {0, 0};
    // The networks alternate per batch, so each one evaluates the other's
    // averaged weights as of the previous batch. With gamma = 0, tied seeds
    // and mixup off this collapses exactly onto the single-network run.
    const auto batches = make_batches(n, config.batch_size, shuffle_rng);
    for (const auto& batch : batches) {
      const double lambda_eff = effective_lambda(config, step);
      ++step;
      // Both averages refresh before either network trains on the batch, so
      // each one reads the other's pre-step weights.
      weight_average(averaged[0], params[0], config.gamma);
      weight_average(averaged[1], params[1], config.gamma);
      for (int k = 0; k < 2; ++k) {
        const int other = 1 - k;
        const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
        if (!full_batch) {
          xb_storage.resize(b, data.dim());
          for (Eigen::Index r = 0; r < b; ++r) xb_storage.row(r) = data.inputs.row(batch[static_cast<std::size_t>(r)]);
        }
        const Eigen::Ref<const Eigen::MatrixXd> xb = full_batch ? data.inputs : xb_storage;

        // Mixing pairs and weights are drawn before anything else; the mixed
        // triplet itself is materialized from the updated target rows below.
        std::vector<Eigen::Index> partner(static_cast<std::size_t>(b));
        std::vector<double> ell_prime(static_cast<std::size_t>(b), 1.0);
        if (config.mixup) {
          std::uniform_int_distribution<Eigen::Index> pick(0, b - 1);
          std::gamma_distribution<double> gamma_draw(config.alpha_mixup, 1.0);
          for (Eigen::Index r = 0; r < b; ++r) {
            partner[static_cast<std::size_t>(r)] = pick(mixup_rng[k]);
            const double g1 = gamma_draw(mixup_rng[k]);
            const double g2 = gamma_draw(mixup_rng[k]);
            const double ell = (g1 + g2 > 0.0) ? g1 / (g1 + g2) : 0.5;
            ell_prime[static_cast<std::size_t>(r)] = std::max(ell, 1.0 - ell);
          }
        } else {
          for (Eigen::Index r = 0; r < b; ++r) partner[static_cast<std::size_t>(r)] = r;
        }
        for (Eigen::Index r = 0; r < b; ++r) {
          ell_sum[k] += ell_prime[static_cast<std::size_t>(r)];
          ++ell_count[k];
        }

        // Targets from the other network's averaged weights on un-mixed inputs.
        const ModelParams other_avg = averaged[other].snapshot();
        const Eigen::MatrixXd p_target = softmax_rows(forward_batch(other_avg, xb));
        for (Eigen::Index r = 0; r < b; ++r)
          ensemble_update(targets[k], batch[static_cast<std::size_t>(r)], p_target.row(r).transpose());

        Eigen::MatrixXd x_mixed_storage;
        if (config.mixup) x_mixed_storage.resize(b, data.dim());
        Eigen::MatrixXd y_mixed(b, classes);
        Eigen::MatrixXd t_mixed(b, classes);
        for (Eigen::Index r = 0; r < b; ++r) {
          const Eigen::Index i = batch[static_cast<std::size_t>(r)];
          const Eigen::Index j = batch[static_cast<std::size_t>(partner[static_cast<std::size_t>(r)])];
          const double lp = ell_prime[static_cast<std::size_t>(r)];
          Eigen::VectorXd yi = y_all.row(i).transpose();
          Eigen::VectorXd yj = y_all.row(j).transpose();
          if (config.refine_labels) {
            yi = refine_labels(yi, targets[k].t.row(i).transpose());
            yj = refine_labels(yj, targets[k].t.row(j).transpose());
          }
          if (config.mixup) {
            x_mixed_storage.row(r) = lp * data.inputs.row(i) + (1.0 - lp) * data.inputs.row(j);
            y_mixed.row(r) = (lp * yi + (1.0 - lp) * yj).transpose();
            t_mixed.row(r) = lp * targets[k].t.row(i) + (1.0 - lp) * targets[k].t.row(j);
          } else {
            y_mixed.row(r) = yi.transpose();
            t_mixed.row(r) = targets[k].t.row(i);
          }
        }
        const Eigen::Ref<const Eigen::MatrixXd> x_for_loss =
            config.mixup ? Eigen::Ref<const Eigen::MatrixXd>(x_mixed_storage) : xb;

        const Eigen::MatrixXd probs_mixed = softmax_rows(forward_batch(params[k], x_for_loss));
        Eigen::MatrixXd coeffs(b, classes);
        for (Eigen::Index r = 0; r < b; ++r) {
          coeffs.row(r) = total_coeff(probs_mixed.row(r).transpose(), y_mixed.row(r).transpose(),
                                      t_mixed.row(r).transpose(), lambda_eff, CoeffMode::Elr)
                              .transpose();
        }
        const ParamGrad grad = grad_from_coeffs(params[k], x_for_loss, coeffs);
        if (grad.finite()) sgd_step(params[k], grad, config.eta);
        if (!grad.finite() || !params[k].finite()) {
          for (int m = 0; m < 2; ++m) {
            logs[m].diverged = true;
            logs[m].diverged_epoch = epoch;
            logs[m].final_params = params[m];
            logs[m].final_targets = targets[m].t;
          }
          return {logs[0], logs[1]};
        }
      }
    }
    for (int k = 0; k < 2; ++k) logs[k].weight_hashes.push_back(weights_hash(params[k]));
    if (epoch % config.metric_every == 0 || epoch == config.epochs) {
      const Eigen::MatrixXd shared = ensemble_probs();
      for (int k = 0; k < 2; ++k) {
        const double ell_mean = ell_count[k] > 0 ? ell_sum[k] / static_cast<double>(ell_count[k]) : 1.0;
        EpochRecord rec = make_record(epoch, config, data, params[k], targets[k], &shared,
                                      effective_lambda(config, step), ell_mean);
        if (!record_finite(rec)) {
          for (int m = 0; m < 2; ++m) {
            logs[m].diverged = true;
            logs[m].diverged_epoch = epoch;
            logs[m].final_params = params[m];
            logs[m].final_targets = targets[m].t;
          }
          return {logs[0], logs[1]};
        }
        logs[k].records.push_back(std::move(rec));
      }
    }
  }
  logs[0].final_params = params[0];
  logs[1].final_params = params[1];
  logs[0].final_targets = targets[0].t;
  logs[1].final_targets = targets[1].t;
  return {logs[0], logs[1]};
}

}  // namespace elr

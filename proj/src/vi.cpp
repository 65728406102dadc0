#include "vimf/vi.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vimf/parallel.hpp"
#include "vimf/textio.hpp"

namespace vimf {

double Gradient::norm() const {
  double s = 0.0;
  for (double g : mu) s += g * g;
  for (double g : rho) s += g * g;
  return std::sqrt(s);
}

bool TrainMask::enabled(LatentBlock b) const {
  switch (b) {
    case LatentBlock::U: return u;
    case LatentBlock::V: return v;
    case LatentBlock::Bu: return bu;
    case LatentBlock::Bv: return bv;
    case LatentBlock::KappaT: return kappa_t;
    case LatentBlock::PsiT: return psi_t;
    case LatentBlock::KappaL: return kappa_l;
    case LatentBlock::PsiL: return psi_l;
  }
  return true;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (mc_samples < 1) throw ValidationError("mc_samples must be >= 1");
  if (!(learning_rate > 0)) throw ValidationError("learning_rate must be > 0");
  if (neg_ratio < 0) throw ValidationError("neg_ratio must be >= 0");
  if (threads < 1) throw ValidationError("threads must be >= 1");
  if (use_control_variate && mc_samples < 2)
    throw ValidationError("control variate needs mc_samples >= 2");
}

VariationalParams init_variational(const Hyperparams& h, int m, int n,
                                   std::uint64_t seed) {
  h.validate();
  if (m < 1 || n < 1) throw ValidationError("init_variational requires m, n >= 1");
  VariationalParams params;
  params.layout = LatentLayout{m, n, h.d};
  const std::size_t total = params.layout.size();
  params.mu.resize(total);
  params.rho.assign(total, softplus_inverse(0.1));
  Rng rng(seed);
  for (std::size_t i = 0; i < total; ++i) {
    params.mu[i] = params.layout.prior_mean(i) + rng.uniform(-0.01, 0.01);
  }
  return params;
}

std::pair<LatentState, double> sample_q(const VariationalParams& params,
                                        Rng& rng) {
  LatentState state;
  state.layout = params.layout;
  state.theta.resize(params.mu.size());
  double log_q = 0.0;
  for (std::size_t i = 0; i < params.mu.size(); ++i) {
    const double sd = params.sigma(i);
    const double x = rng.normal(params.mu[i], sd);
    state.theta[i] = x;
    log_q += gaussian_log_density_sd(x, params.mu[i], sd);
  }
  return {std::move(state), log_q};
}

namespace {

/// KL(N(mu, sigma^2) || N(m0, 1/prec0)) for one scalar.
double kl_term(double mu, double sigma, double m0, double prec0) {
  const double diff = mu - m0;
  return -0.5 * std::log(prec0) - std::log(sigma) +
         0.5 * prec0 * (sigma * sigma + diff * diff) - 0.5;
}

double kl_masked(const VariationalParams& params, const Hyperparams& h,
                 const TrainMask& mask) {
  const auto& layout = params.layout;
  double kl = 0.0;
  for (std::size_t i = 0; i < params.mu.size(); ++i) {
    if (!mask.enabled(layout.block_of(i))) continue;
    kl += kl_term(params.mu[i], params.sigma(i), layout.prior_mean(i),
                  layout.prior_precision(i, h));
  }
  return kl;
}

double affinity_of(const LatentLayout& layout, const std::vector<double>& theta,
                   int p, int q) {
  const double* u = theta.data() + layout.u(p, 0);
  const double* v = theta.data() + layout.v(q, 0);
  double dot = 0.0;
  for (int j = 0; j < layout.d; ++j) dot += u[j] * v[j];
  return dot + theta[layout.bu(p)] + theta[layout.bv(q)];
}

/// Everything the gradient assembly needs from one posterior draw. The
/// likelihood sums are kept unscaled and split by the entity they touch so
/// each latent block can be bracketed with exactly the terms it appears in.
struct SampleEval {
  std::vector<double> theta;
  double log_q = 0.0;
  double log_prior = 0.0;
  std::vector<double> user_t, user_l;  // per-user likelihood sums
  std::vector<double> attr_t, attr_l;  // per-attribute likelihood sums
  double tot_t = 0.0, tot_l = 0.0;
};

SampleEval eval_sample(const VariationalParams& params, const Hyperparams& h,
                       const Batch& batch, std::uint64_t seed,
                       const TrainMask& mask, bool need_prior) {
  const auto& layout = params.layout;
  SampleEval ev;
  ev.theta.resize(params.mu.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < params.mu.size(); ++i) {
    if (mask.enabled(layout.block_of(i))) {
      const double sd = params.sigma(i);
      ev.theta[i] = rng.normal(params.mu[i], sd);
      ev.log_q += gaussian_log_density_sd(ev.theta[i], params.mu[i], sd);
      if (need_prior) {
        ev.log_prior += gaussian_log_density_prec(
            ev.theta[i], layout.prior_mean(i), layout.prior_precision(i, h));
      }
    } else {
      ev.theta[i] = params.mu[i];
    }
  }

  ev.user_t.assign(layout.m, 0.0);
  ev.user_l.assign(layout.m, 0.0);
  ev.attr_t.assign(layout.n, 0.0);
  ev.attr_l.assign(layout.n, 0.0);

  const double kt = ev.theta[layout.kappa_t()];
  const double pt = ev.theta[layout.psi_t()];
  const double kl = ev.theta[layout.kappa_l()];
  const double pl = ev.theta[layout.psi_l()];
  const double prec_t = h.precision_t();
  const double prec_l = h.precision_l();

  for (const auto& o : batch.t_obs) {
    const double mean = kt * affinity_of(layout, ev.theta, o.p, o.q) + pt;
    const double term = gaussian_log_density_prec(o.value, mean, prec_t);
    ev.user_t[o.p] += term;
    ev.attr_t[o.q] += term;
    ev.tot_t += term;
  }
  for (const auto& o : batch.l_obs) {
    const double mean = kl * affinity_of(layout, ev.theta, o.p, o.q) + pl;
    const double term = gaussian_log_density_prec(o.value, mean, prec_l);
    ev.user_l[o.p] += term;
    ev.attr_l[o.q] += term;
    ev.tot_l += term;
  }
  return ev;
}

/// Names the first latent block whose contribution went non-finite.
void check_finite(const std::vector<SampleEval>& evals,
                  const LatentLayout& layout) {
  for (const auto& ev : evals) {
    if (std::isfinite(ev.tot_t) && std::isfinite(ev.tot_l) &&
        std::isfinite(ev.log_q) && std::isfinite(ev.log_prior)) {
      continue;
    }
    for (int p = 0; p < layout.m; ++p) {
      if (!std::isfinite(ev.user_t[p]) || !std::isfinite(ev.user_l[p]))
        throw NumericError("non-finite log-joint in user block (U/bu) p=" +
                           std::to_string(p));
    }
    for (int q = 0; q < layout.n; ++q) {
      if (!std::isfinite(ev.attr_t[q]) || !std::isfinite(ev.attr_l[q]))
        throw NumericError("non-finite log-joint in attribute block (V/bv) q=" +
                           std::to_string(q));
    }
    throw NumericError("non-finite log-joint in scalar block (kappa/psi)");
  }
}

struct StepEstimate {
  Gradient grad;
  double elbo = 0.0;
};

StepEstimate estimate_step(const VariationalParams& params,
                           const Hyperparams& h, const Batch& batch,
                           const std::vector<std::uint64_t>& seeds,
                           GradientEstimator estimator, bool use_cv,
                           const TrainMask& mask, int threads) {
  const auto& layout = params.layout;
  const std::size_t total = params.mu.size();
  const int S = static_cast<int>(seeds.size());
  const bool need_prior = estimator == GradientEstimator::FullMc;

  std::vector<SampleEval> evals(S);
  parallel_for_chunks(S, 1, threads, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t s = b; s < e; ++s) {
      evals[s] = eval_sample(params, h, batch, seeds[s], mask, need_prior);
    }
  });
  check_finite(evals, layout);

  // precomputed per-coordinate quantities
  std::vector<double> sigma(total), dsigma(total);
  for (std::size_t i = 0; i < total; ++i) {
    sigma[i] = params.sigma(i);
    dsigma[i] = sigmoid(params.rho[i]);
  }

  StepEstimate out;
  out.grad.mu.assign(total, 0.0);
  out.grad.rho.assign(total, 0.0);

  const double inv_s = 1.0 / S;
  std::vector<double> f(S), w(S);

  auto apply_loo = [&](std::vector<double>& values) {
    if (!use_cv) return;
    double sum = 0.0;
    for (double v : values) sum += v;
    for (int s = 0; s < S; ++s) {
      values[s] -= (sum - values[s]) / (S - 1);
    }
  };

  if (estimator == GradientEstimator::FullMc) {
    // one global bracket shared by every coordinate
    for (int s = 0; s < S; ++s) {
      f[s] = batch.scale_t * evals[s].tot_t + batch.scale_l * evals[s].tot_l +
             evals[s].log_prior - evals[s].log_q;
      out.elbo += inv_s * f[s];
    }
    w = f;
    apply_loo(w);
    for (std::size_t i = 0; i < total; ++i) {
      if (!mask.enabled(layout.block_of(i))) continue;
      const double inv_var = 1.0 / (sigma[i] * sigma[i]);
      const double rho_scale = dsigma[i] / sigma[i];
      double g_mu = 0.0, g_rho = 0.0;
      for (int s = 0; s < S; ++s) {
        const double z = evals[s].theta[i] - params.mu[i];
        g_mu += (z * inv_var) * w[s];
        g_rho += (z * z * inv_var - 1.0) * rho_scale * w[s];
      }
      out.grad.mu[i] = inv_s * g_mu;
      out.grad.rho[i] = inv_s * g_rho;
    }
    return out;
  }

  // Closed-form-KL estimator: the likelihood term is bracketed per latent
  // block with exactly the minibatch terms that block appears in (the other
  // terms are independent of it and only add variance), and the KL gradient
  // is added analytically.
  double avg_ll = 0.0;
  for (int s = 0; s < S; ++s) {
    avg_ll += inv_s * (batch.scale_t * evals[s].tot_t +
                       batch.scale_l * evals[s].tot_l);
  }
  out.elbo = avg_ll - kl_masked(params, h, mask);

  for (std::size_t i = 0; i < total; ++i) {
    const LatentBlock block = layout.block_of(i);
    if (!mask.enabled(block)) continue;
    const int entity = layout.entity_of(i);

    for (int s = 0; s < S; ++s) {
      const auto& ev = evals[s];
      switch (block) {
        case LatentBlock::U:
        case LatentBlock::Bu:
          f[s] = batch.scale_t * ev.user_t[entity] +
                 batch.scale_l * ev.user_l[entity];
          break;
        case LatentBlock::V:
        case LatentBlock::Bv:
          f[s] = batch.scale_t * ev.attr_t[entity] +
                 batch.scale_l * ev.attr_l[entity];
          break;
        case LatentBlock::KappaT:
        case LatentBlock::PsiT:
          f[s] = batch.scale_t * ev.tot_t;
          break;
        case LatentBlock::KappaL:
        case LatentBlock::PsiL:
          f[s] = batch.scale_l * ev.tot_l;
          break;
      }
    }
    w = f;
    apply_loo(w);

    const double inv_var = 1.0 / (sigma[i] * sigma[i]);
    const double rho_scale = dsigma[i] / sigma[i];
    double g_mu = 0.0, g_rho = 0.0;
    for (int s = 0; s < S; ++s) {
      const double z = evals[s].theta[i] - params.mu[i];
      g_mu += (z * inv_var) * w[s];
      g_rho += (z * z * inv_var - 1.0) * rho_scale * w[s];
    }
    g_mu *= inv_s;
    g_rho *= inv_s;

    // analytic -d KL / d nu
    const double prec0 = layout.prior_precision(i, h);
    const double m0 = layout.prior_mean(i);
    g_mu -= prec0 * (params.mu[i] - m0);
    g_rho -= (prec0 * sigma[i] - 1.0 / sigma[i]) * dsigma[i];

    out.grad.mu[i] = g_mu;
    out.grad.rho[i] = g_rho;
  }
  return out;
}

}  // namespace

double kl_q_prior(const VariationalParams& params, const Hyperparams& h) {
  return kl_masked(params, h, TrainMask{});
}

double elbo_estimate(const VariationalParams& params, const Hyperparams& h,
                     const std::vector<Observation>& t_batch,
                     const std::vector<Observation>& l_batch, double scale_t,
                     double scale_l, int S, Rng& rng) {
  if (S < 1) throw ValidationError("elbo_estimate requires S >= 1");
  double avg = 0.0;
  for (int s = 0; s < S; ++s) {
    auto [state, log_q] = sample_q(params, rng);
    (void)log_q;
    const double ll_t = log_likelihood(state, h, t_batch, {});
    const double ll_l = log_likelihood(state, h, {}, l_batch);
    avg += (scale_t * ll_t + scale_l * ll_l) / S;
  }
  return avg - kl_q_prior(params, h);
}

Gradient score_function_gradient(const VariationalParams& params,
                                 const Hyperparams& h,
                                 const std::vector<Observation>& t_batch,
                                 const std::vector<Observation>& l_batch,
                                 double scale_t, double scale_l, int S,
                                 Rng& rng, bool use_control_variate) {
  if (S < 1) throw ValidationError("score_function_gradient requires S >= 1");
  if (use_control_variate && S < 2)
    throw ValidationError("control variate needs S >= 2");
  Batch batch;
  batch.t_obs = t_batch;
  batch.l_obs = l_batch;
  batch.scale_t = scale_t;
  batch.scale_l = scale_l;
  std::vector<std::uint64_t> seeds(S);
  for (auto& s : seeds) s = rng.next_u64();
  return estimate_step(params, h, batch, seeds, GradientEstimator::FullMc,
                       use_control_variate, TrainMask{}, 1)
      .grad;
}

namespace {

/// Appends negatives and sets the unbiased population scales for a batch
/// that already holds its positive cells.
void finish_batch(Batch& batch, const DualMatrix& matrix,
                  std::size_t positive_draws, double neg_ratio, Rng& rng) {
  const std::size_t positives = matrix.positives();
  const std::size_t zero_cells =
      static_cast<std::size_t>(matrix.m) * matrix.n - positives;
  std::size_t neg_count = 0, neg_population = 0;
  if (neg_ratio > 0 && zero_cells > 0) {
    neg_count = static_cast<std::size_t>(
        std::ceil(neg_ratio * static_cast<double>(positive_draws)));
    neg_population = static_cast<std::size_t>(
        std::ceil(neg_ratio * static_cast<double>(positives)));
    for (std::size_t i = 0; i < neg_count; ++i) {
      int p, q;
      do {
        p = static_cast<int>(rng.uniform_index(matrix.m));
        q = static_cast<int>(rng.uniform_index(matrix.n));
      } while (matrix.has(p, q));
      batch.t_obs.push_back({p, q, 0.0});
      batch.l_obs.push_back({p, q, 0.0});
    }
  }

  const double population = static_cast<double>(positives + neg_population);
  const double drawn = static_cast<double>(positive_draws + neg_count);
  batch.scale_t = population / drawn;
  batch.scale_l = population / drawn;
}

}  // namespace

Batch sample_batch(const DualMatrix& matrix, int batch_size, double neg_ratio,
                   Rng& rng) {
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (neg_ratio < 0) throw ValidationError("neg_ratio must be >= 0");
  const std::size_t positives = matrix.positives();
  if (positives == 0)
    throw ValidationError("cannot sample from a matrix with no stored cells");

  Batch batch;
  batch.t_obs.reserve(batch_size);
  batch.l_obs.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const auto& cell = matrix.cells[rng.uniform_index(positives)];
    batch.t_obs.push_back({cell.p, cell.q, 1.0});
    batch.l_obs.push_back({cell.p, cell.q, cell.l});
  }
  finish_batch(batch, matrix, batch_size, neg_ratio, rng);
  return batch;
}

TrainResult train(const DualMatrix& matrix, const Hyperparams& h,
                  const TrainConfig& cfg, const TrainHooks& hooks,
                  const VariationalParams* resume_from, long start_step) {
  h.validate();
  cfg.validate();
  if (matrix.positives() == 0)
    throw ValidationError("train requires a nonempty matrix");

  VariationalParams params =
      resume_from ? *resume_from
                  : init_variational(h, matrix.m, matrix.n,
                                     substream_seed(cfg.seed, "init"));
  if (params.layout.m != matrix.m || params.layout.n != matrix.n ||
      params.layout.d != h.d) {
    throw ValidationError("variational parameter shape does not match corpus/config");
  }

  Rng rng_batch = make_substream(cfg.seed, "batch");
  Rng rng_mc = make_substream(cfg.seed, "mc");

  const std::size_t total_coords = params.mu.size();
  std::vector<double> acc_mu(total_coords, 0.0), acc_rho(total_coords, 0.0);

  const long steps_per_epoch =
      static_cast<long>((matrix.positives() + cfg.batch_size - 1) /
                        cfg.batch_size);
  const long total_steps = static_cast<long>(cfg.epochs) * steps_per_epoch;

  TrainingTrace trace;
  trace.steps.reserve(total_steps);
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  std::vector<std::uint64_t> seeds(cfg.mc_samples);
  constexpr double kAdagradEps = 1e-8;

  // Epochs partition the shuffled positives into near-equal batches (each
  // positive is visited exactly once per epoch). Zero cells are cycled the
  // same way when their list is materializable, which keeps the minibatch
  // estimates unbiased while removing most of the sampling noise from the
  // trace. Gigantic matrices fall back to rejection sampling.
  const std::size_t n_pos = matrix.positives();
  std::vector<std::size_t> pos_order(n_pos);
  for (std::size_t c = 0; c < n_pos; ++c) pos_order[c] = c;
  std::size_t pos_cursor = n_pos;

  const std::size_t n_zero =
      static_cast<std::size_t>(matrix.m) * matrix.n - n_pos;
  constexpr std::size_t kZeroListCap = std::size_t(1) << 26;
  std::vector<std::pair<int, int>> zero_cells;
  if (cfg.neg_ratio > 0 && n_zero > 0 && n_zero <= kZeroListCap) {
    zero_cells.reserve(n_zero);
    for (int p = 0; p < matrix.m; ++p) {
      for (int q = 0; q < matrix.n; ++q) {
        if (!matrix.has(p, q)) zero_cells.emplace_back(p, q);
      }
    }
  }
  std::size_t zero_cursor = zero_cells.size();

  const std::size_t neg_population = static_cast<std::size_t>(
      std::ceil(cfg.neg_ratio * static_cast<double>(n_pos)));
  auto shuffle_tail = [&rng_batch](auto& vec) {
    for (std::size_t c = vec.size() - 1; c > 0; --c) {
      std::swap(vec[c], vec[rng_batch.uniform_index(c + 1)]);
    }
  };

  for (long i = 0; i < total_steps; ++i) {
    const long epoch_step = i % steps_per_epoch;
    // near-equal chunk sizes: remainder spread over the leading batches
    const std::size_t base = n_pos / steps_per_epoch;
    const std::size_t take =
        base + (static_cast<std::size_t>(epoch_step) < n_pos % steps_per_epoch);
    if (pos_cursor + take > n_pos) {
      shuffle_tail(pos_order);
      pos_cursor = 0;
    }

    Batch batch;
    batch.t_obs.reserve(take);
    batch.l_obs.reserve(take);
    for (std::size_t c = 0; c < take; ++c) {
      const auto& cell = matrix.cells[pos_order[pos_cursor + c]];
      batch.t_obs.push_back({cell.p, cell.q, 1.0});
      batch.l_obs.push_back({cell.p, cell.q, cell.l});
    }
    pos_cursor += take;

    std::size_t neg_count = 0;
    if (cfg.neg_ratio > 0 && n_zero > 0) {
      neg_count = static_cast<std::size_t>(
          std::ceil(cfg.neg_ratio * static_cast<double>(take)));
      if (!zero_cells.empty()) {
        for (std::size_t c = 0; c < neg_count; ++c) {
          if (zero_cursor >= zero_cells.size()) {
            shuffle_tail(zero_cells);
            zero_cursor = 0;
          }
          const auto [p, q] = zero_cells[zero_cursor++];
          batch.t_obs.push_back({p, q, 0.0});
          batch.l_obs.push_back({p, q, 0.0});
        }
      } else {
        for (std::size_t c = 0; c < neg_count; ++c) {
          int p, q;
          do {
            p = static_cast<int>(rng_batch.uniform_index(matrix.m));
            q = static_cast<int>(rng_batch.uniform_index(matrix.n));
          } while (matrix.has(p, q));
          batch.t_obs.push_back({p, q, 0.0});
          batch.l_obs.push_back({p, q, 0.0});
        }
      }
    }
    const double population =
        static_cast<double>(n_pos + (n_zero > 0 ? neg_population : 0));
    const double drawn = static_cast<double>(take + neg_count);
    batch.scale_t = population / drawn;
    batch.scale_l = population / drawn;

    for (auto& s : seeds) s = rng_mc.next_u64();

    StepEstimate est;
    try {
      est = estimate_step(params, h, batch, seeds, cfg.estimator,
                          cfg.use_control_variate, cfg.mask, cfg.threads);
    } catch (const NumericError& err) {
      trace.wall_seconds = elapsed();
      throw DivergenceError("training diverged at step " +
                                std::to_string(start_step + i + 1) + ": " +
                                err.what(),
                            std::move(trace));
    }
    const double grad_norm = est.grad.norm();
    if (!std::isfinite(est.elbo) || !std::isfinite(grad_norm)) {
      trace.wall_seconds = elapsed();
      throw DivergenceError(
          "training diverged (non-finite ELBO estimate) at step " +
              std::to_string(start_step + i + 1),
          std::move(trace));
    }

    for (std::size_t c = 0; c < total_coords; ++c) {
      if (!cfg.mask.enabled(params.layout.block_of(c))) continue;
      const double g_mu = est.grad.mu[c];
      const double g_rho = est.grad.rho[c];
      if (cfg.optimizer == Optimizer::Adagrad) {
        acc_mu[c] += g_mu * g_mu;
        acc_rho[c] += g_rho * g_rho;
        params.mu[c] += cfg.learning_rate * g_mu / (std::sqrt(acc_mu[c]) + kAdagradEps);
        params.rho[c] += cfg.learning_rate * g_rho / (std::sqrt(acc_rho[c]) + kAdagradEps);
      } else {
        params.mu[c] += cfg.learning_rate * g_mu;
        params.rho[c] += cfg.learning_rate * g_rho;
      }
    }

    StepRecord rec{start_step + i + 1, est.elbo, grad_norm};
    trace.steps.push_back(rec);
    if (hooks.on_step) hooks.on_step(rec);
  }

  trace.wall_seconds = elapsed();
  const long steps_completed = start_step + total_steps;
  if (hooks.on_checkpoint) hooks.on_checkpoint(params, steps_completed);
  return {std::move(params), std::move(trace), steps_completed};
}

// ---- checkpoint I/O ----

void save_checkpoint(const std::string& path, const VariationalParams& params,
                     const Hyperparams& h, long steps_completed) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file: " + path);
  const auto& layout = params.layout;
  out << "VIMF v1\n";
  out << layout.m << ' ' << layout.n << ' ' << layout.d << '\n';

  out << "qU\n";
  for (int p = 0; p < layout.m; ++p) {
    write_row(out, params.mu.data() + layout.u(p, 0), layout.d);
    write_row(out, params.rho.data() + layout.u(p, 0), layout.d);
  }
  out << "qV\n";
  for (int q = 0; q < layout.n; ++q) {
    write_row(out, params.mu.data() + layout.v(q, 0), layout.d);
    write_row(out, params.rho.data() + layout.v(q, 0), layout.d);
  }
  out << "qbu\n";
  write_row(out, params.mu.data() + layout.bu(0), layout.m);
  write_row(out, params.rho.data() + layout.bu(0), layout.m);
  out << "qbv\n";
  write_row(out, params.mu.data() + layout.bv(0), layout.n);
  write_row(out, params.rho.data() + layout.bv(0), layout.n);
  out << "qscalars\n";
  write_row(out, params.mu.data() + layout.scalars_begin(), 4);
  write_row(out, params.rho.data() + layout.scalars_begin(), 4);

  out << "hyperparams\n";
  out << "alpha_u=" << format_double(h.alpha_u) << '\n';
  out << "alpha_bu=" << format_double(h.alpha_bu) << '\n';
  out << "alpha_v=" << format_double(h.alpha_v) << '\n';
  out << "alpha_bv=" << format_double(h.alpha_bv) << '\n';
  out << "alpha_kt=" << format_double(h.alpha_kt) << '\n';
  out << "alpha_pt=" << format_double(h.alpha_pt) << '\n';
  out << "alpha_kl=" << format_double(h.alpha_kl) << '\n';
  out << "alpha_pl=" << format_double(h.alpha_pl) << '\n';
  out << "beta=" << format_double(h.beta) << '\n';
  out << "gamma=" << format_double(h.gamma) << '\n';
  out << "steps_completed=" << steps_completed << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  LineReader reader{in};
  reader.expect("VIMF v1");

  std::istringstream dims(reader.next("dimensions"));
  int m = 0, n = 0, d = 0;
  if (!(dims >> m >> n >> d) || m < 1 || n < 1 || d < 1)
    throw ParseError("bad dimension line", reader.line_no);

  Checkpoint ck;
  ck.params.layout = LatentLayout{m, n, d};
  ck.params.mu.assign(ck.params.layout.size(), 0.0);
  ck.params.rho.assign(ck.params.layout.size(), 0.0);
  ck.hyper.d = d;
  auto& layout = ck.params.layout;

  auto read_pair = [&](std::size_t offset, int count) {
    auto mu_row = parse_row(reader.next("mu row"), count, reader.line_no);
    auto rho_row = parse_row(reader.next("rho row"), count, reader.line_no);
    std::copy(mu_row.begin(), mu_row.end(), ck.params.mu.begin() + offset);
    std::copy(rho_row.begin(), rho_row.end(), ck.params.rho.begin() + offset);
  };

  reader.expect("qU");
  for (int p = 0; p < m; ++p) read_pair(layout.u(p, 0), d);
  reader.expect("qV");
  for (int q = 0; q < n; ++q) read_pair(layout.v(q, 0), d);
  reader.expect("qbu");
  read_pair(layout.bu(0), m);
  reader.expect("qbv");
  read_pair(layout.bv(0), n);
  reader.expect("qscalars");
  read_pair(layout.scalars_begin(), 4);

  reader.expect("hyperparams");
  std::string line;
  while (std::getline(in, line)) {
    ++reader.line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected key=value in hyperparams block", reader.line_no);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "alpha_u") ck.hyper.alpha_u = parse_double(value);
    else if (key == "alpha_bu") ck.hyper.alpha_bu = parse_double(value);
    else if (key == "alpha_v") ck.hyper.alpha_v = parse_double(value);
    else if (key == "alpha_bv") ck.hyper.alpha_bv = parse_double(value);
    else if (key == "alpha_kt") ck.hyper.alpha_kt = parse_double(value);
    else if (key == "alpha_pt") ck.hyper.alpha_pt = parse_double(value);
    else if (key == "alpha_kl") ck.hyper.alpha_kl = parse_double(value);
    else if (key == "alpha_pl") ck.hyper.alpha_pl = parse_double(value);
    else if (key == "beta") ck.hyper.beta = parse_double(value);
    else if (key == "gamma") ck.hyper.gamma = parse_double(value);
    else if (key == "steps_completed") ck.steps_completed = parse_int(value);
    else throw ParseError("unknown hyperparams key '" + key + "'", reader.line_no);
  }
  ck.hyper.validate();
  return ck;
}

LatentState posterior_mean_state(const VariationalParams& params) {
  LatentState state;
  state.layout = params.layout;
  state.theta = params.mu;
  return state;
}

void save_trace_csv(const std::string& path, const TrainingTrace& trace) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file: " + path);
  out << "step,elbo,grad_norm\n";
  for (const auto& rec : trace.steps) {
    out << rec.step << ',' << format_double(rec.elbo) << ','
        << format_double(rec.grad_norm) << '\n';
  }
}

}  // namespace vimf

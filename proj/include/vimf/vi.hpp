#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "vimf/corpus.hpp"
#include "vimf/model.hpp"
#include "vimf/rng.hpp"

namespace vimf {

/// Mean-field Gaussian family: an independent N(mu, sigma^2) per scalar
/// latent with sigma = softplus(rho), so sigma stays positive under
/// unconstrained gradient steps. Shapes mirror LatentState exactly.
struct VariationalParams {
  LatentLayout layout;
  std::vector<double> mu;
  std::vector<double> rho;

  double sigma(std::size_t i) const { return softplus(rho[i]); }
};

/// One partial derivative per (mu, rho).
struct Gradient {
  std::vector<double> mu;
  std::vector<double> rho;

  double norm() const;
};

enum class Optimizer { Adagrad, Sgd };

/// ClosedFormKl: score-function estimate of the likelihood term with the KL
/// gradient added analytically (default, lower variance). FullMc: the fully
/// Monte Carlo estimator with bracket log p(T,L,theta) - log q(theta).
enum class GradientEstimator { ClosedFormKl, FullMc };

/// Latent blocks excluded here are pinned at their variational means: not
/// sampled, not updated, and excluded from KL and log q.
struct TrainMask {
  bool u = true, v = true, bu = true, bv = true;
  bool kappa_t = true, psi_t = true, kappa_l = true, psi_l = true;

  bool enabled(LatentBlock b) const;
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 1024;
  int mc_samples = 8;  // S, the Monte Carlo sample count per step
  double learning_rate = 0.05;
  double neg_ratio = 1.0;  // sampled zero-cells per positive cell
  std::uint64_t seed = 1;
  bool use_control_variate = true;
  Optimizer optimizer = Optimizer::Adagrad;
  GradientEstimator estimator = GradientEstimator::ClosedFormKl;
  int threads = 1;
  TrainMask mask;

  void validate() const;
};

struct StepRecord {
  long step;
  double elbo;
  double grad_norm;
};

struct TrainingTrace {
  std::vector<StepRecord> steps;
  double wall_seconds = 0.0;
};

/// Minibatch of aligned T and L observations plus the population scale
/// factors that make the scaled sums unbiased for the full-population sums.
struct Batch {
  std::vector<Observation> t_obs;
  std::vector<Observation> l_obs;
  double scale_t = 1.0;
  double scale_l = 1.0;
};

struct TrainHooks {
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const VariationalParams&, long steps_completed)> on_checkpoint;
};

struct TrainResult {
  VariationalParams params;
  TrainingTrace trace;
  long steps_completed = 0;
};

/// Thrown on a non-finite ELBO estimate; the trace prefix is preserved.
struct DivergenceError : NumericError {
  DivergenceError(const std::string& what, TrainingTrace trace_prefix)
      : NumericError(what), trace(std::move(trace_prefix)) {}
  TrainingTrace trace;
};

/// mu = prior mean + uniform noise in [-0.01, 0.01]; sigma = 0.1 exactly.
VariationalParams init_variational(const Hyperparams& h, int m, int n,
                                   std::uint64_t seed);

/// Draws theta ~ q and returns its log density under q.
std::pair<LatentState, double> sample_q(const VariationalParams& params, Rng& rng);

/// Closed-form KL(q || prior), summed over all scalars.
double kl_q_prior(const VariationalParams& params, const Hyperparams& h);

/// (1/S) sum_s [scale_t * loglik_T(theta_s) + scale_l * loglik_L(theta_s)]
/// minus the closed-form KL.
double elbo_estimate(const VariationalParams& params, const Hyperparams& h,
                     const std::vector<Observation>& t_batch,
                     const std::vector<Observation>& l_batch, double scale_t,
                     double scale_l, int S, Rng& rng);

/// Score-function estimator: MC average over S draws of
/// grad log q(theta_s) * (scaled log-joint(theta_s) - log q(theta_s)).
/// The optional control variate subtracts a per-scalar leave-one-out mean of
/// the bracketed factor (requires S >= 2).
Gradient score_function_gradient(const VariationalParams& params,
                                 const Hyperparams& h,
                                 const std::vector<Observation>& t_batch,
                                 const std::vector<Observation>& l_batch,
                                 double scale_t, double scale_l, int S,
                                 Rng& rng, bool use_control_variate = false);

/// Uniformly samples stored cells plus ceil(neg_ratio * batch_size) absent
/// cells emitted as (t=0, l=0) observations for both likelihoods.
Batch sample_batch(const DualMatrix& matrix, int batch_size, double neg_ratio,
                   Rng& rng);

/// Stochastic gradient ascent on the ELBO: epochs * ceil(P / batch_size)
/// steps. `resume_from` continues from an existing state and `start_step`
/// keeps the step numbering going.
TrainResult train(const DualMatrix& matrix, const Hyperparams& h,
                  const TrainConfig& cfg, const TrainHooks& hooks = {},
                  const VariationalParams* resume_from = nullptr,
                  long start_step = 0);

// Checkpoint file ("VIMF v1"): text blocks of full-precision floats,
// mu-row/rho-row alternating, then a key=value hyperparams block.
struct Checkpoint {
  VariationalParams params;
  Hyperparams hyper;
  long steps_completed = 0;
};

void save_checkpoint(const std::string& path, const VariationalParams& params,
                     const Hyperparams& h, long steps_completed);
Checkpoint load_checkpoint(const std::string& path);

/// Posterior-mean latent state (theta = mu), used for prediction.
LatentState posterior_mean_state(const VariationalParams& params);

void save_trace_csv(const std::string& path, const TrainingTrace& trace);

}  // namespace vimf

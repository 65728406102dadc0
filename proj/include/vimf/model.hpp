#pragma once

#include <cstddef>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "vimf/common.hpp"
#include "vimf/rng.hpp"

namespace vimf {

struct Hyperparams {
  int d = 32;  // embedding dimension
  // prior precisions
  double alpha_u = 1.0;
  double alpha_bu = 1.0;
  double alpha_v = 1.0;
  double alpha_bv = 1.0;
  double alpha_kt = 1.0;
  double alpha_pt = 1.0;
  double alpha_kl = 1.0;
  double alpha_pl = 1.0;
  double beta = 1.0;   // likelihood precision scale
  double gamma = 0.5;  // likelihood balance, in (0,1)

  double precision_t() const { return gamma * beta; }
  double precision_l() const { return (1.0 - gamma) * beta; }

  void validate() const;
};

enum class LatentBlock { U, V, Bu, Bv, KappaT, PsiT, KappaL, PsiL };

const char* block_name(LatentBlock b);

/// Flat layout over every scalar latent, shared by the latent state, the
/// variational parameters and gradients:
///   [ U (m*d) | V (n*d) | bu (m) | bv (n) | kappa_t psi_t kappa_l psi_l ]
struct LatentLayout {
  int m = 0;
  int n = 0;
  int d = 0;

  std::size_t u_begin() const { return 0; }
  std::size_t v_begin() const { return static_cast<std::size_t>(m) * d; }
  std::size_t bu_begin() const { return v_begin() + static_cast<std::size_t>(n) * d; }
  std::size_t bv_begin() const { return bu_begin() + m; }
  std::size_t scalars_begin() const { return bv_begin() + n; }
  std::size_t size() const { return scalars_begin() + 4; }

  std::size_t u(int p, int j) const { return u_begin() + static_cast<std::size_t>(p) * d + j; }
  std::size_t v(int q, int j) const { return v_begin() + static_cast<std::size_t>(q) * d + j; }
  std::size_t bu(int p) const { return bu_begin() + p; }
  std::size_t bv(int q) const { return bv_begin() + q; }
  std::size_t kappa_t() const { return scalars_begin(); }
  std::size_t psi_t() const { return scalars_begin() + 1; }
  std::size_t kappa_l() const { return scalars_begin() + 2; }
  std::size_t psi_l() const { return scalars_begin() + 3; }

  LatentBlock block_of(std::size_t i) const;
  /// User index for U/Bu coordinates, attribute index for V/Bv, -1 otherwise.
  int entity_of(std::size_t i) const;
  /// Prior mean: 1 for the scale parameters (kappas), 0 for everything else.
  double prior_mean(std::size_t i) const;
  double prior_precision(std::size_t i, const Hyperparams& h) const;
};

struct LatentState {
  LatentLayout layout;
  std::vector<double> theta;

  double& at(std::size_t i) { return theta[i]; }
  double at(std::size_t i) const { return theta[i]; }
  double kappa_t() const { return theta[layout.kappa_t()]; }
  double psi_t() const { return theta[layout.psi_t()]; }
  double kappa_l() const { return theta[layout.kappa_l()]; }
  double psi_l() const { return theta[layout.psi_l()]; }

  /// u_p . v_q + bu_p + bv_q
  double affinity(int p, int q) const;
};

LatentState make_latent_state(int m, int n, int d);

struct PairScore {
  double t_score;
  double l_score;
  double total;  // t_score + l_score
};

struct Observation {
  int p;
  int q;
  double value;
};

LatentState init_latents_from_prior(const Hyperparams& h, int m, int n,
                                    std::uint64_t seed);

double predictive_mean_t(const LatentState& state, int p, int q);
double predictive_mean_l(const LatentState& state, int p, int q);

double log_likelihood(const LatentState& state, const Hyperparams& h,
                      const std::vector<Observation>& t_obs,
                      const std::vector<Observation>& l_obs);
double log_prior(const LatentState& state, const Hyperparams& h);

PairScore score_pair(const LatentState& state, int p, int q);

/// Top-k attributes for user p by total score, descending; ties break by
/// ascending attribute index; excluded attributes are skipped.
std::vector<int> rank_attributes(
    const LatentState& state, int p, int k,
    const std::unordered_set<int>* exclusions = nullptr);

/// Same ordering rule applied to precomputed scores (shared by the baselines).
std::vector<int> rank_by_score(const std::vector<double>& scores, int k,
                               const std::unordered_set<int>* exclusions = nullptr);

}  // namespace vimf

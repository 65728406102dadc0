#include "vimf/model.hpp"

#include <algorithm>
#include <cmath>

namespace vimf {

void Hyperparams::validate() const {
  if (d < 1) throw ValidationError("d must be >= 1");
  for (double a : {alpha_u, alpha_bu, alpha_v, alpha_bv, alpha_kt, alpha_pt,
                   alpha_kl, alpha_pl}) {
    if (!(a > 0)) throw ValidationError("prior precisions must be > 0");
  }
  if (!(beta > 0)) throw ValidationError("beta must be > 0");
  if (!(gamma > 0 && gamma < 1))
    throw ValidationError("gamma must lie strictly in (0,1)");
}

const char* block_name(LatentBlock b) {
  switch (b) {
    case LatentBlock::U: return "U";
    case LatentBlock::V: return "V";
    case LatentBlock::Bu: return "bu";
    case LatentBlock::Bv: return "bv";
    case LatentBlock::KappaT: return "kappa_t";
    case LatentBlock::PsiT: return "psi_t";
    case LatentBlock::KappaL: return "kappa_l";
    case LatentBlock::PsiL: return "psi_l";
  }
  return "?";
}

LatentBlock LatentLayout::block_of(std::size_t i) const {
  if (i < v_begin()) return LatentBlock::U;
  if (i < bu_begin()) return LatentBlock::V;
  if (i < bv_begin()) return LatentBlock::Bu;
  if (i < scalars_begin()) return LatentBlock::Bv;
  switch (i - scalars_begin()) {
    case 0: return LatentBlock::KappaT;
    case 1: return LatentBlock::PsiT;
    case 2: return LatentBlock::KappaL;
    default: return LatentBlock::PsiL;
  }
}

int LatentLayout::entity_of(std::size_t i) const {
  if (i < v_begin()) return static_cast<int>(i / d);
  if (i < bu_begin()) return static_cast<int>((i - v_begin()) / d);
  if (i < bv_begin()) return static_cast<int>(i - bu_begin());
  if (i < scalars_begin()) return static_cast<int>(i - bv_begin());
  return -1;
}

double LatentLayout::prior_mean(std::size_t i) const {
  return (i == kappa_t() || i == kappa_l()) ? 1.0 : 0.0;
}

double LatentLayout::prior_precision(std::size_t i, const Hyperparams& h) const {
  switch (block_of(i)) {
    case LatentBlock::U: return h.alpha_u;
    case LatentBlock::V: return h.alpha_v;
    case LatentBlock::Bu: return h.alpha_bu;
    case LatentBlock::Bv: return h.alpha_bv;
    case LatentBlock::KappaT: return h.alpha_kt;
    case LatentBlock::PsiT: return h.alpha_pt;
    case LatentBlock::KappaL: return h.alpha_kl;
    case LatentBlock::PsiL: return h.alpha_pl;
  }
  return 1.0;
}

LatentState make_latent_state(int m, int n, int d) {
  if (m < 1 || n < 1 || d < 1)
    throw ValidationError("latent state requires m, n, d >= 1");
  LatentState s;
  s.layout = LatentLayout{m, n, d};
  s.theta.assign(s.layout.size(), 0.0);
  return s;
}

double LatentState::affinity(int p, int q) const {
  const int d = layout.d;
  const double* u = theta.data() + layout.u(p, 0);
  const double* v = theta.data() + layout.v(q, 0);
  double dot = 0.0;
  for (int j = 0; j < d; ++j) dot += u[j] * v[j];
  return dot + theta[layout.bu(p)] + theta[layout.bv(q)];
}

LatentState init_latents_from_prior(const Hyperparams& h, int m, int n,
                                    std::uint64_t seed) {
  h.validate();
  LatentState s = make_latent_state(m, n, h.d);
  Rng rng(seed);
  for (std::size_t i = 0; i < s.theta.size(); ++i) {
    double sd = 1.0 / std::sqrt(s.layout.prior_precision(i, h));
    s.theta[i] = rng.normal(s.layout.prior_mean(i), sd);
  }
  return s;
}

namespace {

void check_indices(const LatentState& state, int p, int q) {
  if (p < 0 || p >= state.layout.m)
    throw ValidationError("user index out of range: " + std::to_string(p));
  if (q < 0 || q >= state.layout.n)
    throw ValidationError("attribute index out of range: " + std::to_string(q));
}

}  // namespace

double predictive_mean_t(const LatentState& state, int p, int q) {
  check_indices(state, p, q);
  return state.kappa_t() * state.affinity(p, q) + state.psi_t();
}

double predictive_mean_l(const LatentState& state, int p, int q) {
  check_indices(state, p, q);
  return state.kappa_l() * state.affinity(p, q) + state.psi_l();
}

double log_likelihood(const LatentState& state, const Hyperparams& h,
                      const std::vector<Observation>& t_obs,
                      const std::vector<Observation>& l_obs) {
  const double prec_t = h.precision_t();
  const double prec_l = h.precision_l();
  double ll = 0.0;
  for (const auto& o : t_obs) {
    ll += gaussian_log_density_prec(o.value, predictive_mean_t(state, o.p, o.q),
                                    prec_t);
  }
  for (const auto& o : l_obs) {
    ll += gaussian_log_density_prec(o.value, predictive_mean_l(state, o.p, o.q),
                                    prec_l);
  }
  return ll;
}

double log_prior(const LatentState& state, const Hyperparams& h) {
  double lp = 0.0;
  for (std::size_t i = 0; i < state.theta.size(); ++i) {
    lp += gaussian_log_density_prec(state.theta[i], state.layout.prior_mean(i),
                                    state.layout.prior_precision(i, h));
  }
  return lp;
}

PairScore score_pair(const LatentState& state, int p, int q) {
  PairScore s;
  s.t_score = predictive_mean_t(state, p, q);
  s.l_score = predictive_mean_l(state, p, q);
  s.total = s.t_score + s.l_score;
  return s;
}

std::vector<int> rank_by_score(const std::vector<double>& scores, int k,
                               const std::unordered_set<int>* exclusions) {
  const int n = static_cast<int>(scores.size());
  std::vector<int> candidates;
  candidates.reserve(n);
  for (int q = 0; q < n; ++q) {
    if (exclusions && exclusions->count(q)) continue;
    candidates.push_back(q);
  }
  if (k < 1 || k > static_cast<int>(candidates.size()))
    throw ValidationError("k out of range: " + std::to_string(k) +
                          " of " + std::to_string(candidates.size()) +
                          " candidates");
  auto better = [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;  // tie-break by ascending index
  };
  std::partial_sort(candidates.begin(), candidates.begin() + k,
                    candidates.end(), better);
  candidates.resize(k);
  return candidates;
}

std::vector<int> rank_attributes(const LatentState& state, int p, int k,
                                 const std::unordered_set<int>* exclusions) {
  check_indices(state, p, 0);
  const int n = state.layout.n;
  std::vector<double> totals(n);
  for (int q = 0; q < n; ++q) totals[q] = score_pair(state, p, q).total;
  return rank_by_score(totals, k, exclusions);
}

}  // namespace vimf

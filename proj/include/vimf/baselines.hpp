#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vimf/corpus.hpp"
#include "vimf/rng.hpp"

namespace vimf {

/// Popularity recommender: normalized global attribute share blended with
/// the user's own train-window interaction counts.
struct PopModel {
  int m = 0;
  int n = 0;
  std::vector<std::int64_t> global_count;  // per attribute
  // per user: (attribute, count), sorted by attribute
  std::vector<std::vector<std::pair<int, std::int64_t>>> user_count;
  double blend_weight = 1.0;  // w
};

PopModel pop_fit(const EventLog& train, const IdIndex& users,
                 const IdIndex& attrs, double blend_weight = 1.0);

/// score(q) = global_count[q] / sum(global_count) + w * user_count[p][q]
std::vector<double> pop_scores(const PopModel& model, int p);
std::vector<int> pop_rank(const PopModel& model, int p, int k);

struct AlsConfig {
  int d = 32;
  double lambda = 0.1;      // L2 regularization
  double confidence = 40.0; // c in the 1 + c*t confidence weights
  int iters = 15;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Implicit-feedback ALS on the binary transaction view:
///   minimize sum_pq (1 + c*t_pq)(t_pq - x_p . y_q)^2 + lambda(|X|^2 + |Y|^2)
struct AlsModel {
  int m = 0;
  int n = 0;
  int d = 0;
  std::vector<double> x;  // m*d user factors, row-major
  std::vector<double> y;  // n*d attribute factors, row-major
  AlsConfig config;
  std::vector<double> objective_trace;  // one value per half-iteration
};

AlsModel als_fit(const DualMatrix& matrix, const AlsConfig& cfg);
double als_objective(const AlsModel& model, const DualMatrix& matrix);
std::vector<double> als_scores(const AlsModel& model, int p);
std::vector<int> als_rank(const AlsModel& model, int p, int k);

struct EEConfig {
  double epsilon = 0.1;  // per-slot explore probability, in [0,1]
  std::uint64_t seed = 1;
};

/// Epsilon-greedy diversification: each of the k slots explores with
/// probability epsilon, picking a uniformly random not-yet-chosen attribute
/// from outside the base top-k; otherwise it takes the next unused attribute
/// of the base ranking. base_ranking must be a full permutation.
std::vector<int> ee_wrap(const std::vector<int>& base_ranking,
                         const EEConfig& cfg, int k);

// Model dumps, same text-block format as the VI checkpoints.
void save_pop(const std::string& path, const PopModel& model);
PopModel load_pop(const std::string& path);
void save_als(const std::string& path, const AlsModel& model);
AlsModel load_als(const std::string& path);

}  // namespace vimf

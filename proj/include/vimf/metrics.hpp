#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "vimf/common.hpp"

namespace vimf {

/// Per user: the attributes engaged in the test window (nonempty).
using TruthSet = std::unordered_set<int>;
using GroundTruth = std::vector<TruthSet>;

/// Per user: distinct attribute indices in rank order, length >= k.
using RankedLists = std::vector<std::vector<int>>;

// Per-user scores. The *_at_k operations below average these over users with
// equal weight.
double ndcg_one(const std::vector<int>& ranked, const TruthSet& truth, int k);
double map_one(const std::vector<int>& ranked, const TruthSet& truth, int k);
double hit_rate_one(const std::vector<int>& ranked, const TruthSet& truth, int k);
/// Users with no hit in the top k contribute 0 (they are not skipped).
double mrr_one(const std::vector<int>& ranked, const TruthSet& truth, int k);
/// ROC prefix walked over the top k, completed by a straight line to (1,1).
double lauc_one(const std::vector<int>& ranked, const TruthSet& truth, int k,
                int n_total);

double ndcg_at_k(const RankedLists& ranked, const GroundTruth& truth, int k);
double map_at_k(const RankedLists& ranked, const GroundTruth& truth, int k);
double hit_rate_at_k(const RankedLists& ranked, const GroundTruth& truth, int k);
double mrr_at_k(const RankedLists& ranked, const GroundTruth& truth, int k);
double lauc_at_k(const RankedLists& ranked, const GroundTruth& truth, int k,
                 int n_total);

struct MetricsRow {
  std::string model;
  std::string metric;  // ndcg | map | hr | mrr | lauc
  int k;
  double value;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;

  /// Throws if the (model, metric, k) row is absent.
  double value(const std::string& model, const std::string& metric, int k) const;
};

struct NamedRanking {
  std::string name;
  RankedLists rankings;  // length >= max(ks) per user
};

extern const std::vector<std::string> kMetricNames;

/// One row per (model, metric, k); per-user scores averaged with equal
/// weight. Rankings with duplicate or out-of-range entries are rejected.
MetricsReport evaluate_all(const std::vector<NamedRanking>& models,
                           const GroundTruth& truth, const std::vector<int>& ks,
                           int n_total, int threads = 1);

/// CSV `model,metric,k,value`; decimals < 0 writes full precision.
void save_report_csv(const MetricsReport& report, const std::string& path,
                     int decimals);
MetricsReport load_report_csv(const std::string& path);

}  // namespace vimf

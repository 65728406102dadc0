#include "vimf/metrics.hpp"

#include <cmath>
#include <fstream>

#include "vimf/parallel.hpp"

namespace vimf {
namespace {

void check_inputs(const std::vector<int>& ranked, const TruthSet& truth, int k) {
  if (k < 1) throw ValidationError("k must be >= 1");
  if (static_cast<int>(ranked.size()) < k)
    throw ValidationError("ranked list shorter than k");
  if (truth.empty()) throw ValidationError("empty ground truth for user");
}

}  // namespace

double ndcg_one(const std::vector<int>& ranked, const TruthSet& truth, int k) {
  check_inputs(ranked, truth, k);
  double dcg = 0.0;
  for (int i = 0; i < k; ++i) {
    if (truth.count(ranked[i])) dcg += 1.0 / std::log2(i + 2.0);
  }
  const int ideal = std::min<int>(static_cast<int>(truth.size()), k);
  double idcg = 0.0;
  for (int i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(i + 2.0);
  return dcg / idcg;
}

double map_one(const std::vector<int>& ranked, const TruthSet& truth, int k) {
  check_inputs(ranked, truth, k);
  double ap = 0.0;
  int hits = 0;
  for (int i = 0; i < k; ++i) {
    if (truth.count(ranked[i])) {
      ++hits;
      ap += static_cast<double>(hits) / (i + 1);
    }
  }
  const int n_rel = std::min<int>(static_cast<int>(truth.size()), k);
  return ap / n_rel;
}

double hit_rate_one(const std::vector<int>& ranked, const TruthSet& truth,
                    int k) {
  check_inputs(ranked, truth, k);
  int hits = 0;
  for (int i = 0; i < k; ++i) {
    if (truth.count(ranked[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double mrr_one(const std::vector<int>& ranked, const TruthSet& truth, int k) {
  check_inputs(ranked, truth, k);
  for (int i = 0; i < k; ++i) {
    if (truth.count(ranked[i])) return 1.0 / (i + 1);
  }
  return 0.0;
}

double lauc_one(const std::vector<int>& ranked, const TruthSet& truth, int k,
                int n_total) {
  check_inputs(ranked, truth, k);
  const int n_pos = static_cast<int>(truth.size());
  const int n_neg = n_total - n_pos;
  if (n_neg < 0) throw ValidationError("truth larger than attribute count");

  double tpr = 0.0, fpr = 0.0, area = 0.0;
  for (int i = 0; i < k; ++i) {
    if (truth.count(ranked[i])) {
      tpr += 1.0 / n_pos;  // vertical step, no area
    } else {
      double step = 1.0 / n_neg;
      area += step * tpr;  // horizontal step at the current height
      fpr += step;
    }
  }
  // straight line from the curve's end point to (1,1)
  area += (1.0 - fpr) * (tpr + 1.0) / 2.0;
  return area;
}

namespace {

using PerUser = double (*)(const std::vector<int>&, const TruthSet&, int, int);

double mean_over_users(const RankedLists& ranked, const GroundTruth& truth,
                       int k, int n_total, int threads, PerUser score) {
  if (ranked.size() != truth.size())
    throw ValidationError("ranked lists / ground truth size mismatch");
  if (ranked.empty()) throw ValidationError("no users to evaluate");
  double sum = parallel_sum(ranked.size(), 64, threads, [&](std::size_t p) {
    return score(ranked[p], truth[p], k, n_total);
  });
  return sum / static_cast<double>(ranked.size());
}

double ndcg_adapter(const std::vector<int>& r, const TruthSet& t, int k, int) {
  return ndcg_one(r, t, k);
}
double map_adapter(const std::vector<int>& r, const TruthSet& t, int k, int) {
  return map_one(r, t, k);
}
double hr_adapter(const std::vector<int>& r, const TruthSet& t, int k, int) {
  return hit_rate_one(r, t, k);
}
double mrr_adapter(const std::vector<int>& r, const TruthSet& t, int k, int) {
  return mrr_one(r, t, k);
}

}  // namespace

double ndcg_at_k(const RankedLists& ranked, const GroundTruth& truth, int k) {
  return mean_over_users(ranked, truth, k, 0, 1, ndcg_adapter);
}
double map_at_k(const RankedLists& ranked, const GroundTruth& truth, int k) {
  return mean_over_users(ranked, truth, k, 0, 1, map_adapter);
}
double hit_rate_at_k(const RankedLists& ranked, const GroundTruth& truth, int k) {
  return mean_over_users(ranked, truth, k, 0, 1, hr_adapter);
}
double mrr_at_k(const RankedLists& ranked, const GroundTruth& truth, int k) {
  return mean_over_users(ranked, truth, k, 0, 1, mrr_adapter);
}
double lauc_at_k(const RankedLists& ranked, const GroundTruth& truth, int k,
                 int n_total) {
  return mean_over_users(ranked, truth, k, n_total, 1, lauc_one);
}

double MetricsReport::value(const std::string& model, const std::string& metric,
                            int k) const {
  for (const auto& row : rows) {
    if (row.model == model && row.metric == metric && row.k == k)
      return row.value;
  }
  throw ValidationError("missing report row: " + model + "/" + metric + "@" +
                        std::to_string(k));
}

const std::vector<std::string> kMetricNames = {"ndcg", "map", "hr", "mrr",
                                               "lauc"};

MetricsReport evaluate_all(const std::vector<NamedRanking>& models,
                           const GroundTruth& truth, const std::vector<int>& ks,
                           int n_total, int threads) {
  if (ks.empty()) throw ValidationError("ks must be nonempty");

  for (const auto& model : models) {
    if (model.rankings.size() != truth.size())
      throw ValidationError("model '" + model.name +
                            "': rankings/truth size mismatch");
    for (const auto& list : model.rankings) {
      std::unordered_set<int> seen;
      for (int q : list) {
        if (q < 0 || q >= n_total)
          throw ValidationError("model '" + model.name +
                                "': ranked index out of range");
        if (!seen.insert(q).second)
          throw ValidationError("model '" + model.name +
                                "': duplicate entry in ranking");
      }
    }
  }

  MetricsReport report;
  for (const auto& model : models) {
    for (const auto& metric : kMetricNames) {
      for (int k : ks) {
        double v;
        if (metric == "ndcg") {
          v = mean_over_users(model.rankings, truth, k, 0, threads, ndcg_adapter);
        } else if (metric == "map") {
          v = mean_over_users(model.rankings, truth, k, 0, threads, map_adapter);
        } else if (metric == "hr") {
          v = mean_over_users(model.rankings, truth, k, 0, threads, hr_adapter);
        } else if (metric == "mrr") {
          v = mean_over_users(model.rankings, truth, k, 0, threads, mrr_adapter);
        } else {
          v = mean_over_users(model.rankings, truth, k, n_total, threads,
                              lauc_one);
        }
        report.rows.push_back({model.name, metric, k, v});
      }
    }
  }
  return report;
}

void save_report_csv(const MetricsReport& report, const std::string& path,
                     int decimals) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file: " + path);
  out << "model,metric,k,value\n";
  for (const auto& row : report.rows) {
    out << row.model << ',' << row.metric << ',' << row.k << ','
        << (decimals < 0 ? format_double(row.value)
                         : format_double_fixed(row.value, decimals))
        << '\n';
  }
}

MetricsReport load_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open input file: " + path);
  MetricsReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line == "model,metric,k,value") continue;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    auto c3 = line.find(',', c2 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos ||
        c3 == std::string::npos)
      throw ParseError("expected 4 fields", line_no);
    MetricsRow row;
    row.model = line.substr(0, c1);
    row.metric = line.substr(c1 + 1, c2 - c1 - 1);
    row.k = static_cast<int>(parse_int(line.substr(c2 + 1, c3 - c2 - 1)));
    row.value = parse_double(line.substr(c3 + 1));
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace vimf

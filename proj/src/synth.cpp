#include "vimf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vimf/rng.hpp"

namespace vimf {
namespace {

// 180-day window; the last sixth is the conventional test month.
constexpr std::int64_t kWindowStart = 1000000000;
constexpr std::int64_t kWindowSpan = 180LL * 24 * 3600;

// generator shape constants, calibrated so the planted structure separates
// structure-aware recommenders from raw popularity at desk scale
constexpr double kBiasSd = 0.25;     // user/attribute bias prior sd
constexpr double kEventRate = 0.20;  // extra events per unit of softplus weight

}  // namespace

void SyntheticSpec::validate() const {
  if (m < 1 || n < 1 || d_true < 1)
    throw ValidationError("synthetic spec requires m, n, d_true >= 1");
  if (!(density > 0.0 && density <= 1.0))
    throw ValidationError("density must lie in (0,1]");
  if (!(loyalty_concentration >= 0.0))
    throw ValidationError("loyalty_concentration must be >= 0");
}

TrainWindow synth_window() {
  return TrainWindow{kWindowStart, kWindowStart + kWindowSpan};
}

std::int64_t synth_default_split() {
  return kWindowStart + kWindowSpan * 5 / 6;
}

EventLog synth_events(const SyntheticSpec& spec,
                      std::vector<double>* attr_norms) {
  spec.validate();
  Rng rng(spec.seed);

  const int m = spec.m, n = spec.n, d = spec.d_true;
  std::vector<double> u(static_cast<std::size_t>(m) * d);
  std::vector<double> v(static_cast<std::size_t>(n) * d);
  std::vector<double> bu(m), bv(n);
  for (auto& x : u) x = rng.normal();
  for (auto& x : v) x = rng.normal();
  for (auto& x : bu) x = rng.normal(0.0, kBiasSd);
  for (auto& x : bv) x = rng.normal(0.0, kBiasSd);

  auto affinity = [&](int p, int q) {
    const double* up = u.data() + static_cast<std::size_t>(p) * d;
    const double* vq = v.data() + static_cast<std::size_t>(q) * d;
    double dot = 0.0;
    for (int j = 0; j < d; ++j) dot += up[j] * vq[j];
    return dot + bu[p] + bv[q];
  };

  if (attr_norms) {
    attr_norms->assign(n, 0.0);
    for (int q = 0; q < n; ++q) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) {
        double x = v[static_cast<std::size_t>(q) * d + j];
        s += x * x;
      }
      (*attr_norms)[q] = std::sqrt(s);
    }
  }

  const int n_active = std::max(1, static_cast<int>(std::lround(spec.density * n)));
  const std::int64_t span = kWindowSpan;

  EventLog events;
  std::vector<double> weight(n);
  std::vector<char> taken(n);
  for (int p = 0; p < m; ++p) {
    double total = 0.0;
    for (int q = 0; q < n; ++q) {
      weight[q] = softplus(spec.loyalty_concentration * affinity(p, q));
      total += weight[q];
      taken[q] = 0;
    }

    // weighted sampling without replacement of this user's active attributes
    for (int pick = 0; pick < n_active; ++pick) {
      double target = rng.uniform01() * total;
      int q = -1;
      double acc = 0.0;
      for (int cand = 0; cand < n; ++cand) {
        if (taken[cand]) continue;
        acc += weight[cand];
        q = cand;
        if (acc >= target) break;
      }
      taken[q] = 1;
      total -= weight[q];

      const int count = 1 + rng.poisson(kEventRate * weight[q]);
      for (int e = 0; e < count; ++e) {
        InteractionEvent ev;
        ev.user_id = "u" + std::to_string(p);
        ev.attribute_value = "a" + std::to_string(q);
        ev.timestamp = kWindowStart +
                       static_cast<std::int64_t>(rng.uniform_index(span));
        events.push_back(std::move(ev));
      }
    }
  }

  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    if (a.user_id != b.user_id) return a.user_id < b.user_id;
    return a.attribute_value < b.attribute_value;
  });
  return events;
}

}  // namespace vimf

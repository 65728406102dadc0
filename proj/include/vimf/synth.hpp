#pragma once

#include <cstdint>
#include <vector>

#include "vimf/corpus.hpp"

namespace vimf {

/// Planted low-rank preference model for desk-scale benchmark corpora.
struct SyntheticSpec {
  int m = 200;
  int n = 50;
  int d_true = 5;
  std::uint64_t seed = 1;
  double density = 0.15;  // active fraction of each user's attributes, (0,1]
  double loyalty_concentration = 1.5;  // peakedness of per-user preferences

  void validate() const;
};

/// Generation window shared by every synthetic corpus; the conventional
/// train/test boundary sits at five sixths of it.
TrainWindow synth_window();
std::int64_t synth_default_split();

/// Draws user/attribute factors from the model priors, activates attributes
/// per user by softplus-weighted sampling, emits event counts proportional
/// to the softplus of affinity, timestamps uniform in the window. The log is
/// returned in chronological order. `attr_norms`, when given, receives the
/// planted attribute factor norms (generator diagnostics).
EventLog synth_events(const SyntheticSpec& spec,
                      std::vector<double>* attr_norms = nullptr);

}  // namespace vimf

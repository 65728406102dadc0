#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vimf/baselines.hpp"
#include "vimf/model.hpp"
#include "vimf/synth.hpp"
#include "vimf/vi.hpp"

namespace vimf {

/// Every tunable knob, loadable from a `key = value` file (# comments).
/// Unknown keys are rejected; values are validated against the owning
/// type's invariants.
struct RunConfig {
  // corpus filtering / preparation
  std::int64_t min_tx = 2;
  std::int64_t max_tx = 1000000;
  std::optional<std::int64_t> t_split;
  std::optional<std::int64_t> window_start;  // default: min train timestamp
  std::optional<std::int64_t> window_end;    // default: t_split

  // model hyperparameters (benchmark-calibrated; see README for the rationale)
  int d = 8;
  double alpha_u = 0.3, alpha_bu = 1.0, alpha_v = 0.3, alpha_bv = 1.0;
  double alpha_kt = 1.0, alpha_pt = 1.0, alpha_kl = 1.0, alpha_pl = 1.0;
  double beta = 4.0;
  double gamma = 0.5;

  // variational training
  int epochs = 300;
  int batch_size = 1024;
  int mc_samples = 16;
  double learning_rate = 0.1;
  double neg_ratio = 3.0;
  bool use_control_variate = true;
  std::string optimizer = "adagrad";        // adagrad | sgd
  std::string estimator = "closed_form_kl"; // closed_form_kl | full_mc

  // baselines
  double pop_w = 1.0;
  double als_lambda = 0.1;
  double als_confidence = 40.0;
  int als_iters = 15;
  // grids for the benchmark's (d, lambda, c) search; empty disables it
  std::string als_grid_d = "8,16";
  std::string als_grid_lambda = "0.03,0.1,0.3";
  std::string als_grid_c = "10,40";

  // explore-exploit
  double ee_epsilon = 0.1;

  // evaluation
  std::string ks = "5,10,15,20";
  std::string eval_models = "pop,pop_ee,mf,mf_ee,vimf";

  // synthetic corpus
  int synth_m = 200;
  int synth_n = 50;
  int synth_d_true = 5;
  double synth_density = 0.45;
  double synth_loyalty_concentration = 4.5;

  // global
  std::uint64_t seed = 1;
  int threads = 1;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_string(const std::string& text);

  /// Canonical form; serialize(parse(x)) is idempotent.
  std::string serialize() const;

  void validate() const;

  Hyperparams hyperparams() const;
  TrainConfig train_config() const;
  AlsConfig als_config() const;
  SyntheticSpec synth_spec() const;
  std::vector<int> ks_list() const;
  std::vector<std::string> eval_model_list() const;
};

}  // namespace vimf

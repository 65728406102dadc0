// Acceptance suite: runs the numbered criteria and prints one PASS/FAIL
// line each. Usage: acceptance [N | all]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vimf/baselines.hpp"
#include "vimf/cli.hpp"
#include "vimf/metrics.hpp"
#include "vimf/model.hpp"
#include "vimf/synth.hpp"
#include "vimf/vi.hpp"

using namespace vimf;

namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Benchmark-scale criteria run the stock configuration: only the seed,
/// thread count and split point are pinned here.
RunConfig benchmark_config(std::uint64_t seed, int threads = 1) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.min_tx = 2;
  cfg.t_split = synth_default_split();
  return cfg;
}

// ---- criterion 1: matrix-construction oracle ----

Outcome criterion_matrix_oracle() {
  Outcome out;
  Rng rng(1001);
  for (int trial = 0; trial < 200; ++trial) {
    const std::int64_t t_start = 10000;
    const std::int64_t t_end = t_start + 1 + std::int64_t(rng.uniform_index(100000));
    const int n_users = 2 + int(rng.uniform_index(15));
    const int n_attrs = 2 + int(rng.uniform_index(10));
    const int n_events = 1 + int(rng.uniform_index(500));

    EventLog log;
    IdIndex users, attrs;
    for (int i = 0; i < n_events; ++i) {
      InteractionEvent e;
      e.user_id = "u" + std::to_string(rng.uniform_index(n_users));
      e.attribute_value = "a" + std::to_string(rng.uniform_index(n_attrs));
      e.timestamp = t_start + std::int64_t(rng.uniform_index(t_end - t_start + 1));
      users.add(e.user_id);
      attrs.add(e.attribute_value);
      log.push_back(std::move(e));
    }

    auto matrix = build_matrices(log, {t_start, t_end}, users, attrs);
    auto expected = oracle::loyalty_by_pair(log, t_start, t_end);

    out.require(matrix.cells.size() == expected.size(),
                "support size mismatch (T/L identity)");
    for (const auto& cell : matrix.cells) {
      out.require(cell.l > 0.0, "stored cell with l <= 0");
      out.require(matrix.has(cell.p, cell.q), "occupancy lookup broken");
      const double want =
          expected.at({users.name(cell.p), attrs.name(cell.q)});
      out.require(std::abs(cell.l - want) <= 1e-12 * std::abs(want),
                  "loyalty value off the per-event recomputation");
    }
    if (!out.pass) break;
  }
  return out;
}

// ---- criterion 2: metric oracle equivalence ----

Outcome criterion_metric_oracle() {
  Outcome out;
  Rng rng(2002);
  for (int trial = 0; trial < 1000 && out.pass; ++trial) {
    const int n = 2 + int(rng.uniform_index(11));
    const int k = 1 + int(rng.uniform_index(std::min(n, 5)));
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[int(rng.uniform_index(i + 1))]);
    TruthSet truth;
    const int truth_size = 1 + int(rng.uniform_index(n - 1));
    while (int(truth.size()) < truth_size) truth.insert(int(rng.uniform_index(n)));

    out.require(std::abs(ndcg_one(perm, truth, k) - oracle::ndcg(perm, truth, k)) <= 1e-12,
                "ndcg mismatch");
    out.require(std::abs(map_one(perm, truth, k) -
                         oracle::average_precision(perm, truth, k)) <= 1e-12,
                "map mismatch");
    out.require(std::abs(hit_rate_one(perm, truth, k) -
                         oracle::hit_rate(perm, truth, k)) <= 1e-12,
                "hit-rate mismatch");
    out.require(std::abs(mrr_one(perm, truth, k) - oracle::mrr(perm, truth, k)) <= 1e-12,
                "mrr mismatch");
    out.require(std::abs(lauc_one(perm, truth, k, n) -
                         oracle::lauc(perm, truth, k, n)) <= 1e-12,
                "lauc mismatch");
  }

  out.require(std::abs(ndcg_one({0, 1, 2}, {0, 2}, 3) - 0.9197) < 5e-5,
              "ndcg hand example");
  out.require(std::abs(map_one({0, 1, 2}, {0, 2}, 3) - 0.8333) < 5e-5,
              "map hand example");
  out.require(std::abs(lauc_one({0}, {0}, 1, 4) - 1.0) <= 1e-12,
              "lauc hand example 1.0");
  out.require(std::abs(lauc_one({1}, {0}, 1, 4) - 1.0 / 3.0) <= 1e-12,
              "lauc hand example 1/3");
  out.require(std::abs(lauc_one({1, 0}, {0}, 2, 2) - 0.0) <= 1e-12,
              "lauc hand example 0.0");
  return out;
}

// ---- criterion 3: KL correctness ----

Outcome criterion_kl() {
  Outcome out;
  Hyperparams h;
  h.d = 1;

  {  // KL(N(1,1) || N(0,1)) = 0.5 exactly, isolated on one scalar
    VariationalParams params;
    params.layout = LatentLayout{1, 1, 1};
    params.mu.resize(params.layout.size());
    params.rho.resize(params.layout.size());
    for (std::size_t i = 0; i < params.mu.size(); ++i) {
      params.mu[i] = params.layout.prior_mean(i);
      params.rho[i] = softplus_inverse(1.0);
    }
    params.mu[params.layout.psi_t()] = 1.0;
    out.require(std::abs(kl_q_prior(params, h) - 0.5) < 1e-12,
                "KL(N(1,1)||N(0,1)) != 0.5");
  }

  Rng cfg_rng(3003);
  for (int trial = 0; trial < 20 && out.pass; ++trial) {
    VariationalParams params;
    params.layout = LatentLayout{1, 1, 1};
    const auto total = params.layout.size();
    params.mu.resize(total);
    params.rho.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
      params.mu[i] = params.layout.prior_mean(i) + cfg_rng.uniform(-1.5, 1.5);
      params.rho[i] = cfg_rng.uniform(-2.5, 1.5);
    }
    const double closed = kl_q_prior(params, h);

    const int draws = 100000;
    std::vector<double> samples(draws);
    Rng mc(40000 + trial);
    for (int i = 0; i < draws; ++i) {
      auto [state, log_q] = sample_q(params, mc);
      double log_p = 0.0;
      for (std::size_t c = 0; c < total; ++c) {
        log_p += gaussian_log_density_prec(state.theta[c],
                                           params.layout.prior_mean(c),
                                           params.layout.prior_precision(c, h));
      }
      samples[i] = log_q - log_p;
    }
    auto stats = oracle::mean_se(samples);
    out.require(std::abs(stats.mean - closed) <= 3.0 * stats.se,
                "MC estimate off the closed form at config " +
                    std::to_string(trial));
  }
  return out;
}

// ---- criterion 4: gradient unbiasedness + control variate ----

Outcome criterion_gradient() {
  Outcome out;
  Hyperparams h;
  h.d = 1;
  Rng cfg_rng(4004);
  int variance_reduced = 0;

  for (int trial = 0; trial < 20; ++trial) {
    VariationalParams params;
    params.layout = LatentLayout{1, 1, 1};
    const std::size_t total = params.layout.size();
    params.mu.resize(total);
    params.rho.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
      params.mu[i] = params.layout.prior_mean(i) + cfg_rng.uniform(-1.0, 1.0);
      params.rho[i] = cfg_rng.uniform(-2.0, 1.0);
    }

    const int reps = 10000;
    const int S = 8;  // the training default; the LOO baseline uses S-1 draws
    std::vector<std::vector<double>> plain_mu(total), plain_rho(total);
    std::vector<std::vector<double>> cv_mu(total), cv_rho(total);
    for (auto* vecs : {&plain_mu, &plain_rho, &cv_mu, &cv_rho}) {
      for (auto& v : *vecs) v.reserve(reps);
    }

    Rng rng_plain(170000 + trial), rng_cv(170000 + trial);  // paired seeds
    for (int r = 0; r < reps; ++r) {
      auto g = score_function_gradient(params, h, {}, {}, 0.0, 0.0, S,
                                       rng_plain, false);
      auto gc = score_function_gradient(params, h, {}, {}, 0.0, 0.0, S,
                                        rng_cv, true);
      for (std::size_t i = 0; i < total; ++i) {
        plain_mu[i].push_back(g.mu[i]);
        plain_rho[i].push_back(g.rho[i]);
        cv_mu[i].push_back(gc.mu[i]);
        cv_rho[i].push_back(gc.rho[i]);
      }
    }

    double var_plain = 0.0, var_cv = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
      const double prec0 = params.layout.prior_precision(i, h);
      const double m0 = params.layout.prior_mean(i);
      const double sigma = params.sigma(i);
      const double want_mu = -prec0 * (params.mu[i] - m0);
      const double want_rho =
          -(prec0 * sigma - 1.0 / sigma) * sigmoid(params.rho[i]);

      auto pm = oracle::mean_se(plain_mu[i]);
      auto pr = oracle::mean_se(plain_rho[i]);
      out.require(std::abs(pm.mean - want_mu) <= 3.0 * pm.se,
                  "mu gradient biased at config " + std::to_string(trial) +
                      " coord " + std::to_string(i));
      out.require(std::abs(pr.mean - want_rho) <= 3.0 * pr.se,
                  "rho gradient biased at config " + std::to_string(trial) +
                      " coord " + std::to_string(i));

      auto cm = oracle::mean_se(cv_mu[i]);
      auto cr = oracle::mean_se(cv_rho[i]);
      // paired mean-preservation check
      std::vector<double> diff(reps);
      for (int r = 0; r < reps; ++r) diff[r] = cv_mu[i][r] - plain_mu[i][r];
      auto d = oracle::mean_se(diff);
      out.require(std::abs(d.mean) <= 3.0 * d.se + 1e-12,
                  "control variate shifted the mean at config " +
                      std::to_string(trial));

      var_plain += pm.variance + pr.variance;
      var_cv += cm.variance + cr.variance;
    }
    if (var_cv < var_plain) ++variance_reduced;
  }
  out.require(variance_reduced >= 18,
              "control variate reduced variance in only " +
                  std::to_string(variance_reduced) + "/20 configs");
  return out;
}

// ---- criterion 5: conjugate-submodel recovery ----

Outcome criterion_conjugate() {
  Outcome out;
  const int n_obs = 200;

  Hyperparams h;
  h.d = 1;
  h.beta = 2.0;  // gamma * beta = 1 with gamma = 0.5

  DualMatrix matrix;
  matrix.m = n_obs;
  matrix.n = 1;
  for (int p = 0; p < n_obs; ++p) matrix.cells.push_back({p, 0, 1.0});
  matrix.rebuild_occupancy();

  // every block except psi_t pinned exactly at its prior mean
  VariationalParams nu0 = init_variational(h, n_obs, 1, 5005);
  const auto& layout = nu0.layout;
  for (std::size_t i = 0; i < nu0.mu.size(); ++i) {
    nu0.mu[i] = layout.prior_mean(i);
  }

  TrainConfig cfg;
  cfg.epochs = 3000;
  cfg.batch_size = n_obs;  // full batch, scale 1
  cfg.mc_samples = 8;
  cfg.learning_rate = 0.1;
  cfg.neg_ratio = 0.0;
  cfg.seed = 5005;
  cfg.mask = TrainMask{false, false, false, false, false, true, false, false};

  auto result = train(matrix, h, cfg, {}, &nu0, 0);

  const std::vector<double> y(n_obs, 1.0);
  auto posterior = oracle::normal_normal_posterior(y, h.precision_t(), 0.0,
                                                   h.alpha_pt);
  const double got_mu = result.params.mu[layout.psi_t()];
  const double got_sd = result.params.sigma(layout.psi_t());

  std::ostringstream detail;
  detail << "mu " << got_mu << " vs " << posterior.mean << ", sd " << got_sd
         << " vs " << posterior.sd;
  out.require(std::abs(got_mu - posterior.mean) <= 1e-2,
              "posterior mean off: " + detail.str());
  out.require(std::abs(got_sd - posterior.sd) <= 2e-2,
              "posterior sd off: " + detail.str());
  return out;
}

// ---- criterion 6: ELBO trend on the benchmark corpus ----

Outcome criterion_elbo_trend() {
  Outcome out;
  const std::string dir = "acceptance_elbo_tmp";
  fs::remove_all(dir);
  fs::create_directories(dir);

  RunConfig cfg = benchmark_config(1);
  cmd_synth(dir + "/raw.csv", cfg);
  cmd_prepare(dir + "/raw.csv", dir + "/corpus", cfg);

  auto corpus = load_corpus_dir(dir + "/corpus");
  auto matrix =
      build_matrices(corpus.train, corpus.window, corpus.users, corpus.attrs);
  auto result = train(matrix, cfg.hyperparams(), cfg.train_config());

  const auto& steps = result.trace.steps;
  const int window = 50;
  const int blocks = int(steps.size()) / window;
  out.require(blocks >= 2, "trace too short for smoothing");

  std::vector<double> smoothed(blocks, 0.0);
  for (int b = 0; b < blocks; ++b) {
    for (int i = 0; i < window; ++i) {
      smoothed[b] += steps[b * window + i].elbo / window;
    }
  }
  int decreases = 0;
  for (int b = 1; b < blocks; ++b) {
    if (smoothed[b] < smoothed[b - 1]) ++decreases;
  }
  std::ostringstream detail;
  detail << "first " << smoothed.front() << " last " << smoothed.back()
         << " decreases " << decreases << "/" << (blocks - 1);
  out.require(smoothed.back() > smoothed.front(),
              "no ELBO improvement: " + detail.str());
  out.require(decreases <= 0.05 * (blocks - 1),
              "too many decreasing smoothed windows: " + detail.str());
  out.detail = detail.str();

  fs::remove_all(dir);
  return out;
}

// ---- criterion 7: table-ordering reproduction over 5 seeds ----

Outcome criterion_ordering() {
  Outcome out;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const std::string dir = "acceptance_bench_tmp_" + std::to_string(seed);
    fs::remove_all(dir);
    auto verdict = cmd_benchmark(dir, benchmark_config(seed));
    std::ostringstream detail;
    detail << "seed " << seed << ": ndcg@5 pop "
           << verdict.report.value("pop", "ndcg", 5) << " mf "
           << verdict.report.value("mf", "ndcg", 5) << " vimf "
           << verdict.report.value("vimf", "ndcg", 5);
    if (!out.detail.empty()) out.detail += "; ";
    out.detail += detail.str();
    if (!verdict.pass) {
      for (const auto& line : verdict.checks) {
        if (line.rfind("FAIL", 0) == 0) out.require(false, detail.str() + " " + line);
      }
    }
    fs::remove_all(dir);
  }
  return out;
}

// ---- criterion 8: benchmark determinism across reruns and thread counts ----

Outcome criterion_determinism() {
  Outcome out;
  std::vector<std::string> reports, fulls, verdicts, checkpoints;
  const int thread_counts[3] = {1, 1, 4};
  for (int run = 0; run < 3; ++run) {
    const std::string dir = "acceptance_det_tmp_" + std::to_string(run);
    fs::remove_all(dir);
    cmd_benchmark(dir, benchmark_config(1, thread_counts[run]));
    reports.push_back(read_file(dir + "/report.csv"));
    fulls.push_back(read_file(dir + "/report_full.csv"));
    verdicts.push_back(read_file(dir + "/verdict.txt"));
    checkpoints.push_back(read_file(dir + "/vimf.txt"));
    fs::remove_all(dir);
  }
  out.require(reports[0] == reports[1] && fulls[0] == fulls[1] &&
                  verdicts[0] == verdicts[1] && checkpoints[0] == checkpoints[1],
              "repeat run at threads=1 differs");
  out.require(reports[0] == reports[2] && fulls[0] == fulls[2] &&
                  verdicts[0] == verdicts[2] && checkpoints[0] == checkpoints[2],
              "threads=4 run differs from threads=1");
  return out;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "matrix-construction oracle", 5.0, criterion_matrix_oracle},
      {2, "metric oracle equivalence", 10.0, criterion_metric_oracle},
      {3, "KL correctness", 30.0, criterion_kl},
      {4, "gradient unbiasedness", 120.0, criterion_gradient},
      {5, "conjugate-submodel recovery", 60.0, criterion_conjugate},
      {6, "ELBO trend", 300.0, criterion_elbo_trend},
      {7, "table-ordering reproduction", 900.0, criterion_ordering},
      {8, "benchmark determinism", 600.0, criterion_determinism},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string which = argc > 1 ? argv[1] : "all";
  int failures = 0;

  for (const auto& criterion : criteria()) {
    if (which != "all" && which != std::to_string(criterion.id)) continue;

    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& err) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + err.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (elapsed > criterion.budget_seconds) {
      outcome.pass = false;
      outcome.detail += (outcome.detail.empty() ? "" : "; ");
      outcome.detail += "exceeded runtime budget of " +
                        std::to_string(criterion.budget_seconds) + "s";
    }

    std::printf("%s - criterion %d (%s) [%.1fs]%s%s\n",
                outcome.pass ? "PASS" : "FAIL", criterion.id, criterion.name,
                elapsed, outcome.detail.empty() ? "" : ": ",
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}

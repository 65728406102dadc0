#include "vimf/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vimf/baselines.hpp"
#include "vimf/parallel.hpp"
#include "vimf/synth.hpp"
#include "vimf/vi.hpp"

namespace vimf {
namespace {

GroundTruth build_truth(const IndexedCorpus& corpus) {
  GroundTruth truth(corpus.users.size());
  for (const auto& e : corpus.test) {
    truth[corpus.users.at(e.user_id)].insert(corpus.attrs.at(e.attribute_value));
  }
  return truth;
}

std::int64_t min_timestamp(const EventLog& log) {
  std::int64_t t = log.front().timestamp;
  for (const auto& e : log) t = std::min(t, e.timestamp);
  return t;
}

/// Per-user rankings computed in parallel with deterministic slot writes.
RankedLists rank_users(int m, int threads,
                       const std::function<std::vector<int>(int)>& rank_one) {
  RankedLists lists(m);
  parallel_for_chunks(m, 16, threads,
                      [&](std::size_t begin, std::size_t end, std::size_t) {
                        for (std::size_t p = begin; p < end; ++p) {
                          lists[p] = rank_one(static_cast<int>(p));
                        }
                      });
  return lists;
}

}  // namespace

std::string PrepareStats::summary() const {
  std::ostringstream out;
  out << "parsed=" << parsed << " after_filter=" << after_filter
      << " train_after_split=" << train_after_split
      << " test_after_split=" << test_after_split
      << " train_final=" << train_final << " test_final=" << test_final
      << " users=" << users << " attrs=" << attrs;
  return out.str();
}

PrepareStats cmd_prepare(const std::string& raw_csv, const std::string& out_dir,
                         const RunConfig& cfg) {
  cfg.validate();
  if (!cfg.t_split)
    throw ValidationError("prepare requires t_split in the config");

  PrepareStats stats;
  EventLog log = parse_events_file(raw_csv);
  stats.parsed = log.size();

  log = filter_engaged(log, cfg.min_tx, cfg.max_tx);
  stats.after_filter = log.size();

  auto [train0, test0] = split_by_time(log, *cfg.t_split);
  stats.train_after_split = train0.size();
  stats.test_after_split = test0.size();

  auto [train, test] = intersect_filter(train0, test0);
  stats.train_final = train.size();
  stats.test_final = test.size();

  if (train.empty() || test.empty()) {
    throw ValidationError("empty corpus after preparation: " + stats.summary());
  }

  TrainWindow window;
  window.t_start = cfg.window_start ? *cfg.window_start : min_timestamp(train);
  window.t_end = cfg.window_end ? *cfg.window_end : *cfg.t_split;

  IndexedCorpus corpus = index_corpus(std::move(train), std::move(test), window);
  stats.users = corpus.users.size();
  stats.attrs = corpus.attrs.size();

  // fails early if any event escaped the window
  build_matrices(corpus.train, corpus.window, corpus.users, corpus.attrs);

  save_corpus_dir(corpus, out_dir);
  return stats;
}

void cmd_synth(const std::string& out_csv, const RunConfig& cfg) {
  cfg.validate();
  SyntheticSpec spec = cfg.synth_spec();
  spec.seed = substream_seed(cfg.seed, "corpus");
  serialize_events_file(synth_events(spec), out_csv);
}

void cmd_train(const std::string& corpus_dir, const std::string& checkpoint_path,
               const std::string& trace_path, const RunConfig& cfg,
               const std::string& model_kind, const std::string& resume_path) {
  cfg.validate();
  IndexedCorpus corpus = load_corpus_dir(corpus_dir);

  if (model_kind == "pop") {
    save_pop(checkpoint_path,
             pop_fit(corpus.train, corpus.users, corpus.attrs, cfg.pop_w));
    return;
  }

  DualMatrix matrix =
      build_matrices(corpus.train, corpus.window, corpus.users, corpus.attrs);

  if (model_kind == "als") {
    save_als(checkpoint_path, als_fit(matrix, cfg.als_config()));
    return;
  }
  if (model_kind != "vi")
    throw ValidationError("unknown model kind '" + model_kind + "'");

  Hyperparams h = cfg.hyperparams();
  TrainConfig train_cfg = cfg.train_config();

  VariationalParams resume_params;
  const VariationalParams* resume_from = nullptr;
  long start_step = 0;
  if (!resume_path.empty()) {
    Checkpoint ck = load_checkpoint(resume_path);
    resume_params = std::move(ck.params);
    resume_from = &resume_params;
    start_step = ck.steps_completed;
  }

  std::ofstream trace_out;
  if (!trace_path.empty()) {
    trace_out.open(trace_path, start_step > 0 ? std::ios::app : std::ios::out);
    if (!trace_out)
      throw ValidationError("cannot open trace file: " + trace_path);
    if (start_step == 0) trace_out << "step,elbo,grad_norm\n";
  }

  TrainHooks hooks;
  hooks.on_step = [&](const StepRecord& rec) {
    if (trace_out.is_open()) {
      trace_out << rec.step << ',' << format_double(rec.elbo) << ','
                << format_double(rec.grad_norm) << '\n';
      trace_out.flush();  // keeps the prefix on divergence aborts
    }
  };
  hooks.on_checkpoint = [&](const VariationalParams& params, long steps) {
    save_checkpoint(checkpoint_path, params, h, steps);
  };

  train(matrix, h, train_cfg, hooks, resume_from, start_step);
}

std::vector<std::string> cmd_recommend(const std::string& corpus_dir,
                                       const std::string& checkpoint_path,
                                       const std::string& user_id, int k) {
  IndexedCorpus corpus = load_corpus_dir(corpus_dir);
  const int p = corpus.users.at(user_id);  // unknown user -> error

  std::string magic;
  {
    std::ifstream in(checkpoint_path);
    if (!in) throw ValidationError("cannot open checkpoint: " + checkpoint_path);
    std::getline(in, magic);
  }

  std::vector<int> ranked;
  if (magic == "VIMF v1") {
    Checkpoint ck = load_checkpoint(checkpoint_path);
    ranked = rank_attributes(posterior_mean_state(ck.params), p, k);
  } else if (magic == "POP v1") {
    ranked = pop_rank(load_pop(checkpoint_path), p, k);
  } else if (magic == "ALS v1") {
    ranked = als_rank(load_als(checkpoint_path), p, k);
  } else {
    throw ValidationError("unrecognized checkpoint magic '" + magic + "'");
  }

  std::vector<std::string> names;
  names.reserve(ranked.size());
  for (int q : ranked) names.push_back(corpus.attrs.name(q));
  return names;
}

MetricsReport cmd_evaluate(const std::string& corpus_dir, const EvalPaths& paths,
                           const std::string& out_prefix, const RunConfig& cfg) {
  cfg.validate();
  IndexedCorpus corpus = load_corpus_dir(corpus_dir);
  const int m = corpus.users.size();
  const int n = corpus.attrs.size();
  GroundTruth truth = build_truth(corpus);

  const std::vector<int> ks = cfg.ks_list();
  const int k_max = *std::max_element(ks.begin(), ks.end());
  if (k_max > n)
    throw ValidationError("k exceeds the attribute count of the corpus");

  const std::uint64_t ee_root = substream_seed(cfg.seed, "ee");
  auto ee_seed = [&](const char* model, int p) {
    return mix64(substream_seed(ee_root, model) + static_cast<std::uint64_t>(p));
  };

  std::vector<NamedRanking> models;
  for (const auto& name : cfg.eval_model_list()) {
    NamedRanking entry;
    entry.name = name;
    if (name == "pop" || name == "pop_ee") {
      PopModel pop = load_pop(paths.pop);
      if (name == "pop") {
        entry.rankings = rank_users(m, cfg.threads, [&](int p) {
          return pop_rank(pop, p, k_max);
        });
      } else {
        entry.rankings = rank_users(m, cfg.threads, [&](int p) {
          EEConfig ee{cfg.ee_epsilon, ee_seed("pop", p)};
          return ee_wrap(pop_rank(pop, p, n), ee, k_max);
        });
      }
    } else if (name == "mf" || name == "mf_ee") {
      AlsModel als = load_als(paths.als);
      if (name == "mf") {
        entry.rankings = rank_users(m, cfg.threads, [&](int p) {
          return als_rank(als, p, k_max);
        });
      } else {
        entry.rankings = rank_users(m, cfg.threads, [&](int p) {
          EEConfig ee{cfg.ee_epsilon, ee_seed("mf", p)};
          return ee_wrap(als_rank(als, p, n), ee, k_max);
        });
      }
    } else {  // vimf
      Checkpoint ck = load_checkpoint(paths.vimf);
      LatentState state = posterior_mean_state(ck.params);
      if (state.layout.m != m || state.layout.n != n)
        throw ValidationError("checkpoint shape does not match the corpus");
      entry.rankings = rank_users(m, cfg.threads, [&](int p) {
        return rank_attributes(state, p, k_max);
      });
    }
    models.push_back(std::move(entry));
  }

  MetricsReport report = evaluate_all(models, truth, ks, n, cfg.threads);
  if (!out_prefix.empty()) {
    save_report_csv(report, out_prefix + ".csv", 3);
    save_report_csv(report, out_prefix + "_full.csv", -1);
  }
  return report;
}

namespace {

std::vector<double> parse_grid(const std::string& csv, double fallback) {
  if (csv.empty()) return {fallback};
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    auto next = csv.find(',', pos);
    if (next == std::string::npos) next = csv.size();
    auto item = csv.substr(pos, next - pos);
    if (!item.empty()) values.push_back(parse_double(item));
    pos = next + 1;
  }
  if (values.empty()) values.push_back(fallback);
  return values;
}

/// Small grid search over (d, lambda, c), scored by NDCG@5 on a validation
/// split carved from the tail of the train window. Returns the best config;
/// falls back to the configured defaults when the grid is trivial or the
/// inner split collapses.
AlsConfig tune_als(const IndexedCorpus& corpus, const RunConfig& cfg) {
  AlsConfig base = cfg.als_config();
  const auto d_grid = parse_grid(cfg.als_grid_d, base.d);
  const auto l_grid = parse_grid(cfg.als_grid_lambda, base.lambda);
  const auto c_grid = parse_grid(cfg.als_grid_c, base.confidence);
  if (d_grid.size() * l_grid.size() * c_grid.size() <= 1) return base;

  const auto& window = corpus.window;
  const std::int64_t inner_split =
      window.t_start + (window.t_end - window.t_start) * 5 / 6;
  auto [inner_train0, inner_val0] = split_by_time(corpus.train, inner_split);
  auto [inner_train, inner_val] = intersect_filter(inner_train0, inner_val0);
  if (inner_train.empty() || inner_val.empty()) return base;

  IndexedCorpus inner = index_corpus(std::move(inner_train), std::move(inner_val),
                                     TrainWindow{window.t_start, inner_split});
  DualMatrix inner_matrix =
      build_matrices(inner.train, inner.window, inner.users, inner.attrs);
  GroundTruth inner_truth = build_truth(inner);
  const int inner_m = inner.users.size();
  const int inner_n = inner.attrs.size();
  if (inner_n < 5) return base;

  AlsConfig best = base;
  double best_score = -1.0;
  for (double d : d_grid) {
    for (double lambda : l_grid) {
      for (double c : c_grid) {
        AlsConfig candidate = base;
        candidate.d = static_cast<int>(d);
        candidate.lambda = lambda;
        candidate.confidence = c;
        AlsModel model = als_fit(inner_matrix, candidate);
        RankedLists lists = rank_users(inner_m, cfg.threads, [&](int p) {
          return als_rank(model, p, 5);
        });
        double score = ndcg_at_k(lists, inner_truth, 5);
        if (score > best_score) {
          best_score = score;
          best = candidate;
        }
      }
    }
  }
  return best;
}

}  // namespace

std::string BenchmarkVerdict::summary() const {
  std::ostringstream out;
  for (const auto& line : checks) out << line << '\n';
  out << (pass ? "VERDICT: PASS" : "VERDICT: FAIL") << '\n';
  return out.str();
}

BenchmarkVerdict cmd_benchmark(const std::string& out_dir, const RunConfig& config) {
  RunConfig cfg = config;
  cfg.eval_models = "pop,pop_ee,mf,mf_ee,vimf";
  if (!cfg.t_split) cfg.t_split = synth_default_split();
  cfg.validate();

  std::filesystem::create_directories(out_dir);
  auto path = [&](const char* f) { return out_dir + "/" + f; };

  std::ofstream(path("config.txt")) << cfg.serialize();

  cmd_synth(path("raw.csv"), cfg);
  cmd_prepare(path("raw.csv"), path("corpus"), cfg);

  IndexedCorpus corpus = load_corpus_dir(path("corpus"));
  DualMatrix matrix =
      build_matrices(corpus.train, corpus.window, corpus.users, corpus.attrs);

  save_pop(path("pop.txt"),
           pop_fit(corpus.train, corpus.users, corpus.attrs, cfg.pop_w));
  save_als(path("als.txt"), als_fit(matrix, tune_als(corpus, cfg)));
  cmd_train(path("corpus"), path("vimf.txt"), path("trace.csv"), cfg, "vi");

  EvalPaths paths{path("pop.txt"), path("als.txt"), path("vimf.txt")};
  BenchmarkVerdict verdict;
  verdict.report = cmd_evaluate(path("corpus"), paths, path("report"), cfg);

  const double ndcg_pop = verdict.report.value("pop", "ndcg", 5);
  const double ndcg_pop_ee = verdict.report.value("pop_ee", "ndcg", 5);
  const double ndcg_mf = verdict.report.value("mf", "ndcg", 5);
  const double ndcg_mf_ee = verdict.report.value("mf_ee", "ndcg", 5);
  const double ndcg_vimf = verdict.report.value("vimf", "ndcg", 5);

  auto check = [&](bool ok, const std::string& text) {
    verdict.checks.push_back((ok ? "PASS: " : "FAIL: ") + text);
    return ok;
  };
  auto fmt = [](double v) { return format_double_fixed(v, 4); };

  bool pass = true;
  pass &= check(ndcg_vimf >= ndcg_mf, "ndcg@5 vimf (" + fmt(ndcg_vimf) +
                                          ") >= mf (" + fmt(ndcg_mf) + ")");
  pass &= check(ndcg_mf >= ndcg_pop, "ndcg@5 mf (" + fmt(ndcg_mf) +
                                         ") >= pop (" + fmt(ndcg_pop) + ")");
  pass &= check(ndcg_vimf >= 1.1 * ndcg_pop,
                "ndcg@5 vimf (" + fmt(ndcg_vimf) + ") >= 1.1 * pop (" +
                    fmt(ndcg_pop) + ")");
  pass &= check(ndcg_pop > ndcg_pop_ee, "ndcg@5 pop (" + fmt(ndcg_pop) +
                                            ") > pop_ee (" + fmt(ndcg_pop_ee) +
                                            ")");
  pass &= check(ndcg_mf > ndcg_mf_ee, "ndcg@5 mf (" + fmt(ndcg_mf) +
                                          ") > mf_ee (" + fmt(ndcg_mf_ee) + ")");
  verdict.pass = pass;

  std::ofstream(path("verdict.txt")) << verdict.summary();
  return verdict;
}

}  // namespace vimf

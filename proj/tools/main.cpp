#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "vimf/cli.hpp"
#include "vimf/vi.hpp"

namespace {

struct GlobalOpts {
  std::string config_path;
  std::int64_t seed = -1;
  int threads = 0;
};

vimf::RunConfig resolve_config(const GlobalOpts& opts) {
  vimf::RunConfig cfg = opts.config_path.empty()
                            ? vimf::RunConfig{}
                            : vimf::RunConfig::from_file(opts.config_path);
  if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);
  if (opts.threads > 0) cfg.threads = opts.threads;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"user-attribute affinity recommender: dual-matrix variational "
               "matrix factorization with popularity and ALS baselines"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalOpts global;
  app.add_option("--config", global.config_path, "config file (key = value)");
  app.add_option("--seed", global.seed, "root RNG seed");
  app.add_option("--threads", global.threads, "worker thread count");

  std::string input, output, corpus_dir, checkpoint, trace, resume, user_id;
  std::string model_kind = "vi", out_prefix, pop_path, als_path, vimf_path;
  int k = 10;

  auto* synth = app.add_subcommand("synth", "generate a synthetic event CSV");
  synth->add_option("--out", output, "output CSV path")->required();

  auto* prepare = app.add_subcommand("prepare", "build a corpus directory from a raw CSV");
  prepare->add_option("--input", input, "raw event CSV")->required();
  prepare->add_option("--out", output, "corpus directory")->required();

  auto* train = app.add_subcommand("train", "train a model on a corpus");
  train->add_option("--corpus", corpus_dir, "corpus directory")->required();
  train->add_option("--checkpoint", checkpoint, "checkpoint output path")->required();
  train->add_option("--trace", trace, "trace CSV output path");
  train->add_option("--model", model_kind, "vi | pop | als")
      ->check(CLI::IsMember({"vi", "pop", "als"}));
  train->add_option("--resume", resume, "checkpoint to resume from (vi only)");

  auto* recommend = app.add_subcommand("recommend", "top-k attributes for a user");
  recommend->add_option("--corpus", corpus_dir, "corpus directory")->required();
  recommend->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  recommend->add_option("--user", user_id, "user id")->required();
  recommend->add_option("--k", k, "list length")->required();

  auto* evaluate = app.add_subcommand("evaluate", "metrics report for configured models");
  evaluate->add_option("--corpus", corpus_dir, "corpus directory")->required();
  evaluate->add_option("--out-prefix", out_prefix, "report path prefix")->required();
  evaluate->add_option("--pop", pop_path, "POP checkpoint");
  evaluate->add_option("--als", als_path, "ALS checkpoint");
  evaluate->add_option("--vimf", vimf_path, "VIMF checkpoint");

  auto* benchmark = app.add_subcommand(
      "benchmark", "synth + prepare + train + evaluate + ordering verdict");
  benchmark->add_option("--out", output, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    vimf::RunConfig cfg = resolve_config(global);

    if (synth->parsed()) {
      vimf::cmd_synth(output, cfg);
      std::cout << "wrote " << output << "\n";
    } else if (prepare->parsed()) {
      auto stats = vimf::cmd_prepare(input, output, cfg);
      std::cout << stats.summary() << "\n";
    } else if (train->parsed()) {
      vimf::cmd_train(corpus_dir, checkpoint, trace, cfg, model_kind, resume);
      std::cout << "wrote " << checkpoint << "\n";
    } else if (recommend->parsed()) {
      for (const auto& name : vimf::cmd_recommend(corpus_dir, checkpoint, user_id, k)) {
        std::cout << name << "\n";
      }
    } else if (evaluate->parsed()) {
      vimf::cmd_evaluate(corpus_dir, {pop_path, als_path, vimf_path}, out_prefix, cfg);
      std::cout << "wrote " << out_prefix << ".csv and " << out_prefix
                << "_full.csv\n";
    } else if (benchmark->parsed()) {
      auto verdict = vimf::cmd_benchmark(output, cfg);
      std::cout << verdict.summary();
      if (!verdict.pass) return 3;
    }
  } catch (const vimf::ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 0;
}

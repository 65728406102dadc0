#pragma once

#include <string>
#include <vector>

#include "vimf/config.hpp"
#include "vimf/metrics.hpp"

namespace vimf {

struct PrepareStats {
  std::size_t parsed = 0;
  std::size_t after_filter = 0;
  std::size_t train_after_split = 0;
  std::size_t test_after_split = 0;
  std::size_t train_final = 0;
  std::size_t test_final = 0;
  int users = 0;
  int attrs = 0;

  std::string summary() const;
};

/// parse -> filter_engaged -> split_by_time -> intersect_filter -> corpus dir.
PrepareStats cmd_prepare(const std::string& raw_csv, const std::string& out_dir,
                         const RunConfig& cfg);

void cmd_synth(const std::string& out_csv, const RunConfig& cfg);

/// model_kind: vi (default), pop, or als. The VI path appends the trace file
/// incrementally and can resume from an existing checkpoint, continuing the
/// step numbering.
void cmd_train(const std::string& corpus_dir, const std::string& checkpoint_path,
               const std::string& trace_path, const RunConfig& cfg,
               const std::string& model_kind = "vi",
               const std::string& resume_path = "");

/// Decodes attribute indices back to attribute values. The checkpoint kind
/// (VIMF/POP/ALS) is detected from the file magic.
std::vector<std::string> cmd_recommend(const std::string& corpus_dir,
                                       const std::string& checkpoint_path,
                                       const std::string& user_id, int k);

struct EvalPaths {
  std::string pop;
  std::string als;
  std::string vimf;
};

/// Writes <out_prefix>.csv (3 decimals) and <out_prefix>_full.csv.
MetricsReport cmd_evaluate(const std::string& corpus_dir, const EvalPaths& paths,
                           const std::string& out_prefix, const RunConfig& cfg);

struct BenchmarkVerdict {
  bool pass = false;
  std::vector<std::string> checks;  // one "PASS/FAIL: ..." line per criterion
  MetricsReport report;

  std::string summary() const;
};

/// synth -> prepare -> train pop/als/vi -> evaluate -> ordering verdict.
BenchmarkVerdict cmd_benchmark(const std::string& out_dir, const RunConfig& cfg);

}  // namespace vimf

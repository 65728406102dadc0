#include "vimf/baselines.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vimf/model.hpp"
#include "vimf/textio.hpp"

namespace vimf {

PopModel pop_fit(const EventLog& train, const IdIndex& users,
                 const IdIndex& attrs, double blend_weight) {
  if (train.empty()) throw ValidationError("pop_fit requires nonempty train data");
  if (blend_weight < 0) throw ValidationError("blend weight must be >= 0");

  PopModel model;
  model.m = users.size();
  model.n = attrs.size();
  model.blend_weight = blend_weight;
  model.global_count.assign(model.n, 0);

  std::vector<std::vector<std::pair<int, std::int64_t>>> per_user(model.m);
  for (const auto& e : train) {
    const int p = users.at(e.user_id);
    const int q = attrs.at(e.attribute_value);
    ++model.global_count[q];
    auto& row = per_user[p];
    auto it = std::lower_bound(
        row.begin(), row.end(), q,
        [](const auto& a, int b) { return a.first < b; });
    if (it != row.end() && it->first == q) {
      ++it->second;
    } else {
      row.insert(it, {q, 1});
    }
  }
  model.user_count = std::move(per_user);
  return model;
}

std::vector<double> pop_scores(const PopModel& model, int p) {
  if (p < 0 || p >= model.m)
    throw ValidationError("user index out of range: " + std::to_string(p));
  std::int64_t total = 0;
  for (auto c : model.global_count) total += c;
  std::vector<double> scores(model.n);
  for (int q = 0; q < model.n; ++q) {
    scores[q] = static_cast<double>(model.global_count[q]) / total;
  }
  for (const auto& [q, count] : model.user_count[p]) {
    scores[q] += model.blend_weight * static_cast<double>(count);
  }
  return scores;
}

std::vector<int> pop_rank(const PopModel& model, int p, int k) {
  return rank_by_score(pop_scores(model, p), k);
}

void AlsConfig::validate() const {
  if (d < 1) throw ValidationError("als d must be >= 1");
  if (lambda < 0) throw ValidationError("als lambda must be >= 0");
  if (confidence < 0) throw ValidationError("als confidence must be >= 0");
  if (iters < 1) throw ValidationError("als iters must be >= 1");
}

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Ridge solve for one side of the alternation. `positives` lists, per entity
// on the side being solved, its positive cells (other-side indices).
void solve_side(Eigen::Ref<RowMat> target, const Eigen::Ref<const RowMat>& fixed,
                const std::vector<std::vector<int>>& positives, double lambda,
                double confidence) {
  const int d = static_cast<int>(fixed.cols());
  const Eigen::MatrixXd gram =
      fixed.transpose() * fixed +
      lambda * Eigen::MatrixXd::Identity(d, d);

  for (int i = 0; i < target.rows(); ++i) {
    Eigen::MatrixXd a = gram;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    for (int j : positives[i]) {
      const auto yj = fixed.row(j);
      if (confidence != 0.0) a.noalias() += confidence * yj.transpose() * yj;
      b.noalias() += (1.0 + confidence) * yj.transpose();
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    const auto pivots = ldlt.vectorD();
    const double pivot_max = pivots.cwiseAbs().maxCoeff();
    if (!(pivots.minCoeff() > pivot_max * 1e-12)) {
      throw NumericError(
          "singular normal equations in ALS solve (set lambda > 0)");
    }
    Eigen::VectorXd x = ldlt.solve(b);
    if (!x.allFinite() || (a * x - b).norm() > 1e-6 * (1.0 + b.norm())) {
      throw NumericError(
          "singular normal equations in ALS solve (set lambda > 0)");
    }
    target.row(i) = x.transpose();
  }
}

}  // namespace

double als_objective(const AlsModel& model, const DualMatrix& matrix) {
  Eigen::Map<const RowMat> x(model.x.data(), model.m, model.d);
  Eigen::Map<const RowMat> y(model.y.data(), model.n, model.d);
  const double c = model.config.confidence;
  const double lambda = model.config.lambda;

  // sum over all cells of s^2 via the Gram trick, positives handled sparsely
  const Eigen::MatrixXd xtx = x.transpose() * x;
  const Eigen::MatrixXd yty = y.transpose() * y;
  double obj = (xtx.array() * yty.array()).sum();
  for (const auto& cell : matrix.cells) {
    const double s = x.row(cell.p).dot(y.row(cell.q));
    obj += 1.0 - 2.0 * s;             // (t - s)^2 - s^2 for t = 1
    obj += c * (1.0 - s) * (1.0 - s); // confidence part
  }
  obj += lambda * (x.squaredNorm() + y.squaredNorm());
  return obj;
}

AlsModel als_fit(const DualMatrix& matrix, const AlsConfig& cfg) {
  cfg.validate();
  if (matrix.positives() == 0)
    throw ValidationError("als_fit requires a nonempty matrix");

  AlsModel model;
  model.m = matrix.m;
  model.n = matrix.n;
  model.d = cfg.d;
  model.config = cfg;
  model.x.resize(static_cast<std::size_t>(matrix.m) * cfg.d);
  model.y.resize(static_cast<std::size_t>(matrix.n) * cfg.d);

  Rng rng(cfg.seed);
  for (auto& v : model.x) v = rng.uniform(-0.01, 0.01);
  for (auto& v : model.y) v = rng.uniform(-0.01, 0.01);

  std::vector<std::vector<int>> user_pos(matrix.m), attr_pos(matrix.n);
  for (const auto& cell : matrix.cells) {
    user_pos[cell.p].push_back(cell.q);
    attr_pos[cell.q].push_back(cell.p);
  }

  Eigen::Map<RowMat> x(model.x.data(), model.m, cfg.d);
  Eigen::Map<RowMat> y(model.y.data(), model.n, cfg.d);

  double prev = als_objective(model, matrix);
  for (int it = 0; it < cfg.iters; ++it) {
    solve_side(x, y, user_pos, cfg.lambda, cfg.confidence);
    double obj = als_objective(model, matrix);
    if (obj > prev + 1e-9 * (1.0 + std::abs(prev)))
      throw NumericError("ALS objective increased on a user solve");
    model.objective_trace.push_back(obj);
    prev = obj;

    solve_side(y, x, attr_pos, cfg.lambda, cfg.confidence);
    obj = als_objective(model, matrix);
    if (obj > prev + 1e-9 * (1.0 + std::abs(prev)))
      throw NumericError("ALS objective increased on an attribute solve");
    model.objective_trace.push_back(obj);
    prev = obj;
  }
  return model;
}

std::vector<double> als_scores(const AlsModel& model, int p) {
  if (p < 0 || p >= model.m)
    throw ValidationError("user index out of range: " + std::to_string(p));
  std::vector<double> scores(model.n);
  const double* xp = model.x.data() + static_cast<std::size_t>(p) * model.d;
  for (int q = 0; q < model.n; ++q) {
    const double* yq = model.y.data() + static_cast<std::size_t>(q) * model.d;
    double s = 0.0;
    for (int j = 0; j < model.d; ++j) s += xp[j] * yq[j];
    scores[q] = s;
  }
  return scores;
}

std::vector<int> als_rank(const AlsModel& model, int p, int k) {
  return rank_by_score(als_scores(model, p), k);
}

std::vector<int> ee_wrap(const std::vector<int>& base_ranking,
                         const EEConfig& cfg, int k) {
  const int n = static_cast<int>(base_ranking.size());
  if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0))
    throw ValidationError("epsilon must lie in [0,1]");
  if (k < 1 || k > n) throw ValidationError("k out of range for ee_wrap");

  std::vector<char> seen(n, 0);
  for (int q : base_ranking) {
    if (q < 0 || q >= n || seen[q])
      throw ValidationError("ee_wrap base ranking must be a full permutation");
    seen[q] = 1;
  }

  Rng rng(cfg.seed);
  std::vector<char> chosen(n, 0);
  std::vector<int> pool(base_ranking.begin() + k, base_ranking.end());
  std::vector<int> out;
  out.reserve(k);
  std::size_t base_ptr = 0;

  for (int slot = 0; slot < k; ++slot) {
    const bool explore = rng.uniform01() < cfg.epsilon && !pool.empty();
    int pick;
    if (explore) {
      const std::size_t idx = rng.uniform_index(pool.size());
      pick = pool[idx];
      pool[idx] = pool.back();
      pool.pop_back();
    } else {
      while (chosen[base_ranking[base_ptr]]) ++base_ptr;
      pick = base_ranking[base_ptr++];
    }
    chosen[pick] = 1;
    out.push_back(pick);
  }
  return out;
}

// ---- model dumps ----

void save_pop(const std::string& path, const PopModel& model) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file: " + path);
  out << "POP v1\n";
  out << model.m << ' ' << model.n << '\n';
  out << "global\n";
  for (int q = 0; q < model.n; ++q) {
    if (q) out << ' ';
    out << model.global_count[q];
  }
  out << '\n';
  out << "user\n";
  std::size_t entries = 0;
  for (const auto& row : model.user_count) entries += row.size();
  out << entries << '\n';
  for (int p = 0; p < model.m; ++p) {
    for (const auto& [q, count] : model.user_count[p]) {
      out << p << ' ' << q << ' ' << count << '\n';
    }
  }
  out << "hyperparams\n";
  out << "w=" << format_double(model.blend_weight) << '\n';
}

PopModel load_pop(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model dump: " + path);
  LineReader reader{in};
  reader.expect("POP v1");

  PopModel model;
  {
    std::istringstream dims(reader.next("dimensions"));
    if (!(dims >> model.m >> model.n) || model.m < 1 || model.n < 1)
      throw ParseError("bad dimension line", reader.line_no);
  }
  reader.expect("global");
  {
    auto row = parse_row(reader.next("global counts"), model.n, reader.line_no);
    model.global_count.resize(model.n);
    for (int q = 0; q < model.n; ++q)
      model.global_count[q] = static_cast<std::int64_t>(row[q]);
  }
  reader.expect("user");
  const std::int64_t entries = parse_int(reader.next("entry count"));
  model.user_count.assign(model.m, {});
  for (std::int64_t i = 0; i < entries; ++i) {
    std::istringstream ls(reader.next("user count entry"));
    int p, q;
    std::int64_t count;
    if (!(ls >> p >> q >> count) || p < 0 || p >= model.m || q < 0 ||
        q >= model.n) {
      throw ParseError("bad user count entry", reader.line_no);
    }
    model.user_count[p].push_back({q, count});
  }
  reader.expect("hyperparams");
  std::string line;
  while (reader.next_optional(line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos || line.substr(0, eq) != "w")
      throw ParseError("unknown hyperparams line '" + line + "'", reader.line_no);
    model.blend_weight = parse_double(line.substr(eq + 1));
  }
  return model;
}

void save_als(const std::string& path, const AlsModel& model) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file: " + path);
  out << "ALS v1\n";
  out << model.m << ' ' << model.n << ' ' << model.d << '\n';
  out << "X\n";
  for (int p = 0; p < model.m; ++p) {
    write_row(out, model.x.data() + static_cast<std::size_t>(p) * model.d,
              model.d);
  }
  out << "Y\n";
  for (int q = 0; q < model.n; ++q) {
    write_row(out, model.y.data() + static_cast<std::size_t>(q) * model.d,
              model.d);
  }
  out << "hyperparams\n";
  out << "lambda=" << format_double(model.config.lambda) << '\n';
  out << "confidence=" << format_double(model.config.confidence) << '\n';
  out << "iters=" << model.config.iters << '\n';
  out << "seed=" << model.config.seed << '\n';
}

AlsModel load_als(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model dump: " + path);
  LineReader reader{in};
  reader.expect("ALS v1");

  AlsModel model;
  {
    std::istringstream dims(reader.next("dimensions"));
    if (!(dims >> model.m >> model.n >> model.d) || model.m < 1 ||
        model.n < 1 || model.d < 1)
      throw ParseError("bad dimension line", reader.line_no);
  }
  model.config.d = model.d;
  model.x.resize(static_cast<std::size_t>(model.m) * model.d);
  model.y.resize(static_cast<std::size_t>(model.n) * model.d);

  reader.expect("X");
  for (int p = 0; p < model.m; ++p) {
    auto row = parse_row(reader.next("X row"), model.d, reader.line_no);
    std::copy(row.begin(), row.end(),
              model.x.begin() + static_cast<std::size_t>(p) * model.d);
  }
  reader.expect("Y");
  for (int q = 0; q < model.n; ++q) {
    auto row = parse_row(reader.next("Y row"), model.d, reader.line_no);
    std::copy(row.begin(), row.end(),
              model.y.begin() + static_cast<std::size_t>(q) * model.d);
  }
  reader.expect("hyperparams");
  std::string line;
  while (reader.next_optional(line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected key=value in hyperparams block", reader.line_no);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "lambda") model.config.lambda = parse_double(value);
    else if (key == "confidence") model.config.confidence = parse_double(value);
    else if (key == "iters") model.config.iters = static_cast<int>(parse_int(value));
    else if (key == "seed") model.config.seed = static_cast<std::uint64_t>(parse_int(value));
    else throw ParseError("unknown hyperparams key '" + key + "'", reader.line_no);
  }
  return model;
}

}  // namespace vimf

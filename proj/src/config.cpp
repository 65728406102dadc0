#include "vimf/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

namespace vimf {
namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto next = s.find(',', pos);
    if (next == std::string::npos) next = s.size();
    auto item = trim(s.substr(pos, next - pos));
    if (!item.empty()) out.push_back(item);
    pos = next + 1;
  }
  return out;
}

struct Entry {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
  bool optional = false;  // omitted from serialization when unset
  std::function<bool(const RunConfig&)> is_set;
};

std::string bool_str(bool v) { return v ? "true" : "false"; }

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ValidationError("expected true/false, got '" + s + "'");
}

const std::vector<Entry>& schema() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    auto add_i64 = [&](const char* key, std::int64_t RunConfig::* field) {
      e.push_back({key,
                   [field](RunConfig& c, const std::string& v) { c.*field = parse_int(v); },
                   [field](const RunConfig& c) { return std::to_string(c.*field); }});
    };
    auto add_opt_i64 = [&](const char* key,
                           std::optional<std::int64_t> RunConfig::* field) {
      e.push_back({key,
                   [field](RunConfig& c, const std::string& v) { c.*field = parse_int(v); },
                   [field](const RunConfig& c) { return std::to_string(*(c.*field)); },
                   true,
                   [field](const RunConfig& c) { return (c.*field).has_value(); }});
    };
    auto add_int = [&](const char* key, int RunConfig::* field) {
      e.push_back({key,
                   [field](RunConfig& c, const std::string& v) {
                     c.*field = static_cast<int>(parse_int(v));
                   },
                   [field](const RunConfig& c) { return std::to_string(c.*field); }});
    };
    auto add_dbl = [&](const char* key, double RunConfig::* field) {
      e.push_back({key,
                   [field](RunConfig& c, const std::string& v) { c.*field = parse_double(v); },
                   [field](const RunConfig& c) { return format_double(c.*field); }});
    };
    auto add_str = [&](const char* key, std::string RunConfig::* field) {
      e.push_back({key,
                   [field](RunConfig& c, const std::string& v) { c.*field = v; },
                   [field](const RunConfig& c) { return c.*field; }});
    };

    add_i64("min_tx", &RunConfig::min_tx);
    add_i64("max_tx", &RunConfig::max_tx);
    add_opt_i64("t_split", &RunConfig::t_split);
    add_opt_i64("window_start", &RunConfig::window_start);
    add_opt_i64("window_end", &RunConfig::window_end);

    add_int("d", &RunConfig::d);
    add_dbl("alpha_u", &RunConfig::alpha_u);
    add_dbl("alpha_bu", &RunConfig::alpha_bu);
    add_dbl("alpha_v", &RunConfig::alpha_v);
    add_dbl("alpha_bv", &RunConfig::alpha_bv);
    add_dbl("alpha_kt", &RunConfig::alpha_kt);
    add_dbl("alpha_pt", &RunConfig::alpha_pt);
    add_dbl("alpha_kl", &RunConfig::alpha_kl);
    add_dbl("alpha_pl", &RunConfig::alpha_pl);
    add_dbl("beta", &RunConfig::beta);
    add_dbl("gamma", &RunConfig::gamma);

    add_int("epochs", &RunConfig::epochs);
    add_int("batch_size", &RunConfig::batch_size);
    add_int("mc_samples", &RunConfig::mc_samples);
    add_dbl("learning_rate", &RunConfig::learning_rate);
    add_dbl("neg_ratio", &RunConfig::neg_ratio);
    e.push_back({"use_control_variate",
                 [](RunConfig& c, const std::string& v) {
                   c.use_control_variate = parse_bool(v);
                 },
                 [](const RunConfig& c) { return bool_str(c.use_control_variate); }});
    add_str("optimizer", &RunConfig::optimizer);
    add_str("estimator", &RunConfig::estimator);

    add_dbl("pop_w", &RunConfig::pop_w);
    add_dbl("als_lambda", &RunConfig::als_lambda);
    add_dbl("als_confidence", &RunConfig::als_confidence);
    add_int("als_iters", &RunConfig::als_iters);
    add_str("als_grid_d", &RunConfig::als_grid_d);
    add_str("als_grid_lambda", &RunConfig::als_grid_lambda);
    add_str("als_grid_c", &RunConfig::als_grid_c);

    add_dbl("ee_epsilon", &RunConfig::ee_epsilon);

    add_str("ks", &RunConfig::ks);
    add_str("eval_models", &RunConfig::eval_models);

    add_int("synth_m", &RunConfig::synth_m);
    add_int("synth_n", &RunConfig::synth_n);
    add_int("synth_d_true", &RunConfig::synth_d_true);
    add_dbl("synth_density", &RunConfig::synth_density);
    add_dbl("synth_loyalty_concentration", &RunConfig::synth_loyalty_concentration);

    e.push_back({"seed",
                 [](RunConfig& c, const std::string& v) {
                   c.seed = static_cast<std::uint64_t>(parse_int(v));
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    add_int("threads", &RunConfig::threads);
    return e;
  }();
  return entries;
}

}  // namespace

RunConfig RunConfig::from_string(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected `key = value`", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& entries = schema();
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const Entry& e) { return key == e.key; });
    if (it == entries.end())
      throw ParseError("unknown config key '" + key + "'", line_no);
    try {
      it->set(cfg, value);
    } catch (const ValidationError& err) {
      throw ParseError("key '" + key + "': " + err.what(), line_no);
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  for (const auto& entry : schema()) {
    if (entry.optional && !entry.is_set(*this)) continue;
    out << entry.key << " = " << entry.get(*this) << '\n';
  }
  return out.str();
}

void RunConfig::validate() const {
  if (min_tx < 1 || min_tx > max_tx)
    throw ValidationError("requires 1 <= min_tx <= max_tx");
  hyperparams().validate();
  train_config().validate();
  als_config().validate();
  synth_spec().validate();
  if (!(pop_w >= 0)) throw ValidationError("pop_w must be >= 0");
  if (!(ee_epsilon >= 0.0 && ee_epsilon <= 1.0))
    throw ValidationError("ee_epsilon must lie in [0,1]");
  auto k_values = ks_list();
  if (k_values.empty()) throw ValidationError("ks must be nonempty");
  eval_model_list();
  if (window_start && window_end && *window_start >= *window_end)
    throw ValidationError("window_start must be < window_end");
}

Hyperparams RunConfig::hyperparams() const {
  Hyperparams h;
  h.d = d;
  h.alpha_u = alpha_u;
  h.alpha_bu = alpha_bu;
  h.alpha_v = alpha_v;
  h.alpha_bv = alpha_bv;
  h.alpha_kt = alpha_kt;
  h.alpha_pt = alpha_pt;
  h.alpha_kl = alpha_kl;
  h.alpha_pl = alpha_pl;
  h.beta = beta;
  h.gamma = gamma;
  return h;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = batch_size;
  cfg.mc_samples = mc_samples;
  cfg.learning_rate = learning_rate;
  cfg.neg_ratio = neg_ratio;
  cfg.seed = seed;
  cfg.use_control_variate = use_control_variate;
  if (optimizer == "adagrad") cfg.optimizer = Optimizer::Adagrad;
  else if (optimizer == "sgd") cfg.optimizer = Optimizer::Sgd;
  else throw ValidationError("optimizer must be adagrad or sgd");
  if (estimator == "closed_form_kl") cfg.estimator = GradientEstimator::ClosedFormKl;
  else if (estimator == "full_mc") cfg.estimator = GradientEstimator::FullMc;
  else throw ValidationError("estimator must be closed_form_kl or full_mc");
  cfg.threads = threads;
  return cfg;
}

AlsConfig RunConfig::als_config() const {
  AlsConfig cfg;
  cfg.d = d;
  cfg.lambda = als_lambda;
  cfg.confidence = als_confidence;
  cfg.iters = als_iters;
  cfg.seed = seed;
  return cfg;
}

SyntheticSpec RunConfig::synth_spec() const {
  SyntheticSpec spec;
  spec.m = synth_m;
  spec.n = synth_n;
  spec.d_true = synth_d_true;
  spec.seed = seed;
  spec.density = synth_density;
  spec.loyalty_concentration = synth_loyalty_concentration;
  return spec;
}

std::vector<int> RunConfig::ks_list() const {
  std::vector<int> out;
  for (const auto& item : split_csv(ks)) {
    auto k = parse_int(item);
    if (k < 1) throw ValidationError("k values must be >= 1");
    out.push_back(static_cast<int>(k));
  }
  return out;
}

std::vector<std::string> RunConfig::eval_model_list() const {
  auto models = split_csv(eval_models);
  for (const auto& name : models) {
    if (name != "pop" && name != "pop_ee" && name != "mf" && name != "mf_ee" &&
        name != "vimf") {
      throw ValidationError("unknown eval model '" + name + "'");
    }
  }
  if (models.empty()) throw ValidationError("eval_models must be nonempty");
  return models;
}

}  // namespace vimf

#include "vimf/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace vimf {
namespace {

constexpr const char* kHeader = "user_id,attribute_value,timestamp";

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open input file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file: " + path);
  return out;
}

// Counts events per user (or per attribute with the other selector).
template <typename Sel>
std::unordered_map<std::string, std::int64_t> count_by(const EventLog& log,
                                                       Sel sel) {
  std::unordered_map<std::string, std::int64_t> counts;
  for (const auto& e : log) ++counts[sel(e)];
  return counts;
}

}  // namespace

void DualMatrix::rebuild_occupancy() {
  occupied_.clear();
  occupied_.reserve(cells.size() * 2);
  for (const auto& c : cells) occupied_.insert(key(c.p, c.q));
}

EventLog parse_events(std::istream& in) {
  EventLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line == kHeader) continue;
    if (line.empty()) throw ParseError("empty line", line_no);

    auto c1 = line.find(',');
    auto c2 = c1 == std::string::npos ? std::string::npos
                                      : line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos ||
        line.find(',', c2 + 1) != std::string::npos) {
      throw ParseError("expected 3 comma-separated fields", line_no);
    }

    InteractionEvent e;
    e.user_id = line.substr(0, c1);
    e.attribute_value = line.substr(c1 + 1, c2 - c1 - 1);
    std::string ts = line.substr(c2 + 1);
    if (e.user_id.empty()) throw ParseError("empty user_id", line_no);
    if (e.attribute_value.empty())
      throw ParseError("empty attribute_value", line_no);
    try {
      e.timestamp = parse_int(ts);
    } catch (const ValidationError&) {
      throw ParseError("non-integer timestamp '" + ts + "'", line_no);
    }
    if (e.timestamp < 0) throw ParseError("negative timestamp", line_no);
    log.push_back(std::move(e));
  }
  return log;
}

EventLog parse_events_file(const std::string& path) {
  auto in = open_input(path);
  return parse_events(in);
}

void serialize_events(const EventLog& log, std::ostream& out) {
  out << kHeader << '\n';
  for (const auto& e : log) {
    out << e.user_id << ',' << e.attribute_value << ',' << e.timestamp << '\n';
  }
}

void serialize_events_file(const EventLog& log, const std::string& path) {
  auto out = open_output(path);
  serialize_events(log, out);
}

EventLog filter_engaged(const EventLog& log, std::int64_t min_tx,
                        std::int64_t max_tx) {
  if (min_tx < 1 || min_tx > max_tx)
    throw ValidationError("filter_engaged requires 1 <= min_tx <= max_tx");
  auto counts = count_by(log, [](const InteractionEvent& e) -> const std::string& {
    return e.user_id;
  });
  EventLog kept;
  kept.reserve(log.size());
  for (const auto& e : log) {
    auto c = counts[e.user_id];
    if (c >= min_tx && c <= max_tx) kept.push_back(e);
  }
  return kept;
}

std::pair<EventLog, EventLog> split_by_time(const EventLog& log,
                                            std::int64_t t_split) {
  EventLog train, test;
  for (const auto& e : log) {
    (e.timestamp < t_split ? train : test).push_back(e);
  }
  return {std::move(train), std::move(test)};
}

std::pair<EventLog, EventLog> intersect_filter(const EventLog& train,
                                               const EventLog& test) {
  EventLog tr = train, te = test;
  for (;;) {
    auto users_tr = count_by(tr, [](const InteractionEvent& e) { return e.user_id; });
    auto users_te = count_by(te, [](const InteractionEvent& e) { return e.user_id; });
    auto attrs_tr = count_by(tr, [](const InteractionEvent& e) { return e.attribute_value; });
    auto attrs_te = count_by(te, [](const InteractionEvent& e) { return e.attribute_value; });

    auto keep = [&](const InteractionEvent& e) {
      return users_tr.count(e.user_id) && users_te.count(e.user_id) &&
             attrs_tr.count(e.attribute_value) &&
             attrs_te.count(e.attribute_value);
    };

    EventLog tr2, te2;
    tr2.reserve(tr.size());
    te2.reserve(te.size());
    for (const auto& e : tr)
      if (keep(e)) tr2.push_back(e);
    for (const auto& e : te)
      if (keep(e)) te2.push_back(e);

    bool stable = tr2.size() == tr.size() && te2.size() == te.size();
    tr = std::move(tr2);
    te = std::move(te2);
    if (stable) break;
  }
  return {std::move(tr), std::move(te)};
}

IndexedCorpus index_corpus(EventLog train, EventLog test, TrainWindow window) {
  window.validate();
  IndexedCorpus corpus;
  corpus.window = window;
  for (const auto& e : train) {
    corpus.users.add(e.user_id);
    corpus.attrs.add(e.attribute_value);
  }
  for (const auto& e : test) {
    if (!corpus.users.find(e.user_id))
      throw ValidationError("test user '" + e.user_id +
                            "' missing from train (run intersect_filter)");
    if (!corpus.attrs.find(e.attribute_value))
      throw ValidationError("test attribute '" + e.attribute_value +
                            "' missing from train (run intersect_filter)");
  }
  corpus.train = std::move(train);
  corpus.test = std::move(test);
  return corpus;
}

DualMatrix build_matrices(const EventLog& train, const TrainWindow& window,
                          const IdIndex& users, const IdIndex& attrs) {
  window.validate();
  DualMatrix mat;
  mat.m = users.size();
  mat.n = attrs.size();

  const double span = static_cast<double>(window.t_end - window.t_start);
  std::map<std::pair<int, int>, double> loyalty;  // ordered -> sorted cells
  for (const auto& e : train) {
    if (e.timestamp < window.t_start || e.timestamp > window.t_end) {
      throw ValidationError(
          "event at t=" + std::to_string(e.timestamp) +
          " outside the train window [" + std::to_string(window.t_start) +
          ", " + std::to_string(window.t_end) + "] (split/window mismatch)");
    }
    int p = users.at(e.user_id);
    int q = attrs.at(e.attribute_value);
    double expo = static_cast<double>(e.timestamp - window.t_start) / span;
    loyalty[{p, q}] += std::exp2(expo);
  }

  mat.cells.reserve(loyalty.size());
  for (const auto& [pq, l] : loyalty) {
    mat.cells.push_back({pq.first, pq.second, l});
  }
  mat.rebuild_occupancy();
  return mat;
}

void save_corpus_dir(const IndexedCorpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto path = [&](const char* f) { return dir + "/" + f; };

  auto write_index = [&](const IdIndex& idx, const std::string& file) {
    auto out = open_output(file);
    for (int i = 0; i < idx.size(); ++i) {
      out << idx.name(i) << '\t' << i << '\n';
    }
  };
  write_index(corpus.users, path("users.tsv"));
  write_index(corpus.attrs, path("attrs.tsv"));
  serialize_events_file(corpus.train, path("train.csv"));
  serialize_events_file(corpus.test, path("test.csv"));
  auto out = open_output(path("window.txt"));
  out << corpus.window.t_start << '\n' << corpus.window.t_end << '\n';
}

IndexedCorpus load_corpus_dir(const std::string& dir) {
  auto path = [&](const char* f) { return dir + "/" + f; };

  auto read_index = [&](const std::string& file) {
    IdIndex idx;
    auto in = open_input(file);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw ParseError("expected `id<TAB>index` in " + file, line_no);
      std::string id = line.substr(0, tab);
      std::int64_t want = parse_int(line.substr(tab + 1));
      int got = idx.add(id);
      if (got != want)
        throw ParseError("non-dense index in " + file, line_no);
    }
    return idx;
  };

  IndexedCorpus corpus;
  corpus.users = read_index(path("users.tsv"));
  corpus.attrs = read_index(path("attrs.tsv"));
  corpus.train = parse_events_file(path("train.csv"));
  corpus.test = parse_events_file(path("test.csv"));

  auto in = open_input(path("window.txt"));
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("window.txt: missing t_start");
  corpus.window.t_start = parse_int(line);
  if (!std::getline(in, line)) throw ValidationError("window.txt: missing t_end");
  corpus.window.t_end = parse_int(line);
  corpus.window.validate();
  return corpus;
}

}  // namespace vimf

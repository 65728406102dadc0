#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "vimf/common.hpp"

namespace vimf {

/// One (user, attribute-value, timestamp) purchase/read record.
struct InteractionEvent {
  std::string user_id;
  std::string attribute_value;
  std::int64_t timestamp = 0;  // epoch seconds, >= 0

  bool operator==(const InteractionEvent&) const = default;
};

/// Events in ingestion order; duplicates permitted (repeat purchases matter).
using EventLog = std::vector<InteractionEvent>;

struct TrainWindow {
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;

  void validate() const {
    if (t_start >= t_end)
      throw ValidationError("train window requires t_start < t_end");
  }
};

/// Dense string <-> index bijection; indices follow first appearance.
class IdIndex {
 public:
  int add(const std::string& id) {
    auto it = index_.find(id);
    if (it != index_.end()) return it->second;
    int i = static_cast<int>(names_.size());
    index_.emplace(id, i);
    names_.push_back(id);
    return i;
  }

  std::optional<int> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  int at(const std::string& id) const {
    auto i = find(id);
    if (!i) throw ValidationError("unknown id: '" + id + "'");
    return *i;
  }

  const std::string& name(int index) const { return names_.at(index); }
  int size() const { return static_cast<int>(names_.size()); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

struct IndexedCorpus {
  IdIndex users;
  IdIndex attrs;
  EventLog train;
  EventLog test;
  TrainWindow window;
};

/// Aligned sparse transaction/loyalty pair. Stored cells are exactly the
/// cells with T = 1; absent cells have T = 0 and L = 0.
struct DualMatrix {
  struct Cell {
    int p;
    int q;
    double l;  // time-decayed purchase sum, > 0
  };

  int m = 0;
  int n = 0;
  std::vector<Cell> cells;  // sorted by (p, q)

  bool has(int p, int q) const {
    return occupied_.count(key(p, q)) != 0;
  }
  std::size_t positives() const { return cells.size(); }

  void rebuild_occupancy();

 private:
  std::int64_t key(int p, int q) const {
    return static_cast<std::int64_t>(p) * n + q;
  }
  std::unordered_set<std::int64_t> occupied_;
};

/// Parses `user_id,attribute_value,timestamp` lines; one optional header.
EventLog parse_events(std::istream& in);
EventLog parse_events_file(const std::string& path);

/// Writes the same CSV format (with header); parse(serialize(log)) == log.
void serialize_events(const EventLog& log, std::ostream& out);
void serialize_events_file(const EventLog& log, const std::string& path);

/// Keeps events of users whose total event count c has min_tx <= c <= max_tx.
EventLog filter_engaged(const EventLog& log, std::int64_t min_tx,
                        std::int64_t max_tx);

/// timestamp < t_split -> train, timestamp >= t_split -> test.
std::pair<EventLog, EventLog> split_by_time(const EventLog& log,
                                            std::int64_t t_split);

/// Keeps users and attributes present in both halves, iterated to a fixed
/// point (removing an attribute can orphan a user and vice versa).
std::pair<EventLog, EventLog> intersect_filter(const EventLog& train,
                                               const EventLog& test);

/// Assigns dense indices by first appearance in the train half.
IndexedCorpus index_corpus(EventLog train, EventLog test, TrainWindow window);

/// Builds T and L from train events; every timestamp must lie in the window.
DualMatrix build_matrices(const EventLog& train, const TrainWindow& window,
                          const IdIndex& users, const IdIndex& attrs);

// Prepared-corpus directory: users.tsv, attrs.tsv, train.csv, test.csv,
// window.txt (two lines: t_start, t_end).
void save_corpus_dir(const IndexedCorpus& corpus, const std::string& dir);
IndexedCorpus load_corpus_dir(const std::string& dir);

}  // namespace vimf

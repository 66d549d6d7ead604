#pragma once

// Interactive session: the current (shape, potential) with its mutation
// history. Replaying the history on the initial document reproduces the
// current state; the CLI and the server both mutate through this class.

#include <mutex>
#include <shared_mutex>

#include "qps/report.hpp"

namespace qps {

struct HistoryEntry {
  std::size_t vertex = 0;
  std::size_t pairs = 0;
  unsigned rounds = 0;
  /// exchange matrix after the step; empty when the result has 2-cycles
  std::optional<ExchangeMatrix> matrix;
};

class SessionState {
 public:
  struct Snapshot {
    ShapePtr shape;
    Series potential;
  };

  /// Loads the document and applies its history.
  explicit SessionState(InputDocument doc) : initial_(std::move(doc)) {
    if (!initial_.shape) throw EngineError("document without a shape");
    if (initial_.potential.shape_ptr() != initial_.shape) initial_.potential = Series(initial_.shape, initial_.truncation);
    stack_.push_back({initial_.shape, initial_.potential});
    const std::vector<std::size_t> replay = std::move(initial_.history);
    initial_.history.clear();
    for (auto k : replay) mutate(k);
  }

  Snapshot current() const {
    std::shared_lock lock(state_mutex_);
    return stack_.back();
  }
  std::vector<HistoryEntry> history() const {
    std::shared_lock lock(state_mutex_);
    return history_;
  }
  unsigned truncation() const { return initial_.truncation; }
  const InputDocument& initial() const { return initial_; }

  /// Applies mu-bar_k (0-based k) to the current potential. Throws
  /// PreconditionError when the mutation is undefined; the state is then
  /// unchanged.
  MutationResult mutate(std::size_t k) {
    const Snapshot cur = current();
    if (k >= cur.shape->vertex_count())
      throw PreconditionError("vertex " + std::to_string(k + 1) + " out of range 1.." + std::to_string(cur.shape->vertex_count()));
    MutationResult res = qps::mutate(cur.potential, k);
    HistoryEntry entry{k, res.split.pairs.size(), res.split.rounds, std::nullopt};
    if (res.two_acyclic) entry.matrix = exchange_matrix(*res.shape);
    std::unique_lock lock(state_mutex_);
    stack_.push_back({res.shape, res.potential});
    history_.push_back(std::move(entry));
    return res;
  }

  /// Reverts the last mutation; false when the history is empty.
  bool undo() {
    std::unique_lock lock(state_mutex_);
    if (history_.empty()) return false;
    stack_.pop_back();
    history_.pop_back();
    return true;
  }

  /// The initial document with the current history; loading it reproduces
  /// the current state.
  InputDocument save() const {
    InputDocument doc = initial_;
    for (const auto& h : history()) doc.history.push_back(h.vertex);
    return doc;
  }

  nlohmann::json state_json() const {
    const Snapshot cur = current();
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : history())
      hist.push_back({{"vertex", h.vertex + 1},
                      {"pairs", h.pairs},
                      {"rounds", h.rounds},
                      {"matrix", h.matrix ? report::matrix(*h.matrix) : nlohmann::json(nullptr)}});
    return {{"command", "state"},
            {"shape", report::shape(*cur.shape)},
            {"matrix", report::matrix_or_null(*cur.shape)},
            {"potential", report::series(cur.potential)},
            {"truncation", initial_.truncation},
            {"history", hist}};
  }

  /// Serializes mutations; the server uses try_lock on it to answer busy.
  std::mutex& mutation_mutex() { return mutation_mutex_; }

 private:
  InputDocument initial_;
  std::vector<Snapshot> stack_;
  std::vector<HistoryEntry> history_;
  mutable std::shared_mutex state_mutex_;
  std::mutex mutation_mutex_;
};

}  // namespace qps

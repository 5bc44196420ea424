// Small fluent builder for hand-written traces in tests. Reads take their
// value from a maintained replica of the state, so tests only say *where* a
// read looks, not what it must see.
#pragma once

#include <string>
#include <vector>

#include "traverselab/trace.hpp"

namespace tlab::test {

class TraceBuilder {
 public:
  explicit TraceBuilder(std::string structure, KeyRange keys = {})
      : started_(false) {
    tr_.structure = std::move(structure);
    tr_.keys = keys;
  }

  ObjId obj() { return tr_.initial.add_object(); }

  void init(ObjId o, Field f, Value v) { tr_.initial.set({o, f}, v); }

  void anchor(const std::string& name, ObjId o) { tr_.anchors[name] = o; }

  // Appends a write and returns its timestamp.
  i64 w(int thread, int op, Loc loc, Value v, std::string label = "",
        std::vector<std::pair<Loc, Value>> ghost = {}) {
    ensure_started();
    WriteEvent e;
    e.t = static_cast<i64>(tr_.writes.size()) + 1;
    e.thread = thread;
    e.op = op;
    e.loc = loc;
    e.val = v;
    e.label = std::move(label);
    e.ghost = std::move(ghost);
    while (loc.obj >= static_cast<ObjId>(cur_.n_objects())) cur_.add_object();
    cur_.set(loc, v);
    tr_.order.emplace_back(Trace::EvKind::W, tr_.writes.size());
    tr_.writes.push_back(std::move(e));
    return static_cast<i64>(tr_.writes.size());
  }

  // Appends a read of `loc` against the current state; returns the value.
  Value r(int thread, int op, Loc loc) {
    ensure_started();
    ReadEvent e;
    e.src_t = now();
    e.thread = thread;
    e.op = op;
    e.loc = loc;
    e.val = cur_.get(loc);
    tr_.order.emplace_back(Trace::EvKind::R, tr_.reads.size());
    tr_.reads.push_back(e);
    return e.val;
  }

  i64 now() const { return static_cast<i64>(tr_.writes.size()); }

  void inv(int op, int thread, const std::string& kind, i64 key) {
    ensure_started();
    tr_.order.emplace_back(Trace::EvKind::Inv, tr_.invs.size());
    tr_.invs.push_back({op, thread, kind, key, std::nullopt, now()});
  }

  void res(int op, Value ret) {
    ensure_started();
    tr_.order.emplace_back(Trace::EvKind::Res, tr_.ress.size());
    tr_.ress.push_back({op, ret, now()});
  }

  void rcu(bool enter, int thread, int op, int section) {
    ensure_started();
    tr_.order.emplace_back(Trace::EvKind::Rcu, tr_.rcus.size());
    tr_.rcus.push_back({enter, thread, op, now(), section});
  }

  TraversalRecord& trav(int op, int thread, const std::string& kind, i64 k,
                        i64 base) {
    tr_.order.emplace_back(Trace::EvKind::Trav, tr_.travs.size());
    TraversalRecord rec;
    rec.op = op;
    rec.thread = thread;
    rec.kind = kind;
    rec.k = k;
    rec.base = base;
    tr_.travs.push_back(std::move(rec));
    return tr_.travs.back();
  }

  Trace& trace() { return tr_; }
  const State& current() const { return cur_; }

 private:
  void ensure_started() {
    if (!started_) {
      cur_ = tr_.initial;
      started_ = true;
    }
  }
  Trace tr_;
  State cur_;
  bool started_;
};

}  // namespace tlab::test

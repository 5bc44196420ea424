// Reachability predicates and extend relations.
//
// A reach predicate holds of a location when some chain of locations connects
// a fixed entry point to it, each step justified by the current value of the
// stepped-from location. Evaluators compute the full closure of a state (the
// set of reachable locations) and memoize per timestamp; the acceptance suite
// cross-checks them against an independent path enumerator.
#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "traverselab/core.hpp"
#include "traverselab/trace.hpp"

namespace tlab {

// ---------------------------------------------------------------------------
// Extend relations: which locations a traversal may move to from (loc, value).

enum class ExtendKind {
  SuccK,     // successor-list search for key k: stop at the first key >= k
  TreePred,  // tree walk + predecessor hops, key comparisons unconstrained
  BstK,      // binary search for key k
  BstKEps,   // binary search for k+1/2: never stops on a key match
};

struct ExtendRel {
  ExtendKind kind;
  i64 k = 0;

  // Successor locations of `loc` given its current value.
  void succs(const Loc& loc, const Value& v, std::vector<Loc>& out) const {
    out.clear();
    if (loc.is_null_loc()) return;
    switch (kind) {
      case ExtendKind::SuccK:
        if (loc.field == Field::key) {
          if (v.as_int() < k) out.push_back({loc.obj, Field::succ});
        } else if (loc.field == Field::succ) {
          if (v.is_ref()) out.push_back({v.as_ref(), Field::key});
        }
        break;
      case ExtendKind::TreePred:
        if (loc.field == Field::key) {
          out.push_back({loc.obj, Field::left});
          out.push_back({loc.obj, Field::right});
          out.push_back({loc.obj, Field::pred});
        } else if (loc.field == Field::left || loc.field == Field::right ||
                   loc.field == Field::pred) {
          if (v.is_ref()) out.push_back({v.as_ref(), Field::key});
        }
        break;
      case ExtendKind::BstK:
      case ExtendKind::BstKEps:
        if (loc.field == Field::key) {
          i64 m = v.as_int();
          bool go_right = kind == ExtendKind::BstK ? m < k : m <= k;
          if (go_right) out.push_back({loc.obj, Field::right});
          else if (m > k) out.push_back({loc.obj, Field::left});
        } else if (loc.field == Field::left || loc.field == Field::right) {
          if (v.is_ref()) out.push_back({v.as_ref(), Field::key});
          else if (v.is_nil()) out.push_back(Loc::null_loc());
        }
        break;
    }
  }

  std::string name() const {
    switch (kind) {
      case ExtendKind::SuccK: return "succ_k";
      case ExtendKind::TreePred: return "treepred";
      case ExtendKind::BstK: return "bst_k";
      case ExtendKind::BstKEps: return "succ_k_eps";
    }
    return "?";
  }
};

// ---------------------------------------------------------------------------
// Ghost keys (Citrus). Ghost assignments ride on writes but never touch the
// base state; each traversal evaluates them against its own start time:
// an open assignment at t1 is visible at query time t iff s < t1 <= t and the
// matching collapse has not happened by t. The global view (s = -1) sees every
// assignment that has happened.

class GhostInfo {
 public:
  explicit GhostInfo(const Trace& tr) {
    for (const auto& w : tr.writes)
      for (const auto& [l, v] : w.ghost)
        if (l.field == Field::ghostKey)
          assigns_[l.obj].push_back({w.t, v.as_int()});
  }

  // Effective ghost key of `o` for a traversal started at s, queried at t.
  // `key` is the node's (immutable) key, used to classify open vs collapse.
  i64 effective(ObjId o, i64 key, i64 s, i64 t) const {
    auto it = assigns_.find(o);
    if (it == assigns_.end()) return key;
    const auto& v = it->second;
    // Last assignment at or before t.
    i64 val = key;
    i64 at = -1;
    for (const auto& [ta, gv] : v) {
      if (ta > t) break;
      val = gv;
      at = ta;
    }
    if (at < 0) return key;
    if (val == key) return key;  // collapse restores the key
    return at > s ? val : key;   // opens from before the view's start are unseen
  }

  bool empty() const { return assigns_.empty(); }

  // (t_open, t_collapse, obj) triples for grace-period checking; a missing
  // collapse is reported as t_end+1.
  std::vector<std::tuple<i64, i64, ObjId>> intervals(const Trace& tr) const {
    std::vector<std::tuple<i64, i64, ObjId>> out;
    StateCache sc(tr);
    const State& fin = sc.at(tr.t_end());
    for (const auto& [obj, v] : assigns_) {
      // The node's key is immutable from its publication on; read it from the
      // final state.
      i64 key = fin.key_of(obj);
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i].second == key) continue;  // collapse
        i64 close = tr.t_end() + 1;
        if (i + 1 < v.size()) close = v[i + 1].first;
        out.emplace_back(v[i].first, close, obj);
      }
    }
    return out;
  }

 private:
  std::unordered_map<ObjId, std::vector<std::pair<i64, i64>>> assigns_;
};

// ---------------------------------------------------------------------------
// Reach predicates.

enum class ReachKind {
  Succ,      // successor-list reachability, no key parameter
  SuccK,     // successor-list search for k
  BstK,      // binary search for k
  WeakK,     // Citrus relaxed binary search for k (ghost-aware)
  SuccKEps,  // binary search for k+1/2
};

inline std::string reach_name(ReachKind kind) {
  switch (kind) {
    case ReachKind::Succ: return "succ";
    case ReachKind::SuccK: return "succ_k";
    case ReachKind::BstK: return "bst_k";
    case ReachKind::WeakK: return "weak_k";
    case ReachKind::SuccKEps: return "succ_k_eps";
  }
  return "?";
}

// Closure of one state under a predicate's chain rules. `ghost_of` supplies
// effective ghost keys (only consulted by WeakK). The result is a bitset over
// loc_index; for Succ the closure is lifted: every field of a chain-reachable
// object is marked reachable, which is what makes compatibility with the
// tree/pred extend relation a meaningful invariant rather than a domain error.
inline std::vector<char> reach_closure(
    const State& s, ReachKind kind, i64 k, ObjId entry,
    const std::function<i64(ObjId, i64)>& ghost_of = {}) {
  std::vector<char> mark(loc_index_count(s.n_objects()), 0);
  if (static_cast<std::size_t>(entry) >= s.n_objects()) return mark;
  std::vector<Loc> stack;
  auto push = [&](const Loc& l) {
    std::size_t i = loc_index(l);
    if (!mark[i]) {
      mark[i] = 1;
      if (!l.is_null_loc()) stack.push_back(l);
    }
  };
  push({entry, Field::key});
  while (!stack.empty()) {
    Loc l = stack.back();
    stack.pop_back();
    if (!s.has(l)) continue;
    const Value& v = s.get(l);
    switch (kind) {
      case ReachKind::Succ:
        if (l.field == Field::key) {
          push({l.obj, Field::succ});
        } else if (l.field == Field::succ && v.is_ref()) {
          push({v.as_ref(), Field::key});
        }
        break;
      case ReachKind::SuccK:
        if (l.field == Field::key) {
          if (v.as_int() < k) push({l.obj, Field::succ});
        } else if (l.field == Field::succ && v.is_ref()) {
          push({v.as_ref(), Field::key});
        }
        break;
      case ReachKind::BstK:
      case ReachKind::SuccKEps: {
        if (l.field == Field::key) {
          i64 m = v.as_int();
          bool right = kind == ReachKind::BstK ? m < k : m <= k;
          bool left = m > k;
          if (right) push({l.obj, Field::right});
          else if (left) push({l.obj, Field::left});
        } else if (l.field == Field::left || l.field == Field::right) {
          if (v.is_ref()) push({v.as_ref(), Field::key});
          else if (v.is_nil()) push(Loc::null_loc());
        }
        break;
      }
      case ReachKind::WeakK: {
        if (l.field == Field::key) {
          i64 m = v.as_int();
          i64 g = ghost_of ? ghost_of(l.obj, m) : m;
          bool right = (k > g && k != m) || (k == m && g != m);
          bool left = k < m;
          if (right) push({l.obj, Field::right});
          if (left) push({l.obj, Field::left});
        } else if (l.field == Field::left || l.field == Field::right) {
          if (v.is_ref()) push({v.as_ref(), Field::key});
          else if (v.is_nil()) push(Loc::null_loc());
        }
        break;
      }
    }
  }
  if (kind == ReachKind::Succ) {
    for (std::size_t o = 0; o < s.n_objects(); ++o)
      if (mark[loc_index({static_cast<ObjId>(o), Field::key})])
        for (std::size_t f = 0; f < FIELD_COUNT; ++f)
          mark[loc_index({static_cast<ObjId>(o), static_cast<Field>(f)})] = 1;
  }
  return mark;
}

// Trace-bound evaluator with per-timestamp memoization. view_base = -1 gives
// the global ghost view; any other value evaluates ghosts as seen by a
// traversal started at that time.
class ReachEval {
 public:
  ReachEval(const Trace& tr, StateCache& sc, const GhostInfo& gi, ReachKind kind,
            i64 k, ObjId entry, i64 view_base = -1)
      : tr_(tr), sc_(sc), gi_(gi), kind_(kind), k_(k), entry_(entry),
        view_base_(view_base) {}

  ReachKind kind() const { return kind_; }
  i64 k() const { return k_; }
  i64 view_base() const { return view_base_; }
  std::string name() const { return reach_name(kind_); }

  const std::vector<char>& set_at(i64 t) {
    auto it = memo_.find(t);
    if (it != memo_.end()) return it->second;
    const State& s = sc_.at(t);
    std::function<i64(ObjId, i64)> ghost;
    if (kind_ == ReachKind::WeakK && !gi_.empty())
      ghost = [this, t](ObjId o, i64 key) {
        return gi_.effective(o, key, view_base_, t);
      };
    auto r = memo_.emplace(t, reach_closure(s, kind_, k_, entry_, ghost));
    return r.first->second;
  }

  bool holds(i64 t, const Loc& l) {
    const auto& set = set_at(t);
    std::size_t i = loc_index(l);
    return i < set.size() && set[i];
  }

 private:
  const Trace& tr_;
  StateCache& sc_;
  const GhostInfo& gi_;
  ReachKind kind_;
  i64 k_;
  ObjId entry_;
  i64 view_base_;
  std::unordered_map<i64, std::vector<char>> memo_;
};

}  // namespace tlab

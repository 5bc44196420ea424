// Linearizability checking, two independent ways: attribution of abstract-set
// changes to decisive writes (linear in trace length), and an enumerative
// linearization search over small histories. The two verdicts are compared on
// traces where both run.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "traverselab/checker.hpp"
#include "traverselab/core.hpp"
#include "traverselab/trace.hpp"

namespace tlab {

// ---------------------------------------------------------------------------
// Abstraction functions. Membership is defined by what a sequential search of
// the current state would conclude, one probe per candidate key.

inline bool abstract_member_chain(const State& s, ObjId head, i64 k) {
  ObjId o = head;
  for (int guard = 0; guard < 1 << 16; ++guard) {
    if (o == NULL_OBJ || static_cast<std::size_t>(o) >= s.n_objects())
      return false;
    i64 m = s.key_of(o);
    if (m >= k)
      return m == k && !s.get({o, Field::rem}).as_bool();
    const Value& nx = s.get({o, Field::succ});
    if (!nx.is_ref()) return false;
    o = nx.as_ref();
  }
  return false;
}

inline bool abstract_member_bst(const State& s, ObjId root, i64 k,
                                bool check_del) {
  ObjId o = root;
  for (int guard = 0; guard < 1 << 16; ++guard) {
    if (o == NULL_OBJ || static_cast<std::size_t>(o) >= s.n_objects())
      return false;
    i64 m = s.key_of(o);
    if (m == k) return !check_del || !s.get({o, Field::del_}).as_bool();
    const Value& nx = s.get({o, k < m ? Field::left : Field::right});
    if (!nx.is_ref()) return false;
    o = nx.as_ref();
  }
  return false;
}

// Membership reading of an operation's return value. Map-style contains
// returns the stored data on a hit, so any non-false value counts as present.
inline bool ret_member(const Value& v) {
  if (v.kind == Value::Kind::Bool) return v.num != 0;
  return !v.is_nil();
}

// The abstract set of a state, restricted to the workload's key range.
inline std::set<i64> abstract_set(const State& s, const std::string& structure,
                                  ObjId entry, const KeyRange& keys) {
  std::set<i64> a;
  for (i64 k = keys.lo; k <= keys.hi; ++k) {
    bool in;
    if (structure == "lazylist" || structure == "lotree")
      in = abstract_member_chain(s, entry, k);
    else if (structure == "cftree")
      in = abstract_member_bst(s, entry, k, /*check_del=*/true);
    else
      in = abstract_member_bst(s, entry, k, /*check_del=*/false);
    if (in) a.insert(k);
  }
  return a;
}

// Entry object of the abstraction walk.
inline ObjId abstraction_entry(const Trace& tr) {
  if (tr.structure == "lazylist" || tr.structure == "lotree")
    return tr.anchor("min");
  return tr.anchor("root");
}

// Labels of writes allowed to change the abstract set, per operation kind.
inline const std::vector<std::string>& decisive_labels(
    const std::string& structure, const std::string& kind) {
  static const std::vector<std::string> none;
  static const std::map<std::string, std::vector<std::string>> table = {
      {"lazylist/insert", {"insert:succ-publish"}},
      {"lazylist/delete", {"delete:rem-mark"}},
      {"lotree/insert", {"insert:succ-publish"}},
      {"lotree/delete", {"delete:rem-mark"}},
      {"cftree/insert", {"insert:tree-link", "insert:undelete"}},
      {"cftree/delete", {"delete:del-mark"}},
      {"citrus/insert", {"insert:link-left", "insert:link-right"}},
      {"citrus/delete", {"delete:bypass", "delete:link-w"}},
  };
  auto it = table.find(structure + "/" + kind);
  return it == table.end() ? none : it->second;
}

inline bool is_decisive_label(const std::string& structure,
                              const std::string& kind,
                              const std::string& label) {
  const auto& v = decisive_labels(structure, kind);
  for (const auto& l : v)
    if (l == label) return true;
  return false;
}

inline bool label_in_any_decisive_set(const std::string& structure,
                                      const std::string& label) {
  for (const char* kind : {"insert", "delete"})
    if (is_decisive_label(structure, kind, label)) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Effect-point linearizability: every change of the abstract set is the
// decisive write of the operation performing it, inside that operation's
// invocation window; return values agree with the abstract set at some moment
// of the window. Together this exhibits explicit linearization points.

inline void check_effect_points(const Trace& tr, StateCache& sc,
                                CheckResult& out) {
  i64 t_end = tr.t_end();
  ObjId entry = abstraction_entry(tr);
  std::map<int, int> changes_of_op;
  std::set<i64> prev = abstract_set(sc.at(0), tr.structure, entry, tr.keys);
  // Membership-at-some-point bookkeeping for return-value checks.
  std::vector<std::set<i64>> sets;
  sets.reserve(static_cast<std::size_t>(t_end) + 1);
  sets.push_back(prev);
  for (i64 t = 1; t <= t_end; ++t) {
    std::set<i64> cur = abstract_set(sc.at(t), tr.structure, entry, tr.keys);
    sets.push_back(cur);
    if (cur == prev) {
      prev = std::move(cur);
      continue;
    }
    const WriteEvent& w = tr.writes[static_cast<std::size_t>(t - 1)];
    std::vector<i64> added, removed;
    for (i64 k : cur)
      if (!prev.count(k)) added.push_back(k);
    for (i64 k : prev)
      if (!cur.count(k)) removed.push_back(k);
    auto fail = [&](const std::string& why) {
      out.violations.push_back({out.check, w.op, t, -1, w.loc, Loc::null_loc(),
                                w.label, "", why});
    };
    const OpInv* inv = w.op >= 0 ? tr.inv_of(w.op) : nullptr;
    if (!inv) {
      fail("abstract set changed by a write not owned by any operation");
    } else if (inv->kind == "insert" &&
               (added.size() != 1 || added[0] != inv->key ||
                !removed.empty())) {
      fail("insert changed the abstract set other than adding its key");
    } else if (inv->kind == "delete" &&
               (removed.size() != 1 || removed[0] != inv->key ||
                !added.empty())) {
      fail("delete changed the abstract set other than removing its key");
    } else if (inv->kind != "insert" && inv->kind != "delete") {
      fail("abstract set changed by a non-update operation");
    } else if (!is_decisive_label(tr.structure, inv->kind, w.label)) {
      fail("abstract set changed by a write that is not the decisive write");
    } else {
      const OpRes* res = tr.res_of(w.op);
      i64 hi = res ? res->t : t_end;
      if (t <= inv->t || t > hi)
        fail("decisive write lies outside the operation's window");
      changes_of_op[w.op]++;
      out.stats["effects"]++;
    }
    prev = std::move(cur);
  }
  for (const auto& inv : tr.invs) {
    if (inv.kind != "insert" && inv.kind != "delete" && inv.kind != "contains")
      continue;
    const OpRes* res = tr.res_of(inv.op);
    int n = changes_of_op.count(inv.op) ? changes_of_op[inv.op] : 0;
    auto fail = [&](const std::string& why) {
      out.violations.push_back({out.check, inv.op, inv.t,
                                res ? res->t : t_end, Loc::null_loc(),
                                Loc::null_loc(), "", "", why});
    };
    if (!res) {
      if (n > 1) fail("unfinished operation took effect more than once");
      continue;
    }
    bool ret = ret_member(res->ret);
    if (inv.kind == "contains") {
      if (n != 0) fail("contains changed the abstract set");
      bool seen = false;
      for (i64 t = inv.t; t <= res->t && !seen; ++t)
        seen = sets[static_cast<std::size_t>(t)].count(inv.key) ==
               static_cast<std::size_t>(ret ? 1 : 0);
      if (!seen)
        fail("contains result matches no state in its invocation window");
    } else if (ret) {
      if (n != 1) fail("successful update must take effect exactly once");
    } else {
      if (n != 0) fail("failed update must not change the abstract set");
      bool want = inv.kind == "insert";  // failed insert: key present
      bool seen = false;
      for (i64 t = inv.t; t <= res->t && !seen; ++t)
        seen = sets[static_cast<std::size_t>(t)].count(inv.key) ==
               static_cast<std::size_t>(want ? 1 : 0);
      if (!seen)
        fail("failed update justified by no state in its invocation window");
    }
  }
}

// Complement of the attribution check: writes outside every decisive label
// set never change the abstract set.
inline void check_abstraction_stability(const Trace& tr, StateCache& sc,
                                        CheckResult& out) {
  ObjId entry = abstraction_entry(tr);
  std::set<i64> prev = abstract_set(sc.at(0), tr.structure, entry, tr.keys);
  for (i64 t = 1; t <= tr.t_end(); ++t) {
    std::set<i64> cur = abstract_set(sc.at(t), tr.structure, entry, tr.keys);
    const WriteEvent& w = tr.writes[static_cast<std::size_t>(t - 1)];
    if (cur != prev && !label_in_any_decisive_set(tr.structure, w.label)) {
      out.violations.push_back(
          {out.check, w.op, t, -1, w.loc, Loc::null_loc(), w.label, "",
           "non-decisive write changed the abstract set"});
    }
    prev = std::move(cur);
  }
}

// Per-operation structural check on decisive writes: a successful update owns
// exactly one write carrying a decisive label, and it lies in the window.
inline void check_decisive_labels(const Trace& tr, CheckResult& out) {
  std::map<int, std::vector<const WriteEvent*>> dws;
  for (const auto& w : tr.writes) {
    if (w.op < 0) continue;
    const OpInv* inv = tr.inv_of(w.op);
    if (!inv) continue;
    if (is_decisive_label(tr.structure, inv->kind, w.label))
      dws[w.op].push_back(&w);
  }
  for (const auto& inv : tr.invs) {
    if (inv.kind != "insert" && inv.kind != "delete") continue;
    const OpRes* res = tr.res_of(inv.op);
    std::size_t n = dws.count(inv.op) ? dws[inv.op].size() : 0;
    if (!res) {
      if (n > 1)
        out.violations.push_back({out.check, inv.op, inv.t, -1,
                                  Loc::null_loc(), Loc::null_loc(), "", "",
                                  "unfinished update wrote two decisive "
                                  "writes"});
      continue;
    }
    bool ret = ret_member(res->ret);
    if (ret && n != 1) {
      out.violations.push_back(
          {out.check, inv.op, inv.t, res->t, Loc::null_loc(), Loc::null_loc(),
           "", "",
           "successful update carries " + std::to_string(n) +
               " decisive writes, expected exactly 1"});
    } else if (!ret && n != 0) {
      out.violations.push_back({out.check, inv.op, inv.t, res->t,
                                Loc::null_loc(), Loc::null_loc(), "", "",
                                "failed update carries a decisive write"});
    }
    if (ret && n == 1) {
      const WriteEvent* w = dws[inv.op][0];
      if (w->t <= inv.t || w->t > res->t)
        out.violations.push_back({out.check, inv.op, inv.t, w->t, w->loc,
                                  Loc::null_loc(), w->label, "",
                                  "decisive write outside operation window"});
      out.stats["decisive:" + w->label]++;
    }
  }
}

// ---------------------------------------------------------------------------
// Enumerative linearization search (small histories). Operations are ordered
// respecting real-time precedence; return values must match a sequential set.

struct LinOp {
  int op;
  std::string kind;  // insert | delete | contains
  i64 key;
  i64 inv_t;  // position in the serialized event order, not a write time
  i64 res_t;  // past-the-end position when still pending
  bool completed;
  bool ret;
};

namespace detail {

inline uint64_t lin_state_hash(uint32_t mask, const std::set<i64>& s) {
  uint64_t h = 1469598103934665603ull ^ mask;
  for (i64 k : s) {
    h ^= static_cast<uint64_t>(k) + 0x9e3779b97f4a7c15ull;
    h *= 1099511628211ull;
  }
  return h;
}

inline bool lin_dfs(const std::vector<LinOp>& ops, uint32_t done,
                    std::set<i64>& spec, std::unordered_set<uint64_t>& seen,
                    i64& budget) {
  bool all_completed_done = true;
  i64 min_res = -1;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (done & (1u << i)) continue;
    if (!ops[i].completed) continue;
    all_completed_done = false;
    if (min_res < 0 || ops[i].res_t < min_res) min_res = ops[i].res_t;
  }
  if (all_completed_done) return true;  // pending ops may simply never happen
  if (--budget <= 0) return false;
  uint64_t h = lin_state_hash(done, spec);
  if (!seen.insert(h).second) return false;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (done & (1u << i)) continue;
    const LinOp& o = ops[i];
    // o can go next only if no other unlinearized op finished before o began.
    if (o.inv_t > min_res) continue;
    bool member = spec.count(o.key) > 0;
    bool sret = o.kind == "insert" ? !member
                : o.kind == "delete" ? member
                                     : member;
    if (o.completed && sret != o.ret) continue;
    bool ins = o.kind == "insert" && !member;
    bool del = o.kind == "delete" && member;
    if (ins) spec.insert(o.key);
    if (del) spec.erase(o.key);
    if (lin_dfs(ops, done | (1u << i), spec, seen, budget)) return true;
    if (ins) spec.erase(o.key);
    if (del) spec.insert(o.key);
  }
  return false;
}

}  // namespace detail

// Runs the search when the history is small enough; records in stats whether
// it ran and what it concluded.
inline void check_lin_search(const Trace& tr, StateCache& sc,
                             std::size_t max_ops, CheckResult& out) {
  // Precedence must follow the serialized event order: two events can share a
  // write-timestamp when only reads separate them, so the order index is the
  // authoritative clock here.
  std::map<int, i64> inv_pos, res_pos;
  for (std::size_t i = 0; i < tr.order.size(); ++i) {
    auto [kind, idx] = tr.order[i];
    if (kind == Trace::EvKind::Inv) inv_pos[tr.invs[idx].op] = static_cast<i64>(i);
    else if (kind == Trace::EvKind::Res)
      res_pos[tr.ress[idx].op] = static_cast<i64>(i);
  }
  std::vector<LinOp> ops;
  for (const auto& inv : tr.invs) {
    if (inv.kind != "insert" && inv.kind != "delete" && inv.kind != "contains")
      continue;
    const OpRes* res = tr.res_of(inv.op);
    LinOp o{inv.op, inv.kind, inv.key, inv_pos[inv.op],
            res ? res_pos[inv.op] : static_cast<i64>(tr.order.size()) + 1,
            res != nullptr, res ? ret_member(res->ret) : false};
    ops.push_back(o);
  }
  if (ops.size() > max_ops) {
    out.stats["skipped_too_large"] = 1;
    return;
  }
  std::set<i64> spec = abstract_set(sc.at(0), tr.structure,
                                    abstraction_entry(tr), tr.keys);
  std::unordered_set<uint64_t> seen;
  i64 budget = 4000000;
  std::set<i64> work = spec;
  bool ok = detail::lin_dfs(ops, 0, work, seen, budget);
  out.stats["ran"] = 1;
  if (budget <= 0) {
    out.stats["budget_exhausted"] = 1;
    return;  // inconclusive; do not report a violation
  }
  if (!ok)
    out.violations.push_back({out.check, -1, -1, -1, Loc::null_loc(),
                              Loc::null_loc(), "", "",
                              "no linearization of the history exists"});
}

// Cross-validation: a successful effect-point argument PROVES the history
// linearizable, so the enumerative search must concur. The converse direction
// is not a fault: a history can be linearizable through points other than the
// decisive writes (that is precisely what some mutations exhibit), so that
// case is only counted in stats.
inline void check_lin_agreement(const CheckResult& search,
                                const CheckResult& effect, CheckResult& out) {
  if (!search.stats.count("ran") || search.stats.count("budget_exhausted"))
    return;
  bool s_ok = search.ok();
  bool e_ok = effect.ok();
  out.stats["compared"]++;
  if (e_ok && !s_ok)
    out.violations.push_back(
        {out.check, -1, -1, -1, Loc::null_loc(), Loc::null_loc(), "", "",
         "effect-point analysis proves linearizability but the enumerative "
         "search finds no linearization"});
  if (!e_ok && s_ok) out.stats["effect_stricter"]++;
}

}  // namespace tlab

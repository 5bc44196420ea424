// Independent reachability oracle used to validate the closure-based
// evaluators: enumerates every simple path from the entry location following
// the predicate's step rules, written from scratch on purpose (it shares no
// code with the library's evaluators).
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "traverselab/core.hpp"

namespace tlab::test {

namespace oracle_detail {

inline std::vector<Loc> steps(const State& s, const std::string& pred, i64 k,
                              const std::map<ObjId, i64>& ghost, const Loc& l) {
  std::vector<Loc> out;
  if (l.is_null_loc() || !s.has(l)) return out;
  const Value& v = s.get(l);
  auto follow_link = [&](bool null_to_nullloc) {
    if (v.kind == Value::Kind::Ref) out.push_back({v.as_ref(), Field::key});
    else if (v.is_nil() && null_to_nullloc) out.push_back(Loc::null_loc());
  };
  if (pred == "succ") {
    if (l.field == Field::key) out.push_back({l.obj, Field::succ});
    else if (l.field == Field::succ) follow_link(false);
  } else if (pred == "succ_k") {
    if (l.field == Field::key) {
      if (v.num < k) out.push_back({l.obj, Field::succ});
    } else if (l.field == Field::succ) {
      follow_link(false);
    }
  } else if (pred == "bst_k" || pred == "succ_k_eps") {
    if (l.field == Field::key) {
      i64 m = v.num;
      // bst_k compares against k; the eps variant against k + 1/2, so a key
      // equal to k still sends it right and nothing ever stops it.
      if (pred == "bst_k" ? m < k : m <= k) out.push_back({l.obj, Field::right});
      else if (m > k) out.push_back({l.obj, Field::left});
    } else if (l.field == Field::left || l.field == Field::right) {
      follow_link(true);
    }
  } else if (pred == "weak_k") {
    if (l.field == Field::key) {
      i64 m = v.num;
      i64 g = ghost.count(l.obj) ? ghost.at(l.obj) : m;
      if ((k > g && k != m) || (k == m && g != m))
        out.push_back({l.obj, Field::right});
      if (k < m) out.push_back({l.obj, Field::left});
    } else if (l.field == Field::left || l.field == Field::right) {
      follow_link(true);
    }
  }
  return out;
}

inline void walk(const State& s, const std::string& pred, i64 k,
                 const std::map<ObjId, i64>& ghost, const Loc& l,
                 std::set<Loc>& on_path, std::set<Loc>& seen) {
  seen.insert(l);
  for (const Loc& n : steps(s, pred, k, ghost, l)) {
    if (on_path.count(n)) continue;  // simple paths only
    on_path.insert(n);
    walk(s, pred, k, ghost, n, on_path, seen);
    on_path.erase(n);
  }
}

}  // namespace oracle_detail

// All locations on some simple path from (entry, key). For "succ" the result
// is lifted to every field of every object whose key location is on a path.
inline std::set<Loc> oracle_reach(const State& s, const std::string& pred,
                                  i64 k, ObjId entry,
                                  const std::map<ObjId, i64>& ghost = {}) {
  std::set<Loc> seen;
  if (static_cast<std::size_t>(entry) >= s.n_objects()) return seen;
  std::set<Loc> on_path;
  Loc e{entry, Field::key};
  on_path.insert(e);
  oracle_detail::walk(s, pred, k, ghost, e, on_path, seen);
  if (pred == "succ") {
    std::set<Loc> lifted;
    for (const Loc& l : seen) {
      if (l.is_null_loc()) { lifted.insert(l); continue; }
      if (l.field == Field::key)
        for (std::size_t f = 0; f < FIELD_COUNT; ++f)
          lifted.insert({l.obj, static_cast<Field>(f)});
      else
        lifted.insert(l);
    }
    // The chain's succ fields are already covered by the per-object lift.
    return lifted;
  }
  return seen;
}

}  // namespace tlab::test

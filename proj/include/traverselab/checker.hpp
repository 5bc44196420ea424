// Write-level checks: traversal correctness (directly and via the inference
// theorem), single-step compatibility, the forepassed family, and
// reachability-with-field witnesses. All checks consume a recorded trace and
// report violations; they never mutate the trace.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "traverselab/core.hpp"
#include "traverselab/reach.hpp"
#include "traverselab/trace.hpp"

namespace tlab {

struct Violation {
  std::string check;
  int op = -1;
  i64 t = -1;   // primary time (write time, step time, ...)
  i64 t2 = -1;  // secondary time (later write, window end, ...)
  Loc loc = Loc::null_loc();
  Loc loc2 = Loc::null_loc();
  std::string label;   // label of the write at t, when applicable
  std::string label2;  // label of the write at t2, when applicable
  std::string detail;

  json to_json() const {
    json j{{"check", check}, {"detail", detail}};
    if (op >= 0) j["op"] = op;
    if (t >= 0) j["t"] = t;
    if (t2 >= 0) j["t2"] = t2;
    if (!(loc == Loc::null_loc()) || !(loc2 == Loc::null_loc())) {
      j["loc"] = loc.repr();
      if (!(loc2 == Loc::null_loc())) j["loc2"] = loc2.repr();
    }
    if (!label.empty()) j["label"] = label;
    if (!label2.empty()) j["label2"] = label2;
    return j;
  }
};

struct CheckResult {
  std::string check;
  std::vector<Violation> violations;
  std::map<std::string, i64> stats;
  // Advisory results report conditions the structure does not claim; their
  // violations are findings, not failures, and do not gate a verdict.
  bool advisory = false;
  bool ok() const { return violations.empty(); }
};

// ---------------------------------------------------------------------------
// Past operators.

inline std::optional<i64> earliest_witness(ReachEval& ev, i64 lo, i64 hi,
                                           const Loc& l, i64 t_end) {
  lo = std::max<i64>(lo, 0);
  hi = std::min<i64>(hi, t_end);
  for (i64 t = lo; t <= hi; ++t)
    if (ev.holds(t, l)) return t;
  return std::nullopt;
}

inline bool past_holds(ReachEval& ev, i64 lo, i64 hi, const Loc& l, i64 t_end) {
  return earliest_witness(ev, lo, hi, l, t_end).has_value();
}

// ---------------------------------------------------------------------------
// Traversal correctness, checked directly against the definition: with base
// time ts, every location the traversal moves to must have been reachable at
// some point between ts and the read that moved there, and each move must be
// justified by the value the trace holds at the read's time.

inline void check_traversal_direct(const Trace& tr, StateCache& sc,
                                   const TraversalRecord& rec,
                                   const ExtendRel& rel, ReachEval& ev,
                                   i64 t_star, CheckResult& out) {
  i64 t_end = tr.t_end();
  out.stats["traversals"]++;
  if (rec.steps.empty() && !rec.final_loc) return;
  Loc entry = rec.steps.empty() ? *rec.final_loc : rec.steps.front().loc;
  if (!ev.holds(std::min(t_star, t_end), entry)) {
    out.violations.push_back({out.check, rec.op, t_star, -1, entry,
                              Loc::null_loc(), "", "",
                              "entry location not reachable at base time"});
    return;
  }
  i64 prev_t = t_star;
  std::vector<Loc> nexts;
  for (std::size_t i = 0; i < rec.steps.size(); ++i) {
    const TravStep& st = rec.steps[i];
    if (st.t < prev_t) {
      out.violations.push_back({out.check, rec.op, st.t, prev_t, st.loc,
                                Loc::null_loc(), "", "",
                                "step times not monotone"});
      return;
    }
    prev_t = st.t;
    std::optional<Loc> next;
    if (i + 1 < rec.steps.size()) next = rec.steps[i + 1].loc;
    else if (rec.final_loc) next = *rec.final_loc;
    if (!next) break;  // op cut off mid-walk; nothing left to justify
    const State& s = sc.at(st.t);
    if (!s.has(st.loc)) {
      out.violations.push_back({out.check, rec.op, st.t, -1, st.loc,
                                Loc::null_loc(), "", "",
                                "step reads a location absent from the state"});
      return;
    }
    rel.succs(st.loc, s.get(st.loc), nexts);
    if (std::find(nexts.begin(), nexts.end(), *next) == nexts.end()) {
      out.violations.push_back(
          {out.check, rec.op, st.t, -1, st.loc, *next, "", "",
           "move not justified by the value read (extend relation)"});
      return;
    }
    if (!past_holds(ev, t_star, st.t, *next, t_end)) {
      out.violations.push_back(
          {out.check, rec.op, st.t, t_star, st.loc, *next, "", "",
           "target never reachable in [base, step] window"});
      out.stats["reach_failures"]++;
    }
  }
}

// ---------------------------------------------------------------------------
// Single-step compatibility: in every state, extensions of reachable
// locations are themselves reachable in that same state.

inline void check_compat(const Trace& tr, StateCache& sc, const ExtendRel& rel,
                         ReachEval& ev, CheckResult& out, i64 t_lo = 0,
                         i64 t_hi = -1) {
  i64 t_end = tr.t_end();
  if (t_hi < 0) t_hi = t_end;
  std::vector<Loc> nexts;
  for (i64 t = std::max<i64>(t_lo, 0); t <= std::min(t_hi, t_end); ++t) {
    const auto& set = ev.set_at(t);
    const State& s = sc.at(t);
    out.stats["states"]++;
    for (std::size_t o = 0; o < s.n_objects(); ++o) {
      for (std::size_t f = 0; f < FIELD_COUNT; ++f) {
        Loc l{static_cast<ObjId>(o), static_cast<Field>(f)};
        std::size_t idx = loc_index(l);
        if (idx >= set.size() || !set[idx]) continue;
        if (!s.has(l)) continue;
        rel.succs(l, s.get(l), nexts);
        for (const Loc& n : nexts) {
          if (!ev.holds(t, n)) {
            out.violations.push_back(
                {out.check, -1, t, -1, l, n, "", "",
                 "reachable location extends to unreachable location"});
            if (out.violations.size() >= 32) return;
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Forepassed conditions. An index of writes by location lets each reducing
// write scan only the writes that actually touch its reduced locations.

class WriteIndex {
 public:
  explicit WriteIndex(const Trace& tr) {
    for (const auto& w : tr.writes) by_loc_[w.loc].push_back(w.t);
  }
  // Times in [lo, hi] at which `l` is written, ascending.
  std::vector<i64> times(const Loc& l, i64 lo, i64 hi) const {
    std::vector<i64> out;
    auto it = by_loc_.find(l);
    if (it == by_loc_.end()) return out;
    for (i64 t : it->second)
      if (t >= lo && t <= hi) out.push_back(t);
    return out;
  }

 private:
  std::map<Loc, std::vector<i64>> by_loc_;
};

// `strong`: reduced locations must not be written at all in [t, hi].
// Otherwise (general forepassed): each later write to a reduced location must
// point only to locations reachable somewhere in [t-1, t'].
// The window [w_lo, w_hi] restricts both which writes are examined and how far
// the later-write scan extends; defaults cover the whole trace.
inline void check_forepassed(const Trace& tr, StateCache& sc,
                             const ExtendRel& rel, ReachEval& ev,
                             const WriteIndex& wix, bool strong,
                             CheckResult& out, i64 w_lo = 1, i64 w_hi = -1) {
  i64 t_end = tr.t_end();
  if (w_hi < 0) w_hi = t_end;
  std::vector<Loc> nexts;
  for (const auto& w : tr.writes) {
    i64 t = w.t;
    if (t < w_lo || t > w_hi) continue;
    const auto& before = ev.set_at(t - 1);
    const auto& after = ev.set_at(t);
    // Locations reduced by w.
    std::size_t n = std::max(before.size(), after.size());
    for (std::size_t idx = 0; idx < n; ++idx) {
      bool was = idx < before.size() && before[idx];
      bool is = idx < after.size() && after[idx];
      if (!was || is) continue;
      Loc l = loc_from_index(idx);
      out.stats["reductions"]++;
      for (i64 t2 : wix.times(l, t, w_hi)) {
        const WriteEvent& w2 = tr.writes[static_cast<std::size_t>(t2 - 1)];
        if (strong) {
          out.violations.push_back(
              {out.check, w2.op, t, t2, l, Loc::null_loc(), w.label, w2.label,
               "reduced location is written afterwards"});
          out.stats["cited:" + (w2.label.empty() ? "?" : w2.label)]++;
          continue;
        }
        rel.succs(l, w2.val, nexts);
        for (const Loc& n2 : nexts) {
          if (!past_holds(ev, t - 1, t2, n2, t_end)) {
            out.violations.push_back(
                {out.check, w2.op, t, t2, l, n2, w.label, w2.label,
                 "later write to reduced location points to a location never "
                 "reachable in [t-1, t']"});
            out.stats["cited:" + (w2.label.empty() ? "?" : w2.label)]++;
          }
        }
      }
    }
    if (out.violations.size() >= 256) return;
  }
}

// Field variant: if a write reduces reachability of (o, reach_field), then
// (o, value_field) must not be written from that point on.
inline void check_field_forepassed(const Trace& tr, StateCache& sc,
                                   ReachEval& ev, const WriteIndex& wix,
                                   Field reach_field, Field value_field,
                                   CheckResult& out) {
  i64 t_end = tr.t_end();
  for (const auto& w : tr.writes) {
    i64 t = w.t;
    const auto& before = ev.set_at(t - 1);
    const auto& after = ev.set_at(t);
    std::size_t n = std::max(before.size(), after.size());
    for (std::size_t idx = 0; idx < n; ++idx) {
      bool was = idx < before.size() && before[idx];
      bool is = idx < after.size() && after[idx];
      if (!was || is) continue;
      Loc l = loc_from_index(idx);
      if (l.is_null_loc() || l.field != reach_field) continue;
      Loc fl{l.obj, value_field};
      for (i64 t2 : wix.times(fl, t, t_end)) {
        const WriteEvent& w2 = tr.writes[static_cast<std::size_t>(t2 - 1)];
        out.violations.push_back(
            {out.check, w2.op, t, t2, l, fl, w.label, w2.label,
             "field written after reachability of its object was reduced"});
      }
    }
    if (out.violations.size() >= 256) return;
  }
}

// ---------------------------------------------------------------------------
// Reachability-with-field witness: given that the object at `l` was reachable
// at t_reach and (obj, field) reads v at t_read, some single state in
// [t_reach, t_read] must exhibit reachability and the field value together.
// Returns the witness time if found.
inline std::optional<i64> find_field_witness(const Trace& tr, StateCache& sc,
                                             ReachEval& ev, const Loc& l,
                                             Field field, const Value& v,
                                             i64 t_reach, i64 t_read) {
  i64 t_end = tr.t_end();
  i64 hi = std::min(t_read, t_end);
  for (i64 t = std::max<i64>(t_reach, 0); t <= hi; ++t) {
    if (!ev.holds(t, l)) continue;
    const State& s = sc.at(t);
    Loc fl{l.obj, field};
    if (s.has(fl) && s.get(fl) == v) return t;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// The bridging lemma behind the inference theorem, checked by brute force on
// small traces: once a location is reachable, it forever after points only to
// locations that were reachable at some time since the base. Quadratic in
// trace length; intended for unit tests and small exploration traces.
inline void check_lemma_points(const Trace& tr, StateCache& sc,
                               const ExtendRel& rel, ReachEval& ev,
                               CheckResult& out, i64 budget = 2000000) {
  i64 t_end = tr.t_end();
  std::vector<Loc> nexts;
  i64 spent = 0;
  for (i64 t = 0; t <= t_end; ++t) {
    const auto& set = ev.set_at(t);
    std::vector<Loc> reached;
    for (std::size_t idx = 0; idx < set.size(); ++idx)
      if (set[idx] && !loc_from_index(idx).is_null_loc())
        reached.push_back(loc_from_index(idx));
    for (i64 t2 = t; t2 <= t_end; ++t2) {
      const State& s = sc.at(t2);
      for (const Loc& l : reached) {
        if (!s.has(l)) continue;
        rel.succs(l, s.get(l), nexts);
        for (const Loc& n : nexts) {
          if (++spent > budget) return;
          if (!past_holds(ev, 0, t2, n, t_end)) {
            out.violations.push_back(
                {out.check, -1, t, t2, l, n, "", "",
                 "once-reachable location points to never-reachable target"});
            if (out.violations.size() >= 8) return;
          }
        }
      }
    }
  }
}

}  // namespace tlab

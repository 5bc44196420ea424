// Scripted interference scenarios. Each one stages a documented interaction
// with a fixed schedule, then asserts the verdict pairing it exists to
// demonstrate:
//
//   lo-rotation-recovery  a pred-walk thrown off-track by a concurrent
//                         rotation climbs back via pred pointers and still
//                         answers correctly; the full battery stays green
//   cf-backtrack          backtracking pointers left on a removed node fail
//                         the strong forepassed condition at exactly those
//                         writes while the plain forepassed condition holds
//   citrus-weakreach      a reader caught at a node being replaced reaches a
//                         copy that plain binary-search reachability never
//                         justifies; the ghost-aware weak predicate does
#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "traverselab/battery.hpp"
#include "traverselab/explore.hpp"
#include "traverselab/runtime.hpp"

namespace tlab {

struct ScenarioOutcome {
  std::string name;
  bool pass = true;
  std::vector<std::string> notes;  // one "ok:"/"FAIL:" line per assertion
  Trace trace;
  BatteryReport battery;

  void expect(bool cond, const std::string& what) {
    notes.push_back(std::string(cond ? "ok:   " : "FAIL: ") + what);
    pass = pass && cond;
  }

  json to_json() const {
    return {{"scenario", name},
            {"pass", pass},
            {"notes", notes},
            {"battery", battery.to_json()}};
  }
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> v = {
      "lo-rotation-recovery", "cf-backtrack", "citrus-weakreach"};
  return v;
}

namespace detail {

inline std::optional<Value> ret_of(const Trace& tr, int thread,
                                   const std::string& kind, i64 key) {
  for (const auto& inv : tr.invs) {
    if (inv.thread != thread || inv.kind != kind || inv.key != key) continue;
    const OpRes* res = tr.res_of(inv.op);
    if (res) return res->ret;
  }
  return std::nullopt;
}

inline const TraversalRecord* record_of(const Trace& tr, int thread,
                                        const std::string& kind) {
  for (const auto& inv : tr.invs) {
    if (inv.thread != thread) continue;
    for (const auto& tv : tr.travs)
      if (tv.op == inv.op && tv.kind == kind) return &tv;
  }
  return nullptr;
}

inline void stage(ScenarioOutcome& out, const Workload& wl,
                  std::vector<ScriptStep> steps) {
  ScriptPolicy pol(std::move(steps));
  RunResult rr = run_workload(wl, pol, engine_config(wl));
  out.expect(rr.outcome == Outcome::Complete,
             std::string("run completes (") + outcome_name(rr.outcome) + ")");
  out.expect(!pol.stuck(), "scripted schedule is feasible");
  out.expect(pol.complete(), "script plays out to its last phase");
  out.trace = std::move(rr.trace);
}

}  // namespace detail

// A contains descends the tree index, a rotation empties the slot it was
// about to enter, and the walk recovers by following pred pointers.
inline ScenarioOutcome scenario_lo_rotation_recovery() {
  ScenarioOutcome out;
  out.name = "lo-rotation-recovery";
  Workload wl;
  wl.structure = "lotree";
  wl.keys = {1, 4};
  wl.initial = {3, 2, 1};  // index: 3 above 2 above 1
  wl.threads = {{{"contains", 1}}, {{"rotate", 3}}};
  detail::stage(out, wl,
                {{0, StopCond::read_field(Field::key, Value::integer(2))},
                 {1, StopCond::thread_done()},
                 {0, StopCond::thread_done()}});
  auto ret = detail::ret_of(out.trace, 0, "contains", 1);
  out.expect(ret && ret->as_bool(), "contains(1) still answers true");
  auto rot = detail::ret_of(out.trace, 1, "rotate", 3);
  out.expect(rot && rot->as_bool(), "rotation applies");
  const TraversalRecord* rec = detail::record_of(out.trace, 0, "treepred");
  bool pred_hop = false;
  if (rec)
    for (const auto& st : rec->steps) pred_hop |= st.loc.field == Field::pred;
  out.expect(pred_hop, "the walk left the index and followed a pred pointer");
  out.battery = run_battery(out.trace);
  out.expect(out.battery.ok(), "full battery green despite the detour");
  return out;
}

// A logically deleted node is physically removed under a reader parked
// inside it; the backtracking pointers let the reader climb out, and they
// are exactly the writes the strong forepassed condition rejects.
inline ScenarioOutcome scenario_cf_backtrack() {
  ScenarioOutcome out;
  out.name = "cf-backtrack";
  Workload wl;
  wl.structure = "cftree";
  wl.keys = {1, 6};
  wl.initial = {2, 5};
  wl.threads = {{{"contains", 4}}, {{"delete", 5}, {"remove-right", 5}}};
  detail::stage(out, wl,
                {{0, StopCond::read_field(Field::key, Value::integer(5))},
                 {1, StopCond::thread_done()},
                 {0, StopCond::thread_done()}});
  auto ret = detail::ret_of(out.trace, 0, "contains", 4);
  out.expect(ret && !ret->as_bool(), "contains(4) answers false");
  auto del = detail::ret_of(out.trace, 1, "delete", 5);
  out.expect(del && del->as_bool(), "delete(5) succeeds");
  auto rem = detail::ret_of(out.trace, 1, "remove-right", 5);
  out.expect(rem && rem->as_bool(), "physical removal applies");
  out.battery = run_battery(out.trace);
  const CheckResult* strong = out.battery.find("strong-forepassed");
  const CheckResult* plain = out.battery.find("forepassed");
  out.expect(plain && plain->ok(), "forepassed holds");
  out.expect(strong && !strong->ok(), "strong forepassed is violated");
  std::set<std::string> labels;
  if (strong)
    for (const auto& v : strong->violations) labels.insert(v.label2);
  out.expect(labels == std::set<std::string>{"remove:backtrack-l",
                                             "remove:backtrack-r"},
             "violations sit exactly on the two backtracking writes");
  bool rest = true;
  for (const auto& r : out.battery.results)
    if (r.check != "strong-forepassed") rest &= r.ok();
  out.expect(rest, "every other check stays green");
  return out;
}

// Two overlapping two-child removals: the second links its successor copy
// into a subtree whose plain reachability the first removal already reduced.
// A reader caught at the first victim walks into that copy. Plain binary
// search reachability rejects both the walk and the link write; the
// ghost-aware weak predicate accepts the whole trace.
inline ScenarioOutcome scenario_citrus_weakreach() {
  ScenarioOutcome out;
  out.name = "citrus-weakreach";
  Workload wl;
  wl.structure = "citrus";
  wl.keys = {1, 12};
  // shape: 2 carries (1, 12); 12.left = 10; 10 carries (8, 11); 8.left = 4.
  // deleting 2 ghosts a copy keyed 4 over (2,4]; deleting 10 links a copy
  // keyed 11 at 12.left, inside the subtree that reduction cut off
  wl.initial = {2, 1, 12, 10, 8, 11, 4};
  wl.threads = {{{"contains", 3}}, {{"delete", 2}}, {{"delete", 10}}};
  detail::stage(out, wl,
                {{0, StopCond::read_field(Field::key, Value::integer(2))},
                 {1, StopCond::write_label("delete:link-w")},
                 {2, StopCond::write_label("delete:link-w")},
                 {0, StopCond::thread_done()},
                 {2, StopCond::thread_done()},
                 {1, StopCond::thread_done()}});
  auto ret = detail::ret_of(out.trace, 0, "contains", 3);
  out.expect(ret && !ret->as_bool(), "contains(3) answers false");
  auto d2 = detail::ret_of(out.trace, 1, "delete", 2);
  auto d10 = detail::ret_of(out.trace, 2, "delete", 10);
  out.expect(d2 && d2->as_bool() && d10 && d10->as_bool(),
             "both removals succeed");
  out.battery = run_battery(out.trace);
  out.expect(out.battery.ok(),
             "battery green under the weak predicate and per-view ghosts");
  // The paired run: the same trace against plain binary-search reachability.
  const TraversalRecord* rec = detail::record_of(out.trace, 0, "locate");
  out.expect(rec != nullptr, "the reader's walk was recorded");
  if (rec) {
    StateCache sc(out.trace);
    GhostInfo gi(out.trace);
    ObjId entry = abstraction_entry(out.trace);
    ReachEval bst(out.trace, sc, gi, ReachKind::BstK, rec->k, entry);
    ExtendRel rel{ExtendKind::BstK, rec->k};
    CheckResult dir;
    dir.check = "traversal-direct";
    check_traversal_direct(out.trace, sc, *rec, rel, bst, rec->base, dir);
    out.expect(!dir.ok(),
               "plain reachability rejects the step into the new copy");
    WriteIndex wix(out.trace);
    CheckResult fp;
    fp.check = "forepassed";
    check_forepassed(out.trace, sc, rel, bst, wix, false, fp);
    out.expect(!fp.ok(), "plain reachability fails the forepassed condition");
  }
  return out;
}

inline ScenarioOutcome run_scenario(const std::string& name) {
  if (name == "lo-rotation-recovery") return scenario_lo_rotation_recovery();
  if (name == "cf-backtrack") return scenario_cf_backtrack();
  if (name == "citrus-weakreach") return scenario_citrus_weakreach();
  ScenarioOutcome out;
  out.name = name;
  out.expect(false, "unknown scenario: " + name);
  return out;
}

}  // namespace tlab

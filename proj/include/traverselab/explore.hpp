// Trace generation: bounded exhaustive interleaving exploration, seeded
// random stress, and the mutation registry. Scripted scenarios live in
// scenarios.hpp.
//
// Exhaustive mode is stateless depth-first search over scheduling decisions:
// each run replays a decision prefix and extends it greedily; afterwards the
// deepest decision with an untried enabled alternative spawns the next
// prefix. The engine records the enabled set after preemption-bound
// filtering, so bounded exploration backtracks only over bounded schedules.
#pragma once

#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "traverselab/runtime.hpp"
#include "traverselab/structures.hpp"
#include "traverselab/trace.hpp"

namespace tlab {

// ---------------------------------------------------------------------------
// Mutation registry.

struct Mutation {
  std::string name;
  std::vector<std::string> structures;
  std::string what;
};

inline const std::vector<Mutation>& mutation_registry() {
  static const std::vector<Mutation> v = {
      {"orig-insert-order",
       {"lotree"},
       "publish tree and pred links before the succ list sees the node"},
      {"skip-mark",
       {"lotree", "lazylist"},
       "unlink without setting the removed flag first"},
      {"no-grace-period",
       {"citrus"},
       "skip the grace-period wait between unlink and reuse"},
  };
  return v;
}

inline const Mutation* find_mutation(const std::string& name) {
  for (const auto& m : mutation_registry())
    if (m.name == name) return &m;
  return nullptr;
}

inline bool mutation_applies(const std::string& name,
                             const std::string& structure) {
  const Mutation* m = find_mutation(name);
  if (!m) return false;
  for (const auto& s : m->structures)
    if (s == structure) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Workloads.

struct WorkloadOp {
  std::string kind;
  i64 key = 0;
  std::optional<i64> data;
};

struct Workload {
  std::string structure = "lazylist";
  KeyRange keys{1, 4};
  std::vector<i64> initial;  // keys present before the threads start
  std::vector<std::vector<WorkloadOp>> threads;
  std::string mutation;
  u64 seed = 1;
  // bounds
  i64 max_traces = 1'000'000;
  int preemption_bound = -1;
  int restart_bound = 8;
  i64 max_steps_per_op = 5000;
  bool free_running = false;

  void validate() const {
    if (threads.empty()) throw std::invalid_argument("workload: no threads");
    if (threads.size() > 8)
      throw std::invalid_argument("workload: too many threads");
    bool known = false;
    for (const auto& s : structure_names()) known |= s == structure;
    if (!known)
      throw std::invalid_argument("workload: unknown structure " + structure);
    if (keys.lo > keys.hi) throw std::invalid_argument("workload: empty key range");
    if (!mutation.empty() && !mutation_applies(mutation, structure))
      throw std::invalid_argument("workload: mutation " + mutation +
                                  " not registered for " + structure);
    for (const auto& th : threads)
      for (const auto& o : th)
        if (!structure_has_op(structure, o.kind))
          throw std::invalid_argument("workload: " + structure + " has no op " +
                                      o.kind);
    for (i64 k : initial)
      if (k < keys.lo || k > keys.hi)
        throw std::invalid_argument("workload: initial key outside domain");
  }

  json to_json() const {
    json ths = json::array();
    for (const auto& th : threads) {
      json ops = json::array();
      for (const auto& o : th) {
        json jo = {{"kind", o.kind}, {"key", o.key}};
        if (o.data) jo["data"] = *o.data;
        ops.push_back(jo);
      }
      ths.push_back(ops);
    }
    return {{"structure", structure},
            {"keys", {{"lo", keys.lo}, {"hi", keys.hi}}},
            {"initial", initial},
            {"threads", ths},
            {"mutation", mutation},
            {"seed", seed},
            {"bounds",
             {{"max_traces", max_traces},
              {"preemptions", preemption_bound},
              {"restarts", restart_bound},
              {"max_steps_per_op", max_steps_per_op}}},
            {"free_running", free_running}};
  }

  static Workload from_json(const json& j) {
    Workload wl;
    wl.structure = j.at("structure").get<std::string>();
    if (j.contains("keys")) {
      wl.keys.lo = j["keys"].at("lo").get<i64>();
      wl.keys.hi = j["keys"].at("hi").get<i64>();
    }
    if (j.contains("initial")) wl.initial = j["initial"].get<std::vector<i64>>();
    for (const auto& th : j.at("threads")) {
      std::vector<WorkloadOp> ops;
      for (const auto& jo : th) {
        WorkloadOp o;
        o.kind = jo.at("kind").get<std::string>();
        o.key = jo.at("key").get<i64>();
        if (jo.contains("data")) o.data = jo["data"].get<i64>();
        ops.push_back(std::move(o));
      }
      wl.threads.push_back(std::move(ops));
    }
    if (j.contains("mutation")) wl.mutation = j["mutation"].get<std::string>();
    if (j.contains("mutations") && !j["mutations"].empty())
      wl.mutation = j["mutations"].at(0).get<std::string>();
    if (j.contains("seed")) wl.seed = j["seed"].get<u64>();
    if (j.contains("bounds")) {
      const json& b = j["bounds"];
      if (b.contains("max_traces")) wl.max_traces = b["max_traces"].get<i64>();
      if (b.contains("preemptions"))
        wl.preemption_bound = b["preemptions"].get<int>();
      if (b.contains("restarts")) wl.restart_bound = b["restarts"].get<int>();
      if (b.contains("max_steps_per_op"))
        wl.max_steps_per_op = b["max_steps_per_op"].get<i64>();
    }
    if (j.contains("free_running"))
      wl.free_running = j["free_running"].get<bool>();
    wl.validate();
    return wl;
  }
};

inline EngineConfig engine_config(const Workload& wl) {
  EngineConfig cfg;
  cfg.n_threads = static_cast<int>(wl.threads.size());
  cfg.preemption_bound = wl.preemption_bound;
  cfg.restart_bound = wl.restart_bound;
  cfg.max_steps_per_op = wl.max_steps_per_op;
  cfg.mutation = wl.mutation;
  cfg.free_running = wl.free_running;
  return cfg;
}

inline PlannedOp plan_workload_op(const Engine& eng, const Workload& wl,
                                  const WorkloadOp& o) {
  PlannedOp p = plan_op(eng, wl.structure, o.kind, o.key);
  if (o.data && wl.structure == "citrus" && o.kind == "insert") {
    ObjId root = eng.anchor("root");
    i64 k = o.key, d = *o.data;
    p.data = d;
    p.body = [=](OpCtx& c) { return citrus::insert(c, root, k, d); };
  }
  return p;
}

inline std::vector<std::vector<PlannedOp>> workload_plans(const Engine& eng,
                                                          const Workload& wl) {
  std::vector<std::vector<PlannedOp>> plans;
  for (const auto& th : wl.threads) {
    std::vector<PlannedOp> ops;
    for (const auto& o : th) ops.push_back(plan_workload_op(eng, wl, o));
    plans.push_back(std::move(ops));
  }
  return plans;
}

// One run of the workload under the given policy, from a fresh heap.
inline RunResult run_workload(const Workload& wl, SchedPolicy& pol,
                              EngineConfig cfg) {
  Engine eng(wl.structure, wl.keys, cfg, &pol);
  setup_structure(eng, wl.structure, wl.initial);
  return eng.run(workload_plans(eng, wl));
}

// ---------------------------------------------------------------------------
// Exhaustive exploration.

struct ExploreStats {
  i64 traces = 0;
  i64 complete = 0;
  i64 deadlock = 0;
  i64 livelock_pruned = 0;  // restart-bound exceedances
  i64 step_pruned = 0;
  i64 decision_points = 0;
  bool exhausted = true;  // false: guard tripped or the sink stopped early

  json to_json() const {
    return {{"traces", traces},
            {"complete", complete},
            {"deadlock", deadlock},
            {"livelock_pruned", livelock_pruned},
            {"step_pruned", step_pruned},
            {"decision_points", decision_points},
            {"exhausted", exhausted}};
  }
};

// Sink sees every run, whatever its outcome; return false to stop.
using TraceSink = std::function<bool(RunResult&)>;

struct DfsStats {
  i64 runs = 0;
  bool exhausted = true;   // false: run limit hit or the sink stopped early
  bool diverged = false;   // a replayed prefix failed to reproduce
};

// DFS over the schedule tree of any replayable run function. Each pass
// replays a prefix of choices and continues lowest-thread-first; backtracking
// bumps the deepest decision that still has an untried enabled alternative.
// max_runs of 0 means unlimited.
template <class RunFn>
DfsStats dfs_explore(RunFn&& run, i64 max_runs, const TraceSink& sink) {
  DfsStats st;
  std::vector<int> prefix;
  for (;;) {
    ReplayPolicy pol(prefix);
    RunResult rr = run(pol);
    ++st.runs;
    // A shorter or differently-chosen decision log means the run is not a
    // deterministic function of the schedule; exploration is then unsound.
    if (rr.decisions.size() < prefix.size()) st.diverged = true;
    for (std::size_t i = 0; i < prefix.size() && i < rr.decisions.size(); ++i)
      if (rr.decisions[i].chosen != prefix[i]) st.diverged = true;
    if (!sink(rr)) {
      st.exhausted = false;
      return st;
    }
    bool advanced = false;
    for (std::size_t i = rr.decisions.size(); i-- > 0;) {
      EnabledMask above =
          rr.decisions[i].enabled &
          static_cast<EnabledMask>(
              ~((EnabledMask{1} << (rr.decisions[i].chosen + 1)) - 1));
      if (!above) continue;
      prefix.clear();
      for (std::size_t j = 0; j < i; ++j)
        prefix.push_back(rr.decisions[j].chosen);
      prefix.push_back(mask_first(above));
      advanced = true;
      break;
    }
    if (!advanced) return st;  // full tree covered
    if (max_runs > 0 && st.runs >= max_runs) {
      st.exhausted = false;
      return st;
    }
  }
}

inline ExploreStats run_exhaustive(const Workload& wl, const TraceSink& sink) {
  wl.validate();
  if (wl.free_running)
    throw std::invalid_argument("exhaustive exploration is replay-only");
  EngineConfig cfg = engine_config(wl);
  ExploreStats st;
  DfsStats ds = dfs_explore(
      [&](SchedPolicy& pol) { return run_workload(wl, pol, cfg); },
      wl.max_traces, [&](RunResult& rr) {
        ++st.traces;
        st.decision_points += static_cast<i64>(rr.decisions.size());
        switch (rr.outcome) {
          case Outcome::Complete: ++st.complete; break;
          case Outcome::Deadlock: ++st.deadlock; break;
          case Outcome::LivelockBounded: ++st.livelock_pruned; break;
          case Outcome::StepBound: ++st.step_pruned; break;
        }
        return sink(rr);
      });
  st.exhausted = ds.exhausted;
  if (ds.diverged)
    throw std::logic_error("exploration diverged: runs are not a function of "
                           "their schedule");
  return st;
}

// ---------------------------------------------------------------------------
// Random stress.

// Scheduler-driven by default: one run, randomized picks, deterministic for a
// given seed. Free-running mode uses real threads and is best-effort.
inline RunResult run_stress(const Workload& wl) {
  wl.validate();
  EngineConfig cfg = engine_config(wl);
  if (wl.free_running) {
    ReplayPolicy pol({});  // consulted only for bookkeeping
    return run_workload(wl, pol, cfg);
  }
  RandomPolicy pol(wl.seed);
  return run_workload(wl, pol, cfg);
}

// Uniform random workload over the three set operations.
inline Workload random_workload(const std::string& structure, int n_threads,
                                int ops_per_thread, KeyRange keys, u64 seed) {
  Workload wl;
  wl.structure = structure;
  wl.keys = keys;
  wl.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<i64> key(keys.lo, keys.hi);
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_int_distribution<int> coin(0, 1);
  for (i64 k = keys.lo; k <= keys.hi; ++k)
    if (coin(rng)) wl.initial.push_back(k);
  static const char* kinds[] = {"contains", "insert", "delete"};
  for (int t = 0; t < n_threads; ++t) {
    std::vector<WorkloadOp> ops;
    for (int i = 0; i < ops_per_thread; ++i)
      ops.push_back({kinds[kind(rng)], key(rng), std::nullopt});
    wl.threads.push_back(std::move(ops));
  }
  return wl;
}

// Curated workload that reveals the mutation under bounded exploration.
// Used as the explore default when a mutation is requested without an
// explicit workload, and by the acceptance suite.
inline std::optional<Workload> mutation_witness(const std::string& structure,
                                                const std::string& name) {
  if (!mutation_applies(name, structure)) return std::nullopt;
  Workload wl;
  wl.structure = structure;
  wl.mutation = name;
  if (name == "skip-mark") {
    // the unmarked victim passes a concurrent insert's validation, so the
    // new node is published into an unlinked predecessor
    wl.keys = {1, 4};
    wl.initial = {2};
    wl.threads = {{{"delete", 2}}, {{"insert", 3}}};
    wl.preemption_bound = 2;
  } else if (name == "orig-insert-order") {
    // tree link lands before the succ-list publish; a reader answers from
    // the tree while the list effect point has not happened
    wl.keys = {1, 4};
    wl.initial = {2};
    wl.threads = {{{"insert", 3}}, {{"contains", 3}, {"delete", 3}}};
    wl.preemption_bound = 2;
  } else {  // no-grace-period
    // the collapse runs under a still-open read section
    wl.keys = {1, 6};
    wl.initial = {3, 1, 5};
    wl.threads = {{{"contains", 5}}, {{"delete", 3}}};
    wl.preemption_bound = 1;
  }
  return wl;
}

}  // namespace tlab

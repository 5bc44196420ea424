// Engine tests against combinatorial oracles: the number of schedules of two
// independent threads is a binomial coefficient, preemption bounds collapse
// it to a hand-counted set, and every explored trace must validate and
// replay byte-identically.
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "traverselab/explore.hpp"
#include "traverselab/runtime.hpp"
#include "traverselab/trace.hpp"

using namespace tlab;

namespace {

struct TwoThreadSetup {
  int writes_per_op = 2;
  int preemption_bound = -1;
  bool use_lock = false;
  bool free_running = false;
};

// Two threads, one op each, writing their own object `n` times. With a lock,
// the op instead does a read-modify-write on a shared cell.
RunResult run_two_writers(SchedPolicy& pol, const TwoThreadSetup& cfg) {
  EngineConfig ec;
  ec.n_threads = 2;
  ec.preemption_bound = cfg.preemption_bound;
  ec.free_running = cfg.free_running;
  Engine eng("demo", {1, 4}, ec, &pol);
  auto su = eng.setup_ctx("setup", 0);
  ObjId a = su.alloc();
  su.write(a, Field::data, Value::integer(0));
  ObjId b = su.alloc();
  su.write(b, Field::data, Value::integer(0));
  eng.set_anchor("a", a);
  eng.set_anchor("b", b);
  eng.finalize_setup();

  std::vector<std::vector<PlannedOp>> plan(2);
  for (int th = 0; th < 2; ++th) {
    ObjId mine = th == 0 ? a : b;
    if (cfg.use_lock) {
      plan[th].push_back({"bump", 0, [a](OpCtx& c) {
                            c.lock(a);
                            Value v = c.read(a, Field::data);
                            c.write(a, Field::data,
                                    Value::integer(v.as_int() + 1), "bump");
                            c.unlock(a);
                            return Value::boolean(true);
                          }});
    } else {
      int n = cfg.writes_per_op;
      plan[th].push_back({"fill", 0, [mine, n](OpCtx& c) {
                            for (int i = 0; i < n; ++i)
                              c.write(mine, Field::data, Value::integer(i),
                                      "fill");
                            return Value::boolean(true);
                          }});
    }
  }
  return eng.run(plan);
}

i64 binom(i64 n, i64 k) {
  i64 r = 1;
  for (i64 i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_CASE("schedule count of two independent threads is binomial") {
  // Each op contributes writes_per_op + 2 actions (op start/done are decision
  // points too).
  for (int n : {1, 2, 3}) {
    TwoThreadSetup cfg;
    cfg.writes_per_op = n;
    std::set<std::vector<int>> seen;
    auto st = dfs_explore(
        [&](SchedPolicy& p) { return run_two_writers(p, cfg); }, 0,
        [&](RunResult& r) {
          REQUIRE(r.outcome == Outcome::Complete);
          REQUIRE_FALSE(validate_trace(r.trace).has_value());
          std::vector<int> key;
          for (const auto& d : r.decisions) key.push_back(d.chosen);
          REQUIRE(seen.insert(key).second);  // every schedule distinct
          // Per-thread write order is program order.
          int seen_a = 0, seen_b = 0;
          for (const auto& w : r.trace.writes) {
            int& c = w.thread == 0 ? seen_a : seen_b;
            REQUIRE(w.val.as_int() == c);
            ++c;
          }
          return true;
        });
    CHECK(st.exhausted);
    CHECK_FALSE(st.diverged);
    i64 per_thread = n + 2;
    CHECK(st.runs == binom(2 * per_thread, per_thread));
  }
}

TEST_CASE("replay reproduces a run byte for byte") {
  TwoThreadSetup cfg;
  cfg.writes_per_op = 2;
  std::vector<std::vector<int>> logs;
  std::vector<std::string> dumps;
  dfs_explore([&](SchedPolicy& p) { return run_two_writers(p, cfg); }, 0,
              [&](RunResult& r) {
                std::vector<int> key;
                for (const auto& d : r.decisions) key.push_back(d.chosen);
                logs.push_back(key);
                dumps.push_back(trace_to_string(r.trace));
                return true;
              });
  REQUIRE(logs.size() == 70);
  for (std::size_t pick : {std::size_t{0}, std::size_t{17}, logs.size() - 1}) {
    ReplayPolicy pol(logs[pick]);
    RunResult r = run_two_writers(pol, cfg);
    CHECK(trace_to_string(r.trace) == dumps[pick]);
  }
}

TEST_CASE("preemption bound prunes schedules to the hand-counted set") {
  // 4 actions per thread. Bound 0: run-to-completion, one order per starter.
  // Bound 1: additionally preempt the starter after 1, 2 or 3 actions.
  TwoThreadSetup cfg;
  cfg.writes_per_op = 2;
  for (auto [bound, expect] : {std::pair{0, 2L}, std::pair{1, 8L}}) {
    cfg.preemption_bound = bound;
    auto st = dfs_explore(
        [&](SchedPolicy& p) { return run_two_writers(p, cfg); }, 0,
        [&](RunResult& r) {
          REQUIRE(r.outcome == Outcome::Complete);
          return true;
        });
    CHECK(st.exhausted);
    CHECK(st.runs == expect);
  }
}

TEST_CASE("lock serializes a read-modify-write") {
  TwoThreadSetup cfg;
  cfg.use_lock = true;
  auto st = dfs_explore(
      [&](SchedPolicy& p) { return run_two_writers(p, cfg); }, 0,
      [&](RunResult& r) {
        REQUIRE(r.outcome == Outcome::Complete);
        REQUIRE_FALSE(validate_trace(r.trace).has_value());
        StateCache sc(r.trace);
        const State& fin = sc.at(r.trace.t_end());
        REQUIRE(fin.get({r.trace.anchor("a"), Field::data}).as_int() == 2);
        return true;
      });
  CHECK(st.exhausted);
  CHECK(st.runs > 1);
}

TEST_CASE("without a lock the same RMW loses an update in some schedule") {
  auto run_racy = [](SchedPolicy& pol) {
    EngineConfig ec;
    ec.n_threads = 2;
    Engine eng("demo", {1, 4}, ec, &pol);
    auto su = eng.setup_ctx("setup", 0);
    ObjId a = su.alloc();
    su.write(a, Field::data, Value::integer(0));
    eng.set_anchor("a", a);
    eng.finalize_setup();
    std::vector<std::vector<PlannedOp>> plan(2);
    for (int th = 0; th < 2; ++th)
      plan[th].push_back({"bump", 0, [a](OpCtx& c) {
                            Value v = c.read(a, Field::data);
                            c.write(a, Field::data,
                                    Value::integer(v.as_int() + 1), "bump");
                            return Value::boolean(true);
                          }});
    return eng.run(plan);
  };
  bool lost = false, kept = false;
  dfs_explore(run_racy, 0, [&](RunResult& r) {
    StateCache sc(r.trace);
    i64 v = sc.at(r.trace.t_end()).get({r.trace.anchor("a"), Field::data}).as_int();
    (v == 1 ? lost : kept) = true;
    return true;
  });
  CHECK(lost);
  CHECK(kept);
}

TEST_CASE("cyclic lock acquisition deadlocks and is reported as such") {
  auto run_cycle = [](SchedPolicy& pol) {
    EngineConfig ec;
    ec.n_threads = 2;
    Engine eng("demo", {1, 4}, ec, &pol);
    auto su = eng.setup_ctx("setup", 0);
    ObjId a = su.alloc();
    ObjId b = su.alloc();
    su.write(a, Field::data, Value::integer(0));
    su.write(b, Field::data, Value::integer(0));
    eng.set_anchor("a", a);
    eng.set_anchor("b", b);
    eng.finalize_setup();
    std::vector<std::vector<PlannedOp>> plan(2);
    auto grab = [](ObjId first, ObjId second) {
      return [first, second](OpCtx& c) {
        c.lock(first);
        c.lock(second);
        c.write(first, Field::data, Value::integer(1), "touch");
        c.unlock(second);
        c.unlock(first);
        return Value::boolean(true);
      };
    };
    plan[0].push_back({"ab", 0, grab(a, b)});
    plan[1].push_back({"ba", 0, grab(b, a)});
    return eng.run(plan);
  };
  i64 deadlocks = 0, completes = 0;
  auto st = dfs_explore(run_cycle, 0, [&](RunResult& r) {
    if (r.outcome == Outcome::Deadlock) {
      ++deadlocks;
      CHECK(r.diag.find("waits lock") != std::string::npos);
      // The partial trace is still a checkable object.
      REQUIRE_FALSE(validate_trace(r.trace, /*allow_unfinished=*/true).has_value());
    } else {
      REQUIRE(r.outcome == Outcome::Complete);
      ++completes;
    }
    return true;
  });
  CHECK(st.exhausted);
  CHECK(deadlocks > 0);
  CHECK(completes > 0);
}

TEST_CASE("grace periods wait out exactly the overlapping read sections") {
  // Reader: enter, two reads of x, exit. Updater: write x, synchronize, write
  // y. In the serialized event order: a section entered before the x write
  // must exit before the y write; a section entered after the updater's
  // capture may freely straddle the y write.
  auto run_rcu = [](SchedPolicy& pol) {
    EngineConfig ec;
    ec.n_threads = 2;
    Engine eng("demo", {1, 4}, ec, &pol);
    auto su = eng.setup_ctx("setup", 0);
    ObjId x = su.alloc();
    su.write(x, Field::data, Value::integer(0));
    ObjId y = su.alloc();
    su.write(y, Field::data, Value::integer(0));
    eng.set_anchor("x", x);
    eng.set_anchor("y", y);
    eng.finalize_setup();
    std::vector<std::vector<PlannedOp>> plan(2);
    plan[0].push_back({"read", 0, [x](OpCtx& c) {
                         c.rcu_enter();
                         c.read(x, Field::data);
                         c.read(x, Field::data);
                         c.rcu_exit();
                         return Value::boolean(true);
                       }});
    plan[1].push_back({"update", 0, [x, y](OpCtx& c) {
                         c.write(x, Field::data, Value::integer(1), "wx");
                         c.rcu_sync();
                         c.write(y, Field::data, Value::integer(1), "wy");
                         return Value::boolean(true);
                       }});
    return eng.run(plan);
  };
  bool harmless_overlap_seen = false;
  auto st = dfs_explore(run_rcu, 0, [&](RunResult& r) {
    REQUIRE(r.outcome == Outcome::Complete);
    REQUIRE_FALSE(validate_trace(r.trace).has_value());
    const Trace& tr = r.trace;
    std::size_t pos_enter = 0, pos_exit = 0, pos_wx = 0, pos_wy = 0;
    for (std::size_t i = 0; i < tr.order.size(); ++i) {
      auto [k, idx] = tr.order[i];
      if (k == Trace::EvKind::Rcu) (tr.rcus[idx].enter ? pos_enter : pos_exit) = i;
      if (k == Trace::EvKind::W) {
        if (tr.writes[idx].label == "wx") pos_wx = i;
        if (tr.writes[idx].label == "wy") pos_wy = i;
      }
    }
    if (pos_enter < pos_wx) REQUIRE(pos_exit < pos_wy);
    if (pos_enter > pos_wx && pos_exit > pos_wy) harmless_overlap_seen = true;
    return true;
  });
  CHECK(st.exhausted);
  CHECK(harmless_overlap_seen);
}

TEST_CASE("runaway operations hit the step bound, not the wall clock") {
  auto run_loop = [](SchedPolicy& pol) {
    EngineConfig ec;
    ec.n_threads = 1;
    ec.max_steps_per_op = 50;
    Engine eng("demo", {1, 4}, ec, &pol);
    auto su = eng.setup_ctx("setup", 0);
    ObjId a = su.alloc();
    su.write(a, Field::data, Value::integer(0));
    eng.set_anchor("a", a);
    eng.finalize_setup();
    std::vector<std::vector<PlannedOp>> plan(1);
    plan[0].push_back({"spin", 0, [a](OpCtx& c) {
                         for (;;) c.read(a, Field::data);
                         return Value::boolean(true);
                       }});
    return eng.run(plan);
  };
  ReplayPolicy pol({});
  RunResult r = run_loop(pol);
  CHECK(r.outcome == Outcome::StepBound);
  CHECK_FALSE(validate_trace(r.trace, true).has_value());
}

TEST_CASE("repeated restarts are cut off as a bounded livelock") {
  auto run_restarts = [](SchedPolicy& pol) {
    EngineConfig ec;
    ec.n_threads = 1;
    ec.restart_bound = 8;
    Engine eng("demo", {1, 4}, ec, &pol);
    auto su = eng.setup_ctx("setup", 0);
    ObjId a = su.alloc();
    su.write(a, Field::data, Value::integer(0));
    eng.finalize_setup();
    std::vector<std::vector<PlannedOp>> plan(1);
    plan[0].push_back({"retry", 0, [a](OpCtx& c) {
                         for (;;) {
                           c.read(a, Field::data);
                           c.restart();
                         }
                         return Value::boolean(true);
                       }});
    return eng.run(plan);
  };
  ReplayPolicy pol({});
  RunResult r = run_restarts(pol);
  CHECK(r.outcome == Outcome::LivelockBounded);
}

TEST_CASE("free-running mode keeps the trace coherent under real threads") {
  TwoThreadSetup cfg;
  cfg.use_lock = true;
  cfg.free_running = true;
  for (int round = 0; round < 20; ++round) {
    RandomPolicy pol(7);  // unused by free-running mode
    RunResult r = run_two_writers(pol, cfg);
    REQUIRE(r.outcome == Outcome::Complete);
    REQUIRE_FALSE(validate_trace(r.trace).has_value());
    StateCache sc(r.trace);
    REQUIRE(sc.at(r.trace.t_end()).get({r.trace.anchor("a"), Field::data}).as_int() == 2);
  }
}

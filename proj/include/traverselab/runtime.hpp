// Deterministic interleaving engine. Worker threads run structure operations
// against an instrumented heap; every runtime call (read, write, lock,
// unlock, RCU transition, operation boundary) is a decision point where a
// scheduling policy picks which thread moves. Exactly one thread is ever
// between decision points, so runs are reproducible from the decision log.
//
// A free-running mode drops the turnstile: threads race under the OS
// scheduler and synchronize through real lock waits, serialized only by the
// engine mutex that keeps the heap and the recorded trace coherent.
#pragma once

#include <cassert>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "traverselab/core.hpp"
#include "traverselab/sched.hpp"
#include "traverselab/trace.hpp"

namespace tlab {

enum class Outcome { Complete, Deadlock, LivelockBounded, StepBound };

inline const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Complete: return "complete";
    case Outcome::Deadlock: return "deadlock";
    case Outcome::LivelockBounded: return "livelock-bounded";
    case Outcome::StepBound: return "step-bound";
  }
  return "?";
}

struct EngineConfig {
  int n_threads = 2;
  int preemption_bound = -1;  // -1: unbounded (full interleaving exploration)
  int restart_bound = 8;
  i64 max_steps_per_op = 5000;
  std::string mutation;  // empty, or a mutation switch consulted by structures
  bool free_running = false;
};

struct RunResult {
  Trace trace;
  Outcome outcome = Outcome::Complete;
  std::vector<Decision> decisions;
  std::string diag;
};

// Thrown inside a worker to unwind it out of structure code when a run is
// aborted (deadlock, bound hit, or another thread's fault).
struct ThreadAbort {};

class Engine;

// Handle a structure operation uses for every heap interaction. One per
// operation execution; traversal records are accumulated here and committed
// into the trace by the structure code.
class OpCtx {
 public:
  OpCtx(Engine& eng, int thread, int op, std::string kind, i64 key,
        bool bypass, std::optional<i64> data = std::nullopt)
      : eng_(eng), thread_(thread), op_(op), kind_(std::move(kind)), key_(key),
        data_(data), bypass_(bypass) {}

  Value read(ObjId o, Field f);
  void write(ObjId o, Field f, Value v, const char* label = "",
             std::vector<std::pair<Loc, Value>> ghost = {});
  ObjId alloc();
  void lock(ObjId o, int which = 0);
  void unlock(ObjId o, int which = 0);
  void rcu_enter();
  void rcu_exit();
  void rcu_sync();
  // Restart the optimistic section: counts toward the livelock bound.
  void restart();

  i64 now() const;
  const std::string& mutation() const;
  bool mutated(const char* name) const { return mutation() == name; }

  int op_id() const { return op_; }
  int thread() const { return thread_; }
  i64 key() const { return key_; }
  const std::string& kind() const { return kind_; }

  // Traversal recording. A step is the read that moved the traversal to a new
  // location; by convention it is recorded right after that read, so it picks
  // up the read's source time.
  void trav_begin(const std::string& kind, i64 k, i64 base);
  void trav_step(Loc l) {
    if (trav_) trav_->steps.push_back({l, last_read_t_});
  }
  void trav_step_at(Loc l, i64 t) {
    if (trav_) trav_->steps.push_back({l, t});
  }
  void trav_final(std::optional<Loc> l) {
    if (trav_) trav_->final_loc = l;
  }
  void trav_tag(ObjId o, i64 tagv, i64 src_t) {
    if (trav_) {
      trav_->tag_obj = o;
      trav_->tag_value = tagv;
      trav_->tag_src_t = src_t;
    }
  }
  void trav_glue() {
    if (trav_) trav_->glue_base = true;
  }
  void trav_commit();
  void trav_drop() { trav_.reset(); }

  i64 last_read_t() const { return last_read_t_; }

 private:
  friend class Engine;
  Engine& eng_;
  int thread_;
  int op_;
  std::string kind_;
  i64 key_;
  std::optional<i64> data_;
  bool bypass_;
  i64 last_read_t_ = 0;
  int restarts_ = 0;
  std::optional<TraversalRecord> trav_;
};

// One operation in a thread's program.
struct PlannedOp {
  std::string kind;
  i64 key;
  std::function<Value(OpCtx&)> body;
  std::optional<i64> data;  // recorded on the invocation event (Citrus insert)
};

class Engine {
 public:
  Engine(std::string structure, KeyRange keys, EngineConfig cfg,
         SchedPolicy* policy)
      : cfg_(cfg), policy_(policy) {
    assert(cfg.n_threads >= 1 && cfg.n_threads <= 32);
    trace_.structure = std::move(structure);
    trace_.keys = keys;
    ths_.resize(static_cast<std::size_t>(cfg.n_threads));
  }

  // ---- setup phase (single-threaded, before recording starts) ----

  OpCtx setup_ctx(const std::string& kind, i64 key) {
    return OpCtx(*this, /*thread=*/0, /*op=*/-1, kind, key, /*bypass=*/true);
  }

  void set_anchor(const std::string& name, ObjId o) {
    trace_.anchors[name] = o;
  }
  ObjId anchor(const std::string& name) const { return trace_.anchor(name); }

  void finalize_setup() {
    trace_.initial = heap_;
    recording_ = true;
  }

  // ---- concurrent phase ----

  RunResult run(const std::vector<std::vector<PlannedOp>>& plan) {
    assert(recording_ && "finalize_setup must run first");
    assert(plan.size() == ths_.size());
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < plan.size(); ++i)
      workers.emplace_back([this, i, &plan] { worker(static_cast<int>(i), plan[i]); });
    {
      std::unique_lock g(m_);
      cv_.wait(g, [&] { return done_; });
    }
    for (auto& w : workers) w.join();
    RunResult r;
    r.trace = std::move(trace_);
    r.outcome = outcome_;
    r.decisions = std::move(decisions_);
    r.diag = std::move(diag_);
    return r;
  }

  const EngineConfig& config() const { return cfg_; }
  const State& heap() const { return heap_; }

 private:
  friend class OpCtx;

  struct ThreadState {
    enum class St { Born, Parked, Running, BlockedRcu, BlockedLock, Finished };
    St st = St::Born;
    ActionInfo pending;
    std::set<int> rcu_wait;  // sections a pending grace period still awaits
    int cur_section = -1;
    i64 lock_wanted = -1;  // free-running: lock id being waited for
    i64 steps_in_op = 0;
  };

  // ---- worker scaffolding ----

  void worker(int thread, const std::vector<PlannedOp>& ops) {
    try {
      for (const auto& p : ops) {
        OpCtx ctx(*this, thread, /*op=*/-1, p.kind, p.key, false, p.data);
        op_start(ctx);
        Value ret = p.body(ctx);
        op_done(ctx, ret);
      }
    } catch (const ThreadAbort&) {
      // fall through to finish
    }
    finish_thread(thread);
  }

  void op_start(OpCtx& ctx) {
    ActionInfo a;
    a.type = ActionInfo::Type::OpStart;
    scheduled(ctx, a, [&] {
      ctx.op_ = next_op_++;
      a.op = ctx.op_;
      if (recording_) {
        trace_.order.emplace_back(Trace::EvKind::Inv, trace_.invs.size());
        trace_.invs.push_back(
            {ctx.op_, ctx.thread_, ctx.kind_, ctx.key_, ctx.data_, now_locked()});
      }
    });
  }

  void op_done(OpCtx& ctx, Value ret) {
    ActionInfo a;
    a.type = ActionInfo::Type::OpDone;
    a.op = ctx.op_;
    a.val = ret;
    scheduled(ctx, a, [&] {
      if (recording_) {
        trace_.order.emplace_back(Trace::EvKind::Res, trace_.ress.size());
        trace_.ress.push_back({ctx.op_, ret, now_locked()});
      }
    });
  }

  void finish_thread(int thread) {
    std::unique_lock g(m_);
    ths_[static_cast<std::size_t>(thread)].st = ThreadState::St::Finished;
    policy_->thread_finished(thread);
    cv_.notify_all();
    if (!cfg_.free_running) maybe_choose();
    if (all_finished()) {
      done_ = true;
      cv_.notify_all();
    }
  }

  bool all_finished() const {
    for (const auto& t : ths_)
      if (t.st != ThreadState::St::Finished) return false;
    return true;
  }

  // ---- the turnstile ----

  template <typename Fn>
  void scheduled(OpCtx& ctx, ActionInfo& info, Fn&& perform) {
    std::unique_lock g(m_);
    if (aborting_) throw ThreadAbort{};
    ThreadState& me = ths_[static_cast<std::size_t>(ctx.thread_)];
    if (++me.steps_in_op > cfg_.max_steps_per_op &&
        info.type != ActionInfo::Type::OpStart) {
      abort_run(Outcome::StepBound,
                "operation exceeded its step bound on thread " +
                    std::to_string(ctx.thread_));
      throw ThreadAbort{};
    }
    if (info.type == ActionInfo::Type::OpStart) me.steps_in_op = 0;
    if (cfg_.free_running) {
      perform_free(ctx, me, info, perform, g);
      return;
    }
    me.pending = info;
    me.st = ThreadState::St::Parked;
    maybe_choose();
    cv_.wait(g, [&] { return aborting_ || turn_ == ctx.thread_; });
    if (aborting_) throw ThreadAbort{};
    me.st = ThreadState::St::Running;
    turn_ = -1;
    perform();
    finish_action(ctx.thread_, me, info);
  }

  void finish_action(int thread, ThreadState&, ActionInfo& info) {
    policy_->on_action(thread, info);
    prev_ = thread;
  }

  bool all_settled() const {
    for (const auto& t : ths_)
      if (t.st == ThreadState::St::Born || t.st == ThreadState::St::Running)
        return false;
    return true;
  }

  bool action_enabled(const ThreadState& t, int) const {
    switch (t.pending.type) {
      case ActionInfo::Type::Lock:
        return !lock_owner_.count(lock_id(t.pending.loc));
      case ActionInfo::Type::RcuSyncEnd:
        return t.rcu_wait.empty();
      default:
        return true;
    }
  }

  void maybe_choose() {
    if (aborting_ || done_ || !all_settled()) return;
    EnabledMask en = 0, raw = 0;
    bool any_unfinished = false;
    for (std::size_t i = 0; i < ths_.size(); ++i) {
      const ThreadState& t = ths_[i];
      if (t.st == ThreadState::St::Finished) continue;
      any_unfinished = true;
      if (t.st != ThreadState::St::Parked) continue;
      if (action_enabled(t, static_cast<int>(i))) raw |= 1u << i;
    }
    if (!any_unfinished) return;  // finish_thread handles completion
    en = raw;
    if (en == 0) {
      abort_run(Outcome::Deadlock, deadlock_diag());
      return;
    }
    if (cfg_.preemption_bound >= 0 && prev_ >= 0 && mask_has(raw, prev_) &&
        preemptions_ >= cfg_.preemption_bound) {
      en = 1u << prev_;
    }
    int c = policy_->pick(decisions_.size(), en, prev_);
    if (c < 0 || !mask_has(en, c)) c = mask_first(en);
    if (prev_ >= 0 && c != prev_ && mask_has(raw, prev_)) ++preemptions_;
    decisions_.push_back({en, c});
    turn_ = c;
    cv_.notify_all();
  }

  std::string deadlock_diag() const {
    std::string d = "no runnable thread:";
    for (std::size_t i = 0; i < ths_.size(); ++i) {
      const ThreadState& t = ths_[i];
      if (t.st == ThreadState::St::Finished) continue;
      d += " t" + std::to_string(i);
      if (t.st == ThreadState::St::Parked &&
          t.pending.type == ActionInfo::Type::Lock)
        d += "(waits lock " + t.pending.loc.repr() + ")";
      else if (t.st == ThreadState::St::BlockedRcu ||
               (t.st == ThreadState::St::Parked &&
                t.pending.type == ActionInfo::Type::RcuSyncEnd))
        d += "(waits grace period)";
    }
    return d;
  }

  void abort_run(Outcome why, std::string diag) {
    if (aborting_) return;
    aborting_ = true;
    outcome_ = why;
    diag_ = std::move(diag);
    cv_.notify_all();
  }

  // ---- free-running mode ----

  template <typename Fn>
  void perform_free(OpCtx& ctx, ThreadState& me, ActionInfo& info, Fn&& perform,
                    std::unique_lock<std::mutex>& g) {
    if (info.type == ActionInfo::Type::Lock) {
      i64 id = lock_id(info.loc);
      me.st = ThreadState::St::BlockedLock;
      me.lock_wanted = id;
      bool got = cv_.wait_for(g, std::chrono::seconds(10), [&] {
        return aborting_ || !lock_owner_.count(id);
      });
      me.lock_wanted = -1;
      if (aborting_) throw ThreadAbort{};
      if (!got) {
        abort_run(Outcome::Deadlock, "lock wait timed out in free-running mode");
        throw ThreadAbort{};
      }
    } else if (info.type == ActionInfo::Type::RcuSyncBegin) {
      // handled by rcu_sync itself
    }
    me.st = ThreadState::St::Running;
    perform();
    finish_action(ctx.thread_, me, info);
    cv_.notify_all();
  }

  // ---- actions ----

  i64 now_locked() const { return static_cast<i64>(trace_.writes.size()); }

  static i64 lock_id(const Loc& l) {
    return static_cast<i64>(l.obj) * static_cast<i64>(FIELD_COUNT) +
           static_cast<i64>(l.field);
  }

  Value do_read(OpCtx& ctx, ObjId o, Field f) {
    Loc loc{o, f};
    Value v = heap_.get(loc);
    ctx.last_read_t_ = now_locked();
    if (recording_) {
      trace_.order.emplace_back(Trace::EvKind::R, trace_.reads.size());
      trace_.reads.push_back({ctx.last_read_t_, ctx.thread_, ctx.op_, loc, v});
    }
    return v;
  }

  void do_write(OpCtx& ctx, ObjId o, Field f, const Value& v,
                const char* label, std::vector<std::pair<Loc, Value>> ghost) {
    Loc loc{o, f};
    heap_.set(loc, v);
    // ghost pairs are trace-only annotations; the live heap mirrors StateCache
    if (recording_) {
      WriteEvent e;
      e.t = static_cast<i64>(trace_.writes.size()) + 1;
      e.thread = ctx.thread_;
      e.op = ctx.op_;
      e.loc = loc;
      e.val = v;
      e.label = label;
      e.ghost = std::move(ghost);
      trace_.order.emplace_back(Trace::EvKind::W, trace_.writes.size());
      trace_.writes.push_back(std::move(e));
    }
  }

  void drain_sections(int section) {
    for (auto& t : ths_) {
      if (t.st != ThreadState::St::BlockedRcu) continue;
      t.rcu_wait.erase(section);
      if (t.rcu_wait.empty()) {
        // The grace period is over: the waiter becomes a normal parked thread
        // whose pending grace-period-end action is now enabled.
        t.st = ThreadState::St::Parked;
      }
    }
  }

  // ---- state ----

  EngineConfig cfg_;
  SchedPolicy* policy_;
  std::mutex m_;
  std::condition_variable cv_;
  std::vector<ThreadState> ths_;
  int turn_ = -1;
  int prev_ = -1;
  int preemptions_ = 0;
  bool aborting_ = false;
  bool done_ = false;
  Outcome outcome_ = Outcome::Complete;
  std::string diag_;
  std::vector<Decision> decisions_;
  int next_op_ = 0;
  int next_section_ = 0;
  State heap_;
  Trace trace_;
  bool recording_ = false;
  std::map<i64, int> lock_owner_;
};

// ---- OpCtx implementations (need Engine complete) ----

inline Value OpCtx::read(ObjId o, Field f) {
  if (bypass_) {
    last_read_t_ = 0;
    return eng_.heap_.get({o, f});
  }
  ActionInfo a;
  a.type = ActionInfo::Type::Read;
  a.loc = {o, f};
  a.op = op_;
  Value out = Value::nil();
  eng_.scheduled(*this, a, [&] {
    out = eng_.do_read(*this, o, f);
    a.val = out;
  });
  return out;
}

inline void OpCtx::write(ObjId o, Field f, Value v, const char* label,
                         std::vector<std::pair<Loc, Value>> ghost) {
  if (bypass_) {
    eng_.heap_.set({o, f}, v);
    return;
  }
  ActionInfo a;
  a.type = ActionInfo::Type::Write;
  a.loc = {o, f};
  a.val = v;
  a.label = label;
  a.op = op_;
  eng_.scheduled(*this, a,
                 [&] { eng_.do_write(*this, o, f, v, label, std::move(ghost)); });
}

inline ObjId OpCtx::alloc() {
  // Only the single running thread touches the heap between decision points,
  // so allocation needs no extra synchronization in turnstile mode; the
  // engine mutex covers the free-running mode.
  if (bypass_ || !eng_.cfg_.free_running) return eng_.heap_.add_object();
  std::unique_lock g(eng_.m_);
  return eng_.heap_.add_object();
}

inline void OpCtx::lock(ObjId o, int which) {
  Loc l{o, static_cast<Field>(which)};
  if (bypass_) return;  // single-threaded setup never contends
  ActionInfo a;
  a.type = ActionInfo::Type::Lock;
  a.loc = l;
  a.op = op_;
  eng_.scheduled(*this, a, [&] {
    i64 id = Engine::lock_id(l);
    assert(!eng_.lock_owner_.count(id) && "lock grant while held");
    eng_.lock_owner_[id] = thread_;
  });
}

inline void OpCtx::unlock(ObjId o, int which) {
  Loc l{o, static_cast<Field>(which)};
  if (bypass_) return;
  ActionInfo a;
  a.type = ActionInfo::Type::Unlock;
  a.loc = l;
  a.op = op_;
  eng_.scheduled(*this, a, [&] {
    i64 id = Engine::lock_id(l);
    auto it = eng_.lock_owner_.find(id);
    assert(it != eng_.lock_owner_.end() && it->second == thread_ &&
           "unlock by non-owner");
    eng_.lock_owner_.erase(it);
  });
}

inline void OpCtx::rcu_enter() {
  if (bypass_) return;
  ActionInfo a;
  a.type = ActionInfo::Type::RcuEnter;
  a.op = op_;
  eng_.scheduled(*this, a, [&] {
    Engine::ThreadState& me = eng_.ths_[static_cast<std::size_t>(thread_)];
    me.cur_section = eng_.next_section_++;
    if (eng_.recording_) {
      eng_.trace_.order.emplace_back(Trace::EvKind::Rcu,
                                     eng_.trace_.rcus.size());
      eng_.trace_.rcus.push_back(
          {true, thread_, op_, eng_.now_locked(), me.cur_section});
    }
  });
}

inline void OpCtx::rcu_exit() {
  if (bypass_) return;
  ActionInfo a;
  a.type = ActionInfo::Type::RcuExit;
  a.op = op_;
  eng_.scheduled(*this, a, [&] {
    Engine::ThreadState& me = eng_.ths_[static_cast<std::size_t>(thread_)];
    int sec = me.cur_section;
    me.cur_section = -1;
    if (eng_.recording_) {
      eng_.trace_.order.emplace_back(Trace::EvKind::Rcu,
                                     eng_.trace_.rcus.size());
      eng_.trace_.rcus.push_back({false, thread_, op_, eng_.now_locked(), sec});
    }
    // Unblocking a waiter whose grace period this exit completes happens here,
    // inside the performed action, so it is deterministic under replay.
    eng_.drain_sections(sec);
  });
}

inline void OpCtx::rcu_sync() {
  if (bypass_) return;
  // The no-grace-period mutation turns synchronization into a no-op, exactly
  // the bug the grace-period checks are meant to expose.
  if (mutated("no-grace-period")) return;
  Engine& e = eng_;
  std::unique_lock g(e.m_);
  if (e.aborting_) throw ThreadAbort{};
  Engine::ThreadState& me = e.ths_[static_cast<std::size_t>(thread_)];
  if (++me.steps_in_op > e.cfg_.max_steps_per_op) {
    e.abort_run(Outcome::StepBound, "operation exceeded its step bound");
    throw ThreadAbort{};
  }
  ActionInfo begin;
  begin.type = ActionInfo::Type::RcuSyncBegin;
  begin.op = op_;
  auto capture = [&] {
    for (std::size_t i = 0; i < e.ths_.size(); ++i) {
      if (static_cast<int>(i) == thread_) continue;
      if (e.ths_[i].cur_section >= 0) me.rcu_wait.insert(e.ths_[i].cur_section);
    }
  };
  if (e.cfg_.free_running) {
    me.st = Engine::ThreadState::St::Running;
    capture();
    e.finish_action(thread_, me, begin);
    bool ok = e.cv_.wait_for(g, std::chrono::seconds(10), [&] {
      if (e.aborting_) return true;
      // In free-running mode no one drains waitsets for us; poll sections.
      for (int s : std::set<int>(me.rcu_wait)) {
        bool active = false;
        for (const auto& t : e.ths_)
          if (t.cur_section == s) active = true;
        if (!active) me.rcu_wait.erase(s);
      }
      return me.rcu_wait.empty();
    });
    if (e.aborting_) throw ThreadAbort{};
    if (!ok) {
      e.abort_run(Outcome::Deadlock, "grace period never elapsed");
      throw ThreadAbort{};
    }
    return;
  }
  me.pending = begin;
  me.st = Engine::ThreadState::St::Parked;
  e.maybe_choose();
  e.cv_.wait(g, [&] { return e.aborting_ || e.turn_ == thread_; });
  if (e.aborting_) throw ThreadAbort{};
  me.st = Engine::ThreadState::St::Running;
  e.turn_ = -1;
  capture();
  e.finish_action(thread_, me, begin);
  if (me.rcu_wait.empty()) return;  // no reader active: grace period is trivial
  // Wait out the grace period, then take one more scheduled step so the
  // wake-up itself is a decision point.
  ActionInfo end;
  end.type = ActionInfo::Type::RcuSyncEnd;
  end.op = op_;
  me.pending = end;
  me.st = Engine::ThreadState::St::BlockedRcu;
  e.maybe_choose();
  e.cv_.wait(g, [&] { return e.aborting_ || e.turn_ == thread_; });
  if (e.aborting_) throw ThreadAbort{};
  me.st = Engine::ThreadState::St::Running;
  e.turn_ = -1;
  e.finish_action(thread_, me, end);
}

inline void OpCtx::restart() {
  if (bypass_) return;
  if (++restarts_ > eng_.cfg_.restart_bound) {
    std::unique_lock g(eng_.m_);
    eng_.abort_run(Outcome::LivelockBounded,
                   "operation restarted past the bound on thread " +
                       std::to_string(thread_));
    throw ThreadAbort{};
  }
}

inline i64 OpCtx::now() const {
  if (!bypass_ && eng_.cfg_.free_running) {
    std::unique_lock g(eng_.m_);
    return static_cast<i64>(eng_.trace_.writes.size());
  }
  // Turnstile mode: only the single running thread is here; see alloc().
  return static_cast<i64>(eng_.trace_.writes.size());
}

inline const std::string& OpCtx::mutation() const {
  return eng_.cfg_.mutation;
}

inline void OpCtx::trav_begin(const std::string& kind, i64 k, i64 base) {
  trav_.emplace();
  trav_->op = op_;
  trav_->thread = thread_;
  trav_->kind = kind;
  trav_->k = k;
  trav_->base = base;
}

inline void OpCtx::trav_commit() {
  if (!trav_ || bypass_ || !eng_.recording_) {
    trav_.reset();
    return;
  }
  eng_.trace_.order.emplace_back(Trace::EvKind::Trav, eng_.trace_.travs.size());
  eng_.trace_.travs.push_back(std::move(*trav_));
  trav_.reset();
}

}  // namespace tlab

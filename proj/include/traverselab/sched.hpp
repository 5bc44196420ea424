// Scheduling policies for the deterministic interleaving engine. The engine
// serializes threads through a turnstile; at every decision point it asks the
// policy which enabled thread performs the next action. Policies: systematic
// DFS over schedules (optionally preemption-bounded), seeded random stress,
// and scripted phase schedules for choreographed scenarios.
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "traverselab/core.hpp"

namespace tlab {

// What a thread is about to do (announced) or has just done (reported).
struct ActionInfo {
  enum class Type {
    Read,
    Write,
    Lock,
    Unlock,
    RcuEnter,
    RcuExit,
    RcuSyncBegin,
    RcuSyncEnd,
    OpStart,
    OpDone,
  };
  Type type = Type::Read;
  Loc loc = Loc::null_loc();
  Value val = Value::nil();
  std::string label;  // write label, when type == Write
  int op = -1;
};

using EnabledMask = uint32_t;

inline bool mask_has(EnabledMask m, int i) { return (m >> i) & 1u; }
inline int mask_first(EnabledMask m) {
  for (int i = 0; i < 32; ++i)
    if (mask_has(m, i)) return i;
  return -1;
}
inline int mask_count(EnabledMask m) { return __builtin_popcount(m); }

// One decision made during a run, with the context needed to branch later.
struct Decision {
  EnabledMask enabled = 0;  // after any preemption-bound filtering
  int chosen = -1;
};

class SchedPolicy {
 public:
  virtual ~SchedPolicy() = default;
  // Picks a thread out of `enabled` (nonzero). `prev` is the thread that
  // performed the previous action, -1 at the start.
  virtual int pick(std::size_t decision_index, EnabledMask enabled,
                   int prev) = 0;
  // Reports each performed action; scripts use this to advance phases.
  virtual void on_action(int thread, const ActionInfo& info) {}
  // Reports a worker running out of operations.
  virtual void thread_finished(int thread) {}
};

// ---------------------------------------------------------------------------
// DFS replay policy: follows a forced prefix, then always takes the lowest
// enabled thread. The engine logs every decision; the explorer inspects the
// log to schedule the next branch.
class ReplayPolicy : public SchedPolicy {
 public:
  explicit ReplayPolicy(std::vector<int> prefix) : prefix_(std::move(prefix)) {}
  int pick(std::size_t i, EnabledMask enabled, int) override {
    if (i < prefix_.size() && mask_has(enabled, prefix_[i])) return prefix_[i];
    // A prefix mismatch can only mean nondeterminism upstream; fall through
    // to the canonical choice so the run still terminates (the explorer
    // detects the divergence from the decision log).
    return mask_first(enabled);
  }

 private:
  std::vector<int> prefix_;
};

// Uniform choice among enabled threads from a seeded generator; runs are
// reproducible given the seed.
class RandomPolicy : public SchedPolicy {
 public:
  explicit RandomPolicy(uint64_t seed) : rng_(seed) {}
  int pick(std::size_t, EnabledMask enabled, int) override {
    int n = mask_count(enabled);
    int idx = static_cast<int>(rng_() % static_cast<uint64_t>(n));
    for (int i = 0; i < 32; ++i)
      if (mask_has(enabled, i) && idx-- == 0) return i;
    return mask_first(enabled);
  }

 private:
  std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------
// Scripted schedules: run one thread until a condition fires, then move to
// the next phase. Used to choreograph the documented scenarios.

struct StopCond {
  enum class Kind { AfterWriteLabel, AfterReadField, OpDone, ThreadDone };
  Kind kind = Kind::ThreadDone;
  std::string label;              // AfterWriteLabel
  Field field = Field::COUNT;     // AfterReadField
  std::optional<Value> val;       // AfterReadField, optionally value-matched
  std::optional<ObjId> obj;       // AfterReadField, optionally object-matched
  int op = -1;                    // OpDone: -1 means any op of the thread

  static StopCond write_label(std::string l) {
    StopCond c;
    c.kind = Kind::AfterWriteLabel;
    c.label = std::move(l);
    return c;
  }
  static StopCond read_field(Field f, std::optional<Value> v = std::nullopt,
                             std::optional<ObjId> o = std::nullopt) {
    StopCond c;
    c.kind = Kind::AfterReadField;
    c.field = f;
    c.val = std::move(v);
    c.obj = o;
    return c;
  }
  static StopCond op_done(int op = -1) {
    StopCond c;
    c.kind = Kind::OpDone;
    c.op = op;
    return c;
  }
  static StopCond thread_done() { return StopCond{}; }
};

struct ScriptStep {
  int thread;
  StopCond cond;
};

class ScriptPolicy : public SchedPolicy {
 public:
  explicit ScriptPolicy(std::vector<ScriptStep> steps)
      : steps_(std::move(steps)) {}

  int pick(std::size_t, EnabledMask enabled, int) override {
    if (idx_ < steps_.size() && mask_has(enabled, steps_[idx_].thread))
      return steps_[idx_].thread;
    if (idx_ < steps_.size()) {
      // The scripted thread cannot run; the scenario is infeasible as staged.
      stuck_ = true;
    }
    return mask_first(enabled);
  }

  void on_action(int thread, const ActionInfo& info) override {
    if (idx_ >= steps_.size()) return;
    const ScriptStep& st = steps_[idx_];
    if (thread != st.thread) return;
    bool fired = false;
    switch (st.cond.kind) {
      case StopCond::Kind::AfterWriteLabel:
        fired = info.type == ActionInfo::Type::Write &&
                info.label == st.cond.label;
        break;
      case StopCond::Kind::AfterReadField:
        fired = info.type == ActionInfo::Type::Read &&
                info.loc.field == st.cond.field &&
                (!st.cond.val || *st.cond.val == info.val) &&
                (!st.cond.obj || *st.cond.obj == info.loc.obj);
        break;
      case StopCond::Kind::OpDone:
        fired = info.type == ActionInfo::Type::OpDone &&
                (st.cond.op < 0 || st.cond.op == info.op);
        break;
      case StopCond::Kind::ThreadDone:
        fired = false;  // handled by the engine when the thread finishes
        break;
    }
    if (fired) ++idx_;
  }

  // The engine reports thread completion here.
  void thread_finished(int thread) override {
    while (idx_ < steps_.size() && steps_[idx_].thread == thread &&
           steps_[idx_].cond.kind == StopCond::Kind::ThreadDone)
      ++idx_;
  }

  bool complete() const { return idx_ >= steps_.size(); }
  bool stuck() const { return stuck_; }
  std::size_t phase() const { return idx_; }

 private:
  std::vector<ScriptStep> steps_;
  std::size_t idx_ = 0;
  bool stuck_ = false;
};

}  // namespace tlab

// Trace model: totally ordered write history plus read/operation/RCU events
// and per-operation traversal records. Reconstruction of past states is
// snapshot-accelerated; serialization is JSON-lines so traces can be checked
// offline.
#pragma once

#include <algorithm>
#include <cstdlib>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "traverselab/core.hpp"

namespace tlab {

using json = nlohmann::json;

inline constexpr int DEFAULT_SNAPSHOT_STRIDE = 256;

// Snapshot stride is tunable via TRAVERSE_LAB_SNAPSHOT_STRIDE (positive int).
inline int snapshot_stride_from_env() {
  if (const char* s = std::getenv("TRAVERSE_LAB_SNAPSHOT_STRIDE")) {
    int v = std::atoi(s);
    if (v > 0) return v;
  }
  return DEFAULT_SNAPSHOT_STRIDE;
}

struct WriteEvent {
  i64 t = 0;  // dense: the j-th write (1-based) has t == j
  int thread = 0;
  int op = -1;  // -1: environment (setup/injection outside any operation)
  Loc loc;
  Value val;
  std::string label;
  // Ghost assignments carried by this write (applied to ghost views only,
  // never to the base state).
  std::vector<std::pair<Loc, Value>> ghost;
};

struct ReadEvent {
  i64 src_t = 0;  // timestamp of the state the value was read from
  int thread = 0;
  int op = -1;
  Loc loc;
  Value val;
};

struct OpInv {
  int op = 0;
  int thread = 0;
  std::string kind;  // insert / delete / contains / rotate / remove-right
  i64 key = 0;
  std::optional<i64> data;
  i64 t = 0;  // counter value at invocation
};

struct OpRes {
  int op = 0;
  Value ret;
  i64 t = 0;
};

struct RcuEvent {
  bool enter = true;
  int thread = 0;
  int op = -1;
  i64 t = 0;
  int section = 0;  // id shared by the matching enter/exit
};

struct TravStep {
  Loc loc;
  i64 t = 0;  // src_t of the read that moved the traversal off loc
};

// One unsynchronized traversal: the reads that moved it, plus the location the
// final read led to. `base` is the time whose state anchors the first
// location; for traversals glued onto a predecessor segment the base is
// refined by the checker from the glue witness.
struct TraversalRecord {
  int op = -1;
  int thread = 0;
  std::string kind;  // "treepred" | "succ" | "locate" | "succwalk"
  i64 k = 0;         // key parameter of the extend relation (ignored by treepred)
  i64 base = 0;
  std::vector<TravStep> steps;
  std::optional<Loc> final_loc;
  // Citrus locate appends the version read taken from the final parent.
  std::optional<i64> tag_value;
  std::optional<i64> tag_src_t;
  std::optional<ObjId> tag_obj;
  bool glue_base = false;  // base must be recomputed from the previous segment
};

struct Trace {
  std::string structure;
  KeyRange keys;
  std::map<std::string, ObjId> anchors;  // e.g. min/max/root object ids
  State initial;                         // state at time 0
  std::vector<WriteEvent> writes;
  std::vector<ReadEvent> reads;
  std::vector<OpInv> invs;
  std::vector<OpRes> ress;
  std::vector<RcuEvent> rcus;
  std::vector<TraversalRecord> travs;
  // Serialization order of heterogeneous events (indices into the vectors
  // above, tagged by kind) so a written file replays the execution exactly.
  enum class EvKind : std::uint8_t { W, R, Inv, Res, Rcu, Trav };
  std::vector<std::pair<EvKind, std::size_t>> order;

  i64 t_end() const { return static_cast<i64>(writes.size()); }

  ObjId anchor(const std::string& name) const {
    auto it = anchors.find(name);
    if (it == anchors.end())
      throw std::runtime_error("trace: missing anchor " + name);
    return it->second;
  }

  const OpInv* inv_of(int op) const {
    for (const auto& i : invs)
      if (i.op == op) return &i;
    return nullptr;
  }
  const OpRes* res_of(int op) const {
    for (const auto& r : ress)
      if (r.op == op) return &r;
    return nullptr;
  }
};

// Snapshot-accelerated state reconstruction. state_at(t) = initial + writes
// with timestamp <= t. New objects referenced by later writes are added lazily
// (object ids ascend in allocation order; an object exists from the first
// write that touches one of its fields — allocation init writes come first).
class StateCache {
 public:
  explicit StateCache(const Trace& tr, int stride = snapshot_stride_from_env())
      : tr_(tr), stride_(stride > 0 ? stride : DEFAULT_SNAPSHOT_STRIDE) {}

  const State& at(i64 t) const {
    if (t < 0) t = 0;
    if (t > tr_.t_end()) t = tr_.t_end();
    std::size_t snap = static_cast<std::size_t>(t) / stride_;
    ensure_snapshot(snap);
    scratch_ = snapshots_[snap];
    replay(scratch_, static_cast<i64>(snap) * stride_, t);
    return scratch_;
  }

  // Copy-free variant for sequential sweeps: apply one more write.
  static void apply(State& s, const WriteEvent& w) {
    while (!w.loc.is_null_loc() &&
           static_cast<std::size_t>(w.loc.obj) >= s.n_objects())
      s.add_object();
    s.set(w.loc, w.val);
  }

 private:
  void ensure_snapshot(std::size_t idx) const {
    if (snapshots_.empty()) snapshots_.push_back(tr_.initial);
    while (snapshots_.size() <= idx) {
      State s = snapshots_.back();
      i64 from = static_cast<i64>(snapshots_.size() - 1) * stride_;
      replay(s, from, std::min<i64>(from + stride_, tr_.t_end()));
      snapshots_.push_back(std::move(s));
    }
  }

  void replay(State& s, i64 from, i64 to) const {
    for (i64 t = from; t < to; ++t) apply(s, tr_.writes[static_cast<std::size_t>(t)]);
  }

  const Trace& tr_;
  int stride_;
  mutable std::vector<State> snapshots_;
  mutable State scratch_;
};

// ---------------------------------------------------------------------------
// Validation

struct TraceFault {
  std::string what;
};

// Structural validation of a trace: dense write timestamps, coherent reads,
// per-thread source monotonicity, events confined to their operation windows,
// object ids allocated in order and never reused.
inline std::optional<TraceFault> validate_trace(const Trace& tr,
                                                bool allow_unfinished = false) {
  auto fault = [](std::string m) { return std::optional<TraceFault>{{std::move(m)}}; };

  for (std::size_t j = 0; j < tr.writes.size(); ++j)
    if (tr.writes[j].t != static_cast<i64>(j) + 1)
      return fault("write timestamps not dense at index " + std::to_string(j));

  // Object ids must only ever grow along the write sequence.
  std::size_t known = tr.initial.n_objects();
  for (const auto& w : tr.writes) {
    if (w.loc.is_null_loc()) return fault("write targets the null location");
    auto o = static_cast<std::size_t>(w.loc.obj);
    if (o > known) return fault("object id skips ahead at t=" + std::to_string(w.t));
    known = std::max(known, o + 1);
    if (w.val.is_ref() && static_cast<std::size_t>(w.val.as_ref()) >= known)
      return fault("write references unallocated object at t=" + std::to_string(w.t));
  }

  StateCache sc(tr);
  for (const auto& r : tr.reads) {
    if (r.src_t < 0 || r.src_t > tr.t_end())
      return fault("read src_t out of range");
    const State& s = sc.at(r.src_t);
    if (!s.has(r.loc)) return fault("read of unallocated location " + r.loc.repr());
    if (s.get(r.loc) != r.val)
      return fault("incoherent read of " + r.loc.repr() + " at src_t=" +
                   std::to_string(r.src_t) + ": logged " + r.val.repr() +
                   ", state has " + s.get(r.loc).repr());
  }

  // Per-thread src monotonicity over the serialized event order.
  std::map<int, i64> last_src;
  for (auto [kind, idx] : tr.order) {
    int th;
    i64 t;
    switch (kind) {
      case Trace::EvKind::W:
        th = tr.writes[idx].thread;
        t = tr.writes[idx].t;
        break;
      case Trace::EvKind::R:
        th = tr.reads[idx].thread;
        t = tr.reads[idx].src_t;
        break;
      case Trace::EvKind::Inv:
        th = tr.invs[idx].thread;
        t = tr.invs[idx].t;
        break;
      case Trace::EvKind::Res: {
        const OpInv* i = tr.inv_of(tr.ress[idx].op);
        th = i ? i->thread : 0;
        t = tr.ress[idx].t;
        break;
      }
      case Trace::EvKind::Rcu:
        th = tr.rcus[idx].thread;
        t = tr.rcus[idx].t;
        break;
      default:
        continue;  // traversal records carry no position of their own
    }
    auto it = last_src.find(th);
    if (it != last_src.end() && t < it->second)
      return fault("thread-local time moves backwards on thread " + std::to_string(th));
    last_src[th] = t;
  }

  // Operation windows.
  std::map<int, std::pair<i64, i64>> window;  // op -> [inv, res]
  for (const auto& i : tr.invs) {
    if (window.count(i.op)) return fault("duplicate invocation for op " + std::to_string(i.op));
    window[i.op] = {i.t, -1};
  }
  for (const auto& r : tr.ress) {
    auto it = window.find(r.op);
    if (it == window.end()) return fault("response without invocation");
    if (it->second.second != -1) return fault("duplicate response for op " + std::to_string(r.op));
    if (r.t < it->second.first) return fault("response before invocation");
    it->second.second = r.t;
  }
  if (!allow_unfinished)
    for (const auto& [op, w] : window)
      if (w.second == -1) return fault("operation " + std::to_string(op) + " never responded");
  auto in_window = [&](int op, i64 t) {
    if (op < 0) return true;  // environment events are unconstrained
    auto it = window.find(op);
    if (it == window.end()) return false;
    i64 hi = it->second.second == -1 ? tr.t_end() : it->second.second;
    return t >= it->second.first && t <= hi;
  };
  for (const auto& w : tr.writes)
    if (!in_window(w.op, w.t)) return fault("write outside its operation window at t=" + std::to_string(w.t));
  for (const auto& r : tr.reads)
    if (!in_window(r.op, r.src_t)) return fault("read outside its operation window");
  for (const auto& e : tr.rcus)
    if (!in_window(e.op, e.t)) return fault("rcu event outside its operation window");

  return std::nullopt;
}

// ---------------------------------------------------------------------------
// JSON-lines serialization

inline json value_to_json(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Nil: return nullptr;
    case Value::Kind::Int: return v.num;
    case Value::Kind::Bool: return v.num != 0;
    case Value::Kind::Ref: return json{{"ref", v.num}};
  }
  return nullptr;
}

inline Value value_from_json(const json& j) {
  if (j.is_null()) return Value::nil();
  if (j.is_boolean()) return Value::boolean(j.get<bool>());
  if (j.is_number_integer()) return Value::integer(j.get<i64>());
  if (j.is_object() && j.contains("ref"))
    return Value::ref(j["ref"].get<ObjId>());
  throw std::runtime_error("bad value in trace json: " + j.dump());
}

inline json loc_to_json(const Loc& l) {
  if (l.is_null_loc()) return nullptr;
  return json::array({l.obj, std::string(field_name(l.field))});
}

inline Loc loc_from_json(const json& j) {
  if (j.is_null()) return Loc::null_loc();
  ObjId o = j.at(0).get<ObjId>();
  auto f = field_from_name(j.at(1).get<std::string>());
  if (!f) throw std::runtime_error("bad field in trace json: " + j.dump());
  return {o, *f};
}

inline void write_trace(const Trace& tr, std::ostream& os) {
  json hdr{{"ev", "hdr"},
           {"schema", "traverse-lab-trace-v1"},
           {"structure", tr.structure},
           {"keys", json::array({tr.keys.lo, tr.keys.hi})},
           {"objects", tr.initial.n_objects()}};
  json anchors = json::object();
  for (const auto& [name, obj] : tr.anchors) anchors[name] = obj;
  hdr["anchors"] = anchors;
  json init = json::array();
  for (std::size_t o = 0; o < tr.initial.n_objects(); ++o)
    for (std::size_t f = 0; f < FIELD_COUNT; ++f) {
      Loc l{static_cast<ObjId>(o), static_cast<Field>(f)};
      const Value& v = tr.initial.get(l);
      if (!v.is_nil())
        init.push_back(json::array(
            {l.obj, std::string(field_name(l.field)), value_to_json(v)}));
    }
  hdr["initial"] = init;
  os << hdr.dump() << '\n';

  for (auto [kind, idx] : tr.order) {
    json j;
    switch (kind) {
      case Trace::EvKind::W: {
        const auto& w = tr.writes[idx];
        j = {{"ev", "w"},     {"t", w.t},           {"th", w.thread},
             {"op", w.op},    {"loc", loc_to_json(w.loc)}, {"val", value_to_json(w.val)},
             {"label", w.label}};
        if (!w.ghost.empty()) {
          json g = json::array();
          for (const auto& [l, v] : w.ghost)
            g.push_back(json::array({loc_to_json(l), value_to_json(v)}));
          j["ghost"] = g;
        }
        break;
      }
      case Trace::EvKind::R: {
        const auto& r = tr.reads[idx];
        j = {{"ev", "r"},   {"src", r.src_t}, {"th", r.thread},
             {"op", r.op},  {"loc", loc_to_json(r.loc)}, {"val", value_to_json(r.val)}};
        break;
      }
      case Trace::EvKind::Inv: {
        const auto& i = tr.invs[idx];
        j = {{"ev", "inv"}, {"op", i.op},   {"th", i.thread},
             {"kind", i.kind}, {"key", i.key}, {"t", i.t}};
        if (i.data) j["data"] = *i.data;
        break;
      }
      case Trace::EvKind::Res: {
        const auto& r = tr.ress[idx];
        j = {{"ev", "res"}, {"op", r.op}, {"ret", value_to_json(r.ret)}, {"t", r.t}};
        break;
      }
      case Trace::EvKind::Rcu: {
        const auto& e = tr.rcus[idx];
        j = {{"ev", e.enter ? "rcu_enter" : "rcu_exit"},
             {"th", e.thread},
             {"op", e.op},
             {"t", e.t},
             {"sec", e.section}};
        break;
      }
      case Trace::EvKind::Trav: {
        const auto& tv = tr.travs[idx];
        j = {{"ev", "trav"}, {"op", tv.op},     {"th", tv.thread},
             {"kind", tv.kind}, {"k", tv.k},    {"base", tv.base},
             {"glue", tv.glue_base}};
        json steps = json::array();
        for (const auto& s : tv.steps)
          steps.push_back(json::array(
              {s.loc.obj, std::string(field_name(s.loc.field)), s.t}));
        j["steps"] = steps;
        j["final"] = tv.final_loc ? loc_to_json(*tv.final_loc) : json(nullptr);
        if (tv.final_loc && tv.final_loc->is_null_loc()) j["final"] = "nullloc";
        if (tv.tag_value) {
          j["tag_v"] = *tv.tag_value;
          j["tag_t"] = *tv.tag_src_t;
          j["tag_obj"] = *tv.tag_obj;
        }
        break;
      }
    }
    os << j.dump() << '\n';
  }
}

inline Trace read_trace(std::istream& is) {
  Trace tr;
  std::string line;
  bool have_hdr = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    std::string ev = j.at("ev").get<std::string>();
    if (ev == "hdr") {
      have_hdr = true;
      tr.structure = j.at("structure").get<std::string>();
      tr.keys.lo = j.at("keys").at(0).get<i64>();
      tr.keys.hi = j.at("keys").at(1).get<i64>();
      for (auto it = j.at("anchors").begin(); it != j.at("anchors").end(); ++it)
        tr.anchors[it.key()] = it.value().get<ObjId>();
      std::size_t n = j.at("objects").get<std::size_t>();
      for (std::size_t o = 0; o < n; ++o) tr.initial.add_object();
      for (const auto& e : j.at("initial")) {
        Loc l{e.at(0).get<ObjId>(), *field_from_name(e.at(1).get<std::string>())};
        tr.initial.set(l, value_from_json(e.at(2)));
      }
    } else if (ev == "w") {
      WriteEvent w;
      w.t = j.at("t").get<i64>();
      w.thread = j.at("th").get<int>();
      w.op = j.at("op").get<int>();
      w.loc = loc_from_json(j.at("loc"));
      w.val = value_from_json(j.at("val"));
      w.label = j.at("label").get<std::string>();
      if (j.contains("ghost"))
        for (const auto& g : j["ghost"])
          w.ghost.emplace_back(loc_from_json(g.at(0)), value_from_json(g.at(1)));
      tr.order.emplace_back(Trace::EvKind::W, tr.writes.size());
      tr.writes.push_back(std::move(w));
    } else if (ev == "r") {
      ReadEvent r;
      r.src_t = j.at("src").get<i64>();
      r.thread = j.at("th").get<int>();
      r.op = j.at("op").get<int>();
      r.loc = loc_from_json(j.at("loc"));
      r.val = value_from_json(j.at("val"));
      tr.order.emplace_back(Trace::EvKind::R, tr.reads.size());
      tr.reads.push_back(std::move(r));
    } else if (ev == "inv") {
      OpInv i;
      i.op = j.at("op").get<int>();
      i.thread = j.at("th").get<int>();
      i.kind = j.at("kind").get<std::string>();
      i.key = j.at("key").get<i64>();
      if (j.contains("data")) i.data = j["data"].get<i64>();
      i.t = j.at("t").get<i64>();
      tr.order.emplace_back(Trace::EvKind::Inv, tr.invs.size());
      tr.invs.push_back(std::move(i));
    } else if (ev == "res") {
      OpRes r;
      r.op = j.at("op").get<int>();
      r.ret = value_from_json(j.at("ret"));
      r.t = j.at("t").get<i64>();
      tr.order.emplace_back(Trace::EvKind::Res, tr.ress.size());
      tr.ress.push_back(std::move(r));
    } else if (ev == "rcu_enter" || ev == "rcu_exit") {
      RcuEvent e;
      e.enter = ev == "rcu_enter";
      e.thread = j.at("th").get<int>();
      e.op = j.at("op").get<int>();
      e.t = j.at("t").get<i64>();
      e.section = j.at("sec").get<int>();
      tr.order.emplace_back(Trace::EvKind::Rcu, tr.rcus.size());
      tr.rcus.push_back(std::move(e));
    } else if (ev == "trav") {
      TraversalRecord tv;
      tv.op = j.at("op").get<int>();
      tv.thread = j.at("th").get<int>();
      tv.kind = j.at("kind").get<std::string>();
      tv.k = j.at("k").get<i64>();
      tv.base = j.at("base").get<i64>();
      tv.glue_base = j.at("glue").get<bool>();
      for (const auto& s : j.at("steps"))
        tv.steps.push_back(
            {{s.at(0).get<ObjId>(), *field_from_name(s.at(1).get<std::string>())},
             s.at(2).get<i64>()});
      const auto& fin = j.at("final");
      if (fin.is_string())
        tv.final_loc = Loc::null_loc();
      else if (!fin.is_null())
        tv.final_loc = loc_from_json(fin);
      if (j.contains("tag_v")) {
        tv.tag_value = j["tag_v"].get<i64>();
        tv.tag_src_t = j["tag_t"].get<i64>();
        tv.tag_obj = j["tag_obj"].get<ObjId>();
      }
      tr.order.emplace_back(Trace::EvKind::Trav, tr.travs.size());
      tr.travs.push_back(std::move(tv));
    } else {
      throw std::runtime_error("unknown trace event: " + ev);
    }
  }
  if (!have_hdr) throw std::runtime_error("trace stream has no header record");
  return tr;
}

inline std::string trace_to_string(const Trace& tr) {
  std::ostringstream os;
  write_trace(tr, os);
  return os.str();
}

}  // namespace tlab

// Structure tests on single-thread schedules. The oracle for the random
// trials is a plain std::set replayed op by op: with one thread there is no
// concurrency to blame, so every return value and the final abstract set must
// match the model exactly. Fixed scenarios pin down the shapes the random
// walks may miss (two-children removals, backtracking pointers, the rotation
// copy) and the trace-level disciplines (mark-before-unlink, tag bumps, ghost
// annotations).
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "traverselab/lin.hpp"
#include "traverselab/reach.hpp"
#include "traverselab/runtime.hpp"
#include "traverselab/sched.hpp"
#include "traverselab/structures.hpp"
#include "traverselab/trace.hpp"

using namespace tlab;

namespace {

struct SeqOp {
  std::string kind;
  i64 key;
  std::optional<i64> data;  // citrus insert payload override
};

struct SeqRun {
  RunResult rr;
  std::vector<Value> rets;  // by op id == program order (single thread)
};

SeqRun run_seq(const std::string& st, const std::vector<i64>& init,
               const std::vector<SeqOp>& ops) {
  EngineConfig ec;
  ec.n_threads = 1;
  ReplayPolicy pol({});
  Engine eng(st, {1, 8}, ec, &pol);
  setup_structure(eng, st, init);
  std::vector<std::vector<PlannedOp>> plan(1);
  for (const auto& o : ops) {
    PlannedOp p = plan_op(eng, st, o.kind, o.key);
    if (o.data) {
      ObjId root = eng.anchor("root");
      i64 k = o.key, d = *o.data;
      p.data = d;
      p.body = [=](OpCtx& c) { return citrus::insert(c, root, k, d); };
    }
    plan[0].push_back(std::move(p));
  }
  SeqRun out{eng.run(plan), {}};
  REQUIRE(out.rr.outcome == Outcome::Complete);
  auto fault = validate_trace(out.rr.trace);
  if (fault) FAIL(fault->what);
  for (int op = 0; op < static_cast<int>(ops.size()); ++op) {
    const OpRes* r = out.rr.trace.res_of(op);
    REQUIRE(r != nullptr);
    out.rets.push_back(r->ret);
  }
  return out;
}

State final_state(const Trace& tr) {
  StateCache sc(tr);
  return sc.at(tr.t_end());
}

// Walks the succ chain from the min sentinel: keys strictly increase, no node
// is marked, the chain ends at the max sentinel. With `pred` set, each hop is
// also checked to be inverted by the pred field (LO tree). Returns the
// interior keys in order.
std::vector<i64> chain_keys(const State& s, const Trace& tr, bool pred) {
  ObjId x = tr.anchor("min");
  CHECK(s.key_of(x) == KEY_NEG_INF);
  std::vector<i64> ks;
  i64 prev = KEY_NEG_INF;
  for (int guard = 0; guard < 64; ++guard) {
    Value nxt = s.get({x, Field::succ});
    if (!nxt.is_ref()) {
      CHECK(s.key_of(x) == KEY_POS_INF);
      return ks;
    }
    ObjId y = nxt.as_ref();
    i64 k = s.key_of(y);
    CHECK(k > prev);
    CHECK(!s.get({y, Field::rem}).as_bool());
    if (pred) CHECK(s.get({y, Field::pred}) == Value::ref(x));
    if (k != KEY_POS_INF) ks.push_back(k);
    prev = k;
    x = y;
  }
  FAIL("succ chain does not terminate");
  return ks;
}

// LO tree walk from the root sentinel: BST bounds (lo, hi), no revisits, and
// (when `parents` is set, i.e. no rotations ran) child->parent back links.
void lo_tree_collect(const State& s, ObjId x, i64 lo, i64 hi, bool parents,
                     std::set<i64>& out, std::set<ObjId>& seen) {
  REQUIRE(seen.insert(x).second);
  i64 k = s.key_of(x);
  CHECK(lo < k);
  CHECK(k < hi);
  if (k != KEY_NEG_INF && k != KEY_POS_INF) out.insert(k);
  const std::pair<Field, std::pair<i64, i64>> sides[] = {
      {Field::left, {lo, k}}, {Field::right, {k, hi}}};
  for (const auto& [f, b] : sides) {
    Value c = s.get({x, f});
    if (!c.is_ref()) continue;
    if (parents) CHECK(s.get({c.as_ref(), Field::parent}) == Value::ref(x));
    lo_tree_collect(s, c.as_ref(), b.first, b.second, parents, out, seen);
  }
}

std::set<i64> lo_tree_keys(const State& s, const Trace& tr, bool parents) {
  std::set<i64> out;
  std::set<ObjId> seen;
  // Root is the max sentinel; lo/hi bounds here are open, so walk with the
  // widest closed interval expressible and special-case the sentinels by
  // letting them sit on the bounds.
  ObjId root = tr.anchor("root");
  CHECK(s.key_of(root) == KEY_POS_INF);
  seen.insert(root);
  Value l = s.get({root, Field::left});
  if (l.is_ref()) {
    if (parents) CHECK(s.get({l.as_ref(), Field::parent}) == Value::ref(root));
    ObjId mn = l.as_ref();
    CHECK(s.key_of(mn) == KEY_NEG_INF);
    REQUIRE(seen.insert(mn).second);
    CHECK(!s.get({mn, Field::left}).is_ref());
    Value r = s.get({mn, Field::right});
    if (r.is_ref()) {
      if (parents) CHECK(s.get({r.as_ref(), Field::parent}) == Value::ref(mn));
      lo_tree_collect(s, r.as_ref(), KEY_NEG_INF, KEY_POS_INF, parents, out,
                      seen);
    }
  }
  CHECK(!s.get({root, Field::right}).is_ref());
  return out;
}

// CF tree walk: every reachable node is physically live (rem clear) and in
// BST position; returns the keys whose del flag is also clear.
void cf_collect(const State& s, ObjId x, i64 lo, i64 hi, std::set<i64>& live,
                int depth) {
  REQUIRE(depth < 64);
  i64 k = s.key_of(x);
  CHECK(lo < k);
  CHECK(k <= hi);
  CHECK(!s.get({x, Field::rem}).as_bool());
  if (k != KEY_POS_INF && !s.get({x, Field::del_}).as_bool()) live.insert(k);
  Value l = s.get({x, Field::left});
  if (l.is_ref()) cf_collect(s, l.as_ref(), lo, k - 1, live, depth + 1);
  Value r = s.get({x, Field::right});
  if (r.is_ref()) cf_collect(s, r.as_ref(), k, hi, live, depth + 1);
}

std::set<i64> cf_live_keys(const State& s, const Trace& tr) {
  std::set<i64> live;
  cf_collect(s, tr.anchor("root"), KEY_NEG_INF, KEY_POS_INF, live, 0);
  return live;
}

// Citrus walk: weak BST bounds (left strictly smaller, right >=), reachable
// nodes unmarked, sentinel keys -1 and +inf excluded. Returns key -> data.
void cit_collect(const State& s, ObjId x, i64 lo, i64 hi,
                 std::map<i64, i64>& out, int depth) {
  REQUIRE(depth < 64);
  i64 k = s.key_of(x);
  CHECK(lo <= k);
  CHECK(k <= hi);
  CHECK(!s.get({x, Field::rem}).as_bool());
  if (k >= 0 && k != KEY_POS_INF) {
    CHECK(!out.count(k));
    out[k] = s.get({x, Field::data}).as_int();
  }
  Value l = s.get({x, Field::left});
  if (l.is_ref()) cit_collect(s, l.as_ref(), lo, k - 1, out, depth + 1);
  Value r = s.get({x, Field::right});
  if (r.is_ref()) cit_collect(s, r.as_ref(), k, hi, out, depth + 1);
}

std::map<i64, i64> citrus_map(const State& s, const Trace& tr) {
  std::map<i64, i64> out;
  cit_collect(s, tr.anchor("root"), KEY_NEG_INF, KEY_POS_INF, out, 0);
  return out;
}

// A node must be marked before the unlink that removes it from the chain, by
// the same operation (lazy list and LO tree delete).
void check_mark_before_unlink(const Trace& tr) {
  std::set<int> marked;
  for (const auto& w : tr.writes) {
    if (w.label == "delete:rem-mark") marked.insert(w.op);
    if (w.label == "delete:succ-unlink") CHECK(marked.count(w.op) == 1);
  }
}

// Citrus tag discipline: outside node initialization, the only writes to tag
// are delete-side bumps, and each one is preceded (same op, same object) by a
// write nulling that object's left child. Conversely every such nulling is
// eventually bumped.
void check_tag_discipline(const Trace& tr) {
  std::map<std::pair<int, ObjId>, int> pending;
  for (const auto& w : tr.writes) {
    if (w.op < 0 || w.label.find(":init-") != std::string::npos) continue;
    if (w.loc.field == Field::left && !w.val.is_ref())
      pending[{w.op, w.loc.obj}]++;
    if (w.loc.field == Field::tag) {
      CHECK(w.label == "delete:tag-bump");
      auto it = pending.find({w.op, w.loc.obj});
      REQUIRE(it != pending.end());
      if (--it->second == 0) pending.erase(it);
    }
  }
  CHECK(pending.empty());
}

void check_ghost_labels(const Trace& tr) {
  for (const auto& w : tr.writes)
    if (!w.ghost.empty())
      CHECK((w.label == "delete:link-w" || w.label == "delete:unlink-succ"));
}

const WriteEvent* find_write(const Trace& tr, const std::string& label) {
  for (const auto& w : tr.writes)
    if (w.label == label) return &w;
  return nullptr;
}

int count_writes(const Trace& tr, const std::string& label) {
  int n = 0;
  for (const auto& w : tr.writes)
    if (w.label == label) ++n;
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("lazy list: membership before and after the first insert") {
  auto run = run_seq("lazylist", {},
                     {{"contains", 5, {}}, {"insert", 5, {}}, {"contains", 5, {}}});
  CHECK(run.rets[0] == Value::boolean(false));
  CHECK(run.rets[1] == Value::boolean(true));
  CHECK(run.rets[2] == Value::boolean(true));
  State fin = final_state(run.rr.trace);
  CHECK(chain_keys(fin, run.rr.trace, /*pred=*/false) == std::vector<i64>{5});
}

TEST_CASE("lo tree: insert twice, delete, then a missing lookup") {
  auto run = run_seq("lotree", {},
                     {{"insert", 3, {}},
                      {"insert", 1, {}},
                      {"delete", 3, {}},
                      {"contains", 3, {}}});
  CHECK(run.rets[0] == Value::boolean(true));
  CHECK(run.rets[1] == Value::boolean(true));
  CHECK(run.rets[2] == Value::boolean(true));
  CHECK(run.rets[3] == Value::boolean(false));
  State fin = final_state(run.rr.trace);
  CHECK(chain_keys(fin, run.rr.trace, /*pred=*/true) == std::vector<i64>{1});
  CHECK(lo_tree_keys(fin, run.rr.trace, /*parents=*/true) == std::set<i64>{1});
  check_mark_before_unlink(run.rr.trace);
}

TEST_CASE("lo tree: removing a node with two children keeps list and tree aligned") {
  // Insert order 2,1,3 hangs 1 and 3 under 2; deleting 2 must splice its
  // successor 3 into the tree slot while the list drops straight to 1 -> 3.
  auto run = run_seq("lotree", {},
                     {{"insert", 2, {}},
                      {"insert", 1, {}},
                      {"insert", 3, {}},
                      {"delete", 2, {}}});
  for (const Value& v : run.rets) CHECK(v == Value::boolean(true));
  State fin = final_state(run.rr.trace);
  CHECK(chain_keys(fin, run.rr.trace, /*pred=*/true) == std::vector<i64>({1, 3}));
  CHECK(lo_tree_keys(fin, run.rr.trace, /*parents=*/true) ==
        std::set<i64>({1, 3}));
}

TEST_CASE("cf tree: delete and re-insert toggle the logical flag in place") {
  auto run = run_seq("cftree", {},
                     {{"insert", 2, {}}, {"delete", 2, {}}, {"insert", 2, {}}});
  CHECK(run.rets[0] == Value::boolean(true));
  CHECK(run.rets[1] == Value::boolean(true));
  CHECK(run.rets[2] == Value::boolean(true));
  const Trace& tr = run.rr.trace;
  CHECK(count_writes(tr, "insert:tree-link") == 1);  // node created once
  CHECK(count_writes(tr, "delete:del-mark") == 1);
  CHECK(count_writes(tr, "insert:undelete") == 1);
  CHECK(cf_live_keys(final_state(tr), tr) == std::set<i64>{2});
}

TEST_CASE("cf tree: failed updates refresh the flag without a decisive label") {
  auto run = run_seq("cftree", {2},
                     {{"insert", 2, {}}, {"delete", 5, {}}});
  CHECK(run.rets[0] == Value::boolean(false));
  CHECK(run.rets[1] == Value::boolean(false));
  const Trace& tr = run.rr.trace;
  // The figure writes the flag unconditionally; the no-change write must not
  // carry a decisive label.
  CHECK(count_writes(tr, "insert:refresh") == 1);
  CHECK(count_writes(tr, "insert:undelete") == 0);
  CHECK(count_writes(tr, "delete:del-mark") == 0);
}

TEST_CASE("cf tree: physical removal leaves backtracking pointers behind") {
  auto run = run_seq("cftree", {},
                     {{"insert", 2, {}},
                      {"insert", 3, {}},
                      {"delete", 3, {}},
                      {"remove-right", 3, {}},
                      {"remove-right", 3, {}}});
  CHECK(run.rets[3] == Value::boolean(true));
  CHECK(run.rets[4] == Value::boolean(false));  // already gone
  const Trace& tr = run.rr.trace;
  const WriteEvent* unlink = find_write(tr, "remove:unlink");
  const WriteEvent* markw = find_write(tr, "remove:rem-mark");
  REQUIRE(unlink != nullptr);
  REQUIRE(markw != nullptr);
  ObjId z = unlink->loc.obj;  // the parent that dropped its right child
  ObjId y = markw->loc.obj;   // the removed node
  State fin = final_state(tr);
  CHECK(fin.get({y, Field::left}) == Value::ref(z));
  CHECK(fin.get({y, Field::right}) == Value::ref(z));
  CHECK(fin.get({y, Field::rem}).as_bool());
  CHECK(cf_live_keys(fin, tr) == std::set<i64>{2});
}

TEST_CASE("cf tree: right rotation copies the pivot and retires the original") {
  // 4 -> 2 -> 1 down the left spine; rotating at 4 must hoist 1, re-hang a
  // fresh copy of 2 on its right, and mark the original 2 removed.
  auto run = run_seq("cftree", {},
                     {{"insert", 4, {}},
                      {"insert", 2, {}},
                      {"insert", 1, {}},
                      {"rotate", 9, {}}});
  for (const Value& v : run.rets) CHECK(v == Value::boolean(true));
  const Trace& tr = run.rr.trace;
  const WriteEvent* xr = find_write(tr, "rotate:x-right");
  const WriteEvent* ry = find_write(tr, "rotate:rem-y");
  REQUIRE(xr != nullptr);
  REQUIRE(ry != nullptr);
  REQUIRE(xr->val.is_ref());
  ObjId z = xr->val.as_ref();
  State fin = final_state(tr);
  CHECK(fin.key_of(z) == 2);
  CHECK(fin.key_of(ry->loc.obj) == 2);  // the retired original
  CHECK(fin.get({ry->loc.obj, Field::rem}).as_bool());
  CHECK(cf_live_keys(fin, tr) == std::set<i64>({1, 2, 4}));
}

TEST_CASE("citrus: stored data comes back from a lookup") {
  auto run = run_seq("citrus", {}, {{"insert", 5, 50}, {"contains", 5, {}}});
  CHECK(run.rets[0] == Value::boolean(true));
  CHECK(run.rets[1] == Value::integer(50));
  const OpInv* inv = run.rr.trace.inv_of(0);
  REQUIRE(inv != nullptr);
  CHECK(inv->data == std::optional<i64>(50));
}

TEST_CASE("citrus: deleting an inner node installs a marked successor copy") {
  auto run = run_seq("citrus", {},
                     {{"insert", 3, {}},
                      {"insert", 1, {}},
                      {"insert", 5, {}},
                      {"delete", 3, {}},
                      {"contains", 1, {}},
                      {"contains", 5, {}},
                      {"contains", 3, {}}});
  CHECK(run.rets[3] == Value::boolean(true));
  CHECK(run.rets[4] == Value::integer(citrus::default_data(1)));
  CHECK(run.rets[5] == Value::integer(citrus::default_data(5)));
  CHECK(run.rets[6] == Value::boolean(false));
  const Trace& tr = run.rr.trace;

  // The replacement is first published under the deleted key (ghost open 3),
  // then takes over its real key once the successor is unlinked (collapse 5).
  const WriteEvent* linkw = find_write(tr, "delete:link-w");
  const WriteEvent* unlink = find_write(tr, "delete:unlink-succ");
  REQUIRE(linkw != nullptr);
  REQUIRE(unlink != nullptr);
  REQUIRE(linkw->val.is_ref());
  ObjId w = linkw->val.as_ref();
  REQUIRE(linkw->ghost.size() == 1);
  CHECK(linkw->ghost[0].first == Loc({w, Field::ghostKey}));
  CHECK(linkw->ghost[0].second == Value::integer(3));
  REQUIRE(unlink->ghost.size() == 1);
  CHECK(unlink->ghost[0].first == Loc({w, Field::ghostKey}));
  CHECK(unlink->ghost[0].second == Value::integer(5));

  GhostInfo gi(tr);
  auto iv = gi.intervals(tr);
  REQUIRE(iv.size() == 1);
  auto [t_open, t_collapse, obj] = iv[0];
  CHECK(obj == w);
  CHECK(t_open == linkw->t);
  CHECK(t_collapse == unlink->t);
  CHECK(t_open < t_collapse);

  State fin = final_state(tr);
  std::map<i64, i64> want = {{1, citrus::default_data(1)},
                             {5, citrus::default_data(5)}};
  CHECK(citrus_map(fin, tr) == want);
  check_tag_discipline(tr);
  check_ghost_labels(tr);
}

TEST_CASE("citrus: deleting a leaf bumps the parent tag when its left child empties") {
  auto run = run_seq("citrus", {3, 1}, {{"delete", 1, {}}});
  CHECK(run.rets[0] == Value::boolean(true));
  const Trace& tr = run.rr.trace;
  CHECK(count_writes(tr, "delete:tag-bump") == 1);
  check_tag_discipline(tr);
  CHECK(citrus_map(final_state(tr), tr) ==
        std::map<i64, i64>{{3, citrus::default_data(3)}});
}

TEST_CASE("sequential runs agree with a reference set model") {
  const std::string structures[] = {"lazylist", "lotree", "cftree", "citrus"};
  for (int si = 0; si < 4; ++si) {
    const std::string& st = structures[si];
    CAPTURE(st);
    std::mt19937_64 rng(0x5eedULL + static_cast<uint64_t>(si));
    for (int trial = 0; trial < 30; ++trial) {
      CAPTURE(trial);
      std::vector<i64> init;
      for (i64 k = 1; k <= 6; ++k)
        if (rng() % 2) init.push_back(k);
      std::set<i64> model(init.begin(), init.end());

      std::vector<SeqOp> ops;
      bool maintenance = false;
      int n = 8 + static_cast<int>(rng() % 8);
      for (int i = 0; i < n; ++i) {
        i64 k = 1 + static_cast<i64>(rng() % 6);
        int r = static_cast<int>(rng() % 10);
        std::string kind = r < 3 ? "contains" : r < 6 ? "insert" : r < 9 ? "delete" : "";
        if (kind.empty()) {
          if (st == "lotree") {
            kind = "rotate";
            maintenance = true;
          } else if (st == "cftree") {
            kind = (rng() % 2) ? "rotate" : "remove-right";
            maintenance = true;
          } else {
            kind = "contains";
          }
        }
        ops.push_back({kind, k, {}});
      }

      auto run = run_seq(st, init, ops);
      std::set<i64> m = model;
      for (std::size_t i = 0; i < ops.size(); ++i) {
        CAPTURE(i);
        const SeqOp& o = ops[i];
        const Value& ret = run.rets[i];
        if (o.kind == "insert") {
          CHECK(ret == Value::boolean(m.insert(o.key).second));
        } else if (o.kind == "delete") {
          CHECK(ret == Value::boolean(m.erase(o.key) > 0));
        } else if (o.kind == "contains") {
          if (st == "citrus" && m.count(o.key))
            CHECK(ret == Value::integer(citrus::default_data(o.key)));
          else
            CHECK(ret == Value::boolean(m.count(o.key) > 0));
        }
        // rotate / remove-right never change the abstract set
      }

      const Trace& tr = run.rr.trace;
      State fin = final_state(tr);
      CHECK(abstract_set(fin, st, abstraction_entry(tr), tr.keys) == m);

      if (st == "lazylist" || st == "lotree") {
        auto ks = chain_keys(fin, tr, /*pred=*/st == "lotree");
        CHECK(std::set<i64>(ks.begin(), ks.end()) == m);
        check_mark_before_unlink(tr);
      }
      if (st == "lotree" && !maintenance)
        CHECK(lo_tree_keys(fin, tr, /*parents=*/true) == m);
      if (st == "cftree") CHECK(cf_live_keys(fin, tr) == m);
      if (st == "citrus") {
        std::map<i64, i64> got = citrus_map(fin, tr);
        std::set<i64> keys_got;
        for (const auto& [k, d] : got) {
          keys_got.insert(k);
          CHECK(d == citrus::default_data(k));
        }
        CHECK(keys_got == m);
        check_tag_discipline(tr);
        check_ghost_labels(tr);
      }
    }
  }
}

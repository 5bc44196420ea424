// Logical-ordering tree: an internal BST whose nodes are also threaded into a
// doubly linked list (succ/pred) in key order. The list is the source of
// truth; the tree is an index that may briefly lag it. Traversals descend the
// tree without locks, then correct themselves along pred/succ pointers.
//
// Each node carries two locks: treeLock guards its child pointers, succLock
// guards the list.
#pragma once

#include <utility>
#include <vector>

#include "../runtime.hpp"

namespace tlab {
namespace lotree {

constexpr int TREE = 0;
constexpr int SUCC = 1;

struct TreeLoc {
  ObjId node;
  bool exact;
};

// Unlocked tree descent. Steps are appended only when the walk moves; a null
// probe contributes none, so the last recorded link justifies whatever the
// caller does next from the node it stopped at.
inline TreeLoc tree_locate(OpCtx& c, ObjId root, i64 k) {
  ObjId y = root;
  for (;;) {
    Value kv = c.read(y, Field::key);
    i64 kt = c.last_read_t();
    if (kv.as_int() == k) return {y, true};
    Field f = kv.as_int() < k ? Field::right : Field::left;
    Value ln = c.read(y, f);
    if (!ln.is_ref()) return {y, false};
    c.trav_step_at(Loc{y, Field::key}, kt);
    c.trav_step(Loc{y, f});
    y = ln.as_ref();
  }
}

// Tree descent plus one pred hop, yielding the list predecessor candidate for
// k. The hop alone is not always enough under concurrent restructuring; the
// locked revalidation in insert/delete restarts when it was not.
inline ObjId locate_pred(OpCtx& c, ObjId root, i64 k) {
  c.trav_begin("treepred", k, c.now());
  TreeLoc tl = tree_locate(c, root, k);
  ObjId x = tl.node;
  Value kv = c.read(x, Field::key);
  i64 kt = c.last_read_t();
  ObjId p;
  if (kv.as_int() >= k) {
    c.trav_step_at(Loc{x, Field::key}, kt);
    Value pv = c.read(x, Field::pred);
    c.trav_step(Loc{x, Field::pred});
    p = pv.as_ref();
    c.trav_final(Loc{p, Field::key});
  } else {
    p = x;
    c.trav_final(Loc{x, Field::key});
  }
  c.trav_commit();
  return p;
}

inline Value contains(OpCtx& c, ObjId root, i64 k) {
  c.trav_begin("treepred", k, c.now());
  TreeLoc tl = tree_locate(c, root, k);
  ObjId x = tl.node;
  i64 fk;
  // follow pred pointers until the key is not past k
  for (;;) {
    Value kv = c.read(x, Field::key);
    i64 kt = c.last_read_t();
    fk = kv.as_int();
    if (fk <= k) {
      c.trav_final(Loc{x, Field::key});
      break;
    }
    c.trav_step_at(Loc{x, Field::key}, kt);
    Value pv = c.read(x, Field::pred);
    c.trav_step(Loc{x, Field::pred});
    x = pv.as_ref();
  }
  c.trav_commit();
  // then succ pointers until the key is not short of k; this second segment
  // glues onto the first, it starts wherever the pred walk ended
  bool began = false;
  for (;;) {
    Value kv = c.read(x, Field::key);
    i64 kt = c.last_read_t();
    fk = kv.as_int();
    if (!began) {
      c.trav_begin("succ", k, kt);
      c.trav_glue();
      began = true;
    }
    if (fk >= k) {
      c.trav_final(Loc{x, Field::key});
      break;
    }
    c.trav_step_at(Loc{x, Field::key}, kt);
    Value sv = c.read(x, Field::succ);
    c.trav_step(Loc{x, Field::succ});
    x = sv.as_ref();
  }
  c.trav_commit();
  if (fk != k) return Value::boolean(false);
  Value rm = c.read(x, Field::rem);
  return Value::boolean(!rm.as_bool());
}

// pre: caller holds par's treeLock is NOT required; this locks it. n's
// treeLock must be held and par was read from n.parent.
// `held`: a node whose tree latch the caller already owns. The source
// algorithm's latches are reentrant; ours are not, so when the successor is
// n's direct right child the recursive acquire must be elided.
inline void update_child(OpCtx& c, ObjId par, ObjId n, Value child,
                         ObjId held = -1) {
  bool own = par != held;
  if (own) c.lock(par, TREE);
  Value pl = c.read(par, Field::left);
  if (pl.is_ref() && pl.as_ref() == n)
    c.write(par, Field::left, child, "tree:child-left");
  else
    c.write(par, Field::right, child, "tree:child-right");
  if (child.is_ref())
    c.write(child.as_ref(), Field::parent, Value::ref(par), "tree:parent");
  if (own) c.unlock(par, TREE);
}

inline void remove_from_tree(OpCtx& c, ObjId n) {
  c.lock(n, TREE);
  Value lv = c.read(n, Field::left);
  if (!lv.is_ref()) {
    Value pv = c.read(n, Field::parent);
    Value rv = c.read(n, Field::right);
    update_child(c, pv.as_ref(), n, rv);
    c.unlock(n, TREE);
    return;
  }
  Value rv = c.read(n, Field::right);
  if (!rv.is_ref()) {
    Value pv = c.read(n, Field::parent);
    update_child(c, pv.as_ref(), n, lv);
    c.unlock(n, TREE);
    return;
  }
  // two children: the list successor is the leftmost node of the right
  // subtree, so it can take n's place after being unlinked from its own spot
  ObjId sc = c.read(n, Field::succ).as_ref();
  c.lock(sc, TREE);
  Value spv = c.read(sc, Field::parent);
  Value scr = c.read(sc, Field::right);
  update_child(c, spv.as_ref(), sc, scr, /*held=*/n);
  Value lv2 = c.read(n, Field::left);
  c.write(sc, Field::left, lv2, "tree:copy-left");
  Value rv2 = c.read(n, Field::right);  // may have changed if sc was n.right
  c.write(sc, Field::right, rv2, "tree:copy-right");
  c.write(lv2.as_ref(), Field::parent, Value::ref(sc), "tree:parent-left");
  if (rv2.is_ref())
    c.write(rv2.as_ref(), Field::parent, Value::ref(sc), "tree:parent-right");
  Value pv = c.read(n, Field::parent);
  update_child(c, pv.as_ref(), n, Value::ref(sc));
  c.unlock(sc, TREE);
  c.unlock(n, TREE);
}

inline Value insert(OpCtx& c, ObjId root, i64 k) {
  for (;;) {
    ObjId p = locate_pred(c, root, k);
    c.lock(p, SUCC);
    Value sv = c.read(p, Field::succ);
    if (!sv.is_ref()) {
      c.unlock(p, SUCC);
      c.restart();
      continue;
    }
    ObjId s = sv.as_ref();
    i64 pk = c.read(p, Field::key).as_int();
    i64 sk = c.read(s, Field::key).as_int();
    if (!(pk < k && k <= sk) || c.read(p, Field::rem).as_bool()) {
      c.unlock(p, SUCC);
      c.restart();
      continue;
    }
    if (sk == k) {
      c.unlock(p, SUCC);
      return Value::boolean(false);
    }
    ObjId n = c.alloc();
    c.write(n, Field::key, Value::integer(k), "insert:init-key");
    c.write(n, Field::rem, Value::boolean(false), "insert:init-rem");
    c.write(n, Field::succ, Value::ref(s), "insert:init-succ");
    c.write(n, Field::pred, Value::ref(p), "insert:init-pred");
    // parent: p when its right slot is open, else s when its left one is;
    // both slots taken means the vicinity changed under us
    ObjId z;
    bool zright;
    if (!c.read(p, Field::right).is_ref()) {
      z = p;
      zright = true;
    } else if (!c.read(s, Field::left).is_ref()) {
      z = s;
      zright = false;
    } else {
      c.unlock(p, SUCC);
      c.restart();
      continue;
    }
    c.write(n, Field::parent, Value::ref(z), "insert:init-parent");
    c.lock(z, TREE);
    Field side = zright ? Field::right : Field::left;
    if (c.read(z, side).is_ref()) {  // slot filled since the unlocked probe
      c.unlock(z, TREE);
      c.unlock(p, SUCC);
      c.restart();
      continue;
    }
    if (!c.mutated("orig-insert-order")) {
      c.write(p, Field::succ, Value::ref(n), "insert:succ-publish");
      c.write(z, side, Value::ref(n), "insert:tree-link");
      c.write(s, Field::pred, Value::ref(n), "insert:pred-link");
    } else {
      // flawed order: the tree and pred links see n before the succ list
      // publishes it, so a pred-phase walk can find a key no succ walk can
      c.write(z, side, Value::ref(n), "insert:tree-link");
      c.write(s, Field::pred, Value::ref(n), "insert:pred-link");
      c.write(p, Field::succ, Value::ref(n), "insert:succ-publish");
    }
    c.unlock(z, TREE);
    c.unlock(p, SUCC);
    return Value::boolean(true);
  }
}

inline Value erase(OpCtx& c, ObjId root, i64 k) {
  for (;;) {
    ObjId p = locate_pred(c, root, k);
    c.lock(p, SUCC);
    Value sv = c.read(p, Field::succ);
    if (!sv.is_ref()) {
      c.unlock(p, SUCC);
      c.restart();
      continue;
    }
    ObjId s = sv.as_ref();
    i64 pk = c.read(p, Field::key).as_int();
    i64 sk = c.read(s, Field::key).as_int();
    if (!(pk < k && k <= sk) || c.read(p, Field::rem).as_bool()) {
      c.unlock(p, SUCC);
      c.restart();
      continue;
    }
    if (sk != k) {
      c.unlock(p, SUCC);
      return Value::boolean(false);
    }
    c.lock(s, SUCC);
    if (!c.mutated("skip-mark"))
      c.write(s, Field::rem, Value::boolean(true), "delete:rem-mark");
    remove_from_tree(c, s);
    Value yv = c.read(s, Field::succ);
    ObjId y = yv.as_ref();
    c.write(y, Field::pred, Value::ref(p), "delete:pred-relink");
    c.write(p, Field::succ, Value::ref(y), "delete:succ-unlink");
    c.unlock(s, SUCC);
    c.unlock(p, SUCC);
    return Value::boolean(true);
  }
}

// Maintenance rotation, injected by workloads rather than self-triggered.
// Kept exactly as studied, including the stray parent write; it restructures
// the index without touching the list, which is the point of the exercise.
inline Value rotate_right_left(OpCtx& c, ObjId root, i64 k) {
  c.trav_begin("treepred", k, c.now());
  TreeLoc tl = tree_locate(c, root, k);
  c.trav_final(Loc{tl.node, Field::key});
  c.trav_commit();
  ObjId p = tl.node;
  c.lock(p, TREE);
  Value yv = c.read(p, Field::left);
  if (!yv.is_ref()) {
    c.unlock(p, TREE);
    return Value::boolean(false);
  }
  ObjId y = yv.as_ref();
  c.lock(y, TREE);
  Value xv = c.read(y, Field::left);
  if (!xv.is_ref()) {
    c.unlock(y, TREE);
    c.unlock(p, TREE);
    return Value::boolean(false);
  }
  ObjId x = xv.as_ref();
  c.lock(x, TREE);
  c.write(p, Field::left, Value::ref(x), "rotate:plink-1");
  c.write(p, Field::parent, Value::ref(y), "rotate:p-parent");
  c.write(p, Field::left, Value::ref(x), "rotate:plink-2");
  Value xr = c.read(x, Field::right);
  c.write(y, Field::left, xr, "rotate:y-left");
  c.write(x, Field::right, Value::ref(y), "rotate:x-right");
  c.unlock(x, TREE);
  c.unlock(y, TREE);
  c.unlock(p, TREE);
  return Value::boolean(true);
}

inline void setup(Engine& eng, const std::vector<i64>& keys) {
  OpCtx c = eng.setup_ctx("setup", 0);
  ObjId mn = c.alloc();
  c.write(mn, Field::key, Value::integer(KEY_NEG_INF));
  c.write(mn, Field::rem, Value::boolean(false));
  ObjId mx = c.alloc();
  c.write(mx, Field::key, Value::integer(KEY_POS_INF));
  c.write(mx, Field::rem, Value::boolean(false));
  c.write(mn, Field::succ, Value::ref(mx));
  c.write(mx, Field::pred, Value::ref(mn));
  // the min sentinel is also the leftmost tree leaf; without it the chosen
  // parent of the smallest key would sit outside the tree entirely
  c.write(mx, Field::left, Value::ref(mn));
  c.write(mn, Field::parent, Value::ref(mx));
  eng.set_anchor("min", mn);
  eng.set_anchor("max", mx);
  eng.set_anchor("root", mx);
  for (i64 k : keys) insert(c, mx, k);
}

}  // namespace lotree
}  // namespace tlab

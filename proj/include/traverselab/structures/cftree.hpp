// Contention-friendly tree: an internal BST where delete only marks (`del`)
// and physical removal plus rebalancing are separate maintenance operations.
// Removed nodes are redirected back at their parent (backtracking) so that a
// traversal caught inside them can climb out; rotation instead replaces the
// rotated node with a fresh copy.
#pragma once

#include <utility>
#include <vector>

#include "../runtime.hpp"

namespace tlab {
namespace cftree {

struct LocRes {
  ObjId x = NULL_OBJ;  // parent of y, or the last node before a null probe
  ObjId y = NULL_OBJ;
  bool found = false;
};

inline LocRes locate(OpCtx& c, ObjId root, i64 k) {
  c.trav_begin("locate", k, c.now());
  ObjId x = root;
  ObjId y = root;
  for (;;) {
    Value kv = c.read(y, Field::key);
    if (kv.as_int() == k) {
      c.trav_final(Loc{y, Field::key});
      c.trav_commit();
      return {x, y, true};
    }
    c.trav_step(Loc{y, Field::key});
    Field f = kv.as_int() < k ? Field::right : Field::left;
    Value lv = c.read(y, f);
    c.trav_step(Loc{y, f});
    x = y;
    if (!lv.is_ref()) {
      c.trav_final(Loc::null_loc());
      c.trav_commit();
      return {x, NULL_OBJ, false};
    }
    y = lv.as_ref();
  }
}

inline Value contains(OpCtx& c, ObjId root, i64 k) {
  LocRes r = locate(c, root, k);
  if (!r.found) return Value::boolean(false);
  Value dv = c.read(r.y, Field::del_);
  return Value::boolean(!dv.as_bool());
}

inline Value erase(OpCtx& c, ObjId root, i64 k) {
  for (;;) {
    LocRes r = locate(c, root, k);
    if (!r.found) return Value::boolean(false);
    c.lock(r.y);
    if (c.read(r.y, Field::rem).as_bool()) {
      c.unlock(r.y);
      c.restart();
      continue;
    }
    bool was = c.read(r.y, Field::del_).as_bool();
    // marking is the decisive write; re-marking changes nothing
    c.write(r.y, Field::del_, Value::boolean(true),
            was ? "delete:refresh" : "delete:del-mark");
    c.unlock(r.y);
    return Value::boolean(!was);
  }
}

inline Value insert(OpCtx& c, ObjId root, i64 k) {
  for (;;) {
    LocRes r = locate(c, root, k);
    if (r.found) {
      c.lock(r.y);
      if (c.read(r.y, Field::rem).as_bool()) {
        c.unlock(r.y);
        c.restart();
        continue;
      }
      bool was = c.read(r.y, Field::del_).as_bool();
      c.write(r.y, Field::del_, Value::boolean(false),
              was ? "insert:undelete" : "insert:refresh");
      c.unlock(r.y);
      return Value::boolean(was);
    }
    c.lock(r.x);
    if (c.read(r.x, Field::rem).as_bool()) {
      c.unlock(r.x);
      c.restart();
      continue;
    }
    i64 xk = c.read(r.x, Field::key).as_int();
    if (k < xk && !c.read(r.x, Field::left).is_ref()) {
      ObjId n = c.alloc();
      c.write(n, Field::key, Value::integer(k), "insert:init-key");
      c.write(n, Field::del_, Value::boolean(false), "insert:init-del");
      c.write(n, Field::rem, Value::boolean(false), "insert:init-rem");
      c.write(r.x, Field::left, Value::ref(n), "insert:tree-link");
      c.unlock(r.x);
      return Value::boolean(true);
    }
    if (k > xk && !c.read(r.x, Field::right).is_ref()) {
      ObjId n = c.alloc();
      c.write(n, Field::key, Value::integer(k), "insert:init-key");
      c.write(n, Field::del_, Value::boolean(false), "insert:init-del");
      c.write(n, Field::rem, Value::boolean(false), "insert:init-rem");
      c.write(r.x, Field::right, Value::ref(n), "insert:tree-link");
      c.unlock(r.x);
      return Value::boolean(true);
    }
    c.unlock(r.x);
    c.restart();
  }
}

// Physically unlink a logically deleted node, addressed by its own key, when
// it sits as its parent's right child and has at most one child. Injected by
// workloads.
inline Value remove_right(OpCtx& c, ObjId root, i64 k) {
  LocRes r = locate(c, root, k);
  ObjId z = r.x;
  c.lock(z);
  Value yv = c.read(z, Field::right);
  if (!yv.is_ref() || c.read(z, Field::rem).as_bool()) {
    c.unlock(z);
    return Value::boolean(false);
  }
  ObjId y = yv.as_ref();
  c.lock(y);
  if (!c.read(y, Field::del_).as_bool()) {
    c.unlock(y);
    c.unlock(z);
    return Value::boolean(false);
  }
  Value yl = c.read(y, Field::left);
  if (!yl.is_ref()) {
    Value yr = c.read(y, Field::right);
    c.write(z, Field::right, yr, "remove:unlink");
  } else {
    if (c.read(y, Field::right).is_ref()) {
      c.unlock(y);
      c.unlock(z);
      return Value::boolean(false);
    }
    c.write(z, Field::right, yl, "remove:unlink");
  }
  // point the removed node back at its parent so a traversal caught inside
  // can climb out; these writes are exactly what the strong condition rejects
  c.write(y, Field::right, Value::ref(z), "remove:backtrack-r");
  c.write(y, Field::left, Value::ref(z), "remove:backtrack-l");
  c.write(y, Field::rem, Value::boolean(true), "remove:rem-mark");
  c.unlock(y);
  c.unlock(z);
  return Value::boolean(true);
}

// Right rotation over a copy: the rotated node y is replaced by a duplicate
// hung under its left child, then retired. Injected by workloads.
inline Value rotate_right_left(OpCtx& c, ObjId root, i64 k) {
  LocRes r = locate(c, root, k);
  ObjId p = r.x;
  c.lock(p);
  Value yv = c.read(p, Field::left);
  if (!yv.is_ref() || c.read(p, Field::rem).as_bool()) {
    c.unlock(p);
    return Value::boolean(false);
  }
  ObjId y = yv.as_ref();
  c.lock(y);
  Value xv = c.read(y, Field::left);
  if (!xv.is_ref()) {
    c.unlock(y);
    c.unlock(p);
    return Value::boolean(false);
  }
  ObjId x = xv.as_ref();
  c.lock(x);
  ObjId z = c.alloc();  // duplicate(y)
  c.write(z, Field::key, c.read(y, Field::key), "rotate:init-key");
  c.write(z, Field::del_, c.read(y, Field::del_), "rotate:init-del");
  c.write(z, Field::rem, Value::boolean(false), "rotate:init-rem");
  c.write(z, Field::left, c.read(y, Field::left), "rotate:init-left");
  c.write(z, Field::right, c.read(y, Field::right), "rotate:init-right");
  c.write(z, Field::left, c.read(x, Field::right), "rotate:z-left");
  c.write(x, Field::right, Value::ref(z), "rotate:x-right");
  c.write(p, Field::left, Value::ref(x), "rotate:p-left");
  c.write(y, Field::rem, Value::boolean(true), "rotate:rem-y");
  c.unlock(x);
  c.unlock(y);
  c.unlock(p);
  return Value::boolean(true);
}

inline void setup(Engine& eng, const std::vector<i64>& keys) {
  OpCtx c = eng.setup_ctx("setup", 0);
  ObjId rt = c.alloc();
  c.write(rt, Field::key, Value::integer(KEY_POS_INF));
  c.write(rt, Field::del_, Value::boolean(false));
  c.write(rt, Field::rem, Value::boolean(false));
  eng.set_anchor("root", rt);
  for (i64 k : keys) insert(c, rt, k);
}

}  // namespace cftree
}  // namespace tlab

// Lazy sorted linked list. Traversal takes no locks; insert and delete lock
// the adjacent pair and revalidate before writing. Deletion marks `rem` first
// (the decisive write) and only then unlinks.
#pragma once

#include <utility>
#include <vector>

#include "../runtime.hpp"

namespace tlab {
namespace lazylist {

struct Walk {
  ObjId pred = NULL_OBJ;
  ObjId curr = NULL_OBJ;
  i64 curr_key = 0;
};

// Walk from the head until curr.key >= k, recording every visited location.
// pred trails one node behind; head.key is -inf, so the loop always moves at
// least once and pred is never null.
inline Walk search(OpCtx& c, ObjId head, i64 k) {
  c.trav_begin("succ", k, c.now());
  ObjId p = NULL_OBJ;
  ObjId x = head;
  for (;;) {
    Value kv = c.read(x, Field::key);
    if (kv.as_int() >= k) {
      c.trav_final(Loc{x, Field::key});
      c.trav_commit();
      return {p, x, kv.as_int()};
    }
    c.trav_step(Loc{x, Field::key});
    Value sv = c.read(x, Field::succ);
    c.trav_step(Loc{x, Field::succ});
    p = x;
    x = sv.as_ref();
  }
}

inline bool validate(OpCtx& c, ObjId p, ObjId x) {
  if (c.read(p, Field::rem).as_bool()) return false;
  if (c.read(x, Field::rem).as_bool()) return false;
  Value sv = c.read(p, Field::succ);
  return sv.is_ref() && sv.as_ref() == x;
}

inline Value contains(OpCtx& c, ObjId head, i64 k) {
  Walk w = search(c, head, k);
  if (w.curr_key != k) return Value::boolean(false);
  Value rm = c.read(w.curr, Field::rem);
  return Value::boolean(!rm.as_bool());
}

inline Value insert(OpCtx& c, ObjId head, i64 k) {
  for (;;) {
    Walk w = search(c, head, k);
    c.lock(w.pred);
    c.lock(w.curr);
    if (!validate(c, w.pred, w.curr)) {
      c.unlock(w.curr);
      c.unlock(w.pred);
      c.restart();
      continue;
    }
    if (w.curr_key == k) {
      c.unlock(w.curr);
      c.unlock(w.pred);
      return Value::boolean(false);
    }
    ObjId n = c.alloc();
    c.write(n, Field::key, Value::integer(k), "insert:init-key");
    c.write(n, Field::rem, Value::boolean(false), "insert:init-rem");
    c.write(n, Field::succ, Value::ref(w.curr), "insert:init-succ");
    c.write(w.pred, Field::succ, Value::ref(n), "insert:succ-publish");
    c.unlock(w.curr);
    c.unlock(w.pred);
    return Value::boolean(true);
  }
}

inline Value erase(OpCtx& c, ObjId head, i64 k) {
  for (;;) {
    Walk w = search(c, head, k);
    c.lock(w.pred);
    c.lock(w.curr);
    if (!validate(c, w.pred, w.curr)) {
      c.unlock(w.curr);
      c.unlock(w.pred);
      c.restart();
      continue;
    }
    if (w.curr_key != k) {
      c.unlock(w.curr);
      c.unlock(w.pred);
      return Value::boolean(false);
    }
    // skip-mark elides the logical deletion; the unlink below then changes
    // the abstract set at a non-decisive write.
    if (!c.mutated("skip-mark"))
      c.write(w.curr, Field::rem, Value::boolean(true), "delete:rem-mark");
    Value sv = c.read(w.curr, Field::succ);
    c.write(w.pred, Field::succ, sv, "delete:succ-unlink");
    c.unlock(w.curr);
    c.unlock(w.pred);
    return Value::boolean(true);
  }
}

// Builds the two sentinels and seeds the initial keys through the ordinary
// insert path. Caller finalizes the engine setup afterwards.
inline void setup(Engine& eng, const std::vector<i64>& keys) {
  OpCtx c = eng.setup_ctx("setup", 0);
  ObjId mn = c.alloc();
  c.write(mn, Field::key, Value::integer(KEY_NEG_INF));
  c.write(mn, Field::rem, Value::boolean(false));
  ObjId mx = c.alloc();
  c.write(mx, Field::key, Value::integer(KEY_POS_INF));
  c.write(mx, Field::rem, Value::boolean(false));
  c.write(mx, Field::succ, Value::nil());
  c.write(mn, Field::succ, Value::ref(mx));
  eng.set_anchor("min", mn);
  eng.set_anchor("max", mx);
  for (i64 k : keys) insert(c, mn, k);
}

}  // namespace lazylist
}  // namespace tlab

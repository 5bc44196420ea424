// RCU-based internal BST. Traversals run inside read-side sections and take
// no locks; removal of a node with two children publishes a duplicate of it
// under the successor key, waits out a grace period, and only then unlinks
// the successor. The duplicate's ghostKey marks the key interval it covers
// while both copies are live. A per-node version tag guards insertions under
// a parent whose left child was nulled.
#pragma once

#include <utility>
#include <vector>

#include "../runtime.hpp"

namespace tlab {
namespace citrus {

inline i64 default_data(i64 k) { return 100 + k; }

struct LocRes {
  ObjId x = NULL_OBJ;  // parent of y, or the last node before a null probe
  i64 tag = 0;         // x's version tag, read inside the section
  ObjId y = NULL_OBJ;
  bool found = false;
};

inline LocRes locate(OpCtx& c, ObjId root, i64 k) {
  c.rcu_enter();
  c.trav_begin("locate", k, c.now());
  ObjId x = root;
  ObjId y = root;
  bool found = false;
  for (;;) {
    Value kv = c.read(y, Field::key);
    if (kv.as_int() == k) {
      c.trav_final(Loc{y, Field::key});
      found = true;
      break;
    }
    c.trav_step(Loc{y, Field::key});
    Field f = kv.as_int() < k ? Field::right : Field::left;
    Value lv = c.read(y, f);
    c.trav_step(Loc{y, f});
    x = y;
    if (!lv.is_ref()) {
      c.trav_final(Loc::null_loc());
      y = NULL_OBJ;
      break;
    }
    y = lv.as_ref();
  }
  Value tv = c.read(x, Field::tag);
  c.trav_tag(x, tv.as_int(), c.last_read_t());
  c.rcu_exit();
  c.trav_commit();
  return {x, tv.as_int(), y, found};
}

inline Value contains(OpCtx& c, ObjId root, i64 k) {
  LocRes r = locate(c, root, k);
  if (!r.found) return Value::boolean(false);
  return c.read(r.y, Field::data);  // the stored data, read after the section
}

// setChild(x, k, t): route by key; nulling a left child bumps the tag that
// insertions under x check against their traversal's snapshot.
inline void set_child(OpCtx& c, ObjId x, i64 k, Value t, const char* label,
                      std::vector<std::pair<Loc, Value>> ghost = {}) {
  i64 xk = c.read(x, Field::key).as_int();
  if (k < xk) {
    c.write(x, Field::left, t, label, std::move(ghost));
    if (!t.is_ref()) {
      i64 tg = c.read(x, Field::tag).as_int();
      c.write(x, Field::tag, Value::integer(tg + 1), "delete:tag-bump");
    }
  } else {
    c.write(x, Field::right, t, label, std::move(ghost));
  }
}

inline Value insert(OpCtx& c, ObjId root, i64 k, i64 d) {
  for (;;) {
    LocRes r = locate(c, root, k);
    if (r.found) return Value::boolean(false);
    c.lock(r.x);
    if (c.read(r.x, Field::rem).as_bool()) {
      c.unlock(r.x);
      c.restart();
      continue;
    }
    i64 xk = c.read(r.x, Field::key).as_int();
    if (k < xk && !c.read(r.x, Field::left).is_ref() &&
        c.read(r.x, Field::tag).as_int() == r.tag) {
      ObjId n = c.alloc();
      c.write(n, Field::key, Value::integer(k), "insert:init-key");
      c.write(n, Field::data, Value::integer(d), "insert:init-data");
      c.write(n, Field::tag, Value::integer(0), "insert:init-tag");
      c.write(n, Field::rem, Value::boolean(false), "insert:init-rem");
      c.write(r.x, Field::left, Value::ref(n), "insert:link-left");
      c.unlock(r.x);
      return Value::boolean(true);
    }
    if (k > xk && !c.read(r.x, Field::right).is_ref()) {
      ObjId n = c.alloc();
      c.write(n, Field::key, Value::integer(k), "insert:init-key");
      c.write(n, Field::data, Value::integer(d), "insert:init-data");
      c.write(n, Field::tag, Value::integer(0), "insert:init-tag");
      c.write(n, Field::rem, Value::boolean(false), "insert:init-rem");
      c.write(r.x, Field::right, Value::ref(n), "insert:link-right");
      c.unlock(r.x);
      return Value::boolean(true);
    }
    c.unlock(r.x);
    c.restart();
  }
}

inline Value erase(OpCtx& c, ObjId root, i64 k) {
  for (;;) {
    LocRes r = locate(c, root, k);
    if (!r.found) return Value::boolean(false);
    ObjId x = r.x;
    ObjId y = r.y;
    c.lock(x);
    c.lock(y);
    bool bad = c.read(y, Field::rem).as_bool();
    if (!bad) bad = c.read(x, Field::rem).as_bool();
    if (!bad) {
      Value xl = c.read(x, Field::left);
      bool isp = xl.is_ref() && xl.as_ref() == y;
      if (!isp) {
        Value xr = c.read(x, Field::right);
        isp = xr.is_ref() && xr.as_ref() == y;
      }
      bad = !isp;
    }
    if (bad) {
      c.unlock(y);
      c.unlock(x);
      c.restart();
      continue;
    }
    // hasNullChild
    Value yl = c.read(y, Field::left);
    bool has;
    Value other = Value::nil();
    if (!yl.is_ref()) {
      other = c.read(y, Field::right);
      has = true;
    } else {
      Value yr = c.read(y, Field::right);
      if (!yr.is_ref()) {
        other = yl;
        has = true;
      } else {
        has = false;
      }
    }
    if (has) {
      c.write(y, Field::rem, Value::boolean(true), "delete:rem-mark");
      set_child(c, x, k, other, "delete:bypass");
      c.unlock(y);
      c.unlock(x);
      return Value::boolean(true);
    }
    // two children: walk the left spine of y.right for the successor. The
    // walk holds no locks on the spine, so it is recorded like any traversal.
    i64 wbase = c.now();
    c.trav_begin("succwalk", k, wbase);
    c.trav_step_at(Loc{y, Field::key}, wbase);
    ObjId ps = y;
    Value csv = c.read(y, Field::right);
    c.trav_step(Loc{y, Field::right});
    ObjId cs = csv.as_ref();
    c.trav_step(Loc{cs, Field::key});
    Value nxv = c.read(cs, Field::left);
    c.trav_step(Loc{cs, Field::left});
    while (nxv.is_ref()) {
      ps = cs;
      cs = nxv.as_ref();
      c.trav_step(Loc{cs, Field::key});
      nxv = c.read(cs, Field::left);
      c.trav_step(Loc{cs, Field::left});
    }
    c.trav_final(Loc::null_loc());
    c.trav_commit();
    if (ps != y) c.lock(ps);  // y is already held
    c.lock(cs);
    bool bad2 = c.read(ps, Field::rem).as_bool();
    if (!bad2) bad2 = c.read(cs, Field::rem).as_bool();
    if (!bad2 && ps != y) {
      Value pl = c.read(ps, Field::left);
      bad2 = !(pl.is_ref() && pl.as_ref() == cs);
    }
    if (!bad2) bad2 = c.read(cs, Field::left).is_ref();
    if (bad2) {
      c.unlock(cs);
      if (ps != y) c.unlock(ps);
      c.unlock(y);
      c.unlock(x);
      c.restart();
      continue;
    }
    // duplicate(y), retargeted at the successor key
    ObjId w = c.alloc();
    c.write(w, Field::key, Value::integer(k), "delete:init-key");
    c.write(w, Field::data, c.read(y, Field::data), "delete:init-data");
    c.write(w, Field::left, c.read(y, Field::left), "delete:init-left");
    c.write(w, Field::right, c.read(y, Field::right), "delete:init-right");
    c.write(w, Field::tag, c.read(y, Field::tag), "delete:init-tag");
    c.write(w, Field::rem, Value::boolean(false), "delete:init-rem");
    i64 csk = c.read(cs, Field::key).as_int();
    c.write(w, Field::key, Value::integer(csk), "delete:w-key");
    c.write(w, Field::data, c.read(cs, Field::data), "delete:w-data");
    c.write(y, Field::rem, Value::boolean(true), "delete:rem-mark");
    c.lock(w);
    // publishing w opens its ghost interval: keys in (k, w.key) are absent
    // from w's subtree while both copies of the successor are live
    set_child(c, x, k, Value::ref(w), "delete:link-w",
              {{Loc{w, Field::ghostKey}, Value::integer(k)}});
    c.rcu_sync();
    c.write(cs, Field::rem, Value::boolean(true), "delete:succ-rem");
    if (ps == y) {
      Value csr = c.read(cs, Field::right);
      c.write(w, Field::right, csr, "delete:unlink-succ",
              {{Loc{w, Field::ghostKey}, Value::integer(csk)}});
    } else {
      Value csr = c.read(cs, Field::right);
      c.write(ps, Field::left, csr, "delete:unlink-succ",
              {{Loc{w, Field::ghostKey}, Value::integer(csk)}});
      if (!csr.is_ref()) {
        i64 tg = c.read(ps, Field::tag).as_int();
        c.write(ps, Field::tag, Value::integer(tg + 1), "delete:tag-bump");
      }
    }
    c.unlock(w);
    c.unlock(cs);
    if (ps != y) c.unlock(ps);
    c.unlock(y);
    c.unlock(x);
    return Value::boolean(true);
  }
}

inline void setup(Engine& eng, const std::vector<i64>& keys) {
  OpCtx c = eng.setup_ctx("setup", 0);
  ObjId rt = c.alloc();
  c.write(rt, Field::key, Value::integer(-1));
  c.write(rt, Field::data, Value::integer(0));
  c.write(rt, Field::tag, Value::integer(0));
  c.write(rt, Field::rem, Value::boolean(false));
  ObjId inf = c.alloc();
  c.write(inf, Field::key, Value::integer(KEY_POS_INF));
  c.write(inf, Field::data, Value::integer(0));
  c.write(inf, Field::tag, Value::integer(0));
  c.write(inf, Field::rem, Value::boolean(false));
  c.write(rt, Field::right, Value::ref(inf));
  eng.set_anchor("root", rt);
  for (i64 k : keys) insert(c, rt, k, default_data(k));
}

}  // namespace citrus
}  // namespace tlab

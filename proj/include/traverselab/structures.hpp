// Registry tying structure names to their setup and operation factories.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "structures/cftree.hpp"
#include "structures/citrus.hpp"
#include "structures/lazylist.hpp"
#include "structures/lotree.hpp"

namespace tlab {

inline const std::vector<std::string>& structure_names() {
  static const std::vector<std::string> v = {"lazylist", "lotree", "cftree",
                                             "citrus"};
  return v;
}

inline bool structure_has_op(const std::string& st, const std::string& kind) {
  if (kind == "contains" || kind == "insert" || kind == "delete") return true;
  if (kind == "rotate") return st == "lotree" || st == "cftree";
  if (kind == "remove-right") return st == "cftree";
  return false;
}

// Seeds the structure and freezes the engine's initial state.
inline void setup_structure(Engine& eng, const std::string& st,
                            const std::vector<i64>& keys) {
  if (st == "lazylist")
    lazylist::setup(eng, keys);
  else if (st == "lotree")
    lotree::setup(eng, keys);
  else if (st == "cftree")
    cftree::setup(eng, keys);
  else if (st == "citrus")
    citrus::setup(eng, keys);
  else
    throw std::invalid_argument("unknown structure: " + st);
  eng.finalize_setup();
}

// Binds one operation against the structure's anchors. Call after setup.
inline PlannedOp plan_op(const Engine& eng, const std::string& st,
                         const std::string& kind, i64 key) {
  if (!structure_has_op(st, kind))
    throw std::invalid_argument("structure " + st + " has no op " + kind);
  PlannedOp op;
  op.kind = kind;
  op.key = key;
  if (st == "lazylist") {
    ObjId head = eng.anchor("min");
    if (kind == "contains")
      op.body = [=](OpCtx& c) { return lazylist::contains(c, head, key); };
    else if (kind == "insert")
      op.body = [=](OpCtx& c) { return lazylist::insert(c, head, key); };
    else
      op.body = [=](OpCtx& c) { return lazylist::erase(c, head, key); };
  } else if (st == "lotree") {
    ObjId root = eng.anchor("root");
    if (kind == "contains")
      op.body = [=](OpCtx& c) { return lotree::contains(c, root, key); };
    else if (kind == "insert")
      op.body = [=](OpCtx& c) { return lotree::insert(c, root, key); };
    else if (kind == "delete")
      op.body = [=](OpCtx& c) { return lotree::erase(c, root, key); };
    else
      op.body = [=](OpCtx& c) {
        return lotree::rotate_right_left(c, root, key);
      };
  } else if (st == "cftree") {
    ObjId root = eng.anchor("root");
    if (kind == "contains")
      op.body = [=](OpCtx& c) { return cftree::contains(c, root, key); };
    else if (kind == "insert")
      op.body = [=](OpCtx& c) { return cftree::insert(c, root, key); };
    else if (kind == "delete")
      op.body = [=](OpCtx& c) { return cftree::erase(c, root, key); };
    else if (kind == "rotate")
      op.body = [=](OpCtx& c) {
        return cftree::rotate_right_left(c, root, key);
      };
    else
      op.body = [=](OpCtx& c) { return cftree::remove_right(c, root, key); };
  } else {
    ObjId root = eng.anchor("root");
    if (kind == "contains")
      op.body = [=](OpCtx& c) { return citrus::contains(c, root, key); };
    else if (kind == "insert") {
      i64 d = citrus::default_data(key);
      op.data = d;
      op.body = [=](OpCtx& c) { return citrus::insert(c, root, key, d); };
    }
    else
      op.body = [=](OpCtx& c) { return citrus::erase(c, root, key); };
  }
  return op;
}

}  // namespace tlab

// Core value/location/state types shared by the trace model, the reachability
// evaluators and the instrumented runtime.
//
// The shared heap is a set of numbered objects, each a fixed record of typed
// fields. A Location names one field of one object. Timestamps count writes:
// the state at time t is the initial state plus the first t writes, so state
// transitions and write timestamps coincide.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tlab {

using i64 = std::int64_t;
using u64 = std::uint64_t;
using ObjId = std::int32_t;

// Sentinel keys live outside any configured key domain.
inline constexpr i64 KEY_NEG_INF = INT64_MIN;
inline constexpr i64 KEY_POS_INF = INT64_MAX;

enum class Field : std::uint8_t {
  key = 0,
  data,
  succ,
  pred,
  left,
  right,
  parent,
  rem,
  del_,
  tag,
  ghostKey,
  COUNT
};

inline constexpr std::size_t FIELD_COUNT = static_cast<std::size_t>(Field::COUNT);

inline std::string_view field_name(Field f) {
  switch (f) {
    case Field::key: return "key";
    case Field::data: return "data";
    case Field::succ: return "succ";
    case Field::pred: return "pred";
    case Field::left: return "left";
    case Field::right: return "right";
    case Field::parent: return "parent";
    case Field::rem: return "rem";
    case Field::del_: return "del";
    case Field::tag: return "tag";
    case Field::ghostKey: return "ghostKey";
    default: return "?";
  }
}

inline std::optional<Field> field_from_name(std::string_view s) {
  for (std::size_t i = 0; i < FIELD_COUNT; ++i) {
    Field f = static_cast<Field>(i);
    if (field_name(f) == s) return f;
  }
  return std::nullopt;
}

// A heap value: integer, boolean, object reference, or nil (null pointer /
// uninitialized slot). Nil doubles as the null link value.
struct Value {
  enum class Kind : std::uint8_t { Nil, Int, Bool, Ref };
  Kind kind = Kind::Nil;
  i64 num = 0;  // Int payload, Bool 0/1, Ref object id

  static Value nil() { return {}; }
  static Value integer(i64 v) { return {Kind::Int, v}; }
  static Value boolean(bool b) { return {Kind::Bool, b ? 1 : 0}; }
  static Value ref(ObjId o) { return {Kind::Ref, o}; }

  bool is_nil() const { return kind == Kind::Nil; }
  bool is_ref() const { return kind == Kind::Ref; }
  bool as_bool() const { return kind == Kind::Bool && num != 0; }
  i64 as_int() const { return num; }
  ObjId as_ref() const { return static_cast<ObjId>(num); }

  friend bool operator==(const Value& a, const Value& b) {
    return a.kind == b.kind && a.num == b.num;
  }
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

  std::string repr() const {
    switch (kind) {
      case Kind::Nil: return "nil";
      case Kind::Int: return std::to_string(num);
      case Kind::Bool: return num ? "true" : "false";
      case Kind::Ref: return "&" + std::to_string(num);
    }
    return "?";
  }
};

// Location of one field. obj == NULL_OBJ denotes the distinguished "null
// location" that a search reaches when it follows a nil link; it has no state
// and is never written.
inline constexpr ObjId NULL_OBJ = -1;

struct Loc {
  ObjId obj = NULL_OBJ;
  Field field = Field::COUNT;

  static Loc null_loc() { return {NULL_OBJ, Field::COUNT}; }
  bool is_null_loc() const { return obj == NULL_OBJ; }

  friend bool operator==(const Loc& a, const Loc& b) {
    return a.obj == b.obj && a.field == b.field;
  }
  friend bool operator!=(const Loc& a, const Loc& b) { return !(a == b); }
  friend bool operator<(const Loc& a, const Loc& b) {
    if (a.obj != b.obj) return a.obj < b.obj;
    return static_cast<int>(a.field) < static_cast<int>(b.field);
  }

  std::string repr() const {
    if (is_null_loc()) return "null";
    return "(" + std::to_string(obj) + "," + std::string(field_name(field)) + ")";
  }
};

// Flat index for bitset-style location sets. Index 0 is the null location.
inline std::size_t loc_index(const Loc& l) {
  if (l.is_null_loc()) return 0;
  return 1 + static_cast<std::size_t>(l.obj) * FIELD_COUNT +
         static_cast<std::size_t>(l.field);
}

inline std::size_t loc_index_count(std::size_t n_objs) {
  return 1 + n_objs * FIELD_COUNT;
}

inline Loc loc_from_index(std::size_t idx) {
  if (idx == 0) return Loc::null_loc();
  std::size_t i = idx - 1;
  return {static_cast<ObjId>(i / FIELD_COUNT),
          static_cast<Field>(i % FIELD_COUNT)};
}

// A heap state: dense object table. Objects are created by traces/runtime and
// identifiers are never reused.
class State {
 public:
  ObjId add_object() {
    objects_.emplace_back();
    return static_cast<ObjId>(objects_.size() - 1);
  }

  std::size_t n_objects() const { return objects_.size(); }

  bool has(const Loc& l) const {
    return !l.is_null_loc() && static_cast<std::size_t>(l.obj) < objects_.size();
  }

  const Value& get(const Loc& l) const {
    if (!has(l)) throw std::out_of_range("State::get: bad location " + l.repr());
    return objects_[static_cast<std::size_t>(l.obj)][static_cast<std::size_t>(l.field)];
  }

  void set(const Loc& l, const Value& v) {
    if (!has(l)) throw std::out_of_range("State::set: bad location " + l.repr());
    objects_[static_cast<std::size_t>(l.obj)][static_cast<std::size_t>(l.field)] = v;
  }

  // Convenience accessors used throughout the checkers.
  i64 key_of(ObjId o) const { return get({o, Field::key}).as_int(); }

 private:
  std::vector<std::array<Value, FIELD_COUNT>> objects_;
};

// Key bounds of a workload; sentinels sit strictly outside.
struct KeyRange {
  i64 lo = 1;
  i64 hi = 4;
};

struct LocHash {
  std::size_t operator()(const Loc& l) const {
    return std::hash<std::size_t>()(loc_index(l));
  }
};

}  // namespace tlab

// The full verdict battery: everything the checkers can say about one trace,
// under each structure's documented predicate bindings. One report per trace;
// the explorer aggregates reports across traces.
//
// Bindings: lazylist traversals run against succ-list search reachability;
// the LO tree's pred-walk segment runs against the whole-object successor
// lift and its succ segment against list search, glued at a witness time;
// the CF tree runs against binary search; Citrus runs against ghost-aware
// weak reachability evaluated in each traversal's own view, with the
// epsilon-successor predicate for delete's successor walks.
//
// Deep checks (per-state enumerations, per-view forepassed, the inference
// cross-check) are meant for exploration-scale traces and are skipped above a
// size threshold; the skip is recorded in stats, never silent.
#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "traverselab/checker.hpp"
#include "traverselab/core.hpp"
#include "traverselab/lin.hpp"
#include "traverselab/reach.hpp"
#include "traverselab/trace.hpp"

namespace tlab {

struct BatteryConfig {
  std::size_t lin_max_ops = 8;
  // Deep checks run only when the trace has at most this many writes.
  i64 deep_max_t = 600;
  // Quadratic bridging-lemma diagnostic; desk scale only.
  bool lemma_points = false;
};

struct BatteryReport {
  std::string structure;
  bool trace_fault = false;
  std::vector<CheckResult> results;

  // Advisory results (conditions the structure does not claim) report their
  // findings but do not gate the verdict.
  bool ok() const {
    for (const auto& r : results)
      if (!r.advisory && !r.ok()) return false;
    return true;
  }
  std::size_t violation_count() const {
    std::size_t n = 0;
    for (const auto& r : results) n += r.violations.size();
    return n;
  }
  const CheckResult* find(const std::string& name) const {
    for (const auto& r : results)
      if (r.check == name) return &r;
    return nullptr;
  }

  json to_json() const {
    json checks = json::array();
    for (const auto& r : results) {
      json v = json::array();
      for (const auto& x : r.violations) v.push_back(x.to_json());
      json st(r.stats);
      json c{{"check", r.check},
             {"ok", r.ok()},
             {"violations", v},
             {"stats", st}};
      if (r.advisory) c["advisory"] = true;
      checks.push_back(std::move(c));
    }
    return {{"structure", structure},
            {"ok", ok()},
            {"trace_fault", trace_fault},
            {"checks", checks}};
  }

  std::string table() const {
    std::ostringstream os;
    for (const auto& r : results) {
      os << (r.ok() ? "  ok    " : r.advisory ? "  info  " : "  FAIL  ")
         << r.check;
      if (!r.ok())
        os << "  (" << r.violations.size()
           << (r.advisory ? " findings, condition not claimed here)"
                          : " violations)");
      os << "\n";
    }
    return os.str();
  }
};

// ---------------------------------------------------------------------------

class BatteryRunner {
 public:
  BatteryRunner(const Trace& tr, BatteryConfig cfg)
      : tr_(tr), cfg_(cfg), sc_(tr), gi_(tr), wix_(tr) {}

  BatteryReport run() {
    rep_.structure = tr_.structure;
    if (auto fault = validate_trace(tr_)) {
      CheckResult r;
      r.check = "trace-valid";
      r.violations.push_back({r.check, -1, -1, -1, Loc::null_loc(),
                              Loc::null_loc(), "", "", fault->what});
      rep_.trace_fault = true;
      rep_.results.push_back(std::move(r));
      return std::move(rep_);
    }
    {
      CheckResult r;
      r.check = "trace-valid";
      r.stats["writes"] = tr_.t_end();
      rep_.results.push_back(std::move(r));
    }
    deep_ = tr_.t_end() <= cfg_.deep_max_t;

    resolve_bases();
    traversal_direct();
    if (tr_.structure == "lotree") glue_report();
    traversal_infer();
    compat_all();
    forepassed_all(/*strong=*/false);
    forepassed_all(/*strong=*/true);
    field_forepassed_all();
    CheckResult effect;
    effect.check = "effect-points";
    check_effect_points(tr_, sc_, effect);
    CheckResult stability;
    stability.check = "abstraction-stability";
    check_abstraction_stability(tr_, sc_, stability);
    CheckResult decisive;
    decisive.check = "decisive-labels";
    check_decisive_labels(tr_, decisive);
    CheckResult search;
    search.check = "lin-search";
    check_lin_search(tr_, sc_, cfg_.lin_max_ops, search);
    CheckResult agree;
    agree.check = "lin-agreement";
    check_lin_agreement(search, effect, agree);
    rep_.results.push_back(std::move(effect));
    rep_.results.push_back(std::move(stability));
    rep_.results.push_back(std::move(decisive));
    rep_.results.push_back(std::move(search));
    rep_.results.push_back(std::move(agree));
    field_witnesses();
    if (tr_.structure == "citrus") {
      lemma_c1();
      lemma_c2();
      tag_lemma();
      endpoint_strengthening();
      rcu_grace();
    }
    if (cfg_.lemma_points) lemma_points_all();
    return std::move(rep_);
  }

 private:
  const Trace& tr_;
  BatteryConfig cfg_;
  StateCache sc_;
  GhostInfo gi_;
  WriteIndex wix_;
  BatteryReport rep_;
  bool deep_ = true;

  // One evaluator per (kind, k, view); views matter only for the weak
  // predicate.
  std::map<std::tuple<int, i64, i64>, std::unique_ptr<ReachEval>> evs_;
  // Resolved base time per traversal record (glue refinement).
  std::vector<i64> base_;
  std::vector<bool> base_ok_;

  ReachEval& ev(ReachKind kind, i64 k, i64 view = -1) {
    auto key = std::make_tuple(static_cast<int>(kind), k, view);
    auto it = evs_.find(key);
    if (it == evs_.end()) {
      ObjId entry = abstraction_entry(tr_);
      it = evs_.emplace(key, std::make_unique<ReachEval>(tr_, sc_, gi_, kind, k,
                                                         entry, view))
               .first;
    }
    return *it->second;
  }

  // Per-record predicate binding.
  struct Binding {
    ExtendRel rel;
    ReachEval* ev = nullptr;
  };

  Binding bind(const TraversalRecord& rec) {
    if (rec.kind == "succ")
      return {{ExtendKind::SuccK, rec.k}, &ev(ReachKind::SuccK, rec.k)};
    if (rec.kind == "treepred")
      return {{ExtendKind::TreePred, 0}, &ev(ReachKind::Succ, 0)};
    if (rec.kind == "succwalk")
      return {{ExtendKind::BstKEps, rec.k}, &ev(ReachKind::SuccKEps, rec.k)};
    // "locate"
    if (tr_.structure == "citrus")
      return {{ExtendKind::BstK, rec.k},
              &ev(ReachKind::WeakK, rec.k, rec.base)};
    return {{ExtendKind::BstK, rec.k}, &ev(ReachKind::BstK, rec.k)};
  }

  static Loc entry_of(const TraversalRecord& rec) {
    if (!rec.steps.empty()) return rec.steps.front().loc;
    return rec.final_loc ? *rec.final_loc : Loc::null_loc();
  }

  static i64 last_time(const TraversalRecord& rec) {
    return rec.steps.empty() ? rec.base : rec.steps.back().t;
  }

  // Key quantification range: configured domain plus one on each side.
  std::vector<i64> k_range() const {
    std::vector<i64> ks;
    for (i64 k = tr_.keys.lo - 1; k <= tr_.keys.hi + 1; ++k) ks.push_back(k);
    return ks;
  }

  // ---- base resolution (the glue step) ----

  // A glued segment's base is the earliest time in [predecessor base,
  // recorded base] at which its entry is reachable under its own predicate;
  // sortedness of the list is what makes such a witness exist.
  void resolve_bases() {
    base_.resize(tr_.travs.size());
    base_ok_.assign(tr_.travs.size(), true);
    std::map<int, i64> prev_base;  // op -> resolved base of latest segment
    for (std::size_t i = 0; i < tr_.travs.size(); ++i) {
      const TraversalRecord& rec = tr_.travs[i];
      base_[i] = rec.base;
      if (rec.glue_base) {
        i64 lo = prev_base.count(rec.op) ? prev_base[rec.op] : rec.base;
        Binding b = bind(rec);
        auto w = earliest_witness(*b.ev, lo, rec.base, entry_of(rec),
                                  tr_.t_end());
        if (w) base_[i] = *w;
        else base_ok_[i] = false;
      }
      prev_base[rec.op] = base_[i];
    }
  }

  void glue_report() {
    CheckResult r;
    r.check = "glue";
    for (std::size_t i = 0; i < tr_.travs.size(); ++i) {
      const TraversalRecord& rec = tr_.travs[i];
      if (!rec.glue_base) continue;
      r.stats["glued"]++;
      if (!base_ok_[i]) {
        r.violations.push_back(
            {r.check, rec.op, rec.base, -1, entry_of(rec), Loc::null_loc(), "",
             "", "no reachability witness for the glued segment's entry"});
      } else {
        r.stats["resolved"]++;
      }
    }
    rep_.results.push_back(std::move(r));
  }

  // ---- traversal checks ----

  void traversal_direct() {
    CheckResult r;
    r.check = "traversal-direct";
    for (std::size_t i = 0; i < tr_.travs.size(); ++i) {
      const TraversalRecord& rec = tr_.travs[i];
      Binding b = bind(rec);
      r.stats["kind:" + rec.kind]++;
      check_traversal_direct(tr_, sc_, rec, b.rel, *b.ev, base_[i], r);
    }
    rep_.results.push_back(std::move(r));
  }

  // The inference theorem, used as a cross-check: when its premises hold on a
  // traversal's span, the direct check must agree. A failed premise is not a
  // violation; it gates the claim.
  void traversal_infer() {
    CheckResult r;
    r.check = "traversal-infer";
    if (!deep_) {
      r.stats["skipped_large_trace"] = 1;
      rep_.results.push_back(std::move(r));
      return;
    }
    for (std::size_t i = 0; i < tr_.travs.size(); ++i) {
      const TraversalRecord& rec = tr_.travs[i];
      Binding b = bind(rec);
      i64 t_star = base_[i];
      i64 t_hi = std::min(last_time(rec), tr_.t_end());
      bool a = base_ok_[i] &&
               b.ev->holds(std::min(t_star, tr_.t_end()), entry_of(rec));
      CheckResult tmp;
      tmp.check = r.check;
      check_compat(tr_, sc_, b.rel, *b.ev, tmp, t_star, t_hi);
      bool c = tmp.ok();
      tmp.violations.clear();
      check_forepassed(tr_, sc_, b.rel, *b.ev, wix_, /*strong=*/false, tmp,
                       std::max<i64>(1, t_star), t_hi);
      bool f = tmp.ok();
      if (!a) r.stats["premise_entry_failed"]++;
      if (!c) r.stats["premise_compat_failed"]++;
      if (!f) r.stats["premise_forepassed_failed"]++;
      if (!(a && c && f)) continue;
      r.stats["premises_ok"]++;
      CheckResult direct;
      direct.check = r.check;
      check_traversal_direct(tr_, sc_, rec, b.rel, *b.ev, t_star, direct);
      if (!direct.ok()) {
        Violation v = direct.violations.front();
        v.check = r.check;
        v.detail = "inference premises hold but the direct check fails: " +
                   v.detail;
        r.violations.push_back(std::move(v));
      } else {
        r.stats["implied_ok"]++;
      }
    }
    rep_.results.push_back(std::move(r));
  }

  // ---- state-quantified checks ----

  // (relation, evaluator) pairs the structure's documentation prescribes for
  // whole-trace quantification.
  std::vector<Binding> structure_bindings() {
    std::vector<Binding> out;
    const std::string& st = tr_.structure;
    if (st == "lazylist") {
      for (i64 k : k_range())
        out.push_back({{ExtendKind::SuccK, k}, &ev(ReachKind::SuccK, k)});
    } else if (st == "lotree") {
      out.push_back({{ExtendKind::TreePred, 0}, &ev(ReachKind::Succ, 0)});
      for (i64 k : k_range())
        out.push_back({{ExtendKind::SuccK, k}, &ev(ReachKind::SuccK, k)});
    } else if (st == "cftree") {
      for (i64 k : k_range())
        out.push_back({{ExtendKind::BstK, k}, &ev(ReachKind::BstK, k)});
    } else {
      for (i64 k : k_range())
        out.push_back({{ExtendKind::BstK, k}, &ev(ReachKind::WeakK, k)});
    }
    return out;
  }

  void compat_all() {
    CheckResult r;
    r.check = "compat";
    if (!deep_) {
      r.stats["skipped_large_trace"] = 1;
      rep_.results.push_back(std::move(r));
      return;
    }
    for (Binding& b : structure_bindings())
      check_compat(tr_, sc_, b.rel, *b.ev, r);
    rep_.results.push_back(std::move(r));
  }

  void forepassed_all(bool strong) {
    // Neither forepassed condition is claimed whole-trace for citrus: the
    // ghost collapse reduces weak reachability of the very location it
    // writes, so every two-child removal would cite itself, in the global
    // view and in any view opened before the ghost. What the structure does
    // claim is the general condition inside each traversal's own view over
    // that traversal's span; the grace period (checked separately) is what
    // keeps live views from crossing a collapse.
    if (strong && tr_.structure == "citrus") return;
    CheckResult r;
    r.check = strong ? "strong-forepassed" : "forepassed";
    // The CF tree claims only the general condition; its backtracking writes
    // violate the strong one by design, so that result is advisory there.
    if (strong && tr_.structure == "cftree") r.advisory = true;
    if (!deep_) {
      r.stats["skipped_large_trace"] = 1;
      rep_.results.push_back(std::move(r));
      return;
    }
    if (tr_.structure != "citrus") {
      for (Binding& b : structure_bindings())
        check_forepassed(tr_, sc_, b.rel, *b.ev, wix_, strong, r);
    } else {
      for (std::size_t i = 0; i < tr_.travs.size(); ++i) {
        const TraversalRecord& rec = tr_.travs[i];
        if (rec.kind != "locate") continue;
        r.stats["views"]++;
        Binding b{{ExtendKind::BstK, rec.k},
                  &ev(ReachKind::WeakK, rec.k, rec.base)};
        check_forepassed(tr_, sc_, b.rel, *b.ev, wix_, false, r,
                         std::max<i64>(1, base_[i]),
                         std::min(last_time(rec), tr_.t_end()));
      }
    }
    rep_.results.push_back(std::move(r));
  }

  void field_forepassed_all() {
    CheckResult r;
    r.check = "field-forepassed";
    if (!deep_) {
      r.stats["skipped_large_trace"] = 1;
      rep_.results.push_back(std::move(r));
      return;
    }
    Field vf = tr_.structure == "cftree"  ? Field::del_
               : tr_.structure == "citrus" ? Field::data
                                           : Field::rem;
    for (Binding& b : structure_bindings())
      check_field_forepassed(tr_, sc_, *b.ev, wix_, Field::key, vf, r);
    rep_.results.push_back(std::move(r));
  }

  // ---- reachability-with-field witnesses (the field theorem, used on the
  // flag read every contains performs after its traversal) ----

  void field_witnesses() {
    CheckResult r;
    r.check = "field-witness";
    if (!deep_) {
      r.stats["skipped_large_trace"] = 1;
      rep_.results.push_back(std::move(r));
      return;
    }
    const CheckResult* ffp = rep_.find("field-forepassed");
    bool premise = ffp && ffp->ok();
    Field vf = tr_.structure == "cftree"  ? Field::del_
               : tr_.structure == "citrus" ? Field::data
                                           : Field::rem;
    for (std::size_t i = 0; i < tr_.travs.size(); ++i) {
      const TraversalRecord& rec = tr_.travs[i];
      const OpInv* inv = tr_.inv_of(rec.op);
      if (!inv || inv->kind != "contains") continue;
      if (!rec.final_loc || rec.final_loc->is_null_loc()) continue;
      Loc end = *rec.final_loc;
      // The flag read is the first read of (end.obj, vf) by this op after the
      // walk's last step.
      i64 t_hi = last_time(rec);
      const ReadEvent* flag = nullptr;
      for (const auto& rd : tr_.reads)
        if (rd.op == rec.op && rd.loc == Loc{end.obj, vf} && rd.src_t >= t_hi) {
          flag = &rd;
          break;
        }
      if (!flag) continue;
      r.stats["reads"]++;
      Binding b = bind(rec);
      auto t_reach =
          earliest_witness(*b.ev, base_[i], t_hi, end, tr_.t_end());
      if (!t_reach) continue;  // no reach claim: the direct check owns this
      if (!premise) {
        r.stats["premise_failed"]++;
        continue;
      }
      auto w = find_field_witness(tr_, sc_, *b.ev, end, vf, flag->val,
                                  *t_reach, flag->src_t);
      if (!w) {
        r.violations.push_back(
            {r.check, rec.op, *t_reach, flag->src_t, end, {end.obj, vf}, "",
             "", "no single state exhibits reachability and the read field "
                 "value together"});
      } else {
        r.stats["witnessed"]++;
      }
    }
    rep_.results.push_back(std::move(r));
  }

  // ---- citrus-specific checks ----

  // While a ghost is open on a successor copy x (ghost g, real key m), x's
  // subtree contains no key strictly inside (g, m): searches for those keys
  // are the ones the ghost re-routes, and they were deleted or never there.
  void lemma_c1() {
    CheckResult r;
    r.check = "lemma-c1";
    if (!deep_) {
      r.stats["skipped_large_trace"] = 1;
      rep_.results.push_back(std::move(r));
      return;
    }
    for (auto [t0, t1, obj] : gi_.intervals(tr_)) {
      i64 g = 0;
      bool found = false;
      for (const auto& [l, v] : tr_.writes[static_cast<std::size_t>(t0 - 1)].ghost)
        if (l == Loc{obj, Field::ghostKey}) {
          g = v.as_int();
          found = true;
        }
      if (!found) continue;
      i64 hi = std::min(t1 - 1, tr_.t_end());
      for (i64 t = t0; t <= hi; ++t) {
        const State& s = sc_.at(t);
        i64 m = s.key_of(obj);
        r.stats["states"]++;
        std::vector<ObjId> stack{obj};
        std::set<ObjId> seen;
        while (!stack.empty()) {
          ObjId x = stack.back();
          stack.pop_back();
          if (!seen.insert(x).second) continue;
          i64 xk = s.key_of(x);
          if (x != obj && xk > g && xk < m) {
            r.violations.push_back(
                {r.check, -1, t, -1, {x, Field::key}, {obj, Field::ghostKey},
                 "", "",
                 "key strictly between ghost and real key present in the "
                 "ghosted node's subtree"});
          }
          for (Field f : {Field::left, Field::right}) {
            const Value& c = s.get({x, f});
            if (c.is_ref()) stack.push_back(c.as_ref());
          }
        }
        if (r.violations.size() >= 32) break;
      }
    }
    rep_.results.push_back(std::move(r));
  }

  // Weak-reach witness paths deviate from the plain binary-search path at
  // most once. Enumerated by DFS with a deviation budget, per traversal view
  // and per state of its span.
  void lemma_c2() {
    CheckResult r;
    r.check = "lemma-c2";
    if (!deep_) {
      r.stats["skipped_large_trace"] = 1;
      rep_.results.push_back(std::move(r));
      return;
    }
    for (const TraversalRecord& rec : tr_.travs) {
      if (rec.kind != "locate") continue;
      i64 t_hi = std::min(last_time(rec), tr_.t_end());
      for (i64 t = rec.base; t <= t_hi; ++t) {
        r.stats["states"]++;
        c2_dfs(sc_.at(t), t, rec.base, abstraction_entry(tr_), rec.k, 0, 0, r);
        if (r.violations.size() >= 32) break;
      }
      if (r.violations.size() >= 32) break;
    }
    rep_.results.push_back(std::move(r));
  }

  void c2_dfs(const State& s, i64 t, i64 view, ObjId x, i64 k, int devs,
              int depth, CheckResult& r) {
    if (depth > 64 || r.violations.size() >= 32) return;
    i64 m = s.key_of(x);
    i64 g = gi_.effective(x, m, view, t);
    bool wr = (k > g && k != m) || (k == m && g != m);
    bool wl = k < m;
    bool br = m < k;  // plain search direction; equality stops
    bool bl = m > k;
    const std::pair<bool, std::pair<Field, bool>> dirs[] = {
        {wr, {Field::right, br}}, {wl, {Field::left, bl}}};
    for (const auto& [taken, d] : dirs) {
      if (!taken) continue;
      int nd = devs + (d.second ? 0 : 1);
      if (nd > 1) {
        r.violations.push_back(
            {r.check, -1, t, -1, {x, Field::key}, Loc::null_loc(), "", "",
             "weak search path deviates from the plain search path twice"});
        return;
      }
      const Value& c = s.get({x, d.first});
      if (c.is_ref()) c2_dfs(s, t, view, c.as_ref(), k, nd, depth + 1, r);
    }
  }

  // Tag lemma: at every left-insert's guarded publication, the parent's tag
  // equalling the traversal's snapshot plus an empty left slot certifies the
  // parent is plainly reachable now, not only weakly-then.
  void tag_lemma() {
    CheckResult r;
    r.check = "tag-lemma";
    if (!deep_) {
      r.stats["skipped_large_trace"] = 1;
      rep_.results.push_back(std::move(r));
      return;
    }
    for (const auto& w : tr_.writes) {
      if (w.label != "insert:link-left") continue;
      const TraversalRecord* rec = nullptr;
      for (const auto& tv : tr_.travs)
        if (tv.op == w.op && tv.kind == "locate") rec = &tv;
      if (!rec || !rec->tag_obj || !rec->tag_value || !rec->tag_src_t)
        continue;
      ObjId x = *rec->tag_obj;
      i64 v = *rec->tag_value;
      r.stats["guarded_inserts"]++;
      const State& pre = sc_.at(w.t - 1);
      Loc kl{x, Field::key};
      // Premise: the traversal saw the parent weakly reachable with this tag.
      ReachEval& weak = ev(ReachKind::WeakK, rec->k, rec->base);
      auto seen = find_field_witness(tr_, sc_, weak, kl, Field::tag,
                                     Value::integer(v), rec->base,
                                     *rec->tag_src_t);
      if (!seen) {
        r.violations.push_back(
            {r.check, w.op, rec->base, *rec->tag_src_t, kl,
             {x, Field::tag}, "", "",
             "no state shows the parent weakly reachable with the tag the "
             "insert validated against"});
        continue;
      }
      // Guard re-established under the latch.
      if (pre.get({x, Field::left}).is_ref() ||
          pre.get({x, Field::tag}) != Value::integer(v) ||
          pre.get({x, Field::rem}).as_bool()) {
        r.violations.push_back({r.check, w.op, w.t, -1, kl, Loc::null_loc(),
                                w.label, "",
                                "guarded insert published without the tag "
                                "guard holding in the pre-state"});
        continue;
      }
      if (!ev(ReachKind::BstK, rec->k).holds(w.t - 1, kl)) {
        r.violations.push_back(
            {r.check, w.op, w.t, -1, kl, Loc::null_loc(), w.label, "",
             "tag guard holds but the parent is not plainly reachable at the "
             "publication"});
      } else {
        r.stats["certified"]++;
      }
    }
    rep_.results.push_back(std::move(r));
  }

  // Endpoint strengthening: a contains endpoint that was ever weakly
  // reachable during the walk was also plainly reachable at some time in the
  // same window.
  void endpoint_strengthening() {
    CheckResult r;
    r.check = "endpoint-strengthening";
    if (!deep_) {
      r.stats["skipped_large_trace"] = 1;
      rep_.results.push_back(std::move(r));
      return;
    }
    for (std::size_t i = 0; i < tr_.travs.size(); ++i) {
      const TraversalRecord& rec = tr_.travs[i];
      const OpInv* inv = tr_.inv_of(rec.op);
      if (!inv || inv->kind != "contains" || rec.kind != "locate") continue;
      if (!rec.final_loc) continue;
      Loc end = *rec.final_loc;
      i64 t_hi = std::min(last_time(rec), tr_.t_end());
      r.stats["endpoints"]++;
      bool weak_seen = past_holds(ev(ReachKind::WeakK, rec.k, rec.base),
                                  base_[i], t_hi, end, tr_.t_end());
      if (!weak_seen) continue;
      bool plain_seen = past_holds(ev(ReachKind::BstK, rec.k), base_[i], t_hi,
                                   end, tr_.t_end());
      if (!plain_seen) {
        r.violations.push_back(
            {r.check, rec.op, base_[i], t_hi, end, Loc::null_loc(), "", "",
             "endpoint weakly reachable in the window but never plainly "
             "reachable"});
      } else {
        r.stats["strengthened"]++;
      }
    }
    rep_.results.push_back(std::move(r));
  }

  // A read-side section that entered before a ghost opened must exit before
  // the collapse: that is precisely what the writer's grace period waits for.
  void rcu_grace() {
    CheckResult r;
    r.check = "rcu-grace";
    std::map<int, std::pair<i64, i64>> secs;  // section -> [enter, exit]
    for (const auto& e : tr_.rcus) {
      auto& s = secs[e.section];
      if (e.enter) s = {e.t, tr_.t_end() + 1};
      else s.second = e.t;
    }
    r.stats["sections"] = static_cast<i64>(secs.size());
    for (auto [t0, t1, obj] : gi_.intervals(tr_)) {
      for (const auto& [sec, span] : secs) {
        if (span.first < t0 && span.second >= t1) {
          r.violations.push_back(
              {r.check, -1, t0, t1, {obj, Field::ghostKey}, Loc::null_loc(),
               "", "",
               "read-side section " + std::to_string(sec) +
                   " spans a ghost interval: no grace period separated "
                   "unlink from reuse"});
        }
      }
    }
    rep_.results.push_back(std::move(r));
  }

  void lemma_points_all() {
    CheckResult r;
    r.check = "lemma-points";
    if (!deep_) {
      r.stats["skipped_large_trace"] = 1;
      rep_.results.push_back(std::move(r));
      return;
    }
    for (Binding& b : structure_bindings())
      check_lemma_points(tr_, sc_, b.rel, *b.ev, r);
    rep_.results.push_back(std::move(r));
  }
};

inline BatteryReport run_battery(const Trace& tr, BatteryConfig cfg = {}) {
  return BatteryRunner(tr, cfg).run();
}

}  // namespace tlab

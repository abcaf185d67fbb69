#include "sessio/bisim.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace sessio {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

int seq_depth(const TypePtr& t) {
  return std::visit(overloaded{
                        [&](const EndpointType::Qualified& q) -> int {
                          return std::visit(overloaded{
                                                [](const SkipT&) { return 0; },
                                                [](const InT&) { return 0; },
                                                [](const OutT&) { return 0; },
                                                [&](const BranchT& b) {
                                                  int m = 0;
                                                  for (const auto& [l, a] : b.arms)
                                                    m = std::max(m, seq_depth(a));
                                                  return m;
                                                },
                                                [&](const SelectT& s) {
                                                  int m = 0;
                                                  for (const auto& [l, a] : s.arms)
                                                    m = std::max(m, seq_depth(a));
                                                  return m;
                                                },
                                            },
                                            q.p);
                        },
                        [](const EndpointType::Var&) { return 0; },
                        [&](const EndpointType::Rec& r) { return seq_depth(r.body); },
                        [&](const EndpointType::Seq& s) {
                          return 1 + std::max(seq_depth(s.left), seq_depth(s.right));
                        },
                    },
                    t->v);
}

bool all_lin(const TypePtr& t);

bool all_lin_payload(const PayloadPtr& p) {
  return std::visit(overloaded{
                        [](const PayloadType::Base&) { return true; },
                        [](const PayloadType::Endpoint& e) { return all_lin(e.type); },
                        [](const PayloadType::Session& s) {
                          return all_lin(s.first) && all_lin(s.second);
                        },
                    },
                    p->v);
}

bool all_lin(const TypePtr& t) {
  return std::visit(
      overloaded{
          [&](const EndpointType::Qualified& q) -> bool {
            if (q.q != Qualifier::Lin) return false;
            return std::visit(overloaded{
                                  [](const SkipT&) { return true; },
                                  [](const InT& i) { return all_lin_payload(i.payload); },
                                  [](const OutT& o) { return all_lin_payload(o.payload); },
                                  [](const BranchT& b) {
                                    for (const auto& [l, a] : b.arms)
                                      if (!all_lin(a)) return false;
                                    return true;
                                  },
                                  [](const SelectT& s) {
                                    for (const auto& [l, a] : s.arms)
                                      if (!all_lin(a)) return false;
                                    return true;
                                  },
                              },
                              q.p);
          },
          [](const EndpointType::Var&) { return true; },
          [&](const EndpointType::Rec& r) { return all_lin(r.body); },
          [&](const EndpointType::Seq& s) { return all_lin(s.left) && all_lin(s.right); },
      },
      t->v);
}

// ---------------------------------------------------------------------------
// the checker
// ---------------------------------------------------------------------------

class Checker {
 public:
  Checker(TypeOptions opts, BisimBudget budget, bool canonicalize)
      : opts_(opts), budget_(budget), canonicalize_(canonicalize) {}

  BisimResult run(const TypePtr& a, const TypePtr& b) {
    BisimResult out;
    std::vector<TypeLabel> path;
    Tri r = check(a, b, path);
    out.pairs_explored = pairs_;
    switch (r) {
      case Tri::Yes:
        out.verdict = BisimResult::Verdict::Bisimilar;
        for (const auto& [k, v] : assumed_) out.witness.push_back(v);
        if (out.witness.empty()) out.witness.push_back({a, b});
        break;
      case Tri::No:
        out.verdict = BisimResult::Verdict::NotBisimilar;
        out.trace = fail_trace_;
        out.clause = fail_clause_;
        break;
      case Tri::Unknown:
        out.verdict = BisimResult::Verdict::Unknown;
        out.bound_hit = bound_hit_.empty() ? "pairs" : bound_hit_;
        break;
    }
    return out;
  }

  Tri check(TypePtr a, TypePtr b, std::vector<TypeLabel>& path) {
    if (canonicalize_) {
      a = canonical_repr(a, opts_).type;
      b = canonical_repr(b, opts_).type;
    }
    if (type_equal(a, b)) return Tri::Yes;
    if (seq_depth(a) > budget_.max_seq_depth || seq_depth(b) > budget_.max_seq_depth) {
      bound_hit_ = "seq-depth";
      return Tri::Unknown;
    }
    Key key{to_string(a), to_string(b)};
    if (assumed_.count(key)) return Tri::Yes;
    if (++pairs_ > budget_.max_pairs) {
      bound_hit_ = "pairs";
      return Tri::Unknown;
    }

    auto qa = try_qualifier_of(a);
    auto qb = try_qualifier_of(b);
    if (!qa || !qb) return Tri::No;  // open types cannot be related
    if (*qa != *qb) {
      record_fail(path, BisimResult::FailClause::QualifierMismatch);
      return Tri::No;
    }

    assumed_.emplace(key, std::make_pair(a, b));
    size_t journal_mark = journal_.size();
    journal_.push_back(key);

    // decomposition across a shared tail: A~B implies A;C ~ B;C, so a
    // positive sub-answer settles the pair; a negative one proves nothing
    const auto* sa = std::get_if<EndpointType::Seq>(&a->v);
    const auto* sb = std::get_if<EndpointType::Seq>(&b->v);
    if (sa && sb && type_equal(sa->right, sb->right) && normed(sa->left, opts_) &&
        normed(sb->left, opts_)) {
      size_t sub_mark = journal_.size();
      std::vector<TypeLabel> sub_path;
      ++suppress_;  // speculative: its failures are not counterexamples
      Tri sub = check(sa->left, sb->left, sub_path);
      --suppress_;
      if (sub == Tri::Yes) return Tri::Yes;
      rollback(sub_mark);  // the failed attempt's assumptions are unusable
    }

    Tri out = expand(a, b, path);
    if (out != Tri::Yes) rollback(journal_mark);
    return out;
  }

  // payload equivalence for input/output labels; label matching questions do
  // not contribute to the counterexample trace
  Tri payload_match(const PayloadPtr& pa, const PayloadPtr& pb) {
    if (pa->v.index() != pb->v.index()) return Tri::No;
    ++suppress_;
    std::vector<TypeLabel> scratch;
    Tri out = std::visit(
        overloaded{
            [&](const PayloadType::Base& x) {
              return x.name == std::get<PayloadType::Base>(pb->v).name ? Tri::Yes : Tri::No;
            },
            [&](const PayloadType::Endpoint& x) {
              return check(x.type, std::get<PayloadType::Endpoint>(pb->v).type, scratch);
            },
            [&](const PayloadType::Session& x) {
              const auto& y = std::get<PayloadType::Session>(pb->v);
              Tri f = check(x.first, y.first, scratch);
              if (f != Tri::Yes) return f;
              return check(x.second, y.second, scratch);
            },
        },
        pa->v);
    --suppress_;
    return out;
  }

 private:
  using Key = std::pair<std::string, std::string>;

  TypeOptions opts_;
  BisimBudget budget_;
  bool canonicalize_;
  int pairs_ = 0;
  std::map<Key, std::pair<TypePtr, TypePtr>> assumed_;
  std::vector<Key> journal_;
  std::vector<TypeLabel> fail_trace_;
  BisimResult::FailClause fail_clause_ = BisimResult::FailClause::MissingTransition;
  bool fail_recorded_ = false;
  int suppress_ = 0;
  std::string bound_hit_;

  void rollback(size_t mark) {
    while (journal_.size() > mark) {
      assumed_.erase(journal_.back());
      journal_.pop_back();
    }
  }

  void record_fail(const std::vector<TypeLabel>& trace, BisimResult::FailClause clause) {
    if (fail_recorded_ || suppress_ > 0) return;
    fail_recorded_ = true;
    fail_trace_ = trace;
    fail_clause_ = clause;
  }

  Tri expand(const TypePtr& a, const TypePtr& b, std::vector<TypeLabel>& path) {
    auto steps_a = type_step(a, opts_);
    auto steps_b = type_step(b, opts_);
    bool saw_unknown = false;

    auto match_one = [&](const TypeLabel& lab, const TypePtr& succ,
                         const std::vector<std::pair<TypeLabel, TypePtr>>& others,
                         bool descend) -> Tri {
      for (const auto& [olab, osucc] : others) {
        if (lab.kind != olab.kind) continue;
        if (lab.kind == TypeLabel::Kind::Sel || lab.kind == TypeLabel::Kind::Bra) {
          if (lab.label != olab.label) continue;
        } else {
          Tri pm = payload_match(lab.payload, olab.payload);
          if (pm == Tri::No) continue;
          if (pm == Tri::Unknown) return Tri::Unknown;
        }
        if (!descend) return Tri::Yes;
        path.push_back(lab);
        Tri r = check(succ, osucc, path);
        path.pop_back();
        return r;
      }
      path.push_back(lab);
      record_fail(path, BisimResult::FailClause::MissingTransition);
      path.pop_back();
      return Tri::No;
    };

    for (const auto& [lab, succ] : steps_a) {
      Tri r = match_one(lab, succ, steps_b, /*descend=*/true);
      if (r == Tri::No) return Tri::No;
      if (r == Tri::Unknown) saw_unknown = true;
    }
    // the reverse direction only needs existence; the successor pairs above
    // already cover matched labels
    for (const auto& [lab, succ] : steps_b) {
      Tri r = match_one(lab, succ, steps_a, /*descend=*/false);
      if (r == Tri::No) return Tri::No;
      if (r == Tri::Unknown) saw_unknown = true;
    }
    return saw_unknown ? Tri::Unknown : Tri::Yes;
  }
};

// ---------------------------------------------------------------------------
// canonical representatives
// ---------------------------------------------------------------------------

struct CanonCtx {
  TypeOptions opts;
  int budget;
  std::vector<std::string>* steps;
  bool exhausted = false;
  // per-instance validation results for sequence reassociation
  std::map<std::pair<std::string, std::string>, bool> assoc_cache;
};

bool spend(CanonCtx& ctx, const std::string& what) {
  if (ctx.budget <= 0) {
    ctx.exhausted = true;
    return false;
  }
  --ctx.budget;
  if (ctx.steps) ctx.steps->push_back(what);
  return true;
}

TypePtr canon(const TypePtr& t, CanonCtx& ctx);

PayloadPtr canon_payload(const PayloadPtr& p, CanonCtx& ctx) {
  return std::visit(overloaded{
                        [&](const PayloadType::Base&) { return p; },
                        [&](const PayloadType::Endpoint& e) { return mk_endpoint(canon(e.type, ctx)); },
                        [&](const PayloadType::Session& s) {
                          return mk_session(canon(s.first, ctx), canon(s.second, ctx));
                        },
                    },
                    p->v);
}

bool assoc_valid(const TypePtr& before, const TypePtr& after, CanonCtx& ctx) {
  if (all_lin(before)) return true;  // side conditions cannot block all-lin types
  auto key = std::make_pair(to_string(before), to_string(after));
  auto it = ctx.assoc_cache.find(key);
  if (it != ctx.assoc_cache.end()) return it->second;
  Checker chk(ctx.opts, BisimBudget{2000, 64}, /*canonicalize=*/false);
  bool ok = chk.run(before, after).bisimilar();
  ctx.assoc_cache.emplace(std::move(key), ok);
  return ok;
}

// rewrites at one node; children are already canonical
TypePtr rewrite_node(const TypePtr& t, CanonCtx& ctx) {
  const auto* sq = std::get_if<EndpointType::Seq>(&t->v);
  if (!sq) {
    // a recursion binder that is never used is dropped
    if (const auto* r = std::get_if<EndpointType::Rec>(&t->v)) {
      auto fv = free_type_vars(r->body);
      bool used = std::find(fv.begin(), fv.end(), r->var) != fv.end();
      if (!used && spend(ctx, "drop-unused-rec")) return r->body;
    }
    return t;
  }

  // skip elimination: q skip ; T -> T when Q(T) = q
  if (const auto* ql = std::get_if<EndpointType::Qualified>(&sq->left->v)) {
    if (std::holds_alternative<SkipT>(ql->p)) {
      auto qr = try_qualifier_of(sq->right);
      if (qr && *qr == ql->q && spend(ctx, "skip-elim")) return sq->right;
    }
    // distributive law: q *{l_i: T_i} ; T -> q *{l_i: T_i ; T}
    if (const auto* sel = std::get_if<SelectT>(&ql->p)) {
      if (spend(ctx, "distribute-select")) {
        auto arms = sel->arms;
        for (auto& [l, a] : arms) a = mk_seq(a, sq->right);
        return mk_select(ql->q, std::move(arms));
      }
    }
    if (const auto* bra = std::get_if<BranchT>(&ql->p)) {
      if (spend(ctx, "distribute-branch")) {
        auto arms = bra->arms;
        for (auto& [l, a] : arms) a = mk_seq(a, sq->right);
        return mk_branch(ql->q, std::move(arms));
      }
    }
  }

  // Head recursion is never unfolded here: the transition relation already
  // sees through it, and unfolding a recursive choice head re-exposes new
  // recursive heads after distribution, which does not terminate.

  // reassociation to the right, validated per instance
  if (const auto* inner = std::get_if<EndpointType::Seq>(&sq->left->v)) {
    TypePtr after = mk_seq(inner->left, mk_seq(inner->right, sq->right));
    if (assoc_valid(t, after, ctx) && spend(ctx, "assoc-right")) return after;
  }

  return t;
}

TypePtr canon(const TypePtr& t, CanonCtx& ctx) {
  if (ctx.exhausted) return t;
  TypePtr cur = t;
  for (int iter = 0; iter < 64; ++iter) {
    // canonicalize children first
    TypePtr rebuilt = std::visit(
        overloaded{
            [&](const EndpointType::Qualified& q) -> TypePtr {
              return std::visit(
                  overloaded{
                      [&](const SkipT&) { return cur; },
                      [&](const InT& i) { return mk_in(q.q, canon_payload(i.payload, ctx)); },
                      [&](const OutT& o) { return mk_out(q.q, canon_payload(o.payload, ctx)); },
                      [&](const BranchT& b) {
                        auto arms = b.arms;
                        for (auto& [l, a] : arms) a = canon(a, ctx);
                        std::sort(arms.begin(), arms.end(),
                                  [](const auto& x, const auto& y) { return x.first < y.first; });
                        return mk_branch(q.q, std::move(arms));
                      },
                      [&](const SelectT& s) {
                        auto arms = s.arms;
                        for (auto& [l, a] : arms) a = canon(a, ctx);
                        std::sort(arms.begin(), arms.end(),
                                  [](const auto& x, const auto& y) { return x.first < y.first; });
                        return mk_select(q.q, std::move(arms));
                      },
                  },
                  q.p);
            },
            [&](const EndpointType::Var&) { return cur; },
            [&](const EndpointType::Rec& r) -> TypePtr { return mk_rec(r.var, canon(r.body, ctx)); },
            [&](const EndpointType::Seq& s) -> TypePtr {
              return mk_seq(canon(s.left, ctx), canon(s.right, ctx));
            },
        },
        cur->v);
    TypePtr next = rewrite_node(rebuilt, ctx);
    if (type_equal(next, cur)) return next;
    cur = next;
    if (ctx.exhausted) return cur;
  }
  ctx.exhausted = true;
  return cur;
}

}  // namespace

// ---------------------------------------------------------------------------
// public surface
// ---------------------------------------------------------------------------

std::string to_string(const BisimResult& r) {
  std::ostringstream os;
  switch (r.verdict) {
    case BisimResult::Verdict::Bisimilar:
      os << "BISIMILAR\n";
      for (const auto& [a, b] : r.witness)
        os << "PAIR " << to_string(a) << " :: " << to_string(b) << "\n";
      break;
    case BisimResult::Verdict::NotBisimilar: {
      os << "NOT-BISIMILAR";
      for (const auto& l : r.trace) os << ' ' << to_string(l);
      os << "\nCLAUSE "
         << (r.clause == BisimResult::FailClause::QualifierMismatch ? "qualifier-mismatch"
                                                                    : "missing-transition")
         << "\n";
      break;
    }
    case BisimResult::Verdict::Unknown:
      os << "UNKNOWN pairs=" << r.pairs_explored << " bound=" << r.bound_hit << "\n";
      break;
  }
  return os.str();
}

Tri labels_match(const TypeLabel& a, const TypeLabel& b, const TypeOptions& opts,
                 const BisimBudget& budget) {
  if (a.kind != b.kind) return Tri::No;
  if (a.kind == TypeLabel::Kind::Sel || a.kind == TypeLabel::Kind::Bra)
    return a.label == b.label ? Tri::Yes : Tri::No;
  Checker chk(opts, budget, /*canonicalize=*/true);
  return chk.payload_match(a.payload, b.payload);
}

BisimResult bisimilar(const TypePtr& a, const TypePtr& b, const TypeOptions& opts,
                      const BisimBudget& budget) {
  if (!type_closed(a) || !type_closed(b))
    throw std::invalid_argument("bisimilar: types must be closed");
  if (!is_guarded(a) || !is_guarded(b))
    throw UnguardedTypeError("bisimilar: types must be guarded");
  Checker chk(opts, budget, /*canonicalize=*/true);
  return chk.run(a, b);
}

std::pair<TypePtr, TypePtr> distributive_pair(Qualifier q, ChoiceKind star,
                                              const std::vector<std::pair<std::string, TypePtr>>& arms,
                                              const TypePtr& tail) {
  auto mk_choice = [&](std::vector<std::pair<std::string, TypePtr>> as) {
    return star == ChoiceKind::Select ? mk_select(q, std::move(as)) : mk_branch(q, std::move(as));
  };
  auto distributed = arms;
  for (auto& [l, a] : distributed) a = mk_seq(a, tail);
  return {mk_seq(mk_choice(arms), tail), mk_choice(std::move(distributed))};
}

ClassRepr canonical_repr(const TypePtr& t, const TypeOptions& opts, int rewrite_budget) {
  ClassRepr out;
  CanonCtx ctx{opts, rewrite_budget, &out.steps};
  out.type = canon(t, ctx);
  out.canonical = !ctx.exhausted;
  return out;
}

std::vector<std::pair<TypeLabel, ClassRepr>> quotient_step(const TypePtr& t, const TypeOptions& opts) {
  ClassRepr c = canonical_repr(t, opts);
  std::vector<std::pair<TypeLabel, ClassRepr>> out;
  for (const auto& [lab, succ] : type_step(c.type, opts))
    out.push_back({lab, canonical_repr(succ, opts)});
  return out;
}

}  // namespace sessio

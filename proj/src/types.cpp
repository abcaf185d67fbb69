#include "sessio/types.hpp"

#include <algorithm>
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

}  // namespace

// ---- constructors ----

static TypePtr mk(EndpointType e) { return std::make_shared<const EndpointType>(std::move(e)); }

TypePtr mk_skip(Qualifier q) { return mk({EndpointType::Qualified{q, SkipT{}}}); }
TypePtr mk_in(Qualifier q, PayloadPtr t) { return mk({EndpointType::Qualified{q, InT{std::move(t)}}}); }
TypePtr mk_out(Qualifier q, PayloadPtr t) { return mk({EndpointType::Qualified{q, OutT{std::move(t)}}}); }
TypePtr mk_branch(Qualifier q, std::vector<std::pair<std::string, TypePtr>> arms) {
  return mk({EndpointType::Qualified{q, BranchT{std::move(arms)}}});
}
TypePtr mk_select(Qualifier q, std::vector<std::pair<std::string, TypePtr>> arms) {
  return mk({EndpointType::Qualified{q, SelectT{std::move(arms)}}});
}
TypePtr mk_tvar(std::string id) { return mk({EndpointType::Var{std::move(id)}}); }
TypePtr mk_rec(std::string var, TypePtr body) { return mk({EndpointType::Rec{std::move(var), std::move(body)}}); }
TypePtr mk_seq(TypePtr left, TypePtr right) { return mk({EndpointType::Seq{std::move(left), std::move(right)}}); }

PayloadPtr mk_base(std::string name) {
  return std::make_shared<const PayloadType>(PayloadType{PayloadType::Base{std::move(name)}});
}
PayloadPtr mk_endpoint(TypePtr t) {
  return std::make_shared<const PayloadType>(PayloadType{PayloadType::Endpoint{std::move(t)}});
}
PayloadPtr mk_session(TypePtr a, TypePtr b) {
  return std::make_shared<const PayloadType>(PayloadType{PayloadType::Session{std::move(a), std::move(b)}});
}

// ---- equality ----

static bool arms_equal(const std::vector<std::pair<std::string, TypePtr>>& a,
                       const std::vector<std::pair<std::string, TypePtr>>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i].first != b[i].first || !type_equal(a[i].second, b[i].second)) return false;
  return true;
}

bool payload_equal(const PayloadPtr& a, const PayloadPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->v.index() != b->v.index()) return false;
  return std::visit(
      overloaded{
          [&](const PayloadType::Base& x) { return x.name == std::get<PayloadType::Base>(b->v).name; },
          [&](const PayloadType::Endpoint& x) { return type_equal(x.type, std::get<PayloadType::Endpoint>(b->v).type); },
          [&](const PayloadType::Session& x) {
            const auto& y = std::get<PayloadType::Session>(b->v);
            return type_equal(x.first, y.first) && type_equal(x.second, y.second);
          },
      },
      a->v);
}

static bool pretype_equal(const Pretype& a, const Pretype& b) {
  if (a.index() != b.index()) return false;
  return std::visit(overloaded{
                        [&](const SkipT&) { return true; },
                        [&](const InT& x) { return payload_equal(x.payload, std::get<InT>(b).payload); },
                        [&](const OutT& x) { return payload_equal(x.payload, std::get<OutT>(b).payload); },
                        [&](const BranchT& x) { return arms_equal(x.arms, std::get<BranchT>(b).arms); },
                        [&](const SelectT& x) { return arms_equal(x.arms, std::get<SelectT>(b).arms); },
                    },
                    a);
}

bool type_equal(const TypePtr& a, const TypePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->v.index() != b->v.index()) return false;
  return std::visit(
      overloaded{
          [&](const EndpointType::Qualified& x) {
            const auto& y = std::get<EndpointType::Qualified>(b->v);
            return x.q == y.q && pretype_equal(x.p, y.p);
          },
          [&](const EndpointType::Var& x) { return x.id == std::get<EndpointType::Var>(b->v).id; },
          [&](const EndpointType::Rec& x) {
            const auto& y = std::get<EndpointType::Rec>(b->v);
            return x.var == y.var && type_equal(x.body, y.body);
          },
          [&](const EndpointType::Seq& x) {
            const auto& y = std::get<EndpointType::Seq>(b->v);
            return type_equal(x.left, y.left) && type_equal(x.right, y.right);
          },
      },
      a->v);
}

// ---- printing ----

std::string to_string(Qualifier q) { return q == Qualifier::Lin ? "lin" : "un"; }

static void print_type(std::ostream& os, const TypePtr& t, bool seq_left);

static void print_payload(std::ostream& os, const PayloadPtr& p) {
  std::visit(overloaded{
                 [&](const PayloadType::Base& b) { os << b.name; },
                 [&](const PayloadType::Endpoint& e) {
                   os << '(';
                   print_type(os, e.type, false);
                   os << ')';
                 },
                 [&](const PayloadType::Session& s) {
                   os << '(';
                   print_type(os, s.first, false);
                   os << ", ";
                   print_type(os, s.second, false);
                   os << ')';
                 },
             },
             p->v);
}

static void print_arms(std::ostream& os, const std::vector<std::pair<std::string, TypePtr>>& arms) {
  os << '{';
  bool first = true;
  for (const auto& [l, a] : arms) {
    if (!first) os << ", ";
    first = false;
    os << l << ": ";
    print_type(os, a, false);
  }
  os << '}';
}

// seq_left: position as the left operand of ';' — Seq and Rec need parens
// there to keep the printed form right-associative and re-parsable.
static void print_type(std::ostream& os, const TypePtr& t, bool seq_left) {
  std::visit(
      overloaded{
          [&](const EndpointType::Qualified& q) {
            os << to_string(q.q) << ' ';
            std::visit(overloaded{
                           [&](const SkipT&) { os << "skip"; },
                           [&](const InT& i) {
                             os << '?';
                             print_payload(os, i.payload);
                           },
                           [&](const OutT& o) {
                             os << '!';
                             print_payload(os, o.payload);
                           },
                           [&](const BranchT& b) {
                             os << '&';
                             print_arms(os, b.arms);
                           },
                           [&](const SelectT& s) {
                             os << '+';
                             print_arms(os, s.arms);
                           },
                       },
                       q.p);
          },
          [&](const EndpointType::Var& v) { os << v.id; },
          [&](const EndpointType::Rec& r) {
            if (seq_left) os << '(';
            os << "rec " << r.var << " . ";
            print_type(os, r.body, false);
            if (seq_left) os << ')';
          },
          [&](const EndpointType::Seq& s) {
            if (seq_left) os << '(';
            print_type(os, s.left, true);
            os << " ; ";
            print_type(os, s.right, false);
            if (seq_left) os << ')';
          },
      },
      t->v);
}

std::string to_string(const TypePtr& t) {
  std::ostringstream os;
  print_type(os, t, false);
  return os.str();
}

std::string to_string(const PayloadPtr& t) {
  std::ostringstream os;
  print_payload(os, t);
  return os.str();
}

// ---- labels ----

TypeLabel out_label(PayloadPtr t) { return {TypeLabel::Kind::Out, std::move(t), {}}; }
TypeLabel in_label(PayloadPtr t) { return {TypeLabel::Kind::In, std::move(t), {}}; }
TypeLabel sel_label(std::string l) { return {TypeLabel::Kind::Sel, nullptr, std::move(l)}; }
TypeLabel bra_label(std::string l) { return {TypeLabel::Kind::Bra, nullptr, std::move(l)}; }

TypeLabel dual_label(const TypeLabel& l) {
  switch (l.kind) {
    case TypeLabel::Kind::Out: return in_label(l.payload);
    case TypeLabel::Kind::In: return out_label(l.payload);
    case TypeLabel::Kind::Sel: return bra_label(l.label);
    case TypeLabel::Kind::Bra: return sel_label(l.label);
  }
  return l;
}

bool label_equal(const TypeLabel& a, const TypeLabel& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case TypeLabel::Kind::Out:
    case TypeLabel::Kind::In: return payload_equal(a.payload, b.payload);
    case TypeLabel::Kind::Sel:
    case TypeLabel::Kind::Bra: return a.label == b.label;
  }
  return false;
}

std::string to_string(const TypeLabel& l) {
  switch (l.kind) {
    case TypeLabel::Kind::Out: return "!" + to_string(l.payload);
    case TypeLabel::Kind::In: return "?" + to_string(l.payload);
    case TypeLabel::Kind::Sel: return "+" + l.label;
    case TypeLabel::Kind::Bra: return "&" + l.label;
  }
  return {};
}

// ---- qualifier ----

std::optional<Qualifier> try_qualifier_of(const TypePtr& t) {
  return std::visit(
      overloaded{
          [&](const EndpointType::Qualified& q) -> std::optional<Qualifier> { return q.q; },
          [&](const EndpointType::Var&) -> std::optional<Qualifier> { return std::nullopt; },
          [&](const EndpointType::Rec& r) { return try_qualifier_of(r.body); },
          [&](const EndpointType::Seq& s) { return try_qualifier_of(s.left); },
      },
      t->v);
}

Qualifier qualifier_of(const TypePtr& t) {
  auto q = try_qualifier_of(t);
  if (!q) throw UndefinedQualifierError("qualifier undefined on bare type variable: " + to_string(t));
  return *q;
}

bool qual_leq(Qualifier a, Qualifier b) { return b == Qualifier::Un || a == Qualifier::Lin; }

// ---- dual ----

TypePtr dual(const TypePtr& t) {
  return std::visit(
      overloaded{
          [&](const EndpointType::Qualified& q) -> TypePtr {
            return std::visit(overloaded{
                                  [&](const SkipT&) { return mk_skip(q.q); },
                                  [&](const InT& i) { return mk_out(q.q, i.payload); },
                                  [&](const OutT& o) { return mk_in(q.q, o.payload); },
                                  [&](const BranchT& b) {
                                    auto arms = b.arms;
                                    for (auto& [l, a] : arms) a = dual(a);
                                    return mk_select(q.q, std::move(arms));
                                  },
                                  [&](const SelectT& s) {
                                    auto arms = s.arms;
                                    for (auto& [l, a] : arms) a = dual(a);
                                    return mk_branch(q.q, std::move(arms));
                                  },
                              },
                              q.p);
          },
          [&](const EndpointType::Var& v) -> TypePtr { return mk_tvar(v.id); },
          [&](const EndpointType::Rec& r) -> TypePtr { return mk_rec(r.var, dual(r.body)); },
          [&](const EndpointType::Seq& s) -> TypePtr { return mk_seq(dual(s.left), dual(s.right)); },
      },
      t->v);
}

// ---- free variables / substitution ----

static void collect_fv(const TypePtr& t, std::set<std::string>& bound, std::set<std::string>& out);

static void collect_fv_payload(const PayloadPtr& p, std::set<std::string>& bound, std::set<std::string>& out) {
  std::visit(overloaded{
                 [&](const PayloadType::Base&) {},
                 [&](const PayloadType::Endpoint& e) { collect_fv(e.type, bound, out); },
                 [&](const PayloadType::Session& s) {
                   collect_fv(s.first, bound, out);
                   collect_fv(s.second, bound, out);
                 },
             },
             p->v);
}

static void collect_fv(const TypePtr& t, std::set<std::string>& bound, std::set<std::string>& out) {
  std::visit(overloaded{
                 [&](const EndpointType::Qualified& q) {
                   std::visit(overloaded{
                                  [&](const SkipT&) {},
                                  [&](const InT& i) { collect_fv_payload(i.payload, bound, out); },
                                  [&](const OutT& o) { collect_fv_payload(o.payload, bound, out); },
                                  [&](const BranchT& b) {
                                    for (const auto& [l, a] : b.arms) collect_fv(a, bound, out);
                                  },
                                  [&](const SelectT& s) {
                                    for (const auto& [l, a] : s.arms) collect_fv(a, bound, out);
                                  },
                              },
                              q.p);
                 },
                 [&](const EndpointType::Var& v) {
                   if (!bound.count(v.id)) out.insert(v.id);
                 },
                 [&](const EndpointType::Rec& r) {
                   bool fresh = bound.insert(r.var).second;
                   collect_fv(r.body, bound, out);
                   if (fresh) bound.erase(r.var);
                 },
                 [&](const EndpointType::Seq& s) {
                   collect_fv(s.left, bound, out);
                   collect_fv(s.right, bound, out);
                 },
             },
             t->v);
}

std::vector<std::string> free_type_vars(const TypePtr& t) {
  std::set<std::string> bound, out;
  collect_fv(t, bound, out);
  return {out.begin(), out.end()};
}

bool type_closed(const TypePtr& t) { return free_type_vars(t).empty(); }

static std::string fresh_tvar(const std::string& base, const std::set<std::string>& avoid) {
  std::string cand = base;
  int k = 0;
  while (avoid.count(cand)) cand = base + std::to_string(++k);
  return cand;
}

static TypePtr subst_tv(const TypePtr& t, const std::string& var, const TypePtr& repl,
                        const std::set<std::string>& repl_fv);

static PayloadPtr subst_tv_payload(const PayloadPtr& p, const std::string& var, const TypePtr& repl,
                                   const std::set<std::string>& repl_fv) {
  return std::visit(
      overloaded{
          [&](const PayloadType::Base&) { return p; },
          [&](const PayloadType::Endpoint& e) { return mk_endpoint(subst_tv(e.type, var, repl, repl_fv)); },
          [&](const PayloadType::Session& s) {
            return mk_session(subst_tv(s.first, var, repl, repl_fv), subst_tv(s.second, var, repl, repl_fv));
          },
      },
      p->v);
}

static TypePtr subst_tv(const TypePtr& t, const std::string& var, const TypePtr& repl,
                        const std::set<std::string>& repl_fv) {
  return std::visit(
      overloaded{
          [&](const EndpointType::Qualified& q) -> TypePtr {
            return std::visit(
                overloaded{
                    [&](const SkipT&) { return t; },
                    [&](const InT& i) { return mk_in(q.q, subst_tv_payload(i.payload, var, repl, repl_fv)); },
                    [&](const OutT& o) { return mk_out(q.q, subst_tv_payload(o.payload, var, repl, repl_fv)); },
                    [&](const BranchT& b) {
                      auto arms = b.arms;
                      for (auto& [l, a] : arms) a = subst_tv(a, var, repl, repl_fv);
                      return mk_branch(q.q, std::move(arms));
                    },
                    [&](const SelectT& s) {
                      auto arms = s.arms;
                      for (auto& [l, a] : arms) a = subst_tv(a, var, repl, repl_fv);
                      return mk_select(q.q, std::move(arms));
                    },
                },
                q.p);
          },
          [&](const EndpointType::Var& v) -> TypePtr { return v.id == var ? repl : t; },
          [&](const EndpointType::Rec& r) -> TypePtr {
            if (r.var == var) return t;  // shadowed
            if (repl_fv.count(r.var)) {
              // binder would capture a free variable of the replacement
              std::set<std::string> avoid = repl_fv;
              std::set<std::string> bound, body_fv;
              collect_fv(r.body, bound, body_fv);
              avoid.insert(body_fv.begin(), body_fv.end());
              avoid.insert(var);
              std::string nv = fresh_tvar(r.var, avoid);
              TypePtr renamed = subst_tv(r.body, r.var, mk_tvar(nv), {});
              return mk_rec(nv, subst_tv(renamed, var, repl, repl_fv));
            }
            return mk_rec(r.var, subst_tv(r.body, var, repl, repl_fv));
          },
          [&](const EndpointType::Seq& s) -> TypePtr {
            return mk_seq(subst_tv(s.left, var, repl, repl_fv), subst_tv(s.right, var, repl, repl_fv));
          },
      },
      t->v);
}

TypePtr subst_type_var(const TypePtr& t, const std::string& var, const TypePtr& replacement) {
  std::set<std::string> bound, fv;
  collect_fv(replacement, bound, fv);
  return subst_tv(t, var, replacement, fv);
}

TypePtr unfold(const TypePtr& t) {
  const auto* r = std::get_if<EndpointType::Rec>(&t->v);
  if (!r) throw std::invalid_argument("unfold: not a recursive type: " + to_string(t));
  if (!is_guarded(t)) throw UnguardedTypeError("unfold: unguarded recursion: " + to_string(t));
  return subst_type_var(r->body, r->var, t);
}

// ---- guardedness ----

// True when every live path through t performs at least one input or output.
static bool guards_all(const TypePtr& t) {
  return std::visit(
      overloaded{
          [&](const EndpointType::Qualified& q) -> bool {
            return std::visit(overloaded{
                                  [&](const SkipT&) { return false; },
                                  [&](const InT&) { return true; },
                                  [&](const OutT&) { return true; },
                                  [&](const BranchT& b) {
                                    bool any_live = false;
                                    for (const auto& [l, a] : b.arms) {
                                      auto aq = try_qualifier_of(a);
                                      if (!aq) return false;
                                      if (!qual_leq(q.q, *aq)) continue;  // arm blocked, unreachable
                                      any_live = true;
                                      if (!guards_all(a)) return false;
                                    }
                                    return any_live;
                                  },
                                  [&](const SelectT& s) {
                                    bool any_live = false;
                                    for (const auto& [l, a] : s.arms) {
                                      auto aq = try_qualifier_of(a);
                                      if (!aq) return false;
                                      if (!qual_leq(q.q, *aq)) continue;
                                      any_live = true;
                                      if (!guards_all(a)) return false;
                                    }
                                    return any_live;
                                  },
                              },
                              q.p);
          },
          [&](const EndpointType::Var&) { return false; },
          [&](const EndpointType::Rec& r) { return guards_all(r.body); },
          [&](const EndpointType::Seq& s) { return guards_all(s.left) || guards_all(s.right); },
      },
      t->v);
}

// shielded: an in/out action stands between the binder and every occurrence.
static bool shielded(const TypePtr& t, const std::string& z, bool s) {
  return std::visit(
      overloaded{
          [&](const EndpointType::Qualified& q) -> bool {
            return std::visit(overloaded{
                                  [&](const SkipT&) { return true; },
                                  // occurrences inside a carried payload sit behind the action itself
                                  [&](const InT&) { return true; },
                                  [&](const OutT&) { return true; },
                                  [&](const BranchT& b) {
                                    for (const auto& [l, a] : b.arms)
                                      if (!shielded(a, z, s)) return false;
                                    return true;
                                  },
                                  [&](const SelectT& sel) {
                                    for (const auto& [l, a] : sel.arms)
                                      if (!shielded(a, z, s)) return false;
                                    return true;
                                  },
                              },
                              q.p);
          },
          [&](const EndpointType::Var& v) { return v.id != z || s; },
          [&](const EndpointType::Rec& r) { return r.var == z || shielded(r.body, z, s); },
          [&](const EndpointType::Seq& sq) {
            return shielded(sq.left, z, s) && shielded(sq.right, z, s || guards_all(sq.left));
          },
      },
      t->v);
}

bool is_guarded(const TypePtr& t) {
  return std::visit(
      overloaded{
          [&](const EndpointType::Qualified& q) -> bool {
            return std::visit(overloaded{
                                  [&](const SkipT&) { return true; },
                                  [&](const InT& i) {
                                    return std::visit(overloaded{
                                                          [&](const PayloadType::Base&) { return true; },
                                                          [&](const PayloadType::Endpoint& e) { return is_guarded(e.type); },
                                                          [&](const PayloadType::Session& se) {
                                                            return is_guarded(se.first) && is_guarded(se.second);
                                                          },
                                                      },
                                                      i.payload->v);
                                  },
                                  [&](const OutT& o) {
                                    return std::visit(overloaded{
                                                          [&](const PayloadType::Base&) { return true; },
                                                          [&](const PayloadType::Endpoint& e) { return is_guarded(e.type); },
                                                          [&](const PayloadType::Session& se) {
                                                            return is_guarded(se.first) && is_guarded(se.second);
                                                          },
                                                      },
                                                      o.payload->v);
                                  },
                                  [&](const BranchT& b) {
                                    for (const auto& [l, a] : b.arms)
                                      if (!is_guarded(a)) return false;
                                    return true;
                                  },
                                  [&](const SelectT& s) {
                                    for (const auto& [l, a] : s.arms)
                                      if (!is_guarded(a)) return false;
                                    return true;
                                  },
                              },
                              q.p);
          },
          [&](const EndpointType::Var&) { return true; },
          [&](const EndpointType::Rec& r) { return shielded(r.body, r.var, false) && is_guarded(r.body); },
          [&](const EndpointType::Seq& s) { return is_guarded(s.left) && is_guarded(s.right); },
      },
      t->v);
}

// ---- transitions ----

static std::vector<std::pair<TypeLabel, TypePtr>> step_impl(const TypePtr& t, const TypeOptions& opts,
                                                            int depth) {
  if (depth > 512)
    throw UnguardedTypeError("type transition unfolding exceeded depth bound: " + to_string(t));
  using Res = std::vector<std::pair<TypeLabel, TypePtr>>;
  return std::visit(
      overloaded{
          [&](const EndpointType::Qualified& q) -> Res {
            return std::visit(
                overloaded{
                    [&](const SkipT&) -> Res { return {}; },
                    [&](const InT& i) -> Res {
                      TypePtr succ = (opts.un_self_loop && q.q == Qualifier::Un) ? t : mk_skip(q.q);
                      return {{in_label(i.payload), succ}};
                    },
                    [&](const OutT& o) -> Res {
                      TypePtr succ = (opts.un_self_loop && q.q == Qualifier::Un) ? t : mk_skip(q.q);
                      return {{out_label(o.payload), succ}};
                    },
                    [&](const SelectT& s) -> Res {
                      Res r;
                      for (const auto& [l, a] : s.arms) {
                        auto aq = try_qualifier_of(a);
                        if (aq && qual_leq(q.q, *aq)) r.push_back({sel_label(l), a});
                      }
                      return r;
                    },
                    [&](const BranchT& b) -> Res {
                      Res r;
                      for (const auto& [l, a] : b.arms) {
                        auto aq = try_qualifier_of(a);
                        if (aq && qual_leq(q.q, *aq)) r.push_back({bra_label(l), a});
                      }
                      return r;
                    },
                },
                q.p);
          },
          [&](const EndpointType::Var&) -> Res { return {}; },
          [&](const EndpointType::Rec&) -> Res { return step_impl(unfold(t), opts, depth + 1); },
          [&](const EndpointType::Seq& s) -> Res {
            Res left_steps = step_impl(s.left, opts, depth + 1);
            auto lq = try_qualifier_of(s.left);
            if (!left_steps.empty()) {
              Res r;
              for (auto& [lab, succ] : left_steps) {
                auto sq = try_qualifier_of(succ);
                if (lq && sq && qual_leq(*lq, *sq)) r.push_back({lab, mk_seq(succ, s.right)});
              }
              return r;
            }
            auto rq = try_qualifier_of(s.right);
            if (!lq || !rq || !qual_leq(*lq, *rq)) return {};
            Res right_steps = step_impl(s.right, opts, depth + 1);
            Res r;
            for (auto& [lab, succ] : right_steps) {
              auto sq = try_qualifier_of(succ);
              if (sq && qual_leq(*rq, *sq)) r.push_back({lab, succ});
            }
            return r;
          },
      },
      t->v);
}

std::vector<std::pair<TypeLabel, TypePtr>> type_step(const TypePtr& t, const TypeOptions& opts) {
  return step_impl(t, opts, 0);
}

bool terminated(const TypePtr& t, const TypeOptions& opts) { return type_step(t, opts).empty(); }

bool normed(const TypePtr& t, const TypeOptions& opts, int depth_bound) {
  // depth-bounded search for a terminated state
  std::set<std::string> seen;
  std::vector<std::pair<TypePtr, int>> stack{{t, 0}};
  while (!stack.empty()) {
    auto [cur, d] = stack.back();
    stack.pop_back();
    auto key = to_string(cur);
    if (!seen.insert(key).second) continue;
    auto steps = type_step(cur, opts);
    if (steps.empty()) return true;
    if (d >= depth_bound) continue;
    for (auto& [lab, succ] : steps) stack.push_back({succ, d + 1});
  }
  return false;
}

}  // namespace sessio

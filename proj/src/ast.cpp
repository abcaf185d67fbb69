#include "sessio/ast.hpp"

#include <algorithm>
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

// ---- terms ----

TermPtr mk_name(std::string id) { return std::make_shared<const Term>(Term{Term::Name{std::move(id)}}); }
TermPtr mk_var(std::string id) { return std::make_shared<const Term>(Term{Term::Var{std::move(id)}}); }
TermPtr mk_app(std::string fn, std::vector<TermPtr> args) {
  return std::make_shared<const Term>(Term{Term::App{std::move(fn), std::move(args)}});
}

bool term_equal(const TermPtr& a, const TermPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->v.index() != b->v.index()) return false;
  return std::visit(overloaded{
                        [&](const Term::Name& x) { return x.id == std::get<Term::Name>(b->v).id; },
                        [&](const Term::Var& x) { return x.id == std::get<Term::Var>(b->v).id; },
                        [&](const Term::App& x) {
                          const auto& y = std::get<Term::App>(b->v);
                          if (x.fn != y.fn || x.args.size() != y.args.size()) return false;
                          for (size_t i = 0; i < x.args.size(); ++i)
                            if (!term_equal(x.args[i], y.args[i])) return false;
                          return true;
                        },
                    },
                    a->v);
}

std::string to_string(const TermPtr& t) {
  return std::visit(overloaded{
                        [](const Term::Name& n) { return n.id; },
                        [](const Term::Var& v) { return v.id; },
                        [](const Term::App& a) {
                          if (a.args.empty()) return a.fn;
                          std::string s = a.fn + "(";
                          for (size_t i = 0; i < a.args.size(); ++i) {
                            if (i) s += ", ";
                            s += to_string(a.args[i]);
                          }
                          return s + ")";
                        },
                    },
                    t->v);
}

TermPtr to_term(const Sendable& u) {
  switch (u.kind) {
    case Sendable::Kind::Name: return mk_name(u.id);
    case Sendable::Kind::Var: return mk_var(u.id);
    case Sendable::Kind::Const: return mk_app(u.id, {});
  }
  return nullptr;
}

std::optional<Sendable> term_to_sendable(const TermPtr& t) {
  return std::visit(
      overloaded{
          [](const Term::Name& n) -> std::optional<Sendable> {
            return Sendable{Sendable::Kind::Name, n.id};
          },
          [](const Term::Var& v) -> std::optional<Sendable> {
            return Sendable{Sendable::Kind::Var, v.id};
          },
          [](const Term::App& a) -> std::optional<Sendable> {
            if (a.args.empty()) return Sendable{Sendable::Kind::Const, a.fn};
            return std::nullopt;
          },
      },
      t->v);
}

// ---- processes ----

static ProcPtr mkp(Process p) { return std::make_shared<const Process>(std::move(p)); }

ProcPtr mk_nil(Pos pos) { return mkp({Process::Nil{}, pos}); }
ProcPtr mk_par(ProcPtr l, ProcPtr r, Pos pos) { return mkp({Process::Par{std::move(l), std::move(r)}, pos}); }
ProcPtr mk_repl(ProcPtr body, Pos pos) { return mkp({Process::Repl{std::move(body)}, pos}); }
ProcPtr mk_restrict(std::string name, SessionType ann, ProcPtr body, Pos pos) {
  return mkp({Process::Restrict{std::move(name), std::move(ann), std::move(body)}, pos});
}
ProcPtr mk_if(TermPtr l, TermPtr r, ProcPtr t, ProcPtr e, Pos pos) {
  return mkp({Process::If{std::move(l), std::move(r), std::move(t), std::move(e)}, pos});
}
ProcPtr mk_input(Sendable ch, std::string binder, ProcPtr body, Pos pos) {
  return mkp({Process::Input{std::move(ch), std::move(binder), std::move(body)}, pos});
}
ProcPtr mk_output(Sendable ch, Sendable payload, ProcPtr body, Pos pos) {
  return mkp({Process::Output{std::move(ch), std::move(payload), std::move(body)}, pos});
}
ProcPtr mk_select(Sendable ch, std::string label, ProcPtr body, Pos pos) {
  return mkp({Process::Select{std::move(ch), std::move(label), std::move(body)}, pos});
}
ProcPtr mk_branch(Sendable ch, std::vector<std::pair<std::string, ProcPtr>> arms, Pos pos) {
  return mkp({Process::Branch{std::move(ch), std::move(arms)}, pos});
}
ProcPtr mk_agent_call(std::string agent, std::vector<TermPtr> args, Pos pos) {
  return mkp({Process::AgentCall{std::move(agent), std::move(args)}, pos});
}

static bool session_equal(const SessionType& a, const SessionType& b) {
  return type_equal(a.first, b.first) && type_equal(a.second, b.second);
}

bool proc_equal(const ProcPtr& a, const ProcPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->v.index() != b->v.index()) return false;
  return std::visit(
      overloaded{
          [&](const Process::Nil&) { return true; },
          [&](const Process::Par& x) {
            const auto& y = std::get<Process::Par>(b->v);
            return proc_equal(x.left, y.left) && proc_equal(x.right, y.right);
          },
          [&](const Process::Repl& x) { return proc_equal(x.body, std::get<Process::Repl>(b->v).body); },
          [&](const Process::Restrict& x) {
            const auto& y = std::get<Process::Restrict>(b->v);
            return x.name == y.name && session_equal(x.ann, y.ann) && proc_equal(x.body, y.body);
          },
          [&](const Process::If& x) {
            const auto& y = std::get<Process::If>(b->v);
            return term_equal(x.lhs, y.lhs) && term_equal(x.rhs, y.rhs) &&
                   proc_equal(x.then_p, y.then_p) && proc_equal(x.else_p, y.else_p);
          },
          [&](const Process::Input& x) {
            const auto& y = std::get<Process::Input>(b->v);
            return x.channel == y.channel && x.binder == y.binder && proc_equal(x.body, y.body);
          },
          [&](const Process::Output& x) {
            const auto& y = std::get<Process::Output>(b->v);
            return x.channel == y.channel && x.payload == y.payload && proc_equal(x.body, y.body);
          },
          [&](const Process::Select& x) {
            const auto& y = std::get<Process::Select>(b->v);
            return x.channel == y.channel && x.label == y.label && proc_equal(x.body, y.body);
          },
          [&](const Process::Branch& x) {
            const auto& y = std::get<Process::Branch>(b->v);
            if (x.channel != y.channel || x.arms.size() != y.arms.size()) return false;
            for (size_t i = 0; i < x.arms.size(); ++i)
              if (x.arms[i].first != y.arms[i].first || !proc_equal(x.arms[i].second, y.arms[i].second))
                return false;
            return true;
          },
          [&](const Process::AgentCall& x) {
            const auto& y = std::get<Process::AgentCall>(b->v);
            if (x.agent != y.agent || x.args.size() != y.args.size()) return false;
            for (size_t i = 0; i < x.args.size(); ++i)
              if (!term_equal(x.args[i], y.args[i])) return false;
            return true;
          },
      },
      a->v);
}

// ---- extended processes ----

static ExtPtr mke(ExtendedProcess e) { return std::make_shared<const ExtendedProcess>(std::move(e)); }

ExtPtr mk_plain(ProcPtr p, Pos pos) { return mke({ExtendedProcess::Plain{std::move(p)}, pos}); }
ExtPtr mk_apar(ExtPtr l, ExtPtr r, Pos pos) {
  return mke({ExtendedProcess::APar{std::move(l), std::move(r)}, pos});
}
ExtPtr mk_anu_name(std::string name, SessionType ann, ExtPtr body, Pos pos) {
  return mke({ExtendedProcess::ANuName{std::move(name), std::move(ann), std::move(body)}, pos});
}
ExtPtr mk_anu_var(std::string var, PayloadPtr ann, ExtPtr body, Pos pos) {
  return mke({ExtendedProcess::ANuVar{std::move(var), std::move(ann), std::move(body)}, pos});
}
ExtPtr mk_active_subst(std::string var, TermPtr term, Pos pos) {
  return mke({ExtendedProcess::ActiveSubst{std::move(var), std::move(term)}, pos});
}

bool ext_equal(const ExtPtr& a, const ExtPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->v.index() != b->v.index()) return false;
  return std::visit(
      overloaded{
          [&](const ExtendedProcess::Plain& x) {
            return proc_equal(x.proc, std::get<ExtendedProcess::Plain>(b->v).proc);
          },
          [&](const ExtendedProcess::APar& x) {
            const auto& y = std::get<ExtendedProcess::APar>(b->v);
            return ext_equal(x.left, y.left) && ext_equal(x.right, y.right);
          },
          [&](const ExtendedProcess::ANuName& x) {
            const auto& y = std::get<ExtendedProcess::ANuName>(b->v);
            return x.name == y.name && session_equal(x.ann, y.ann) && ext_equal(x.body, y.body);
          },
          [&](const ExtendedProcess::ANuVar& x) {
            const auto& y = std::get<ExtendedProcess::ANuVar>(b->v);
            return x.var == y.var && payload_equal(x.ann, y.ann) && ext_equal(x.body, y.body);
          },
          [&](const ExtendedProcess::ActiveSubst& x) {
            const auto& y = std::get<ExtendedProcess::ActiveSubst>(b->v);
            return x.var == y.var && term_equal(x.term, y.term);
          },
      },
      a->v);
}

// ---- programs ----

const FuncSig* Program::find_func(const std::string& name) const {
  for (const auto& [n, sig] : funcs)
    if (n == name) return &sig;
  return nullptr;
}

const AgentDef* Program::find_agent(const std::string& name) const {
  for (const auto& a : agents)
    if (a.name == name) return &a;
  return nullptr;
}

bool Program::has_base(const std::string& name) const {
  return std::find(base_types.begin(), base_types.end(), name) != base_types.end();
}

// ---- free identifiers ----

static void fi_term(const TermPtr& t, FreeIds& out) {
  std::visit(overloaded{
                 [&](const Term::Name& n) { out.names.insert(n.id); },
                 [&](const Term::Var& v) { out.vars.insert(v.id); },
                 [&](const Term::App& a) {
                   for (const auto& arg : a.args) fi_term(arg, out);
                 },
             },
             t->v);
}

static void fi_sendable(const Sendable& u, FreeIds& out) {
  if (u.kind == Sendable::Kind::Name) out.names.insert(u.id);
  if (u.kind == Sendable::Kind::Var) out.vars.insert(u.id);
}

static void merge(FreeIds& out, const FreeIds& in) {
  out.names.insert(in.names.begin(), in.names.end());
  out.vars.insert(in.vars.begin(), in.vars.end());
}

static void fi_proc(const ProcPtr& p, FreeIds& out) {
  std::visit(overloaded{
                 [&](const Process::Nil&) {},
                 [&](const Process::Par& x) {
                   fi_proc(x.left, out);
                   fi_proc(x.right, out);
                 },
                 [&](const Process::Repl& x) { fi_proc(x.body, out); },
                 [&](const Process::Restrict& x) {
                   FreeIds inner;
                   fi_proc(x.body, inner);
                   inner.names.erase(x.name);
                   merge(out, inner);
                 },
                 [&](const Process::If& x) {
                   fi_term(x.lhs, out);
                   fi_term(x.rhs, out);
                   fi_proc(x.then_p, out);
                   fi_proc(x.else_p, out);
                 },
                 [&](const Process::Input& x) {
                   fi_sendable(x.channel, out);
                   FreeIds inner;
                   fi_proc(x.body, inner);
                   inner.vars.erase(x.binder);
                   merge(out, inner);
                 },
                 [&](const Process::Output& x) {
                   fi_sendable(x.channel, out);
                   fi_sendable(x.payload, out);
                   fi_proc(x.body, out);
                 },
                 [&](const Process::Select& x) {
                   fi_sendable(x.channel, out);
                   fi_proc(x.body, out);
                 },
                 [&](const Process::Branch& x) {
                   fi_sendable(x.channel, out);
                   for (const auto& [l, arm] : x.arms) fi_proc(arm, out);
                 },
                 [&](const Process::AgentCall& x) {
                   for (const auto& a : x.args) fi_term(a, out);
                 },
             },
             p->v);
}

static void fi_ext(const ExtPtr& a, FreeIds& out) {
  std::visit(overloaded{
                 [&](const ExtendedProcess::Plain& x) { fi_proc(x.proc, out); },
                 [&](const ExtendedProcess::APar& x) {
                   fi_ext(x.left, out);
                   fi_ext(x.right, out);
                 },
                 [&](const ExtendedProcess::ANuName& x) {
                   FreeIds inner;
                   fi_ext(x.body, inner);
                   inner.names.erase(x.name);
                   merge(out, inner);
                 },
                 [&](const ExtendedProcess::ANuVar& x) {
                   FreeIds inner;
                   fi_ext(x.body, inner);
                   inner.vars.erase(x.var);
                   merge(out, inner);
                 },
                 [&](const ExtendedProcess::ActiveSubst& x) {
                   out.vars.insert(x.var);
                   fi_term(x.term, out);
                 },
             },
             a->v);
}

FreeIds free_identifiers(const TermPtr& t) {
  FreeIds out;
  fi_term(t, out);
  return out;
}
FreeIds free_identifiers(const ProcPtr& p) {
  FreeIds out;
  fi_proc(p, out);
  return out;
}
FreeIds free_identifiers(const ExtPtr& a) {
  FreeIds out;
  fi_ext(a, out);
  return out;
}

// ---- substitution ----

std::string fresh_ident(const std::string& base, const std::set<std::string>& avoid) {
  if (!avoid.count(base)) return base;
  for (int k = 1;; ++k) {
    std::string cand = base + std::to_string(k);
    if (!avoid.count(cand)) return cand;
  }
}

TermPtr substitute(const TermPtr& t, const Subst& s) {
  return std::visit(overloaded{
                        [&](const Term::Name&) { return t; },
                        [&](const Term::Var& v) {
                          auto it = s.find(v.id);
                          return it == s.end() ? t : it->second;
                        },
                        [&](const Term::App& a) {
                          std::vector<TermPtr> args;
                          args.reserve(a.args.size());
                          for (const auto& arg : a.args) args.push_back(substitute(arg, s));
                          return mk_app(a.fn, std::move(args));
                        },
                    },
                    t->v);
}

static Sendable subst_sendable(const Sendable& u, const Subst& s, Pos pos) {
  if (u.kind != Sendable::Kind::Var) return u;
  auto it = s.find(u.id);
  if (it == s.end()) return u;
  auto repl = term_to_sendable(it->second);
  if (!repl)
    throw IllFormedSendError("compound term " + to_string(it->second) +
                                 " cannot appear in a channel or payload position",
                             pos);
  return *repl;
}

// free identifiers (names and vars) occurring in the substitution's image
static std::set<std::string> image_idents(const Subst& s) {
  std::set<std::string> out;
  for (const auto& [v, t] : s) {
    FreeIds f = free_identifiers(t);
    out.insert(f.names.begin(), f.names.end());
    out.insert(f.vars.begin(), f.vars.end());
  }
  return out;
}

static std::set<std::string> all_idents(const ProcPtr& p) {
  FreeIds f = free_identifiers(p);
  std::set<std::string> out = f.names;
  out.insert(f.vars.begin(), f.vars.end());
  return out;
}

// rename free occurrences of a name (used when a restriction binder would
// capture part of a substitution image)
static ProcPtr rename_free_name(const ProcPtr& p, const std::string& from, const std::string& to);

static Sendable rename_sendable(const Sendable& u, const std::string& from, const std::string& to) {
  if (u.kind == Sendable::Kind::Name && u.id == from) return {Sendable::Kind::Name, to};
  return u;
}

static TermPtr rename_term(const TermPtr& t, const std::string& from, const std::string& to) {
  return std::visit(overloaded{
                        [&](const Term::Name& n) { return n.id == from ? mk_name(to) : t; },
                        [&](const Term::Var&) { return t; },
                        [&](const Term::App& a) {
                          std::vector<TermPtr> args;
                          for (const auto& arg : a.args) args.push_back(rename_term(arg, from, to));
                          return mk_app(a.fn, std::move(args));
                        },
                    },
                    t->v);
}

static ProcPtr rename_free_name(const ProcPtr& p, const std::string& from, const std::string& to) {
  return std::visit(
      overloaded{
          [&](const Process::Nil&) { return p; },
          [&](const Process::Par& x) {
            return mk_par(rename_free_name(x.left, from, to), rename_free_name(x.right, from, to), p->pos);
          },
          [&](const Process::Repl& x) { return mk_repl(rename_free_name(x.body, from, to), p->pos); },
          [&](const Process::Restrict& x) {
            if (x.name == from) return p;  // shadowed
            return mk_restrict(x.name, x.ann, rename_free_name(x.body, from, to), p->pos);
          },
          [&](const Process::If& x) {
            return mk_if(rename_term(x.lhs, from, to), rename_term(x.rhs, from, to),
                         rename_free_name(x.then_p, from, to), rename_free_name(x.else_p, from, to), p->pos);
          },
          [&](const Process::Input& x) {
            return mk_input(rename_sendable(x.channel, from, to), x.binder,
                            rename_free_name(x.body, from, to), p->pos);
          },
          [&](const Process::Output& x) {
            return mk_output(rename_sendable(x.channel, from, to), rename_sendable(x.payload, from, to),
                             rename_free_name(x.body, from, to), p->pos);
          },
          [&](const Process::Select& x) {
            return mk_select(rename_sendable(x.channel, from, to), x.label,
                             rename_free_name(x.body, from, to), p->pos);
          },
          [&](const Process::Branch& x) {
            auto arms = x.arms;
            for (auto& [l, arm] : arms) arm = rename_free_name(arm, from, to);
            return mk_branch(rename_sendable(x.channel, from, to), std::move(arms), p->pos);
          },
          [&](const Process::AgentCall& x) {
            std::vector<TermPtr> args;
            for (const auto& a : x.args) args.push_back(rename_term(a, from, to));
            return mk_agent_call(x.agent, std::move(args), p->pos);
          },
      },
      p->v);
}

ProcPtr substitute(const ProcPtr& p, const Subst& s) {
  if (s.empty()) return p;
  return std::visit(
      overloaded{
          [&](const Process::Nil&) { return p; },
          [&](const Process::Par& x) {
            return mk_par(substitute(x.left, s), substitute(x.right, s), p->pos);
          },
          [&](const Process::Repl& x) { return mk_repl(substitute(x.body, s), p->pos); },
          [&](const Process::Restrict& x) {
            std::string name = x.name;
            ProcPtr body = x.body;
            if (image_idents(s).count(name)) {
              std::set<std::string> avoid = image_idents(s);
              auto ids = all_idents(body);
              avoid.insert(ids.begin(), ids.end());
              std::string fresh = fresh_ident(name, avoid);
              body = rename_free_name(body, name, fresh);
              name = fresh;
            }
            return mk_restrict(name, x.ann, substitute(body, s), p->pos);
          },
          [&](const Process::If& x) {
            return mk_if(substitute(x.lhs, s), substitute(x.rhs, s), substitute(x.then_p, s),
                         substitute(x.else_p, s), p->pos);
          },
          [&](const Process::Input& x) {
            Sendable ch = subst_sendable(x.channel, s, p->pos);
            Subst inner = s;
            inner.erase(x.binder);  // binder shadows
            std::string binder = x.binder;
            ProcPtr body = x.body;
            if (!inner.empty() && image_idents(inner).count(binder)) {
              std::set<std::string> avoid = image_idents(inner);
              auto ids = all_idents(body);
              avoid.insert(ids.begin(), ids.end());
              for (const auto& [v, t] : inner) avoid.insert(v);
              std::string nb = fresh_ident(binder, avoid);
              body = substitute(body, Subst{{binder, mk_var(nb)}});
              binder = nb;
            }
            return mk_input(ch, binder, substitute(body, inner), p->pos);
          },
          [&](const Process::Output& x) {
            return mk_output(subst_sendable(x.channel, s, p->pos), subst_sendable(x.payload, s, p->pos),
                             substitute(x.body, s), p->pos);
          },
          [&](const Process::Select& x) {
            return mk_select(subst_sendable(x.channel, s, p->pos), x.label, substitute(x.body, s), p->pos);
          },
          [&](const Process::Branch& x) {
            auto arms = x.arms;
            for (auto& [l, arm] : arms) arm = substitute(arm, s);
            return mk_branch(subst_sendable(x.channel, s, p->pos), std::move(arms), p->pos);
          },
          [&](const Process::AgentCall& x) {
            std::vector<TermPtr> args;
            args.reserve(x.args.size());
            for (const auto& a : x.args) args.push_back(substitute(a, s));
            return mk_agent_call(x.agent, std::move(args), p->pos);
          },
      },
      p->v);
}

// ---- binder uniquification ----

namespace {

struct Uniquifier {
  std::set<std::string> used;

  std::string declare(const std::string& id) {
    std::string fresh = fresh_ident(id, used);
    used.insert(fresh);
    return fresh;
  }

  ProcPtr proc(const ProcPtr& p) {
    return std::visit(
        overloaded{
            [&](const Process::Nil&) { return p; },
            [&](const Process::Par& x) { return mk_par(proc(x.left), proc(x.right), p->pos); },
            [&](const Process::Repl& x) { return mk_repl(proc(x.body), p->pos); },
            [&](const Process::Restrict& x) {
              std::string fresh = declare(x.name);
              ProcPtr body = x.body;
              if (fresh != x.name)
                body = substitute_name(body, x.name, fresh);
              return mk_restrict(fresh, x.ann, proc(body), p->pos);
            },
            [&](const Process::If& x) {
              return mk_if(x.lhs, x.rhs, proc(x.then_p), proc(x.else_p), p->pos);
            },
            [&](const Process::Input& x) {
              std::string fresh = declare(x.binder);
              ProcPtr body = x.body;
              if (fresh != x.binder) body = substitute(body, Subst{{x.binder, mk_var(fresh)}});
              return mk_input(x.channel, fresh, proc(body), p->pos);
            },
            [&](const Process::Output& x) {
              return mk_output(x.channel, x.payload, proc(x.body), p->pos);
            },
            [&](const Process::Select& x) {
              return mk_select(x.channel, x.label, proc(x.body), p->pos);
            },
            [&](const Process::Branch& x) {
              auto arms = x.arms;
              for (auto& [l, arm] : arms) arm = proc(arm);
              return mk_branch(x.channel, std::move(arms), p->pos);
            },
            [&](const Process::AgentCall&) { return p; },
        },
        p->v);
  }

  ExtPtr ext(const ExtPtr& a) {
    return std::visit(
        overloaded{
            [&](const ExtendedProcess::Plain& x) { return mk_plain(proc(x.proc), a->pos); },
            [&](const ExtendedProcess::APar& x) { return mk_apar(ext(x.left), ext(x.right), a->pos); },
            [&](const ExtendedProcess::ANuName& x) {
              std::string fresh = declare(x.name);
              ExtPtr body = x.body;
              if (fresh != x.name) body = substitute_name_ext(body, x.name, fresh);
              return mk_anu_name(fresh, x.ann, ext(body), a->pos);
            },
            [&](const ExtendedProcess::ANuVar& x) {
              std::string fresh = declare(x.var);
              ExtPtr body = x.body;
              if (fresh != x.var) body = substitute(body, Subst{{x.var, mk_var(fresh)}});
              return mk_anu_var(fresh, x.ann, ext(body), a->pos);
            },
            [&](const ExtendedProcess::ActiveSubst&) { return a; },
        },
        a->v);
  }

  static ProcPtr substitute_name(const ProcPtr& p, const std::string& from, const std::string& to);
  static ExtPtr substitute_name_ext(const ExtPtr& a, const std::string& from, const std::string& to);
};

ProcPtr Uniquifier::substitute_name(const ProcPtr& p, const std::string& from, const std::string& to) {
  auto ren_sendable = [&](const Sendable& u) {
    if (u.kind == Sendable::Kind::Name && u.id == from) return Sendable{Sendable::Kind::Name, to};
    return u;
  };
  auto ren_term = [&](const TermPtr& t, auto&& self) -> TermPtr {
    return std::visit(overloaded{
                          [&](const Term::Name& n) { return n.id == from ? mk_name(to) : t; },
                          [&](const Term::Var&) { return t; },
                          [&](const Term::App& x) {
                            std::vector<TermPtr> args;
                            for (const auto& arg : x.args) args.push_back(self(arg, self));
                            return mk_app(x.fn, std::move(args));
                          },
                      },
                      t->v);
  };
  return std::visit(
      overloaded{
          [&](const Process::Nil&) { return p; },
          [&](const Process::Par& x) {
            return mk_par(substitute_name(x.left, from, to), substitute_name(x.right, from, to),
                          p->pos);
          },
          [&](const Process::Repl& x) { return mk_repl(substitute_name(x.body, from, to), p->pos); },
          [&](const Process::Restrict& x) {
            if (x.name == from) return p;
            return mk_restrict(x.name, x.ann, substitute_name(x.body, from, to), p->pos);
          },
          [&](const Process::If& x) {
            return mk_if(ren_term(x.lhs, ren_term), ren_term(x.rhs, ren_term),
                         substitute_name(x.then_p, from, to), substitute_name(x.else_p, from, to),
                         p->pos);
          },
          [&](const Process::Input& x) {
            return mk_input(ren_sendable(x.channel), x.binder, substitute_name(x.body, from, to),
                            p->pos);
          },
          [&](const Process::Output& x) {
            return mk_output(ren_sendable(x.channel), ren_sendable(x.payload),
                             substitute_name(x.body, from, to), p->pos);
          },
          [&](const Process::Select& x) {
            return mk_select(ren_sendable(x.channel), x.label, substitute_name(x.body, from, to),
                             p->pos);
          },
          [&](const Process::Branch& x) {
            auto arms = x.arms;
            for (auto& [l, arm] : arms) arm = substitute_name(arm, from, to);
            return mk_branch(ren_sendable(x.channel), std::move(arms), p->pos);
          },
          [&](const Process::AgentCall& x) {
            std::vector<TermPtr> args;
            for (const auto& arg : x.args) args.push_back(ren_term(arg, ren_term));
            return mk_agent_call(x.agent, std::move(args), p->pos);
          },
      },
      p->v);
}

ExtPtr Uniquifier::substitute_name_ext(const ExtPtr& a, const std::string& from,
                                       const std::string& to) {
  auto ren_term = [&](const TermPtr& t, auto&& self) -> TermPtr {
    return std::visit(overloaded{
                          [&](const Term::Name& n) { return n.id == from ? mk_name(to) : t; },
                          [&](const Term::Var&) { return t; },
                          [&](const Term::App& x) {
                            std::vector<TermPtr> args;
                            for (const auto& arg : x.args) args.push_back(self(arg, self));
                            return mk_app(x.fn, std::move(args));
                          },
                      },
                      t->v);
  };
  return std::visit(
      overloaded{
          [&](const ExtendedProcess::Plain& x) {
            return mk_plain(Uniquifier::substitute_name(x.proc, from, to), a->pos);
          },
          [&](const ExtendedProcess::APar& x) {
            return mk_apar(substitute_name_ext(x.left, from, to),
                           substitute_name_ext(x.right, from, to), a->pos);
          },
          [&](const ExtendedProcess::ANuName& x) {
            if (x.name == from) return a;
            return mk_anu_name(x.name, x.ann, substitute_name_ext(x.body, from, to), a->pos);
          },
          [&](const ExtendedProcess::ANuVar& x) {
            return mk_anu_var(x.var, x.ann, substitute_name_ext(x.body, from, to), a->pos);
          },
          [&](const ExtendedProcess::ActiveSubst& x) {
            return mk_active_subst(x.var, ren_term(x.term, ren_term), a->pos);
          },
      },
      a->v);
}

}  // namespace

ProcPtr uniquify_binders(const ProcPtr& p) {
  Uniquifier u;
  FreeIds f = free_identifiers(p);
  u.used = f.names;
  u.used.insert(f.vars.begin(), f.vars.end());
  return u.proc(p);
}

ExtPtr uniquify_binders(const ExtPtr& a) {
  Uniquifier u;
  FreeIds f = free_identifiers(a);
  u.used = f.names;
  u.used.insert(f.vars.begin(), f.vars.end());
  return u.ext(a);
}

ExtPtr substitute(const ExtPtr& a, const Subst& s) {
  if (s.empty()) return a;
  return std::visit(
      overloaded{
          [&](const ExtendedProcess::Plain& x) { return mk_plain(substitute(x.proc, s), a->pos); },
          [&](const ExtendedProcess::APar& x) {
            return mk_apar(substitute(x.left, s), substitute(x.right, s), a->pos);
          },
          [&](const ExtendedProcess::ANuName& x) {
            return mk_anu_name(x.name, x.ann, substitute(x.body, s), a->pos);
          },
          [&](const ExtendedProcess::ANuVar& x) {
            Subst inner = s;
            inner.erase(x.var);
            return mk_anu_var(x.var, x.ann, substitute(x.body, inner), a->pos);
          },
          [&](const ExtendedProcess::ActiveSubst& x) {
            return mk_active_subst(x.var, substitute(x.term, s), a->pos);
          },
      },
      a->v);
}

}  // namespace sessio

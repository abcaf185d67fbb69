#include "sessio/typecheck.hpp"

#include <map>
#include <sstream>

namespace sessio {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool is_lin_resource(const PayloadPtr& t) {
  return std::visit(overloaded{
                        [](const PayloadType::Base&) { return false; },
                        [](const PayloadType::Endpoint& e) {
                          auto q = try_qualifier_of(e.type);
                          return !q || *q == Qualifier::Lin;
                        },
                        [](const PayloadType::Session& s) {
                          auto q1 = try_qualifier_of(s.first);
                          auto q2 = try_qualifier_of(s.second);
                          return !q1 || !q2 || *q1 == Qualifier::Lin || *q2 == Qualifier::Lin;
                        },
                    },
                    t->v);
}

}  // namespace

std::string Verdict::to_line(const std::string& filename) const {
  if (accepted) return "OK";
  std::ostringstream os;
  os << "FAIL " << rule << " at " << filename << ":" << pos.line << ":" << pos.col << ": " << reason;
  return os.str();
}

// ---------------------------------------------------------------------------
// strict term typing
// ---------------------------------------------------------------------------

std::optional<PayloadPtr> type_term(const TypeContext& g, const TermPtr& m, std::string* error,
                                    const CheckConfig& cfg) {
  auto fail = [&](const std::string& why) -> std::optional<PayloadPtr> {
    if (error) *error = why;
    return std::nullopt;
  };
  return std::visit(
      overloaded{
          [&](const Term::Name& n) -> std::optional<PayloadPtr> {
            const PayloadPtr* t = g.find(n.id);
            if (!t) return fail("unbound name " + n.id);
            if (!context_un(g.without(n.id), cfg.type_opts, /*discharge_terminated=*/false))
              return fail("residual context for " + n.id + " is not unrestricted");
            return *t;
          },
          [&](const Term::Var& v) -> std::optional<PayloadPtr> {
            const PayloadPtr* t = g.find(v.id);
            if (!t) return fail("unbound variable " + v.id);
            if (!context_un(g.without(v.id), cfg.type_opts, /*discharge_terminated=*/false))
              return fail("residual context for " + v.id + " is not unrestricted");
            return *t;
          },
          [&](const Term::App& a) -> std::optional<PayloadPtr> {
            if (!g.funcs()) return fail("no function symbols in scope");
            auto it = g.funcs()->find(a.fn);
            if (it == g.funcs()->end()) return fail("unknown function symbol " + a.fn);
            const FuncSig& sig = it->second;
            if (sig.params.size() != a.args.size())
              return fail("function " + a.fn + " expects " + std::to_string(sig.params.size()) +
                          " arguments");
            for (size_t i = 0; i < a.args.size(); ++i) {
              auto at = type_term(g, a.args[i], error, cfg);
              if (!at) return std::nullopt;
              if (!payload_equiv(*at, sig.params[i], cfg))
                return fail("argument " + std::to_string(i + 1) + " of " + a.fn + " has type " +
                            to_string(*at) + ", expected " + to_string(sig.params[i]));
            }
            return sig.result;
          },
      },
      m->v);
}

// ---------------------------------------------------------------------------
// the checker
// ---------------------------------------------------------------------------

struct Typechecker::Impl {
  const Program& prog;
  CheckConfig cfg;
  // memo keys use node addresses, so every tree the memo has seen must stay
  // alive as long as the memo does
  std::map<std::string, bool> memo;
  std::vector<ExtPtr> retained_ext;
  std::vector<ProcPtr> retained_proc;
  int depth = 0;

  bool have_failure = false;
  int failure_depth = -1;
  std::string fail_rule;
  Pos fail_pos;
  std::string fail_reason;

  Impl(const Program& p, CheckConfig c) : prog(p), cfg(c) {}

  void reset() {
    memo.clear();
    retained_ext.clear();
    retained_proc.clear();
    have_failure = false;
  }

  bool fail(const std::string& rule, Pos pos, const std::string& reason) {
    if (!have_failure || depth > failure_depth) {
      have_failure = true;
      failure_depth = depth;
      fail_rule = rule;
      fail_pos = pos;
      fail_reason = reason;
    }
    return false;
  }

  Verdict verdict(bool ok) const {
    Verdict v;
    v.accepted = ok;
    v.mode = cfg.mode;
    if (!ok) {
      v.rule = have_failure ? fail_rule : "Program";
      v.pos = have_failure ? fail_pos : Pos{};
      v.reason = have_failure ? fail_reason : "no typing derivation found";
    }
    return v;
  }

  TypeContext base_context() const {
    auto funcs = std::make_shared<std::map<std::string, FuncSig>>();
    for (const auto& [n, sig] : prog.funcs) (*funcs)[n] = sig;
    return TypeContext(funcs);
  }

  // term typing as used inside process rules: the strict unrestricted
  // residual of Name/Variable is absorbed by an implicit context split, so
  // only the identifiers a term mentions constrain it
  std::optional<PayloadPtr> term_in(const TypeContext& g, const TermPtr& m, std::string* err) {
    return std::visit(
        overloaded{
            [&](const Term::Name& n) -> std::optional<PayloadPtr> {
              const PayloadPtr* t = g.find(n.id);
              if (!t && err) *err = "unbound name " + n.id;
              return t ? std::optional(*t) : std::nullopt;
            },
            [&](const Term::Var& v) -> std::optional<PayloadPtr> {
              const PayloadPtr* t = g.find(v.id);
              if (!t && err) *err = "unbound variable " + v.id;
              return t ? std::optional(*t) : std::nullopt;
            },
            [&](const Term::App& a) -> std::optional<PayloadPtr> {
              auto it = g.funcs() ? g.funcs()->find(a.fn) : std::map<std::string, FuncSig>::const_iterator{};
              if (!g.funcs() || it == g.funcs()->end()) {
                if (err) *err = "unknown function symbol " + a.fn;
                return std::nullopt;
              }
              const FuncSig& sig = it->second;
              if (sig.params.size() != a.args.size()) {
                if (err) *err = "function " + a.fn + " arity mismatch";
                return std::nullopt;
              }
              for (size_t i = 0; i < a.args.size(); ++i) {
                auto at = term_in(g, a.args[i], err);
                if (!at) return std::nullopt;
                if (!payload_equiv(*at, sig.params[i], cfg)) {
                  if (err)
                    *err = "argument " + std::to_string(i + 1) + " of " + a.fn + " has type " +
                           to_string(*at) + ", expected " + to_string(sig.params[i]);
                  return std::nullopt;
                }
              }
              return sig.result;
            },
        },
        m->v);
  }

  // transitions of an endpoint type under the selected discipline
  std::vector<std::pair<TypeLabel, TypePtr>> steps_of(const TypePtr& t) {
    if (cfg.mode == CheckMode::Plain) return type_step(t, cfg.type_opts);
    std::vector<std::pair<TypeLabel, TypePtr>> out;
    for (auto& [lab, repr] : quotient_step(t, cfg.type_opts)) out.push_back({lab, repr.type});
    return out;
  }

  struct ChannelUse {
    TypePtr type;
    bool unrestricted;
  };

  std::optional<ChannelUse> channel_type(const TypeContext& g, const Sendable& u,
                                         const std::string& rule, Pos pos) {
    if (u.kind == Sendable::Kind::Const) {
      fail(rule, pos, "constant " + u.id + " used as a channel");
      return std::nullopt;
    }
    const PayloadPtr* t = g.find(u.id);
    if (!t) {
      fail(rule, pos, "unbound channel " + u.id);
      return std::nullopt;
    }
    const auto* ep = std::get_if<PayloadType::Endpoint>(&(*t)->v);
    if (!ep) {
      fail(rule, pos, "channel " + u.id + " does not have an endpoint type here");
      return std::nullopt;
    }
    auto q = try_qualifier_of(ep->type);
    return ChannelUse{ep->type, q && *q == Qualifier::Un};
  }

  // advance a channel's endpoint type after a communication step
  std::optional<TypeContext> advance_channel(const TypeContext& g, const std::string& id,
                                             bool unrestricted, const TypePtr& next,
                                             const std::string& rule, Pos pos) {
    if (unrestricted) {
      auto updated = ctx_update(g, id, mk_endpoint(next), cfg);
      if (const auto* e = std::get_if<UpdateError>(&updated)) {
        fail(rule, pos, e->reason);
        return std::nullopt;
      }
      return std::get<TypeContext>(updated);
    }
    auto updated = ctx_update(g.without(id), id, mk_endpoint(next), cfg);
    return std::get<TypeContext>(updated);
  }

  std::string memo_key(const void* node, const TypeContext& g, char tag) {
    std::ostringstream os;
    os << tag << node << '|' << g.fingerprint();
    return os.str();
  }

  bool proc(const TypeContext& g, const ProcPtr& p) {
    std::string key = memo_key(p.get(), g, 'p');
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    ++depth;
    bool ok = proc_uncached(g, p);
    --depth;
    memo[key] = ok;
    return ok;
  }

  bool proc_uncached(const TypeContext& g, const ProcPtr& p) {
    return std::visit(
        overloaded{
            [&](const Process::Nil&) {
              if (context_un(g, cfg.type_opts, /*discharge_terminated=*/true)) return true;
              return fail("Nil", p->pos, "leftover linear resources: " + describe_lin(g));
            },
            [&](const Process::Par& x) {
              for (auto& [l, r] : ctx_split(g))
                if (proc(l, x.left) && proc(r, x.right)) return true;
              return fail("Par", p->pos, "no context split types both components");
            },
            [&](const Process::Repl& x) {
              if (!context_un(g, cfg.type_opts, /*discharge_terminated=*/true))
                return fail("Repl", p->pos, "replicated process holds linear resources");
              return proc(g, x.body);
            },
            [&](const Process::Restrict& x) {
              if (!type_closed(x.ann.first) || !type_closed(x.ann.second) ||
                  !is_guarded(x.ann.first) || !is_guarded(x.ann.second))
                return fail("Res", p->pos, "restriction annotation must be closed and guarded");
              std::string why;
              if (!session_balanced(x.ann, cfg, &why))
                return fail("Res", p->pos, "annotation for " + x.name + " is not balanced: " + why);
              return proc(g.with(x.name, mk_session(x.ann.first, x.ann.second)), x.body);
            },
            [&](const Process::If& x) {
              std::string err;
              auto lt = term_in(g, x.lhs, &err);
              if (!lt) return fail("If", p->pos, err);
              auto rt = term_in(g, x.rhs, &err);
              if (!rt) return fail("If", p->pos, err);
              if (!payload_equiv(*lt, *rt, cfg))
                return fail("If", p->pos, "compared terms have different types: " + to_string(*lt) +
                                              " vs " + to_string(*rt));
              return proc(g, x.then_p) && proc(g, x.else_p);
            },
            [&](const Process::Input& x) {
              auto ch = channel_type(g, x.channel, "Input", p->pos);
              if (!ch) return false;
              for (auto& [lab, next] : steps_of(ch->type)) {
                if (lab.kind != TypeLabel::Kind::In) continue;
                auto g2 = advance_channel(g, x.channel.id, ch->unrestricted, next, "Input", p->pos);
                if (!g2) return false;
                return proc(g2->with(x.binder, lab.payload), x.body);
              }
              return fail("Input", p->pos,
                          "channel " + x.channel.id + " of type " + to_string(ch->type) +
                              " cannot receive here");
            },
            [&](const Process::Output& x) {
              auto ch = channel_type(g, x.channel, "Output", p->pos);
              if (!ch) return false;
              for (auto& [lab, next] : steps_of(ch->type)) {
                if (lab.kind != TypeLabel::Kind::Out) continue;
                // the payload is typed in its own part of the context and a
                // linear payload is consumed by the send
                if (x.payload.kind != Sendable::Kind::Const && x.payload.id == x.channel.id)
                  return fail("Output", p->pos, "cannot send a channel over itself");
                std::string err;
                auto pt = term_in(g, to_term(x.payload), &err);
                if (!pt) return fail("Output", p->pos, err);
                if (!payload_equiv(*pt, lab.payload, cfg))
                  return fail("Output", p->pos,
                              "payload " + x.payload.id + " has type " + to_string(*pt) +
                                  ", channel expects " + to_string(lab.payload));
                TypeContext g1 = g;
                if (x.payload.kind != Sendable::Kind::Const && is_lin_resource(*pt))
                  g1 = g.without(x.payload.id);
                auto g2 = advance_channel(g1, x.channel.id, ch->unrestricted, next, "Output", p->pos);
                if (!g2) return false;
                return proc(*g2, x.body);
              }
              return fail("Output", p->pos,
                          "channel " + x.channel.id + " of type " + to_string(ch->type) +
                              " cannot send here");
            },
            [&](const Process::Select& x) {
              auto ch = channel_type(g, x.channel, "Select", p->pos);
              if (!ch) return false;
              for (auto& [lab, next] : steps_of(ch->type)) {
                if (lab.kind != TypeLabel::Kind::Sel || lab.label != x.label) continue;
                return proc(g.replaced(x.channel.id, mk_endpoint(next)), x.body);
              }
              return fail("Select", p->pos,
                          "channel " + x.channel.id + " of type " + to_string(ch->type) +
                              " offers no selection " + x.label);
            },
            [&](const Process::Branch& x) {
              auto ch = channel_type(g, x.channel, "Branch", p->pos);
              if (!ch) return false;
              auto steps = steps_of(ch->type);
              for (const auto& [label, arm] : x.arms) {
                bool found = false;
                for (auto& [lab, next] : steps) {
                  if (lab.kind != TypeLabel::Kind::Bra || lab.label != label) continue;
                  found = true;
                  if (!proc(g.replaced(x.channel.id, mk_endpoint(next)), arm)) return false;
                  break;
                }
                if (!found)
                  return fail("Branch", p->pos,
                              "channel " + x.channel.id + " of type " + to_string(ch->type) +
                                  " offers no branch " + label);
              }
              return true;
            },
            [&](const Process::AgentCall& x) { return agent_call(g, x, p->pos); },
        },
        p->v);
  }

  bool agent_call(const TypeContext& g, const Process::AgentCall& x, Pos pos) {
    const AgentDef* def = prog.find_agent(x.agent);
    if (!def) return fail("Agent", pos, "unbound agent name " + x.agent);
    if (def->params.size() != x.args.size())
      return fail("Agent", pos, "agent " + x.agent + " arity mismatch");
    TypeContext rest = g;
    for (size_t i = 0; i < x.args.size(); ++i) {
      std::string err;
      auto at = term_in(rest, x.args[i], &err);
      if (!at) return fail("Agent", pos, "argument " + std::to_string(i + 1) + ": " + err);
      if (!payload_equiv(*at, def->params[i].second, cfg))
        return fail("Agent", pos, "argument " + std::to_string(i + 1) + " of " + x.agent +
                                      " has type " + to_string(*at) + ", expected " +
                                      to_string(def->params[i].second));
      // linear arguments move into the callee
      FreeIds used = free_identifiers(x.args[i]);
      std::set<std::string> ids = used.names;
      ids.insert(used.vars.begin(), used.vars.end());
      for (const auto& id : ids) {
        const PayloadPtr* t = rest.find(id);
        if (t && is_lin_resource(*t)) rest = rest.without(id);
      }
    }
    if (!context_un(rest, cfg.type_opts, /*discharge_terminated=*/true))
      return fail("Agent", pos,
                  "call to " + x.agent + " leaves linear resources: " + describe_lin(rest));
    return true;
  }

  std::string describe_lin(const TypeContext& g) {
    std::string out;
    for (const auto& [n, t] : g.entries()) {
      bool lin = is_lin_resource(t);
      if (lin && std::holds_alternative<PayloadType::Endpoint>(t->v) &&
          terminated(std::get<PayloadType::Endpoint>(t->v).type, cfg.type_opts))
        lin = false;
      if (lin) {
        if (!out.empty()) out += ", ";
        out += n + ": " + to_string(t);
      }
    }
    return out.empty() ? "(none)" : out;
  }

  bool ext(const TypeContext& g, const ExtPtr& a) {
    std::string key = memo_key(a.get(), g, 'e');
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    ++depth;
    bool ok = ext_uncached(g, a);
    --depth;
    memo[key] = ok;
    return ok;
  }

  bool ext_uncached(const TypeContext& g, const ExtPtr& a) {
    return std::visit(
        overloaded{
            [&](const ExtendedProcess::Plain& x) { return proc(g, x.proc); },
            [&](const ExtendedProcess::APar& x) {
              for (auto& [l, r] : ctx_split(g))
                if (ext(l, x.left) && ext(r, x.right)) return true;
              return fail("Par", a->pos, "no context split types both components");
            },
            [&](const ExtendedProcess::ANuName& x) {
              if (!type_closed(x.ann.first) || !type_closed(x.ann.second) ||
                  !is_guarded(x.ann.first) || !is_guarded(x.ann.second))
                return fail("Name-Res", a->pos, "restriction annotation must be closed and guarded");
              std::string why;
              if (!session_balanced(x.ann, cfg, &why))
                return fail("Name-Res", a->pos,
                            "annotation for " + x.name + " is not balanced: " + why);
              return ext(g.with(x.name, mk_session(x.ann.first, x.ann.second)), x.body);
            },
            [&](const ExtendedProcess::ANuVar& x) {
              return ext(g.with(x.var, x.ann), x.body);
            },
            [&](const ExtendedProcess::ActiveSubst& x) {
              const PayloadPtr* xt = g.find(x.var);
              if (!xt) return fail("Sub", a->pos, "unbound substitution target " + x.var);
              std::string err;
              auto mt = term_in(g, x.term, &err);
              if (!mt) return fail("Sub", a->pos, err);
              if (!payload_equiv(*xt, *mt, cfg))
                return fail("Sub", a->pos, "substitution for " + x.var + " has type " +
                                               to_string(*mt) + ", expected " + to_string(*xt));
              TypeContext rest = g.without(x.var);
              FreeIds used = free_identifiers(x.term);
              std::set<std::string> ids = used.names;
              ids.insert(used.vars.begin(), used.vars.end());
              for (const auto& id : ids) {
                const PayloadPtr* t = rest.find(id);
                if (t && is_lin_resource(*t)) rest = rest.without(id);
              }
              if (!context_un(rest, cfg.type_opts, /*discharge_terminated=*/true))
                return fail("Sub", a->pos, "substitution holds linear resources it does not use");
              return true;
            },
        },
        a->v);
  }

  Verdict check_agents_and_main() {
    reset();
    for (const auto& def : prog.agents) {
      TypeContext g = base_context();
      for (const auto& [pn, pt] : def.params) {
        if (g.contains(pn)) {
          Verdict v;
          v.accepted = false;
          v.mode = cfg.mode;
          v.rule = "Agent";
          v.pos = def.pos;
          v.reason = "agent " + def.name + ": duplicate parameter " + pn;
          return v;
        }
        g = g.with(pn, pt);
      }
      have_failure = false;
      retained_ext.push_back(uniquify_binders(def.body));
      if (!ext(g, retained_ext.back())) {
        Verdict v = verdict(false);
        v.reason = "agent " + def.name + ": " + v.reason;
        return v;
      }
    }
    have_failure = false;
    retained_ext.push_back(uniquify_binders(prog.main));
    bool ok = ext(base_context(), retained_ext.back());
    return verdict(ok);
  }
};

Typechecker::Typechecker(const Program& prog, CheckConfig cfg)
    : impl_(std::make_unique<Impl>(prog, cfg)) {}
Typechecker::~Typechecker() = default;

Verdict Typechecker::check_program() { return impl_->check_agents_and_main(); }

Verdict Typechecker::check_extended(const TypeContext& g, const ExtPtr& a) {
  impl_->reset();
  impl_->retained_ext.push_back(uniquify_binders(a));
  bool ok = impl_->ext(g, impl_->retained_ext.back());
  return impl_->verdict(ok);
}

Verdict Typechecker::check_process(const TypeContext& g, const ProcPtr& p) {
  impl_->reset();
  impl_->retained_proc.push_back(uniquify_binders(p));
  bool ok = impl_->proc(g, impl_->retained_proc.back());
  return impl_->verdict(ok);
}

TypeContext Typechecker::base_context() const { return impl_->base_context(); }

Verdict check_program(const Program& prog, const CheckConfig& cfg) {
  Typechecker tc(prog, cfg);
  return tc.check_program();
}

}  // namespace sessio

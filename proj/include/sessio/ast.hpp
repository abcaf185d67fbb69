#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sessio/types.hpp"

namespace sessio {

struct Pos {
  int line = 0;
  int col = 0;
};

// ---- terms: M ::= n | x | f(M1,...,Mk) ----

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
  struct Name {
    std::string id;
  };
  struct Var {
    std::string id;
  };
  struct App {
    std::string fn;
    std::vector<TermPtr> args;
  };
  std::variant<Name, Var, App> v;
};

TermPtr mk_name(std::string id);
TermPtr mk_var(std::string id);
TermPtr mk_app(std::string fn, std::vector<TermPtr> args = {});

bool term_equal(const TermPtr& a, const TermPtr& b);
std::string to_string(const TermPtr& t);

// ---- sendables: u ::= n | x | f0 (only simple data crosses a channel) ----

struct Sendable {
  enum class Kind { Name, Var, Const };
  Kind kind = Kind::Name;
  std::string id;

  bool operator==(const Sendable&) const = default;
};

TermPtr to_term(const Sendable& u);
std::optional<Sendable> term_to_sendable(const TermPtr& t);

// ---- processes ----

struct Process;
using ProcPtr = std::shared_ptr<const Process>;

struct Process {
  struct Nil {};
  struct Par {
    ProcPtr left, right;
  };
  struct Repl {
    ProcPtr body;
  };
  struct Restrict {
    std::string name;
    SessionType ann;
    ProcPtr body;
  };
  struct If {
    TermPtr lhs, rhs;
    ProcPtr then_p, else_p;
  };
  struct Input {
    Sendable channel;
    std::string binder;
    ProcPtr body;
  };
  struct Output {
    Sendable channel;
    Sendable payload;
    ProcPtr body;
  };
  struct Select {
    Sendable channel;
    std::string label;
    ProcPtr body;
  };
  struct Branch {
    Sendable channel;
    std::vector<std::pair<std::string, ProcPtr>> arms;  // labels distinct, non-empty
  };
  struct AgentCall {
    std::string agent;
    std::vector<TermPtr> args;
  };

  std::variant<Nil, Par, Repl, Restrict, If, Input, Output, Select, Branch, AgentCall> v;
  Pos pos;
};

ProcPtr mk_nil(Pos pos = {});
ProcPtr mk_par(ProcPtr l, ProcPtr r, Pos pos = {});
ProcPtr mk_repl(ProcPtr body, Pos pos = {});
ProcPtr mk_restrict(std::string name, SessionType ann, ProcPtr body, Pos pos = {});
ProcPtr mk_if(TermPtr l, TermPtr r, ProcPtr t, ProcPtr e, Pos pos = {});
ProcPtr mk_input(Sendable ch, std::string binder, ProcPtr body, Pos pos = {});
ProcPtr mk_output(Sendable ch, Sendable payload, ProcPtr body, Pos pos = {});
ProcPtr mk_select(Sendable ch, std::string label, ProcPtr body, Pos pos = {});
ProcPtr mk_branch(Sendable ch, std::vector<std::pair<std::string, ProcPtr>> arms, Pos pos = {});
ProcPtr mk_agent_call(std::string agent, std::vector<TermPtr> args, Pos pos = {});

bool proc_equal(const ProcPtr& a, const ProcPtr& b);

// ---- extended processes ----

struct ExtendedProcess;
using ExtPtr = std::shared_ptr<const ExtendedProcess>;

struct ExtendedProcess {
  struct Plain {
    ProcPtr proc;
  };
  struct APar {
    ExtPtr left, right;
  };
  struct ANuName {
    std::string name;
    SessionType ann;
    ExtPtr body;
  };
  struct ANuVar {
    std::string var;
    PayloadPtr ann;
    ExtPtr body;
  };
  // floating substitution {M/x}: instantiates x throughout its scope
  struct ActiveSubst {
    std::string var;
    TermPtr term;
  };

  std::variant<Plain, APar, ANuName, ANuVar, ActiveSubst> v;
  Pos pos;
};

ExtPtr mk_plain(ProcPtr p, Pos pos = {});
ExtPtr mk_apar(ExtPtr l, ExtPtr r, Pos pos = {});
ExtPtr mk_anu_name(std::string name, SessionType ann, ExtPtr body, Pos pos = {});
ExtPtr mk_anu_var(std::string var, PayloadPtr ann, ExtPtr body, Pos pos = {});
ExtPtr mk_active_subst(std::string var, TermPtr term, Pos pos = {});

bool ext_equal(const ExtPtr& a, const ExtPtr& b);

// ---- programs ----

struct FuncSig {
  std::vector<PayloadPtr> params;
  PayloadPtr result;
};

struct AgentDef {
  std::string name;
  std::vector<std::pair<std::string, PayloadPtr>> params;
  ExtPtr body;
  Pos pos;
};

struct Program {
  std::string filename;
  std::vector<std::string> base_types;
  std::vector<std::pair<std::string, FuncSig>> funcs;    // declaration order
  std::vector<std::pair<std::string, TypePtr>> aliases;  // stored expanded
  std::vector<AgentDef> agents;
  ExtPtr main;

  const FuncSig* find_func(const std::string& name) const;
  const AgentDef* find_agent(const std::string& name) const;
  bool has_base(const std::string& name) const;
};

// ---- free identifiers ----

struct FreeIds {
  std::set<std::string> names;
  std::set<std::string> vars;
};

FreeIds free_identifiers(const TermPtr& t);
FreeIds free_identifiers(const ProcPtr& p);
FreeIds free_identifiers(const ExtPtr& a);

// ---- substitution ----

struct IllFormedSendError : std::runtime_error {
  Pos pos;
  IllFormedSendError(const std::string& msg, Pos p) : std::runtime_error(msg), pos(p) {}
};

using Subst = std::map<std::string, TermPtr>;  // variable → term

TermPtr substitute(const TermPtr& t, const Subst& s);
/// Capture-avoiding: input binders and restricted names are renamed when a
/// substituted term would be captured. Placing a compound term in a channel
/// or payload position raises IllFormedSendError.
ProcPtr substitute(const ProcPtr& p, const Subst& s);
ExtPtr substitute(const ExtPtr& a, const Subst& s);

/// Fresh identifier not in `avoid`, derived from `base`.
std::string fresh_ident(const std::string& base, const std::set<std::string>& avoid);

/// Renames bound identifiers so every binder is distinct from all other
/// binders and from every free identifier.
ProcPtr uniquify_binders(const ProcPtr& p);
ExtPtr uniquify_binders(const ExtPtr& a);

}  // namespace sessio

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sessio/ast.hpp"

namespace sessio {

/// Internal synchronization details, carried on every reduction. Choice
/// records the selected label so contexts can be advanced along the run;
/// Match reductions synchronize on no channel.
struct TauInfo {
  enum class Kind { Comm, Choice, Match };
  Kind kind = Kind::Match;
  std::string channel;
  std::string label;
};
std::string to_string(const TauInfo& t);

/// α ::= c<+l | c>l | a(x) | a!<u> | tau
struct ProcAction {
  enum class Kind { Sel, Bra, In, Out, Tau };
  Kind kind = Kind::Tau;
  std::string channel;
  std::string label;   // Sel/Bra
  std::string binder;  // In: symbolic placeholder
  Sendable payload;    // Out
  TauInfo tau;         // Tau
};
std::string to_string(const ProcAction& a);

struct RuntimeError {
  enum class Kind { LabelMismatch, IllFormedSend, UnboundAgent };
  Kind kind = Kind::LabelMismatch;
  std::string channel;                // LabelMismatch
  std::vector<std::string> offered;   // LabelMismatch
  std::string selected;               // LabelMismatch
  std::string detail;
};
std::string to_string(const RuntimeError& e);

struct RestrictionInfo {
  std::string name;
  SessionType ann;  // current session annotation; advanced along a run
};
struct VarRestrictionInfo {
  std::string var;
  PayloadPtr ann;
};

/// Structural-congruence normal form: restrictions hoisted and made
/// distinct, substitutions applied, parallel flattened with inert threads
/// dropped, threads in a canonical order. Replication stays folded.
struct Configuration {
  std::vector<RestrictionInfo> names;
  std::vector<VarRestrictionInfo> vars;
  std::vector<std::pair<std::string, TermPtr>> substs;
  std::vector<ProcPtr> threads;  // prefix-headed processes
  int repl_budget_left = 0;

  bool restricted(const std::string& name) const;
};

ExtPtr to_extended(const Configuration& c);
std::string to_string(const Configuration& c);

struct ExecOptions {
  int repl_budget = 32;     // replication copies materialized per run
  int expand_budget = 256;  // agent-call head expansions per normalization
  // harness sensitivity self-test: a synchronizing choice takes the wrong
  // arm instead of the selected one
  bool mutate_select_wrong_arm = false;
};

class Executor {
 public:
  Executor(const Program& prog, ExecOptions opts = {});

  /// Throws IllFormedSendError when applying a substitution would place a
  /// compound term in channel position; throws UnboundAgentError for calls
  /// without definitions.
  Configuration normalize(const ExtPtr& a) const;

  struct Step {
    TauInfo tau;
    Configuration next;
  };

  /// All single-step internal reductions, or the communication error the
  /// configuration has already committed to.
  std::variant<std::vector<Step>, RuntimeError> reductions(const Configuration& c) const;

  /// The labelled transition system: every reduction as a tau plus the
  /// externally visible actions of unrestricted channels.
  std::vector<std::pair<ProcAction, Configuration>> transitions(const Configuration& c) const;

  struct RunResult {
    enum class Outcome { Terminated, Budget, Error };
    Outcome outcome = Outcome::Terminated;
    std::optional<RuntimeError> error;
    std::vector<std::pair<TauInfo, Configuration>> trace;
    Configuration final_config;
  };

  /// Deterministic for a given seed: reductions are enumerated in a stable
  /// order and chosen uniformly.
  RunResult run(const Configuration& start, int max_steps, uint64_t seed) const;
  RunResult run_program(int max_steps, uint64_t seed) const;

  const Program& program() const { return prog_; }
  const ExecOptions& options() const { return opts_; }

 private:
  const Program& prog_;
  ExecOptions opts_;
};

struct UnboundAgentError : std::runtime_error {
  std::string agent;
  explicit UnboundAgentError(const std::string& name)
      : std::runtime_error("unbound agent " + name), agent(name) {}
};

/// One line per step: `<step#> TAU <kind> <channel?> :: <configuration>`.
std::string trace_line(int step, const TauInfo& tau, const Configuration& c);

}  // namespace sessio

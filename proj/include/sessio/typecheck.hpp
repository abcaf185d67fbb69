#pragma once

#include <memory>
#include <optional>
#include <string>

#include "sessio/ast.hpp"
#include "sessio/context.hpp"

namespace sessio {

struct Verdict {
  bool accepted = false;
  CheckMode mode = CheckMode::Plain;
  std::string rule;  // the rule whose premises could not be met
  Pos pos;
  std::string reason;

  /// `OK` or `FAIL <rule> at <file>:<line>:<col>: <reason>`
  std::string to_line(const std::string& filename) const;
};

/// Strict term typing: Name/Variable demand an unrestricted residual
/// context; applications check arguments against declared parameter types.
std::optional<PayloadPtr> type_term(const TypeContext& g, const TermPtr& m,
                                    std::string* error = nullptr,
                                    const CheckConfig& cfg = {});

class Typechecker {
 public:
  Typechecker(const Program& prog, CheckConfig cfg = {});
  ~Typechecker();

  Typechecker(const Typechecker&) = delete;
  Typechecker& operator=(const Typechecker&) = delete;

  /// Checks every agent body against its declared signature, then main.
  Verdict check_program();

  /// Checks an extended process in a given context (binders are made
  /// distinct first). Used directly by the fidelity harness.
  Verdict check_extended(const TypeContext& g, const ExtPtr& a);
  Verdict check_process(const TypeContext& g, const ProcPtr& p);

  /// Function symbols only.
  TypeContext base_context() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Verdict check_program(const Program& prog, const CheckConfig& cfg = {});

}  // namespace sessio

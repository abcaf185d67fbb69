#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sessio/ast.hpp"
#include "sessio/bisim.hpp"
#include "sessio/types.hpp"

namespace sessio {

enum class CheckMode { Plain, Quotient };

struct CheckConfig {
  CheckMode mode = CheckMode::Plain;
  TypeOptions type_opts;
  BisimBudget bisim_budget;
};

/// Typing context: identifiers bound to base, endpoint, or session types.
/// Function symbols live in a shared table and are unrestricted.
class TypeContext {
 public:
  TypeContext() = default;
  explicit TypeContext(std::shared_ptr<const std::map<std::string, FuncSig>> funcs)
      : funcs_(std::move(funcs)) {}

  const std::vector<std::pair<std::string, PayloadPtr>>& entries() const { return entries_; }
  const std::map<std::string, FuncSig>* funcs() const { return funcs_ ? funcs_.get() : nullptr; }

  const PayloadPtr* find(const std::string& id) const;
  bool contains(const std::string& id) const { return find(id) != nullptr; }

  /// Same function table, no entries.
  TypeContext empty_like() const;

  /// Adds a fresh binding; the identifier must not already be bound.
  TypeContext with(const std::string& id, PayloadPtr t) const;
  TypeContext replaced(const std::string& id, PayloadPtr t) const;
  TypeContext without(const std::string& id) const;

  std::string fingerprint() const;

 private:
  std::vector<std::pair<std::string, PayloadPtr>> entries_;
  std::shared_ptr<const std::map<std::string, FuncSig>> funcs_;
};

/// un(Γ): every endpoint and session entry is un-qualified. Entries whose
/// protocol is finished (no remaining transitions) also pass when
/// discharge_terminated is set; completed lin protocols are droppable.
bool context_un(const TypeContext& g, const TypeOptions& opts, bool discharge_terminated);

/// All two-way splits: un entries copy to both sides, lin endpoints go to
/// one side, lin session pairs go whole to either side or split into their
/// endpoints either way around. Session pairs with mixed qualifiers have no
/// split at all.
std::vector<std::pair<TypeContext, TypeContext>> ctx_split(const TypeContext& g);

/// Γ + (id : T). Fresh identifiers bind; an existing un endpoint requires
/// the same type again (mode-aware equality); an existing lin endpoint is
/// replaced by the new type.
struct UpdateError {
  std::string reason;
};
std::variant<TypeContext, UpdateError> ctx_update(const TypeContext& g, const std::string& id,
                                                  const PayloadPtr& t, const CheckConfig& cfg);

/// Every session entry is a pair of duals: structurally in plain mode, up to
/// bisimilarity in quotient mode (an undecided equivalence counts as not
/// balanced).
bool check_balanced(const TypeContext& g, const CheckConfig& cfg, std::string* reason = nullptr);
bool session_balanced(const SessionType& s, const CheckConfig& cfg, std::string* reason = nullptr);

/// Mode-aware payload equality: structural in plain mode, up to
/// bisimilarity in quotient mode.
bool payload_equiv(const PayloadPtr& a, const PayloadPtr& b, const CheckConfig& cfg);
bool type_equiv(const TypePtr& a, const TypePtr& b, const CheckConfig& cfg);

}  // namespace sessio

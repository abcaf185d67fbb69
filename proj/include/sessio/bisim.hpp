#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sessio/types.hpp"

namespace sessio {

struct BisimBudget {
  int max_pairs = 10000;   // distinct pairs explored before giving up
  int max_seq_depth = 64;  // deepest ';' nesting tolerated in visited types
};

/// Three-valued verdict. Bisimilar/NotBisimilar answers are definitive; the
/// bounded search reports Unknown instead of guessing.
struct BisimResult {
  enum class Verdict { Bisimilar, NotBisimilar, Unknown };
  enum class FailClause { QualifierMismatch, MissingTransition };

  Verdict verdict = Verdict::Unknown;

  // Bisimilar: every pair the successful run relied on
  std::vector<std::pair<TypePtr, TypePtr>> witness;

  // NotBisimilar: labels leading to the failing pair. For a missing
  // transition the last label is the one the other side cannot take.
  std::vector<TypeLabel> trace;
  FailClause clause = FailClause::MissingTransition;

  // Unknown
  int pairs_explored = 0;
  std::string bound_hit;

  bool bisimilar() const { return verdict == Verdict::Bisimilar; }
};

std::string to_string(const BisimResult& r);

enum class Tri { Yes, No, Unknown };

/// Select/branch labels match on literal equality; input/output labels match
/// when directions agree and payloads are equivalent (base types by name,
/// endpoint payloads up to bisimilarity, session pairs componentwise).
Tri labels_match(const TypeLabel& a, const TypeLabel& b, const TypeOptions& opts = {},
                 const BisimBudget& budget = {});

/// Coinductive on-the-fly equivalence check. Inputs must be closed and
/// guarded. Pairs are normalized to canonical representatives, accepted when
/// already assumed, and decomposed across a shared sequential tail when both
/// heads are normed.
BisimResult bisimilar(const TypePtr& a, const TypePtr& b, const TypeOptions& opts = {},
                      const BisimBudget& budget = {});

enum class ChoiceKind { Select, Branch };

/// The two sides of the distributive law:
///   q *{l_i: T_i} ; T   and   q *{l_i: T_i ; T}
std::pair<TypePtr, TypePtr> distributive_pair(Qualifier q, ChoiceKind star,
                                              const std::vector<std::pair<std::string, TypePtr>>& arms,
                                              const TypePtr& tail);

/// Canonical representative of a type's equivalence class. Every rewrite is
/// an instance of a proved law; sequence reassociation is additionally
/// validated per instance by the checker itself, since it fails for some
/// lin/un mixtures.
struct ClassRepr {
  TypePtr type;
  std::vector<std::string> steps;  // rewrites applied, in order
  bool canonical = true;           // false when the rewrite budget ran out
};

ClassRepr canonical_repr(const TypePtr& t, const TypeOptions& opts = {}, int rewrite_budget = 512);

/// Transitions of the canonical representative, successors canonicalized.
std::vector<std::pair<TypeLabel, ClassRepr>> quotient_step(const TypePtr& t,
                                                           const TypeOptions& opts = {});

}  // namespace sessio

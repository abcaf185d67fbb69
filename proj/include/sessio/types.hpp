#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace sessio {

// Channel usage discipline: lin endpoints belong to exactly one process and
// are consumed by use; un endpoints are shareable.
enum class Qualifier { Lin, Un };

struct EndpointType;
struct PayloadType;
using TypePtr = std::shared_ptr<const EndpointType>;
using PayloadPtr = std::shared_ptr<const PayloadType>;

// Pretypes: the communication shapes a qualifier applies to.
struct SkipT {};
struct InT {
  PayloadPtr payload;
};
struct OutT {
  PayloadPtr payload;
};
// arms are (label, continuation); labels pairwise distinct, list non-empty
struct BranchT {
  std::vector<std::pair<std::string, TypePtr>> arms;  // external choice &
};
struct SelectT {
  std::vector<std::pair<std::string, TypePtr>> arms;  // internal choice +
};
using Pretype = std::variant<SkipT, InT, OutT, BranchT, SelectT>;

/// One end of a channel's protocol. Evolves under labelled transitions as
/// the channel is used; sequencing makes the language context-free rather
/// than regular.
struct EndpointType {
  struct Qualified {
    Qualifier q;
    Pretype p;
  };
  struct Var {
    std::string id;
  };
  struct Rec {
    std::string var;
    TypePtr body;
  };
  struct Seq {
    TypePtr left;
    TypePtr right;
  };
  std::variant<Qualified, Var, Rec, Seq> v;
};

/// What can be carried by a single message: a base type, one endpoint, or a
/// whole session (a pair of endpoint types).
struct PayloadType {
  struct Base {
    std::string name;
  };
  struct Endpoint {
    TypePtr type;
  };
  struct Session {
    TypePtr first;
    TypePtr second;
  };
  std::variant<Base, Endpoint, Session> v;
};

struct SessionType {
  TypePtr first;
  TypePtr second;
};

// ---- constructors ----

TypePtr mk_skip(Qualifier q);
TypePtr mk_in(Qualifier q, PayloadPtr t);
TypePtr mk_out(Qualifier q, PayloadPtr t);
TypePtr mk_branch(Qualifier q, std::vector<std::pair<std::string, TypePtr>> arms);
TypePtr mk_select(Qualifier q, std::vector<std::pair<std::string, TypePtr>> arms);
TypePtr mk_tvar(std::string id);
TypePtr mk_rec(std::string var, TypePtr body);
TypePtr mk_seq(TypePtr left, TypePtr right);

PayloadPtr mk_base(std::string name);
PayloadPtr mk_endpoint(TypePtr t);
PayloadPtr mk_session(TypePtr a, TypePtr b);

// ---- structural equality & printing ----

bool type_equal(const TypePtr& a, const TypePtr& b);
bool payload_equal(const PayloadPtr& a, const PayloadPtr& b);

std::string to_string(const TypePtr& t);
std::string to_string(const PayloadPtr& t);
std::string to_string(Qualifier q);

// ---- labels of type transitions ----

/// λ ::= !T | ?T | +l | &l  (output, input, select, branch)
struct TypeLabel {
  enum class Kind { Out, In, Sel, Bra };
  Kind kind = Kind::Out;
  PayloadPtr payload;  // Out/In
  std::string label;   // Sel/Bra
};

TypeLabel out_label(PayloadPtr t);
TypeLabel in_label(PayloadPtr t);
TypeLabel sel_label(std::string l);
TypeLabel bra_label(std::string l);

/// Swaps direction: !T ↔ ?T, +l ↔ &l.
TypeLabel dual_label(const TypeLabel& l);
bool label_equal(const TypeLabel& a, const TypeLabel& b);  // payloads structural
std::string to_string(const TypeLabel& l);

// ---- operations ----

struct UndefinedQualifierError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnguardedTypeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Qualifier of a compound type: Q(q p)=q, Q(T1;T2)=Q(T1), Q(rec z.T)=Q(T).
/// Undefined on bare type variables.
std::optional<Qualifier> try_qualifier_of(const TypePtr& t);
Qualifier qualifier_of(const TypePtr& t);  // throws UndefinedQualifierError

/// The ⊑ order on qualifiers: holds exactly on (lin,un), (un,un), (lin,lin).
bool qual_leq(Qualifier a, Qualifier b);

/// Structural duality: skip self-dual, ? ↔ !, & ↔ + with dualized arms,
/// commutes with rec and ;, payloads unchanged. An involution.
TypePtr dual(const TypePtr& t);

/// Free type variables (payloads included).
std::vector<std::string> free_type_vars(const TypePtr& t);
bool type_closed(const TypePtr& t);

/// Capture-avoiding substitution of a type for a type variable.
TypePtr subst_type_var(const TypePtr& t, const std::string& var, const TypePtr& replacement);

/// rec z.T unfolds to T with z replaced by rec z.T. Rejects unguarded types.
TypePtr unfold(const TypePtr& t);

/// Every recursion variable must be preceded by an input or output before
/// it can be reached; occurrences under a branch/select arm need an in/out
/// within that arm. Guarantees productive unfolding.
bool is_guarded(const TypePtr& t);

struct TypeOptions {
  // The transition table sends un ?T / un !T to un skip. With un_self_loop
  // set, an un-qualified in/out prefix instead transitions to itself, so un
  // types are stable under use.
  bool un_self_loop = false;
};

/// All transitions derivable from the annotated reduction semantics:
///   q ?T -?T-> q skip          q !T -!T-> q skip
///   Seq1: left steps, Q(left) ⊑ Q(left')
///   Seq2: left has no transitions, Q(left) ⊑ Q(right), right steps,
///         Q(right) ⊑ Q(right')
///   Select/Branch: each arm l_i with q ⊑ Q(arm_i)
///   Rec: transitions of the unfolding
/// Empty result means the type is terminated.
std::vector<std::pair<TypeLabel, TypePtr>> type_step(const TypePtr& t,
                                                     const TypeOptions& opts = {});

bool terminated(const TypePtr& t, const TypeOptions& opts = {});

/// A type is normed when a terminated type is reachable within the depth
/// bound. Enables sequential decomposition in the equivalence checker.
bool normed(const TypePtr& t, const TypeOptions& opts = {}, int depth_bound = 64);

}  // namespace sessio

#include <set>

#include "doctest.h"
#include "sessio/bisim.hpp"
#include "testutil.hpp"

using namespace sessio;
using testutil::tree_reuse_type;
using testutil::tree_reuse_type_distributed;
using testutil::tree_type;
using testutil::TypeGen;

namespace {

// True when the pair violates one of the bisimulation clauses directly:
// qualifier disagreement or a transition one side cannot match.
bool pair_fails_clause(const TypePtr& a, const TypePtr& b) {
  auto qa = try_qualifier_of(a);
  auto qb = try_qualifier_of(b);
  if (!qa || !qb || *qa != *qb) return true;
  auto sa = type_step(a);
  auto sb = type_step(b);
  auto matched = [&](const TypeLabel& lab, const std::vector<std::pair<TypeLabel, TypePtr>>& other) {
    for (const auto& [l, s] : other)
      if (labels_match(lab, l) == Tri::Yes) return true;
    return false;
  };
  for (const auto& [lab, s] : sa)
    if (!matched(lab, sb)) return true;
  for (const auto& [lab, s] : sb)
    if (!matched(lab, sa)) return true;
  return false;
}

// Replays a counterexample trace from both roots: a failing pair must be
// reached along the recorded labels (the final label of a missing-transition
// trace is the one the other side cannot take).
bool replay_shows_failure(TypePtr a, TypePtr b, const std::vector<TypeLabel>& trace) {
  auto take = [](const TypePtr& t, const TypeLabel& lab) -> std::optional<TypePtr> {
    for (const auto& [l, succ] : type_step(t)) {
      if (l.kind != lab.kind) continue;
      if (l.kind == TypeLabel::Kind::Sel || l.kind == TypeLabel::Kind::Bra) {
        if (l.label != lab.label) continue;
      }
      return succ;
    }
    return std::nullopt;
  };
  for (size_t i = 0; i < trace.size(); ++i) {
    if (pair_fails_clause(a, b)) return true;
    auto na = take(a, trace[i]);
    auto nb = take(b, trace[i]);
    if (!na || !nb) return i + 1 == trace.size();  // the unmatched final label
    a = *na;
    b = *nb;
  }
  return pair_fails_clause(a, b);
}

struct DistInstance {
  Qualifier q;
  ChoiceKind star;
  std::vector<std::pair<std::string, TypePtr>> arms;
  TypePtr tail;
};

// Instances whose arms are enterable (q ⊑ Q(arm)) and begin with an in/out
// prefix of a base type, so payload flips change behaviour.
DistInstance gen_dist_instance(std::mt19937_64& rng) {
  auto pick = [&](int n) { return static_cast<int>(rng() % n); };
  DistInstance inst;
  inst.q = pick(4) == 0 ? Qualifier::Un : Qualifier::Lin;
  inst.star = pick(2) ? ChoiceKind::Select : ChoiceKind::Branch;
  static const char* labels[] = {"A", "B", "C", "D"};
  int n = 1 + pick(4);
  TypeGen deeper(rng(), 2, /*allow_un=*/inst.q != Qualifier::Un);
  for (int i = 0; i < n; ++i) {
    Qualifier aq = inst.q == Qualifier::Un ? Qualifier::Un
                                           : (pick(4) == 0 ? Qualifier::Un : Qualifier::Lin);
    PayloadPtr base = pick(2) ? mk_base("Int") : mk_base("Bool");
    TypePtr prefix = pick(2) ? mk_in(aq, base) : mk_out(aq, base);
    TypePtr arm = pick(2) == 0 ? prefix : mk_seq(prefix, deeper());
    inst.arms.push_back({labels[i], arm});
  }
  TypeGen tailgen(rng(), 2);
  inst.tail = tailgen();
  return inst;
}

TypePtr flip_first_prefix(const TypePtr& arm) {
  if (const auto* q = std::get_if<EndpointType::Qualified>(&arm->v)) {
    if (const auto* in = std::get_if<InT>(&q->p)) {
      const auto* b = std::get_if<PayloadType::Base>(&in->payload->v);
      return mk_in(q->q, mk_base(b && b->name == "Int" ? "Bool" : "Int"));
    }
    if (const auto* out = std::get_if<OutT>(&q->p)) {
      const auto* b = std::get_if<PayloadType::Base>(&out->payload->v);
      return mk_out(q->q, mk_base(b && b->name == "Int" ? "Bool" : "Int"));
    }
  }
  if (const auto* s = std::get_if<EndpointType::Seq>(&arm->v))
    return mk_seq(flip_first_prefix(s->left), s->right);
  return mk_out(Qualifier::Lin, mk_base("Int"));
}

}  // namespace

TEST_CASE("reflexivity on random closed guarded types") {
  TypeGen gen(42);
  for (int i = 0; i < 500; ++i) {
    TypePtr t = gen();
    BisimResult r = bisimilar(t, t);
    CHECK(r.verdict == BisimResult::Verdict::Bisimilar);
  }
}

TEST_CASE("the distributed reuse type is equivalent to the sequenced one") {
  BisimResult r = bisimilar(tree_reuse_type(), tree_reuse_type_distributed());
  CHECK(r.verdict == BisimResult::Verdict::Bisimilar);
}

TEST_CASE("direction mismatch produces a one-label trace") {
  BisimResult r = bisimilar(mk_out(Qualifier::Lin, mk_base("Int")),
                            mk_in(Qualifier::Lin, mk_base("Int")));
  REQUIRE(r.verdict == BisimResult::Verdict::NotBisimilar);
  CHECK(r.clause == BisimResult::FailClause::MissingTransition);
  REQUIRE(r.trace.size() == 1);
  CHECK(to_string(r.trace[0]) == "!Int");
}

TEST_CASE("qualifier clause") {
  BisimResult r = bisimilar(mk_out(Qualifier::Lin, mk_base("Int")),
                            mk_out(Qualifier::Un, mk_base("Int")));
  REQUIRE(r.verdict == BisimResult::Verdict::NotBisimilar);
  CHECK(r.clause == BisimResult::FailClause::QualifierMismatch);
  CHECK(r.trace.empty());
}

TEST_CASE("label matching") {
  CHECK(labels_match(sel_label("Leaf"), sel_label("Leaf")) == Tri::Yes);
  CHECK(labels_match(sel_label("Leaf"), sel_label("Node")) == Tri::No);
  CHECK(labels_match(sel_label("Leaf"), bra_label("Leaf")) == Tri::No);
  CHECK(labels_match(out_label(mk_base("Int")), in_label(mk_base("Int"))) == Tri::No);
  CHECK(labels_match(out_label(mk_base("Int")), out_label(mk_base("Bool"))) == Tri::No);
  // endpoint payloads compare up to bisimilarity: lin skip ; lin !Int ~ lin !Int
  TypePtr a = mk_seq(mk_skip(Qualifier::Lin), mk_out(Qualifier::Lin, mk_base("Int")));
  TypePtr b = mk_out(Qualifier::Lin, mk_base("Int"));
  CHECK(labels_match(out_label(mk_endpoint(a)), out_label(mk_endpoint(b))) == Tri::Yes);
}

TEST_CASE("distributive law instances are bisimilar, mutants are not") {
  std::mt19937_64 rng(2024);
  int unknowns = 0;
  for (int i = 0; i < 200; ++i) {
    DistInstance inst = gen_dist_instance(rng);
    auto [lhs, rhs] = distributive_pair(inst.q, inst.star, inst.arms, inst.tail);
    BisimResult r = bisimilar(lhs, rhs);
    if (r.verdict == BisimResult::Verdict::Unknown) ++unknowns;
    CHECK(r.verdict == BisimResult::Verdict::Bisimilar);

    // mutate: drop an arm when possible, otherwise flip the first payload
    auto arms_mut = inst.arms;
    if (arms_mut.size() >= 2) {
      arms_mut.erase(arms_mut.begin() + static_cast<long>(rng() % arms_mut.size()));
    } else {
      arms_mut[0].second = flip_first_prefix(arms_mut[0].second);
    }
    auto mutated = distributive_pair(inst.q, inst.star, arms_mut, inst.tail).second;
    BisimResult m = bisimilar(lhs, mutated);
    if (m.verdict == BisimResult::Verdict::Unknown) ++unknowns;
    CHECK(m.verdict == BisimResult::Verdict::NotBisimilar);
  }
  CHECK(unknowns == 0);
}

TEST_CASE("canonicalization is sound") {
  TypeGen gen(7);
  for (int i = 0; i < 200; ++i) {
    TypePtr t = gen();
    ClassRepr c = canonical_repr(t);
    CHECK(bisimilar(t, c.type).bisimilar());
  }
}

TEST_CASE("canonical representative fixed points") {
  TypePtr t = mk_seq(mk_skip(Qualifier::Lin), mk_out(Qualifier::Lin, mk_base("Int")));
  CHECK(type_equal(canonical_repr(t).type, mk_out(Qualifier::Lin, mk_base("Int"))));
  CHECK(type_equal(canonical_repr(mk_skip(Qualifier::Lin)).type, mk_skip(Qualifier::Lin)));

  // skip elimination requires matching qualifiers
  TypePtr blocked = mk_seq(mk_skip(Qualifier::Un), mk_out(Qualifier::Lin, mk_base("Int")));
  CHECK(type_equal(canonical_repr(blocked).type, blocked));

  // the sequenced reuse type canonicalizes to the distributed form
  ClassRepr c = canonical_repr(tree_reuse_type());
  ClassRepr d = canonical_repr(tree_reuse_type_distributed());
  CHECK(type_equal(c.type, d.type));
}

TEST_CASE("quotient transitions") {
  auto qs = quotient_step(mk_seq(mk_skip(Qualifier::Lin), mk_out(Qualifier::Lin, mk_base("Int"))));
  REQUIRE(qs.size() == 1);
  CHECK(to_string(qs[0].first) == "!Int");
  CHECK(type_equal(qs[0].second.type, mk_skip(Qualifier::Lin)));

  CHECK(quotient_step(mk_skip(Qualifier::Lin)).empty());

  // same label sets for both formulations of the reuse type
  auto a = quotient_step(tree_reuse_type());
  auto b = type_step(tree_reuse_type_distributed());
  std::set<std::string> la, lb;
  for (const auto& [l, s] : a) la.insert(to_string(l));
  for (const auto& [l, s] : b) lb.insert(to_string(l));
  CHECK(la == lb);
}

TEST_CASE("class members share quotient transitions") {
  TypeGen gen(99);
  for (int i = 0; i < 100; ++i) {
    TypePtr t = gen();
    auto q = try_qualifier_of(t);
    if (!q) continue;
    // a member of the same class: harmless skip prefix
    TypePtr u = mk_seq(mk_skip(*q), t);
    REQUIRE(bisimilar(t, u).bisimilar());
    auto st = quotient_step(t);
    auto su = quotient_step(u);
    REQUIRE(st.size() == su.size());
    for (const auto& [lab, succ] : st) {
      bool found = false;
      for (const auto& [lab2, succ2] : su) {
        if (labels_match(lab, lab2) != Tri::Yes) continue;
        found = true;
        CHECK(bisimilar(succ.type, succ2.type).bisimilar());
        break;
      }
      CHECK(found);
    }
  }
}

TEST_CASE("counterexample traces replay to a failing pair") {
  TypeGen gen(1234);
  int replayed = 0;
  for (int i = 0; i < 300 && replayed < 60; ++i) {
    TypePtr a = gen();
    TypePtr b = gen();
    BisimResult r = bisimilar(a, b);
    if (r.verdict != BisimResult::Verdict::NotBisimilar) continue;
    ++replayed;
    CHECK(replay_shows_failure(a, b, r.trace));
  }
  CHECK(replayed > 0);
}

TEST_CASE("equivalence relation on the decided fragment") {
  TypeGen gen(555);
  for (int i = 0; i < 100; ++i) {
    TypePtr a = gen();
    auto q = try_qualifier_of(a);
    if (!q) continue;
    TypePtr b = mk_seq(mk_skip(*q), a);
    TypePtr c = canonical_repr(b).type;
    // symmetry
    CHECK(bisimilar(a, b).bisimilar());
    CHECK(bisimilar(b, a).bisimilar());
    // transitivity across the chain a ~ b ~ c
    REQUIRE(bisimilar(b, c).bisimilar());
    CHECK(bisimilar(a, c).bisimilar());
  }
}

TEST_CASE("witness relations satisfy the clauses on explored pairs") {
  BisimResult r = bisimilar(tree_reuse_type(), tree_reuse_type_distributed());
  REQUIRE(r.verdict == BisimResult::Verdict::Bisimilar);
  REQUIRE(!r.witness.empty());
  for (const auto& [a, b] : r.witness) {
    CHECK(qualifier_of(a) == qualifier_of(b));
    CHECK(bisimilar(a, b).bisimilar());
  }
}

TEST_CASE("budget exhaustion reports unknown") {
  // both types output forever; the pairs never converge structurally
  TypePtr a = mk_rec("z", mk_seq(mk_out(Qualifier::Lin, mk_base("Int")), mk_tvar("z")));
  TypePtr b = mk_rec("z", mk_seq(mk_out(Qualifier::Lin, mk_base("Int")),
                                 mk_seq(mk_tvar("z"), mk_tvar("z"))));
  BisimResult r = bisimilar(a, b, {}, BisimBudget{10, 64});
  CHECK(r.verdict == BisimResult::Verdict::Unknown);
  CHECK(!r.bound_hit.empty());
}

TEST_CASE("result serialization is line oriented") {
  BisimResult r = bisimilar(mk_out(Qualifier::Lin, mk_base("Int")),
                            mk_in(Qualifier::Lin, mk_base("Int")));
  CHECK(to_string(r) == "NOT-BISIMILAR !Int\nCLAUSE missing-transition\n");
}

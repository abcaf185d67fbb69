#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "sessio/parser.hpp"
#include "sessio/typecheck.hpp"
#include "testutil.hpp"

using namespace sessio;
using testutil::tree_type;

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(SESSIO_FIXTURES) + "/" + name);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

TypePtr lin_out_int() { return mk_out(Qualifier::Lin, mk_base("Int")); }
TypePtr lin_in_int() { return mk_in(Qualifier::Lin, mk_base("Int")); }

std::string split_key(const std::pair<TypeContext, TypeContext>& s) {
  return s.first.fingerprint() + "||" + s.second.fingerprint();
}

// Independent decision procedure for split derivability: peel the last
// entry and justify its placement by one of the split rules.
bool derivable_split(std::vector<std::pair<std::string, PayloadPtr>> g,
                     std::vector<std::pair<std::string, PayloadPtr>> l,
                     std::vector<std::pair<std::string, PayloadPtr>> r) {
  if (g.empty()) return l.empty() && r.empty();
  auto [n, t] = g.back();
  g.pop_back();
  auto take = [&](std::vector<std::pair<std::string, PayloadPtr>>& side,
                  const PayloadPtr& want) -> bool {
    if (side.empty()) return false;
    // entries keep their relative order, so a placed entry sits last
    auto& [bn, bt] = side.back();
    if (bn != n || !payload_equal(bt, want)) return false;
    side.pop_back();
    return true;
  };
  if (const auto* sess = std::get_if<PayloadType::Session>(&t->v)) {
    auto q1 = try_qualifier_of(sess->first);
    auto q2 = try_qualifier_of(sess->second);
    if (q1 && q2 && *q1 == Qualifier::Un && *q2 == Qualifier::Un) {
      auto l2 = l, r2 = r;
      return take(l2, t) && take(r2, t) && derivable_split(g, l2, r2);
    }
    if (q1 && q2 && *q1 == Qualifier::Lin && *q2 == Qualifier::Lin) {
      {
        auto l2 = l, r2 = r;
        if (take(l2, t) && derivable_split(g, l2, r2)) return true;
      }
      {
        auto l2 = l, r2 = r;
        if (take(r2, t) && derivable_split(g, l2, r2)) return true;
      }
      {
        auto l2 = l, r2 = r;
        if (take(l2, mk_endpoint(sess->first)) && take(r2, mk_endpoint(sess->second)) &&
            derivable_split(g, l2, r2))
          return true;
      }
      {
        auto l2 = l, r2 = r;
        if (take(l2, mk_endpoint(sess->second)) && take(r2, mk_endpoint(sess->first)) &&
            derivable_split(g, l2, r2))
          return true;
      }
    }
    return false;
  }
  if (const auto* ep = std::get_if<PayloadType::Endpoint>(&t->v)) {
    auto q = try_qualifier_of(ep->type);
    if (q && *q == Qualifier::Un) {
      auto l2 = l, r2 = r;
      return take(l2, t) && take(r2, t) && derivable_split(g, l2, r2);
    }
    {
      auto l2 = l, r2 = r;
      if (take(l2, t) && derivable_split(g, l2, r2)) return true;
    }
    auto l2 = l, r2 = r;
    return take(r2, t) && derivable_split(g, l2, r2);
  }
  // base entries are shared
  auto l2 = l, r2 = r;
  return take(l2, t) && take(r2, t) && derivable_split(g, l2, r2);
}

// every pair of candidate halves assembled from the possible entry pieces
std::set<std::string> oracle_splits(const TypeContext& g) {
  struct Piece {
    std::optional<PayloadPtr> left, right;
  };
  std::vector<std::vector<Piece>> choices;
  for (const auto& [n, t] : g.entries()) {
    std::vector<Piece> cs;
    cs.push_back({t, t});
    cs.push_back({t, std::nullopt});
    cs.push_back({std::nullopt, t});
    if (const auto* sess = std::get_if<PayloadType::Session>(&t->v)) {
      cs.push_back({mk_endpoint(sess->first), mk_endpoint(sess->second)});
      cs.push_back({mk_endpoint(sess->second), mk_endpoint(sess->first)});
    }
    choices.push_back(std::move(cs));
  }
  std::set<std::string> out;
  std::vector<size_t> idx(choices.size(), 0);
  for (;;) {
    std::vector<std::pair<std::string, PayloadPtr>> l, r;
    for (size_t i = 0; i < choices.size(); ++i) {
      const auto& [n, t] = g.entries()[i];
      const Piece& p = choices[i][idx[i]];
      if (p.left) l.push_back({n, *p.left});
      if (p.right) r.push_back({n, *p.right});
    }
    std::vector<std::pair<std::string, PayloadPtr>> entries(g.entries().begin(), g.entries().end());
    if (derivable_split(entries, l, r)) {
      TypeContext cl = g.empty_like(), cr = g.empty_like();
      for (auto& [n, t] : l) cl = cl.with(n, t);
      for (auto& [n, t] : r) cr = cr.with(n, t);
      out.insert(split_key({cl, cr}));
    }
    size_t i = 0;
    for (; i < idx.size(); ++i) {
      if (++idx[i] < choices[i].size()) break;
      idx[i] = 0;
    }
    if (i == idx.size()) break;
  }
  return out;
}

}  // namespace

TEST_CASE("context split: basic shapes") {
  TypeContext empty;
  auto splits = ctx_split(empty);
  REQUIRE(splits.size() == 1);
  CHECK(splits[0].first.entries().empty());
  CHECK(splits[0].second.entries().empty());

  TypeContext un_ctx = empty.with("n", mk_endpoint(mk_in(Qualifier::Un, mk_base("Int"))));
  splits = ctx_split(un_ctx);
  REQUIRE(splits.size() == 1);
  CHECK(splits[0].first.contains("n"));
  CHECK(splits[0].second.contains("n"));

  TypeContext pair_ctx = empty.with("n", mk_session(lin_out_int(), lin_in_int()));
  splits = ctx_split(pair_ctx);
  CHECK(splits.size() == 4);
  std::set<std::string> keys;
  for (auto& s : splits) keys.insert(split_key(s));
  CHECK(keys.size() == 4);
}

TEST_CASE("context split: soundness and completeness against the rule oracle") {
  std::mt19937_64 rng(31337);
  auto random_entry = [&]() -> PayloadPtr {
    switch (rng() % 4) {
      case 0: return mk_base("Int");
      case 1: return mk_endpoint(mk_out(Qualifier::Un, mk_base("Int")));
      case 2: return mk_endpoint(lin_out_int());
      default: {
        TypePtr t = (rng() % 2) ? lin_out_int() : tree_type();
        return mk_session(t, dual(t));
      }
    }
  };
  for (int n = 0; n <= 3; ++n) {
    for (int trial = 0; trial < 40; ++trial) {
      TypeContext g;
      for (int i = 0; i < n; ++i) g = g.with("x" + std::to_string(i), random_entry());
      auto impl = ctx_split(g);
      std::set<std::string> impl_keys;
      for (auto& s : impl) impl_keys.insert(split_key(s));
      CHECK(impl_keys.size() == impl.size());  // no duplicate splits
      CHECK(impl_keys == oracle_splits(g));
    }
  }
}

TEST_CASE("context split: mixed-qualifier session pairs have no split") {
  TypeContext g;
  g = g.with("n", mk_session(lin_out_int(), mk_in(Qualifier::Un, mk_base("Int"))));
  CHECK(ctx_split(g).empty());
}

TEST_CASE("context update") {
  CheckConfig cfg;
  TypeContext empty;
  auto r1 = ctx_update(empty, "n", mk_endpoint(lin_out_int()), cfg);
  REQUIRE(std::holds_alternative<TypeContext>(r1));
  TypeContext g1 = std::get<TypeContext>(r1);
  CHECK(g1.contains("n"));

  // linear entries are replaced
  auto r2 = ctx_update(g1, "n", mk_endpoint(mk_skip(Qualifier::Lin)), cfg);
  REQUIRE(std::holds_alternative<TypeContext>(r2));
  const auto* t2 = std::get<TypeContext>(r2).find("n");
  CHECK(type_equal(std::get<PayloadType::Endpoint>((*t2)->v).type, mk_skip(Qualifier::Lin)));

  // unrestricted entries must keep their type
  TypeContext gu = empty.with("n", mk_endpoint(mk_in(Qualifier::Un, mk_base("Int"))));
  auto r3 = ctx_update(gu, "n", mk_endpoint(mk_in(Qualifier::Un, mk_base("Int"))), cfg);
  CHECK(std::holds_alternative<TypeContext>(r3));
  auto r4 = ctx_update(gu, "n", mk_endpoint(mk_out(Qualifier::Un, mk_base("Int"))), cfg);
  CHECK(std::holds_alternative<UpdateError>(r4));
}

TEST_CASE("strict term typing") {
  auto funcs = std::make_shared<std::map<std::string, FuncSig>>();
  (*funcs)["fst"] = FuncSig{{mk_base("Tree")}, mk_base("Int")};
  TypeContext g{std::shared_ptr<const std::map<std::string, FuncSig>>(funcs)};

  TypeContext g1 = g.with("x", mk_base("Int"));
  auto t = type_term(g1, mk_var("x"));
  REQUIRE(t);
  CHECK(payload_equal(*t, mk_base("Int")));

  // a linear residual blocks the variable rule
  TypeContext g2 = g1.with("c", mk_endpoint(lin_out_int()));
  std::string err;
  CHECK_FALSE(type_term(g2, mk_var("x"), &err));
  CHECK(err.find("unrestricted") != std::string::npos);

  TypeContext g3 = g.with("t", mk_base("Tree"));
  auto ft = type_term(g3, mk_app("fst", {mk_var("t")}));
  REQUIRE(ft);
  CHECK(payload_equal(*ft, mk_base("Int")));
}

TEST_CASE("balanced contexts") {
  CheckConfig cfg;
  TypeContext g;
  CHECK(check_balanced(g.with("c", mk_session(lin_out_int(), lin_in_int())), cfg));
  CHECK(check_balanced(g.with("c", mk_session(tree_type(), dual(tree_type()))), cfg));
  CHECK_FALSE(check_balanced(g.with("c", mk_session(lin_out_int(), lin_out_int())), cfg));

  // in quotient mode, balance holds up to equivalence
  TypeContext skewed = g.with(
      "c", mk_session(mk_seq(mk_skip(Qualifier::Lin), lin_out_int()), lin_in_int()));
  CHECK_FALSE(check_balanced(skewed, cfg));
  CheckConfig qcfg;
  qcfg.mode = CheckMode::Quotient;
  CHECK(check_balanced(skewed, qcfg));
}

TEST_CASE("process rules on hand-built processes") {
  Program prog = parse_program("main = 0");
  Typechecker tc(prog);
  TypeContext g = tc.base_context();

  // un(Γ) makes the empty context accept inaction
  CHECK(tc.check_process(g, mk_nil()).accepted);

  // output consumes the channel down to a finished protocol
  TypeContext g1 = g.with("c", mk_endpoint(lin_out_int())).with("x", mk_base("Int"));
  ProcPtr send = mk_output({Sendable::Kind::Name, "c"}, {Sendable::Kind::Var, "x"}, mk_nil());
  CHECK(tc.check_process(g1, send).accepted);

  // a linear channel left unused is an error
  CHECK_FALSE(tc.check_process(g1, mk_nil()).accepted);

  // selecting a label the type does not offer
  TypeContext g2 = g.with("c", mk_endpoint(mk_select(Qualifier::Lin, {{"A", mk_skip(Qualifier::Lin)}})));
  ProcPtr sel = mk_select({Sendable::Kind::Name, "c"}, "B", mk_nil());
  Verdict v = tc.check_process(g2, sel);
  CHECK_FALSE(v.accepted);
  CHECK(v.rule == "Select");
}

TEST_CASE("extended process rules") {
  Program prog = parse_program("base B\nfunc e : B\nmain = 0");
  Typechecker tc(prog);
  TypeContext g = tc.base_context();

  CHECK(tc.check_extended(g, mk_plain(mk_nil())).accepted);

  // {e/x} with x: B and e: B
  ExtPtr sub = mk_active_subst("x", mk_app("e", {}));
  CHECK(tc.check_extended(g.with("x", mk_base("B")), sub).accepted);
  CHECK_FALSE(tc.check_extended(g, sub).accepted);  // x unbound

  // a name restriction is accepted when both endpoints run to completion
  Program p2 = parse_program(
      "base Int\n"
      "main = new n : (lin !Int, lin ?Int) in (n!<1>.0 | n?(x).0)");
  CHECK(check_program(p2).accepted);

  // and rejected when one side leaves its endpoint unfinished
  Program p3 = parse_program(
      "base Int\n"
      "main = new n : (lin !Int, lin ?Int) in (n!<1>.0 | 0)");
  CHECK_FALSE(check_program(p3).accepted);
}

TEST_CASE("unbalanced annotations are rejected") {
  Program p = parse_program(
      "base Int\n"
      "main = new n : (lin !Int, lin !Int) in (n!<1>.0 | n!<1>.0)");
  Verdict v = check_program(p);
  CHECK_FALSE(v.accepted);
  CHECK(v.reason.find("balanced") != std::string::npos);
}

TEST_CASE("the tree program typechecks in plain mode") {
  Program p = parse_program(fixture("tree.apc"), "tree.apc");
  Verdict v = check_program(p);
  INFO(v.to_line("tree.apc"));
  CHECK(v.accepted);
}

TEST_CASE("the reuse program typechecks in both modes") {
  Program p = parse_program(fixture("tree_reuse.apc"), "tree_reuse.apc");
  Verdict plain = check_program(p);
  INFO(plain.to_line("tree_reuse.apc"));
  CHECK(plain.accepted);
  CheckConfig qcfg;
  qcfg.mode = CheckMode::Quotient;
  Verdict quot = check_program(p, qcfg);
  INFO(quot.to_line("tree_reuse.apc"));
  CHECK(quot.accepted);
}

TEST_CASE("a select against a label the annotation lacks fails with Select") {
  Program p = parse_program(fixture("tree_badlabel.apc"), "tree_badlabel.apc");
  Verdict v = check_program(p);
  REQUIRE_FALSE(v.accepted);
  CHECK(v.rule == "Select");
  std::string line = v.to_line("tree_badlabel.apc");
  CHECK(line.rfind("FAIL Select", 0) == 0);
}

TEST_CASE("swapping the arms of the annotation breaks the tree program") {
  std::string src = fixture("tree.apc");
  std::string from = "+{Leaf: lin skip, Node: lin !Int ; z ; z}";
  auto pos = src.find(from);
  REQUIRE(pos != std::string::npos);
  src.replace(pos, from.size(), "+{Leaf: lin !Int ; z ; z, Node: lin skip}");
  Program p = parse_program(src, "tree_swapped.apc");
  CHECK_FALSE(check_program(p).accepted);
}

TEST_CASE("weakening with unused unrestricted entries") {
  Program prog = parse_program("main = 0");
  Typechecker tc(prog);
  TypeContext g = tc.base_context().with("c", mk_endpoint(lin_out_int())).with("x", mk_base("Int"));
  ProcPtr send = mk_output({Sendable::Kind::Name, "c"}, {Sendable::Kind::Var, "x"}, mk_nil());
  REQUIRE(tc.check_process(g, send).accepted);
  CHECK(tc.check_process(g.with("spare", mk_base("Int")), send).accepted);
  CHECK(tc.check_process(g.with("shared", mk_endpoint(mk_in(Qualifier::Un, mk_base("Int")))), send)
            .accepted);
}

TEST_CASE("rejection is stable under arm reordering in the annotation") {
  auto arms_fwd = std::vector<std::pair<std::string, TypePtr>>{
      {"A", mk_skip(Qualifier::Lin)}, {"B", mk_skip(Qualifier::Lin)}};
  auto arms_rev = std::vector<std::pair<std::string, TypePtr>>{
      {"B", mk_skip(Qualifier::Lin)}, {"A", mk_skip(Qualifier::Lin)}};
  Program prog = parse_program("main = 0");
  Typechecker tc(prog);
  ProcPtr sel = mk_select({Sendable::Kind::Name, "c"}, "X", mk_nil());
  TypeContext g = tc.base_context();
  CHECK_FALSE(tc.check_process(g.with("c", mk_endpoint(mk_select(Qualifier::Lin, arms_fwd))), sel)
                  .accepted);
  CHECK_FALSE(tc.check_process(g.with("c", mk_endpoint(mk_select(Qualifier::Lin, arms_rev))), sel)
                  .accepted);
}

TEST_CASE("verdict serialization") {
  Program p = parse_program(fixture("tree.apc"), "tree.apc");
  CHECK(check_program(p).to_line("tree.apc") == "OK");
}

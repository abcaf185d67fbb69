#pragma once

#include <random>
#include <string>
#include <vector>

#include "sessio/types.hpp"

namespace testutil {

using namespace sessio;

// Random closed guarded endpoint types. Recursion variables are only placed
// behind an in/out prefix, so every produced type passes is_guarded.
class TypeGen {
 public:
  explicit TypeGen(uint64_t seed, int max_depth = 4, bool allow_un = true, bool allow_rec = true)
      : rng_(seed), max_depth_(max_depth), allow_un_(allow_un), allow_rec_(allow_rec) {}

  TypePtr operator()() { return gen(max_depth_, {}, false); }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  int max_depth_;
  bool allow_un_;
  bool allow_rec_;
  int var_counter_ = 0;

  int pick(int n) { return static_cast<int>(rng_() % static_cast<uint64_t>(n)); }

  Qualifier q() { return (allow_un_ && pick(4) == 0) ? Qualifier::Un : Qualifier::Lin; }

  PayloadPtr payload(int depth) {
    int c = pick(depth > 1 ? 10 : 8);
    if (c < 5) return mk_base("Int");
    if (c < 8) return mk_base("Bool");
    if (c == 8) return mk_endpoint(gen(depth - 1, {}, false));
    TypePtr a = gen(depth - 1, {}, false);
    return mk_session(a, dual(a));
  }

  std::vector<std::pair<std::string, TypePtr>> arms(int depth, const std::vector<std::string>& vars,
                                                    bool guarded) {
    static const char* labels[] = {"A", "B", "C", "D"};
    int n = 1 + pick(3);
    std::vector<std::pair<std::string, TypePtr>> out;
    for (int i = 0; i < n; ++i) out.push_back({labels[i], gen(depth - 1, vars, guarded)});
    return out;
  }

  TypePtr gen(int depth, std::vector<std::string> vars, bool guarded) {
    if (depth <= 0) {
      if (guarded && !vars.empty() && pick(2) == 0) return mk_tvar(vars[pick((int)vars.size())]);
      int c = pick(3);
      if (c == 0) return mk_skip(q());
      if (c == 1) return mk_in(q(), mk_base("Int"));
      return mk_out(q(), mk_base("Int"));
    }
    int c = pick(10);
    switch (c) {
      case 0: return mk_skip(q());
      case 1:
      case 2: return mk_in(q(), payload(depth));
      case 3:
      case 4: return mk_out(q(), payload(depth));
      case 5: return mk_branch(q(), arms(depth, vars, guarded));
      case 6: return mk_select(q(), arms(depth, vars, guarded));
      case 7:
      case 8: {
        TypePtr l = gen(depth - 1, vars, guarded);
        // the left part guards the right when it always performs an in/out;
        // only prefixes are statically certain here
        bool l_guards = std::holds_alternative<EndpointType::Qualified>(l->v) &&
                        (std::holds_alternative<InT>(std::get<EndpointType::Qualified>(l->v).p) ||
                         std::holds_alternative<OutT>(std::get<EndpointType::Qualified>(l->v).p));
        return mk_seq(l, gen(depth - 1, vars, guarded || l_guards));
      }
      default: {
        if (!allow_rec_) return mk_in(q(), payload(depth));
        std::string z = "z" + std::to_string(var_counter_++);
        Qualifier pq = q();
        TypePtr prefix = pick(2) ? mk_in(pq, mk_base("Int")) : mk_out(pq, mk_base("Int"));
        vars.push_back(z);
        TypePtr body = mk_seq(prefix, gen(depth - 1, vars, true));
        return mk_rec(z, body);
      }
    }
  }
};

// The recursive tree-transmission type: rec z . lin +{Leaf: lin skip, Node: lin !Int ; z ; z}
inline TypePtr tree_type() {
  TypePtr z = mk_tvar("z");
  TypePtr node_arm = mk_seq(mk_out(Qualifier::Lin, mk_base("Int")), mk_seq(z, z));
  return mk_rec("z", mk_select(Qualifier::Lin, {{"Leaf", mk_skip(Qualifier::Lin)},
                                                {"Node", node_arm}}));
}

// The expanded form with a trailing output: (unfolded tree type) ; lin !Int
inline TypePtr tree_reuse_type() {
  TypePtr r = tree_type();
  TypePtr node_arm = mk_seq(mk_out(Qualifier::Lin, mk_base("Int")), mk_seq(r, r));
  TypePtr sel = mk_select(Qualifier::Lin, {{"Leaf", mk_skip(Qualifier::Lin)}, {"Node", node_arm}});
  return mk_seq(sel, mk_out(Qualifier::Lin, mk_base("Int")));
}

// The same with the trailing output distributed into both arms.
inline TypePtr tree_reuse_type_distributed() {
  TypePtr r = tree_type();
  TypePtr tail = mk_out(Qualifier::Lin, mk_base("Int"));
  TypePtr node_arm = mk_seq(mk_out(Qualifier::Lin, mk_base("Int")), mk_seq(r, mk_seq(r, tail)));
  return mk_select(Qualifier::Lin, {{"Leaf", mk_seq(mk_skip(Qualifier::Lin), tail)},
                                    {"Node", node_arm}});
}

}  // namespace testutil

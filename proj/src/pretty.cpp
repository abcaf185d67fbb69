#include "sessio/pretty.hpp"

#include <cctype>
#include <sstream>

namespace sessio {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string sendable_str(const Sendable& u) { return u.id; }

// guard: the process sits where a bare '|' or a right-extending 'new ... in'
// would change the parse (a parallel operand or a prefix continuation), so
// those forms are parenthesized.
void print_proc(std::ostream& os, const ProcPtr& p, bool guard) {
  std::visit(
      overloaded{
          [&](const Process::Nil&) { os << "0"; },
          [&](const Process::Par& x) {
            if (guard) os << '(';
            print_proc(os, x.left, true);
            os << " | ";
            print_proc(os, x.right, true);
            if (guard) os << ')';
          },
          [&](const Process::Repl& x) {
            os << "repl ";
            print_proc(os, x.body, true);
          },
          [&](const Process::Restrict& x) {
            if (guard) os << '(';
            os << "new " << x.name << " : (" << to_string(x.ann.first) << ", "
               << to_string(x.ann.second) << ") in ";
            print_proc(os, x.body, false);
            if (guard) os << ')';
          },
          [&](const Process::If& x) {
            os << "if " << to_string(x.lhs) << " = " << to_string(x.rhs) << " then ";
            print_proc(os, x.then_p, true);
            os << " else ";
            print_proc(os, x.else_p, true);
          },
          [&](const Process::Input& x) {
            os << sendable_str(x.channel) << "?(" << x.binder << ") . ";
            print_proc(os, x.body, true);
          },
          [&](const Process::Output& x) {
            os << sendable_str(x.channel) << "!<" << sendable_str(x.payload) << "> . ";
            print_proc(os, x.body, true);
          },
          [&](const Process::Select& x) {
            os << sendable_str(x.channel) << " <+ " << x.label << " . ";
            print_proc(os, x.body, true);
          },
          [&](const Process::Branch& x) {
            os << sendable_str(x.channel) << " > { ";
            bool first = true;
            for (const auto& [l, arm] : x.arms) {
              if (!first) os << ", ";
              first = false;
              os << l << ": ";
              print_proc(os, arm, false);
            }
            os << " }";
          },
          [&](const Process::AgentCall& x) {
            os << x.agent << '(';
            bool first = true;
            for (const auto& a : x.args) {
              if (!first) os << ", ";
              first = false;
              os << to_string(a);
            }
            os << ')';
          },
      },
      p->v);
}

void print_ext(std::ostream& os, const ExtPtr& a, bool guard) {
  std::visit(
      overloaded{
          [&](const ExtendedProcess::Plain& x) { print_proc(os, x.proc, guard); },
          [&](const ExtendedProcess::APar& x) {
            if (guard) os << '(';
            print_ext(os, x.left, true);
            os << " | ";
            print_ext(os, x.right, true);
            if (guard) os << ')';
          },
          [&](const ExtendedProcess::ANuName& x) {
            if (guard) os << '(';
            os << "new " << x.name << " : (" << to_string(x.ann.first) << ", "
               << to_string(x.ann.second) << ") in ";
            print_ext(os, x.body, false);
            if (guard) os << ')';
          },
          [&](const ExtendedProcess::ANuVar& x) {
            if (guard) os << '(';
            os << "new " << x.var << " : " << to_string(x.ann) << " in ";
            print_ext(os, x.body, false);
            if (guard) os << ')';
          },
          [&](const ExtendedProcess::ActiveSubst& x) {
            os << '{' << to_string(x.term) << '/' << x.var << '}';
          },
      },
      a->v);
}

bool is_literal_func(const std::string& name) {
  if (name == "true" || name == "false") return true;
  for (char c : name)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return !name.empty();
}

}  // namespace

std::string pretty_print(const ProcPtr& p) {
  std::ostringstream os;
  print_proc(os, p, false);
  return os.str();
}

std::string pretty_print(const ExtPtr& a) {
  std::ostringstream os;
  print_ext(os, a, false);
  return os.str();
}

std::string pretty_print(const Program& p) {
  std::ostringstream os;
  for (const auto& b : p.base_types) os << "base " << b << "\n";
  for (const auto& [name, sig] : p.funcs) {
    if (is_literal_func(name)) continue;  // literals re-register on use
    os << "func " << name << " : ";
    for (size_t i = 0; i < sig.params.size(); ++i) {
      if (i) os << " * ";
      os << to_string(sig.params[i]);
    }
    if (!sig.params.empty()) os << " -> ";
    os << to_string(sig.result) << "\n";
  }
  for (const auto& [name, ty] : p.aliases)
    os << "typealias " << name << " = " << to_string(ty) << "\n";
  for (const auto& a : p.agents) {
    os << "agent " << a.name << '(';
    for (size_t i = 0; i < a.params.size(); ++i) {
      if (i) os << ", ";
      os << a.params[i].first << ": " << to_string(a.params[i].second);
    }
    os << ") =\n  ";
    print_ext(os, a.body, false);
    os << "\n";
  }
  os << "main = ";
  print_ext(os, p.main, false);
  os << "\n";
  return os.str();
}

}  // namespace sessio

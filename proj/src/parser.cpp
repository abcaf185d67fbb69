#include "sessio/parser.hpp"

#include <cctype>
#include <map>
#include <set>
#include <vector>

namespace sessio {

namespace {

enum class Tok {
  End,
  Ident,     // starts lowercase
  CapIdent,  // starts uppercase
  Int,
  // keywords
  KwBase,
  KwFunc,
  KwTypealias,
  KwAgent,
  KwMain,
  KwNew,
  KwIn,
  KwIf,
  KwThen,
  KwElse,
  KwRepl,
  KwSkip,
  KwRec,
  KwDual,
  KwLin,
  KwUn,
  KwTrue,
  KwFalse,
  // punctuation
  LParen,
  RParen,
  LBrace,
  RBrace,
  Lt,
  Gt,
  SelArrow,  // <+
  Bang,
  Query,
  Dot,
  Comma,
  Colon,
  Semi,
  Bar,
  Eq,
  Arrow,  // ->
  Star,
  Plus,
  Amp,
  Slash,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  Pos pos;
};

const std::map<std::string, Tok> kKeywords = {
    {"base", Tok::KwBase},   {"func", Tok::KwFunc}, {"typealias", Tok::KwTypealias},
    {"agent", Tok::KwAgent}, {"main", Tok::KwMain}, {"new", Tok::KwNew},
    {"in", Tok::KwIn},       {"if", Tok::KwIf},     {"then", Tok::KwThen},
    {"else", Tok::KwElse},   {"repl", Tok::KwRepl}, {"skip", Tok::KwSkip},
    {"rec", Tok::KwRec},     {"dual", Tok::KwDual}, {"lin", Tok::KwLin},
    {"un", Tok::KwUn},       {"true", Tok::KwTrue}, {"false", Tok::KwFalse},
};

std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (src[i + k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    i += n;
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Pos pos{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        ++j;
      std::string word = src.substr(i, j - i);
      advance(j - i);
      auto kw = kKeywords.find(word);
      if (kw != kKeywords.end()) {
        out.push_back({kw->second, word, pos});
      } else if (std::isupper(static_cast<unsigned char>(word[0]))) {
        out.push_back({Tok::CapIdent, word, pos});
      } else {
        out.push_back({Tok::Ident, word, pos});
      }
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      out.push_back({Tok::Int, src.substr(i, j - i), pos});
      advance(j - i);
      continue;
    }
    auto two = [&](char a, char b) { return c == a && i + 1 < src.size() && src[i + 1] == b; };
    if (two('<', '+')) {
      out.push_back({Tok::SelArrow, "<+", pos});
      advance(2);
      continue;
    }
    if (two('-', '>')) {
      out.push_back({Tok::Arrow, "->", pos});
      advance(2);
      continue;
    }
    Tok k;
    switch (c) {
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      case '{': k = Tok::LBrace; break;
      case '}': k = Tok::RBrace; break;
      case '<': k = Tok::Lt; break;
      case '>': k = Tok::Gt; break;
      case '!': k = Tok::Bang; break;
      case '?': k = Tok::Query; break;
      case '.': k = Tok::Dot; break;
      case ',': k = Tok::Comma; break;
      case ':': k = Tok::Colon; break;
      case ';': k = Tok::Semi; break;
      case '|': k = Tok::Bar; break;
      case '=': k = Tok::Eq; break;
      case '*': k = Tok::Star; break;
      case '+': k = Tok::Plus; break;
      case '&': k = Tok::Amp; break;
      case '/': k = Tok::Slash; break;
      default:
        throw ParseError(std::string("lexical error: unexpected character '") + c + "'", pos);
    }
    out.push_back({k, std::string(1, c), pos});
    advance(1);
  }
  out.push_back({Tok::End, "", {line, col}});
  return out;
}

enum class IdKind { NameK, VarK };

class Parser {
 public:
  Parser(const std::string& source, std::string filename, bool standalone_types)
      : toks_(lex(source)), standalone_types_(standalone_types) {
    program_.filename = std::move(filename);
  }

  Program parse_program_toplevel() {
    while (at(Tok::KwBase)) parse_base();
    while (at(Tok::KwFunc)) parse_func();
    while (at(Tok::KwTypealias)) parse_alias();
    while (at(Tok::KwAgent)) parse_agent();
    expect(Tok::KwMain, "expected 'main' section");
    expect(Tok::Eq, "expected '=' after 'main'");
    program_.main = parse_ext_par();
    expect(Tok::End, "unexpected trailing input after main process");
    validate_agent_calls();
    return std::move(program_);
  }

  TypePtr parse_type_toplevel() {
    TypePtr t = parse_type_seq();
    expect(Tok::End, "unexpected trailing input after type");
    return t;
  }

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;
  Program program_;
  bool standalone_types_ = false;
  std::map<std::string, IdKind> env_;

  const Token& cur() const { return toks_[pos_]; }
  bool at(Tok k) const { return cur().kind == k; }
  Token eat() { return toks_[pos_++]; }
  Token expect(Tok k, const std::string& msg) {
    if (!at(k)) throw ParseError(msg + " (found '" + cur().text + "')", cur().pos);
    return eat();
  }

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, cur().pos); }
  [[noreturn]] void fail(const std::string& msg, Pos p) { throw ParseError(msg, p); }

  // ---- sections ----

  void parse_base() {
    eat();  // base
    Token t = expect(Tok::CapIdent, "expected base type name after 'base'");
    if (program_.has_base(t.text)) fail("duplicate base type " + t.text, t.pos);
    program_.base_types.push_back(t.text);
  }

  std::string func_name_token() {
    if (at(Tok::Ident) || at(Tok::CapIdent)) return eat().text;
    fail("expected function symbol name");
  }

  void parse_func() {
    eat();  // func
    Pos p = cur().pos;
    std::string name = func_name_token();
    if (program_.find_func(name)) fail("duplicate function symbol " + name, p);
    expect(Tok::Colon, "expected ':' in function signature");
    std::vector<PayloadPtr> parts;
    parts.push_back(parse_payload_atom());
    while (at(Tok::Star)) {
      eat();
      parts.push_back(parse_payload_atom());
    }
    FuncSig sig;
    if (at(Tok::Arrow)) {
      eat();
      sig.params = std::move(parts);
      sig.result = parse_payload_atom();
    } else {
      if (parts.size() != 1) fail("expected '->' in function signature");
      sig.result = parts[0];
    }
    program_.funcs.push_back({name, std::move(sig)});
  }

  void parse_alias() {
    eat();  // typealias
    Token t = expect(Tok::CapIdent, "expected alias name after 'typealias'");
    for (const auto& [n, ty] : program_.aliases)
      if (n == t.text) fail("duplicate type alias " + t.text, t.pos);
    if (program_.has_base(t.text)) fail("type alias shadows base type " + t.text, t.pos);
    expect(Tok::Eq, "expected '=' in type alias");
    TypePtr ty = parse_type_seq();
    program_.aliases.push_back({t.text, ty});
  }

  void parse_agent() {
    eat();  // agent
    Token name = expect(Tok::CapIdent, "expected agent name after 'agent'");
    if (program_.find_agent(name.text)) fail("duplicate agent definition " + name.text, name.pos);
    expect(Tok::LParen, "expected '(' after agent name");
    AgentDef def;
    def.name = name.text;
    def.pos = name.pos;
    auto saved = env_;
    if (!at(Tok::RParen)) {
      for (;;) {
        Token pn = expect(Tok::Ident, "expected parameter name");
        expect(Tok::Colon, "expected ':' after parameter name");
        PayloadPtr ty = parse_annotation_payload();
        def.params.push_back({pn.text, ty});
        env_[pn.text] = IdKind::VarK;
        if (!at(Tok::Comma)) break;
        eat();
      }
    }
    expect(Tok::RParen, "expected ')' after agent parameters");
    expect(Tok::Eq, "expected '=' in agent definition");
    def.body = parse_ext_par();
    env_ = saved;
    program_.agents.push_back(std::move(def));
  }

  void validate_agent_calls() {
    auto check_proc = [&](const ProcPtr& p, auto&& self_p) -> void {
      std::visit(
          [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, Process::AgentCall>) {
              const AgentDef* def = program_.find_agent(node.agent);
              if (!def) fail("unbound agent name " + node.agent, p->pos);
              if (def->params.size() != node.args.size())
                fail("agent " + node.agent + " expects " + std::to_string(def->params.size()) +
                         " arguments, got " + std::to_string(node.args.size()),
                     p->pos);
            } else if constexpr (std::is_same_v<T, Process::Par>) {
              self_p(node.left, self_p);
              self_p(node.right, self_p);
            } else if constexpr (std::is_same_v<T, Process::Repl>) {
              self_p(node.body, self_p);
            } else if constexpr (std::is_same_v<T, Process::Restrict>) {
              self_p(node.body, self_p);
            } else if constexpr (std::is_same_v<T, Process::If>) {
              self_p(node.then_p, self_p);
              self_p(node.else_p, self_p);
            } else if constexpr (std::is_same_v<T, Process::Input> ||
                                 std::is_same_v<T, Process::Output> ||
                                 std::is_same_v<T, Process::Select>) {
              self_p(node.body, self_p);
            } else if constexpr (std::is_same_v<T, Process::Branch>) {
              for (const auto& [l, arm] : node.arms) self_p(arm, self_p);
            }
          },
          p->v);
    };
    auto check_ext = [&](const ExtPtr& a, auto&& self) -> void {
      std::visit(
          [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, ExtendedProcess::Plain>) {
              check_proc(node.proc, check_proc);
            } else if constexpr (std::is_same_v<T, ExtendedProcess::APar>) {
              self(node.left, self);
              self(node.right, self);
            } else if constexpr (std::is_same_v<T, ExtendedProcess::ANuName> ||
                                 std::is_same_v<T, ExtendedProcess::ANuVar>) {
              self(node.body, self);
            }
          },
          a->v);
    };
    for (const auto& a : program_.agents) check_ext(a.body, check_ext);
    check_ext(program_.main, check_ext);
  }

  // ---- types ----

  TypePtr lookup_alias(const std::string& name, Pos p) {
    for (const auto& [n, ty] : program_.aliases)
      if (n == name) return ty;
    fail("unknown type alias " + name, p);
  }

  TypePtr parse_type_seq() {
    TypePtr left = parse_type_atom();
    if (at(Tok::Semi)) {
      eat();
      return mk_seq(left, parse_type_seq());  // ';' is right-associative
    }
    return left;
  }

  TypePtr parse_type_atom() {
    Pos p = cur().pos;
    if (at(Tok::KwLin) || at(Tok::KwUn)) {
      Qualifier q = at(Tok::KwLin) ? Qualifier::Lin : Qualifier::Un;
      eat();
      return parse_pretype(q);
    }
    if (at(Tok::KwRec)) {
      eat();
      Token var = expect(Tok::Ident, "expected type variable after 'rec'");
      expect(Tok::Dot, "expected '.' in recursive type");
      return mk_rec(var.text, parse_type_seq());
    }
    if (at(Tok::KwDual)) {
      eat();
      return dual(parse_type_atom());
    }
    if (at(Tok::Ident)) return mk_tvar(eat().text);
    if (at(Tok::CapIdent)) {
      Token t = eat();
      return lookup_alias(t.text, t.pos);
    }
    if (at(Tok::LParen)) {
      eat();
      TypePtr t = parse_type_seq();
      expect(Tok::RParen, "expected ')' in type");
      return t;
    }
    if (at(Tok::KwSkip) || at(Tok::Query) || at(Tok::Bang) || at(Tok::Amp) || at(Tok::Plus))
      return parse_pretype(Qualifier::Lin);  // default qualifier
    fail("expected a type", p);
  }

  TypePtr parse_pretype(Qualifier q) {
    if (at(Tok::KwSkip)) {
      eat();
      return mk_skip(q);
    }
    if (at(Tok::Query)) {
      eat();
      return mk_in(q, parse_payload_atom());
    }
    if (at(Tok::Bang)) {
      eat();
      return mk_out(q, parse_payload_atom());
    }
    if (at(Tok::Amp)) {
      eat();
      return mk_branch(q, parse_type_arms());
    }
    if (at(Tok::Plus)) {
      eat();
      return mk_select(q, parse_type_arms());
    }
    fail("expected a pretype (skip, ?T, !T, &{...}, +{...})");
  }

  std::vector<std::pair<std::string, TypePtr>> parse_type_arms() {
    expect(Tok::LBrace, "expected '{' in choice type");
    std::vector<std::pair<std::string, TypePtr>> arms;
    std::set<std::string> seen;
    for (;;) {
      Token l = expect(Tok::CapIdent, "expected label in choice type");
      if (!seen.insert(l.text).second) fail("duplicate branch label " + l.text, l.pos);
      expect(Tok::Colon, "expected ':' after label");
      arms.push_back({l.text, parse_type_seq()});
      if (!at(Tok::Comma)) break;
      eat();
    }
    expect(Tok::RBrace, "expected '}' closing choice type");
    return arms;
  }

  // payload directly after ! or ?
  PayloadPtr parse_payload_atom() {
    if (at(Tok::CapIdent)) {
      Token t = eat();
      if (standalone_types_ || program_.has_base(t.text)) return mk_base(t.text);
      return mk_endpoint(lookup_alias(t.text, t.pos));  // alias naming an endpoint type
    }
    if (at(Tok::LParen)) {
      eat();
      TypePtr a = parse_type_seq();
      if (at(Tok::Comma)) {
        eat();
        TypePtr b = parse_type_seq();
        expect(Tok::RParen, "expected ')' closing session pair");
        return mk_session(a, b);
      }
      expect(Tok::RParen, "expected ')' in payload type");
      return mk_endpoint(a);
    }
    fail("expected payload type");
  }

  // agent parameter / restriction annotation: base name, session pair, or
  // endpoint type
  PayloadPtr parse_annotation_payload() {
    if (at(Tok::CapIdent)) {
      Token t = eat();
      if (program_.has_base(t.text)) return mk_base(t.text);
      return mk_endpoint(lookup_alias(t.text, t.pos));
    }
    if (at(Tok::LParen)) {
      eat();
      TypePtr a = parse_type_seq();
      if (at(Tok::Comma)) {
        eat();
        TypePtr b = parse_type_seq();
        expect(Tok::RParen, "expected ')' closing session pair");
        return mk_session(a, b);
      }
      expect(Tok::RParen, "expected ')' in annotation");
      if (at(Tok::Semi)) {
        eat();
        return mk_endpoint(mk_seq(a, parse_type_seq()));
      }
      return mk_endpoint(a);
    }
    return mk_endpoint(parse_type_seq());
  }

  // ---- terms ----

  TermPtr literal_const(const std::string& name, const std::string& base, Pos p) {
    if (!program_.find_func(name)) {
      if (!program_.has_base(base))
        fail("literal requires base type " + base + " to be declared", p);
      program_.funcs.push_back({name, FuncSig{{}, mk_base(base)}});
    }
    return mk_app(name, {});
  }

  TermPtr parse_term() {
    Pos p = cur().pos;
    if (at(Tok::Int)) return literal_const(eat().text, "Int", p);
    if (at(Tok::KwTrue)) {
      eat();
      return literal_const("true", "Bool", p);
    }
    if (at(Tok::KwFalse)) {
      eat();
      return literal_const("false", "Bool", p);
    }
    if (!at(Tok::Ident) && !at(Tok::CapIdent)) fail("expected a term");
    Token id = eat();
    if (at(Tok::LParen)) {
      const FuncSig* sig = program_.find_func(id.text);
      if (!sig) fail("unknown function symbol " + id.text, id.pos);
      eat();
      std::vector<TermPtr> args;
      if (!at(Tok::RParen)) {
        for (;;) {
          args.push_back(parse_term());
          if (!at(Tok::Comma)) break;
          eat();
        }
      }
      expect(Tok::RParen, "expected ')' closing application");
      if (args.size() != sig->params.size())
        fail("function " + id.text + " expects " + std::to_string(sig->params.size()) +
                 " arguments, got " + std::to_string(args.size()),
             id.pos);
      return mk_app(id.text, std::move(args));
    }
    auto bound = env_.find(id.text);
    if (bound != env_.end())
      return bound->second == IdKind::VarK ? mk_var(id.text) : mk_name(id.text);
    if (const FuncSig* sig = program_.find_func(id.text)) {
      if (!sig->params.empty())
        fail("function " + id.text + " expects " + std::to_string(sig->params.size()) +
                 " arguments, got 0",
             id.pos);
      return mk_app(id.text, {});
    }
    if (id.kind == Tok::Ident) return mk_name(id.text);  // unbound lowercase defaults to a name
    fail("unbound capitalized identifier " + id.text + " in term position", id.pos);
  }

  Sendable parse_sendable(bool channel_position) {
    Pos p = cur().pos;
    TermPtr t = parse_term();
    auto u = term_to_sendable(t);
    if (!u) fail("only names, variables and constants can be sent", p);
    if (channel_position && u->kind == Sendable::Kind::Const)
      fail("constant " + u->id + " cannot be used as a channel", p);
    return *u;
  }

  // ---- processes ----

  bool sendable_head() const {
    if (!at(Tok::Ident)) return false;
    Tok next = toks_[pos_ + 1].kind;
    return next == Tok::Bang || next == Tok::Query || next == Tok::SelArrow || next == Tok::Gt;
  }

  ProcPtr parse_proc_par() {
    ProcPtr p = parse_proc_prefix();
    while (at(Tok::Bar)) {
      Pos bp = eat().pos;
      p = mk_par(p, parse_proc_prefix(), bp);
    }
    return p;
  }

  ProcPtr parse_proc_prefix() {
    Pos p = cur().pos;
    if (at(Tok::Int) && cur().text == "0") {
      eat();
      return mk_nil(p);
    }
    if (at(Tok::KwRepl)) {
      eat();
      return mk_repl(parse_proc_prefix(), p);
    }
    if (at(Tok::KwNew)) {
      eat();
      Token n = expect(Tok::Ident, "expected name after 'new'");
      if (!at(Tok::Colon))
        fail("missing restriction annotation for " + n.text + " (write 'new " + n.text +
                 " : (T, dual T) in ...')",
             n.pos);
      eat();
      PayloadPtr ann = parse_annotation_payload();
      const auto* sess = std::get_if<PayloadType::Session>(&ann->v);
      if (!sess)
        fail("restriction annotation for " + n.text + " must be a session pair (T1, T2)", n.pos);
      expect(Tok::KwIn, "expected 'in' after restriction annotation");
      auto saved = env_.count(n.text) ? std::optional(env_[n.text]) : std::nullopt;
      env_[n.text] = IdKind::NameK;
      ProcPtr body = parse_proc_par();
      if (saved)
        env_[n.text] = *saved;
      else
        env_.erase(n.text);
      return mk_restrict(n.text, SessionType{sess->first, sess->second}, body, p);
    }
    if (at(Tok::KwIf)) {
      eat();
      TermPtr lhs = parse_term();
      expect(Tok::Eq, "expected '=' in condition");
      TermPtr rhs = parse_term();
      expect(Tok::KwThen, "expected 'then'");
      ProcPtr t = parse_proc_prefix();
      expect(Tok::KwElse, "expected 'else'");
      ProcPtr e = parse_proc_prefix();
      return mk_if(lhs, rhs, t, e, p);
    }
    if (at(Tok::LParen)) {
      eat();
      ProcPtr body = parse_proc_par();
      expect(Tok::RParen, "expected ')'");
      return body;
    }
    if (at(Tok::CapIdent) && toks_[pos_ + 1].kind == Tok::LParen) {
      Token name = eat();
      eat();  // (
      std::vector<TermPtr> args;
      if (!at(Tok::RParen)) {
        for (;;) {
          args.push_back(parse_term());
          if (!at(Tok::Comma)) break;
          eat();
        }
      }
      expect(Tok::RParen, "expected ')' closing agent call");
      return mk_agent_call(name.text, std::move(args), p);
    }
    if (sendable_head()) {
      Sendable ch = parse_sendable(/*channel_position=*/true);
      if (at(Tok::Bang)) {
        eat();
        expect(Tok::Lt, "expected '<' after '!'");
        Sendable payload = parse_sendable(false);
        expect(Tok::Gt, "expected '>' after payload");
        expect(Tok::Dot, "expected '.' after output");
        return mk_output(ch, payload, parse_proc_prefix(), p);
      }
      if (at(Tok::Query)) {
        eat();
        expect(Tok::LParen, "expected '(' after '?'");
        Token binder = expect(Tok::Ident, "expected binder variable");
        expect(Tok::RParen, "expected ')' after binder");
        expect(Tok::Dot, "expected '.' after input");
        auto saved = env_.count(binder.text) ? std::optional(env_[binder.text]) : std::nullopt;
        env_[binder.text] = IdKind::VarK;
        ProcPtr body = parse_proc_prefix();
        if (saved)
          env_[binder.text] = *saved;
        else
          env_.erase(binder.text);
        return mk_input(ch, binder.text, body, p);
      }
      if (at(Tok::SelArrow)) {
        eat();
        Token label = expect(Tok::CapIdent, "expected label after '<+'");
        expect(Tok::Dot, "expected '.' after selection");
        return mk_select(ch, label.text, parse_proc_prefix(), p);
      }
      if (at(Tok::Gt)) {
        eat();
        expect(Tok::LBrace, "expected '{' after '>'");
        std::vector<std::pair<std::string, ProcPtr>> arms;
        std::set<std::string> seen;
        for (;;) {
          Token l = expect(Tok::CapIdent, "expected branch label");
          if (!seen.insert(l.text).second) fail("duplicate branch label " + l.text, l.pos);
          expect(Tok::Colon, "expected ':' after branch label");
          arms.push_back({l.text, parse_proc_par()});
          if (!at(Tok::Comma)) break;
          eat();
        }
        expect(Tok::RBrace, "expected '}' closing branch");
        return mk_branch(ch, std::move(arms), p);
      }
    }
    fail("expected a process");
  }

  // ---- extended processes ----

  // Registers the target variables of active substitutions ahead of parsing,
  // so occurrences elsewhere in the same composition resolve as variables.
  void prescan_subst_vars() {
    int depth = 0;
    for (size_t j = pos_; j + 2 < toks_.size(); ++j) {
      Tok k = toks_[j].kind;
      if (k == Tok::KwMain || k == Tok::KwAgent || k == Tok::End) break;
      if (k == Tok::LParen || k == Tok::LBrace) ++depth;
      if (k == Tok::RParen || k == Tok::RBrace) {
        if (depth == 0) break;
        --depth;
      }
      if (k == Tok::Slash && toks_[j + 1].kind == Tok::Ident && toks_[j + 2].kind == Tok::RBrace)
        env_[toks_[j + 1].text] = IdKind::VarK;
    }
  }

  ExtPtr parse_ext_par() {
    prescan_subst_vars();
    ExtPtr a = parse_ext_prefix();
    while (at(Tok::Bar)) {
      Pos bp = eat().pos;
      a = mk_apar(a, parse_ext_prefix(), bp);
    }
    return a;
  }

  ExtPtr parse_ext_prefix() {
    Pos p = cur().pos;
    if (at(Tok::LBrace)) {
      eat();
      TermPtr term = parse_term();
      expect(Tok::Slash, "expected '/' in active substitution");
      Token var = expect(Tok::Ident, "expected variable in active substitution");
      expect(Tok::RBrace, "expected '}' closing active substitution");
      env_[var.text] = IdKind::VarK;
      FreeIds fi = free_identifiers(term);
      if (fi.vars.count(var.text))
        fail("active substitution target " + var.text + " occurs in its own term", p);
      return mk_active_subst(var.text, term, p);
    }
    if (at(Tok::KwNew)) {
      eat();
      Token n = expect(Tok::Ident, "expected identifier after 'new'");
      if (!at(Tok::Colon)) fail("missing restriction annotation for " + n.text, n.pos);
      eat();
      PayloadPtr ann = parse_annotation_payload();
      expect(Tok::KwIn, "expected 'in' after restriction annotation");
      const auto* sess = std::get_if<PayloadType::Session>(&ann->v);
      auto saved = env_.count(n.text) ? std::optional(env_[n.text]) : std::nullopt;
      env_[n.text] = sess ? IdKind::NameK : IdKind::VarK;
      ExtPtr body = parse_ext_par();
      if (saved)
        env_[n.text] = *saved;
      else
        env_.erase(n.text);
      if (sess) return mk_anu_name(n.text, SessionType{sess->first, sess->second}, body, p);
      return mk_anu_var(n.text, ann, body, p);
    }
    if (at(Tok::LParen)) {
      eat();
      ExtPtr a = parse_ext_par();
      expect(Tok::RParen, "expected ')'");
      return a;
    }
    return mk_plain(parse_proc_prefix(), p);
  }
};

}  // namespace

Program parse_program(const std::string& source, const std::string& filename) {
  Parser p(source, filename, /*standalone_types=*/false);
  return p.parse_program_toplevel();
}

TypePtr parse_endpoint_type(const std::string& source) {
  Parser p(source, "<type>", /*standalone_types=*/true);
  return p.parse_type_toplevel();
}

}  // namespace sessio

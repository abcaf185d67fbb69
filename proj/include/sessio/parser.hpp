#pragma once

#include <stdexcept>
#include <string>

#include "sessio/ast.hpp"

namespace sessio {

struct ParseError : std::runtime_error {
  Pos pos;
  ParseError(const std::string& msg, Pos p) : std::runtime_error(msg), pos(p) {}
};

/// Parses a whole program: sections `base`, `func`, `typealias`, `agent`,
/// `main` in that order, `//` comments. Type aliases are expanded during
/// parsing; integer and boolean literals become nullary function symbols.
Program parse_program(const std::string& source, const std::string& filename = "<input>");

/// Parses a standalone endpoint type (no program context; capitalized
/// identifiers in payload position are taken as base types).
TypePtr parse_endpoint_type(const std::string& source);

}  // namespace sessio

#pragma once

#include <string>

#include "sessio/ast.hpp"

namespace sessio {

/// Prints a program in the concrete syntax; parsing the output yields a
/// structurally identical program.
std::string pretty_print(const Program& p);

std::string pretty_print(const ProcPtr& p);
std::string pretty_print(const ExtPtr& a);

}  // namespace sessio

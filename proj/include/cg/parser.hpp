#pragma once

#include "cg/ast.hpp"
#include "cg/token.hpp"

namespace cg {

// Recursive-descent parser. Recovers at ';' after an error so several
// diagnostics can surface in one pass. The returned tree may be partial
// when diags has errors.
SyntaxTree parse(const std::vector<Token>& tokens, Diagnostics& diags);

// Canonical source form; parse(tokenize(pretty(t))) is structurally equal
// to t. Expressions come out fully parenthesized.
std::string pretty(const SyntaxTree& tree);
std::string pretty(const Expr& expr);

}  // namespace cg

#pragma once

#include <string>
#include <vector>

#include "cg/diagnostics.hpp"
#include "cg/source.hpp"

namespace cg {

enum class TokenKind {
    Identifier,
    Keyword,          // implemented language keywords
    ReservedKeyword,  // reserved C/C++ words outside the implemented subset
    IntLiteral,
    FloatLiteral,
    Operator,
    Punctuation,  // ; , ( ) { } [ ] :
    EndOfInput,
};

struct Token {
    TokenKind kind = TokenKind::EndOfInput;
    std::string lexeme;
    Location loc;
    // Literal payload, filled during lexing.
    double number = 0.0;
    char suffix = 0;  // 'f', 'h' or 'x' on numeric literals, else 0

    bool is(TokenKind k) const { return kind == k; }
    bool is(TokenKind k, std::string_view text) const { return kind == k && lexeme == text; }
};

bool is_keyword(std::string_view word);
bool is_reserved_keyword(std::string_view word);

// Maximal-munch tokenization of post-preprocess text. Type names lex as
// plain identifiers; the reserved C/C++ word table yields ReservedKeyword
// tokens. Always appends an EndOfInput token.
std::vector<Token> tokenize(const SourceUnit& source, Diagnostics& diags);

}  // namespace cg

#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <set>

#include "cg/token.hpp"

namespace cg {

namespace {

const std::set<std::string_view> kKeywords = {
    "if", "else", "for", "while", "do", "break", "continue", "return",
    "discard", "struct", "uniform", "out", "inout", "true", "false",
};

// All C/C++ keywords outside the implemented subset. Using one of these as
// a construct is a reserved-word diagnostic, never a plain syntax error.
const std::set<std::string_view> kReserved = {
    "asm", "auto", "case", "catch", "char", "class", "const", "const_cast",
    "default", "delete", "dynamic_cast", "enum", "explicit", "extern",
    "friend", "goto", "inline", "long", "mutable", "namespace", "new",
    "operator", "private", "protected", "public", "register",
    "reinterpret_cast", "short", "signed", "sizeof", "static", "static_cast",
    "switch", "template", "this", "throw", "try", "typedef", "typeid",
    "typename", "union", "unsigned", "using", "virtual", "volatile",
    "wchar_t",
};

// Multi-character operators, longest first for maximal munch.
const std::array<std::string_view, 20> kOperators3 = {
    "<<=", ">>=",
    "++", "--", "+=", "-=", "*=", "/=", "%=", "==", "!=", "<=", ">=",
    "&&", "||", "<<", ">>", "&=", "|=", "^=",
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

bool is_keyword(std::string_view word) { return kKeywords.count(word) > 0; }
bool is_reserved_keyword(std::string_view word) { return kReserved.count(word) > 0; }

std::vector<Token> tokenize(const SourceUnit& source, Diagnostics& diags) {
    std::vector<Token> tokens;
    const std::string& s = source.text;
    size_t i = 0;
    int line = 1, col = 1;

    auto advance = [&](size_t n) {
        for (size_t k = 0; k < n; ++k) {
            if (s[i + k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        i += n;
    };

    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        Location loc{line, col};
        if (is_ident_start(c)) {
            size_t j = i;
            while (j < s.size() && is_ident_char(s[j])) ++j;
            Token t;
            t.lexeme = s.substr(i, j - i);
            t.loc = loc;
            if (kKeywords.count(t.lexeme)) t.kind = TokenKind::Keyword;
            else if (kReserved.count(t.lexeme)) t.kind = TokenKind::ReservedKeyword;
            else t.kind = TokenKind::Identifier;
            advance(j - i);
            tokens.push_back(std::move(t));
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            // Decimal integer or float: digits [. digits] [e[+-]digits] [fhx]
            size_t j = i;
            bool has_dot = false, has_exp = false, malformed = false;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            if (j < s.size() && s[j] == '.') {
                has_dot = true;
                ++j;
                while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            }
            if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
                has_exp = true;
                ++j;
                if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
                if (j >= s.size() || !std::isdigit(static_cast<unsigned char>(s[j])))
                    malformed = true;
                while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            }
            char suffix = 0;
            if (j < s.size() && (s[j] == 'f' || s[j] == 'h' || s[j] == 'x')) {
                suffix = s[j];
                ++j;
            }
            // A literal immediately followed by identifier characters is
            // malformed ("1.5q", "12ab").
            if (j < s.size() && (is_ident_char(s[j]) || s[j] == '.')) malformed = true;
            std::string text = s.substr(i, j - i);
            if (malformed) {
                diags.error("E_LEX_NUMBER", loc, "malformed numeric literal '" + text + "'");
                while (j < s.size() && (is_ident_char(s[j]) || s[j] == '.')) ++j;
                advance(j - i);
                continue;
            }
            Token t;
            t.loc = loc;
            t.lexeme = text;
            t.suffix = suffix;
            std::string digits = suffix ? text.substr(0, text.size() - 1) : text;
            t.number = std::strtod(digits.c_str(), nullptr);
            t.kind = (has_dot || has_exp || suffix) ? TokenKind::FloatLiteral
                                                    : TokenKind::IntLiteral;
            advance(j - i);
            tokens.push_back(std::move(t));
            continue;
        }
        if (c == ';' || c == ',' || c == '(' || c == ')' || c == '{' || c == '}' || c == '[' ||
            c == ']' || c == ':') {
            Token t;
            t.kind = TokenKind::Punctuation;
            t.lexeme = std::string(1, c);
            t.loc = loc;
            advance(1);
            tokens.push_back(std::move(t));
            continue;
        }
        std::string_view rest(s.data() + i, s.size() - i);
        bool matched = false;
        for (std::string_view op : kOperators3) {
            if (rest.substr(0, op.size()) == op) {
                Token t;
                t.kind = TokenKind::Operator;
                t.lexeme = std::string(op);
                t.loc = loc;
                advance(op.size());
                tokens.push_back(std::move(t));
                matched = true;
                break;
            }
        }
        if (matched) continue;
        if (std::string_view("+-*/%<>=!&|^~?.").find(c) != std::string_view::npos) {
            Token t;
            t.kind = TokenKind::Operator;
            t.lexeme = std::string(1, c);
            t.loc = loc;
            advance(1);
            tokens.push_back(std::move(t));
            continue;
        }
        diags.error("E_LEX_CHAR", loc, std::string("illegal character '") + c + "'");
        advance(1);
    }
    Token eoi;
    eoi.kind = TokenKind::EndOfInput;
    eoi.loc = {line, col};
    tokens.push_back(std::move(eoi));
    return tokens;
}

}  // namespace cg

#include "cg/parser.hpp"

#include <cassert>

namespace cg {

namespace {

class Parser {
public:
    Parser(const std::vector<Token>& tokens, Diagnostics& diags)
        : tokens_(tokens), diags_(diags) {}

    SyntaxTree parse_unit() {
        SyntaxTree tree;
        while (!at_end()) {
            if (peek().is(TokenKind::Keyword, "struct")) {
                parse_record(tree);
                continue;
            }
            if (peek().is(TokenKind::ReservedKeyword)) {
                diags_.error("E_RESERVED", peek().loc,
                             "'" + peek().lexeme + "' is reserved and not supported");
                sync();
                continue;
            }
            parse_function_or_global(tree);
        }
        return tree;
    }

private:
    const Token& peek(int ahead = 0) const {
        size_t idx = pos_ + ahead;
        if (idx >= tokens_.size()) idx = tokens_.size() - 1;
        return tokens_[idx];
    }
    const Token& advance() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
    bool at_end() const { return peek().is(TokenKind::EndOfInput); }

    bool check(TokenKind k, std::string_view text) const { return peek().is(k, std::string(text)); }
    bool match(TokenKind k, std::string_view text) {
        if (check(k, text)) {
            advance();
            return true;
        }
        return false;
    }

    void error(Location loc, const std::string& msg, const char* code = "E_SYNTAX") {
        diags_.error(code, loc, msg);
        throw ParseBail{};
    }

    const Token& expect(TokenKind k, std::string_view text, const std::string& what) {
        if (!peek().is(k, std::string(text)))
            error(peek().loc, "expected '" + std::string(text) + "' " + what + ", got '" +
                                  describe(peek()) + "'");
        return advance();
    }

    std::string expect_identifier(const std::string& what) {
        if (peek().is(TokenKind::ReservedKeyword))
            error(peek().loc, "'" + peek().lexeme + "' is reserved and not supported",
                  "E_RESERVED");
        if (!peek().is(TokenKind::Identifier))
            error(peek().loc, "expected identifier " + what + ", got '" + describe(peek()) + "'");
        return advance().lexeme;
    }

    static std::string describe(const Token& t) {
        return t.is(TokenKind::EndOfInput) ? "end of input" : t.lexeme;
    }

    struct ParseBail {};

    // Skips to just past the next ';' (or to a '}'/end) for error recovery.
    void sync() {
        int depth = 0;
        while (!at_end()) {
            const Token& t = peek();
            if (t.is(TokenKind::Punctuation, ";") && depth <= 0) {
                advance();
                return;
            }
            if (t.is(TokenKind::Punctuation, "{")) ++depth;
            if (t.is(TokenKind::Punctuation, "}")) {
                if (depth <= 0) return;
                --depth;
            }
            advance();
        }
    }

    // ---- declarations ----

    void parse_record(SyntaxTree& tree) {
        try {
            RecordDecl rec;
            rec.loc = peek().loc;
            expect(TokenKind::Keyword, "struct", "to begin a structure");
            rec.name = expect_identifier("after 'struct'");
            expect(TokenKind::Punctuation, "{", "to open the structure body");
            while (!check(TokenKind::Punctuation, "}")) {
                if (at_end()) error(peek().loc, "unterminated structure body");
                std::string type_name = expect_identifier("as a field type");
                std::string field = expect_identifier("as a field name");
                expect(TokenKind::Punctuation, ";", "after the field");
                rec.fields.emplace_back(type_name, field);
            }
            expect(TokenKind::Punctuation, "}", "to close the structure body");
            expect(TokenKind::Punctuation, ";", "after the structure");
            tree.records.push_back(std::move(rec));
        } catch (ParseBail&) {
            sync();
        }
    }

    void parse_function_or_global(SyntaxTree& tree) {
        try {
            Location start = peek().loc;
            std::string type_name = expect_identifier("as a declaration type");
            std::string name = expect_identifier("as a declaration name");
            if (check(TokenKind::Punctuation, "(")) {
                FunctionDecl fn;
                fn.loc = start;
                fn.return_type_name = type_name;
                fn.name = name;
                parse_params(fn);
                if (match(TokenKind::Punctuation, ":"))
                    fn.return_semantic = expect_identifier("as a return semantic");
                fn.body = parse_block();
                tree.functions.push_back(std::move(fn));
                return;
            }
            GlobalDecl g;
            g.loc = start;
            g.type_name = type_name;
            g.name = name;
            if (match(TokenKind::Operator, "="))
                g.init = parse_assignment();
            expect(TokenKind::Punctuation, ";", "after the declaration");
            tree.globals.push_back(std::move(g));
        } catch (ParseBail&) {
            sync();
        }
    }

    void parse_params(FunctionDecl& fn) {
        expect(TokenKind::Punctuation, "(", "to open the parameter list");
        if (match(TokenKind::Punctuation, ")")) return;
        for (;;) {
            ParamDecl p;
            p.loc = peek().loc;
            for (;;) {
                if (match(TokenKind::Keyword, "uniform"))
                    p.qualifiers |= static_cast<uint8_t>(Qualifier::Uniform);
                else if (match(TokenKind::Keyword, "out"))
                    p.qualifiers |= static_cast<uint8_t>(Qualifier::Out);
                else if (match(TokenKind::Keyword, "inout"))
                    p.qualifiers |= static_cast<uint8_t>(Qualifier::InOut);
                else break;
            }
            p.type_name = expect_identifier("as a parameter type");
            p.name = expect_identifier("as a parameter name");
            while (match(TokenKind::Punctuation, "[")) {
                if (!peek().is(TokenKind::IntLiteral))
                    error(peek().loc, "expected a constant array extent");
                p.array_dims.push_back(static_cast<int>(advance().number));
                expect(TokenKind::Punctuation, "]", "after the array extent");
            }
            if (match(TokenKind::Punctuation, ":"))
                p.semantic = expect_identifier("as a parameter semantic");
            fn.params.push_back(std::move(p));
            if (match(TokenKind::Punctuation, ")")) return;
            expect(TokenKind::Punctuation, ",", "between parameters");
        }
    }

    // ---- statements ----

    StmtPtr parse_block() {
        auto block = std::make_unique<Stmt>(StmtKind::Block, peek().loc);
        expect(TokenKind::Punctuation, "{", "to open a block");
        while (!check(TokenKind::Punctuation, "}")) {
            if (at_end()) error(peek().loc, "unterminated block");
            try {
                parse_statement_into(block->body);
            } catch (ParseBail&) {
                sync();
            }
        }
        advance();
        return block;
    }

    // Appends one statement, or several for multi-declarator declarations,
    // which scope to the enclosing block.
    void parse_statement_into(std::vector<StmtPtr>& out) {
        if (peek().is(TokenKind::Identifier) && peek(1).is(TokenKind::Identifier)) {
            for (auto& d : parse_declaration_list()) out.push_back(std::move(d));
            return;
        }
        out.push_back(parse_statement_inner());
    }

    StmtPtr parse_statement_inner() {
        const Token& t = peek();
        if (t.is(TokenKind::ReservedKeyword))
            error(t.loc, "'" + t.lexeme + "' is reserved and not supported", "E_RESERVED");
        if (t.is(TokenKind::Punctuation, "{")) return parse_block();
        if (t.is(TokenKind::Keyword, "if")) return parse_if();
        if (t.is(TokenKind::Keyword, "for")) return parse_for();
        if (t.is(TokenKind::Keyword, "while")) return parse_while();
        if (t.is(TokenKind::Keyword, "do")) return parse_do();
        if (t.is(TokenKind::Keyword, "break")) {
            auto s = std::make_unique<Stmt>(StmtKind::Break, advance().loc);
            expect(TokenKind::Punctuation, ";", "after 'break'");
            return s;
        }
        if (t.is(TokenKind::Keyword, "continue")) {
            auto s = std::make_unique<Stmt>(StmtKind::Continue, advance().loc);
            expect(TokenKind::Punctuation, ";", "after 'continue'");
            return s;
        }
        if (t.is(TokenKind::Keyword, "discard")) {
            auto s = std::make_unique<Stmt>(StmtKind::Discard, advance().loc);
            expect(TokenKind::Punctuation, ";", "after 'discard'");
            return s;
        }
        if (t.is(TokenKind::Keyword, "return")) {
            auto s = std::make_unique<Stmt>(StmtKind::Return, advance().loc);
            if (!check(TokenKind::Punctuation, ";")) s->expr = parse_expression();
            expect(TokenKind::Punctuation, ";", "after 'return'");
            return s;
        }
        // Declaration when an identifier is directly followed by another
        // identifier; anything else is an expression statement. A
        // multi-declarator declaration in a single-statement position
        // (loop or if body) wraps in a block.
        if (t.is(TokenKind::Identifier) && peek(1).is(TokenKind::Identifier)) {
            auto decls = parse_declaration_list();
            if (decls.size() == 1) return std::move(decls.front());
            auto block = std::make_unique<Stmt>(StmtKind::Block, t.loc);
            for (auto& d : decls) block->body.push_back(std::move(d));
            return block;
        }
        auto s = std::make_unique<Stmt>(StmtKind::ExprStmt, t.loc);
        s->expr = parse_expression();
        expect(TokenKind::Punctuation, ";", "after the expression");
        return s;
    }

    // "type a = x, b = y;" desugars into consecutive Decl statements.
    std::vector<StmtPtr> parse_declaration_list() {
        Location loc = peek().loc;
        std::string type_name = expect_identifier("as a declaration type");
        std::vector<StmtPtr> decls;
        for (;;) {
            auto d = std::make_unique<Stmt>(StmtKind::Decl, loc);
            d->type_name = type_name;
            d->name = expect_identifier("as a variable name");
            while (match(TokenKind::Punctuation, "[")) {
                if (!peek().is(TokenKind::IntLiteral))
                    error(peek().loc, "expected a constant array extent");
                d->array_dims.push_back(static_cast<int>(advance().number));
                expect(TokenKind::Punctuation, "]", "after the array extent");
            }
            if (match(TokenKind::Operator, "=")) d->init = parse_assignment();
            decls.push_back(std::move(d));
            if (match(TokenKind::Punctuation, ";")) break;
            expect(TokenKind::Punctuation, ",", "between declarators");
        }
        return decls;
    }

    // Bodies normalize to a flat statement list: a braced body contributes
    // its statements directly, an unbraced body contributes one statement.
    // The pretty printer always emits braces, so the round trip is stable.
    void parse_body_into(std::vector<StmtPtr>& out) {
        StmtPtr s = parse_statement_inner();
        if (s->kind == StmtKind::Block) {
            for (auto& inner : s->body) out.push_back(std::move(inner));
        } else {
            out.push_back(std::move(s));
        }
    }

    StmtPtr parse_if() {
        auto s = std::make_unique<Stmt>(StmtKind::If, advance().loc);
        expect(TokenKind::Punctuation, "(", "after 'if'");
        s->expr = parse_expression();
        expect(TokenKind::Punctuation, ")", "after the condition");
        parse_body_into(s->body);
        if (match(TokenKind::Keyword, "else")) parse_body_into(s->else_body);
        return s;
    }

    StmtPtr parse_for() {
        auto s = std::make_unique<Stmt>(StmtKind::For, advance().loc);
        expect(TokenKind::Punctuation, "(", "after 'for'");
        if (!match(TokenKind::Punctuation, ";")) {
            if (peek().is(TokenKind::Identifier) && peek(1).is(TokenKind::Identifier)) {
                auto decls = parse_declaration_list();
                if (decls.size() != 1)
                    error(s->loc, "a loop initializer declares a single variable");
                s->init_stmt = std::move(decls.front());
            } else {
                auto init = std::make_unique<Stmt>(StmtKind::ExprStmt, peek().loc);
                init->expr = parse_expression();
                s->init_stmt = std::move(init);
                expect(TokenKind::Punctuation, ";", "after the loop initializer");
            }
        }
        if (!check(TokenKind::Punctuation, ";")) s->expr = parse_expression();
        expect(TokenKind::Punctuation, ";", "after the loop condition");
        if (!check(TokenKind::Punctuation, ")")) s->step = parse_expression();
        expect(TokenKind::Punctuation, ")", "after the loop header");
        parse_body_into(s->body);
        return s;
    }

    StmtPtr parse_while() {
        auto s = std::make_unique<Stmt>(StmtKind::While, advance().loc);
        expect(TokenKind::Punctuation, "(", "after 'while'");
        s->expr = parse_expression();
        expect(TokenKind::Punctuation, ")", "after the condition");
        parse_body_into(s->body);
        return s;
    }

    StmtPtr parse_do() {
        auto s = std::make_unique<Stmt>(StmtKind::DoWhile, advance().loc);
        parse_body_into(s->body);
        expect(TokenKind::Keyword, "while", "after a 'do' body");
        expect(TokenKind::Punctuation, "(", "after 'while'");
        s->expr = parse_expression();
        expect(TokenKind::Punctuation, ")", "after the condition");
        expect(TokenKind::Punctuation, ";", "after 'do ... while'");
        return s;
    }

    // ---- expressions ----

    ExprPtr parse_expression() {
        ExprPtr e = parse_assignment();
        while (check(TokenKind::Punctuation, ",")) {
            Location loc = advance().loc;
            auto node = std::make_unique<Expr>(ExprKind::Comma, loc);
            node->a = std::move(e);
            node->b = parse_assignment();
            e = std::move(node);
        }
        return e;
    }

    bool is_assign_op(const Token& t) const {
        if (!t.is(TokenKind::Operator)) return false;
        return t.lexeme == "=" || t.lexeme == "+=" || t.lexeme == "-=" || t.lexeme == "*=" ||
               t.lexeme == "/=" || t.lexeme == "%=" || t.lexeme == "&=" || t.lexeme == "|=" ||
               t.lexeme == "^=" || t.lexeme == "<<=" || t.lexeme == ">>=";
    }

    ExprPtr parse_assignment() {
        ExprPtr lhs = parse_conditional();
        if (is_assign_op(peek())) {
            std::string op = peek().lexeme;
            Location loc = advance().loc;
            auto node = std::make_unique<Expr>(ExprKind::Assign, loc);
            node->text = op;
            node->a = std::move(lhs);
            node->b = parse_assignment();  // right associative
            return node;
        }
        return lhs;
    }

    ExprPtr parse_conditional() {
        ExprPtr cond = parse_binary(0);
        if (check(TokenKind::Operator, "?")) {
            Location loc = advance().loc;
            auto node = std::make_unique<Expr>(ExprKind::Cond, loc);
            node->a = std::move(cond);
            node->b = parse_assignment();
            expect(TokenKind::Punctuation, ":", "in a conditional expression");
            node->c = parse_conditional();
            return node;
        }
        return cond;
    }

    // Binary precedence tiers, loosest first.
    struct Tier {
        const char* ops[4];
        ExprKind kind;
    };
    static constexpr int kNumTiers = 10;
    static const Tier& tier(int i) {
        static const Tier tiers[kNumTiers] = {
            {{"||", nullptr}, ExprKind::Logical},
            {{"&&", nullptr}, ExprKind::Logical},
            {{"|", nullptr}, ExprKind::Binary},
            {{"^", nullptr}, ExprKind::Binary},
            {{"&", nullptr}, ExprKind::Binary},
            {{"==", "!=", nullptr}, ExprKind::Compare},
            {{"<", "<=", ">", ">="}, ExprKind::Compare},
            {{"<<", ">>", nullptr}, ExprKind::Binary},
            {{"+", "-", nullptr}, ExprKind::Binary},
            {{"*", "/", "%", nullptr}, ExprKind::Binary},
        };
        return tiers[i];
    }

    ExprPtr parse_binary(int level) {
        if (level >= kNumTiers) return parse_unary();
        ExprPtr lhs = parse_binary(level + 1);
        for (;;) {
            const Tier& t = tier(level);
            bool matched = false;
            for (const char* op : t.ops) {
                if (!op) break;
                // '>' followed by '>' would have lexed as '>>'; single tokens
                // only here.
                if (check(TokenKind::Operator, op)) {
                    Location loc = advance().loc;
                    auto node = std::make_unique<Expr>(t.kind, loc);
                    node->text = op;
                    node->a = std::move(lhs);
                    node->b = parse_binary(level + 1);
                    lhs = std::move(node);
                    matched = true;
                    break;
                }
            }
            if (!matched) return lhs;
        }
    }

    ExprPtr parse_unary() {
        const Token& t = peek();
        if (t.is(TokenKind::Operator)) {
            if (t.lexeme == "+" || t.lexeme == "-" || t.lexeme == "!" || t.lexeme == "~") {
                Location loc = advance().loc;
                auto node = std::make_unique<Expr>(ExprKind::Unary, loc);
                node->text = t.lexeme;
                node->a = parse_unary();
                return node;
            }
            if (t.lexeme == "++" || t.lexeme == "--") {
                Location loc = advance().loc;
                auto node = std::make_unique<Expr>(ExprKind::Unary, loc);
                node->text = t.lexeme;
                node->postfix = false;
                node->a = parse_unary();
                return node;
            }
        }
        return parse_postfix();
    }

    ExprPtr parse_postfix() {
        ExprPtr e = parse_primary();
        for (;;) {
            if (check(TokenKind::Operator, ".")) {
                Location loc = advance().loc;
                auto node = std::make_unique<Expr>(ExprKind::Member, loc);
                node->a = std::move(e);
                node->text = expect_identifier("after '.'");
                e = std::move(node);
                continue;
            }
            if (check(TokenKind::Punctuation, "[")) {
                Location loc = advance().loc;
                auto node = std::make_unique<Expr>(ExprKind::Index, loc);
                node->a = std::move(e);
                node->b = parse_expression();
                expect(TokenKind::Punctuation, "]", "after the index");
                e = std::move(node);
                continue;
            }
            if (check(TokenKind::Operator, "++") || check(TokenKind::Operator, "--")) {
                std::string op = peek().lexeme;
                Location loc = advance().loc;
                auto node = std::make_unique<Expr>(ExprKind::Unary, loc);
                node->text = op;
                node->postfix = true;
                node->a = std::move(e);
                e = std::move(node);
                continue;
            }
            return e;
        }
    }

    ExprPtr parse_primary() {
        const Token& t = peek();
        if (t.is(TokenKind::ReservedKeyword))
            error(t.loc, "'" + t.lexeme + "' is reserved and not supported", "E_RESERVED");
        if (t.is(TokenKind::IntLiteral)) {
            auto node = std::make_unique<Expr>(ExprKind::IntLit, t.loc);
            node->number = t.number;
            advance();
            return node;
        }
        if (t.is(TokenKind::FloatLiteral)) {
            auto node = std::make_unique<Expr>(ExprKind::FloatLit, t.loc);
            node->number = t.number;
            node->suffix = t.suffix;
            advance();
            return node;
        }
        if (t.is(TokenKind::Keyword, "true") || t.is(TokenKind::Keyword, "false")) {
            auto node = std::make_unique<Expr>(ExprKind::BoolLit, t.loc);
            node->bvalue = t.lexeme == "true";
            advance();
            return node;
        }
        if (t.is(TokenKind::Punctuation, "(")) {
            advance();
            ExprPtr e = parse_expression();
            expect(TokenKind::Punctuation, ")", "to close the parenthesized expression");
            return e;
        }
        if (t.is(TokenKind::Identifier)) {
            Location loc = t.loc;
            std::string name = advance().lexeme;
            if (check(TokenKind::Punctuation, "(")) {
                auto node = std::make_unique<Expr>(ExprKind::Call, loc);
                node->text = std::move(name);
                advance();
                if (!match(TokenKind::Punctuation, ")")) {
                    for (;;) {
                        node->args.push_back(parse_assignment());
                        if (match(TokenKind::Punctuation, ")")) break;
                        expect(TokenKind::Punctuation, ",", "between call arguments");
                    }
                }
                return node;
            }
            auto node = std::make_unique<Expr>(ExprKind::Ident, loc);
            node->text = std::move(name);
            return node;
        }
        error(t.loc, "expected an expression, got '" + describe(t) + "'");
        return nullptr;  // unreachable
    }

    const std::vector<Token>& tokens_;
    Diagnostics& diags_;
    size_t pos_ = 0;
};

}  // namespace

SyntaxTree parse(const std::vector<Token>& tokens, Diagnostics& diags) {
    assert(!tokens.empty() && tokens.back().is(TokenKind::EndOfInput));
    Parser p(tokens, diags);
    return p.parse_unit();
}

}  // namespace cg

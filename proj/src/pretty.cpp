#include <charconv>
#include <sstream>

#include "cg/parser.hpp"

namespace cg {

namespace {

std::string format_number(double v, char suffix, bool is_float) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, res.ptr);
    if (is_float) {
        bool needs_marker = s.find('.') == std::string::npos &&
                            s.find('e') == std::string::npos &&
                            s.find('E') == std::string::npos;
        if (suffix) s += suffix;
        else if (needs_marker) s += ".0";
    }
    return s;
}

class Printer {
public:
    std::string run(const SyntaxTree& tree) {
        for (const auto& r : tree.records) {
            line("struct " + r.name + " {");
            ++indent_;
            for (const auto& [type_name, field] : r.fields) line(type_name + " " + field + ";");
            --indent_;
            line("};");
        }
        for (const auto& g : tree.globals) {
            std::string s = g.type_name + " " + g.name;
            if (g.init) s += " = " + expr(*g.init);
            line(s + ";");
        }
        for (const auto& f : tree.functions) {
            std::string head = f.return_type_name + " " + f.name + "(";
            for (size_t i = 0; i < f.params.size(); ++i) {
                if (i) head += ", ";
                head += param(f.params[i]);
            }
            head += ")";
            if (!f.return_semantic.empty()) head += " : " + f.return_semantic;
            if (f.body->body.empty()) {
                line(head + " { }");
            } else {
                line(head + " {");
                ++indent_;
                for (const auto& s : f.body->body) stmt(*s);
                --indent_;
                line("}");
            }
        }
        return out_.str();
    }

    std::string expr(const Expr& e) {
        switch (e.kind) {
        case ExprKind::IntLit: return format_number(e.number, 0, false);
        case ExprKind::FloatLit: return format_number(e.number, e.suffix, true);
        case ExprKind::BoolLit: return e.bvalue ? "true" : "false";
        case ExprKind::Ident: return e.text;
        case ExprKind::Call: {
            std::string s = e.text + "(";
            for (size_t i = 0; i < e.args.size(); ++i) {
                if (i) s += ", ";
                s += expr(*e.args[i]);
            }
            return s + ")";
        }
        case ExprKind::Unary:
            if (e.postfix) return "(" + expr(*e.a) + e.text + ")";
            return "(" + e.text + expr(*e.a) + ")";
        case ExprKind::Binary:
        case ExprKind::Compare:
        case ExprKind::Logical:
        case ExprKind::Assign:
            return "(" + expr(*e.a) + " " + e.text + " " + expr(*e.b) + ")";
        case ExprKind::Cond:
            return "(" + expr(*e.a) + " ? " + expr(*e.b) + " : " + expr(*e.c) + ")";
        case ExprKind::Comma:
            return "(" + expr(*e.a) + ", " + expr(*e.b) + ")";
        case ExprKind::Member: return expr(*e.a) + "." + e.text;
        case ExprKind::Index: return expr(*e.a) + "[" + expr(*e.b) + "]";
        case ExprKind::Convert:
        case ExprKind::Smear:
            // Checked-tree artifacts print as their operand; pretty output
            // of a checked tree re-checks to the same form.
            return expr(*e.a);
        }
        return "<expr>";
    }

private:
    std::string param(const ParamDecl& p) {
        std::string s;
        if (p.is_uniform()) s += "uniform ";
        if (p.is_out()) s += "out ";
        if (p.is_inout()) s += "inout ";
        s += p.type_name + " " + p.name;
        for (int d : p.array_dims) s += "[" + std::to_string(d) + "]";
        if (!p.semantic.empty()) s += " : " + p.semantic;
        return s;
    }

    void stmt(const Stmt& s) {
        switch (s.kind) {
        case StmtKind::Decl: {
            std::string t = s.type_name + " " + s.name;
            for (int d : s.array_dims) t += "[" + std::to_string(d) + "]";
            if (s.init) t += " = " + expr(*s.init);
            line(t + ";");
            return;
        }
        case StmtKind::ExprStmt: line(expr(*s.expr) + ";"); return;
        case StmtKind::If:
            line("if (" + expr(*s.expr) + ") {");
            ++indent_;
            for (const auto& b : s.body) stmt(*b);
            --indent_;
            if (!s.else_body.empty()) {
                line("} else {");
                ++indent_;
                for (const auto& b : s.else_body) stmt(*b);
                --indent_;
            }
            line("}");
            return;
        case StmtKind::For: {
            std::string head = "for (";
            if (s.init_stmt) head += inline_stmt(*s.init_stmt);
            head += ";";
            if (s.expr) head += " " + expr(*s.expr);
            head += ";";
            if (s.step) head += " " + expr(*s.step);
            head += ") {";
            line(head);
            ++indent_;
            for (const auto& b : s.body) stmt(*b);
            --indent_;
            line("}");
            return;
        }
        case StmtKind::While:
            line("while (" + expr(*s.expr) + ") {");
            ++indent_;
            for (const auto& b : s.body) stmt(*b);
            --indent_;
            line("}");
            return;
        case StmtKind::DoWhile:
            line("do {");
            ++indent_;
            for (const auto& b : s.body) stmt(*b);
            --indent_;
            line("} while (" + expr(*s.expr) + ");");
            return;
        case StmtKind::Break: line("break;"); return;
        case StmtKind::Continue: line("continue;"); return;
        case StmtKind::Return:
            line(s.expr ? "return " + expr(*s.expr) + ";" : "return;");
            return;
        case StmtKind::Discard: line("discard;"); return;
        case StmtKind::Block:
            line("{");
            ++indent_;
            for (const auto& b : s.body) stmt(*b);
            --indent_;
            line("}");
            return;
        }
    }

    // For-initializer without trailing newline or semicolon.
    std::string inline_stmt(const Stmt& s) {
        if (s.kind == StmtKind::Decl) {
            std::string t = s.type_name + " " + s.name;
            if (s.init) t += " = " + expr(*s.init);
            return t;
        }
        return expr(*s.expr);
    }

    void line(const std::string& text) {
        for (int i = 0; i < indent_; ++i) out_ << "    ";
        out_ << text << "\n";
    }

    std::ostringstream out_;
    int indent_ = 0;
};

}  // namespace

std::string pretty(const SyntaxTree& tree) {
    Printer p;
    return p.run(tree);
}

std::string pretty(const Expr& expr) {
    Printer p;
    return p.expr(expr);
}

}  // namespace cg

#include "cg/ast.hpp"

namespace cg {

static bool equal_ptr(const ExprPtr& a, const ExprPtr& b) {
    if (!a && !b) return true;
    if (!a || !b) return false;
    return ast_equal(*a, *b);
}

static bool equal_ptr(const StmtPtr& a, const StmtPtr& b) {
    if (!a && !b) return true;
    if (!a || !b) return false;
    return ast_equal(*a, *b);
}

bool ast_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case ExprKind::IntLit:
    case ExprKind::FloatLit:
        if (a.number != b.number || a.suffix != b.suffix) return false;
        break;
    case ExprKind::BoolLit:
        if (a.bvalue != b.bvalue) return false;
        break;
    default: break;
    }
    if (a.text != b.text || a.postfix != b.postfix) return false;
    if (a.args.size() != b.args.size()) return false;
    for (size_t i = 0; i < a.args.size(); ++i)
        if (!equal_ptr(a.args[i], b.args[i])) return false;
    return equal_ptr(a.a, b.a) && equal_ptr(a.b, b.b) && equal_ptr(a.c, b.c);
}

bool ast_equal(const Stmt& a, const Stmt& b) {
    if (a.kind != b.kind) return false;
    if (a.type_name != b.type_name || a.name != b.name || a.array_dims != b.array_dims)
        return false;
    if (!equal_ptr(a.init, b.init) || !equal_ptr(a.expr, b.expr) ||
        !equal_ptr(a.init_stmt, b.init_stmt) || !equal_ptr(a.step, b.step))
        return false;
    if (a.body.size() != b.body.size() || a.else_body.size() != b.else_body.size()) return false;
    for (size_t i = 0; i < a.body.size(); ++i)
        if (!equal_ptr(a.body[i], b.body[i])) return false;
    for (size_t i = 0; i < a.else_body.size(); ++i)
        if (!equal_ptr(a.else_body[i], b.else_body[i])) return false;
    return true;
}

bool ast_equal(const SyntaxTree& a, const SyntaxTree& b) {
    if (a.records.size() != b.records.size() || a.globals.size() != b.globals.size() ||
        a.functions.size() != b.functions.size())
        return false;
    for (size_t i = 0; i < a.records.size(); ++i) {
        if (a.records[i].name != b.records[i].name ||
            a.records[i].fields != b.records[i].fields)
            return false;
    }
    for (size_t i = 0; i < a.globals.size(); ++i) {
        if (a.globals[i].type_name != b.globals[i].type_name ||
            a.globals[i].name != b.globals[i].name ||
            !equal_ptr(a.globals[i].init, b.globals[i].init))
            return false;
    }
    for (size_t i = 0; i < a.functions.size(); ++i) {
        const auto& fa = a.functions[i];
        const auto& fb = b.functions[i];
        if (fa.name != fb.name || fa.return_type_name != fb.return_type_name ||
            fa.return_semantic != fb.return_semantic || fa.params.size() != fb.params.size())
            return false;
        for (size_t p = 0; p < fa.params.size(); ++p) {
            const auto& pa = fa.params[p];
            const auto& pb = fb.params[p];
            if (pa.qualifiers != pb.qualifiers || pa.type_name != pb.type_name ||
                pa.name != pb.name || pa.semantic != pb.semantic ||
                pa.array_dims != pb.array_dims)
                return false;
        }
        if (!equal_ptr(fa.body, fb.body)) return false;
    }
    return true;
}

ExprPtr clone_expr(const Expr& e) {
    auto out = std::make_unique<Expr>(e.kind, e.loc);
    out->number = e.number;
    out->suffix = e.suffix;
    out->bvalue = e.bvalue;
    out->text = e.text;
    out->postfix = e.postfix;
    for (const auto& arg : e.args) out->args.push_back(clone_expr(*arg));
    if (e.a) out->a = clone_expr(*e.a);
    if (e.b) out->b = clone_expr(*e.b);
    if (e.c) out->c = clone_expr(*e.c);
    out->type = e.type;
    out->ref_kind = e.ref_kind;
    out->ref_slot = e.ref_slot;
    out->member_access = e.member_access;
    out->swizzle = e.swizzle;
    out->matrix_row = e.matrix_row;
    out->matrix_col = e.matrix_col;
    out->builtin_overload = e.builtin_overload;
    out->user_function = e.user_function;
    out->is_constructor = e.is_constructor;
    return out;
}

}  // namespace cg

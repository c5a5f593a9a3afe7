#include <cassert>

#include "cg/sema.hpp"

namespace cg {

// Shared by the portability scanner (below), the lowering pass and the tree
// interpreter: walking is per consumer, but a value computed from constants
// folds through the same Value kernels everywhere.

namespace {

constexpr int kMaxLoopIterations = kMaxUnrollIterations;
constexpr int kMaxSteps = kMaxUnrollSteps;

// nullopt means "dynamic": unknown until run time.
using AbsVal = std::optional<Value>;

enum class Sig { Normal, Break, Continue, Return, Discard };

class Scanner {
public:
    Scanner(const TypedTree& tt, bool allow_discard_guard)
        : tt_(tt), allow_discard_guard_(allow_discard_guard) {
        globals_ = evaluate_globals(tt);
    }

    ScanReport run() {
        const FunctionDecl& entry = tt_.entry();
        std::vector<AbsVal> args(entry.params.size(), std::nullopt);
        AbsVal ret;
        call(tt_.entry_index, args, ret);
        return std::move(report_);
    }

private:
    struct Frame {
        std::vector<AbsVal> locals;
        std::vector<AbsVal> params;
        AbsVal return_value;
    };

    const TypedTree& tt_;
    bool allow_discard_guard_;
    ScanReport report_;
    std::vector<Value> globals_;
    int steps_ = 0;

    void issue(Location loc, ScanIssue::Kind kind, std::string detail) {
        report_.issues.push_back({loc, kind, std::move(detail)});
    }

    bool budget(Location loc) {
        if (++steps_ > kMaxSteps) {
            if (steps_ == kMaxSteps + 1)
                issue(loc, ScanIssue::Kind::DynamicLoop, "unroll budget exceeded");
            return false;
        }
        return true;
    }

    Sig call(int fn_index, std::vector<AbsVal>& args, AbsVal& ret) {
        const FunctionDecl& fn = tt_.tree.functions[fn_index];
        Frame frame;
        frame.params = args;
        frame.locals.assign(fn.num_locals, std::nullopt);
        Sig sig = Sig::Normal;
        for (const auto& s : fn.body->body) {
            sig = exec(*s, frame);
            if (sig != Sig::Normal) break;
        }
        ret = frame.return_value;
        args = frame.params;  // copy-back values for out/inout
        return sig == Sig::Discard ? Sig::Discard : Sig::Normal;
    }

    Sig exec(const Stmt& s, Frame& f) {
        if (!budget(s.loc)) return Sig::Return;
        switch (s.kind) {
        case StmtKind::Decl:
            if (s.init) {
                f.locals[s.decl_slot] = eval(*s.init, f);
            } else if (s.decl_type && s.decl_type->is_numeric()) {
                f.locals[s.decl_slot] = Value(s.decl_type);  // nothing written yet
            } else {
                f.locals[s.decl_slot] = std::nullopt;
            }
            return Sig::Normal;
        case StmtKind::ExprStmt:
            eval(*s.expr, f);
            return Sig::Normal;
        case StmtKind::If: {
            AbsVal cond = eval(*s.expr, f);
            if (!cond || !cond->fully_written()) {
                if (allow_discard_guard_ && s.else_body.empty() && s.body.size() == 1 &&
                    s.body[0]->kind == StmtKind::Discard)
                    return Sig::Normal;  // lowers to a conditional kill
                issue(s.loc, ScanIssue::Kind::DynamicIf,
                      "condition is not a compile-time constant");
                poison_assigned(s, f);
                return Sig::Normal;
            }
            const auto& branch = cond->b(0) ? s.body : s.else_body;
            for (const auto& b : branch) {
                Sig sig = exec(*b, f);
                if (sig != Sig::Normal) return sig;
            }
            return Sig::Normal;
        }
        case StmtKind::While: {
            for (int iter = 0;; ++iter) {
                if (iter > kMaxLoopIterations) {
                    issue(s.loc, ScanIssue::Kind::DynamicLoop,
                          "loop exceeds the unroll budget");
                    poison_assigned(s, f);
                    return Sig::Normal;
                }
                AbsVal cond = eval(*s.expr, f);
                if (!cond || !cond->fully_written()) {
                    issue(s.loc, ScanIssue::Kind::DynamicLoop,
                          "loop bound is not a compile-time constant");
                    poison_assigned(s, f);
                    return Sig::Normal;
                }
                if (!cond->b(0)) return Sig::Normal;
                Sig sig = body(s.body, f);
                if (sig == Sig::Break) return Sig::Normal;
                if (sig == Sig::Return || sig == Sig::Discard) return sig;
                if (!budget(s.loc)) return Sig::Return;
            }
        }
        case StmtKind::DoWhile: {
            for (int iter = 0;; ++iter) {
                if (iter > kMaxLoopIterations) {
                    issue(s.loc, ScanIssue::Kind::DynamicLoop,
                          "loop exceeds the unroll budget");
                    poison_assigned(s, f);
                    return Sig::Normal;
                }
                Sig sig = body(s.body, f);
                if (sig == Sig::Break) return Sig::Normal;
                if (sig == Sig::Return || sig == Sig::Discard) return sig;
                AbsVal cond = eval(*s.expr, f);
                if (!cond || !cond->fully_written()) {
                    issue(s.loc, ScanIssue::Kind::DynamicLoop,
                          "loop bound is not a compile-time constant");
                    poison_assigned(s, f);
                    return Sig::Normal;
                }
                if (!cond->b(0)) return Sig::Normal;
                if (!budget(s.loc)) return Sig::Return;
            }
        }
        case StmtKind::For: {
            if (s.init_stmt) exec(*s.init_stmt, f);
            for (int iter = 0;; ++iter) {
                if (iter > kMaxLoopIterations) {
                    issue(s.loc, ScanIssue::Kind::DynamicLoop,
                          "loop exceeds the unroll budget");
                    poison_assigned(s, f);
                    return Sig::Normal;
                }
                if (s.expr) {
                    AbsVal cond = eval(*s.expr, f);
                    if (!cond || !cond->fully_written()) {
                        issue(s.loc, ScanIssue::Kind::DynamicLoop,
                              "loop bound is not a compile-time constant");
                        poison_assigned(s, f);
                        return Sig::Normal;
                    }
                    if (!cond->b(0)) return Sig::Normal;
                }
                Sig sig = body(s.body, f);
                if (sig == Sig::Break) return Sig::Normal;
                if (sig == Sig::Return || sig == Sig::Discard) return sig;
                if (s.step) eval(*s.step, f);
                if (!budget(s.loc)) return Sig::Return;
            }
        }
        case StmtKind::Break: return Sig::Break;
        case StmtKind::Continue: return Sig::Continue;
        case StmtKind::Return:
            if (s.expr) f.return_value = eval(*s.expr, f);
            return Sig::Return;
        case StmtKind::Discard: return Sig::Discard;
        case StmtKind::Block: {
            for (const auto& b : s.body) {
                Sig sig = exec(*b, f);
                if (sig != Sig::Normal) return sig;
            }
            return Sig::Normal;
        }
        }
        return Sig::Normal;
    }

    Sig body(const std::vector<StmtPtr>& stmts, Frame& f) {
        for (const auto& b : stmts) {
            Sig sig = exec(*b, f);
            if (sig == Sig::Continue) return Sig::Continue;
            if (sig != Sig::Normal) return sig;
        }
        return Sig::Normal;
    }

    // After flagging dynamic control flow, any variable either branch could
    // assign stops being a known constant.
    void poison_assigned(const Stmt& s, Frame& f) {
        auto poison_expr = [&](const Expr& e, auto&& self) -> void {
            if (e.kind == ExprKind::Assign ||
                (e.kind == ExprKind::Unary && (e.text == "++" || e.text == "--"))) {
                const Expr* root = e.a.get();
                while (root &&
                       (root->kind == ExprKind::Member || root->kind == ExprKind::Index))
                    root = root->a.get();
                if (root && root->kind == ExprKind::Ident) {
                    if (root->ref_kind == RefKind::Local) f.locals[root->ref_slot] = std::nullopt;
                    if (root->ref_kind == RefKind::Param) f.params[root->ref_slot] = std::nullopt;
                }
            }
            for (const auto& a : e.args) self(*a, self);
            if (e.a) self(*e.a, self);
            if (e.b) self(*e.b, self);
            if (e.c) self(*e.c, self);
        };
        auto poison_stmt = [&](const Stmt& st, auto&& self) -> void {
            if (st.kind == StmtKind::Decl) {
                if (st.decl_slot >= 0) f.locals[st.decl_slot] = std::nullopt;
                if (st.init) poison_expr(*st.init, poison_expr);
                return;
            }
            if (st.expr) poison_expr(*st.expr, poison_expr);
            if (st.step) poison_expr(*st.step, poison_expr);
            if (st.init_stmt) self(*st.init_stmt, self);
            for (const auto& b : st.body) self(*b, self);
            for (const auto& b : st.else_body) self(*b, self);
        };
        poison_stmt(s, poison_stmt);
    }

    AbsVal eval(const Expr& e, Frame& f) {
        if (!budget(e.loc)) return std::nullopt;
        try {
            return eval_inner(e, f);
        } catch (const VmError&) {
            return std::nullopt;  // runtime checks stay the backstop
        }
    }

    AbsVal eval_inner(const Expr& e, Frame& f) {
        switch (e.kind) {
        case ExprKind::IntLit:
            return Value::scalar_int(e.type, static_cast<int32_t>(e.number));
        case ExprKind::FloatLit:
            return Value::scalar_float(e.type, static_cast<float>(e.number));
        case ExprKind::BoolLit:
            return Value::scalar_bool(e.type, e.bvalue);
        case ExprKind::Ident:
            switch (e.ref_kind) {
            case RefKind::Global: return globals_[e.ref_slot];
            case RefKind::Local: return f.locals[e.ref_slot];
            case RefKind::Param: return f.params[e.ref_slot];
            default: return std::nullopt;
            }
        case ExprKind::Convert: {
            AbsVal v = eval(*e.a, f);
            if (!v) return std::nullopt;
            return convert_value(*v, e.type);
        }
        case ExprKind::Smear: {
            AbsVal v = eval(*e.a, f);
            if (!v) return std::nullopt;
            return convert_value(*v, e.type);
        }
        case ExprKind::Member: {
            AbsVal v = eval(*e.a, f);
            if (!v) return std::nullopt;
            if (e.member_access == MemberAccess::Swizzle) {
                Value out(e.type);
                for (size_t i = 0; i < e.swizzle.size(); ++i)
                    out.copy_component(static_cast<int>(i), *v, e.swizzle[i]);
                return out;
            }
            if (e.member_access == MemberAccess::MatrixElement) {
                Value out(e.type);
                out.copy_component(0, *v, e.matrix_row * e.a->type->cols + e.matrix_col);
                return out;
            }
            if (e.member_access == MemberAccess::RecordField) {
                if (!v->record) return std::nullopt;
                for (auto& [name, val] : v->record->fields)
                    if (name == e.text) return val;
                return std::nullopt;
            }
            return std::nullopt;
        }
        case ExprKind::Index: {
            AbsVal base = eval(*e.a, f);
            AbsVal idx = eval(*e.b, f);
            if (!idx || !idx->fully_written()) {
                issue(e.loc, ScanIssue::Kind::VariableIndex,
                      "index is not a compile-time constant");
                return std::nullopt;
            }
            if (!base) return std::nullopt;
            int i = idx->i(0);
            TypeRef bt = e.a->type;
            if (bt->is_vector()) {
                if (i < 0 || i >= bt->rows) return std::nullopt;
                Value out(e.type);
                out.copy_component(0, *base, i);
                return out;
            }
            if (bt->is_matrix()) {
                if (i < 0 || i >= bt->rows) return std::nullopt;
                Value out(e.type);
                for (int c = 0; c < bt->cols; ++c)
                    out.copy_component(c, *base, i * bt->cols + c);
                return out;
            }
            if (bt->is_array()) {
                if (!base->array || i < 0 || i >= static_cast<int>(base->array->elements.size()))
                    return std::nullopt;
                return base->array->elements[i];
            }
            return std::nullopt;
        }
        case ExprKind::Unary: {
            if (e.text == "++" || e.text == "--") {
                AbsVal cur = read_lvalue(*e.a, f);
                AbsVal next;
                if (cur) {
                    Value one = one_like(*cur);
                    next = eval_binary(e.text == "++" ? "+" : "-", *cur, one);
                }
                write_lvalue(*e.a, f, next);
                return e.postfix ? cur : next;
            }
            AbsVal v = eval(*e.a, f);
            if (!v) return std::nullopt;
            return eval_unary(e.text, *v);
        }
        case ExprKind::Binary: {
            AbsVal a = eval(*e.a, f);
            AbsVal b = eval(*e.b, f);
            bool dynamic = !a || !b;
            if (dynamic && e.type->is_int() && (e.text == "/" || e.text == "%"))
                issue(e.loc, ScanIssue::Kind::DynamicIntDiv,
                      "integer '" + e.text + "' needs compile-time operands");
            if (dynamic) return std::nullopt;
            return eval_binary(e.text, *a, *b);
        }
        case ExprKind::Compare: {
            AbsVal a = eval(*e.a, f);
            AbsVal b = eval(*e.b, f);
            if (!a || !b) return std::nullopt;
            return eval_compare(e.text, *a, *b, e.type);
        }
        case ExprKind::Logical: {
            AbsVal a = eval(*e.a, f);
            if (a && a->fully_written()) {
                bool av = a->b(0);
                if (e.text == "&&" && !av) return Value::scalar_bool(e.type, false);
                if (e.text == "||" && av) return Value::scalar_bool(e.type, true);
                return eval(*e.b, f);
            }
            // Dynamic left side: the right side must be effect-free, since
            // the lowered form always evaluates it.
            if (has_effects(*e.b))
                issue(e.loc, ScanIssue::Kind::DynamicIf,
                      "side effects on the right of '" + e.text +
                          "' with a run-time condition");
            eval(*e.b, f);
            return std::nullopt;
        }
        case ExprKind::Cond: {
            AbsVal cond = eval(*e.a, f);
            if (cond && cond->fully_written())
                return cond->b(0) ? eval(*e.b, f) : eval(*e.c, f);
            if (has_effects(*e.b) || has_effects(*e.c))
                issue(e.loc, ScanIssue::Kind::DynamicIf,
                      "side effects in '?:' arms with a run-time condition");
            eval(*e.b, f);
            eval(*e.c, f);
            return std::nullopt;
        }
        case ExprKind::Comma: {
            eval(*e.a, f);
            return eval(*e.b, f);
        }
        case ExprKind::Assign: {
            AbsVal rhs = eval(*e.b, f);
            AbsVal result = rhs;
            if (e.text != "=") {
                AbsVal cur = read_lvalue(*e.a, f);
                if (cur && rhs) {
                    std::string op(1, e.text[0]);
                    result = eval_binary(op, *cur, *rhs);
                } else {
                    result = std::nullopt;
                }
            }
            write_lvalue(*e.a, f, result);
            return result;
        }
        case ExprKind::Call: {
            std::vector<AbsVal> args;
            for (const auto& a : e.args) args.push_back(eval(*a, f));
            if (e.is_constructor) return fold_constructor(e, args);
            if (e.builtin_overload >= 0) {
                for (const auto& a : args)
                    if (!a || !a->fully_written()) return std::nullopt;
                std::vector<Value> vals;
                for (auto& a : args) vals.push_back(*a);
                return eval_builtin(tt_.builtins.overload(e.builtin_overload), vals, tt_.types);
            }
            if (e.user_function >= 0) {
                const FunctionDecl& callee = tt_.tree.functions[e.user_function];
                // out parameters start unwritten.
                for (size_t i = 0; i < args.size(); ++i)
                    if (callee.params[i].is_out()) args[i] = Value(callee.params[i].type);
                AbsVal ret;
                Sig sig = call(e.user_function, args, ret);
                for (size_t i = 0; i < e.args.size(); ++i)
                    if (callee.params[i].is_output()) write_lvalue(*e.args[i], f, args[i]);
                if (sig == Sig::Discard) {
                    // A discard on a constant path ends the program; treat
                    // the unreachable value as dynamic.
                    return std::nullopt;
                }
                return ret;
            }
            return std::nullopt;
        }
        }
        return std::nullopt;
    }

    static Value one_like(const Value& v) {
        Value one(v.type);
        for (int i = 0; i < one.count(); ++i) {
            if (v.type->base == BaseType::Int) one.set_i(i, 1);
            else one.set_f(i, 1.0f);
        }
        return one;
    }

    AbsVal fold_constructor(const Expr& e, const std::vector<AbsVal>& args) {
        for (const auto& a : args)
            if (!a || !a->fully_written()) return std::nullopt;
        Value out(e.type);
        if (e.type->is_matrix() && static_cast<int>(args.size()) == e.type->rows &&
            args[0]->type->is_vector()) {
            int idx = 0;
            for (const auto& a : args)
                for (int c = 0; c < a->count(); ++c) out.copy_component(idx++, *a, c);
            return out;
        }
        int idx = 0;
        for (const auto& a : args) {
            for (int c = 0; c < a->count(); ++c) {
                if (a->type->base == e.type->base) {
                    out.copy_component(idx, *a, c);
                } else {
                    out.set_from_double(idx, a->as_double(c));
                }
                ++idx;
            }
        }
        return out;
    }

    AbsVal read_lvalue(const Expr& e, Frame& f) { return eval(e, f); }

    // Writes through an lvalue chain; a dynamic value or dynamic path
    // poisons the root variable.
    void write_lvalue(const Expr& e, Frame& f, const AbsVal& v) {
        if (e.kind == ExprKind::Ident) {
            AbsVal* slot = nullptr;
            if (e.ref_kind == RefKind::Local) slot = &f.locals[e.ref_slot];
            else if (e.ref_kind == RefKind::Param) slot = &f.params[e.ref_slot];
            if (!slot) return;
            if (!v) {
                *slot = std::nullopt;
                return;
            }
            if (v->type == e.type) {
                *slot = v;
            } else {
                try {
                    *slot = convert_value(*v, e.type);
                } catch (const VmError&) {
                    *slot = std::nullopt;
                }
            }
            return;
        }
        if (e.kind == ExprKind::Member && e.member_access == MemberAccess::Swizzle) {
            update_numeric(e, f, v, [&](Value& base, const Value& val) {
                for (size_t i = 0; i < e.swizzle.size(); ++i)
                    base.copy_component(e.swizzle[i], val, static_cast<int>(i));
            });
            return;
        }
        if (e.kind == ExprKind::Member && e.member_access == MemberAccess::MatrixElement) {
            update_numeric(e, f, v, [&](Value& base, const Value& val) {
                base.copy_component(e.matrix_row * e.a->type->cols + e.matrix_col, val, 0);
            });
            return;
        }
        // Field, array element, vector element writes: fold when everything
        // is known, else poison the root.
        poison_root(e, f);
    }

    template <typename Update>
    void update_numeric(const Expr& e, Frame& f, const AbsVal& v, Update&& update) {
        AbsVal base = eval_root_ref(*e.a, f);
        if (!base || !v) {
            poison_root(e, f);
            return;
        }
        Value updated = *base;
        update(updated, *v);
        write_lvalue(*e.a, f, updated);
    }

    // Reads the base of a partial write without failing on unwritten
    // components (the base may be legitimately half-initialized).
    AbsVal eval_root_ref(const Expr& e, Frame& f) {
        if (e.kind == ExprKind::Ident) {
            if (e.ref_kind == RefKind::Local) return f.locals[e.ref_slot];
            if (e.ref_kind == RefKind::Param) return f.params[e.ref_slot];
            return std::nullopt;
        }
        return eval(e, f);
    }

    void poison_root(const Expr& e, Frame& f) {
        const Expr* root = &e;
        while (root->kind == ExprKind::Member || root->kind == ExprKind::Index)
            root = root->a.get();
        if (root->kind != ExprKind::Ident) return;
        if (root->ref_kind == RefKind::Local) f.locals[root->ref_slot] = std::nullopt;
        if (root->ref_kind == RefKind::Param) f.params[root->ref_slot] = std::nullopt;
    }

    bool has_effects(const Expr& e) {
        if (e.kind == ExprKind::Assign) return true;
        if (e.kind == ExprKind::Unary && (e.text == "++" || e.text == "--")) return true;
        if (e.kind == ExprKind::Call && e.user_function >= 0) {
            const FunctionDecl& callee = tt_.tree.functions[e.user_function];
            for (const auto& p : callee.params)
                if (p.is_output()) return true;
            if (tt_.fn_uses_discard[e.user_function]) return true;
        }
        for (const auto& a : e.args)
            if (has_effects(*a)) return true;
        if (e.a && has_effects(*e.a)) return true;
        if (e.b && has_effects(*e.b)) return true;
        if (e.c && has_effects(*e.c)) return true;
        return false;
    }
};

}  // namespace

std::vector<Value> evaluate_globals(const TypedTree& tt) {
    std::vector<Value> out;
    struct GlobalEval {
        const TypedTree& tt;
        const std::vector<Value>& done;

        Value eval(const Expr& e) {
            switch (e.kind) {
            case ExprKind::IntLit:
                return Value::scalar_int(e.type, static_cast<int32_t>(e.number));
            case ExprKind::FloatLit:
                return Value::scalar_float(e.type, static_cast<float>(e.number));
            case ExprKind::BoolLit: return Value::scalar_bool(e.type, e.bvalue);
            case ExprKind::Ident:
                if (e.ref_kind == RefKind::Global) return done[e.ref_slot];
                throw VmError("global initializers may reference earlier globals only");
            case ExprKind::Convert:
            case ExprKind::Smear: return convert_value(eval(*e.a), e.type);
            case ExprKind::Member: {
                Value v = eval(*e.a);
                if (e.member_access == MemberAccess::Swizzle) {
                    Value outv(e.type);
                    for (size_t i = 0; i < e.swizzle.size(); ++i)
                        outv.copy_component(static_cast<int>(i), v, e.swizzle[i]);
                    return outv;
                }
                if (e.member_access == MemberAccess::MatrixElement) {
                    Value outv(e.type);
                    outv.copy_component(0, v, e.matrix_row * e.a->type->cols + e.matrix_col);
                    return outv;
                }
                throw VmError("unsupported global initializer");
            }
            case ExprKind::Unary:
                if (e.text == "+" || e.text == "-" || e.text == "!")
                    return eval_unary(e.text, eval(*e.a));
                throw VmError("unsupported global initializer");
            case ExprKind::Binary: return eval_binary(e.text, eval(*e.a), eval(*e.b));
            case ExprKind::Compare: return eval_compare(e.text, eval(*e.a), eval(*e.b), e.type);
            case ExprKind::Cond:
                return eval(*e.a).b(0) ? eval(*e.b) : eval(*e.c);
            case ExprKind::Call: {
                if (e.is_constructor) {
                    Value outv(e.type);
                    int idx = 0;
                    for (const auto& a : e.args) {
                        Value av = eval(*a);
                        for (int c = 0; c < av.count(); ++c) {
                            if (av.type->base == e.type->base) outv.copy_component(idx, av, c);
                            else outv.set_from_double(idx, av.as_double(c));
                            ++idx;
                        }
                    }
                    return outv;
                }
                if (e.builtin_overload >= 0) {
                    std::vector<Value> args;
                    for (const auto& a : e.args) args.push_back(eval(*a));
                    return eval_builtin(tt.builtins.overload(e.builtin_overload), args,
                                        tt.types);
                }
                throw VmError("global initializers cannot call functions");
            }
            default: throw VmError("unsupported global initializer");
            }
        }
    };
    GlobalEval ge{tt, out};
    for (const auto& g : tt.tree.globals) {
        if (g.init && g.type) {
            out.push_back(ge.eval(*g.init));
        } else {
            out.emplace_back();
        }
    }
    return out;
}

ScanReport scan_control_flow(const TypedTree& tt, bool allow_discard_guard) {
    Scanner scanner(tt, allow_discard_guard);
    return scanner.run();
}

}  // namespace cg

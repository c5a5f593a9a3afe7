#include "cg/sema.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <map>
#include <set>

namespace cg {

// ---------------------------------------------------------------------------
// Conversions
// ---------------------------------------------------------------------------

namespace {

// Widening steps between scalar bases; -1 when not implicit. Literal floats
// may narrow to half/fixed so "half h = 0.5;" works without a suffix.
int base_hops(BaseType from, BaseType to, bool literal) {
    if (from == to) return 0;
    switch (from) {
    case BaseType::Int:
        if (to == BaseType::Float) return 1;
        if (to == BaseType::Double) return 2;
        if (literal && (to == BaseType::Half || to == BaseType::Fixed)) return 1;
        return -1;
    case BaseType::Half:
    case BaseType::Fixed:
        if (to == BaseType::Float) return 1;
        if (to == BaseType::Double) return 2;
        return -1;
    case BaseType::Float:
        if (to == BaseType::Double) return 1;
        if (literal && (to == BaseType::Half || to == BaseType::Fixed)) return 1;
        return -1;
    case BaseType::Double:
    case BaseType::Bool:
        return -1;
    }
    return -1;
}

bool is_scalarish(TypeRef t) {
    return t->is_scalar() || (t->is_vector() && t->rows == 1);
}

}  // namespace

int conversion_cost(TypeRef from, TypeRef to, bool from_literal) {
    if (from == to) return 0;
    if (!from || !to || !from->is_numeric() || !to->is_numeric()) return -1;
    int hops = base_hops(from->base, to->base, from_literal);
    if (hops < 0) return -1;
    if (is_scalarish(from)) {
        if (is_scalarish(to)) return hops;            // includes the free reshape
        return hops + 1;                              // smear to vector/matrix
    }
    if (from->kind == to->kind && from->rows == to->rows && from->cols == to->cols)
        return hops;  // component-wise base conversion
    return -1;
}

// ---------------------------------------------------------------------------
// Swizzles and write masks
// ---------------------------------------------------------------------------

std::optional<std::vector<int>> parse_swizzle(std::string_view text, int source_length,
                                              std::string& error) {
    if (text.empty() || text.size() > 4) {
        error = "swizzle must name 1 to 4 components";
        return std::nullopt;
    }
    static const std::string_view xyzw = "xyzw";
    static const std::string_view rgba = "rgba";
    int set = -1;  // 0 = xyzw, 1 = rgba
    std::vector<int> comps;
    for (char c : text) {
        size_t x = xyzw.find(c);
        size_t r = rgba.find(c);
        int this_set;
        int idx;
        if (x != std::string_view::npos) {
            this_set = 0;
            idx = static_cast<int>(x);
        } else if (r != std::string_view::npos) {
            this_set = 1;
            idx = static_cast<int>(r);
        } else {
            error = std::string("invalid swizzle letter '") + c + "'";
            return std::nullopt;
        }
        // 'a' belongs to rgba only, 'x'..'w' to xyzw only; no mixing.
        if (set == -1) set = this_set;
        if (set != this_set) {
            error = "swizzle mixes the xyzw and rgba letter sets";
            return std::nullopt;
        }
        if (idx >= source_length) {
            error = std::string("component '") + c + "' is out of range for length " +
                    std::to_string(source_length);
            return std::nullopt;
        }
        comps.push_back(idx);
    }
    return comps;
}

TypeRef swizzle_type(TypeRef base, std::string_view text, const TypeArena& types,
                     std::string& error) {
    if (!base || !(base->is_scalar() || base->is_vector())) {
        error = "swizzle applies to scalars and vectors";
        return nullptr;
    }
    auto comps = parse_swizzle(text, base->length(), error);
    if (!comps) return nullptr;
    if (comps->size() == 1) return types.scalar(base->base);
    return types.vector(base->base, static_cast<int>(comps->size()));
}

std::optional<std::vector<int>> validate_write_mask(TypeRef lhs, std::string_view mask,
                                                    std::string& error) {
    if (!lhs || !(lhs->is_vector() || lhs->is_scalar())) {
        error = "write mask applies to vectors";
        return std::nullopt;
    }
    auto comps = parse_swizzle(mask, lhs->length(), error);
    if (!comps) return std::nullopt;
    std::set<int> seen;
    for (int c : *comps) {
        if (!seen.insert(c).second) {
            error = "duplicate component in write mask";
            return std::nullopt;
        }
    }
    return comps;
}

// ---------------------------------------------------------------------------
// Overload resolution
// ---------------------------------------------------------------------------

OverloadResult resolve_overload(const std::vector<TypeRef>& args,
                                const std::vector<FunctionSignature>& candidates) {
    OverloadResult result;
    int best_cost = -1;
    int best_index = -1;
    bool tie = false;
    for (size_t ci = 0; ci < candidates.size(); ++ci) {
        const FunctionSignature& sig = candidates[ci];
        if (sig.params.size() != args.size()) continue;
        int cost = 0;
        bool viable = true;
        for (size_t a = 0; a < args.size(); ++a) {
            uint8_t q = sig.params[a].qualifiers;
            bool is_out = q & (static_cast<uint8_t>(Qualifier::Out) |
                               static_cast<uint8_t>(Qualifier::InOut));
            if (is_out) {
                // Copy-back parameters take the exact type only.
                if (args[a] != sig.params[a].type) {
                    viable = false;
                    break;
                }
                continue;
            }
            int c = conversion_cost(args[a], sig.params[a].type);
            if (c < 0) {
                viable = false;
                break;
            }
            cost += c;
        }
        if (!viable) continue;
        if (best_index < 0 || cost < best_cost) {
            best_cost = cost;
            best_index = static_cast<int>(ci);
            tie = false;
        } else if (cost == best_cost) {
            tie = true;
        }
    }
    if (best_index < 0) {
        result.error_code = "E_OVERLOAD";
        result.message = "no viable overload";
        return result;
    }
    if (tie) {
        result.error_code = "E_AMBIGUOUS";
        result.message = "ambiguous call; multiple overloads need " +
                         std::to_string(best_cost) + " conversions";
        return result;
    }
    result.index = best_index;
    return result;
}

std::vector<FunctionSignature> operator_candidates(const std::string& op,
                                                   const TypeArena& types) {
    std::vector<FunctionSignature> out;
    auto add = [&](TypeRef t) {
        FunctionSignature sig;
        sig.name = op;
        sig.params = {{t, 0}, {t, 0}};
        sig.return_type = t;
        sig.origin = FunctionSignature::Origin::Builtin;
        sig.index = static_cast<int>(out.size());
        out.push_back(std::move(sig));
    };
    std::vector<BaseType> bases;
    if (op == "%") {
        bases = {BaseType::Int};
    } else {
        bases = {BaseType::Float, BaseType::Half, BaseType::Fixed, BaseType::Double,
                 BaseType::Int};
    }
    for (BaseType b : bases) {
        add(types.scalar(b));
        for (int n = 2; n <= 4; ++n) add(types.vector(b, n));
        for (int r = 1; r <= 4; ++r)
            for (int c = 1; c <= 4; ++c) add(types.matrix(b, r, c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Recursion detection
// ---------------------------------------------------------------------------

std::optional<std::vector<std::string>> find_call_cycle(
    const std::vector<std::vector<int>>& call_graph, const SyntaxTree& tree) {
    int n = static_cast<int>(call_graph.size());
    std::vector<int> state(n, 0);  // 0 unvisited, 1 on stack, 2 done
    std::vector<int> stack;
    std::vector<std::string> cycle;

    std::function<bool(int)> dfs = [&](int f) {
        state[f] = 1;
        stack.push_back(f);
        for (int callee : call_graph[f]) {
            if (state[callee] == 1) {
                auto it = std::find(stack.begin(), stack.end(), callee);
                for (; it != stack.end(); ++it) cycle.push_back(tree.functions[*it].name);
                return true;
            }
            if (state[callee] == 0 && dfs(callee)) return true;
        }
        stack.pop_back();
        state[f] = 2;
        return false;
    };
    for (int f = 0; f < n; ++f)
        if (state[f] == 0 && dfs(f)) return cycle;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// The checker
// ---------------------------------------------------------------------------

namespace {

struct Binding {
    RefKind kind = RefKind::Unresolved;
    int slot = -1;
    TypeRef type = nullptr;
    uint8_t qualifiers = 0;
};

// Definite-assignment state: per local slot / parameter index, a bitmask of
// components known to be written on every path reaching this point.
struct Flow {
    std::map<int, uint16_t> locals;
    std::map<int, uint16_t> params;
    bool alive = true;

    static uint16_t full_mask(TypeRef t) {
        int n = t->is_numeric() ? t->component_count() : 1;
        return static_cast<uint16_t>((1u << n) - 1u);
    }
    uint16_t get(RefKind kind, int slot) const {
        const auto& m = kind == RefKind::Param ? params : locals;
        auto it = m.find(slot);
        return it == m.end() ? 0 : it->second;
    }
    void mark(RefKind kind, int slot, uint16_t bits) {
        auto& m = kind == RefKind::Param ? params : locals;
        m[slot] |= bits;
    }
    // Keeps only assignments common to both paths.
    static Flow join(const Flow& a, const Flow& b) {
        if (!a.alive) return b;
        if (!b.alive) return a;
        Flow out;
        for (const auto& [k, v] : a.locals) {
            auto it = b.locals.find(k);
            if (it != b.locals.end()) out.locals[k] = v & it->second;
        }
        for (const auto& [k, v] : a.params) {
            auto it = b.params.find(k);
            if (it != b.params.end()) out.params[k] = v & it->second;
        }
        out.alive = true;
        return out;
    }
};

bool stmt_has_break_or_continue(const Stmt& s) {
    switch (s.kind) {
    case StmtKind::Break:
    case StmtKind::Continue: return true;
    case StmtKind::For:
    case StmtKind::While:
    case StmtKind::DoWhile: return false;  // bound to the inner loop
    case StmtKind::If:
    case StmtKind::Block: {
        for (const auto& b : s.body)
            if (stmt_has_break_or_continue(*b)) return true;
        for (const auto& b : s.else_body)
            if (stmt_has_break_or_continue(*b)) return true;
        return false;
    }
    default: return false;
    }
}

bool expr_has_side_effects(const Expr& e) {
    switch (e.kind) {
    case ExprKind::Assign: return true;
    case ExprKind::Unary:
        if (e.text == "++" || e.text == "--") return true;
        break;
    case ExprKind::Call:
        // Builtins are pure; user calls may write out/inout arguments, which
        // resolve later, so treat every user call conservatively only when
        // it has lvalue-shaped arguments bound to out params. Simpler: any
        // call with an out-qualified resolved signature is side-effecting;
        // unresolved calls count as pure for scanning reads.
        break;
    default: break;
    }
    for (const auto& a : e.args)
        if (expr_has_side_effects(*a)) return true;
    if (e.a && expr_has_side_effects(*e.a)) return true;
    if (e.b && expr_has_side_effects(*e.b)) return true;
    if (e.c && expr_has_side_effects(*e.c)) return true;
    return false;
}

class Checker {
public:
    Checker(SyntaxTree& tree, TypeArena& types, BuiltinCatalog& builtins, Diagnostics& diags)
        : tree_(tree), types_(types), builtins_(builtins), diags_(diags) {}

    bool run(const std::string& entry, int& entry_index,
             std::vector<std::vector<int>>& call_graph, std::vector<bool>& uses_discard) {
        check_records();
        check_globals();

        // Register every function signature first so helpers can call
        // forward and mutual recursion resolves (and is then rejected).
        for (size_t i = 0; i < tree_.functions.size(); ++i) register_function(i);

        call_graph_.assign(tree_.functions.size(), {});
        direct_discard_.assign(tree_.functions.size(), false);
        for (size_t i = 0; i < tree_.functions.size(); ++i) check_function(i);

        entry_index = tree_.function_index(entry);
        if (entry_index < 0) {
            diags_.error("E_UNDECLARED", {}, "entry function '" + entry + "' not found");
            return false;
        }

        if (auto cycle = find_call_cycle(call_graph_, tree_)) {
            std::string names;
            for (const auto& n : *cycle) names += (names.empty() ? "" : " -> ") + n;
            diags_.error("E_RECURSION", tree_.functions[0].loc,
                         "recursive call cycle: " + names);
        }

        // Propagate discard through the call graph.
        uses_discard.assign(tree_.functions.size(), false);
        for (size_t i = 0; i < tree_.functions.size(); ++i)
            uses_discard[i] = reaches_discard(static_cast<int>(i), {});
        call_graph = call_graph_;
        return !diags_.has_errors();
    }

private:
    SyntaxTree& tree_;
    TypeArena& types_;
    BuiltinCatalog& builtins_;
    Diagnostics& diags_;

    std::vector<std::vector<Binding>> scopes_;  // name bindings, innermost last
    std::vector<std::vector<std::string>> scope_names_;
    std::vector<FunctionSignature> user_sigs_;
    std::vector<std::vector<int>> call_graph_;
    std::vector<bool> direct_discard_;
    FunctionDecl* current_fn_ = nullptr;
    int current_fn_index_ = -1;
    int next_slot_ = 0;
    int loop_depth_ = 0;

    bool reaches_discard(int fn, std::vector<int> seen) {
        if (direct_discard_[fn]) return true;
        for (int s : seen)
            if (s == fn) return false;
        seen.push_back(fn);
        for (int callee : call_graph_[fn])
            if (reaches_discard(callee, seen)) return true;
        return false;
    }

    // ---- scope helpers ----

    void push_scope() {
        scopes_.emplace_back();
        scope_names_.emplace_back();
    }
    void pop_scope() {
        scopes_.pop_back();
        scope_names_.pop_back();
    }
    const Binding* lookup(const std::string& name) const {
        for (size_t i = scopes_.size(); i-- > 0;) {
            for (size_t j = 0; j < scope_names_[i].size(); ++j)
                if (scope_names_[i][j] == name) return &scopes_[i][j];
        }
        return nullptr;
    }
    bool declare(const std::string& name, Binding b, Location loc) {
        for (size_t j = 0; j < scope_names_.back().size(); ++j) {
            if (scope_names_.back()[j] == name) {
                diags_.error("E_REDEFINED", loc, "'" + name + "' is already declared");
                return false;
            }
        }
        scope_names_.back().push_back(name);
        scopes_.back().push_back(b);
        return true;
    }

    TypeRef resolve_type(const std::string& name, Location loc) {
        TypeRef t = types_.by_name(name);
        if (!t) {
            diags_.error("E_UNDECLARED", loc, "unknown type '" + name + "'");
            return nullptr;
        }
        return t;
    }

    // ---- top-level declarations ----

    void check_records() {
        for (auto& rec : tree_.records) {
            if (types_.by_name(rec.name)) {
                diags_.error("E_REDEFINED", rec.loc, "type '" + rec.name + "' already exists");
                continue;
            }
            std::vector<RecordField> fields;
            bool ok = true;
            for (const auto& [tname, fname] : rec.fields) {
                TypeRef ft = resolve_type(tname, rec.loc);
                if (!ft) {
                    ok = false;
                    continue;
                }
                if (!ft->is_numeric() && !ft->is_record()) {
                    diags_.error("E_UNSUPPORTED", rec.loc,
                                 "field '" + fname + "' must have a numeric or structure type");
                    ok = false;
                    continue;
                }
                for (const auto& f : fields)
                    if (f.name == fname) {
                        diags_.error("E_REDEFINED", rec.loc, "duplicate field '" + fname + "'");
                        ok = false;
                    }
                fields.push_back({fname, ft});
            }
            if (ok) rec.type = types_.record(rec.name, std::move(fields));
        }
    }

    void check_globals() {
        push_scope();  // global scope stays alive for the whole run
        for (size_t i = 0; i < tree_.globals.size(); ++i) {
            auto& g = tree_.globals[i];
            TypeRef t = resolve_type(g.type_name, g.loc);
            if (!t) continue;
            if (!t->is_numeric()) {
                diags_.error("E_UNSUPPORTED", g.loc, "globals must have numeric types");
                continue;
            }
            if (!g.init) {
                diags_.error("E_UNINIT", g.loc,
                             "global '" + g.name + "' needs a constant initializer");
                continue;
            }
            Flow flow;
            check_expr(*g.init, flow);
            g.init = coerce(std::move(g.init), t, g.loc);
            g.type = t;
            Binding b;
            b.kind = RefKind::Global;
            b.slot = static_cast<int>(i);
            b.type = t;
            declare(g.name, b, g.loc);
        }
    }

    void register_function(size_t index) {
        auto& fn = tree_.functions[index];
        fn.return_type = resolve_type(fn.return_type_name, fn.loc);
        if (fn.return_type && !fn.return_type->is_void() && !fn.return_type->is_numeric() &&
            !fn.return_type->is_record())
            diags_.error("E_UNSUPPORTED", fn.loc,
                         "functions cannot return " + TypeArena::name_of(fn.return_type));
        FunctionSignature sig;
        sig.name = fn.name;
        sig.return_type = fn.return_type;
        sig.origin = FunctionSignature::Origin::User;
        sig.index = static_cast<int>(index);
        for (auto& p : fn.params) {
            TypeRef t = resolve_type(p.type_name, p.loc);
            if (t) {
                for (size_t d = p.array_dims.size(); d-- > 0;)
                    t = types_.array_of(t, p.array_dims[d]);
            }
            p.type = t;
            if (p.is_uniform() && (p.is_out() || p.is_inout()))
                diags_.error("E_UNSUPPORTED", p.loc,
                             "'uniform' excludes 'out' and 'inout' on parameter '" + p.name +
                                 "'");
            if (p.is_out() && p.is_inout())
                diags_.error("E_UNSUPPORTED", p.loc,
                             "parameter '" + p.name + "' cannot be both out and inout");
            sig.params.push_back({t, p.qualifiers});
        }
        // Identical signatures collide; distinct parameter lists overload.
        for (const auto& existing : user_sigs_) {
            if (existing.name != sig.name || existing.params.size() != sig.params.size())
                continue;
            bool same = true;
            for (size_t a = 0; a < sig.params.size(); ++a)
                if (existing.params[a].type != sig.params[a].type) same = false;
            if (same)
                diags_.error("E_REDEFINED", fn.loc,
                             "function '" + fn.name + "' redefined with the same parameters");
        }
        user_sigs_.push_back(std::move(sig));
    }

    void check_function(size_t index) {
        auto& fn = tree_.functions[index];
        current_fn_ = &fn;
        current_fn_index_ = static_cast<int>(index);
        next_slot_ = 0;
        push_scope();
        Flow flow;
        for (size_t p = 0; p < fn.params.size(); ++p) {
            auto& param = fn.params[p];
            if (!param.type) continue;
            if (param.type->is_void()) {
                diags_.error("E_TYPE_MISMATCH", param.loc, "parameter of void type");
                continue;
            }
            if (param.type->is_sampler() && !param.is_uniform())
                diags_.error("E_UNSUPPORTED", param.loc,
                             "sampler parameters must be uniform");
            Binding b;
            b.kind = RefKind::Param;
            b.slot = static_cast<int>(p);
            b.type = param.type;
            b.qualifiers = param.qualifiers;
            declare(param.name, b, param.loc);
            // Everything but pure out parameters arrives initialized.
            if (!param.is_out())
                flow.mark(RefKind::Param, static_cast<int>(p), Flow::full_mask(param.type));
        }
        check_stmts(fn.body->body, flow);
        if (flow.alive) {
            if (fn.return_type && !fn.return_type->is_void()) {
                diags_.error("E_UNINIT", fn.loc,
                             "function '" + fn.name + "' does not return a value on every path");
            } else {
                check_outs_assigned(flow, fn.loc);
            }
        }
        fn.num_locals = next_slot_;
        pop_scope();
        current_fn_ = nullptr;
    }

    void check_outs_assigned(const Flow& flow, Location loc) {
        for (size_t p = 0; p < current_fn_->params.size(); ++p) {
            const auto& param = current_fn_->params[p];
            if (!param.is_out() || !param.type) continue;
            uint16_t need = Flow::full_mask(param.type);
            if ((flow.get(RefKind::Param, static_cast<int>(p)) & need) != need)
                diags_.error("E_UNINIT", loc,
                             "out parameter '" + param.name +
                                 "' is not assigned on every path that returns");
        }
    }

    // ---- statements ----

    void check_stmts(const std::vector<StmtPtr>& stmts, Flow& flow) {
        push_scope();
        for (const auto& s : stmts) check_stmt(*s, flow);
        pop_scope();
    }

    void check_stmt(Stmt& s, Flow& flow) {
        switch (s.kind) {
        case StmtKind::Decl: {
            TypeRef t = resolve_type(s.type_name, s.loc);
            if (!t) return;
            for (size_t d = s.array_dims.size(); d-- > 0;) {
                if (s.array_dims[d] <= 0) {
                    diags_.error("E_TYPE_MISMATCH", s.loc, "array extent must be positive");
                    return;
                }
                t = types_.array_of(t, s.array_dims[d]);
            }
            if (t->is_void() || t->is_sampler()) {
                diags_.error("E_UNSUPPORTED", s.loc,
                             "cannot declare a local of type " + TypeArena::name_of(t));
                return;
            }
            if (s.init) {
                if (!t->is_numeric()) {
                    diags_.error("E_UNSUPPORTED", s.loc,
                                 "initializers apply to numeric declarations only");
                    return;
                }
                check_expr(*s.init, flow);
                s.init = coerce(std::move(s.init), t, s.loc);
            }
            s.decl_type = t;
            s.decl_slot = next_slot_++;
            Binding b;
            b.kind = RefKind::Local;
            b.slot = s.decl_slot;
            b.type = t;
            declare(s.name, b, s.loc);
            if (s.init) flow.mark(RefKind::Local, s.decl_slot, Flow::full_mask(t));
            return;
        }
        case StmtKind::ExprStmt:
            check_expr(*s.expr, flow);
            return;
        case StmtKind::If: {
            check_condition(s.expr, flow);
            Flow then_flow = flow;
            check_stmts(s.body, then_flow);
            Flow else_flow = flow;
            check_stmts(s.else_body, else_flow);
            flow = Flow::join(then_flow, else_flow);
            return;
        }
        case StmtKind::While: {
            check_condition(s.expr, flow);
            Flow body_flow = flow;
            ++loop_depth_;
            check_stmts(s.body, body_flow);
            --loop_depth_;
            // Zero-trip possible: the loop contributes nothing definite.
            return;
        }
        case StmtKind::DoWhile: {
            Flow body_flow = flow;
            bool escapes = false;
            for (const auto& b : s.body) escapes = escapes || stmt_has_break_or_continue(*b);
            ++loop_depth_;
            check_stmts(s.body, body_flow);
            --loop_depth_;
            check_condition(s.expr, body_flow.alive ? body_flow : flow);
            // The body runs at least once; keep its assignments unless a
            // break/continue can bypass part of it.
            if (!escapes && body_flow.alive) flow = body_flow;
            return;
        }
        case StmtKind::For: {
            push_scope();
            if (s.init_stmt) check_stmt(*s.init_stmt, flow);
            if (s.expr) check_condition(s.expr, flow);
            Flow body_flow = flow;
            ++loop_depth_;
            check_stmts(s.body, body_flow);
            if (s.step) check_expr(*s.step, body_flow.alive ? body_flow : flow);
            --loop_depth_;
            pop_scope();
            return;
        }
        case StmtKind::Break:
        case StmtKind::Continue:
            if (loop_depth_ == 0)
                diags_.error("E_SYNTAX", s.loc,
                             s.kind == StmtKind::Break ? "break outside a loop"
                                                       : "continue outside a loop");
            flow.alive = false;
            return;
        case StmtKind::Return: {
            TypeRef ret = current_fn_->return_type;
            if (s.expr) {
                if (!ret || ret->is_void()) {
                    diags_.error("E_TYPE_MISMATCH", s.loc, "void function returns a value");
                } else {
                    check_expr(*s.expr, flow);
                    s.expr = coerce(std::move(s.expr), ret, s.loc);
                }
            } else if (ret && !ret->is_void()) {
                diags_.error("E_TYPE_MISMATCH", s.loc, "missing return value");
            }
            check_outs_assigned(flow, s.loc);
            flow.alive = false;
            return;
        }
        case StmtKind::Discard:
            direct_discard_[current_fn_index_] = true;
            flow.alive = false;
            return;
        case StmtKind::Block:
            check_stmts(s.body, flow);
            return;
        }
    }

    void check_condition(ExprPtr& e, Flow& flow) {
        check_expr(*e, flow);
        if (e->type && !(e->type->is_bool() && e->type->length() == 1))
            diags_.error("E_TYPE_MISMATCH", e->loc,
                         "condition must be bool, got " + TypeArena::name_of(e->type));
    }

    // ---- expressions ----

    TypeRef error_type() { return types_.scalar(BaseType::Float); }

    // Wraps e in Convert/Smear nodes to reach `target`; reports
    // E_TYPE_MISMATCH when no implicit path exists.
    ExprPtr coerce(ExprPtr e, TypeRef target, Location loc) {
        if (!e->type || !target || e->type == target) return e;
        bool literal = e->kind == ExprKind::IntLit || e->kind == ExprKind::FloatLit;
        int cost = conversion_cost(e->type, target, literal);
        if (cost < 0) {
            diags_.error("E_TYPE_MISMATCH", loc,
                         "cannot convert " + TypeArena::name_of(e->type) + " to " +
                             TypeArena::name_of(target));
            return e;
        }
        bool smear = is_scalarish(e->type) && !is_scalarish(target);
        if (smear) {
            // Base-convert as a scalar first, then replicate.
            TypeRef scalar_target = types_.scalar(target->base);
            if (e->type != scalar_target) {
                auto conv = std::make_unique<Expr>(ExprKind::Convert, e->loc);
                conv->type = scalar_target;
                conv->a = std::move(e);
                e = std::move(conv);
            }
            auto node = std::make_unique<Expr>(ExprKind::Smear, e->loc);
            node->type = target;
            node->a = std::move(e);
            return node;
        }
        auto node = std::make_unique<Expr>(ExprKind::Convert, e->loc);
        node->type = target;
        node->a = std::move(e);
        return node;
    }

    // Retypes bare float literals next to half/fixed operands so "h * 0.5"
    // stays in half.
    void adopt_literal_base(ExprPtr& lit, TypeRef other) {
        if (!other || !other->is_numeric()) return;
        if (lit->kind == ExprKind::FloatLit && lit->suffix == 0 &&
            (other->base == BaseType::Half || other->base == BaseType::Fixed))
            lit->type = types_.scalar(other->base);
    }

    void check_expr(Expr& e, Flow& flow) {
        switch (e.kind) {
        case ExprKind::IntLit:
            e.type = types_.scalar(BaseType::Int);
            return;
        case ExprKind::FloatLit:
            switch (e.suffix) {
            case 'h': e.type = types_.scalar(BaseType::Half); break;
            case 'x': e.type = types_.scalar(BaseType::Fixed); break;
            default: e.type = types_.scalar(BaseType::Float); break;
            }
            return;
        case ExprKind::BoolLit:
            e.type = types_.scalar(BaseType::Bool);
            return;
        case ExprKind::Ident: {
            const Binding* b = lookup(e.text);
            if (!b) {
                bool is_fn = builtins_.is_builtin_name(e.text);
                for (const auto& s : user_sigs_)
                    if (s.name == e.text) is_fn = true;
                if (is_fn)
                    diags_.error("E_UNSUPPORTED", e.loc,
                                 "functions are not first-class values");
                else
                    diags_.error("E_UNDECLARED", e.loc,
                                 "undeclared identifier '" + e.text + "'");
                e.type = error_type();
                return;
            }
            e.ref_kind = b->kind;
            e.ref_slot = b->slot;
            e.type = b->type ? b->type : error_type();
            check_read(e, flow, Flow::full_mask(e.type));
            return;
        }
        case ExprKind::Call:
            check_call(e, flow);
            return;
        case ExprKind::Unary:
            check_unary(e, flow);
            return;
        case ExprKind::Binary:
            check_binary(e, flow);
            return;
        case ExprKind::Compare: {
            check_expr(*e.a, flow);
            check_expr(*e.b, flow);
            adopt_literal_base(e.a, e.b->type);
            adopt_literal_base(e.b, e.a->type);
            TypeRef ta = e.a->type, tb = e.b->type;
            if (!ta->is_numeric() || !tb->is_numeric() || ta->length() != 1 ||
                tb->length() != 1 || ta->is_matrix() || tb->is_matrix() || ta->is_bool() ||
                tb->is_bool()) {
                diags_.error("E_TYPE_MISMATCH", e.loc,
                             "comparison needs scalar operands, got " +
                                 TypeArena::name_of(ta) + " and " + TypeArena::name_of(tb));
            } else {
                TypeRef common = common_scalar(ta, tb, e.loc);
                e.a = coerce(std::move(e.a), common, e.loc);
                e.b = coerce(std::move(e.b), common, e.loc);
            }
            e.type = types_.scalar(BaseType::Bool);
            return;
        }
        case ExprKind::Logical: {
            check_expr(*e.a, flow);
            // The right side may be skipped at run time; its assignments are
            // not definite.
            Flow rhs_flow = flow;
            check_expr(*e.b, rhs_flow);
            auto is_bool1 = [](TypeRef t) { return t && t->is_bool() && t->length() == 1; };
            if (!is_bool1(e.a->type) || !is_bool1(e.b->type))
                diags_.error("E_TYPE_MISMATCH", e.loc,
                             std::string("'") + e.text + "' needs bool operands");
            e.type = types_.scalar(BaseType::Bool);
            return;
        }
        case ExprKind::Assign:
            check_assign(e, flow);
            return;
        case ExprKind::Cond: {
            check_expr(*e.a, flow);
            if (!e.a->type->is_bool() || e.a->type->length() != 1)
                diags_.error("E_TYPE_MISMATCH", e.a->loc, "conditional test must be bool");
            Flow then_flow = flow;
            check_expr(*e.b, then_flow);
            Flow else_flow = flow;
            check_expr(*e.c, else_flow);
            flow = Flow::join(then_flow, else_flow);
            adopt_literal_base(e.b, e.c->type);
            adopt_literal_base(e.c, e.b->type);
            TypeRef common = common_numeric(e.b->type, e.c->type, e.loc);
            e.b = coerce(std::move(e.b), common, e.loc);
            e.c = coerce(std::move(e.c), common, e.loc);
            e.type = common;
            return;
        }
        case ExprKind::Comma:
            check_expr(*e.a, flow);
            check_expr(*e.b, flow);
            e.type = e.b->type;
            return;
        case ExprKind::Member:
            check_member(e, flow);
            return;
        case ExprKind::Index:
            check_index(e, flow);
            return;
        case ExprKind::Convert:
        case ExprKind::Smear:
            return;  // sema-inserted, already typed
        }
    }

    // Verifies components `need` of an identifier are definitely assigned.
    void check_read(const Expr& ident, Flow& flow, uint16_t need) {
        if (ident.ref_kind == RefKind::Global) return;
        if (ident.ref_kind == RefKind::Param) {
            const auto& p = current_fn_->params[ident.ref_slot];
            if (!p.is_out() && !p.is_inout()) return;  // plain inputs always set
        }
        if (!ident.type || !ident.type->is_numeric()) need = 1;
        uint16_t have = flow.get(ident.ref_kind, ident.ref_slot);
        if ((have & need) != need)
            diags_.error("E_UNINIT", ident.loc,
                         "'" + ident.text + "' may be read before it is assigned");
    }

    TypeRef common_scalar(TypeRef a, TypeRef b, Location loc) {
        if (conversion_cost(a, b) >= 0) return b;
        if (conversion_cost(b, a) >= 0) return a;
        TypeRef f = types_.scalar(BaseType::Float);
        if (conversion_cost(a, f) >= 0 && conversion_cost(b, f) >= 0) return f;
        diags_.error("E_TYPE_MISMATCH", loc,
                     "no common type for " + TypeArena::name_of(a) + " and " +
                         TypeArena::name_of(b));
        return f;
    }

    // Common type for ?: arms and similar positions, including smears.
    TypeRef common_numeric(TypeRef a, TypeRef b, Location loc) {
        if (a == b) return a;
        if (!a->is_numeric() || !b->is_numeric()) {
            diags_.error("E_TYPE_MISMATCH", loc, "operands must be numeric");
            return error_type();
        }
        int ab = conversion_cost(a, b);
        int ba = conversion_cost(b, a);
        if (ab >= 0 && (ba < 0 || ab <= ba)) return b;
        if (ba >= 0) return a;
        // Try widening both to float shape of the wider side.
        TypeRef target = nullptr;
        if (a->component_count() >= b->component_count())
            target = shaped(a, BaseType::Float);
        else
            target = shaped(b, BaseType::Float);
        if (target && conversion_cost(a, target) >= 0 && conversion_cost(b, target) >= 0)
            return target;
        diags_.error("E_TYPE_MISMATCH", loc,
                     "no common type for " + TypeArena::name_of(a) + " and " +
                         TypeArena::name_of(b));
        return error_type();
    }

    TypeRef shaped(TypeRef like, BaseType base) {
        switch (like->kind) {
        case TypeKind::Scalar: return types_.scalar(base);
        case TypeKind::Vector: return types_.vector(base, like->rows);
        case TypeKind::Matrix: return types_.matrix(base, like->rows, like->cols);
        default: return nullptr;
        }
    }

    void check_unary(Expr& e, Flow& flow) {
        if (e.text == "~") {
            diags_.error("E_RESERVED", e.loc, "bitwise operators are reserved");
            check_expr(*e.a, flow);
            e.type = error_type();
            return;
        }
        if (e.text == "++" || e.text == "--") {
            resolve_for_write(*e.a, flow);
            LValueInfo lv = check_lvalue(*e.a, flow, true);
            if (lv.ok) {
                if (!e.a->type->is_numeric() || e.a->type->is_bool())
                    diags_.error("E_TYPE_MISMATCH", e.loc,
                                 std::string("'") + e.text + "' needs a numeric operand");
                if (lv.root_kind == RefKind::Local || lv.root_kind == RefKind::Param) {
                    uint16_t have = flow.get(lv.root_kind, lv.root_slot);
                    if ((have & lv.write_bits) != lv.write_bits)
                        diags_.error("E_UNINIT", e.loc,
                                     std::string("'") + e.text +
                                         "' reads a value before assignment");
                    flow.mark(lv.root_kind, lv.root_slot, lv.write_bits);
                }
            }
            e.type = e.a->type;
            return;
        }
        check_expr(*e.a, flow);
        if (e.text == "!") {
            if (!e.a->type->is_bool() || e.a->type->length() != 1)
                diags_.error("E_TYPE_MISMATCH", e.loc, "'!' needs a bool operand");
            e.type = types_.scalar(BaseType::Bool);
            return;
        }
        // unary + -
        if (!e.a->type->is_numeric() || e.a->type->is_bool()) {
            diags_.error("E_TYPE_MISMATCH", e.loc,
                         std::string("'") + e.text + "' needs a numeric operand");
            e.type = error_type();
            return;
        }
        e.type = e.a->type;
    }

    void check_binary(Expr& e, Flow& flow) {
        if (e.text == "&" || e.text == "|" || e.text == "^" || e.text == "<<" ||
            e.text == ">>") {
            diags_.error("E_RESERVED", e.loc,
                         "bitwise and shift operators are reserved ('" + e.text + "')");
            check_expr(*e.a, flow);
            check_expr(*e.b, flow);
            e.type = error_type();
            return;
        }
        check_expr(*e.a, flow);
        check_expr(*e.b, flow);
        adopt_literal_base(e.a, e.b->type);
        adopt_literal_base(e.b, e.a->type);
        TypeRef ta = e.a->type, tb = e.b->type;
        if (!ta->is_numeric() || !tb->is_numeric() || ta->is_bool() || tb->is_bool()) {
            diags_.error("E_TYPE_MISMATCH", e.loc,
                         "'" + e.text + "' needs numeric operands, got " +
                             TypeArena::name_of(ta) + " and " + TypeArena::name_of(tb));
            e.type = error_type();
            return;
        }
        auto candidates = operator_candidates(e.text, types_);
        OverloadResult r = resolve_overload({ta, tb}, candidates);
        if (r.index < 0) {
            diags_.error(r.error_code, e.loc,
                         "operator '" + e.text + "' does not accept " + TypeArena::name_of(ta) +
                             " and " + TypeArena::name_of(tb));
            e.type = error_type();
            return;
        }
        const FunctionSignature& sig = candidates[r.index];
        e.a = coerce(std::move(e.a), sig.params[0].type, e.loc);
        e.b = coerce(std::move(e.b), sig.params[1].type, e.loc);
        e.type = sig.return_type;
    }

    // ---- lvalues ----

    struct LValueInfo {
        bool ok = false;
        TypeRef value_type = nullptr;  // type carried by the selected components
        RefKind root_kind = RefKind::Unresolved;
        int root_slot = -1;
        uint16_t write_bits = 0;  // components of the root written (numeric roots)
        bool whole_root = false;  // assignment covers the whole root value
    };

    LValueInfo check_lvalue(Expr& e, Flow& flow, bool reads_too) {
        LValueInfo info;
        switch (e.kind) {
        case ExprKind::Ident: {
            if (e.ref_kind == RefKind::Global) {
                diags_.error("E_NOT_ASSIGNABLE", e.loc,
                             "globals are constant and cannot be assigned");
                return info;
            }
            if (e.ref_kind == RefKind::Param) {
                const auto& p = current_fn_->params[e.ref_slot];
                if (p.is_uniform()) {
                    diags_.error("E_UNIFORM_WRITE", e.loc,
                                 "uniform parameter '" + e.text + "' cannot be assigned");
                    return info;
                }
            }
            if (e.ref_kind != RefKind::Local && e.ref_kind != RefKind::Param) {
                diags_.error("E_NOT_ASSIGNABLE", e.loc, "not an assignable expression");
                return info;
            }
            info.ok = true;
            info.value_type = e.type;
            info.root_kind = e.ref_kind;
            info.root_slot = e.ref_slot;
            info.write_bits = Flow::full_mask(e.type);
            info.whole_root = true;
            return info;
        }
        case ExprKind::Member: {
            // Swizzle or field on an lvalue base. The base is read-checked
            // only for the components a partial write leaves intact when
            // compounds read.
            if (e.member_access == MemberAccess::Swizzle) {
                LValueInfo base = check_lvalue(*e.a, flow, reads_too);
                if (!base.ok) return info;
                std::string err;
                auto mask = validate_write_mask(e.a->type, e.text, err);
                if (!mask) {
                    diags_.error("E_WRITE_MASK", e.loc, err);
                    return info;
                }
                info.ok = true;
                info.value_type = e.type;
                info.root_kind = base.root_kind;
                info.root_slot = base.root_slot;
                if (base.whole_root) {
                    info.whole_root = false;
                    for (int c : *mask) info.write_bits |= static_cast<uint16_t>(1u << c);
                } else {
                    // Swizzle of swizzle or of an element: be conservative,
                    // count no new definite components.
                    info.write_bits = 0;
                }
                return info;
            }
            if (e.member_access == MemberAccess::MatrixElement) {
                LValueInfo base = check_lvalue(*e.a, flow, reads_too);
                if (!base.ok) return info;
                info.ok = true;
                info.value_type = e.type;
                info.root_kind = base.root_kind;
                info.root_slot = base.root_slot;
                if (base.whole_root && e.a->type->is_matrix()) {
                    int idx = e.matrix_row * e.a->type->cols + e.matrix_col;
                    info.write_bits = static_cast<uint16_t>(1u << idx);
                }
                return info;
            }
            if (e.member_access == MemberAccess::RecordField) {
                LValueInfo base = check_lvalue(*e.a, flow, reads_too);
                if (!base.ok) return info;
                info.ok = true;
                info.value_type = e.type;
                info.root_kind = base.root_kind;
                info.root_slot = base.root_slot;
                info.write_bits = 1;  // aggregate roots track one bit
                return info;
            }
            diags_.error("E_NOT_ASSIGNABLE", e.loc, "not an assignable expression");
            return info;
        }
        case ExprKind::Index: {
            LValueInfo base = check_lvalue(*e.a, flow, reads_too);
            if (!base.ok) return info;
            info.ok = true;
            info.value_type = e.type;
            info.root_kind = base.root_kind;
            info.root_slot = base.root_slot;
            // Constant vector/matrix indices mark components; everything
            // else counts as a partial aggregate write.
            if (base.whole_root && e.a->type->is_vector() && e.b->kind == ExprKind::IntLit) {
                info.write_bits = static_cast<uint16_t>(1u << static_cast<int>(e.b->number));
            } else if (e.a->type->is_record() || e.a->type->is_array()) {
                info.write_bits = 1;
            }
            return info;
        }
        default:
            diags_.error("E_NOT_ASSIGNABLE", e.loc, "not an assignable expression");
            return info;
        }
    }

    // Types an lvalue chain without read-checking the destination; index
    // expressions within the chain are reads and check normally.
    void resolve_for_write(Expr& e, Flow& flow) {
        switch (e.kind) {
        case ExprKind::Ident: {
            const Binding* b = lookup(e.text);
            if (!b) {
                diags_.error("E_UNDECLARED", e.loc, "undeclared identifier '" + e.text + "'");
                e.type = error_type();
                return;
            }
            e.ref_kind = b->kind;
            e.ref_slot = b->slot;
            e.type = b->type ? b->type : error_type();
            return;
        }
        case ExprKind::Member:
            resolve_for_write(*e.a, flow);
            classify_member(e);
            return;
        case ExprKind::Index:
            resolve_for_write(*e.a, flow);
            check_expr(*e.b, flow);
            finish_index_typing(e);
            return;
        default:
            check_expr(e, flow);
            return;
        }
    }

    void check_assign(Expr& e, Flow& flow) {
        const std::string& op = e.text;
        if (op == "&=" || op == "|=" || op == "^=" || op == "<<=" || op == ">>=") {
            diags_.error("E_RESERVED", e.loc, "bitwise compound assignment is reserved");
            check_expr(*e.a, flow);
            check_expr(*e.b, flow);
            e.type = error_type();
            return;
        }
        bool compound = op != "=";
        resolve_for_write(*e.a, flow);
        check_expr(*e.b, flow);
        LValueInfo lv = check_lvalue(*e.a, flow, compound);
        if (!lv.ok) {
            e.type = e.a->type ? e.a->type : error_type();
            return;
        }
        TypeRef target = lv.value_type;
        if (compound) {
            // Compound assignment evaluates in the destination type.
            if (op == "%=" && !target->is_int())
                diags_.error("E_TYPE_MISMATCH", e.loc, "'%=' needs integer operands");
            if (!target->is_numeric() || target->is_bool()) {
                diags_.error("E_TYPE_MISMATCH", e.loc, "compound assignment needs numeric types");
                e.type = error_type();
                return;
            }
            // A compound write reads the destination components first.
            if (lv.root_kind == RefKind::Local || lv.root_kind == RefKind::Param) {
                uint16_t have = flow.get(lv.root_kind, lv.root_slot);
                uint16_t need = lv.write_bits;
                if ((have & need) != need)
                    diags_.error("E_UNINIT", e.loc,
                                 "compound assignment reads components before assignment");
            }
        }
        adopt_literal_base(e.b, target);
        e.b = coerce(std::move(e.b), target, e.loc);
        if (lv.root_kind == RefKind::Local || lv.root_kind == RefKind::Param)
            flow.mark(lv.root_kind, lv.root_slot, lv.write_bits);
        e.type = target;
        return;
    }

    void check_member(Expr& e, Flow& flow) {
        // Reads through a swizzle need only the selected components of a
        // directly named variable.
        if (e.a->kind == ExprKind::Ident) {
            Expr& ident = *e.a;
            const Binding* b = lookup(ident.text);
            if (b) {
                ident.ref_kind = b->kind;
                ident.ref_slot = b->slot;
                ident.type = b->type ? b->type : error_type();
                classify_member(e);
                if (e.member_access == MemberAccess::Swizzle) {
                    uint16_t need = 0;
                    for (int c : e.swizzle) need |= static_cast<uint16_t>(1u << c);
                    check_read(ident, flow, need);
                } else if (e.member_access == MemberAccess::MatrixElement) {
                    uint16_t need = static_cast<uint16_t>(
                        1u << (e.matrix_row * ident.type->cols + e.matrix_col));
                    check_read(ident, flow, need);
                } else if (e.member_access == MemberAccess::RecordField) {
                    check_read(ident, flow, 1);
                }
                return;
            }
        }
        check_expr(*e.a, flow);
        classify_member(e);
    }

    void classify_member(Expr& e) {
        TypeRef base = e.a->type;
        if (!base) {
            e.type = error_type();
            return;
        }
        if (base->is_record()) {
            const RecordField* f = base->find_field(e.text);
            if (!f) {
                diags_.error("E_UNDECLARED", e.loc,
                             "no field '" + e.text + "' in " + base->record_name);
                e.type = error_type();
                return;
            }
            e.member_access = MemberAccess::RecordField;
            e.type = f->type;
            return;
        }
        if (base->is_matrix()) {
            // Single-element access _m<row><col>; richer matrix swizzles are
            // not implemented.
            const std::string& m = e.text;
            if (m.size() == 4 && m[0] == '_' && m[1] == 'm' && m[2] >= '0' && m[2] <= '3' &&
                m[3] >= '0' && m[3] <= '3') {
                int r = m[2] - '0', c = m[3] - '0';
                if (r >= base->rows || c >= base->cols) {
                    diags_.error("E_SWIZZLE", e.loc,
                                 "element " + m + " out of range for " +
                                     TypeArena::name_of(base));
                    e.type = error_type();
                    return;
                }
                e.member_access = MemberAccess::MatrixElement;
                e.matrix_row = r;
                e.matrix_col = c;
                e.type = types_.scalar(base->base);
                return;
            }
            diags_.error("E_UNSUPPORTED", e.loc,
                         "matrix swizzle '" + m + "' not supported; use ._m<row><col>");
            e.type = error_type();
            return;
        }
        if (base->is_scalar() || base->is_vector()) {
            std::string err;
            TypeRef t = swizzle_type(base, e.text, types_, err);
            if (!t) {
                diags_.error("E_SWIZZLE", e.loc, err);
                e.type = error_type();
                return;
            }
            auto comps = parse_swizzle(e.text, base->length(), err);
            e.member_access = MemberAccess::Swizzle;
            e.swizzle = *comps;
            e.type = t;
            return;
        }
        diags_.error("E_TYPE_MISMATCH", e.loc,
                     "no members on " + TypeArena::name_of(base));
        e.type = error_type();
    }

    void check_index(Expr& e, Flow& flow) {
        check_expr(*e.a, flow);
        check_expr(*e.b, flow);
        finish_index_typing(e);
    }

    void finish_index_typing(Expr& e) {
        e.b = coerce(std::move(e.b), types_.scalar(BaseType::Int), e.loc);
        TypeRef base = e.a->type;
        int extent = 0;
        if (base->is_vector()) {
            e.type = types_.scalar(base->base);
            extent = base->rows;
        } else if (base->is_matrix()) {
            e.type = types_.vector(base->base, base->cols);
            extent = base->rows;
        } else if (base->is_array()) {
            e.type = base->element;
            extent = base->extent;
        } else {
            diags_.error("E_TYPE_MISMATCH", e.loc,
                         "cannot index " + TypeArena::name_of(base));
            e.type = error_type();
            return;
        }
        const Expr* idx_node = e.b.get();
        while (idx_node->kind == ExprKind::Convert) idx_node = idx_node->a.get();
        if (idx_node->kind == ExprKind::IntLit) {
            int idx = static_cast<int>(idx_node->number);
            if (idx < 0 || idx >= extent)
                diags_.error("E_TYPE_MISMATCH", e.loc,
                             "index " + std::to_string(idx) + " out of range for " +
                                 TypeArena::name_of(base));
        }
        return;
    }

    // Read requirement for a resolved lvalue-shaped expression.
    void read_check_lvalue_chain(Expr& e, Flow& flow) {
        if (e.kind == ExprKind::Ident) {
            check_read(e, flow, Flow::full_mask(e.type));
            return;
        }
        if (e.kind == ExprKind::Member && e.a->kind == ExprKind::Ident) {
            uint16_t need = 1;
            if (e.member_access == MemberAccess::Swizzle) {
                need = 0;
                for (int c : e.swizzle) need |= static_cast<uint16_t>(1u << c);
            } else if (e.member_access == MemberAccess::MatrixElement) {
                need = static_cast<uint16_t>(1u << (e.matrix_row * e.a->type->cols +
                                                    e.matrix_col));
            }
            check_read(*e.a, flow, need);
            return;
        }
        const Expr* root = &e;
        while (root->kind == ExprKind::Member || root->kind == ExprKind::Index)
            root = root->a.get();
        if (root->kind == ExprKind::Ident)
            check_read(*root, flow, Flow::full_mask(root->type));
    }

    static bool lvalue_shaped(const Expr& e) {
        const Expr* p = &e;
        while (p->kind == ExprKind::Member || p->kind == ExprKind::Index) p = p->a.get();
        return p->kind == ExprKind::Ident;
    }

    void check_call(Expr& e, Flow& flow) {
        // Lvalue-shaped arguments resolve without read checks; whether they
        // are read depends on the parameter qualifier resolved below.
        std::vector<bool> deferred(e.args.size(), false);
        for (size_t i = 0; i < e.args.size(); ++i) {
            if (lvalue_shaped(*e.args[i])) {
                resolve_for_write(*e.args[i], flow);
                deferred[i] = true;
            } else {
                check_expr(*e.args[i], flow);
            }
        }

        // Constructor when the callee names a type.
        if (TypeRef t = types_.by_name(e.text)) {
            for (size_t i = 0; i < e.args.size(); ++i)
                if (deferred[i]) read_check_lvalue_chain(*e.args[i], flow);
            check_constructor(e, t, flow);
            return;
        }

        std::vector<FunctionSignature> candidates;
        for (const auto& s : user_sigs_)
            if (s.name == e.text) candidates.push_back(s);
        for (auto& s : builtins_.signatures(e.text)) candidates.push_back(std::move(s));
        if (candidates.empty()) {
            for (size_t i = 0; i < e.args.size(); ++i)
                if (deferred[i]) read_check_lvalue_chain(*e.args[i], flow);
            diags_.error("E_UNDECLARED", e.loc, "undeclared function '" + e.text + "'");
            e.type = error_type();
            return;
        }
        std::vector<TypeRef> arg_types;
        for (const auto& a : e.args) arg_types.push_back(a->type);
        OverloadResult r = resolve_overload(arg_types, candidates);
        if (r.index < 0) {
            for (size_t i = 0; i < e.args.size(); ++i)
                if (deferred[i]) read_check_lvalue_chain(*e.args[i], flow);
            std::string sig = e.text + "(";
            for (size_t i = 0; i < arg_types.size(); ++i)
                sig += (i ? ", " : "") + TypeArena::name_of(arg_types[i]);
            diags_.error(r.error_code, e.loc, r.message + " for " + sig + ")");
            e.type = error_type();
            return;
        }
        const FunctionSignature& sig = candidates[r.index];
        if (sig.origin == FunctionSignature::Origin::User) {
            e.user_function = sig.index;
            if (current_fn_index_ >= 0) {
                auto& callees = call_graph_[current_fn_index_];
                if (std::find(callees.begin(), callees.end(), sig.index) == callees.end())
                    callees.push_back(sig.index);
            }
        } else {
            e.builtin_overload = sig.index;
        }
        for (size_t i = 0; i < e.args.size(); ++i) {
            uint8_t q = sig.params[i].qualifiers;
            bool out_like = q & (static_cast<uint8_t>(Qualifier::Out) |
                                 static_cast<uint8_t>(Qualifier::InOut));
            if (out_like) {
                // inout arguments carry a value in; out arguments do not.
                if (q & static_cast<uint8_t>(Qualifier::InOut))
                    read_check_lvalue_chain(*e.args[i], flow);
                LValueInfo lv = check_lvalue(*e.args[i], flow, false);
                if (lv.ok && e.args[i]->type != sig.params[i].type) {
                    diags_.error("E_TYPE_MISMATCH", e.args[i]->loc,
                                 "out argument must match the parameter type exactly");
                } else if (lv.ok) {
                    // The callee assigns it before returning.
                    if (lv.root_kind == RefKind::Local || lv.root_kind == RefKind::Param)
                        flow.mark(lv.root_kind, lv.root_slot, lv.write_bits);
                }
            } else {
                if (deferred[i]) read_check_lvalue_chain(*e.args[i], flow);
                e.args[i] = coerce(std::move(e.args[i]), sig.params[i].type, e.args[i]->loc);
            }
        }
        e.type = sig.return_type ? sig.return_type : error_type();
    }

    void check_constructor(Expr& e, TypeRef target, Flow& flow) {
        e.is_constructor = true;
        e.type = target;
        if (!target->is_numeric()) {
            diags_.error("E_UNSUPPORTED", e.loc,
                         "no constructor for " + TypeArena::name_of(target));
            return;
        }
        if (target->is_bool()) {
            diags_.error("E_UNSUPPORTED", e.loc, "bool constructors are not supported");
            return;
        }
        int want = target->component_count();
        // Matrix constructors also take one row vector per row.
        if (target->is_matrix() && static_cast<int>(e.args.size()) == target->rows) {
            bool all_rows = true;
            for (const auto& a : e.args)
                if (!a->type || !(a->type->is_vector() && a->type->rows == target->cols))
                    all_rows = false;
            if (all_rows) {
                for (auto& a : e.args) {
                    TypeRef rowt = types_.vector(target->base, target->cols);
                    if (a->type != rowt) a = coerce_explicit(std::move(a), rowt);
                }
                return;
            }
        }
        int have = 0;
        for (auto& a : e.args) {
            if (!a->type || !a->type->is_numeric() || a->type->is_bool()) {
                diags_.error("E_TYPE_MISMATCH", a ? a->loc : e.loc,
                             "constructor arguments must be numeric");
                return;
            }
            have += a->type->component_count();
        }
        if (have != want) {
            diags_.error("E_TYPE_MISMATCH", e.loc,
                         TypeArena::name_of(target) + " constructor needs " +
                             std::to_string(want) + " components, got " + std::to_string(have));
            return;
        }
        // Arguments convert explicitly (float->int truncation allowed).
        for (auto& a : e.args) {
            if (a->type->base != target->base) {
                TypeRef at = shaped(a->type, target->base);
                a = coerce_explicit(std::move(a), at);
            }
        }
        (void)flow;
    }

    // Constructor-style conversion: always legal between numeric bases.
    ExprPtr coerce_explicit(ExprPtr e, TypeRef target) {
        if (!target || e->type == target) return e;
        auto node = std::make_unique<Expr>(ExprKind::Convert, e->loc);
        node->type = target;
        node->a = std::move(e);
        return node;
    }
};

}  // namespace

std::optional<TypedTree> check(SyntaxTree tree, const std::string& entry, Diagnostics& diags) {
    TypedTree tt;
    tt.tree = std::move(tree);
    tt.builtins = BuiltinCatalog(tt.types);
    Checker checker(tt.tree, tt.types, tt.builtins, diags);
    if (!checker.run(entry, tt.entry_index, tt.call_graph, tt.fn_uses_discard))
        return std::nullopt;
    return tt;
}

}  // namespace cg

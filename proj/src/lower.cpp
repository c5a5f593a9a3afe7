#include <bit>
#include <cassert>
#include <map>

#include "cg/codegen.hpp"

namespace cg {

namespace {

// A value during lowering: a compile-time constant (possibly with only some
// components written yet), dynamic register rows, an aggregate, or a
// sampler's texture unit.
struct LVal {
    TypeRef type = nullptr;
    std::optional<Value> known;
    std::vector<Operand> rows;
    std::vector<uint8_t> row_written;  // parallel to rows
    std::vector<LVal> elements;
    std::vector<std::pair<std::string, LVal>> fields;
    int sampler_unit = -1;

    bool is_known() const { return known.has_value(); }
    bool is_dynamic() const { return !rows.empty(); }
    LVal* field(const std::string& name) {
        for (auto& [n, v] : fields)
            if (n == name) return &v;
        return nullptr;
    }
};

enum class Sig { Normal, Break, Continue, Return, Discard };

struct LowerError {
    std::string code;
    Location loc;
    std::string message;
};

class Lowerer {
public:
    Lowerer(const TypedTree& tt, const BindingTable& bindings,
            const ProfileDescriptor& profile)
        : tt_(tt), bindings_(bindings), profile_(profile) {
        globals_ = evaluate_globals(tt);
    }

    IRProgram run(int& uniform_registers) {
        pool_base_ = bindings_.constant_registers_used;
        uniform_registers = pool_base_;

        const FunctionDecl& entry = tt_.entry();
        Frame frame;
        frame.fn = &entry;
        frame.locals.resize(entry.num_locals);
        frame.params.resize(entry.params.size());
        bind_entry_params(frame);

        Sig sig;
        try {
            sig = exec_body(entry.body->body, frame);
        } catch (DiscardUnwind&) {
            sig = Sig::Discard;  // a constant-path discard in a callee
        }
        if (sig == Sig::Normal || sig == Sig::Return) emit_outputs(frame);
        // A constant-path discard produces no outputs.

        ir_.num_temps = next_temp_;
        return std::move(ir_);
    }

private:
    const TypedTree& tt_;
    const BindingTable& bindings_;
    const ProfileDescriptor& profile_;
    std::vector<Value> globals_;
    IRProgram ir_;
    int next_temp_ = 0;
    int pool_base_ = 0;
    int steps_ = 0;

    struct Frame {
        const FunctionDecl* fn = nullptr;
        std::vector<LVal> locals;
        std::vector<LVal> params;
        LVal return_value;
    };
    struct DiscardUnwind {};

    [[noreturn]] void fail(std::string code, Location loc, std::string message) {
        throw LowerError{std::move(code), loc, std::move(message)};
    }

    void budget(Location loc) {
        if (++steps_ > kMaxUnrollSteps)
            fail("E_NEEDS_BRANCHING", loc, "unroll budget exceeded");
    }

    // ---- register/pool helpers ----

    RegRef fresh_temp() { return {RegFile::Temp, next_temp_++}; }

    int pool_register(const std::array<float, 4>& value) {
        for (const auto& entry : ir_.pool) {
            bool same = true;
            for (int i = 0; i < 4; ++i)
                if (std::bit_cast<uint32_t>(entry.value[i]) !=
                    std::bit_cast<uint32_t>(value[i]))
                    same = false;
            if (same) return entry.reg;
        }
        int reg = pool_base_ + static_cast<int>(ir_.pool.size());
        ir_.pool.push_back({value, reg});
        return reg;
    }

    Operand pool_scalar(float v) {
        return {{RegFile::Const, pool_register({v, v, v, v})}, Swizzle4::replicate(0), false};
    }

    Operand emit(Opcode op, uint8_t mask, std::vector<Operand> srcs, int tex_unit = -1,
                 TexTarget target = TexTarget::T2D) {
        Instruction inst;
        inst.op = op;
        inst.dst = fresh_temp();
        inst.mask = mask;
        inst.srcs = std::move(srcs);
        inst.tex_unit = tex_unit;
        inst.target = target;
        RegRef dst = inst.dst;
        ir_.code.push_back(std::move(inst));
        return {dst, Swizzle4::identity(), false};
    }

    void emit_to(RegRef dst, Opcode op, uint8_t mask, std::vector<Operand> srcs) {
        Instruction inst;
        inst.op = op;
        inst.dst = dst;
        inst.mask = mask;
        inst.srcs = std::move(srcs);
        ir_.code.push_back(std::move(inst));
    }

    static uint8_t lane_mask(int n) { return static_cast<uint8_t>((1u << n) - 1u); }

    // Rows of a numeric value as operands, materializing constants into the
    // pool. Scalars come back as a replicated single lane.
    std::vector<Operand> value_rows(const LVal& v, Location loc) {
        if (v.is_dynamic()) {
            for (uint8_t m : v.row_written) {
                uint8_t need = lane_mask(row_lanes(v.type));
                if ((m & need) != need)
                    fail("E_UNINIT", loc, "value read before all components are assigned");
            }
            return v.rows;
        }
        if (!v.is_known()) fail("E_UNINIT", loc, "value read before assignment");
        const Value& val = *v.known;
        if (!val.fully_written())
            fail("E_UNINIT", loc, "value read before all components are assigned");
        TypeRef t = v.type;
        std::vector<Operand> rows;
        if (t->is_scalar() || (t->is_vector() && t->rows == 1)) {
            rows.push_back(pool_scalar(component_float(val, 0)));
            return rows;
        }
        if (t->is_vector()) {
            std::array<float, 4> packed{};
            for (int i = 0; i < t->rows; ++i) packed[i] = component_float(val, i);
            rows.push_back({{RegFile::Const, pool_register(packed)}, Swizzle4::identity(),
                            false});
            return rows;
        }
        // matrix
        for (int r = 0; r < t->rows; ++r) {
            std::array<float, 4> packed{};
            for (int c = 0; c < t->cols; ++c)
                packed[c] = component_float(val, r * t->cols + c);
            rows.push_back({{RegFile::Const, pool_register(packed)}, Swizzle4::identity(),
                            false});
        }
        return rows;
    }

    Operand value_row(const LVal& v, Location loc) {
        auto rows = value_rows(v, loc);
        assert(rows.size() == 1);
        return rows[0];
    }

    // Runtime representation of one component: ints and bools live as
    // floats in registers.
    static float component_float(const Value& val, int idx) {
        switch (val.type->base) {
        case BaseType::Int: return static_cast<float>(val.i(idx));
        case BaseType::Bool: return val.b(idx) ? 1.0f : 0.0f;
        default: return val.f(idx);
        }
    }

    static int row_lanes(TypeRef t) {
        if (t->is_matrix()) return t->cols;
        return t->length();
    }
    static int row_count(TypeRef t) { return t->is_matrix() ? t->rows : 1; }

    // Scalar operand adjusted to replicate its single meaningful lane.
    static Operand replicated(const Operand& op, int lane = 0) {
        Operand out = op;
        out.swz = Swizzle4::replicate(op.swz.sel[lane]);
        return out;
    }

    LVal dynamic_value(TypeRef type, std::vector<Operand> rows) {
        LVal v;
        v.type = type;
        v.rows = std::move(rows);
        v.row_written.assign(v.rows.size(), lane_mask(row_lanes(type)));
        return v;
    }

    LVal known_value(Value val) {
        LVal v;
        v.type = val.type;
        v.known = std::move(val);
        return v;
    }

    // ---- entry parameter setup ----

    void bind_entry_params(Frame& frame) {
        const FunctionDecl& entry = *frame.fn;
        for (size_t i = 0; i < entry.params.size(); ++i) {
            const ParamDecl& p = entry.params[i];
            LVal& slot = frame.params[i];
            slot.type = p.type;
            if (p.is_uniform()) {
                const UniformBinding* u = bindings_.find_uniform(p.name);
                if (!u) continue;  // unbindable; validation reported it
                if (u->is_sampler) {
                    slot.sampler_unit = u->texture_unit;
                    continue;
                }
                bind_uniform_value(slot, p.type, u->register_base);
                continue;
            }
            if (p.is_out() && !p.is_inout()) continue;  // starts unassigned
            // Varying input (or inout): alias the input register.
            for (const auto& in : bindings_.inputs) {
                if (in.param_index == static_cast<int>(i)) {
                    Operand op{{RegFile::Input, in.register_index}, Swizzle4::identity(),
                               false};
                    if (p.type->length() == 1 && !p.type->is_matrix())
                        op = replicated(op);
                    slot = dynamic_value(p.type, {op});
                }
            }
        }
    }

    void bind_uniform_value(LVal& slot, TypeRef t, int reg_base) {
        if (t->is_array()) {
            slot.type = t;
            int per = t->element->is_matrix() ? t->element->rows : 1;
            for (int e = 0; e < t->extent; ++e) {
                LVal el;
                bind_uniform_value(el, t->element, reg_base + e * per);
                slot.elements.push_back(std::move(el));
            }
            return;
        }
        std::vector<Operand> rows;
        if (t->is_matrix()) {
            for (int r = 0; r < t->rows; ++r)
                rows.push_back({{RegFile::Const, reg_base + r}, Swizzle4::identity(), false});
        } else if (t->length() == 1) {
            rows.push_back({{RegFile::Const, reg_base}, Swizzle4::replicate(0), false});
        } else {
            rows.push_back({{RegFile::Const, reg_base}, Swizzle4::identity(), false});
        }
        slot = dynamic_value(t, std::move(rows));
    }

    // ---- output emission ----

    void emit_outputs(Frame& frame) {
        for (const auto& out : bindings_.outputs) {
            LVal* src = nullptr;
            if (out.param_index >= 0) {
                src = &frame.params[out.param_index];
            } else {
                src = &frame.return_value;
            }
            if (!src->type) continue;  // sema guaranteed assignment; be safe
            int lanes = row_lanes(out.type);
            Operand op = value_rows(*src, frame.fn->loc)[0];
            emit_to({RegFile::Output, out.register_index}, Opcode::MOV, lane_mask(lanes),
                    {op});
        }
    }

    // ---- statements ----

    Sig exec_body(const std::vector<StmtPtr>& stmts, Frame& f) {
        for (const auto& s : stmts) {
            Sig sig = exec(*s, f);
            if (sig != Sig::Normal) return sig;
        }
        return Sig::Normal;
    }

    Sig exec(const Stmt& s, Frame& f) {
        budget(s.loc);
        switch (s.kind) {
        case StmtKind::Decl: {
            LVal& slot = f.locals[s.decl_slot];
            slot = LVal{};
            slot.type = s.decl_type;
            if (s.init) {
                slot = eval(*s.init, f);
                slot.type = s.decl_type;
            } else {
                init_empty(slot, s.decl_type);
            }
            return Sig::Normal;
        }
        case StmtKind::ExprStmt:
            eval(*s.expr, f);
            return Sig::Normal;
        case StmtKind::If: {
            LVal cond = eval(*s.expr, f);
            if (cond.is_known() && cond.known->fully_written()) {
                const auto& branch = cond.known->b(0) ? s.body : s.else_body;
                return exec_body(branch, f);
            }
            // Dynamic condition: only the fragment discard guard lowers.
            if (!profile_.is_vertex() && s.else_body.empty() && s.body.size() == 1 &&
                s.body[0]->kind == StmtKind::Discard) {
                Operand t = replicated(value_row(cond, s.loc));
                // 0.5 - t is negative exactly when the {0,1} condition is 1.
                Operand neg_t = t;
                neg_t.negate = !neg_t.negate;
                Operand sel = emit(Opcode::ADD, 0x1, {pool_scalar(0.5f), neg_t});
                Instruction kil;
                kil.op = Opcode::KIL;
                kil.mask = 0xF;
                kil.srcs = {replicated(sel)};
                ir_.code.push_back(std::move(kil));
                return Sig::Normal;
            }
            fail("E_NEEDS_BRANCHING", s.loc,
                 "condition is not a compile-time constant");
        }
        case StmtKind::While:
        case StmtKind::DoWhile:
        case StmtKind::For: {
            Frame* fp = &f;
            if (s.kind == StmtKind::For && s.init_stmt) exec(*s.init_stmt, *fp);
            bool first = true;
            for (int iter = 0;; ++iter, first = false) {
                if (iter > kMaxUnrollIterations)
                    fail("E_NEEDS_BRANCHING", s.loc, "loop exceeds the unroll budget");
                bool check_cond = s.kind != StmtKind::DoWhile || !first;
                if (s.kind == StmtKind::DoWhile) {
                    if (check_cond) {
                        if (!known_true(*s.expr, f, s.loc)) return Sig::Normal;
                    }
                    Sig sig = exec_body(s.body, f);
                    if (sig == Sig::Break) return Sig::Normal;
                    if (sig == Sig::Return || sig == Sig::Discard) return sig;
                    continue;
                }
                if (s.expr && !known_true(*s.expr, f, s.loc)) return Sig::Normal;
                if (!s.expr && s.kind == StmtKind::While)
                    fail("E_NEEDS_BRANCHING", s.loc, "loop has no condition");
                Sig sig = exec_body(s.body, f);
                if (sig == Sig::Break) return Sig::Normal;
                if (sig == Sig::Return || sig == Sig::Discard) return sig;
                if (s.kind == StmtKind::For && s.step) eval(*s.step, f);
                budget(s.loc);
            }
        }
        case StmtKind::Break: return Sig::Break;
        case StmtKind::Continue: return Sig::Continue;
        case StmtKind::Return:
            if (s.expr) f.return_value = eval(*s.expr, f);
            return Sig::Return;
        case StmtKind::Discard: {
            Instruction kil;
            kil.op = Opcode::KIL;
            kil.mask = 0xF;
            kil.srcs = {pool_scalar(-1.0f)};
            ir_.code.push_back(std::move(kil));
            return Sig::Discard;
        }
        case StmtKind::Block:
            return exec_body(s.body, f);
        }
        return Sig::Normal;
    }

    bool known_true(const Expr& cond, Frame& f, Location loc) {
        LVal v = eval(cond, f);
        if (!v.is_known() || !v.known->fully_written())
            fail("E_NEEDS_BRANCHING", loc, "loop bound is not a compile-time constant");
        return v.known->b(0);
    }

    void init_empty(LVal& slot, TypeRef t) {
        slot.type = t;
        if (t->is_numeric()) {
            slot.known = Value(t);  // no components written yet
            return;
        }
        if (t->is_array()) {
            slot.elements.resize(t->extent);
            for (auto& e : slot.elements) init_empty(e, t->element);
            return;
        }
        if (t->is_record()) {
            for (const auto& field : t->fields) {
                LVal fv;
                init_empty(fv, field.type);
                slot.fields.emplace_back(field.name, std::move(fv));
            }
        }
    }

    // ---- expressions ----

    LVal eval(const Expr& e, Frame& f) {
        budget(e.loc);
        switch (e.kind) {
        case ExprKind::IntLit:
            return known_value(Value::scalar_int(e.type, static_cast<int32_t>(e.number)));
        case ExprKind::FloatLit:
            return known_value(Value::scalar_float(e.type, static_cast<float>(e.number)));
        case ExprKind::BoolLit:
            return known_value(Value::scalar_bool(e.type, e.bvalue));
        case ExprKind::Ident:
            switch (e.ref_kind) {
            case RefKind::Global: return known_value(globals_[e.ref_slot]);
            case RefKind::Local: return f.locals[e.ref_slot];
            case RefKind::Param: return f.params[e.ref_slot];
            default: fail("E_UNDECLARED", e.loc, "unresolved identifier");
            }
        case ExprKind::Convert:
            return lower_convert(e, f);
        case ExprKind::Smear:
            return lower_smear(e, f);
        case ExprKind::Member:
            return lower_member(e, f);
        case ExprKind::Index:
            return lower_index(e, f);
        case ExprKind::Unary:
            return lower_unary(e, f);
        case ExprKind::Binary:
            return lower_binary(e, f);
        case ExprKind::Compare:
            return lower_compare(e, f);
        case ExprKind::Logical:
            return lower_logical(e, f);
        case ExprKind::Cond:
            return lower_cond(e, f);
        case ExprKind::Comma:
            eval(*e.a, f);
            return eval(*e.b, f);
        case ExprKind::Assign:
            return lower_assign(e, f);
        case ExprKind::Call:
            return lower_call(e, f);
        }
        fail("E_UNSUPPORTED", e.loc, "unhandled expression");
    }

    LVal lower_convert(const Expr& e, Frame& f) {
        LVal v = eval(*e.a, f);
        if (v.is_known()) return known_value(convert_value(*v.known, e.type));
        TypeRef from = e.a->type;
        TypeRef to = e.type;
        // Registers hold binary32 for every base, so most base changes are
        // free. Truncation to int is not expressible in this ISA.
        if (to->base == BaseType::Int && from->is_float_family())
            fail("E_UNSUPPORTED", e.loc,
                 "integer truncation of a run-time value cannot be lowered");
        std::vector<Operand> rows = value_rows(v, e.loc);
        if (to->base == BaseType::Fixed && from->base != BaseType::Fixed) {
            int lanes = row_lanes(to);
            for (auto& row : rows) {
                Operand lo = emit(Opcode::MIN, lane_mask(lanes),
                                  {row, pool_scalar(kernels::kFixedMax)});
                row = emit(Opcode::MAX, lane_mask(lanes), {lo, pool_scalar(-2.0f)});
            }
        }
        LVal out = dynamic_value(to, std::move(rows));
        return out;
    }

    LVal lower_smear(const Expr& e, Frame& f) {
        LVal v = eval(*e.a, f);
        if (v.is_known()) return known_value(convert_value(*v.known, e.type));
        Operand scalar = replicated(value_row(v, e.loc));
        std::vector<Operand> rows(row_count(e.type), scalar);
        return dynamic_value(e.type, std::move(rows));
    }

    LVal lower_member(const Expr& e, Frame& f) {
        LVal v = eval(*e.a, f);
        switch (e.member_access) {
        case MemberAccess::Swizzle: {
            if (v.is_known()) {
                Value out(e.type);
                for (size_t i = 0; i < e.swizzle.size(); ++i)
                    out.copy_component(static_cast<int>(i), *v.known, e.swizzle[i]);
                return known_value(out);
            }
            check_row_lanes(v, 0, e.swizzle, e.loc);
            Operand src = v.rows[0];
            Operand out = src;
            if (e.swizzle.size() == 1) {
                out.swz = Swizzle4::replicate(src.swz.sel[e.swizzle[0]]);
            } else {
                Swizzle4 pick;
                for (size_t i = 0; i < 4; ++i) {
                    int from = i < e.swizzle.size() ? e.swizzle[i] : e.swizzle[0];
                    pick.sel[i] = static_cast<uint8_t>(from);
                }
                out.swz = pick.after(src.swz);
            }
            return dynamic_value(e.type, {out});
        }
        case MemberAccess::MatrixElement: {
            if (v.is_known()) {
                Value out(e.type);
                out.copy_component(0, *v.known, e.matrix_row * e.a->type->cols + e.matrix_col);
                return known_value(out);
            }
            check_row_lanes(v, e.matrix_row, {e.matrix_col}, e.loc);
            Operand row = v.rows[e.matrix_row];
            return dynamic_value(e.type, {replicated(row, e.matrix_col)});
        }
        case MemberAccess::RecordField: {
            LVal* fv = v.field(e.text);
            if (!fv) fail("E_UNINIT", e.loc, "record value missing field " + e.text);
            return *fv;
        }
        default:
            fail("E_UNSUPPORTED", e.loc, "unresolved member access");
        }
    }

    // Reads through a swizzle must land on written lanes of the backing
    // register (partially initialized variables).
    void check_row_lanes(const LVal& v, int row, const std::vector<int>& comps, Location loc) {
        if (v.row_written.empty()) return;
        for (int c : comps) {
            int lane = v.rows[row].swz.sel[c];
            if (!(v.row_written[row] & (1u << lane)))
                fail("E_UNINIT", loc, "component read before assignment");
        }
    }

    LVal lower_index(const Expr& e, Frame& f) {
        LVal base = eval(*e.a, f);
        LVal idx = eval(*e.b, f);
        if (!idx.is_known() || !idx.known->fully_written())
            fail("E_VARIABLE_INDEX", e.loc, "index is not a compile-time constant");
        int i = idx.known->i(0);
        TypeRef bt = e.a->type;
        int extent = bt->is_array() ? bt->extent : bt->rows;
        if (i < 0 || i >= extent)
            fail("E_TYPE_MISMATCH", e.loc, "index " + std::to_string(i) + " out of range");
        if (bt->is_array()) return base.elements[i];
        if (base.is_known()) {
            Value out(e.type);
            if (bt->is_vector()) {
                out.copy_component(0, *base.known, i);
            } else {
                for (int c = 0; c < bt->cols; ++c)
                    out.copy_component(c, *base.known, i * bt->cols + c);
            }
            return known_value(out);
        }
        if (bt->is_vector()) {
            check_row_lanes(base, 0, {i}, e.loc);
            return dynamic_value(e.type, {replicated(base.rows[0], i)});
        }
        return dynamic_value(e.type, {base.rows[i]});
    }

    LVal lower_unary(const Expr& e, Frame& f) {
        if (e.text == "++" || e.text == "--") {
            LVal cur = read_lvalue(*e.a, f);
            LVal one = known_value(make_one(e.a->type));
            LVal next = combine_binary(e.text == "++" ? "+" : "-", cur, one, e.a->type, e.loc);
            store_lvalue(*e.a, f, next);
            return e.postfix ? cur : next;
        }
        LVal v = eval(*e.a, f);
        if (e.text == "+") return v;
        if (v.is_known()) return known_value(eval_unary(e.text, *v.known));
        if (e.text == "-") {
            LVal out = v;
            for (auto& row : out.rows) row.negate = !row.negate;
            return out;
        }
        if (e.text == "!") {
            Operand t = replicated(value_row(v, e.loc));
            t.negate = !t.negate;
            Operand r = emit(Opcode::ADD, 0x1, {pool_scalar(1.0f), t});
            return dynamic_value(e.type, {replicated(r)});
        }
        fail("E_UNSUPPORTED", e.loc, "cannot lower unary '" + e.text + "'");
    }

    Value make_one(TypeRef t) {
        Value one(t);
        for (int i = 0; i < one.count(); ++i) {
            if (t->base == BaseType::Int) one.set_i(i, 1);
            else one.set_f(i, 1.0f);
        }
        return one;
    }

    LVal lower_binary(const Expr& e, Frame& f) {
        LVal a = eval(*e.a, f);
        LVal b = eval(*e.b, f);
        return combine_binary(e.text, a, b, e.type, e.loc);
    }

    LVal combine_binary(const std::string& op, const LVal& a, const LVal& b, TypeRef type,
                        Location loc) {
        if (a.is_known() && b.is_known() && a.known->fully_written() &&
            b.known->fully_written())
            return known_value(eval_binary(op, *a.known, *b.known));
        if (type->is_int() && (op == "/" || op == "%"))
            fail("E_UNSUPPORTED", loc,
                 "integer '" + op + "' needs compile-time operands in this profile");
        std::vector<Operand> ra = value_rows(a, loc);
        std::vector<Operand> rb = value_rows(b, loc);
        int lanes = row_lanes(type);
        uint8_t mask = lane_mask(lanes);
        bool fixed = type->base == BaseType::Fixed;
        std::vector<Operand> out;
        for (size_t r = 0; r < ra.size(); ++r) {
            Operand x = ra[r], y = rb[r];
            Operand res;
            if (op == "+") {
                res = emit(Opcode::ADD, mask, {x, y});
            } else if (op == "-") {
                y.negate = !y.negate;
                res = emit(Opcode::ADD, mask, {x, y});
            } else if (op == "*") {
                res = emit(Opcode::MUL, mask, {x, y});
            } else if (op == "/") {
                res = lower_divide(x, y, mask);
            } else {
                fail("E_UNSUPPORTED", loc, "cannot lower '" + op + "'");
            }
            if (fixed) res = clamp_fixed_rows(res, mask);
            out.push_back(res);
        }
        return dynamic_value(type, std::move(out));
    }

    // a / b with a run-time divisor: multiply by a reciprocal built from
    // RSQ. 1/|b| = rsq(|b|)^2, with the sign restored by 2*(b>=0)-1. One
    // Newton step tightens the result to a couple of ulps.
    Operand lower_divide(Operand a, Operand b, uint8_t mask) {
        Operand babs_in = b;
        Operand bneg = b;
        bneg.negate = !bneg.negate;
        Operand babs = emit(Opcode::MAX, mask, {babs_in, bneg});
        Operand t = emit(Opcode::RSQ, mask, {babs});
        Operand r0 = emit(Opcode::MUL, mask, {t, t});
        Operand ge = emit(Opcode::SGE, mask, {b, pool_scalar(0.0f)});
        Operand sign = emit(Opcode::MAD, mask, {ge, pool_scalar(2.0f), pool_scalar(-1.0f)});
        Operand rs = emit(Opcode::MUL, mask, {r0, sign});
        // Newton: rs * (2 - b*rs)
        Operand u = emit(Opcode::MUL, mask, {b, rs});
        Operand uneg = u;
        uneg.negate = true;
        Operand w = emit(Opcode::ADD, mask, {pool_scalar(2.0f), uneg});
        Operand rcp = emit(Opcode::MUL, mask, {rs, w});
        return emit(Opcode::MUL, mask, {a, rcp});
    }

    Operand clamp_fixed_rows(Operand row, uint8_t mask) {
        Operand lo = emit(Opcode::MIN, mask, {row, pool_scalar(kernels::kFixedMax)});
        return emit(Opcode::MAX, mask, {lo, pool_scalar(-2.0f)});
    }

    LVal lower_compare(const Expr& e, Frame& f) {
        LVal a = eval(*e.a, f);
        LVal b = eval(*e.b, f);
        if (a.is_known() && b.is_known())
            return known_value(eval_compare(e.text, *a.known, *b.known, e.type));
        Operand x = replicated(value_row(a, e.loc));
        Operand y = replicated(value_row(b, e.loc));
        Operand r;
        if (e.text == "<") r = emit(Opcode::SLT, 0x1, {x, y});
        else if (e.text == ">") r = emit(Opcode::SLT, 0x1, {y, x});
        else if (e.text == ">=") r = emit(Opcode::SGE, 0x1, {x, y});
        else if (e.text == "<=") r = emit(Opcode::SGE, 0x1, {y, x});
        else if (e.text == "==") {
            Operand ge = emit(Opcode::SGE, 0x1, {x, y});
            Operand le = emit(Opcode::SGE, 0x1, {y, x});
            r = emit(Opcode::MUL, 0x1, {ge, le});
        } else {  // !=
            Operand ge = emit(Opcode::SGE, 0x1, {x, y});
            Operand le = emit(Opcode::SGE, 0x1, {y, x});
            Operand eq = emit(Opcode::MUL, 0x1, {ge, le});
            Operand eq_neg = eq;
            eq_neg.negate = true;
            r = emit(Opcode::ADD, 0x1, {pool_scalar(1.0f), eq_neg});
        }
        return dynamic_value(e.type, {replicated(r)});
    }

    LVal lower_logical(const Expr& e, Frame& f) {
        LVal a = eval(*e.a, f);
        if (a.is_known() && a.known->fully_written()) {
            bool av = a.known->b(0);
            // Short circuit: the skipped side is never evaluated.
            if (e.text == "&&" && !av) return known_value(Value::scalar_bool(e.type, false));
            if (e.text == "||" && av) return known_value(Value::scalar_bool(e.type, true));
            return eval(*e.b, f);
        }
        LVal b = eval(*e.b, f);
        Operand x = replicated(value_row(a, e.loc));
        Operand y = replicated(value_row(b, e.loc));
        Operand r = e.text == "&&" ? emit(Opcode::MUL, 0x1, {x, y})
                                   : emit(Opcode::MAX, 0x1, {x, y});
        return dynamic_value(e.type, {replicated(r)});
    }

    // Exact select on a {0,1} condition: t*b + (1-t)*c built so each term
    // is exactly b, c or zero.
    LVal lower_cond(const Expr& e, Frame& f) {
        LVal cond = eval(*e.a, f);
        if (cond.is_known() && cond.known->fully_written())
            return cond.known->b(0) ? eval(*e.b, f) : eval(*e.c, f);
        LVal bv = eval(*e.b, f);
        LVal cv = eval(*e.c, f);
        Operand t = replicated(value_row(cond, e.loc));
        Operand tneg = t;
        tneg.negate = !tneg.negate;
        Operand u = replicated(emit(Opcode::ADD, 0x1, {pool_scalar(1.0f), tneg}));
        std::vector<Operand> rb = value_rows(bv, e.loc);
        std::vector<Operand> rc = value_rows(cv, e.loc);
        int lanes = row_lanes(e.type);
        uint8_t mask = lane_mask(lanes);
        std::vector<Operand> out;
        for (size_t r = 0; r < rb.size(); ++r) {
            Operand p = emit(Opcode::MUL, mask, {t, rb[r]});
            out.push_back(emit(Opcode::MAD, mask, {u, rc[r], p}));
        }
        return dynamic_value(e.type, std::move(out));
    }

    // ---- assignment ----

    LVal lower_assign(const Expr& e, Frame& f) {
        LVal rhs = eval(*e.b, f);
        if (e.text != "=") {
            LVal cur = read_lvalue(*e.a, f);
            std::string op(1, e.text[0]);
            rhs = combine_binary(op, cur, rhs, e.a->type, e.loc);
        }
        store_lvalue(*e.a, f, rhs);
        return rhs;
    }

    LVal read_lvalue(const Expr& e, Frame& f) { return eval(e, f); }

    LVal* var_slot(const Expr& ident, Frame& f) {
        if (ident.ref_kind == RefKind::Local) return &f.locals[ident.ref_slot];
        if (ident.ref_kind == RefKind::Param) return &f.params[ident.ref_slot];
        fail("E_NOT_ASSIGNABLE", ident.loc, "cannot assign here");
    }

    void store_lvalue(const Expr& e, Frame& f, const LVal& value) {
        switch (e.kind) {
        case ExprKind::Ident: {
            LVal* slot = var_slot(e, f);
            LVal stored = value;
            stored.type = e.type;
            *slot = std::move(stored);
            return;
        }
        case ExprKind::Member:
            if (e.member_access == MemberAccess::Swizzle) {
                std::vector<int> lanes = e.swizzle;
                store_masked(*e.a, f, value, lanes, e.loc);
                return;
            }
            if (e.member_access == MemberAccess::MatrixElement) {
                store_matrix_element(*e.a, f, value, e.matrix_row, e.matrix_col, e.loc);
                return;
            }
            if (e.member_access == MemberAccess::RecordField) {
                LVal* base = resolve_aggregate(*e.a, f, e.loc);
                LVal* fv = base->field(e.text);
                if (!fv) fail("E_UNINIT", e.loc, "record value missing field " + e.text);
                LVal stored = value;
                stored.type = e.type;
                *fv = std::move(stored);
                return;
            }
            fail("E_NOT_ASSIGNABLE", e.loc, "cannot assign here");
        case ExprKind::Index: {
            LVal idx = eval(*e.b, f);
            if (!idx.is_known() || !idx.known->fully_written())
                fail("E_VARIABLE_INDEX", e.loc, "index is not a compile-time constant");
            int i = idx.known->i(0);
            TypeRef bt = e.a->type;
            if (bt->is_array()) {
                if (i < 0 || i >= bt->extent)
                    fail("E_TYPE_MISMATCH", e.loc, "index out of range");
                LVal* base = resolve_aggregate(*e.a, f, e.loc);
                LVal stored = value;
                stored.type = e.type;
                base->elements[i] = std::move(stored);
                return;
            }
            if (bt->is_vector()) {
                if (i < 0 || i >= bt->rows) fail("E_TYPE_MISMATCH", e.loc, "index out of range");
                store_masked(*e.a, f, value, {i}, e.loc);
                return;
            }
            if (bt->is_matrix()) {
                if (i < 0 || i >= bt->rows) fail("E_TYPE_MISMATCH", e.loc, "index out of range");
                store_matrix_row(*e.a, f, value, i, e.loc);
                return;
            }
            fail("E_NOT_ASSIGNABLE", e.loc, "cannot assign here");
        }
        default:
            fail("E_NOT_ASSIGNABLE", e.loc, "cannot assign here");
        }
    }

    // Aggregate lvalue navigation (records and arrays live as trees).
    LVal* resolve_aggregate(const Expr& e, Frame& f, Location loc) {
        if (e.kind == ExprKind::Ident) return var_slot(e, f);
        if (e.kind == ExprKind::Member && e.member_access == MemberAccess::RecordField) {
            LVal* base = resolve_aggregate(*e.a, f, loc);
            LVal* fv = base->field(e.text);
            if (!fv) fail("E_UNINIT", loc, "record value missing field " + e.text);
            return fv;
        }
        if (e.kind == ExprKind::Index) {
            LVal idx_val = eval(*e.b, const_cast<Frame&>(f));
            if (!idx_val.is_known()) fail("E_VARIABLE_INDEX", loc, "index must be constant");
            LVal* base = resolve_aggregate(*e.a, f, loc);
            int i = idx_val.known->i(0);
            if (i < 0 || i >= static_cast<int>(base->elements.size()))
                fail("E_TYPE_MISMATCH", loc, "index out of range");
            return &base->elements[i];
        }
        fail("E_NOT_ASSIGNABLE", loc, "cannot assign here");
    }

    // Masked write of `value` into the vector lvalue `base` at `lanes`.
    void store_masked(const Expr& base, Frame& f, const LVal& value, const std::vector<int>& lanes,
                      Location loc) {
        LVal* slot = resolve_vector_slot(base, f, loc);
        // Constant folding: known target, known value.
        if (slot->is_known() && value.is_known() && value.known->fully_written()) {
            for (size_t i = 0; i < lanes.size(); ++i)
                slot->known->copy_component(lanes[i], *value.known, static_cast<int>(i));
            return;
        }
        materialize_var(*slot, loc);
        uint8_t mask = 0;
        Swizzle4 align;
        for (size_t i = 0; i < lanes.size(); ++i) {
            mask |= static_cast<uint8_t>(1u << lanes[i]);
            align.sel[lanes[i]] = static_cast<uint8_t>(i);
        }
        Operand src;
        if (value.is_known() && value.known->fully_written()) {
            src = value_rows(value, loc)[0];
        } else {
            src = value.rows[0];
        }
        Operand aligned = src;
        aligned.swz = align.after(src.swz);
        // Copy-on-write: the previous rows may be aliased by earlier reads.
        RegRef fresh = fresh_temp();
        uint8_t prior = slot->row_written[0];
        if (prior & ~mask)
            emit_to(fresh, Opcode::MOV, static_cast<uint8_t>(prior & ~mask), {slot->rows[0]});
        emit_to(fresh, Opcode::MOV, mask, {aligned});
        slot->rows[0] = {fresh, Swizzle4::identity(), false};
        slot->row_written[0] = static_cast<uint8_t>(prior | mask);
    }

    void store_matrix_element(const Expr& base, Frame& f, const LVal& value, int row, int col,
                              Location loc) {
        LVal* slot = resolve_vector_slot(base, f, loc);
        if (slot->is_known() && value.is_known() && value.known->fully_written()) {
            slot->known->copy_component(row * base.type->cols + col, *value.known, 0);
            return;
        }
        materialize_var(*slot, loc);
        Operand src = value.is_known() ? value_rows(value, loc)[0] : value.rows[0];
        RegRef fresh = fresh_temp();
        uint8_t mask = static_cast<uint8_t>(1u << col);
        uint8_t prior = slot->row_written[row];
        if (prior & ~mask)
            emit_to(fresh, Opcode::MOV, static_cast<uint8_t>(prior & ~mask),
                    {slot->rows[row]});
        emit_to(fresh, Opcode::MOV, mask, {replicated(src)});
        slot->rows[row] = {fresh, Swizzle4::identity(), false};
        slot->row_written[row] = static_cast<uint8_t>(prior | mask);
    }

    void store_matrix_row(const Expr& base, Frame& f, const LVal& value, int row, Location loc) {
        LVal* slot = resolve_vector_slot(base, f, loc);
        if (slot->is_known() && value.is_known() && value.known->fully_written()) {
            for (int c = 0; c < base.type->cols; ++c)
                slot->known->copy_component(row * base.type->cols + c, *value.known, c);
            return;
        }
        materialize_var(*slot, loc);
        Operand src = value.is_known() ? value_rows(value, loc)[0] : value.rows[0];
        RegRef fresh = fresh_temp();
        uint8_t mask = lane_mask(base.type->cols);
        uint8_t prior = slot->row_written[row];
        if (prior & ~mask)
            emit_to(fresh, Opcode::MOV, static_cast<uint8_t>(prior & ~mask),
                    {slot->rows[row]});
        emit_to(fresh, Opcode::MOV, mask, {src});
        slot->rows[row] = {fresh, Swizzle4::identity(), false};
        slot->row_written[row] = static_cast<uint8_t>(prior | mask);
    }

    LVal* resolve_vector_slot(const Expr& e, Frame& f, Location loc) {
        if (e.kind == ExprKind::Ident) return var_slot(e, f);
        return resolve_aggregate(e, f, loc);
    }

    // Turns a known or aliased variable into private register rows so lane
    // writes can land on it.
    void materialize_var(LVal& slot, Location loc) {
        if (!slot.rows.empty()) return;
        TypeRef t = slot.type;
        int lanes = row_lanes(t);
        int nrows = row_count(t);
        if (!slot.is_known()) fail("E_UNINIT", loc, "value used before assignment");
        const Value& val = *slot.known;
        std::vector<Operand> rows;
        std::vector<uint8_t> written;
        for (int r = 0; r < nrows; ++r) {
            uint8_t have = 0;
            std::array<float, 4> packed{};
            for (int c = 0; c < lanes; ++c) {
                int comp = r * lanes + c;
                if (val.component_written(comp)) {
                    have |= static_cast<uint8_t>(1u << c);
                    packed[c] = component_float(val, comp);
                }
            }
            if (have) {
                RegRef reg = fresh_temp();
                Operand src{{RegFile::Const, pool_register(packed)}, Swizzle4::identity(),
                            false};
                emit_to(reg, Opcode::MOV, have, {src});
                rows.push_back({reg, Swizzle4::identity(), false});
            } else {
                rows.push_back({fresh_temp(), Swizzle4::identity(), false});
            }
            written.push_back(have);
        }
        slot.known.reset();
        slot.rows = std::move(rows);
        slot.row_written = std::move(written);
    }

    // ---- calls ----

    LVal lower_call(const Expr& e, Frame& f) {
        std::vector<LVal> args;
        for (const auto& a : e.args) args.push_back(eval(*a, f));

        if (e.is_constructor) return lower_constructor(e, args, f);

        if (e.builtin_overload >= 0) return lower_builtin(e, args, f);

        if (e.user_function >= 0) {
            const FunctionDecl& callee = tt_.tree.functions[e.user_function];
            Frame inner;
            inner.fn = &callee;
            inner.locals.resize(callee.num_locals);
            inner.params.resize(callee.params.size());
            for (size_t i = 0; i < args.size(); ++i) {
                if (callee.params[i].is_out() && !callee.params[i].is_inout()) {
                    init_empty(inner.params[i], callee.params[i].type);
                } else {
                    inner.params[i] = args[i];
                    inner.params[i].type = callee.params[i].type;
                }
            }
            Sig sig = exec_body(callee.body->body, inner);
            for (size_t i = 0; i < e.args.size(); ++i)
                if (callee.params[i].is_output())
                    store_lvalue(*e.args[i], f, inner.params[i]);
            if (sig == Sig::Discard) {
                // Unreachable past this point on the constant path; the
                // caller stops at the propagated signal.
                throw DiscardUnwind{};
            }
            return inner.return_value;
        }
        fail("E_UNSUPPORTED", e.loc, "unresolved call");
    }

    LVal lower_constructor(const Expr& e, std::vector<LVal>& args, Frame& f) {
        (void)f;
        bool all_known = true;
        for (const auto& a : args)
            if (!a.is_known() || !a.known->fully_written()) all_known = false;
        TypeRef t = e.type;
        if (all_known) {
            Value out(t);
            int idx = 0;
            for (const auto& a : args) {
                for (int c = 0; c < a.known->count(); ++c) {
                    if (a.type->base == t->base) out.copy_component(idx, *a.known, c);
                    else out.set_from_double(idx, a.known->as_double(c));
                    ++idx;
                }
            }
            return known_value(out);
        }
        if (t->base == BaseType::Int)
            fail("E_UNSUPPORTED", e.loc,
                 "integer truncation of a run-time value cannot be lowered");
        // Assemble rows lane by lane from argument components.
        int lanes = row_lanes(t);
        int nrows = row_count(t);
        struct Piece {
            Operand op;   // source operand (replicated to the lane)
            bool known;
            float value;
        };
        std::vector<Piece> pieces;
        for (auto& a : args) {
            int n = a.type->component_count();
            if (a.is_known() && a.known->fully_written()) {
                for (int c = 0; c < n; ++c)
                    pieces.push_back({{}, true, component_float(*a.known, c)});
            } else {
                auto rows = value_rows(a, e.loc);
                int alanes = row_lanes(a.type);
                for (int c = 0; c < n; ++c) {
                    const Operand& row = rows[c / alanes];
                    pieces.push_back({replicated(row, c % alanes), false, 0});
                }
            }
        }
        // fixed components saturate on conversion.
        bool to_fixed = t->base == BaseType::Fixed;
        std::vector<Operand> out_rows;
        for (int r = 0; r < nrows; ++r) {
            RegRef reg = fresh_temp();
            std::array<float, 4> kpack{};
            uint8_t kmask = 0;
            for (int c = 0; c < lanes; ++c) {
                Piece& p = pieces[r * lanes + c];
                if (p.known) {
                    kmask |= static_cast<uint8_t>(1u << c);
                    kpack[c] = to_fixed ? kernels::clamp_fixed(p.value) : p.value;
                }
            }
            if (kmask)
                emit_to(reg, Opcode::MOV, kmask,
                        {{{RegFile::Const, pool_register(kpack)}, Swizzle4::identity(),
                          false}});
            for (int c = 0; c < lanes; ++c) {
                Piece& p = pieces[r * lanes + c];
                if (!p.known) {
                    Operand src = p.op;
                    if (to_fixed) {
                        Operand lo = emit(Opcode::MIN, static_cast<uint8_t>(1u << c),
                                          {src, pool_scalar(kernels::kFixedMax)});
                        src = emit(Opcode::MAX, static_cast<uint8_t>(1u << c),
                                   {lo, pool_scalar(-2.0f)});
                        src.swz = Swizzle4::replicate(c);
                    }
                    emit_to(reg, Opcode::MOV, static_cast<uint8_t>(1u << c), {src});
                }
            }
            out_rows.push_back({reg, Swizzle4::identity(), false});
        }
        return dynamic_value(t, std::move(out_rows));
    }

    LVal lower_builtin(const Expr& e, std::vector<LVal>& args, Frame& f) {
        (void)f;
        const BuiltinOverload& o = tt_.builtins.overload(e.builtin_overload);
        bool all_known = !o.needs_fragment;  // texture fetches never fold
        for (const auto& a : args)
            if (!a.is_known() || (a.known && !a.known->fully_written())) all_known = false;
        if (all_known) {
            std::vector<Value> vals;
            for (auto& a : args) vals.push_back(*a.known);
            return known_value(eval_builtin(o, vals, tt_.types));
        }
        switch (o.kind) {
        case BuiltinKind::MulMatVec: {
            auto m_rows = value_rows(args[0], e.loc);
            Operand v = value_rows(args[1], e.loc)[0];
            int cols = args[0].type->cols;
            int rows = args[0].type->rows;
            RegRef dst = fresh_temp();
            for (int i = 0; i < rows; ++i)
                emit_row_dot(dst, static_cast<uint8_t>(1u << i), m_rows[i], v, cols);
            return dynamic_value(e.type, {{dst, Swizzle4::identity(), false}});
        }
        case BuiltinKind::MulVecMat: {
            Operand v = value_rows(args[0], e.loc)[0];
            auto m_rows = value_rows(args[1], e.loc);
            int rows = args[1].type->rows;
            int cols = args[1].type->cols;
            uint8_t mask = lane_mask(cols);
            Operand acc = emit(Opcode::MUL, mask, {replicated(v, 0), m_rows[0]});
            for (int i = 1; i < rows; ++i)
                acc = emit(Opcode::MAD, mask, {replicated(v, i), m_rows[i], acc});
            return dynamic_value(e.type, {acc});
        }
        case BuiltinKind::MulMatMat: {
            auto a_rows = value_rows(args[0], e.loc);
            auto b_rows = value_rows(args[1], e.loc);
            int rows = args[0].type->rows;
            int inner = args[0].type->cols;
            int cols = args[1].type->cols;
            uint8_t mask = lane_mask(cols);
            std::vector<Operand> out;
            for (int i = 0; i < rows; ++i) {
                Operand acc = emit(Opcode::MUL, mask, {replicated(a_rows[i], 0), b_rows[0]});
                for (int k = 1; k < inner; ++k)
                    acc = emit(Opcode::MAD, mask,
                               {replicated(a_rows[i], k), b_rows[k], acc});
                out.push_back(acc);
            }
            return dynamic_value(e.type, std::move(out));
        }
        case BuiltinKind::Dot: {
            Operand a = value_rows(args[0], e.loc)[0];
            Operand b = value_rows(args[1], e.loc)[0];
            int n = args[0].type->length();
            RegRef dst = fresh_temp();
            emit_row_dot(dst, 0x1, a, b, n);
            return dynamic_value(e.type, {{dst, Swizzle4::replicate(0), false}});
        }
        case BuiltinKind::Abs: {
            auto rows = value_rows(args[0], e.loc);
            uint8_t mask = lane_mask(row_lanes(e.type));
            for (auto& r : rows) {
                Operand neg = r;
                neg.negate = !neg.negate;
                r = emit(Opcode::MAX, mask, {r, neg});
            }
            return dynamic_value(e.type, std::move(rows));
        }
        case BuiltinKind::Log2:
        case BuiltinKind::Rsqrt: {
            auto rows = value_rows(args[0], e.loc);
            uint8_t mask = lane_mask(row_lanes(e.type));
            Opcode op = o.kind == BuiltinKind::Log2 ? Opcode::LG2 : Opcode::RSQ;
            for (auto& r : rows) r = emit(op, mask, {r});
            return dynamic_value(e.type, std::move(rows));
        }
        case BuiltinKind::Min:
        case BuiltinKind::Max: {
            Operand a = value_rows(args[0], e.loc)[0];
            Operand b = value_rows(args[1], e.loc)[0];
            uint8_t mask = lane_mask(row_lanes(e.type));
            Opcode op = o.kind == BuiltinKind::Min ? Opcode::MIN : Opcode::MAX;
            return dynamic_value(e.type, {emit(op, mask, {a, b})});
        }
        case BuiltinKind::Reflect: {
            Operand i = value_rows(args[0], e.loc)[0];
            Operand n = value_rows(args[1], e.loc)[0];
            Operand d = emit(Opcode::DP3, 0x1, {n, i});
            Operand d2 = emit(Opcode::MUL, 0x1, {replicated(d), pool_scalar(2.0f)});
            Operand d2neg = replicated(d2);
            d2neg.negate = true;
            return dynamic_value(e.type, {emit(Opcode::MAD, 0x7, {n, d2neg, i})});
        }
        case BuiltinKind::Tex2D:
        case BuiltinKind::Tex2DProj:
        case BuiltinKind::Tex3DProj:
        case BuiltinKind::TexCube: {
            int unit = args[0].sampler_unit;
            if (unit < 0) fail("E_UNINIT", e.loc, "sampler argument has no texture unit");
            Operand coord = value_rows(args[1], e.loc)[0];
            Opcode op = (o.kind == BuiltinKind::Tex2DProj || o.kind == BuiltinKind::Tex3DProj)
                            ? Opcode::TXP
                            : Opcode::TEX;
            TexTarget target = TexTarget::T2D;
            if (o.kind == BuiltinKind::Tex3DProj) target = TexTarget::T3D;
            if (o.kind == BuiltinKind::TexCube) target = TexTarget::Cube;
            return dynamic_value(e.type, {emit(op, 0xF, {coord}, unit, target)});
        }
        }
        fail("E_UNSUPPORTED", e.loc, "cannot lower builtin");
    }

    // dst.{mask} = dot(a, b) over n components, shaped per length: MUL for
    // 1, MUL+ADD for 2, DP3/DP4 for 3/4.
    void emit_row_dot(RegRef dst, uint8_t mask, Operand a, Operand b, int n) {
        if (n == 1) {
            emit_to(dst, Opcode::MUL, mask, {replicated(a, 0), replicated(b, 0)});
            return;
        }
        if (n == 2) {
            Operand prod = emit(Opcode::MUL, 0x3, {a, b});
            emit_to(dst, Opcode::ADD, mask, {replicated(prod, 0), replicated(prod, 1)});
            return;
        }
        emit_to(dst, n == 3 ? Opcode::DP3 : Opcode::DP4, mask, {a, b});
    }
};

}  // namespace

LowerResult lower(const TypedTree& tree, const BindingTable& bindings,
                  const ProfileDescriptor& profile, Diagnostics& diags) {
    LowerResult result;
    Lowerer lowerer(tree, bindings, profile);
    try {
        result.ir = lowerer.run(result.uniform_registers);
    } catch (const LowerError& err) {
        diags.error(err.code, err.loc, err.message);
    } catch (const VmError& err) {
        diags.error("E_UNINIT", {}, err.what());
    }
    return result;
}

}  // namespace cg

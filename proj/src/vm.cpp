#include <cmath>

#include "cg/vm.hpp"

namespace cg {

// ---------------------------------------------------------------------------
// Tree interpreter
// ---------------------------------------------------------------------------

namespace {

enum class Sig { Normal, Break, Continue, Return, Discard };

class TreeInterp {
public:
    TreeInterp(const TypedTree& tt, const ShadeInput& input) : tt_(tt), input_(input) {
        globals_ = evaluate_globals(tt);
    }

    ExecResult run() {
        const FunctionDecl& entry = tt_.entry();
        Frame frame;
        frame.fn = &entry;
        frame.locals.resize(entry.num_locals);
        frame.params.resize(entry.params.size());
        bind_entry(frame);

        Sig sig = exec_body(entry.body->body, frame);
        ExecResult result;
        if (sig == Sig::Discard) {
            result.discarded = true;
            return result;
        }
        collect_outputs(frame, result);
        return result;
    }

private:
    struct Frame {
        const FunctionDecl* fn = nullptr;
        std::vector<Value> locals;
        std::vector<Value> params;
        Value return_value;
    };

    const TypedTree& tt_;
    const ShadeInput& input_;
    std::vector<Value> globals_;
    long steps_ = 0;

    void budget() {
        if (++steps_ > 50'000'000L) throw VmError("execution budget exceeded");
    }

    void bind_entry(Frame& frame) {
        const FunctionDecl& entry = *frame.fn;
        int next_unit = 0;  // samplers take units in declaration order
        for (size_t i = 0; i < entry.params.size(); ++i) {
            const ParamDecl& p = entry.params[i];
            Value& slot = frame.params[i];
            if (p.is_uniform()) {
                if (p.type->is_sampler()) {
                    int unit = next_unit++;
                    auto it = input_.textures.find(unit);
                    if (it == input_.textures.end())
                        throw VmError("missing texture for unit " + std::to_string(unit) +
                                      " (sampler '" + p.name + "')");
                    slot = Value(p.type);
                    slot.sampler.unit = unit;
                    slot.sampler.image = &it->second;
                    continue;
                }
                auto it = input_.uniforms.find(p.name);
                if (it == input_.uniforms.end())
                    throw VmError("missing uniform '" + p.name + "'");
                slot = convert_value(it->second, p.type);
                continue;
            }
            if (p.is_out() && !p.is_inout()) {
                slot = Value(p.type);  // assigned by the program
                continue;
            }
            auto it = input_.varyings.find(p.semantic);
            if (it == input_.varyings.end())
                throw VmError("missing varying input " + p.semantic);
            Value v(p.type);
            for (int c = 0; c < p.type->component_count() && c < 4; ++c)
                v.set_f(c, it->second[c]);
            slot = v;
        }
    }

    void collect_outputs(Frame& frame, ExecResult& result) {
        const FunctionDecl& entry = *frame.fn;
        for (size_t i = 0; i < entry.params.size(); ++i) {
            const ParamDecl& p = entry.params[i];
            if (!p.is_output()) continue;
            store_output(result, p.semantic, frame.params[i]);
        }
        if (entry.return_type && !entry.return_type->is_void())
            store_output(result, entry.return_semantic, frame.return_value);
    }

    void store_output(ExecResult& result, const std::string& semantic, const Value& v) {
        OutputValue out;
        int n = v.type ? v.type->component_count() : 0;
        for (int c = 0; c < n && c < 4; ++c) {
            out.value[c] = component_float(v, c);
            out.mask |= static_cast<uint8_t>(1u << c);
        }
        result.outputs[semantic.empty() ? std::string("COLOR") : semantic] = out;
    }

    static float component_float(const Value& v, int idx) {
        switch (v.type->base) {
        case BaseType::Int: return static_cast<float>(v.i(idx));
        case BaseType::Bool: return v.b(idx) ? 1.0f : 0.0f;
        default: return v.f(idx);
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
        budget();
        switch (s.kind) {
        case StmtKind::Decl:
            if (s.init) {
                f.locals[s.decl_slot] = eval(*s.init, f);
            } else {
                f.locals[s.decl_slot] = empty_value(s.decl_type);
            }
            return Sig::Normal;
        case StmtKind::ExprStmt:
            eval(*s.expr, f);
            return Sig::Normal;
        case StmtKind::If: {
            Value cond = eval(*s.expr, f);
            const auto& branch = cond.b(0) ? s.body : s.else_body;
            return exec_body(branch, f);
        }
        case StmtKind::While:
            for (;;) {
                budget();
                if (!eval(*s.expr, f).b(0)) return Sig::Normal;
                Sig sig = exec_body(s.body, f);
                if (sig == Sig::Break) return Sig::Normal;
                if (sig == Sig::Return || sig == Sig::Discard) return sig;
            }
        case StmtKind::DoWhile:
            for (;;) {
                budget();
                Sig sig = exec_body(s.body, f);
                if (sig == Sig::Break) return Sig::Normal;
                if (sig == Sig::Return || sig == Sig::Discard) return sig;
                if (!eval(*s.expr, f).b(0)) return Sig::Normal;
            }
        case StmtKind::For: {
            if (s.init_stmt) exec(*s.init_stmt, f);
            for (;;) {
                budget();
                if (s.expr && !eval(*s.expr, f).b(0)) return Sig::Normal;
                Sig sig = exec_body(s.body, f);
                if (sig == Sig::Break) return Sig::Normal;
                if (sig == Sig::Return || sig == Sig::Discard) return sig;
                if (s.step) eval(*s.step, f);
            }
        }
        case StmtKind::Break: return Sig::Break;
        case StmtKind::Continue: return Sig::Continue;
        case StmtKind::Return:
            if (s.expr) f.return_value = eval(*s.expr, f);
            return Sig::Return;
        case StmtKind::Discard: return Sig::Discard;
        case StmtKind::Block: return exec_body(s.body, f);
        }
        return Sig::Normal;
    }

    Value empty_value(TypeRef t) {
        Value v(t);
        if (t->is_array()) {
            v.array = std::make_shared<ArrayData>();
            for (int i = 0; i < t->extent; ++i) v.array->elements.push_back(empty_value(t->element));
        } else if (t->is_record()) {
            v.record = std::make_shared<RecordData>();
            for (const auto& field : t->fields)
                v.record->fields.emplace_back(field.name, empty_value(field.type));
        }
        return v;
    }

    // ---- expressions ----

    Value eval(const Expr& e, Frame& f) {
        budget();
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
            default: throw VmError("unresolved identifier");
            }
        case ExprKind::Convert:
        case ExprKind::Smear:
            return convert_value(eval(*e.a, f), e.type);
        case ExprKind::Member: {
            Value v = eval(*e.a, f);
            switch (e.member_access) {
            case MemberAccess::Swizzle: {
                Value out(e.type);
                for (size_t i = 0; i < e.swizzle.size(); ++i)
                    out.copy_component(static_cast<int>(i), v, e.swizzle[i]);
                return out;
            }
            case MemberAccess::MatrixElement: {
                Value out(e.type);
                out.copy_component(0, v, e.matrix_row * e.a->type->cols + e.matrix_col);
                return out;
            }
            case MemberAccess::RecordField: {
                if (!v.record) throw VmError("record value missing data");
                for (auto& [name, val] : v.record->fields)
                    if (name == e.text) return val;
                throw VmError("record value missing field " + e.text);
            }
            default: throw VmError("unresolved member");
            }
        }
        case ExprKind::Index: {
            Value base = eval(*e.a, f);
            Value idx = eval(*e.b, f);
            int i = idx.i(0);
            TypeRef bt = e.a->type;
            int extent = bt->is_array() ? bt->extent : bt->rows;
            if (i < 0 || i >= extent) throw VmError("index out of range");
            if (bt->is_array()) return base.array->elements[i];
            Value out(e.type);
            if (bt->is_vector()) {
                out.copy_component(0, base, i);
            } else {
                for (int c = 0; c < bt->cols; ++c)
                    out.copy_component(c, base, i * bt->cols + c);
            }
            return out;
        }
        case ExprKind::Unary: {
            if (e.text == "++" || e.text == "--") {
                Value cur = eval(*e.a, f);
                Value one(e.a->type);
                for (int i = 0; i < one.count(); ++i) {
                    if (one.type->base == BaseType::Int) one.set_i(i, 1);
                    else one.set_f(i, 1.0f);
                }
                Value next = eval_binary(e.text == "++" ? "+" : "-", cur, one);
                store(*e.a, f, next);
                return e.postfix ? cur : next;
            }
            return eval_unary(e.text, eval(*e.a, f));
        }
        case ExprKind::Binary: {
            Value a = eval(*e.a, f);
            Value b = eval(*e.b, f);
            return eval_binary(e.text, a, b);
        }
        case ExprKind::Compare: {
            Value a = eval(*e.a, f);
            Value b = eval(*e.b, f);
            return eval_compare(e.text, a, b, e.type);
        }
        case ExprKind::Logical: {
            Value a = eval(*e.a, f);
            if (e.text == "&&" && !a.b(0)) return Value::scalar_bool(e.type, false);
            if (e.text == "||" && a.b(0)) return Value::scalar_bool(e.type, true);
            Value b = eval(*e.b, f);
            return Value::scalar_bool(e.type, b.b(0));
        }
        case ExprKind::Cond:
            return eval(*e.a, f).b(0) ? eval(*e.b, f) : eval(*e.c, f);
        case ExprKind::Comma:
            eval(*e.a, f);
            return eval(*e.b, f);
        case ExprKind::Assign: {
            Value rhs = eval(*e.b, f);
            if (e.text != "=") {
                Value cur = eval(*e.a, f);
                std::string op(1, e.text[0]);
                rhs = eval_binary(op, cur, rhs);
            }
            store(*e.a, f, rhs);
            return rhs;
        }
        case ExprKind::Call:
            return eval_call(e, f);
        }
        throw VmError("unhandled expression");
    }

    Value eval_call(const Expr& e, Frame& f) {
        std::vector<Value> args;
        for (const auto& a : e.args) {
            // Pure out arguments carry no value in.
            args.emplace_back();
        }
        const FunctionDecl* callee =
            e.user_function >= 0 ? &tt_.tree.functions[e.user_function] : nullptr;
        for (size_t i = 0; i < e.args.size(); ++i) {
            bool pure_out = callee && callee->params[i].is_out() && !callee->params[i].is_inout();
            if (pure_out) {
                args[i] = Value(callee->params[i].type);
            } else {
                args[i] = eval(*e.args[i], f);
            }
        }

        if (e.is_constructor) {
            Value out(e.type);
            if (e.type->is_matrix() && static_cast<int>(args.size()) == e.type->rows &&
                args[0].type->is_vector()) {
                int idx = 0;
                for (const auto& a : args)
                    for (int c = 0; c < a.count(); ++c) out.copy_component(idx++, a, c);
                return out;
            }
            int idx = 0;
            for (const auto& a : args) {
                for (int c = 0; c < a.count(); ++c) {
                    if (a.type->base == e.type->base) out.copy_component(idx, a, c);
                    else out.set_from_double(idx, a.as_double(c));
                    ++idx;
                }
            }
            return out;
        }
        if (e.builtin_overload >= 0)
            return eval_builtin(tt_.builtins.overload(e.builtin_overload), args, tt_.types);
        if (!callee) throw VmError("unresolved call");

        Frame inner;
        inner.fn = callee;
        inner.locals.resize(callee->num_locals);
        inner.params = std::move(args);
        for (size_t i = 0; i < inner.params.size(); ++i)
            if (!inner.params[i].type) inner.params[i] = Value(callee->params[i].type);
        Sig sig = exec_body(callee->body->body, inner);
        for (size_t i = 0; i < e.args.size(); ++i)
            if (callee->params[i].is_output()) store(*e.args[i], f, inner.params[i]);
        if (sig == Sig::Discard) throw DiscardSignal{};
        return inner.return_value;
    }

public:
    struct DiscardSignal {};

private:
    // ---- lvalues ----

    void store(const Expr& e, Frame& f, const Value& v) {
        switch (e.kind) {
        case ExprKind::Ident: {
            Value* slot = nullptr;
            if (e.ref_kind == RefKind::Local) slot = &f.locals[e.ref_slot];
            else if (e.ref_kind == RefKind::Param) slot = &f.params[e.ref_slot];
            else throw VmError("cannot assign here");
            *slot = v.type == e.type ? v : convert_value(v, e.type);
            return;
        }
        case ExprKind::Member: {
            if (e.member_access == MemberAccess::Swizzle) {
                Value* base = lvalue_slot(*e.a, f);
                for (size_t i = 0; i < e.swizzle.size(); ++i)
                    base->copy_component(e.swizzle[i], v, static_cast<int>(i));
                return;
            }
            if (e.member_access == MemberAccess::MatrixElement) {
                Value* base = lvalue_slot(*e.a, f);
                base->copy_component(e.matrix_row * e.a->type->cols + e.matrix_col, v, 0);
                return;
            }
            if (e.member_access == MemberAccess::RecordField) {
                Value* base = lvalue_slot(*e.a, f);
                if (!base->record) throw VmError("record value missing data");
                for (auto& [name, val] : base->record->fields) {
                    if (name == e.text) {
                        val = v.type == e.type ? v : convert_value(v, e.type);
                        return;
                    }
                }
                throw VmError("record value missing field " + e.text);
            }
            throw VmError("cannot assign here");
        }
        case ExprKind::Index: {
            Value idx = eval(*e.b, f);
            int i = idx.i(0);
            Value* base = lvalue_slot(*e.a, f);
            TypeRef bt = e.a->type;
            if (bt->is_array()) {
                if (!base->array || i < 0 ||
                    i >= static_cast<int>(base->array->elements.size()))
                    throw VmError("index out of range");
                base->array->elements[i] = v;
                return;
            }
            if (bt->is_vector()) {
                if (i < 0 || i >= bt->rows) throw VmError("index out of range");
                base->copy_component(i, v, 0);
                return;
            }
            if (bt->is_matrix()) {
                if (i < 0 || i >= bt->rows) throw VmError("index out of range");
                for (int c = 0; c < bt->cols; ++c)
                    base->copy_component(i * bt->cols + c, v, c);
                return;
            }
            throw VmError("cannot assign here");
        }
        default:
            throw VmError("cannot assign here");
        }
    }

    // Mutable slot holding the value an lvalue chain names.
    Value* lvalue_slot(const Expr& e, Frame& f) {
        switch (e.kind) {
        case ExprKind::Ident:
            if (e.ref_kind == RefKind::Local) return &f.locals[e.ref_slot];
            if (e.ref_kind == RefKind::Param) return &f.params[e.ref_slot];
            throw VmError("cannot assign here");
        case ExprKind::Member: {
            Value* base = lvalue_slot(*e.a, f);
            if (e.member_access == MemberAccess::RecordField) {
                if (!base->record) throw VmError("record value missing data");
                for (auto& [name, val] : base->record->fields)
                    if (name == e.text) return &val;
                throw VmError("record value missing field " + e.text);
            }
            throw VmError("cannot assign through this member");
        }
        case ExprKind::Index: {
            Value idx = eval(*e.b, f);
            int i = idx.i(0);
            Value* base = lvalue_slot(*e.a, f);
            if (!e.a->type->is_array()) throw VmError("cannot assign through this index");
            if (!base->array || i < 0 || i >= static_cast<int>(base->array->elements.size()))
                throw VmError("index out of range");
            return &base->array->elements[i];
        }
        default:
            throw VmError("cannot assign here");
        }
    }
};

}  // namespace

ExecResult run_cg(const TypedTree& tree, const ShadeInput& input) {
    TreeInterp interp(tree, input);
    try {
        return interp.run();
    } catch (TreeInterp::DiscardSignal&) {
        ExecResult r;
        r.discarded = true;
        return r;
    }
}

// ---------------------------------------------------------------------------
// Assembly interpreter
// ---------------------------------------------------------------------------

namespace {

struct Register {
    std::array<float, 4> lanes{};
    uint8_t written = 0;
};

struct Machine {
    std::vector<Register> inputs;
    std::vector<Register> constants;
    std::vector<Register> temps;
    std::vector<Register> outputs;
    std::map<int, const TextureImage*> textures;

    Register& file(RegFile f, int index) {
        std::vector<Register>* regs = nullptr;
        switch (f) {
        case RegFile::Input: regs = &inputs; break;
        case RegFile::Const: regs = &constants; break;
        case RegFile::Temp: regs = &temps; break;
        case RegFile::Output: regs = &outputs; break;
        }
        if (index < 0 || index >= static_cast<int>(regs->size()))
            throw VmError("register index out of range");
        return (*regs)[index];
    }
};

float read_lane(Machine& m, const Operand& op, int lane) {
    Register& reg = m.file(op.reg.file, op.reg.index);
    int src_lane = op.swz.sel[lane];
    if (!(reg.written & (1u << src_lane))) {
        if (op.reg.file == RegFile::Temp)
            throw VmError("read of uninitialized temporary lane");
        throw VmError("read of unwritten register lane");
    }
    float v = reg.lanes[src_lane];
    return op.negate ? -v : v;
}

void write_lanes(Machine& m, const RegRef& dst, uint8_t mask,
                 const std::array<float, 4>& values) {
    Register& reg = m.file(dst.file, dst.index);
    for (int lane = 0; lane < 4; ++lane) {
        if (!(mask & (1u << lane))) continue;
        reg.lanes[lane] = values[lane];
        reg.written |= static_cast<uint8_t>(1u << lane);
    }
}

}  // namespace

ExecResult run_asm(const AssemblyListing& listing, const ShadeInput& input,
                   const BindingTable& bindings) {
    auto lk = lookup_profile(listing.profile_name);
    if (!lk.profile) throw VmError("listing names an unusable profile");
    const ProfileDescriptor& profile = *lk.profile;

    Machine m;
    m.inputs.resize(16);
    m.constants.resize(std::max(profile.limits.max_constants, 32));
    m.temps.resize(std::max(profile.limits.max_temporaries, listing.num_temps));
    m.outputs.resize(12);

    // Uniform values load into their bound constant registers.
    for (const auto& u : bindings.uniforms) {
        if (u.is_sampler) continue;
        auto it = input.uniforms.find(u.name);
        if (it == input.uniforms.end()) throw VmError("missing uniform '" + u.name + "'");
        Value v = convert_value(it->second, u.type);
        int lanes_per_row = u.type->is_matrix() ? u.type->cols : u.type->length();
        int rows = u.type->is_matrix() ? u.type->rows : 1;
        if (u.type->is_array()) {
            TypeRef el = u.type->element;
            int per = el->is_matrix() ? el->rows : 1;
            int el_lanes = el->is_matrix() ? el->cols : el->length();
            for (int e = 0; e < u.type->extent; ++e) {
                const Value& ev = v.array->elements[e];
                for (int r = 0; r < per; ++r) {
                    Register& reg = m.file(RegFile::Const, u.register_base + e * per + r);
                    for (int c = 0; c < el_lanes; ++c)
                        reg.lanes[c] = ev.f(r * el_lanes + c);
                    reg.written = 0xF;
                }
            }
            continue;
        }
        for (int r = 0; r < rows; ++r) {
            Register& reg = m.file(RegFile::Const, u.register_base + r);
            for (int c = 0; c < lanes_per_row; ++c) {
                int comp = r * lanes_per_row + c;
                switch (v.type->base) {
                case BaseType::Int: reg.lanes[c] = static_cast<float>(v.i(comp)); break;
                case BaseType::Bool: reg.lanes[c] = v.b(comp) ? 1.0f : 0.0f; break;
                default: reg.lanes[c] = v.f(comp); break;
                }
            }
            reg.written = 0xF;
        }
    }
    // Literal pool entries.
    for (const auto& entry : listing.pool) {
        Register& reg = m.file(RegFile::Const, entry.reg);
        reg.lanes = entry.value;
        reg.written = 0xF;
    }
    // Varying inputs.
    for (const auto& in : bindings.inputs) {
        auto it = input.varyings.find(in.semantic);
        if (it == input.varyings.end())
            throw VmError("missing varying input " + in.semantic);
        Register& reg = m.file(RegFile::Input, in.register_index);
        reg.lanes = it->second;
        reg.written = 0xF;
    }
    // Texture units.
    for (const auto& u : bindings.uniforms) {
        if (!u.is_sampler) continue;
        auto it = input.textures.find(u.texture_unit);
        if (it == input.textures.end())
            throw VmError("missing texture for unit " + std::to_string(u.texture_unit));
        m.textures[u.texture_unit] = &it->second;
    }

    ExecResult result;
    for (const auto& inst : listing.code) {
        auto src = [&](int s, int lane) { return read_lane(m, inst.srcs[s], lane); };
        std::array<float, 4> out{};
        switch (inst.op) {
        case Opcode::MOV:
            for (int l = 0; l < 4; ++l)
                if (inst.mask & (1u << l)) out[l] = src(0, l);
            break;
        case Opcode::MUL:
            for (int l = 0; l < 4; ++l)
                if (inst.mask & (1u << l)) out[l] = kernels::mul(src(0, l), src(1, l));
            break;
        case Opcode::ADD:
            for (int l = 0; l < 4; ++l)
                if (inst.mask & (1u << l)) out[l] = kernels::add(src(0, l), src(1, l));
            break;
        case Opcode::MAD:
            for (int l = 0; l < 4; ++l)
                if (inst.mask & (1u << l))
                    out[l] = kernels::mad(src(0, l), src(1, l), src(2, l));
            break;
        case Opcode::DP3:
        case Opcode::DP4: {
            int n = inst.op == Opcode::DP3 ? 3 : 4;
            float a[4], b[4];
            for (int l = 0; l < n; ++l) {
                a[l] = src(0, l);
                b[l] = src(1, l);
            }
            float d = kernels::dot(a, b, n);
            for (int l = 0; l < 4; ++l)
                if (inst.mask & (1u << l)) out[l] = d;
            break;
        }
        case Opcode::RSQ:
            for (int l = 0; l < 4; ++l)
                if (inst.mask & (1u << l)) out[l] = kernels::rsqrt(src(0, l));
            break;
        case Opcode::LG2:
            for (int l = 0; l < 4; ++l)
                if (inst.mask & (1u << l)) out[l] = kernels::log2(src(0, l));
            break;
        case Opcode::MIN:
            for (int l = 0; l < 4; ++l)
                if (inst.mask & (1u << l)) out[l] = kernels::vmin(src(0, l), src(1, l));
            break;
        case Opcode::MAX:
            for (int l = 0; l < 4; ++l)
                if (inst.mask & (1u << l)) out[l] = kernels::vmax(src(0, l), src(1, l));
            break;
        case Opcode::SLT:
            for (int l = 0; l < 4; ++l)
                if (inst.mask & (1u << l)) out[l] = kernels::slt(src(0, l), src(1, l));
            break;
        case Opcode::SGE:
            for (int l = 0; l < 4; ++l)
                if (inst.mask & (1u << l)) out[l] = kernels::sge(src(0, l), src(1, l));
            break;
        case Opcode::TEX:
        case Opcode::TXP: {
            auto it = m.textures.find(inst.tex_unit);
            if (it == m.textures.end())
                throw VmError("texture unit " + std::to_string(inst.tex_unit) + " unbound");
            const TextureImage& img = *it->second;
            std::array<float, 4> texel{};
            if (inst.op == Opcode::TEX) {
                if (inst.target == TexTarget::T2D)
                    texel = sample_2d(img, src(0, 0), src(0, 1));
                else if (inst.target == TexTarget::T3D)
                    texel = sample_3d(img, src(0, 0), src(0, 1), src(0, 2));
                else
                    texel = sample_cube(img, src(0, 0), src(0, 1), src(0, 2));
            } else {
                float coord[4] = {0, 0, 0, src(0, 3)};
                coord[0] = src(0, 0);
                coord[1] = src(0, 1);
                if (inst.target != TexTarget::T2D) coord[2] = src(0, 2);
                texel = inst.target == TexTarget::T3D ? sample_3d_proj(img, coord)
                                                      : sample_2d_proj(img, coord);
            }
            for (int l = 0; l < 4; ++l)
                if (inst.mask & (1u << l)) out[l] = texel[l];
            break;
        }
        case Opcode::KIL: {
            bool kill = false;
            for (int l = 0; l < 4; ++l)
                if (src(0, l) < 0.0f) kill = true;
            if (kill) {
                result.discarded = true;
                result.outputs.clear();
                return result;
            }
            continue;
        }
        }
        if (inst.has_dst()) write_lanes(m, inst.dst, inst.mask, out);
    }

    for (const auto& o : bindings.outputs) {
        Register& reg = m.file(RegFile::Output, o.register_index);
        OutputValue out;
        out.value = reg.lanes;
        out.mask = reg.written;
        result.outputs[o.semantic] = out;
    }
    return result;
}

CompareReport compare(const ExecResult& a, const ExecResult& b, float tol) {
    CompareReport report;
    if (a.discarded != b.discarded) {
        report.equal = false;
        report.message = "discard flags differ";
        return report;
    }
    if (a.outputs.size() != b.outputs.size()) {
        report.equal = false;
        report.message = "output semantic sets differ";
        return report;
    }
    for (const auto& [semantic, av] : a.outputs) {
        auto it = b.outputs.find(semantic);
        if (it == b.outputs.end()) {
            report.equal = false;
            report.message = "missing semantic " + semantic;
            return report;
        }
        const OutputValue& bv = it->second;
        if (av.mask != bv.mask) {
            report.equal = false;
            report.message = "component masks differ for " + semantic;
            return report;
        }
        for (int c = 0; c < 4; ++c) {
            if (!(av.mask & (1u << c))) continue;
            float diff = std::fabs(av.value[c] - bv.value[c]);
            bool bad = !(diff <= tol);  // NaN counts as a mismatch
            if (diff > report.worst || (bad && report.equal)) {
                if (diff > report.worst) {
                    report.worst = diff;
                    report.worst_semantic = semantic;
                    report.worst_component = c;
                }
            }
            if (bad) {
                report.equal = false;
                report.message = semantic + " component " + std::to_string(c) + " differs by " +
                                 std::to_string(diff);
            }
        }
    }
    return report;
}

}  // namespace cg

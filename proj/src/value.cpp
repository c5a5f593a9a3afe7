#include "cg/value.hpp"

#include <bit>
#include <cmath>

namespace cg {

namespace kernels {

float dot(const float* a, const float* b, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return static_cast<float>(acc);
}

float rsqrt(float x) {
    return static_cast<float>(1.0 / std::sqrt(static_cast<double>(x)));
}

float log2(float x) { return static_cast<float>(std::log2(static_cast<double>(x))); }

float rcp(float x) { return static_cast<float>(1.0 / static_cast<double>(x)); }

}  // namespace kernels

Value::Value(TypeRef t) : type(t) {
    if (t && t->is_numeric()) num.count = static_cast<uint8_t>(t->component_count());
}

Value Value::scalar_float(TypeRef t, float v) {
    Value r(t);
    r.set_f(0, t->base == BaseType::Fixed ? kernels::clamp_fixed(v) : v);
    return r;
}

Value Value::scalar_int(TypeRef t, int32_t v) {
    Value r(t);
    r.set_i(0, v);
    return r;
}

Value Value::scalar_bool(TypeRef t, bool v) {
    Value r(t);
    r.set_b(0, v);
    return r;
}

bool Value::fully_written() const {
    if (!is_numeric()) return true;
    return num.written == ((1u << num.count) - 1u);
}

static void check_read(const Value& v, int idx) {
    if (idx < 0 || idx >= v.num.count)
        throw VmError("component index out of range");
    if (!v.component_written(idx))
        throw VmError("read of uninitialized component " + std::to_string(idx) + " of " +
                      TypeArena::name_of(v.type));
}

float Value::f(int idx) const {
    check_read(*this, idx);
    return std::bit_cast<float>(num.bits[idx]);
}

int32_t Value::i(int idx) const {
    check_read(*this, idx);
    return std::bit_cast<int32_t>(num.bits[idx]);
}

bool Value::b(int idx) const {
    check_read(*this, idx);
    return num.bits[idx] != 0;
}

double Value::as_double(int idx) const {
    switch (type->base) {
    case BaseType::Int: return static_cast<double>(i(idx));
    case BaseType::Bool: return b(idx) ? 1.0 : 0.0;
    default: return static_cast<double>(f(idx));
    }
}

void Value::set_f(int idx, float v) {
    num.bits[idx] = std::bit_cast<uint32_t>(v);
    num.written |= 1u << idx;
}

void Value::set_i(int idx, int32_t v) {
    num.bits[idx] = std::bit_cast<uint32_t>(v);
    num.written |= 1u << idx;
}

void Value::set_b(int idx, bool v) {
    num.bits[idx] = v ? 1u : 0u;
    num.written |= 1u << idx;
}

void Value::set_from_double(int idx, double v) {
    switch (type->base) {
    case BaseType::Int: set_i(idx, static_cast<int32_t>(v)); break;
    case BaseType::Bool: set_b(idx, v != 0.0); break;
    case BaseType::Fixed: set_f(idx, kernels::clamp_fixed(static_cast<float>(v))); break;
    default: set_f(idx, static_cast<float>(v)); break;
    }
}

void Value::copy_component(int dst_idx, const Value& src, int src_idx) {
    check_read(src, src_idx);
    num.bits[dst_idx] = src.num.bits[src_idx];
    num.written |= 1u << dst_idx;
}

Value convert_value(const Value& v, TypeRef target) {
    if (v.type == target) return v;
    if (!target->is_numeric() || !v.is_numeric())
        throw VmError("invalid conversion to " + TypeArena::name_of(target));

    Value out(target);
    int out_count = target->component_count();
    int in_count = v.count();
    for (int i = 0; i < out_count; ++i) {
        int src = in_count == 1 ? 0 : i;  // scalar smear replicates component 0
        if (src >= in_count) throw VmError("conversion component mismatch");
        if (v.type->base == target->base) {
            out.copy_component(i, v, src);
        } else {
            out.set_from_double(i, v.as_double(src));
        }
    }
    return out;
}

static bool same_shape(const Value& a, const Value& b) {
    return a.type->kind == b.type->kind && a.count() == b.count() &&
           a.type->rows == b.type->rows && a.type->cols == b.type->cols;
}

Value eval_binary(const std::string& op, const Value& a, const Value& b) {
    if (!a.is_numeric() || !b.is_numeric() || !same_shape(a, b) || a.type->base != b.type->base)
        throw VmError("binary operand shape mismatch");
    Value out(a.type);
    int n = a.count();
    if (a.type->base == BaseType::Int) {
        for (int i = 0; i < n; ++i) {
            int32_t x = a.i(i), y = b.i(i), r = 0;
            if (op == "+") r = x + y;
            else if (op == "-") r = x - y;
            else if (op == "*") r = x * y;
            else if (op == "/") {
                if (y == 0) throw VmError("integer division by zero");
                r = x / y;
            } else if (op == "%") {
                if (y == 0) throw VmError("integer remainder by zero");
                r = x % y;
            } else {
                throw VmError("bad int operator " + op);
            }
            out.set_i(i, r);
        }
        return out;
    }
    bool fixed = a.type->base == BaseType::Fixed;
    for (int i = 0; i < n; ++i) {
        float x = a.f(i), y = b.f(i), r = 0;
        if (op == "+") r = kernels::add(x, y);
        else if (op == "-") r = kernels::add(x, -y);
        else if (op == "*") r = kernels::mul(x, y);
        else if (op == "/") r = x / y;
        else throw VmError("bad float operator " + op);
        out.set_f(i, fixed ? kernels::clamp_fixed(r) : r);
    }
    return out;
}

Value eval_unary(const std::string& op, const Value& a) {
    if (op == "+") return a;
    Value out(a.type);
    int n = a.count();
    if (op == "!") {
        for (int i = 0; i < n; ++i) out.set_b(i, !a.b(i));
        return out;
    }
    if (op == "-") {
        if (a.type->base == BaseType::Int) {
            for (int i = 0; i < n; ++i) out.set_i(i, -a.i(i));
        } else {
            for (int i = 0; i < n; ++i) out.set_f(i, -a.f(i));
        }
        return out;
    }
    throw VmError("bad unary operator " + op);
}

Value eval_compare(const std::string& op, const Value& a, const Value& b, TypeRef bool_type) {
    if (a.count() != 1 || b.count() != 1 || a.type->base != b.type->base)
        throw VmError("comparison operand mismatch");
    double x = a.as_double(0), y = b.as_double(0);
    bool r;
    if (op == "<") r = x < y;
    else if (op == "<=") r = x <= y;
    else if (op == ">") r = x > y;
    else if (op == ">=") r = x >= y;
    else if (op == "==") r = x == y;
    else if (op == "!=") r = x != y;
    else throw VmError("bad comparison " + op);
    return Value::scalar_bool(bool_type, r);
}

}  // namespace cg

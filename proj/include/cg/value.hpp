#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cg/types.hpp"

namespace cg {

// Raised by interpreter-level faults: uninitialized reads, missing inputs,
// register range violations.
class VmError : public std::runtime_error {
public:
    explicit VmError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Scalar arithmetic kernels.
//
// Both interpreters (the typed-tree evaluator and the assembly machine) and
// the compile-time constant folder call these, so a value computed three
// different ways comes out bit-identical. float/half/double all evaluate in
// binary32; dot products, rsqrt and log2 go through double internally and
// round once at the boundary.
// ---------------------------------------------------------------------------
namespace kernels {

inline float mul(float a, float b) { return a * b; }
inline float add(float a, float b) { return a + b; }
// Single-rounding multiply-add; the double product of two binary32 values
// is exact, so only the final rounding remains.
inline float mad(float a, float b, float c) {
    return static_cast<float>(static_cast<double>(a) * static_cast<double>(b) +
                              static_cast<double>(c));
}
float dot(const float* a, const float* b, int n);  // double accumulate, one rounding
float rsqrt(float x);
float log2(float x);
float rcp(float x);  // round(1/double(x)); used only by the reference side of tests
inline float vmin(float a, float b) { return b < a ? b : a; }
inline float vmax(float a, float b) { return a < b ? b : a; }
inline float slt(float a, float b) { return a < b ? 1.0f : 0.0f; }
inline float sge(float a, float b) { return a >= b ? 1.0f : 0.0f; }

// fixed saturates to [-2, +2) after every operation; the upper bound is the
// largest binary32 strictly below 2.
constexpr float kFixedMax = 0x1.fffffep0f;
constexpr float kFixedMin = -2.0f;
inline float clamp_fixed(float x) {
    if (x < kFixedMin) return kFixedMin;
    if (x > kFixedMax) return kFixedMax;
    return x;  // NaN passes through
}

}  // namespace kernels

// ---------------------------------------------------------------------------
// Runtime/compile-time values.
// ---------------------------------------------------------------------------

struct TextureImage;  // stdlib

// Numeric payload: up to 16 scalar components (4x4 matrix), each tracked
// for initialization. Bits are interpreted per the owning Value's base type.
struct NumericData {
    std::array<uint32_t, 16> bits{};
    uint16_t written = 0;  // bit i set when component i holds a value
    uint8_t count = 0;
};

struct Value;

struct RecordData {
    std::vector<std::pair<std::string, Value>> fields;
};
struct ArrayData {
    std::vector<Value> elements;
};
struct SamplerData {
    int unit = -1;
    const TextureImage* image = nullptr;
};

// A first-class value: scalar/vector/matrix numeric data, a record, an
// array, or a sampler binding. Component accessors check initialization.
struct Value {
    TypeRef type = nullptr;
    NumericData num;
    std::shared_ptr<RecordData> record;
    std::shared_ptr<ArrayData> array;
    SamplerData sampler;

    Value() = default;
    explicit Value(TypeRef t);

    static Value scalar_float(TypeRef t, float v);
    static Value scalar_int(TypeRef t, int32_t v);
    static Value scalar_bool(TypeRef t, bool v);

    bool is_numeric() const { return type && type->is_numeric(); }
    int count() const { return num.count; }
    bool component_written(int i) const { return (num.written >> i) & 1u; }
    bool fully_written() const;

    // Typed component access. `f` reads float-family components, `i` int,
    // `b` bool. Reading an unwritten component throws VmError.
    float f(int idx) const;
    int32_t i(int idx) const;
    bool b(int idx) const;
    // Component value as double regardless of base (for conversions).
    double as_double(int idx) const;

    void set_f(int idx, float v);
    void set_i(int idx, int32_t v);
    void set_b(int idx, bool v);
    void set_from_double(int idx, double v);  // converts per base type

    // Raw bit copy between same-base values.
    void copy_component(int dst_idx, const Value& src, int src_idx);
};

// Converts `v` to `target` (scalar<->vector1 reshape, base conversions,
// scalar smear to vector/matrix). Conversion of int to float-family is exact
// for |n| <= 2^24; fixed results saturate.
Value convert_value(const Value& v, TypeRef target);

// Component-wise binary arithmetic on same-shape numeric values ("+", "-",
// "*", "/", "%"). Bases must already agree. fixed results saturate.
Value eval_binary(const std::string& op, const Value& a, const Value& b);
// "-" negate, "+" identity, "!" bool not.
Value eval_unary(const std::string& op, const Value& a);
// Scalar comparisons "<", "<=", ">", ">=", "==", "!=" yielding bool.
Value eval_compare(const std::string& op, const Value& a, const Value& b, TypeRef bool_type);

}  // namespace cg

#pragma once

#include <string>
#include <vector>

#include "cg/signature.hpp"
#include "cg/texture.hpp"
#include "cg/types.hpp"
#include "cg/value.hpp"

namespace cg {

// Identifies both the reference evaluator and the lowering shape of an
// overload. Component-wise kinds lower to single instructions; Mul expands
// per row, Dot per source length, Reflect to a dot/scale/mad sequence.
enum class BuiltinKind {
    MulMatVec,
    MulVecMat,
    MulMatMat,
    Dot,
    Abs,
    Log2,
    Rsqrt,
    Min,
    Max,
    Reflect,
    Tex2D,
    Tex2DProj,
    Tex3DProj,
    TexCube,
};

struct BuiltinOverload {
    BuiltinKind kind;
    FunctionSignature sig;
    bool needs_fragment = false;  // texture fetches: vertex profiles reject
};

// The builtin function catalogue. Construction order is fixed so overload
// ids are stable for a given arena.
class BuiltinCatalog {
public:
    BuiltinCatalog() = default;
    explicit BuiltinCatalog(const TypeArena& types);
    BuiltinCatalog(BuiltinCatalog&&) noexcept = default;
    BuiltinCatalog& operator=(BuiltinCatalog&&) noexcept = default;

    const std::vector<BuiltinOverload>& overloads() const { return overloads_; }
    const BuiltinOverload& overload(int id) const { return overloads_[id]; }

    // All overloads for a name; empty when the name is not a builtin.
    std::vector<FunctionSignature> signatures(const std::string& name) const;
    bool is_builtin_name(const std::string& name) const;

private:
    std::vector<BuiltinOverload> overloads_;
};

// Reference evaluation. Evaluator shapes mirror the lowered instruction
// sequences (shared scalar kernels, same operation order), so the tree
// interpreter and the assembly interpreter agree bitwise.
Value eval_builtin(const BuiltinOverload& overload, const std::vector<Value>& args,
                   const TypeArena& types);

}  // namespace cg

#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>

#include "cg/codegen.hpp"
#include "cg/profiles.hpp"
#include "cg/sema.hpp"
#include "cg/texture.hpp"

namespace cg {

// Inputs for one vertex or fragment execution.
struct ShadeInput {
    std::map<std::string, std::array<float, 4>> varyings;  // semantic -> value
    std::map<std::string, Value> uniforms;                 // name -> value
    std::map<int, TextureImage> textures;                  // unit -> image
};

struct OutputValue {
    std::array<float, 4> value{};
    uint8_t mask = 0;  // components present
};

struct ExecResult {
    std::map<std::string, OutputValue> outputs;  // semantic -> value
    bool discarded = false;
};

// Executes the checked tree directly: C-like semantics, binary32 arithmetic
// (fixed saturates after every operation). The semantic oracle.
ExecResult run_cg(const TypedTree& tree, const ShadeInput& input);

// Executes an assembly listing on a register machine; uniforms and varying
// inputs load through the binding table. Reads of never-written temporary
// lanes are errors.
ExecResult run_asm(const AssemblyListing& listing, const ShadeInput& input,
                   const BindingTable& bindings);

struct CompareReport {
    bool equal = true;
    float worst = 0.0f;           // largest absolute component difference
    std::string worst_semantic;
    int worst_component = -1;
    std::string message;          // empty when equal
};

// Equal iff discard flags match, both results cover the same semantics and
// components, and every shared component differs by at most `tol`.
CompareReport compare(const ExecResult& a, const ExecResult& b, float tol);

}  // namespace cg

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cg/profiles.hpp"

namespace cg {

enum class Opcode {
    MOV, MUL, ADD, MAD, DP3, DP4, RSQ, LG2, MIN, MAX, SLT, SGE, TEX, TXP, KIL,
};

const char* opcode_name(Opcode op);   // uppercase
int opcode_arity(Opcode op);
// DP3/DP4 read fixed source lanes; component-wise opcodes read the lanes
// the destination mask selects. Returns the pre-swizzle lane set read by
// source `src` of `inst` given its destination mask.
enum class TexTarget { T2D, T3D, Cube };

enum class RegFile : uint8_t { Input, Const, Temp, Output };

struct RegRef {
    RegFile file = RegFile::Temp;
    int index = 0;
    bool operator==(const RegRef&) const = default;
};

// Source swizzle: output lane i reads source lane sel[i].
struct Swizzle4 {
    std::array<uint8_t, 4> sel = {0, 1, 2, 3};

    static Swizzle4 identity() { return {}; }
    static Swizzle4 replicate(int lane) {
        Swizzle4 s;
        s.sel = {static_cast<uint8_t>(lane), static_cast<uint8_t>(lane),
                 static_cast<uint8_t>(lane), static_cast<uint8_t>(lane)};
        return s;
    }
    bool is_identity() const { return sel == std::array<uint8_t, 4>{0, 1, 2, 3}; }
    bool is_replicate() const {
        return sel[0] == sel[1] && sel[1] == sel[2] && sel[2] == sel[3];
    }
    // this ∘ inner: lane i reads inner.sel[this->sel[i]].
    Swizzle4 after(const Swizzle4& inner) const {
        Swizzle4 out;
        for (int i = 0; i < 4; ++i) out.sel[i] = inner.sel[sel[i]];
        return out;
    }
    bool operator==(const Swizzle4&) const = default;
};

struct Operand {
    RegRef reg;
    Swizzle4 swz;
    bool negate = false;
    bool operator==(const Operand&) const = default;
};

struct Instruction {
    Opcode op = Opcode::MOV;
    RegRef dst;
    uint8_t mask = 0xF;  // bit i = lane i written
    std::vector<Operand> srcs;
    int tex_unit = -1;
    TexTarget target = TexTarget::T2D;

    bool has_dst() const { return op != Opcode::KIL; }
    bool operator==(const Instruction&) const = default;
};

// Pre-swizzle lanes of srcs[src] that executing `inst` reads.
uint8_t source_read_lanes(const Instruction& inst, int src);

struct ConstantEntry {
    std::array<float, 4> value{};
    int reg = 0;  // absolute constant register index
    bool operator==(const ConstantEntry&) const = default;
};

// Straight-line vector program over virtual (then physical) registers.
struct IRProgram {
    std::vector<Instruction> code;
    std::vector<ConstantEntry> pool;
    int num_temps = 0;  // virtual before allocation, physical after
    bool allocated = false;
};

// Final emitted text plus the structured instruction view the assembly
// interpreter executes.
struct AssemblyListing {
    std::string text;
    std::string profile_name;
    Stage stage = Stage::Vertex;
    std::vector<Instruction> code;
    std::vector<ConstantEntry> pool;
    int num_temps = 0;

    bool same_program(const AssemblyListing& other) const {
        return code == other.code && pool == other.pool && num_temps == other.num_temps &&
               profile_name == other.profile_name;
    }
};

std::string register_display(const RegRef& reg, const ProfileDescriptor& profile);

}  // namespace cg

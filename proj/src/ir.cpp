#include "cg/ir.hpp"

namespace cg {

const char* opcode_name(Opcode op) {
    switch (op) {
    case Opcode::MOV: return "MOV";
    case Opcode::MUL: return "MUL";
    case Opcode::ADD: return "ADD";
    case Opcode::MAD: return "MAD";
    case Opcode::DP3: return "DP3";
    case Opcode::DP4: return "DP4";
    case Opcode::RSQ: return "RSQ";
    case Opcode::LG2: return "LG2";
    case Opcode::MIN: return "MIN";
    case Opcode::MAX: return "MAX";
    case Opcode::SLT: return "SLT";
    case Opcode::SGE: return "SGE";
    case Opcode::TEX: return "TEX";
    case Opcode::TXP: return "TXP";
    case Opcode::KIL: return "KIL";
    }
    return "?";
}

int opcode_arity(Opcode op) {
    switch (op) {
    case Opcode::MOV:
    case Opcode::RSQ:
    case Opcode::LG2:
    case Opcode::TEX:
    case Opcode::TXP:
    case Opcode::KIL:
        return 1;
    case Opcode::MAD:
        return 3;
    default:
        return 2;
    }
}

uint8_t source_read_lanes(const Instruction& inst, int src) {
    uint8_t post;  // post-swizzle lanes the opcode consumes
    switch (inst.op) {
    case Opcode::DP3: post = 0x7; break;
    case Opcode::DP4: post = 0xF; break;
    case Opcode::KIL: post = 0xF; break;
    case Opcode::TEX:
        post = inst.target == TexTarget::T2D ? 0x3 : 0x7;
        break;
    case Opcode::TXP:
        post = inst.target == TexTarget::T2D ? 0xB : 0xF;  // xy(z) and w
        break;
    default:
        post = inst.mask;
        break;
    }
    uint8_t pre = 0;
    const Swizzle4& swz = inst.srcs[src].swz;
    for (int lane = 0; lane < 4; ++lane)
        if (post & (1u << lane)) pre |= static_cast<uint8_t>(1u << swz.sel[lane]);
    return pre;
}

std::string register_display(const RegRef& reg, const ProfileDescriptor& profile) {
    bool dx = profile.name == "vs_1_1";
    bool fragment = profile.stage == Stage::Fragment;
    switch (reg.file) {
    case RegFile::Const:
        return "c" + std::to_string(reg.index);
    case RegFile::Temp:
        return (dx ? "r" : "R") + std::to_string(reg.index);
    case RegFile::Input:
        if (dx) return "v" + std::to_string(reg.index);
        if (fragment) {
            if (reg.index == 0) return "fragment.color.primary";
            return "fragment.texcoord[" + std::to_string(reg.index - 1) + "]";
        }
        switch (reg.index) {
        case 0: return "vertex.position";
        case 1: return "vertex.weight";
        case 3: return "vertex.normal";
        case 5: return "vertex.color";
        default: return "vertex.texcoord[" + std::to_string(reg.index - 7) + "]";
        }
    case RegFile::Output:
        if (dx) {
            if (reg.index == kOutPosition) return "oPos";
            if (reg.index == kOutColor) return "oD0";
            return "oT" + std::to_string(reg.index - kOutTexcoordBase);
        }
        if (fragment) return "result.color";
        if (reg.index == kOutPosition) return "result.position";
        if (reg.index == kOutColor) return "result.color";
        return "result.texcoord[" + std::to_string(reg.index - kOutTexcoordBase) + "]";
    }
    return "?";
}

}  // namespace cg

#include <charconv>
#include <sstream>

#include "cg/codegen.hpp"

namespace cg {

namespace {

std::string format_float(float v) {
    char buf[48];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string mask_suffix(uint8_t mask) {
    if (mask == 0xF) return "";
    static const char lanes[4] = {'x', 'y', 'z', 'w'};
    std::string s = ".";
    for (int i = 0; i < 4; ++i)
        if (mask & (1u << i)) s += lanes[i];
    return s;
}

std::string swizzle_suffix(const Swizzle4& swz) {
    if (swz.is_identity()) return "";
    static const char lanes[4] = {'x', 'y', 'z', 'w'};
    if (swz.is_replicate()) return std::string(".") + lanes[swz.sel[0]];
    std::string s = ".";
    for (int i = 0; i < 4; ++i) s += lanes[swz.sel[i]];
    return s;
}

std::string operand_text(const Operand& op, const ProfileDescriptor& profile) {
    std::string s = op.negate ? "-" : "";
    s += register_display(op.reg, profile);
    s += swizzle_suffix(op.swz);
    return s;
}

const char* target_name(TexTarget t) {
    switch (t) {
    case TexTarget::T2D: return "2D";
    case TexTarget::T3D: return "3D";
    case TexTarget::Cube: return "CUBE";
    }
    return "2D";
}

std::string instruction_text(const Instruction& inst, const ProfileDescriptor& profile,
                             bool uppercase) {
    std::string name = opcode_name(inst.op);
    if (!uppercase)
        for (auto& c : name) c = static_cast<char>(std::tolower(c));
    std::string s = name;
    bool first = true;
    auto sep = [&]() {
        s += first ? " " : ", ";
        first = false;
    };
    if (inst.has_dst()) {
        sep();
        s += register_display(inst.dst, profile) + mask_suffix(inst.mask);
    }
    for (const auto& src : inst.srcs) {
        sep();
        s += operand_text(src, profile);
    }
    if (inst.op == Opcode::TEX || inst.op == Opcode::TXP) {
        s += ", texture[" + std::to_string(inst.tex_unit) + "], ";
        s += target_name(inst.target);
    }
    return s;
}

}  // namespace

AssemblyListing emit(const IRProgram& ir, const ProfileDescriptor& profile) {
    AssemblyListing out;
    out.profile_name = profile.name;
    out.stage = profile.stage;
    out.code = ir.code;
    out.pool = ir.pool;
    out.num_temps = ir.num_temps;

    std::ostringstream text;
    if (profile.name == "vs_1_1") {
        text << "vs.1.1\n";
        for (const auto& c : ir.pool) {
            text << "def c" << c.reg;
            for (int i = 0; i < 4; ++i) text << ", " << format_float(c.value[i]);
            text << "\n";
        }
        for (const auto& inst : ir.code)
            text << instruction_text(inst, profile, false) << "\n";
    } else {
        text << (profile.stage == Stage::Vertex ? "!!ARBvp1.0" : "!!ARBfp1.0") << "\n";
        for (const auto& c : ir.pool) {
            text << "PARAM c" << c.reg << " = {";
            for (int i = 0; i < 4; ++i) text << (i ? ", " : "") << format_float(c.value[i]);
            text << "};\n";
        }
        for (int t = 0; t < ir.num_temps; ++t) text << "TEMP R" << t << ";\n";
        for (const auto& inst : ir.code)
            text << instruction_text(inst, profile, true) << ";\n";
        text << "END\n";
    }
    out.text = text.str();
    return out;
}

}  // namespace cg

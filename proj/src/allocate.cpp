#include <algorithm>
#include <map>
#include <set>

#include "cg/codegen.hpp"

namespace cg {

std::optional<IRProgram> allocate(IRProgram ir, const ProfileDescriptor& profile,
                                  Diagnostics& diags) {
    // Lifetime per virtual temp ends at its last read.
    std::map<int, int> last_read;
    for (size_t i = 0; i < ir.code.size(); ++i)
        for (const auto& src : ir.code[i].srcs)
            if (src.reg.file == RegFile::Temp)
                last_read[src.reg.index] = static_cast<int>(i);

    std::map<int, int> assignment;  // virtual -> physical
    std::set<int> free_regs;
    int peak = 0;
    auto take_register = [&]() {
        if (!free_regs.empty()) {
            int r = *free_regs.begin();
            free_regs.erase(free_regs.begin());
            return r;
        }
        return peak++;
    };

    for (size_t i = 0; i < ir.code.size(); ++i) {
        Instruction& inst = ir.code[i];
        // Reads rewrite first; a register whose value dies here frees
        // before the destination is assigned, so dst may reuse it.
        for (auto& src : inst.srcs) {
            if (src.reg.file != RegFile::Temp) continue;
            auto it = assignment.find(src.reg.index);
            if (it == assignment.end()) continue;  // audit catches misuse
            int virt = src.reg.index;
            src.reg.index = it->second;
            if (last_read[virt] == static_cast<int>(i)) {
                free_regs.insert(it->second);
                assignment.erase(virt);
            }
        }
        if (inst.has_dst() && inst.dst.file == RegFile::Temp) {
            int virt = inst.dst.index;
            auto it = assignment.find(virt);
            if (it != assignment.end()) {
                inst.dst.index = it->second;  // later write of a multi-def temp
            } else {
                int phys = take_register();
                inst.dst.index = phys;
                if (last_read.count(virt) && last_read[virt] > static_cast<int>(i))
                    assignment[virt] = phys;
                else
                    free_regs.insert(phys);  // never read again; reuse at once
            }
        }
    }

    ir.num_temps = peak;
    ir.allocated = true;

    if (peak > profile.limits.max_temporaries) {
        diags.error("E_CAPACITY", {},
                    "program needs " + std::to_string(peak) + " temporaries, " + profile.name +
                        " allows " + std::to_string(profile.limits.max_temporaries));
        return std::nullopt;
    }
    int count = static_cast<int>(ir.code.size());
    if (count > profile.limits.max_instructions) {
        diags.error("E_CAPACITY", {},
                    "program needs " + std::to_string(count) + " instructions, " +
                        profile.name + " allows " +
                        std::to_string(profile.limits.max_instructions));
        return std::nullopt;
    }
    int const_regs = ir.pool.empty() ? 0 : ir.pool.back().reg + 1;
    if (const_regs > profile.limits.max_constants) {
        diags.error("E_CAPACITY", {},
                    "program needs " + std::to_string(const_regs) + " constant registers, " +
                        profile.name + " allows " +
                        std::to_string(profile.limits.max_constants));
        return std::nullopt;
    }
    return ir;
}

std::string audit_allocation(const IRProgram& pre, const IRProgram& post) {
    if (pre.code.size() != post.code.size()) return "instruction counts differ";
    // Replay both programs in lockstep; each physical register lane must
    // hold the virtual lane the pre-allocation program expects.
    std::map<int, std::map<int, std::pair<int, int>>> phys;  // reg -> lane -> (virt, lane)
    for (size_t i = 0; i < pre.code.size(); ++i) {
        const Instruction& a = pre.code[i];
        const Instruction& b = post.code[i];
        if (a.op != b.op || a.mask != b.mask || a.srcs.size() != b.srcs.size())
            return "instruction " + std::to_string(i) + " shape differs";
        for (size_t s = 0; s < a.srcs.size(); ++s) {
            if (a.srcs[s].reg.file != b.srcs[s].reg.file)
                return "operand file differs at " + std::to_string(i);
            if (a.srcs[s].reg.file != RegFile::Temp) continue;
            uint8_t lanes = source_read_lanes(a, static_cast<int>(s));
            for (int lane = 0; lane < 4; ++lane) {
                if (!(lanes & (1u << lane))) continue;
                auto reg_it = phys.find(b.srcs[s].reg.index);
                if (reg_it == phys.end())
                    return "read of unwritten register at instruction " + std::to_string(i);
                auto lane_it = reg_it->second.find(lane);
                if (lane_it == reg_it->second.end())
                    return "read of unwritten lane at instruction " + std::to_string(i);
                if (lane_it->second != std::make_pair(a.srcs[s].reg.index, lane))
                    return "instruction " + std::to_string(i) +
                           " reads a clobbered value (virtual " +
                           std::to_string(a.srcs[s].reg.index) + ")";
            }
        }
        if (a.has_dst() && a.dst.file == RegFile::Temp) {
            for (int lane = 0; lane < 4; ++lane)
                if (a.mask & (1u << lane))
                    phys[b.dst.index][lane] = {a.dst.index, lane};
        }
    }
    return "";
}

}  // namespace cg

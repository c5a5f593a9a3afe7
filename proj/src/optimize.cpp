#include <bit>
#include <map>

#include "cg/codegen.hpp"

namespace cg {

namespace {

bool writes_overlap(const Instruction& inst, const RegRef& reg, uint8_t lanes) {
    return inst.has_dst() && inst.dst == reg && (inst.mask & lanes);
}

bool reads_reg(const Instruction& inst, const RegRef& reg) {
    for (size_t s = 0; s < inst.srcs.size(); ++s)
        if (inst.srcs[s].reg == reg) return true;
    return false;
}

// Forward copy propagation: after "MOV t.mask, src", reads of t's masked
// lanes become reads of src until t or src's register is written again.
bool propagate_copies(IRProgram& ir) {
    bool changed = false;
    for (size_t i = 0; i < ir.code.size(); ++i) {
        const Instruction mov = ir.code[i];
        if (mov.op != Opcode::MOV || mov.dst.file != RegFile::Temp) continue;
        const Operand& src = mov.srcs[0];
        for (size_t j = i + 1; j < ir.code.size(); ++j) {
            Instruction& inst = ir.code[j];
            for (size_t s = 0; s < inst.srcs.size(); ++s) {
                Operand& op = inst.srcs[s];
                if (!(op.reg == mov.dst)) continue;
                uint8_t read = source_read_lanes(inst, static_cast<int>(s));
                if ((read & mov.mask) != read) continue;  // reads unmoved lanes
                op.reg = src.reg;
                op.swz = op.swz.after(src.swz);
                op.negate = op.negate != src.negate;
                changed = true;
            }
            if (writes_overlap(inst, mov.dst, 0xF) || writes_overlap(inst, src.reg, 0xF))
                break;
        }
    }
    return changed;
}

// Backward coalescing: "MOV D, t" where t is a temp read nowhere else and
// its defining instructions sit before the MOV with no interference on D
// retargets those defs onto D and drops the MOV.
bool coalesce_moves(IRProgram& ir) {
    for (size_t i = 0; i < ir.code.size(); ++i) {
        const Instruction& mov = ir.code[i];
        if (mov.op != Opcode::MOV || mov.srcs[0].reg.file != RegFile::Temp) continue;
        if (mov.srcs[0].negate || !mov.srcs[0].swz.is_identity()) continue;
        if (mov.dst.file == RegFile::Temp && mov.dst == mov.srcs[0].reg) continue;
        RegRef t = mov.srcs[0].reg;
        // t must feed only this MOV, and only through lanes the MOV writes.
        bool ok = true;
        size_t first_def = ir.code.size();
        for (size_t j = 0; j < ir.code.size(); ++j) {
            if (j == i) continue;
            const Instruction& inst = ir.code[j];
            if (reads_reg(inst, t)) {
                ok = false;
                break;
            }
            if (inst.has_dst() && inst.dst == t) {
                if (j > i || (inst.mask & ~mov.mask)) {
                    ok = false;  // defined after the MOV or outside its lanes
                    break;
                }
                first_def = std::min(first_def, j);
            }
        }
        if (!ok || first_def == ir.code.size()) continue;
        // D must be untouched between the first def of t and the MOV.
        for (size_t j = first_def; j < i && ok; ++j) {
            const Instruction& inst = ir.code[j];
            if ((inst.has_dst() && inst.dst == mov.dst) || reads_reg(inst, mov.dst)) ok = false;
        }
        if (!ok) continue;
        for (size_t j = first_def; j < i; ++j) {
            Instruction& inst = ir.code[j];
            if (inst.has_dst() && inst.dst == t) inst.dst = mov.dst;
        }
        ir.code.erase(ir.code.begin() + static_cast<long>(i));
        return true;  // restart; indices shifted
    }
    return false;
}

// Per-lane backward liveness; removes dead lanes and dead instructions.
// KIL is a side effect and always stays.
bool eliminate_dead_code(IRProgram& ir) {
    std::map<std::pair<int, int>, uint8_t> live;  // (file, index) -> lanes
    std::map<std::pair<int, int>, uint8_t> output_written;
    auto key = [](const RegRef& r) {
        return std::make_pair(static_cast<int>(r.file), r.index);
    };
    bool changed = false;
    std::vector<bool> keep(ir.code.size(), true);
    for (size_t j = ir.code.size(); j-- > 0;) {
        Instruction& inst = ir.code[j];
        if (inst.op == Opcode::KIL) {
            for (size_t s = 0; s < inst.srcs.size(); ++s) {
                uint8_t lanes = source_read_lanes(inst, static_cast<int>(s));
                live[key(inst.srcs[s].reg)] |= lanes;
            }
            continue;
        }
        uint8_t out_live;
        if (inst.dst.file == RegFile::Output) {
            // Observable at program end except where a later write covers
            // the same lanes first.
            out_live = inst.mask & ~output_written[key(inst.dst)];
            output_written[key(inst.dst)] |= inst.mask;
        } else {
            out_live = live[key(inst.dst)] & inst.mask;
        }
        if (out_live == 0) {
            keep[j] = false;
            changed = true;
            continue;
        }
        if (out_live != inst.mask) {
            inst.mask = out_live;
            changed = true;
        }
        // This write satisfies those lanes.
        if (inst.dst.file != RegFile::Output) live[key(inst.dst)] &= ~inst.mask;
        for (size_t s = 0; s < inst.srcs.size(); ++s) {
            uint8_t lanes = source_read_lanes(inst, static_cast<int>(s));
            live[key(inst.srcs[s].reg)] |= lanes;
        }
    }
    if (changed) {
        std::vector<Instruction> out;
        for (size_t j = 0; j < ir.code.size(); ++j)
            if (keep[j]) out.push_back(std::move(ir.code[j]));
        ir.code = std::move(out);
    }
    return changed;
}

// MUL by an exact 1.0 constant operand becomes a MOV of the other operand.
bool fold_identity_mul(IRProgram& ir) {
    bool changed = false;
    auto lane_is_one = [&](const Operand& op, uint8_t lanes) {
        if (op.reg.file != RegFile::Const || op.negate) return false;
        const ConstantEntry* entry = nullptr;
        for (const auto& c : ir.pool)
            if (c.reg == op.reg.index) entry = &c;
        if (!entry) return false;  // uniform register, value unknown
        for (int lane = 0; lane < 4; ++lane) {
            if (!(lanes & (1u << lane))) continue;
            if (std::bit_cast<uint32_t>(entry->value[op.swz.sel[lane]]) !=
                std::bit_cast<uint32_t>(1.0f))
                return false;
        }
        return true;
    };
    for (auto& inst : ir.code) {
        if (inst.op != Opcode::MUL) continue;
        for (int s = 0; s < 2; ++s) {
            if (lane_is_one(inst.srcs[s], inst.mask)) {
                Operand other = inst.srcs[1 - s];
                inst.op = Opcode::MOV;
                inst.srcs = {other};
                changed = true;
                break;
            }
        }
    }
    return changed;
}

// Drops pool entries no instruction reads and renumbers the survivors.
bool prune_pool(IRProgram& ir, int pool_base) {
    if (ir.pool.empty()) return false;
    std::map<int, bool> used;
    for (const auto& inst : ir.code)
        for (const auto& src : inst.srcs)
            if (src.reg.file == RegFile::Const) used[src.reg.index] = true;
    std::vector<ConstantEntry> kept;
    std::map<int, int> remap;
    int next = pool_base;
    for (const auto& entry : ir.pool) {
        if (used.count(entry.reg)) {
            remap[entry.reg] = next;
            ConstantEntry e = entry;
            e.reg = next++;
            kept.push_back(e);
        }
    }
    if (kept.size() == ir.pool.size()) {
        bool same = true;
        for (size_t i = 0; i < kept.size(); ++i)
            if (kept[i].reg != ir.pool[i].reg) same = false;
        if (same) return false;
    }
    for (auto& inst : ir.code)
        for (auto& src : inst.srcs)
            if (src.reg.file == RegFile::Const && remap.count(src.reg.index))
                src.reg.index = remap[src.reg.index];
    ir.pool = std::move(kept);
    return true;
}

}  // namespace

IRProgram optimize(IRProgram ir) {
    int pool_base = ir.pool.empty() ? 0 : ir.pool.front().reg;
    for (int pass = 0; pass < 16; ++pass) {
        bool changed = false;
        changed |= propagate_copies(ir);
        changed |= coalesce_moves(ir);
        changed |= fold_identity_mul(ir);
        changed |= eliminate_dead_code(ir);
        changed |= prune_pool(ir, pool_base);
        if (!changed) break;
    }
    return ir;
}

}  // namespace cg

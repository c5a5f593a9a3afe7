#pragma once

#include <optional>

#include "cg/diagnostics.hpp"
#include "cg/ir.hpp"
#include "cg/profiles.hpp"
#include "cg/sema.hpp"

namespace cg {

// Inlines every call, unrolls constant loops, folds constant expressions
// and produces straight-line vector IR over virtual temporaries. Control
// flow that cannot fold reports E_NEEDS_BRANCHING; the profile validator
// catches the same cases earlier.
struct LowerResult {
    std::optional<IRProgram> ir;
    // Constant registers the uniform bindings reserved; the literal pool
    // starts right after.
    int uniform_registers = 0;
};
LowerResult lower(const TypedTree& tree, const BindingTable& bindings,
                  const ProfileDescriptor& profile, Diagnostics& diags);

// Copy propagation, move coalescing, per-lane dead code elimination,
// multiply-by-one folding and pool pruning, iterated to a fixed point.
// Idempotent and semantics-preserving.
IRProgram optimize(IRProgram ir);

// Maps virtual temporaries onto r0..rK / R0..RK by linear scan in first-use
// order; a register frees the moment its last read executes, so an
// instruction may reuse a source register as its destination. Checks the
// temporary, instruction-count and constant-register limits (E_CAPACITY).
std::optional<IRProgram> allocate(IRProgram ir, const ProfileDescriptor& profile,
                                  Diagnostics& diags);

// Audits an allocated program against its pre-allocation form: every read
// must observe the virtual value the pre-allocation program read. Returns
// an empty string on success, else a description of the first violation.
std::string audit_allocation(const IRProgram& pre, const IRProgram& post);

// Renders assembly text. vs_1_1: lowercase opcodes, "def" constants, no
// declarations. ARB formats: "!!ARB(vp|fp)1.0" header, PARAM/TEMP
// declarations, uppercase opcodes, END trailer.
AssemblyListing emit(const IRProgram& ir, const ProfileDescriptor& profile);

// Re-parses listing text into the structured view; emit followed by
// parse_listing reproduces the instruction stream exactly.
std::optional<AssemblyListing> parse_listing(const std::string& text, Diagnostics& diags);

}  // namespace cg

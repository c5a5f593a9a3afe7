#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cg/ast.hpp"
#include "cg/builtins.hpp"
#include "cg/diagnostics.hpp"
#include "cg/types.hpp"

namespace cg {

// A checked program: the syntax tree annotated with types, resolved
// references and explicit conversion/smear nodes, plus the type arena and
// builtin catalogue those annotations point into.
struct TypedTree {
    SyntaxTree tree;
    TypeArena types;
    BuiltinCatalog builtins;
    int entry_index = -1;
    std::vector<bool> fn_uses_discard;       // per function, transitively
    std::vector<std::vector<int>> call_graph;  // per function, callee indices

    const FunctionDecl& entry() const { return tree.functions[entry_index]; }
    bool entry_uses_discard() const { return fn_uses_discard[entry_index]; }
};

// Resolves names and types, inserts implicit conversions and smears,
// checks swizzles, write masks, qualifiers and definite assignment, and
// rejects recursion and reserved constructs. Returns nullopt when diags
// picked up an error.
std::optional<TypedTree> check(SyntaxTree tree, const std::string& entry, Diagnostics& diags);

// ---------------------------------------------------------------------------
// Conversions and overload resolution
// ---------------------------------------------------------------------------

// Cost of implicitly converting `from` to `to`: 0 for the identical type or
// the free scalar<->length-1-vector reshape, otherwise the number of
// conversion steps (widening int->float->double, half->float, fixed->float;
// a scalar smear counts as one step). -1 when no implicit conversion
// exists. `from_literal` loosens float literals to half/fixed.
int conversion_cost(TypeRef from, TypeRef to, bool from_literal = false);

struct OverloadResult {
    int index = -1;  // into the candidate list
    std::string error_code;  // E_OVERLOAD or E_AMBIGUOUS when index < 0
    std::string message;
};

// Picks the unique lowest-conversion-cost candidate. Pure; candidate order
// never affects the outcome.
OverloadResult resolve_overload(const std::vector<TypeRef>& args,
                                const std::vector<FunctionSignature>& candidates);

// Component-wise operator candidates ("+", "-", "*", "/", "%") over every
// numeric base and shape, for operator typing through the same resolution
// path as named calls.
std::vector<FunctionSignature> operator_candidates(const std::string& op, const TypeArena& types);

// ---------------------------------------------------------------------------
// Swizzles and write masks
// ---------------------------------------------------------------------------

// Type of `base.text`. Scalars and length-1 vectors accept swizzles whose
// components all select index 0. On failure returns nullptr and sets
// `error`.
TypeRef swizzle_type(TypeRef base, std::string_view text, const TypeArena& types,
                     std::string& error);

// Parses a swizzle against a source length: "xw" -> {0,3}. Enforces one
// letter set and index range; duplicates are allowed (reads).
std::optional<std::vector<int>> parse_swizzle(std::string_view text, int source_length,
                                              std::string& error);

// Write-mask form: duplicates are rejected. Returns the component index
// set in source order.
std::optional<std::vector<int>> validate_write_mask(TypeRef lhs, std::string_view mask,
                                                    std::string& error);

// ---------------------------------------------------------------------------
// Recursion
// ---------------------------------------------------------------------------

// Returns one cycle (function names, call order) if the graph has any,
// including self loops.
std::optional<std::vector<std::string>> find_call_cycle(
    const std::vector<std::vector<int>>& call_graph, const SyntaxTree& tree);

// ---------------------------------------------------------------------------
// Straight-line portability scan
// ---------------------------------------------------------------------------

// Inlining-aware scan of everything reachable from the entry, tracking
// compile-time-constant values the same way lowering does. Reports control
// flow that cannot unroll or fold, non-constant indexing, and integer
// division that cannot lower.
// Budgets shared by the scanner and the lowering pass so both make the
// same unrolling decisions.
inline constexpr int kMaxUnrollIterations = 4096;
inline constexpr int kMaxUnrollSteps = 1 << 18;

struct ScanIssue {
    Location loc;
    enum class Kind { DynamicIf, DynamicLoop, VariableIndex, DynamicIntDiv } kind;
    std::string detail;
};

struct ScanReport {
    std::vector<ScanIssue> issues;
    bool ok() const { return issues.empty(); }
};

// `allow_discard_guard` permits `if (<bool expr>) discard;` with a dynamic
// condition (fragment profiles lower it to a kill).
ScanReport scan_control_flow(const TypedTree& tt, bool allow_discard_guard);

// Values of the global constants, in declaration order. Both interpreters
// and the lowering pass read globals through this.
std::vector<Value> evaluate_globals(const TypedTree& tt);

}  // namespace cg

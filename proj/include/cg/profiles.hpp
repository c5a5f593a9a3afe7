#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cg/diagnostics.hpp"
#include "cg/sema.hpp"

namespace cg {

enum class Stage { Vertex, Fragment };

struct ProfileLimits {
    int max_instructions = 0;
    int max_constants = 0;
    int max_temporaries = 0;
    int texture_units = 0;
};

// A compilation target: register conventions, capability flags and capacity
// limits. The three implemented targets are vs_1_1, arbvp1 and arbfp1.
struct ProfileDescriptor {
    std::string name;
    Stage stage = Stage::Vertex;
    ProfileLimits limits;
    bool allows_texture_fetch = false;
    bool allows_data_dependent_branch = false;  // false for all three targets
    bool allows_variable_indexing = false;      // no address registers in this ISA

    // semantic -> canonical input register index (the vs_1_1 vN numbering
    // doubles as the canonical index for the ARB formats).
    std::map<std::string, int> input_map;
    // semantic -> canonical output register index.
    std::map<std::string, int> output_map;

    bool is_vertex() const { return stage == Stage::Vertex; }
};

// Canonical output register indices.
inline constexpr int kOutPosition = 0;
inline constexpr int kOutColor = 1;
inline constexpr int kOutTexcoordBase = 2;  // TEXCOORDn -> 2 + n

struct ProfileLookup {
    std::optional<ProfileDescriptor> profile;
    std::string error_code;  // E_UNKNOWN_PROFILE or E_UNIMPLEMENTED_PROFILE
    std::string message;
};

// Descriptor for the three implemented names; E_UNIMPLEMENTED_PROFILE for
// recognized-but-uncompiled names (vs_2_0, ps_1_3, ps_2_x, vp20, vp30,
// fp20, fp30); E_UNKNOWN_PROFILE otherwise. `overrides` adjusts limits by
// name (max_instructions, max_constants, max_temporaries, texture_units).
ProfileLookup lookup_profile(const std::string& name,
                             const std::map<std::string, int>& overrides = {});

struct ValidationReport {
    std::vector<Diagnostic> diagnostics;
    bool ok = true;

    void add_error(std::string code, Location loc, std::string message) {
        Diagnostic d;
        d.severity = Severity::Error;
        d.code = std::move(code);
        d.message = std::move(message);
        d.line = loc.line;
        d.column = loc.column;
        diagnostics.push_back(std::move(d));
        ok = false;
    }
};

// Profile-dependent checks over a checked tree: texture fetches and discard
// under vertex profiles, TEXCOORDn outputs under fragment profiles, sampler
// count versus texture units, and control flow the target cannot run.
ValidationReport validate(const TypedTree& tree, const ProfileDescriptor& profile);

// Where a uniform parameter lives.
struct UniformBinding {
    std::string name;
    int param_index = -1;
    bool is_sampler = false;
    int texture_unit = -1;
    int register_base = -1;   // first constant register
    int register_count = 0;
    bool scalar = false;      // reads as .x
    TypeRef type = nullptr;
};

struct VaryingBinding {
    std::string name;      // parameter name, or function name for the return
    std::string semantic;
    int param_index = -1;  // -1 for the return value
    int register_index = 0;
    TypeRef type = nullptr;
};

struct BindingTable {
    std::vector<VaryingBinding> inputs;
    std::vector<VaryingBinding> outputs;
    std::vector<UniformBinding> uniforms;
    int constant_registers_used = 0;  // uniforms only; literals pool after

    const UniformBinding* find_uniform(const std::string& name) const {
        for (const auto& u : uniforms)
            if (u.name == name) return &u;
        return nullptr;
    }
};

// Maps entry inputs/outputs through the profile's semantic tables.
// Emits E_BAD_SEMANTIC and duplicate-semantic errors into the report.
void bind_inputs(const TypedTree& tree, const ProfileDescriptor& profile, BindingTable& table,
                 ValidationReport& report);

// Assigns constant registers in declaration order from c0 (a 4x4 matrix
// takes four consecutive registers, one row each) and texture units from
// unit 0.
void bind_uniforms(const TypedTree& tree, const ProfileDescriptor& profile, BindingTable& table,
                   ValidationReport& report);

}  // namespace cg

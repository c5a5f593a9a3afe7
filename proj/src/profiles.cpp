#include "cg/profiles.hpp"

#include <set>

namespace cg {

namespace {

void fill_vertex_maps(ProfileDescriptor& p) {
    // DirectX 8 vertex input convention; the paper's listing pins POSITION,
    // COLOR and the two texture coordinate sets.
    p.input_map = {
        {"POSITION", 0}, {"BLENDWEIGHT", 1}, {"NORMAL", 3}, {"COLOR", 5},
    };
    for (int n = 0; n <= 7; ++n) p.input_map["TEXCOORD" + std::to_string(n)] = 7 + n;
    p.output_map = {{"POSITION", kOutPosition}, {"COLOR", kOutColor}};
    for (int n = 0; n <= 7; ++n)
        p.output_map["TEXCOORD" + std::to_string(n)] = kOutTexcoordBase + n;
}

void fill_fragment_maps(ProfileDescriptor& p) {
    p.input_map = {{"COLOR", 0}};
    for (int n = 0; n <= 7; ++n) p.input_map["TEXCOORD" + std::to_string(n)] = 1 + n;
    p.output_map = {{"COLOR", kOutColor}};
}

const std::set<std::string>& recognized_unimplemented() {
    static const std::set<std::string> names = {"vs_2_0", "ps_1_3", "ps_2_x",
                                                "vp20",  "vp30",  "fp20",  "fp30"};
    return names;
}

}  // namespace

ProfileLookup lookup_profile(const std::string& name,
                             const std::map<std::string, int>& overrides) {
    ProfileLookup result;
    ProfileDescriptor p;
    p.name = name;
    if (name == "vs_1_1" || name == "arbvp1") {
        p.stage = Stage::Vertex;
        p.limits = {128, 96, 12, 0};
        p.allows_texture_fetch = false;
        fill_vertex_maps(p);
    } else if (name == "arbfp1") {
        p.stage = Stage::Fragment;
        p.limits = {96, 24, 16, 4};
        p.allows_texture_fetch = true;
        fill_fragment_maps(p);
    } else if (recognized_unimplemented().count(name)) {
        result.error_code = "E_UNIMPLEMENTED_PROFILE";
        result.message = "profile '" + name + "' is recognized but not compiled for";
        return result;
    } else {
        result.error_code = "E_UNKNOWN_PROFILE";
        result.message = "unknown profile '" + name + "'";
        return result;
    }
    for (const auto& [key, value] : overrides) {
        if (key == "max_instructions") p.limits.max_instructions = value;
        else if (key == "max_constants") p.limits.max_constants = value;
        else if (key == "max_temporaries") p.limits.max_temporaries = value;
        else if (key == "texture_units") p.limits.texture_units = value;
        else {
            result.error_code = "E_UNKNOWN_PROFILE";
            result.message = "unknown limit override '" + key + "'";
            return result;
        }
    }
    result.profile = std::move(p);
    return result;
}

namespace {

// Collects every texture-fetch call reachable from the entry.
void find_tex_calls(const TypedTree& tt, const Expr& e, std::vector<Location>& out) {
    if (e.kind == ExprKind::Call && e.builtin_overload >= 0) {
        const auto& o = tt.builtins.overload(e.builtin_overload);
        if (o.needs_fragment) out.push_back(e.loc);
    }
    for (const auto& a : e.args) find_tex_calls(tt, *a, out);
    if (e.a) find_tex_calls(tt, *e.a, out);
    if (e.b) find_tex_calls(tt, *e.b, out);
    if (e.c) find_tex_calls(tt, *e.c, out);
}

void find_tex_calls(const TypedTree& tt, const Stmt& s, std::vector<Location>& out) {
    if (s.expr) find_tex_calls(tt, *s.expr, out);
    if (s.init) find_tex_calls(tt, *s.init, out);
    if (s.step) find_tex_calls(tt, *s.step, out);
    if (s.init_stmt) find_tex_calls(tt, *s.init_stmt, out);
    for (const auto& b : s.body) find_tex_calls(tt, *b, out);
    for (const auto& b : s.else_body) find_tex_calls(tt, *b, out);
}

std::vector<Location> tex_calls_reachable(const TypedTree& tt) {
    std::vector<Location> out;
    std::set<int> visited;
    std::vector<int> work = {tt.entry_index};
    while (!work.empty()) {
        int fn = work.back();
        work.pop_back();
        if (!visited.insert(fn).second) continue;
        for (const auto& s : tt.tree.functions[fn].body->body) find_tex_calls(tt, *s, out);
        for (int callee : tt.call_graph[fn]) work.push_back(callee);
    }
    return out;
}

int count_sampler_params(const FunctionDecl& fn) {
    int n = 0;
    for (const auto& p : fn.params)
        if (p.type && p.type->is_sampler()) ++n;
    return n;
}

}  // namespace

ValidationReport validate(const TypedTree& tree, const ProfileDescriptor& profile) {
    ValidationReport report;
    const FunctionDecl& entry = tree.entry();

    if (profile.is_vertex()) {
        for (Location loc : tex_calls_reachable(tree))
            report.add_error("E_TEX_IN_VERTEX", loc,
                             "texture fetch is an error under vertex profile " + profile.name);
        if (tree.entry_uses_discard())
            report.add_error("E_DISCARD_IN_VERTEX", entry.loc,
                             "discard is not available under vertex profile " + profile.name);
    } else {
        // A fragment program cannot output texture coordinates.
        for (const auto& p : entry.params) {
            if (p.is_output() && p.semantic.rfind("TEXCOORD", 0) == 0)
                report.add_error("E_FRAG_TEXCOORD_OUT", p.loc,
                                 "fragment output '" + p.name + "' cannot use semantic " +
                                     p.semantic);
        }
        if (entry.return_semantic.rfind("TEXCOORD", 0) == 0)
            report.add_error("E_FRAG_TEXCOORD_OUT", entry.loc,
                             "fragment return value cannot use semantic " +
                                 entry.return_semantic);
    }

    int samplers = count_sampler_params(entry);
    if (samplers > profile.limits.texture_units)
        report.add_error("E_TEXUNITS", entry.loc,
                         "program needs " + std::to_string(samplers) +
                             " texture units but " + profile.name + " has " +
                             std::to_string(profile.limits.texture_units));

    bool allow_discard_guard = !profile.is_vertex();
    ScanReport scan = scan_control_flow(tree, allow_discard_guard);
    for (const auto& item : scan.issues) {
        switch (item.kind) {
        case ScanIssue::Kind::DynamicIf:
        case ScanIssue::Kind::DynamicLoop:
            report.add_error("E_NEEDS_BRANCHING", item.loc,
                             item.detail + "; " + profile.name +
                                 " runs straight-line code only");
            break;
        case ScanIssue::Kind::VariableIndex:
            if (!profile.allows_variable_indexing)
                report.add_error("E_VARIABLE_INDEX", item.loc, item.detail);
            break;
        case ScanIssue::Kind::DynamicIntDiv:
            report.add_error("E_UNSUPPORTED", item.loc, item.detail);
            break;
        }
    }
    return report;
}

void bind_inputs(const TypedTree& tree, const ProfileDescriptor& profile, BindingTable& table,
                 ValidationReport& report) {
    const FunctionDecl& entry = tree.entry();
    std::set<std::string> seen_inputs, seen_outputs;

    auto map_semantic = [&](const std::map<std::string, int>& table_map,
                            const std::string& semantic, Location loc, const char* dir,
                            int& out_index) {
        auto it = table_map.find(semantic);
        if (it == table_map.end()) {
            report.add_error("E_BAD_SEMANTIC", loc,
                             std::string(dir) + " semantic '" + semantic +
                                 "' is unknown to profile " + profile.name);
            return false;
        }
        out_index = it->second;
        return true;
    };

    for (size_t i = 0; i < entry.params.size(); ++i) {
        const ParamDecl& p = entry.params[i];
        if (p.is_uniform()) continue;
        if (!p.type || !p.type->is_numeric()) {
            report.add_error("E_BAD_SEMANTIC", p.loc,
                             "entry parameter '" + p.name + "' must have a numeric type");
            continue;
        }
        if (p.semantic.empty()) {
            report.add_error("E_BAD_SEMANTIC", p.loc,
                             "entry parameter '" + p.name + "' needs a semantic");
            continue;
        }
        if (p.type->is_matrix()) {
            report.add_error("E_BAD_SEMANTIC", p.loc,
                             "varying parameter '" + p.name + "' cannot be a matrix");
            continue;
        }
        if (p.is_input()) {
            VaryingBinding b;
            b.name = p.name;
            b.semantic = p.semantic;
            b.param_index = static_cast<int>(i);
            b.type = p.type;
            if (!map_semantic(profile.input_map, p.semantic, p.loc, "input", b.register_index))
                continue;
            if (!seen_inputs.insert(p.semantic).second) {
                report.add_error("E_DUP_SEMANTIC", p.loc,
                                 "input semantic " + p.semantic + " bound twice");
                continue;
            }
            table.inputs.push_back(b);
        }
        if (p.is_output()) {
            VaryingBinding b;
            b.name = p.name;
            b.semantic = p.semantic;
            b.param_index = static_cast<int>(i);
            b.type = p.type;
            if (!map_semantic(profile.output_map, p.semantic, p.loc, "output",
                              b.register_index))
                continue;
            if (!seen_outputs.insert(p.semantic).second) {
                report.add_error("E_DUP_SEMANTIC", p.loc,
                                 "output semantic " + p.semantic + " bound twice");
                continue;
            }
            table.outputs.push_back(b);
        }
    }

    if (entry.return_type && !entry.return_type->is_void()) {
        if (entry.return_semantic.empty()) {
            report.add_error("E_BAD_SEMANTIC", entry.loc,
                             "entry return value needs a semantic");
        } else {
            VaryingBinding b;
            b.name = entry.name;
            b.semantic = entry.return_semantic;
            b.param_index = -1;
            b.type = entry.return_type;
            if (map_semantic(profile.output_map, entry.return_semantic, entry.loc, "output",
                             b.register_index)) {
                if (!seen_outputs.insert(entry.return_semantic).second) {
                    report.add_error("E_DUP_SEMANTIC", entry.loc,
                                     "output semantic " + entry.return_semantic +
                                         " bound twice");
                } else {
                    table.outputs.push_back(b);
                }
            }
        }
    }

    if (profile.is_vertex()) {
        bool writes_position = false;
        for (const auto& o : table.outputs)
            if (o.semantic == "POSITION") writes_position = true;
        if (!writes_position)
            report.add_error("E_BAD_SEMANTIC", entry.loc,
                             "a vertex program must output POSITION");
    }
}

void bind_uniforms(const TypedTree& tree, const ProfileDescriptor& profile, BindingTable& table,
                   ValidationReport& report) {
    const FunctionDecl& entry = tree.entry();
    int next_register = 0;
    int next_unit = 0;
    for (size_t i = 0; i < entry.params.size(); ++i) {
        const ParamDecl& p = entry.params[i];
        if (!p.is_uniform() || !p.type) continue;
        UniformBinding b;
        b.name = p.name;
        b.param_index = static_cast<int>(i);
        b.type = p.type;
        if (p.type->is_sampler()) {
            b.is_sampler = true;
            b.texture_unit = next_unit++;
            table.uniforms.push_back(b);
            continue;
        }
        int registers = 0;
        TypeRef t = p.type;
        if (t->is_scalar()) {
            registers = 1;
            b.scalar = true;
        } else if (t->is_vector()) {
            registers = 1;
            b.scalar = t->rows == 1;
        } else if (t->is_matrix()) {
            registers = t->rows;  // one row per register
        } else if (t->is_array() && t->element && t->element->is_numeric()) {
            TypeRef el = t->element;
            int per = el->is_matrix() ? el->rows : 1;
            registers = per * t->extent;
        } else {
            report.add_error("E_BAD_SEMANTIC", p.loc,
                             "uniform '" + p.name + "' has an unbindable type " +
                                 TypeArena::name_of(t));
            continue;
        }
        b.register_base = next_register;
        b.register_count = registers;
        next_register += registers;
        table.uniforms.push_back(b);
    }
    table.constant_registers_used = next_register;
    if (next_register > profile.limits.max_constants)
        report.add_error("E_CAPACITY", entry.loc,
                         "uniforms need " + std::to_string(next_register) +
                             " constant registers, " + profile.name + " allows " +
                             std::to_string(profile.limits.max_constants));
}

}  // namespace cg

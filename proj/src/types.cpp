#include "cg/types.hpp"

#include <cctype>

namespace cg {

TypeArena::TypeArena() {
    Type v;
    v.kind = TypeKind::Void;
    void_ = add(v);
    static const BaseType bases[6] = {BaseType::Float, BaseType::Half,  BaseType::Fixed,
                                      BaseType::Double, BaseType::Int,  BaseType::Bool};
    for (int b = 0; b < 6; ++b) {
        Type s;
        s.kind = TypeKind::Scalar;
        s.base = bases[b];
        scalars_[b] = add(s);
        for (int n = 1; n <= 4; ++n) {
            Type vec;
            vec.kind = TypeKind::Vector;
            vec.base = bases[b];
            vec.rows = n;
            vectors_[b][n - 1] = add(vec);
        }
        for (int r = 1; r <= 4; ++r)
            for (int c = 1; c <= 4; ++c) {
                Type m;
                m.kind = TypeKind::Matrix;
                m.base = bases[b];
                m.rows = r;
                m.cols = c;
                matrices_[b][r - 1][c - 1] = add(m);
            }
    }
    static const SamplerDim dims[3] = {SamplerDim::Dim2D, SamplerDim::Dim3D, SamplerDim::Cube};
    for (int d = 0; d < 3; ++d) {
        Type s;
        s.kind = TypeKind::Sampler;
        s.sampler_dim = dims[d];
        samplers_[d] = add(s);
    }
}

TypeRef TypeArena::add(Type t) {
    owned_.push_back(std::make_unique<Type>(std::move(t)));
    return owned_.back().get();
}

static int base_index(BaseType b) { return static_cast<int>(b); }

TypeRef TypeArena::scalar(BaseType base) const { return scalars_[base_index(base)]; }

TypeRef TypeArena::vector(BaseType base, int length) const {
    return (length >= 1 && length <= 4) ? vectors_[base_index(base)][length - 1] : nullptr;
}

TypeRef TypeArena::matrix(BaseType base, int rows, int cols) const {
    if (rows < 1 || rows > 4 || cols < 1 || cols > 4) return nullptr;
    return matrices_[base_index(base)][rows - 1][cols - 1];
}

TypeRef TypeArena::sampler(SamplerDim dim) const { return samplers_[static_cast<int>(dim)]; }

TypeRef TypeArena::array_of(TypeRef element, int extent) {
    for (const auto& t : owned_)
        if (t->kind == TypeKind::Array && t->element == element && t->extent == extent)
            return t.get();
    Type a;
    a.kind = TypeKind::Array;
    a.element = element;
    a.extent = extent;
    return add(a);
}

TypeRef TypeArena::record(std::string name, std::vector<RecordField> fields) {
    Type r;
    r.kind = TypeKind::Record;
    r.record_name = std::move(name);
    r.fields = std::move(fields);
    TypeRef ref = add(r);
    records_.push_back(ref);
    return ref;
}

TypeRef TypeArena::find_record(std::string_view name) const {
    for (TypeRef r : records_)
        if (r->record_name == name) return r;
    return nullptr;
}

std::optional<BaseType> base_type_from_name(std::string_view name) {
    if (name == "float") return BaseType::Float;
    if (name == "half") return BaseType::Half;
    if (name == "fixed") return BaseType::Fixed;
    if (name == "double") return BaseType::Double;
    if (name == "int") return BaseType::Int;
    if (name == "bool") return BaseType::Bool;
    return std::nullopt;
}

std::string_view base_type_name(BaseType base) {
    switch (base) {
    case BaseType::Float: return "float";
    case BaseType::Half: return "half";
    case BaseType::Fixed: return "fixed";
    case BaseType::Double: return "double";
    case BaseType::Int: return "int";
    case BaseType::Bool: return "bool";
    }
    return "float";
}

TypeRef TypeArena::by_name(std::string_view name) const {
    if (name == "void") return void_;
    if (name == "sampler2D") return samplers_[0];
    if (name == "sampler3D") return samplers_[1];
    if (name == "samplerCUBE") return samplers_[2];

    // <base>, <base><N>, <base><R>x<C>
    size_t split = name.size();
    while (split > 0 && (std::isdigit(static_cast<unsigned char>(name[split - 1])) ||
                         name[split - 1] == 'x'))
        --split;
    auto base = base_type_from_name(name.substr(0, split));
    if (base) {
        std::string_view dims = name.substr(split);
        if (dims.empty()) return scalar(*base);
        if (dims.size() == 1 && dims[0] >= '1' && dims[0] <= '4')
            return vector(*base, dims[0] - '0');
        if (dims.size() == 3 && dims[1] == 'x' && dims[0] >= '1' && dims[0] <= '4' &&
            dims[2] >= '1' && dims[2] <= '4')
            return matrix(*base, dims[0] - '0', dims[2] - '0');
        return nullptr;
    }
    return find_record(name);
}

std::string TypeArena::name_of(TypeRef type) {
    if (!type) return "<null>";
    switch (type->kind) {
    case TypeKind::Void: return "void";
    case TypeKind::Scalar: return std::string(base_type_name(type->base));
    case TypeKind::Vector:
        return std::string(base_type_name(type->base)) + std::to_string(type->rows);
    case TypeKind::Matrix:
        return std::string(base_type_name(type->base)) + std::to_string(type->rows) + "x" +
               std::to_string(type->cols);
    case TypeKind::Sampler:
        switch (type->sampler_dim) {
        case SamplerDim::Dim2D: return "sampler2D";
        case SamplerDim::Dim3D: return "sampler3D";
        case SamplerDim::Cube: return "samplerCUBE";
        }
        return "sampler";
    case TypeKind::Array:
        return name_of(type->element) + "[" + std::to_string(type->extent) + "]";
    case TypeKind::Record: return type->record_name;
    }
    return "<type>";
}

}  // namespace cg

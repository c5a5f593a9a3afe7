#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cg {

enum class BaseType { Float, Half, Fixed, Double, Int, Bool };
enum class TypeKind { Void, Scalar, Vector, Matrix, Sampler, Array, Record };
enum class SamplerDim { Dim2D, Dim3D, Cube };

struct Type;
using TypeRef = const Type*;

struct RecordField {
    std::string name;
    TypeRef type = nullptr;
};

// Semantic types. Instances are interned in a TypeArena; equality is
// pointer equality.
struct Type {
    TypeKind kind = TypeKind::Void;
    BaseType base = BaseType::Float;   // scalar / vector / matrix
    int rows = 0;                      // vector length lives in rows (1..4)
    int cols = 0;                      // matrix columns (1..4)
    SamplerDim sampler_dim = SamplerDim::Dim2D;
    TypeRef element = nullptr;         // array element
    int extent = 0;                    // array extent
    std::string record_name;
    std::vector<RecordField> fields;

    bool is_void() const { return kind == TypeKind::Void; }
    bool is_scalar() const { return kind == TypeKind::Scalar; }
    bool is_vector() const { return kind == TypeKind::Vector; }
    bool is_matrix() const { return kind == TypeKind::Matrix; }
    bool is_sampler() const { return kind == TypeKind::Sampler; }
    bool is_array() const { return kind == TypeKind::Array; }
    bool is_record() const { return kind == TypeKind::Record; }
    bool is_numeric() const { return is_scalar() || is_vector() || is_matrix(); }
    bool is_float_family() const {
        return is_numeric() && (base == BaseType::Float || base == BaseType::Half ||
                                base == BaseType::Fixed || base == BaseType::Double);
    }
    bool is_bool() const { return is_numeric() && base == BaseType::Bool; }
    bool is_int() const { return is_numeric() && base == BaseType::Int; }

    // Number of scalar components: 1 for scalars, length for vectors,
    // rows*cols for matrices.
    int component_count() const {
        switch (kind) {
        case TypeKind::Scalar: return 1;
        case TypeKind::Vector: return rows;
        case TypeKind::Matrix: return rows * cols;
        default: return 0;
        }
    }
    // Vector length for scalar/vector uses (scalar counts as 1).
    int length() const { return kind == TypeKind::Scalar ? 1 : rows; }

    const RecordField* find_field(std::string_view name) const {
        for (const auto& f : fields)
            if (f.name == name) return &f;
        return nullptr;
    }
};

// Owns and dedupes Type instances for one compilation.
class TypeArena {
public:
    TypeArena();
    TypeArena(TypeArena&&) noexcept = default;
    TypeArena& operator=(TypeArena&&) noexcept = default;

    TypeRef void_type() const { return void_; }
    TypeRef scalar(BaseType base) const;
    TypeRef vector(BaseType base, int length) const;
    TypeRef matrix(BaseType base, int rows, int cols) const;
    TypeRef sampler(SamplerDim dim) const;
    TypeRef array_of(TypeRef element, int extent);
    TypeRef record(std::string name, std::vector<RecordField> fields);
    TypeRef find_record(std::string_view name) const;

    // Resolves a type name: "void", "float", "float4", "float4x4" and the
    // same shapes for half/fixed/double/int/bool, sampler types, or a
    // declared record name. "float1" resolves to the length-1 vector,
    // a distinct type from scalar "float" (conversion between the two is
    // free in both directions).
    TypeRef by_name(std::string_view name) const;

    // Display name ("float4", "float4x4", "sampler2D", record name, ...).
    static std::string name_of(TypeRef type);

private:
    // Fixed shapes are preallocated; arrays/records are appended.
    TypeRef void_ = nullptr;
    TypeRef scalars_[6] = {};
    TypeRef vectors_[6][4] = {};
    TypeRef matrices_[6][4][4] = {};
    TypeRef samplers_[3] = {};
    std::vector<std::unique_ptr<Type>> owned_;
    std::vector<TypeRef> records_;

    TypeRef add(Type t);
};

std::optional<BaseType> base_type_from_name(std::string_view name);
std::string_view base_type_name(BaseType base);

}  // namespace cg

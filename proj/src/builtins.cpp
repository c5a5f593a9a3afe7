#include "cg/builtins.hpp"

namespace cg {

namespace {

// Dot product shaped the way it lowers: length 1 is a plain multiply,
// length 2 a multiply/add pair (two roundings), lengths 3 and 4 a fused
// double-precision dot rounded once (DP3/DP4).
float dot_n(const float* a, const float* b, int n) {
    if (n == 1) return kernels::mul(a[0], b[0]);
    if (n == 2) return kernels::add(kernels::mul(a[0], b[0]), kernels::mul(a[1], b[1]));
    return kernels::dot(a, b, n);
}

void load_components(const Value& v, float* out, int n) {
    for (int i = 0; i < n; ++i) out[i] = v.f(i);
}

const TextureImage* image_of(const Value& v) {
    if (!v.sampler.image) throw VmError("sampler has no bound texture");
    return v.sampler.image;
}

Value float4_value(const TypeArena& types, const std::array<float, 4>& rgba) {
    Value out(types.vector(BaseType::Float, 4));
    for (int i = 0; i < 4; ++i) out.set_f(i, rgba[i]);
    return out;
}

}  // namespace

BuiltinCatalog::BuiltinCatalog(const TypeArena& types) {
    auto fscalar = types.scalar(BaseType::Float);
    auto fvec = [&](int n) {
        return n == 0 ? fscalar : (TypeRef)types.vector(BaseType::Float, n);
    };
    auto add = [&](BuiltinKind kind, std::string name, std::vector<TypeRef> params, TypeRef ret,
                   bool fragment = false) {
        BuiltinOverload o;
        o.kind = kind;
        o.sig.name = std::move(name);
        for (TypeRef p : params) o.sig.params.push_back({p, 0});
        o.sig.return_type = ret;
        o.sig.origin = FunctionSignature::Origin::Builtin;
        o.sig.index = static_cast<int>(overloads_.size());
        o.needs_fragment = fragment;
        overloads_.push_back(std::move(o));
    };

    // mul: matrix*vector, vector*matrix, matrix*matrix over all float dims.
    for (int r = 1; r <= 4; ++r)
        for (int c = 1; c <= 4; ++c)
            add(BuiltinKind::MulMatVec, "mul", {types.matrix(BaseType::Float, r, c), fvec(c)},
                fvec(r));
    for (int r = 1; r <= 4; ++r)
        for (int c = 1; c <= 4; ++c)
            add(BuiltinKind::MulVecMat, "mul", {fvec(r), types.matrix(BaseType::Float, r, c)},
                fvec(c));
    for (int r = 1; r <= 4; ++r)
        for (int k = 1; k <= 4; ++k)
            for (int c = 1; c <= 4; ++c)
                add(BuiltinKind::MulMatMat, "mul",
                    {types.matrix(BaseType::Float, r, k), types.matrix(BaseType::Float, k, c)},
                    types.matrix(BaseType::Float, r, c));

    for (int n = 2; n <= 4; ++n) add(BuiltinKind::Dot, "dot", {fvec(n), fvec(n)}, fscalar);

    for (int n = 0; n <= 4; ++n) {
        if (n == 1) continue;
        add(BuiltinKind::Abs, "abs", {fvec(n)}, fvec(n));
        add(BuiltinKind::Log2, "log2", {fvec(n)}, fvec(n));
        add(BuiltinKind::Rsqrt, "rsqrt", {fvec(n)}, fvec(n));
        add(BuiltinKind::Min, "min", {fvec(n), fvec(n)}, fvec(n));
        add(BuiltinKind::Max, "max", {fvec(n), fvec(n)}, fvec(n));
    }

    add(BuiltinKind::Reflect, "reflect", {fvec(3), fvec(3)}, fvec(3));

    add(BuiltinKind::Tex2D, "tex2D", {types.sampler(SamplerDim::Dim2D), fvec(2)}, fvec(4), true);
    add(BuiltinKind::Tex2DProj, "tex2Dproj", {types.sampler(SamplerDim::Dim2D), fvec(4)}, fvec(4),
        true);
    add(BuiltinKind::Tex3DProj, "tex3Dproj", {types.sampler(SamplerDim::Dim3D), fvec(4)}, fvec(4),
        true);
    add(BuiltinKind::TexCube, "texCUBE", {types.sampler(SamplerDim::Cube), fvec(3)}, fvec(4),
        true);
}

std::vector<FunctionSignature> BuiltinCatalog::signatures(const std::string& name) const {
    std::vector<FunctionSignature> out;
    for (const auto& o : overloads_)
        if (o.sig.name == name) out.push_back(o.sig);
    return out;
}

bool BuiltinCatalog::is_builtin_name(const std::string& name) const {
    for (const auto& o : overloads_)
        if (o.sig.name == name) return true;
    return false;
}

Value eval_builtin(const BuiltinOverload& o, const std::vector<Value>& args,
                   const TypeArena& types) {
    switch (o.kind) {
    case BuiltinKind::MulMatVec: {
        const Value& m = args[0];
        const Value& v = args[1];
        int rows = m.type->rows, cols = m.type->cols;
        float vec[4], row[4];
        load_components(v, vec, cols);
        Value out(o.sig.return_type);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) row[j] = m.f(i * cols + j);
            out.set_f(i, dot_n(row, vec, cols));
        }
        return out;
    }
    case BuiltinKind::MulVecMat: {
        const Value& v = args[0];
        const Value& m = args[1];
        int rows = m.type->rows, cols = m.type->cols;
        Value out(o.sig.return_type);
        // v.x * row0, then mad through the remaining rows; this is the
        // smeared MUL/MAD chain the lowering emits.
        for (int j = 0; j < cols; ++j) out.set_f(j, kernels::mul(v.f(0), m.f(j)));
        for (int i = 1; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                out.set_f(j, kernels::mad(v.f(i), m.f(i * cols + j), out.f(j)));
        return out;
    }
    case BuiltinKind::MulMatMat: {
        const Value& a = args[0];
        const Value& b = args[1];
        int rows = a.type->rows, inner = a.type->cols, cols = b.type->cols;
        Value out(o.sig.return_type);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j)
                out.set_f(i * cols + j, kernels::mul(a.f(i * inner), b.f(j)));
            for (int k = 1; k < inner; ++k)
                for (int j = 0; j < cols; ++j)
                    out.set_f(i * cols + j, kernels::mad(a.f(i * inner + k), b.f(k * cols + j),
                                                         out.f(i * cols + j)));
        }
        return out;
    }
    case BuiltinKind::Dot: {
        float a[4], b[4];
        int n = args[0].type->length();
        load_components(args[0], a, n);
        load_components(args[1], b, n);
        return Value::scalar_float(o.sig.return_type, dot_n(a, b, n));
    }
    case BuiltinKind::Abs: {
        Value out(o.sig.return_type);
        for (int i = 0; i < args[0].count(); ++i) {
            float x = args[0].f(i);
            out.set_f(i, kernels::vmax(x, -x));
        }
        return out;
    }
    case BuiltinKind::Log2: {
        Value out(o.sig.return_type);
        for (int i = 0; i < args[0].count(); ++i) out.set_f(i, kernels::log2(args[0].f(i)));
        return out;
    }
    case BuiltinKind::Rsqrt: {
        Value out(o.sig.return_type);
        for (int i = 0; i < args[0].count(); ++i) out.set_f(i, kernels::rsqrt(args[0].f(i)));
        return out;
    }
    case BuiltinKind::Min:
    case BuiltinKind::Max: {
        Value out(o.sig.return_type);
        for (int i = 0; i < args[0].count(); ++i) {
            float a = args[0].f(i), b = args[1].f(i);
            out.set_f(i, o.kind == BuiltinKind::Min ? kernels::vmin(a, b) : kernels::vmax(a, b));
        }
        return out;
    }
    case BuiltinKind::Reflect: {
        float n[3], inc[3];
        load_components(args[1], n, 3);
        load_components(args[0], inc, 3);
        float d = dot_n(n, inc, 3);
        float d2 = kernels::mul(d, 2.0f);
        Value out(o.sig.return_type);
        for (int k = 0; k < 3; ++k) out.set_f(k, kernels::mad(n[k], -d2, inc[k]));
        return out;
    }
    case BuiltinKind::Tex2D:
        return float4_value(types, sample_2d(*image_of(args[0]), args[1].f(0), args[1].f(1)));
    case BuiltinKind::Tex2DProj: {
        float c[4];
        load_components(args[1], c, 4);
        return float4_value(types, sample_2d_proj(*image_of(args[0]), c));
    }
    case BuiltinKind::Tex3DProj: {
        float c[4];
        load_components(args[1], c, 4);
        return float4_value(types, sample_3d_proj(*image_of(args[0]), c));
    }
    case BuiltinKind::TexCube:
        return float4_value(types, sample_cube(*image_of(args[0]), args[1].f(0), args[1].f(1),
                                               args[1].f(2)));
    }
    throw VmError("unhandled builtin");
}

}  // namespace cg

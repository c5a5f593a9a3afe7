#include "cg/texture.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace cg {

TextureImage TextureImage::solid(int w, int h, std::array<float, 4> color, int d) {
    TextureImage img;
    img.width = w;
    img.height = h;
    img.depth = d;
    img.texels.assign(static_cast<size_t>(w) * h * d, color);
    return img;
}

std::optional<TextureImage> parse_texture(const std::string& text, std::string& error) {
    std::istringstream in(text);
    TextureImage img;
    std::string header;
    if (!std::getline(in, header)) {
        error = "empty texture file";
        return std::nullopt;
    }
    std::istringstream hs(header);
    if (!(hs >> img.width >> img.height)) {
        error = "texture header must be 'W H' or 'W H D'";
        return std::nullopt;
    }
    if (!(hs >> img.depth)) img.depth = 1;
    if (img.width <= 0 || img.height <= 0 || img.depth <= 0) {
        error = "texture dimensions must be positive";
        return std::nullopt;
    }
    size_t count = static_cast<size_t>(img.width) * img.height * img.depth;
    img.texels.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        std::array<float, 4> t;
        if (!(in >> t[0] >> t[1] >> t[2] >> t[3])) {
            error = "expected " + std::to_string(count) + " 'R G B A' texel lines, got " +
                    std::to_string(i);
            return std::nullopt;
        }
        img.texels.push_back(t);
    }
    return img;
}

std::string format_texture(const TextureImage& img) {
    std::ostringstream out;
    out << img.width << " " << img.height;
    if (img.depth != 1) out << " " << img.depth;
    out << "\n";
    for (const auto& t : img.texels)
        out << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << "\n";
    return out.str();
}

namespace {

// floor(clamp(coord, 0, 1-2^-24) * size); double keeps the product exact
// at desk scale so both interpreters index the same texel.
int texel_index(float coord, int size) {
    double c = static_cast<double>(coord);
    const double upper = 1.0 - 0x1p-24;
    if (!(c > 0.0)) c = 0.0;  // NaN clamps to 0
    if (c > upper) c = upper;
    return static_cast<int>(std::floor(c * static_cast<double>(size)));
}

}  // namespace

std::array<float, 4> sample_2d(const TextureImage& img, float s, float t) {
    return img.texel(texel_index(s, img.width), texel_index(t, img.height), 0);
}

std::array<float, 4> sample_3d(const TextureImage& img, float s, float t, float r) {
    return img.texel(texel_index(s, img.width), texel_index(t, img.height),
                     texel_index(r, img.depth));
}

std::array<float, 4> sample_cube(const TextureImage& img, float x, float y, float z) {
    float ax = std::fabs(x), ay = std::fabs(y), az = std::fabs(z);
    float ma;
    float sc, tc;
    int face;
    if (ax >= ay && ax >= az) {
        ma = ax;
        face = x >= 0 ? 0 : 1;
        sc = x >= 0 ? -z : z;
        tc = -y;
    } else if (ay >= az) {
        ma = ay;
        face = y >= 0 ? 2 : 3;
        sc = x;
        tc = y >= 0 ? z : -z;
    } else {
        ma = az;
        face = z >= 0 ? 4 : 5;
        sc = z >= 0 ? x : -x;
        tc = -y;
    }
    if (ma == 0.0f) return {0, 0, 0, 0};
    float s = (sc / ma + 1.0f) * 0.5f;
    float t = (tc / ma + 1.0f) * 0.5f;
    int layer = face < img.depth ? face : img.depth - 1;
    return img.texel(texel_index(s, img.width), texel_index(t, img.height), layer);
}

std::array<float, 4> sample_2d_proj(const TextureImage& img, const float* c) {
    if (c[3] == 0.0f) return {0, 0, 0, 0};
    return sample_2d(img, c[0] / c[3], c[1] / c[3]);
}

std::array<float, 4> sample_3d_proj(const TextureImage& img, const float* c) {
    if (c[3] == 0.0f) return {0, 0, 0, 0};
    return sample_3d(img, c[0] / c[3], c[1] / c[3], c[2] / c[3]);
}

}  // namespace cg

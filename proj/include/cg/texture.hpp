#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace cg {

// RGBA texel grid, unclamped storage. 2D images have depth 1; 3D images
// have depth > 1; cube maps store six faces as depth layers 0..5 in the
// order +x, -x, +y, -y, +z, -z.
struct TextureImage {
    int width = 0;
    int height = 0;
    int depth = 1;
    std::vector<std::array<float, 4>> texels;  // x fastest, then y, then z

    const std::array<float, 4>& texel(int x, int y, int z = 0) const {
        return texels[(static_cast<size_t>(z) * height + y) * width + x];
    }
    std::array<float, 4>& texel(int x, int y, int z = 0) {
        return texels[(static_cast<size_t>(z) * height + y) * width + x];
    }

    static TextureImage solid(int w, int h, std::array<float, 4> color, int d = 1);
};

// Text format: first line "W H" (or "W H D" for 3D and cube images), then
// W*H*D lines of "R G B A" floats, x fastest from texel (0,0,0).
std::optional<TextureImage> parse_texture(const std::string& text, std::string& error);
std::string format_texture(const TextureImage& img);

// Nearest filtering with clamp-to-edge: texel index is
// floor(clamp(coord, 0, 1-2^-24) * size), computed in double so both
// interpreters agree bit for bit.
std::array<float, 4> sample_2d(const TextureImage& img, float s, float t);
std::array<float, 4> sample_3d(const TextureImage& img, float s, float t, float r);
// Major-axis face selection; a zero direction vector samples as all-zero.
std::array<float, 4> sample_cube(const TextureImage& img, float x, float y, float z);

// Projective forms divide by the last component first; w == 0 yields the
// all-zero texel.
std::array<float, 4> sample_2d_proj(const TextureImage& img, const float* coord4);
std::array<float, 4> sample_3d_proj(const TextureImage& img, const float* coord4);

}  // namespace cg

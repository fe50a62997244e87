#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dbrief/common.hpp"

namespace dbrief {

// Single-channel 8-bit raster, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0);

    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    bool in_bounds(double x, double y) const {
        return x >= 0.0 && y >= 0.0 && x <= width - 1.0 && y <= height - 1.0;
    }
};

struct Pyramid {
    std::vector<GrayImage> levels;
    double scale_factor = 1.2;
};

// Separable Gaussian blur, kernel radius ceil(3*sigma), clamp-to-edge borders.
// Intermediate sums stay in floating point; rounding happens once at the end.
GrayImage gaussian_smooth(const GrayImage& img, double sigma);

// Bilinear blend of the four enclosing pixels. Coordinates must lie in
// [0, width-1] x [0, height-1]; callers clamp or cull beforehand.
double sample_bilinear(const GrayImage& img, double x, double y);

// Level k has dimensions floor(level0 / scale_factor^k); content is the
// previous level resampled bilinearly. Levels below 16x16 are rejected.
Pyramid build_pyramid(const GrayImage& img, int n_levels, double scale_factor);

// Binary PGM (P5, maxval 255).
GrayImage read_pgm(const std::string& path);
void write_pgm(const GrayImage& img, const std::string& path);

}  // namespace dbrief

#include "dbrief/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace dbrief {

GrayImage::GrayImage(int w, int h, std::uint8_t fill) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw DomainError("image dimensions must be positive");
    data.assign(static_cast<std::size_t>(w) * h, fill);
}

namespace {

std::vector<double> gaussian_kernel(double sigma, int& radius) {
    radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (auto& v : k) v /= sum;
    return k;
}

}  // namespace

GrayImage gaussian_smooth(const GrayImage& img, double sigma) {
    if (sigma <= 0.0) throw DomainError("gaussian_smooth: sigma must be positive");
    int radius = 0;
    const std::vector<double> kernel = gaussian_kernel(sigma, radius);

    const int w = img.width;
    const int h = img.height;
    std::vector<double> tmp(static_cast<std::size_t>(w) * h);

    // horizontal pass, clamp-to-edge
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* row = &img.data[static_cast<std::size_t>(y) * w];
        double* out = &tmp[static_cast<std::size_t>(y) * w];
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int xi = std::clamp(x + i, 0, w - 1);
                acc += kernel[static_cast<std::size_t>(i + radius)] * row[xi];
            }
            out[x] = acc;
        }
    }

    // vertical pass, rounded once at the end
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int yi = std::clamp(y + i, 0, h - 1);
                acc += kernel[static_cast<std::size_t>(i + radius)] * tmp[static_cast<std::size_t>(yi) * w + x];
            }
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
        }
    }
    return out;
}

double sample_bilinear(const GrayImage& img, double x, double y) {
    if (!img.in_bounds(x, y)) throw DomainError("sample_bilinear: coordinates outside image");
    int x0 = static_cast<int>(x);
    int y0 = static_cast<int>(y);
    if (x0 > img.width - 2) x0 = img.width - 2;
    if (y0 > img.height - 2) y0 = img.height - 2;
    if (img.width == 1) x0 = 0;
    if (img.height == 1) y0 = 0;
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double v00 = img.at(x0, y0);
    const double v10 = img.at(x1, y0);
    const double v01 = img.at(x0, y1);
    const double v11 = img.at(x1, y1);
    // difference form: exact on constant patches, so intensity ties stay ties
    return v00 + fx * (v10 - v00) + fy * (v01 - v00) + fx * fy * (v00 + v11 - v10 - v01);
}

Pyramid build_pyramid(const GrayImage& img, int n_levels, double scale_factor) {
    if (n_levels < 1) throw DomainError("build_pyramid: n_levels must be >= 1");
    if (scale_factor <= 1.0) throw DomainError("build_pyramid: scale_factor must be > 1");

    Pyramid pyr;
    pyr.scale_factor = scale_factor;
    pyr.levels.push_back(img);
    double scale = 1.0;
    for (int k = 1; k < n_levels; ++k) {
        scale *= scale_factor;
        const int w = static_cast<int>(std::floor(img.width / scale));
        const int h = static_cast<int>(std::floor(img.height / scale));
        if (w < 16 || h < 16)
            throw DomainError("build_pyramid: level " + std::to_string(k) + " would shrink below 16x16");
        const GrayImage& prev = pyr.levels.back();
        GrayImage level(w, h);
        const double sx = static_cast<double>(prev.width) / w;
        const double sy = static_cast<double>(prev.height) / h;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double px = std::min((x + 0.5) * sx - 0.5, prev.width - 1.0);
                const double py = std::min((y + 0.5) * sy - 0.5, prev.height - 1.0);
                const double v = sample_bilinear(prev, std::max(px, 0.0), std::max(py, 0.0));
                level.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
        pyr.levels.push_back(std::move(level));
    }
    return pyr;
}

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open PGM file: " + path);

    auto next_token = [&in, &path]() -> std::string {
        std::string tok;
        int c = in.get();
        while (c != EOF) {
            if (c == '#') {
                while (c != EOF && c != '\n') c = in.get();
            } else if (std::isspace(c)) {
                c = in.get();
            } else {
                break;
            }
        }
        while (c != EOF && !std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            c = in.get();
        }
        if (tok.empty()) throw ParseError("truncated PGM header: " + path);
        return tok;
    };

    if (next_token() != "P5") throw ParseError("not a binary PGM (P5): " + path);
    const int w = std::stoi(next_token());
    const int h = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (w <= 0 || h <= 0) throw ParseError("invalid PGM dimensions: " + path);
    if (maxval != 255) throw ParseError("only maxval 255 PGM supported: " + path);

    GrayImage img(w, h);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
        throw ParseError("truncated PGM pixel data: " + path);
    return img;
}

void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) throw ParseError("failed writing PGM: " + path);
}

}  // namespace dbrief

#include "dbrief/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dbrief/common.hpp"

namespace dbrief {

namespace {

// radius-3 Bresenham circle, clockwise from 12 o'clock
constexpr int kCircle[16][2] = {{0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},
                                {2, 2},  {1, 3},  {0, 3},  {-1, 3}, {-2, 2}, {-3, 1},
                                {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};

// Best qualifying arc score: max over maximal runs (brighter or darker,
// length >= n_contiguous) of the SAD along the run. Zero when no run
// qualifies.
double segment_score(const GrayImage& img, int x, int y, double threshold, int n_contiguous) {
    const double c = img.at(x, y);
    int state[16];
    double diff[16];
    for (int i = 0; i < 16; ++i) {
        const double v = img.at(x + kCircle[i][0], y + kCircle[i][1]);
        diff[i] = std::abs(v - c);
        state[i] = v > c + threshold ? 1 : (v < c - threshold ? -1 : 0);
    }
    double best = 0.0;
    for (int polarity : {1, -1}) {
        // scan runs on the doubled circle; a full-circle run caps at 16
        int run = 0;
        double sad = 0.0;
        for (int i = 0; i < 32; ++i) {
            const int j = i & 15;
            if (state[j] == polarity) {
                ++run;
                sad += diff[j];
                if (run >= n_contiguous) best = std::max(best, sad);
                if (run == 16) break;
            } else {
                run = 0;
                sad = 0.0;
            }
        }
    }
    return best;
}

}  // namespace

std::vector<Keypoint> detect_fast(const GrayImage& img, double threshold, int n_contiguous,
                                  int border_margin) {
    if (threshold <= 0.0) throw DomainError("detect_fast: threshold must be positive");
    if (n_contiguous < 9 || n_contiguous > 12)
        throw DomainError("detect_fast: n_contiguous must be in [9, 12]");
    if (img.width < 16 || img.height < 16) throw DomainError("detect_fast: image smaller than 16x16");

    const int margin = std::max(border_margin, 3);
    std::vector<double> score(static_cast<std::size_t>(img.width) * img.height, 0.0);
    for (int y = margin; y < img.height - margin; ++y)
        for (int x = margin; x < img.width - margin; ++x)
            score[static_cast<std::size_t>(y) * img.width + x] =
                segment_score(img, x, y, threshold, n_contiguous);

    std::vector<Keypoint> out;
    for (int y = margin; y < img.height - margin; ++y) {
        for (int x = margin; x < img.width - margin; ++x) {
            const double s = score[static_cast<std::size_t>(y) * img.width + x];
            if (s <= 0.0) continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const double sn = score[static_cast<std::size_t>(y + dy) * img.width + (x + dx)];
                    // strict on earlier neighbors keeps plateaus deterministic
                    if (sn > s || (sn == s && (dy < 0 || (dy == 0 && dx < 0)))) {
                        is_max = false;
                        break;
                    }
                }
            if (is_max) out.push_back({static_cast<double>(x), static_cast<double>(y), 0.0, 0, s});
        }
    }
    return out;
}

double orientation_centroid(const GrayImage& img, const Keypoint& kp, int radius) {
    const int cx = static_cast<int>(std::lround(kp.x));
    const int cy = static_cast<int>(std::lround(kp.y));
    if (cx - radius < 0 || cy - radius < 0 || cx + radius >= img.width || cy + radius >= img.height)
        throw DomainError("orientation_centroid: patch exceeds image bounds");

    double m10 = 0.0, m01 = 0.0;
    const int r2 = radius * radius;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy > r2) continue;
            const double v = img.at(cx + dx, cy + dy);
            m10 += dx * v;
            m01 += dy * v;
        }
    }
    if (m10 == 0.0 && m01 == 0.0) return 0.0;
    return std::atan2(m01, m10);
}

std::vector<Keypoint> detect_multiscale(const Pyramid& pyr, const DetectorParams& params) {
    if (params.n_target < 1) throw DomainError("detect_multiscale: n_target must be >= 1");

    const std::size_t n_levels = pyr.levels.size();
    std::vector<std::vector<Keypoint>> per_level(n_levels);
    parallel_for(n_levels, params.threads, [&](std::size_t lvl) {
        const GrayImage& img = pyr.levels[lvl];
        const int margin = std::max({params.border_margin, params.orientation_radius + 1, 3});
        std::vector<Keypoint> kps =
            detect_fast(img, params.threshold, params.n_contiguous, margin);
        const double scale = std::pow(pyr.scale_factor, static_cast<double>(lvl));
        for (auto& kp : kps) {
            kp.angle = orientation_centroid(img, kp, params.orientation_radius);
            kp.octave = static_cast<int>(lvl);
            kp.x *= scale;
            kp.y *= scale;
        }
        per_level[lvl] = std::move(kps);
    });

    std::vector<Keypoint> all;
    for (auto& v : per_level)
        all.insert(all.end(), v.begin(), v.end());

    std::sort(all.begin(), all.end(), [](const Keypoint& a, const Keypoint& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.octave != b.octave) return a.octave < b.octave;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    if (all.size() > static_cast<std::size_t>(params.n_target))
        all.resize(static_cast<std::size_t>(params.n_target));
    return all;
}

std::vector<Keypoint> read_keypoints(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open keypoint file: " + path);
    std::string header;
    std::getline(in, header);
    if (header != "keypoints v1") throw ParseError(path + ": bad header, expected `keypoints v1`");
    std::vector<Keypoint> kps;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        Keypoint kp;
        if (!(ss >> kp.x >> kp.y >> kp.angle >> kp.octave >> kp.score))
            throw ParseError(path + ": malformed keypoint line: " + line);
        kps.push_back(kp);
    }
    return kps;
}

void write_keypoints(const std::vector<Keypoint>& kps, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    out << "keypoints v1\n";
    for (const auto& kp : kps) {
        out << format_real(kp.x) << " " << format_real(kp.y) << " " << format_real(kp.angle)
            << " " << kp.octave << " " << format_real(kp.score) << "\n";
    }
}

}  // namespace dbrief

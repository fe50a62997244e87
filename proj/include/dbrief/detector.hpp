#pragma once

#include <string>
#include <vector>

#include "dbrief/image.hpp"

namespace dbrief {

// Keypoint in level-0 pixel coordinates; angle in [-pi, pi).
struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    double angle = 0.0;
    int octave = 0;
    double score = 0.0;
};

struct DetectorParams {
    double threshold = 20.0;   // intensity delta for the segment test
    int n_contiguous = 9;      // contiguous arc length, in [9, 12]
    int n_levels = 1;
    double scale_factor = 1.2;
    int n_target = 500;
    int border_margin = 17;    // per-level margin, covers orientation + patch
    int orientation_radius = 15;
    int threads = 1;
};

// Segment test on the radius-3 Bresenham circle with 3x3 non-maximum
// suppression; score is the SAD over the best qualifying arc.
std::vector<Keypoint> detect_fast(const GrayImage& img, double threshold, int n_contiguous,
                                  int border_margin = 3);

// Intensity-centroid orientation atan2(m01, m10) over a circular patch.
// A zero-moment patch maps to angle 0.
double orientation_centroid(const GrayImage& img, const Keypoint& kp, int radius);

// Per-level detection, coordinates scaled to level 0, orientation computed
// at the native level, global top-n_target by score. Ties break by
// (octave, y, x) ascending.
std::vector<Keypoint> detect_multiscale(const Pyramid& pyr, const DetectorParams& params);

// Text keypoint file, header `keypoints v1`.
std::vector<Keypoint> read_keypoints(const std::string& path);
void write_keypoints(const std::vector<Keypoint>& kps, const std::string& path);

}  // namespace dbrief

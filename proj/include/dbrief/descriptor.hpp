#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dbrief/camera.hpp"
#include "dbrief/detector.hpp"
#include "dbrief/image.hpp"

namespace dbrief {

// Ordered set of point-pair offsets in patch coordinates.
struct TestSet {
    std::vector<std::pair<Vec2, Vec2>> pairs;
    int patch_size = 32;

    int dim() const { return static_cast<int>(pairs.size()); }
};

// Test endpoints anchored at a keypoint, in absolute sub-pixel image
// coordinates (already clamped to the image).
struct ProjectedTestSet {
    std::vector<std::pair<Vec2, Vec2>> points;
    Keypoint source_keypoint;
    int clamped = 0;  // endpoints that had to be clamped to the border
};

// Packed bit string plus optional stability mask.
struct BinaryDescriptor {
    std::vector<std::uint64_t> bits;
    std::vector<std::uint64_t> mask;  // empty when no mask was learned
    int dim = 0;
    int mask_ones = 0;

    bool has_mask() const { return !mask.empty(); }
    bool get_bit(int i) const { return (bits[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1u; }
    bool get_mask_bit(int i) const { return (mask[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1u; }
};

inline int descriptor_words(int dim) { return (dim + 63) / 64; }

enum class Variant { Brief, DBrief };

struct ExtractOptions {
    Variant variant = Variant::DBrief;
    bool use_orientation = true;
    bool learn_mask = false;
    double smooth_sigma = 2.0;
    double scale_factor = 1.2;       // per-octave offset scaling
    double rot_magnitude = 0.2094;   // mask-learning rotation bound (12 deg)
    std::uint64_t seed = 0;
    int threads = 1;
    bool presmoothed = false;        // image is already smoothed
};

struct ExtractResult {
    std::vector<Keypoint> keypoints;       // keypoints actually described
    std::vector<BinaryDescriptor> descriptors;
    std::vector<std::size_t> skipped;      // input indices that failed preconditions
    long clamp_count = 0;                  // total clamped endpoints
};

// Rotate every offset about the patch origin (y-down convention: pi/2 maps
// (3,0) to (0,3)).
TestSet rotate_tests(const TestSet& q, double angle);

// Anchor the rotated, octave-scaled tests on the plane at distance lambda
// through the camera model and project every endpoint back to pixels
// (the Brief variant anchors directly at the keypoint). Out-of-image
// endpoints are clamped to the border and counted.
ProjectedTestSet project_tests(const TestSet& q, const Keypoint& kp, const CameraModel& model,
                               double angle, double scale_factor = 1.2,
                               Variant variant = Variant::DBrief);

// bit d = 1 iff I(u1) < I(u2), bilinear sampling, ties produce 0.
BinaryDescriptor apply_tests(const GrayImage& smoothed, const ProjectedTestSet& pts);

// Smooth once, then per keypoint: project tests (angle = keypoint angle when
// use_orientation), sample bits, and optionally learn a stability mask from
// two extra rotated projections.
ExtractResult extract(const GrayImage& img, const std::vector<Keypoint>& kps, const TestSet& q,
                      const CameraModel& model, const ExtractOptions& options);

// BRIEF-style random pattern: endpoints from an isotropic Gaussian with
// sigma = S/5, rounded to integers and clamped to [-S/2, S/2 - 1].
TestSet random_test_set(int dim, int patch_size, std::uint64_t seed);

// Text test-set file, header `dbrief-tests v1`.
TestSet read_test_set(const std::string& path);
void write_test_set(const TestSet& q, const std::string& path);

// Binary descriptor file (magic DBRF, version 1).
void write_descriptors(const std::vector<Keypoint>& kps,
                       const std::vector<BinaryDescriptor>& descs, const std::string& path);
void read_descriptors(const std::string& path, std::vector<Keypoint>& kps,
                      std::vector<BinaryDescriptor>& descs);

}  // namespace dbrief

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dbrief/camera.hpp"
#include "dbrief/detector.hpp"
#include "dbrief/matching.hpp"

namespace dbrief {

// Maps normalized-plane points of image i-1 to image i. Stored normalized
// so the bottom-right entry is 1 when nonzero.
struct Homography {
    Mat3 H;
};

Homography load_homography(const std::string& path);
void save_homography(const Homography& h, const std::string& path);
Homography make_homography(const Mat3& m);

// index in image i -> index in image j, injective on both sides.
struct GroundTruth {
    std::vector<std::pair<int, int>> correspondences;
    double radius = 3.0;

    std::optional<int> target_of(int source) const;
};

// Unproject to the normalized plane, apply H, re-project with the same
// model. Out-of-image or behind-camera results are flagged invalid.
struct ProjectedPoint {
    Vec2 pixel;
    bool valid = false;
};
std::vector<ProjectedPoint> project_keypoints(const std::vector<Keypoint>& kps,
                                              const CameraModel& model, const Homography& h);

// Nearest target within `radius` of each projected source, assigned
// greedily by ascending distance; every target used at most once.
GroundTruth build_ground_truth(const std::vector<Keypoint>& kps_i,
                               const std::vector<Keypoint>& kps_j, const CameraModel& model,
                               const Homography& h, double radius = 3.0);

// Denominator for Eq.-style recall: the ground-truth set, or all sources.
enum class RateDenominator { GroundTruth, AllSources };

double recognition_rate(const std::vector<Match>& matches, const GroundTruth& gt,
                        RateDenominator denom = RateDenominator::GroundTruth,
                        int n_sources = 0);

struct PrPoint {
    double threshold = 0.0;
    double one_minus_precision = 0.0;
    double recall = 0.0;
};

// Brute-force matching under each threshold; points with no emitted
// matches are omitted. The recall denominator defaults to the ground-truth
// set and can be switched to the full source count.
std::vector<PrPoint> pr_curve(const std::vector<BinaryDescriptor>& desc_i,
                              const std::vector<BinaryDescriptor>& desc_j, const GroundTruth& gt,
                              const std::vector<double>& thresholds, bool masked = false,
                              int threads = 1,
                              RateDenominator denom = RateDenominator::GroundTruth);

// Pointwise mean over per-pair PR curves computed on a common threshold
// grid; only thresholds present in every curve contribute.
std::vector<PrPoint> mean_pr_curves(const std::vector<std::vector<PrPoint>>& curves);

// Overlap of two normalized histograms, sum_k sqrt(p_k q_k).
double bhattacharyya(const std::vector<double>& p, const std::vector<double>& q);

struct DistanceHistograms {
    std::vector<double> matching;     // intra-class relative frequencies
    std::vector<double> nonmatching;  // inter-class relative frequencies
    double bin_width = 1.0;
};

// Integer-distance bins 0..D for plain Hamming; 128 uniform bins on [0, 2]
// for masked distances.
DistanceHistograms distance_histograms(const std::vector<BinaryDescriptor>& desc_i,
                                       const std::vector<BinaryDescriptor>& desc_j,
                                       const GroundTruth& gt, bool masked = false);

void write_pr_csv(const std::vector<PrPoint>& pr, const std::string& path);
void write_histogram_csv(const DistanceHistograms& h, const std::string& path);

}  // namespace dbrief

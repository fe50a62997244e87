#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dbrief/camera.hpp"
#include "dbrief/descriptor.hpp"
#include "dbrief/image.hpp"

namespace dbrief {

// One bit per corpus patch; outcome column of a single binary test.
struct BitColumn {
    std::vector<std::uint64_t> words;
    int size = 0;

    static BitColumn zeros(int n) {
        BitColumn c;
        c.size = n;
        c.words.assign(static_cast<std::size_t>((n + 63) / 64), 0);
        return c;
    }
    void set(int i) { words[static_cast<std::size_t>(i) >> 6] |= std::uint64_t{1} << (i & 63); }
    bool get(int i) const {
        return (words[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1u;
    }
    int count() const;
};

// c = | (2/P) sum |a_p - b_p| - 1 |; 0 = uncorrelated, 1 = (anti)correlated.
double correlation(const BitColumn& a, const BitColumn& b);

struct PatchRecord {
    GrayImage patch;
    double angle = 0.0;
    bool has_pose = false;  // keypoint position in the source image is known
    Vec2 position;
    int octave = 0;
};

struct PatchCorpus {
    std::vector<PatchRecord> patches;
    int patch_size = 0;
    std::string source;
};

// Directory with `manifest.txt` (`filename angle [x y octave]` per line)
// plus the referenced S x S PGM patches.
PatchCorpus load_corpus(const std::string& dir);

// All pixel pairs of an S x S patch as center offsets, lexicographic order.
// Filters drop border endpoints and segment lengths d with d <= 3 or
// d >= ceil(9S/10).
TestSet enumerate_candidate_tests(int patch_size, bool apply_filters = true);

struct TestStats {
    std::pair<Vec2, Vec2> test;
    double alpha = 0.0;     // ratio of ones over the corpus
    double variance = 0.0;  // alpha * (1 - alpha)
};

struct VarianceOptions {
    bool rotate_with_orientation = true;
    const CameraModel* distort_model = nullptr;  // route tests through the camera
    double scale_factor = 1.2;
    int threads = 1;
};

// Outcomes of one test over every corpus patch.
BitColumn test_outcomes(const PatchCorpus& corpus, const std::pair<Vec2, Vec2>& test,
                        const VarianceOptions& options);

// Streaming per-test counts; no P x D matrix is ever built.
std::vector<TestStats> compute_variances(const PatchCorpus& corpus, const TestSet& candidates,
                                         const VarianceOptions& options);

struct GreedyLogRow {
    int pass = 0;
    double t_c = 0.0;
    int admitted = 0;
};

// One scan decision, for post-hoc consistency checks.
struct GreedyEvent {
    int candidate_index = 0;  // position in the variance-sorted order
    int pass = 0;
    double t_c = 0.0;
    double max_corr = 0.0;
    bool admitted = false;
};

struct LearnResult {
    TestSet tests;
    std::vector<GreedyLogRow> log;
    double final_tc = 0.0;
    bool reached = false;
    std::vector<GreedyEvent> trace;  // only when requested
};

// Variance-sorted greedy scan admitting tests whose correlation against the
// admitted set stays below t_c; t_c starts at 0.2 and grows by 0.1 per
// exhausted pass. Sorting ties break by candidate enumeration index.
LearnResult greedy_select(const std::vector<TestStats>& stats, const PatchCorpus& corpus,
                          int d_target, const VarianceOptions& options, double t_c_start = 0.2,
                          bool keep_trace = false);

struct MaskResult {
    std::vector<std::uint64_t> mask;
    int mask_ones = 0;
};

// Stability mask from two extra rotated projections of the test set;
// bit d survives iff all three extractions agree. All-zero masks fall
// back to all-ones.
MaskResult learn_mask(const GrayImage& smoothed, const Keypoint& kp, const TestSet& q,
                      const CameraModel& model, double rot_magnitude, std::uint64_t seed,
                      Variant variant = Variant::DBrief, double scale_factor = 1.2);

void write_learning_log(const std::vector<GreedyLogRow>& log, const std::string& path);

}  // namespace dbrief

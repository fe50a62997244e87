#include "dbrief/learning.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace dbrief {

int BitColumn::count() const {
    int n = 0;
    for (std::uint64_t w : words) n += std::popcount(w);
    return n;
}

double correlation(const BitColumn& a, const BitColumn& b) {
    if (a.size != b.size || a.size < 1) throw DomainError("correlation: column length mismatch");
    int differing = 0;
    for (std::size_t i = 0; i < a.words.size(); ++i)
        differing += std::popcount(a.words[i] ^ b.words[i]);
    return std::abs(2.0 * differing / a.size - 1.0);
}

PatchCorpus load_corpus(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path manifest = fs::path(dir) / "manifest.txt";
    std::ifstream in(manifest);
    if (!in) throw ParseError("cannot open corpus manifest: " + manifest.string());

    PatchCorpus corpus;
    corpus.source = dir;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string filename;
        double angle;
        if (!(ss >> filename >> angle))
            throw ParseError(manifest.string() + ": malformed manifest line: " + line);
        PatchRecord rec;
        rec.patch = read_pgm((fs::path(dir) / filename).string());
        rec.angle = angle;
        double x, y;
        int octave;
        if (ss >> x >> y >> octave) {
            rec.has_pose = true;
            rec.position = {x, y};
            rec.octave = octave;
        }
        if (rec.patch.width != rec.patch.height)
            throw ParseError(manifest.string() + ": patch " + filename + " is not square");
        if (corpus.patch_size == 0)
            corpus.patch_size = rec.patch.width;
        else if (rec.patch.width != corpus.patch_size)
            throw ParseError(manifest.string() + ": patch " + filename + " has inconsistent size");
        corpus.patches.push_back(std::move(rec));
    }
    if (corpus.patches.empty()) throw ParseError(manifest.string() + ": empty corpus");
    return corpus;
}

TestSet enumerate_candidate_tests(int patch_size, bool apply_filters) {
    if (patch_size < 4 || patch_size % 2 != 0)
        throw DomainError("enumerate_candidate_tests: patch size must be even and >= 4");
    const int s = patch_size;
    const int lo = apply_filters ? 1 : 0;
    const int hi = apply_filters ? s - 2 : s - 1;
    const int dmin_sq = 9;  // segments of length <= 3 are dropped
    const int dmax = static_cast<int>(std::ceil(9.0 * s / 10.0));
    const int dmax_sq = dmax * dmax;  // segments of length >= ceil(9S/10) are dropped

    std::vector<std::pair<int, int>> pixels;
    for (int y = lo; y <= hi; ++y)
        for (int x = lo; x <= hi; ++x) pixels.emplace_back(x, y);

    TestSet q;
    q.patch_size = s;
    const int half = s / 2;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        for (std::size_t j = i + 1; j < pixels.size(); ++j) {
            if (apply_filters) {
                const int dx = pixels[i].first - pixels[j].first;
                const int dy = pixels[i].second - pixels[j].second;
                const int d2 = dx * dx + dy * dy;
                if (d2 <= dmin_sq || d2 >= dmax_sq) continue;
            }
            q.pairs.emplace_back(
                Vec2{static_cast<double>(pixels[i].first - half), static_cast<double>(pixels[i].second - half)},
                Vec2{static_cast<double>(pixels[j].first - half), static_cast<double>(pixels[j].second - half)});
        }
    }
    return q;
}

namespace {

// Sample one test on one patch: rotate by the patch orientation (optional),
// optionally push the endpoints through the camera model anchored at the
// patch's source keypoint, then compare bilinear intensities at the patch.
bool test_outcome_on_patch(const PatchRecord& rec, int patch_size, const Vec2& u1, const Vec2& u2,
                           const VarianceOptions& options) {
    const double angle = options.rotate_with_orientation ? rec.angle : 0.0;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double center = patch_size / 2.0;

    auto local_endpoint = [&](const Vec2& u) -> Vec2 {
        Vec2 r{u.x * c - u.y * s, u.x * s + u.y * c};
        if (options.distort_model != nullptr && rec.has_pose) {
            const CameraModel& model = *options.distort_model;
            const double oct = std::pow(options.scale_factor, static_cast<double>(rec.octave));
            const Vec2 np = normalized_plane_point(model, rec.position);
            const Vec2 m_u{model.lambda * np.x, model.lambda * np.y};
            const auto px =
                try_project(model, {m_u.x + r.x * oct, m_u.y + r.y * oct, model.lambda});
            if (px)
                r = {px->x - rec.position.x, px->y - rec.position.y};
            else
                r = {0.0, 0.0};
        }
        return {std::clamp(center + r.x, 0.0, patch_size - 1.0),
                std::clamp(center + r.y, 0.0, patch_size - 1.0)};
    };

    const Vec2 a = local_endpoint(u1);
    const Vec2 b = local_endpoint(u2);
    return sample_bilinear(rec.patch, a.x, a.y) < sample_bilinear(rec.patch, b.x, b.y);
}

}  // namespace

BitColumn test_outcomes(const PatchCorpus& corpus, const std::pair<Vec2, Vec2>& test,
                        const VarianceOptions& options) {
    BitColumn col = BitColumn::zeros(static_cast<int>(corpus.patches.size()));
    for (std::size_t p = 0; p < corpus.patches.size(); ++p) {
        if (test_outcome_on_patch(corpus.patches[p], corpus.patch_size, test.first, test.second,
                                  options))
            col.set(static_cast<int>(p));
    }
    return col;
}

std::vector<TestStats> compute_variances(const PatchCorpus& corpus, const TestSet& candidates,
                                         const VarianceOptions& options) {
    if (corpus.patches.empty()) throw DomainError("compute_variances: empty corpus");
    const std::size_t n = candidates.pairs.size();
    std::vector<TestStats> stats(n);
    const double P = static_cast<double>(corpus.patches.size());
    parallel_for(n, options.threads, [&](std::size_t d) {
        long ones = 0;
        for (const auto& rec : corpus.patches) {
            if (test_outcome_on_patch(rec, corpus.patch_size, candidates.pairs[d].first,
                                      candidates.pairs[d].second, options))
                ++ones;
        }
        const double alpha = static_cast<double>(ones) / P;
        stats[d] = {candidates.pairs[d], alpha, alpha * (1.0 - alpha)};
    });
    return stats;
}

LearnResult greedy_select(const std::vector<TestStats>& stats, const PatchCorpus& corpus,
                          int d_target, const VarianceOptions& options, double t_c_start,
                          bool keep_trace) {
    if (d_target < 1) throw DomainError("greedy_select: d_target must be >= 1");
    if (static_cast<int>(stats.size()) < d_target)
        throw DomainError("greedy_select: fewer candidates than d_target");

    // variance-descending order, ties by enumeration index
    std::vector<std::size_t> order(stats.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&stats](std::size_t a, std::size_t b) {
        return stats[a].variance > stats[b].variance;
    });

    LearnResult result;
    result.tests.patch_size = corpus.patch_size;
    std::vector<BitColumn> admitted_cols;
    std::vector<bool> taken(stats.size(), false);

    double t_c = t_c_start;
    int pass = 0;
    while (static_cast<int>(result.tests.pairs.size()) < d_target) {
        ++pass;
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            if (taken[rank]) continue;
            const TestStats& cand = stats[order[rank]];
            const BitColumn col = test_outcomes(corpus, cand.test, options);
            double max_corr = 0.0;
            for (const auto& ac : admitted_cols)
                max_corr = std::max(max_corr, correlation(col, ac));
            const bool admit = max_corr < t_c;
            if (keep_trace)
                result.trace.push_back({static_cast<int>(rank), pass, t_c, max_corr, admit});
            if (admit) {
                taken[rank] = true;
                admitted_cols.push_back(col);
                result.tests.pairs.push_back(cand.test);
                if (static_cast<int>(result.tests.pairs.size()) >= d_target) break;
            }
        }
        result.log.push_back({pass, t_c, static_cast<int>(result.tests.pairs.size())});
        if (static_cast<int>(result.tests.pairs.size()) >= d_target) break;
        t_c += 0.1;
        if (t_c > 1.0 + 1e-9) break;
    }
    result.final_tc = t_c;
    result.reached = static_cast<int>(result.tests.pairs.size()) >= d_target;
    return result;
}

MaskResult learn_mask(const GrayImage& smoothed, const Keypoint& kp, const TestSet& q,
                      const CameraModel& model, double rot_magnitude, std::uint64_t seed,
                      Variant variant, double scale_factor) {
    std::mt19937_64 rng(seed);
    auto uniform01 = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    const double half = rot_magnitude / 2.0;
    const double a1 = half + half * uniform01();
    const double a2 = half + half * uniform01();

    const double base = kp.angle;
    const BinaryDescriptor d0 =
        apply_tests(smoothed, project_tests(q, kp, model, base, scale_factor, variant));
    const BinaryDescriptor d1 =
        apply_tests(smoothed, project_tests(q, kp, model, base + a1, scale_factor, variant));
    const BinaryDescriptor d2 =
        apply_tests(smoothed, project_tests(q, kp, model, base - a2, scale_factor, variant));

    MaskResult res;
    res.mask.assign(d0.bits.size(), 0);
    for (std::size_t w = 0; w < d0.bits.size(); ++w)
        res.mask[w] = ~(d0.bits[w] ^ d1.bits[w]) & ~(d0.bits[w] ^ d2.bits[w]);
    if (d0.dim & 63) res.mask.back() &= (std::uint64_t{1} << (d0.dim & 63)) - 1;
    for (std::uint64_t w : res.mask) res.mask_ones += std::popcount(w);
    if (res.mask_ones == 0) {
        for (auto& w : res.mask) w = ~std::uint64_t{0};
        if (d0.dim & 63) res.mask.back() &= (std::uint64_t{1} << (d0.dim & 63)) - 1;
        res.mask_ones = d0.dim;
    }
    return res;
}

void write_learning_log(const std::vector<GreedyLogRow>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    out << "pass,t_c,admitted\n";
    for (const auto& row : log)
        out << row.pass << "," << format_real(row.t_c) << "," << row.admitted << "\n";
}

}  // namespace dbrief

#include "dbrief/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dbrief {

Homography make_homography(const Mat3& m) {
    if (std::abs(m.det()) <= 1e-12) throw DomainError("homography is singular");
    Homography h;
    h.H = m;
    const double w = m.m[2][2];
    if (w != 0.0) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) h.H.m[i][j] = m.m[i][j] / w;
    }
    return h;
}

Homography load_homography(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open homography file: " + path);
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (!(in >> m.m[i][j])) throw ParseError(path + ": expected 9 reals, row-major");
    try {
        return make_homography(m);
    } catch (const DomainError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void save_homography(const Homography& h, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) out << format_real(h.H.m[i][j]) << (j == 2 ? "" : " ");
        out << "\n";
    }
}

std::optional<int> GroundTruth::target_of(int source) const {
    for (const auto& [s, t] : correspondences)
        if (s == source) return t;
    return std::nullopt;
}

std::vector<ProjectedPoint> project_keypoints(const std::vector<Keypoint>& kps,
                                              const CameraModel& model, const Homography& h) {
    std::vector<ProjectedPoint> out(kps.size());
    for (std::size_t i = 0; i < kps.size(); ++i) {
        ProjectedPoint& pp = out[i];
        try {
            const Vec2 np = normalized_plane_point(model, {kps[i].x, kps[i].y});
            const Vec3 mapped = h.H * Vec3{np.x, np.y, 1.0};
            if (std::abs(mapped.z) < 1e-12) continue;
            const auto px = try_project(model, {mapped.x / mapped.z, mapped.y / mapped.z, 1.0});
            if (!px) continue;
            pp.pixel = *px;
            pp.valid = px->x >= 0.0 && px->y >= 0.0 && px->x <= model.width - 1.0 &&
                       px->y <= model.height - 1.0;
        } catch (const DomainError&) {
            pp.valid = false;
        }
    }
    return out;
}

GroundTruth build_ground_truth(const std::vector<Keypoint>& kps_i,
                               const std::vector<Keypoint>& kps_j, const CameraModel& model,
                               const Homography& h, double radius) {
    if (radius <= 0.0) throw DomainError("build_ground_truth: radius must be positive");
    GroundTruth gt;
    gt.radius = radius;
    const auto projected = project_keypoints(kps_i, model, h);

    struct Cand {
        double dist;
        int source;
        int target;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < projected.size(); ++i) {
        if (!projected[i].valid) continue;
        for (std::size_t j = 0; j < kps_j.size(); ++j) {
            const double dx = projected[i].pixel.x - kps_j[j].x;
            const double dy = projected[i].pixel.y - kps_j[j].y;
            const double d = std::sqrt(dx * dx + dy * dy);
            if (d <= radius) cands.push_back({d, static_cast<int>(i), static_cast<int>(j)});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.source != b.source) return a.source < b.source;
        return a.target < b.target;
    });
    std::vector<bool> source_used(kps_i.size(), false), target_used(kps_j.size(), false);
    for (const auto& c : cands) {
        if (source_used[static_cast<std::size_t>(c.source)] ||
            target_used[static_cast<std::size_t>(c.target)])
            continue;
        source_used[static_cast<std::size_t>(c.source)] = true;
        target_used[static_cast<std::size_t>(c.target)] = true;
        gt.correspondences.emplace_back(c.source, c.target);
    }
    std::sort(gt.correspondences.begin(), gt.correspondences.end());
    return gt;
}

namespace {

int count_true_matches(const std::vector<Match>& matches, const GroundTruth& gt) {
    int n = 0;
    for (const auto& m : matches) {
        const auto t = gt.target_of(m.index_i);
        if (t && *t == m.index_j) ++n;
    }
    return n;
}

}  // namespace

double recognition_rate(const std::vector<Match>& matches, const GroundTruth& gt,
                        RateDenominator denom, int n_sources) {
    int c = 0;
    if (denom == RateDenominator::GroundTruth) {
        c = static_cast<int>(gt.correspondences.size());
        if (c == 0) throw DomainError("recognition_rate: empty ground truth");
    } else {
        c = n_sources;
        if (c <= 0) throw DomainError("recognition_rate: n_sources must be positive");
    }
    return static_cast<double>(count_true_matches(matches, gt)) / c;
}

std::vector<PrPoint> pr_curve(const std::vector<BinaryDescriptor>& desc_i,
                              const std::vector<BinaryDescriptor>& desc_j, const GroundTruth& gt,
                              const std::vector<double>& thresholds, bool masked, int threads,
                              RateDenominator denom) {
    for (std::size_t k = 1; k < thresholds.size(); ++k)
        if (thresholds[k] < thresholds[k - 1])
            throw DomainError("pr_curve: thresholds must be ascending");
    const int n_gt = static_cast<int>(gt.correspondences.size());
    if (n_gt == 0) throw DomainError("pr_curve: empty ground truth");
    const int denom_count =
        denom == RateDenominator::GroundTruth ? n_gt : static_cast<int>(desc_i.size());

    // distances are threshold-independent; match once without threshold
    MatchOptions mo;
    mo.masked = masked;
    mo.threads = threads;
    const std::vector<Match> all = match_brute_force(desc_i, desc_j, mo);

    std::vector<int> gt_target(desc_i.size(), -1);
    for (const auto& [s, t] : gt.correspondences)
        if (s >= 0 && s < static_cast<int>(desc_i.size())) gt_target[static_cast<std::size_t>(s)] = t;

    std::vector<PrPoint> pr;
    for (double t : thresholds) {
        int n_matches = 0, n_true = 0;
        for (const auto& m : all) {
            if (m.distance > t) continue;
            ++n_matches;
            if (gt_target[static_cast<std::size_t>(m.index_i)] == m.index_j) ++n_true;
        }
        if (n_matches == 0) continue;
        PrPoint p;
        p.threshold = t;
        p.recall = static_cast<double>(n_true) / denom_count;
        p.one_minus_precision = 1.0 - static_cast<double>(n_true) / n_matches;
        pr.push_back(p);
    }
    return pr;
}

std::vector<PrPoint> mean_pr_curves(const std::vector<std::vector<PrPoint>>& curves) {
    if (curves.empty()) throw DomainError("mean_pr_curves: no curves");
    std::vector<PrPoint> mean;
    for (const auto& anchor : curves.front()) {
        double omp = 0.0, rec = 0.0;
        bool in_all = true;
        for (const auto& curve : curves) {
            bool found = false;
            for (const auto& p : curve) {
                if (p.threshold == anchor.threshold) {
                    omp += p.one_minus_precision;
                    rec += p.recall;
                    found = true;
                    break;
                }
            }
            if (!found) {
                in_all = false;
                break;
            }
        }
        if (in_all)
            mean.push_back({anchor.threshold, omp / curves.size(), rec / curves.size()});
    }
    return mean;
}

double bhattacharyya(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size() || p.empty()) throw DomainError("bhattacharyya: bin count mismatch");
    auto check_norm = [](const std::vector<double>& h) {
        double s = 0.0;
        for (double v : h) s += v;
        if (std::abs(s - 1.0) > 1e-9) throw DomainError("bhattacharyya: histogram not normalized");
    };
    check_norm(p);
    check_norm(q);
    double c = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) c += std::sqrt(p[i] * q[i]);
    return c;
}

DistanceHistograms distance_histograms(const std::vector<BinaryDescriptor>& desc_i,
                                       const std::vector<BinaryDescriptor>& desc_j,
                                       const GroundTruth& gt, bool masked) {
    if (gt.correspondences.empty()) throw DomainError("distance_histograms: empty ground truth");
    if (desc_i.empty() || desc_j.empty())
        throw DomainError("distance_histograms: empty descriptor sets");

    const int dim = desc_i.front().dim;
    DistanceHistograms h;
    int n_bins;
    if (masked) {
        // same bin count as the plain histograms; a coarser grid would bias
        // Bhattacharyya comparisons across the two distance types
        n_bins = dim + 1;
        h.bin_width = 2.0 / n_bins;
    } else {
        n_bins = dim + 1;
        h.bin_width = 1.0;
    }
    std::vector<long> match_counts(static_cast<std::size_t>(n_bins), 0);
    std::vector<long> non_counts(static_cast<std::size_t>(n_bins), 0);

    std::vector<int> gt_target(desc_i.size(), -1);
    for (const auto& [s, t] : gt.correspondences) gt_target[static_cast<std::size_t>(s)] = t;

    auto bin_of = [&](double d) {
        int b = masked ? static_cast<int>(d / h.bin_width) : static_cast<int>(d);
        return std::clamp(b, 0, n_bins - 1);
    };

    for (std::size_t i = 0; i < desc_i.size(); ++i) {
        for (std::size_t j = 0; j < desc_j.size(); ++j) {
            const double d = masked ? masked_hamming(desc_i[i], desc_j[j])
                                    : static_cast<double>(hamming(desc_i[i], desc_j[j]));
            if (gt_target[i] == static_cast<int>(j))
                ++match_counts[static_cast<std::size_t>(bin_of(d))];
            else
                ++non_counts[static_cast<std::size_t>(bin_of(d))];
        }
    }

    auto normalize = [n_bins](const std::vector<long>& counts) {
        long total = 0;
        for (long c : counts) total += c;
        std::vector<double> out(static_cast<std::size_t>(n_bins), 0.0);
        if (total > 0)
            for (int b = 0; b < n_bins; ++b)
                out[static_cast<std::size_t>(b)] =
                    static_cast<double>(counts[static_cast<std::size_t>(b)]) / total;
        return out;
    };
    h.matching = normalize(match_counts);
    h.nonmatching = normalize(non_counts);
    return h;
}

void write_pr_csv(const std::vector<PrPoint>& pr, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    out << "threshold,one_minus_precision,recall\n";
    for (const auto& p : pr)
        out << format_real(p.threshold) << "," << format_real(p.one_minus_precision) << ","
            << format_real(p.recall) << "\n";
}

void write_histogram_csv(const DistanceHistograms& h, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    out << "bin,matching_freq,nonmatching_freq\n";
    for (std::size_t b = 0; b < h.matching.size(); ++b)
        out << format_real(b * h.bin_width) << "," << format_real(h.matching[b]) << ","
            << format_real(h.nonmatching[b]) << "\n";
    out << "# bhattacharyya = " << format_real(bhattacharyya(h.matching, h.nonmatching)) << "\n";
}

}  // namespace dbrief

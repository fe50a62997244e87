#include "dbrief/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "dbrief/learning.hpp"
#include "dbrief/matching.hpp"

namespace dbrief {

void validate_pose(const CameraPose& pose) {
    const Mat3 rtr = pose.rotation.transposed() * pose.rotation;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double want = i == j ? 1.0 : 0.0;
            if (std::abs(rtr.m[i][j] - want) > 1e-9)
                throw DomainError("pose rotation is not orthonormal");
        }
    if (std::abs(pose.rotation.det() - 1.0) > 1e-9)
        throw DomainError("pose rotation must have determinant +1");
}

SimVariantSpec parse_variant(const std::string& name) {
    if (name == "brief") return {name, Variant::Brief, false};
    if (name == "dbrief") return {name, Variant::DBrief, false};
    if (name == "mbrief") return {name, Variant::Brief, true};
    if (name == "mdbrief") return {name, Variant::DBrief, true};
    throw ParseError("unknown descriptor variant: " + name);
}

SimConfig load_sim_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open simulation config: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(path + ": expected `key = value`: " + line);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        if (kv.count(key)) throw ParseError(path + ": duplicate key: " + key);
        kv[key] = trim(line.substr(eq + 1));
    }

    SimConfig cfg;
    auto take = [&kv, &path](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(path + ": missing required key: " + key);
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto take_opt = [&kv](const std::string& key, const std::string& def) {
        auto it = kv.find(key);
        if (it == kv.end()) return def;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto as_reals = [&path](const std::string& s, const std::string& key, std::size_t n) {
        std::istringstream ss(s);
        std::vector<double> vals;
        double v;
        while (ss >> v) vals.push_back(v);
        if (vals.size() != n)
            throw ParseError(path + ": key " + key + " needs " + std::to_string(n) + " values");
        return vals;
    };

    // relative file references resolve against the config's own directory
    const auto resolve = [&path](const std::string& p) {
        if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
        return (std::filesystem::path(path).parent_path() / p).string();
    };
    cfg.calib_path = resolve(take("calib"));
    cfg.texture_path = resolve(take("texture"));
    cfg.texture_scale = as_reals(take_opt("texture_scale", "1"), "texture_scale", 1)[0];
    cfg.height = as_reals(take_opt("height", "150"), "height", 1)[0];
    const auto st = as_reals(take_opt("start", "330 512"), "start", 2);
    cfg.start = {st[0], st[1]};
    cfg.step_x = as_reals(take_opt("step_x", "12"), "step_x", 1)[0];
    cfg.n_views = static_cast<int>(as_reals(take_opt("n_views", "10"), "n_views", 1)[0]);
    cfg.n_points = static_cast<int>(as_reals(take_opt("n_points", "200"), "n_points", 1)[0]);
    const std::string evo = take_opt("evolution_point", "");
    if (!evo.empty()) {
        const auto ep = as_reals(evo, "evolution_point", 2);
        cfg.evolution_point = {ep[0], ep[1]};
    }
    const std::string vars = take_opt("variants", "brief,dbrief,mbrief,mdbrief");
    std::stringstream vs(vars);
    std::string item;
    while (std::getline(vs, item, ',')) {
        if (!item.empty()) cfg.variants.push_back(parse_variant(item));
    }
    if (cfg.variants.empty()) throw ParseError(path + ": no variants configured");
    cfg.seed = static_cast<std::uint64_t>(as_reals(take_opt("seed", "1"), "seed", 1)[0]);
    cfg.dim = static_cast<int>(as_reals(take_opt("D", "256"), "D", 1)[0]);
    cfg.patch_size = static_cast<int>(as_reals(take_opt("patch_size", "32"), "patch_size", 1)[0]);
    cfg.sigma = as_reals(take_opt("sigma", "2"), "sigma", 1)[0];
    cfg.rot_magnitude = as_reals(take_opt("rot_magnitude", "0.2094"), "rot_magnitude", 1)[0];
    cfg.tests_path = resolve(take_opt("tests", ""));
    cfg.experiment = take_opt("experiment", "both");
    if (cfg.experiment != "evolution" && cfg.experiment != "recognition" && cfg.experiment != "both")
        throw ParseError(path + ": experiment must be evolution, recognition or both");
    cfg.detect_threshold = as_reals(take_opt("detect_threshold", "20"), "detect_threshold", 1)[0];
    cfg.detect_arc = static_cast<int>(as_reals(take_opt("detect_arc", "9"), "detect_arc", 1)[0]);
    cfg.margin = static_cast<int>(as_reals(take_opt("margin", "25"), "margin", 1)[0]);
    if (!kv.empty()) throw ParseError(path + ": unknown key: " + kv.begin()->first);
    if (cfg.n_views < 1 || cfg.n_points < 1 || cfg.dim < 1)
        throw ParseError(path + ": n_views, n_points and D must be positive");
    return cfg;
}

namespace {

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double gaussian01(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * uniform01(rng));
}

// smooth multi-octave value noise in [0,1]
std::vector<double> value_noise(int w, int h, std::mt19937_64& rng, const std::vector<int>& cells) {
    std::vector<double> img(static_cast<std::size_t>(w) * h, 0.0);
    for (int cell : cells) {
        const int gw = w / cell + 2;
        const int gh = h / cell + 2;
        std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
        for (auto& g : grid) g = uniform01(rng);
        for (int y = 0; y < h; ++y) {
            const double fy = static_cast<double>(y) / cell;
            const int y0 = static_cast<int>(fy);
            const double ty = fy - y0;
            const double sy = ty * ty * (3.0 - 2.0 * ty);
            for (int x = 0; x < w; ++x) {
                const double fx = static_cast<double>(x) / cell;
                const int x0 = static_cast<int>(fx);
                const double tx = fx - x0;
                const double sx = tx * tx * (3.0 - 2.0 * tx);
                const double a = grid[static_cast<std::size_t>(y0) * gw + x0];
                const double b = grid[static_cast<std::size_t>(y0) * gw + x0 + 1];
                const double c = grid[static_cast<std::size_t>(y0 + 1) * gw + x0];
                const double d = grid[static_cast<std::size_t>(y0 + 1) * gw + x0 + 1];
                img[static_cast<std::size_t>(y) * w + x] +=
                    (a * (1 - sx) * (1 - sy) + b * sx * (1 - sy) + c * (1 - sx) * sy + d * sx * sy) *
                    cell;
            }
        }
    }
    double lo = img[0], hi = img[0];
    for (double v : img) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo > 0 ? hi - lo : 1.0;
    for (auto& v : img) v = (v - lo) / span;
    return img;
}

void draw_shapes(std::vector<double>& img, int w, int h, std::mt19937_64& rng, int n, double rmin,
                 double rmax, int levels, double soft) {
    for (int k = 0; k < n; ++k) {
        const double cx = uniform01(rng) * w;
        const double cy = uniform01(rng) * h;
        const double rx = rmin + uniform01(rng) * (rmax - rmin);
        const double ry = rmin + uniform01(rng) * (rmax - rmin);
        const double ang = uniform01(rng) * M_PI;
        const double val = static_cast<double>(rng() % static_cast<std::uint64_t>(levels)) / (levels - 1);
        const bool rect = uniform01(rng) < 0.5;
        const double ca = std::cos(ang), sa = std::sin(ang);
        const int x_lo = std::max(0, static_cast<int>(cx - rx - ry));
        const int x_hi = std::min(w, static_cast<int>(cx + rx + ry) + 1);
        const int y_lo = std::max(0, static_cast<int>(cy - ry - rx));
        const int y_hi = std::min(h, static_cast<int>(cy + ry + rx) + 1);
        for (int y = y_lo; y < y_hi; ++y) {
            for (int x = x_lo; x < x_hi; ++x) {
                const double u = (x - cx) * ca + (y - cy) * sa;
                const double v = -(x - cx) * sa + (y - cy) * ca;
                const bool inside = rect ? std::max(std::abs(u / rx), std::abs(v / ry)) <= 1.0
                                         : (u / rx) * (u / rx) + (v / ry) * (v / ry) <= 1.0;
                if (inside) {
                    double& px = img[static_cast<std::size_t>(y) * w + x];
                    px = soft * px + (1.0 - soft) * val;
                }
            }
        }
    }
}

}  // namespace

GrayImage make_test_texture(int width, int height, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> img = value_noise(width, height, rng, {64, 32, 16, 8});
    for (auto& v : img) v *= 0.55;

    // motif bank: a handful of textured tiles stamped many times with
    // photometric jitter and a few solid per-instance marks
    const int kMotifSize = 56;
    const int kMotifs = 6;
    const int kStamps = 340;
    const double kJitter = 0.10;
    std::vector<std::vector<double>> motifs;
    for (int m = 0; m < kMotifs; ++m) {
        std::vector<double> tile = value_noise(kMotifSize, kMotifSize, rng, {16, 8});
        for (auto& v : tile) v *= 0.6;
        draw_shapes(tile, kMotifSize, kMotifSize, rng, 9, 4.0, 16.0, 5, 0.15);
        motifs.push_back(std::move(tile));
    }
    for (int s = 0; s < kStamps; ++s) {
        const auto& motif = motifs[rng() % kMotifs];
        const int x0 = static_cast<int>(rng() % static_cast<std::uint64_t>(width - kMotifSize));
        const int y0 = static_cast<int>(rng() % static_cast<std::uint64_t>(height - kMotifSize));
        const double gain = 1.0 + (uniform01(rng) * 2.0 - 1.0) * kJitter;
        const double bias = (uniform01(rng) * 2.0 - 1.0) * kJitter / 2.0;
        std::vector<double> inst(motif.size());
        for (std::size_t i = 0; i < motif.size(); ++i)
            inst[i] = std::clamp(motif[i] * gain + bias, 0.0, 1.0);
        draw_shapes(inst, kMotifSize, kMotifSize, rng, 4, 3.0, 8.0, 3, 0.0);
        for (int y = 0; y < kMotifSize; ++y)
            for (int x = 0; x < kMotifSize; ++x)
                img[static_cast<std::size_t>(y0 + y) * width + (x0 + x)] =
                    inst[static_cast<std::size_t>(y) * kMotifSize + x];
    }
    for (auto& v : img) v += gaussian01(rng) * 0.01;

    GrayImage out(width, height);
    for (std::size_t i = 0; i < img.size(); ++i)
        out.data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(img[i] * 255.0), 0L, 255L));
    return out;
}

GrayImage render_view(const SimSequence& seq, int pose_index, int threads) {
    if (pose_index < 0 || pose_index >= static_cast<int>(seq.poses.size()))
        throw DomainError("render_view: pose index out of range");
    const CameraPose& pose = seq.poses[static_cast<std::size_t>(pose_index)];
    if (std::abs(pose.translation.z) < 1e-9)
        throw DomainError("render_view: camera lies in the texture plane");

    const int w = seq.model.width;
    const int h = seq.model.height;
    GrayImage out(w, h);
    const double ts = seq.texture_scale;

    parallel_for(static_cast<std::size_t>(h), threads, [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < w; ++x) {
            const BearingVector bv =
                unproject(seq.model, {static_cast<double>(x), static_cast<double>(y)});
            const Vec3 d = pose.rotation * bv.v;
            double value = 0.0;
            if (std::abs(d.z) > 1e-12) {
                const double tau = -pose.translation.z / d.z;
                if (tau > 0.0) {
                    const double wx = pose.translation.x + tau * d.x;
                    const double wy = pose.translation.y + tau * d.y;
                    const double tx = wx / ts;
                    const double ty = wy / ts;
                    if (tx >= 0.0 && ty >= 0.0 && tx <= seq.texture.width - 1.0 &&
                        ty <= seq.texture.height - 1.0)
                        value = sample_bilinear(seq.texture, tx, ty);
                }
            }
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
        }
    });
    return out;
}

std::vector<std::vector<TrackedPoint>> track_points(const SimSequence& seq,
                                                    const std::vector<Vec3>& world_points) {
    std::vector<std::vector<TrackedPoint>> tracks(
        seq.poses.size(), std::vector<TrackedPoint>(world_points.size()));
    for (std::size_t v = 0; v < seq.poses.size(); ++v) {
        const CameraPose& pose = seq.poses[v];
        const Mat3 rt = pose.rotation.transposed();
        for (std::size_t p = 0; p < world_points.size(); ++p) {
            const Vec3 cam = rt * (world_points[p] - pose.translation);
            const auto px = try_project(seq.model, cam);
            TrackedPoint& tp = tracks[v][p];
            if (px) {
                tp.pixel = *px;
                tp.visible = px->x >= 0.0 && px->y >= 0.0 && px->x <= seq.model.width - 1.0 &&
                             px->y <= seq.model.height - 1.0;
            }
        }
    }
    return tracks;
}

SimSequence build_sequence(const SimConfig& cfg) {
    SimSequence seq;
    seq.model = load_camera(cfg.calib_path);
    seq.texture = read_pgm(cfg.texture_path);
    seq.texture_scale = cfg.texture_scale;
    for (int k = 0; k < cfg.n_views; ++k) {
        CameraPose pose;
        pose.rotation = Mat3::identity();
        pose.translation = {cfg.start.x + k * cfg.step_x, cfg.start.y, -cfg.height};
        validate_pose(pose);
        // the principal ray must hit the plane in front of the camera
        const BearingVector axis =
            unproject(seq.model, seq.model.principal_point);
        const Vec3 d = pose.rotation * axis.v;
        if (std::abs(d.z) < 1e-12 || -pose.translation.z / d.z <= 0.0)
            throw DomainError("build_sequence: pose " + std::to_string(k) +
                              " does not see the texture plane");
        seq.poses.push_back(pose);
    }
    return seq;
}

namespace {

TestSet sim_test_set(const SimConfig& cfg) {
    if (!cfg.tests_path.empty()) {
        TestSet q = read_test_set(cfg.tests_path);
        if (q.dim() < cfg.dim)
            throw ParseError("test-set file provides " + std::to_string(q.dim()) +
                             " tests, config asks for D = " + std::to_string(cfg.dim));
        q.pairs.resize(static_cast<std::size_t>(cfg.dim));
        return q;
    }
    return random_test_set(cfg.dim, cfg.patch_size, cfg.seed);
}

// single-keypoint descriptor with the experiment's conventions (orientation 0)
BinaryDescriptor describe_at(const GrayImage& smoothed, const Vec2& pixel,
                             const CameraModel& model, const TestSet& q,
                             const SimVariantSpec& variant, const SimConfig& cfg,
                             std::uint64_t point_index) {
    Keypoint kp;
    kp.x = pixel.x;
    kp.y = pixel.y;
    kp.angle = 0.0;
    kp.octave = 0;
    BinaryDescriptor d =
        apply_tests(smoothed, project_tests(q, kp, model, 0.0, 1.2, variant.kind));
    if (variant.masked) {
        const MaskResult m = learn_mask(smoothed, kp, q, model, cfg.rot_magnitude,
                                        cfg.seed ^ point_index, variant.kind);
        d.mask = m.mask;
        d.mask_ones = m.mask_ones;
    }
    return d;
}

Vec3 pixel_to_plane(const SimSequence& seq, const CameraPose& pose, const Vec2& pixel) {
    const BearingVector bv = unproject(seq.model, pixel);
    const Vec3 d = pose.rotation * bv.v;
    if (std::abs(d.z) < 1e-12) throw DomainError("ray parallel to the texture plane");
    const double tau = -pose.translation.z / d.z;
    if (tau <= 0.0) throw DomainError("ray does not hit the texture plane");
    return pose.translation + d * tau;
}

}  // namespace

EvolutionResult hamming_evolution(const SimSequence& seq, const SimConfig& cfg) {
    EvolutionResult res;
    for (const auto& v : cfg.variants) res.variant_names.push_back(v.name);

    Vec2 start_pixel = cfg.evolution_point;
    if (start_pixel.x < 0.0)
        start_pixel = {seq.model.width / 2.0, seq.model.height / 2.0};

    const Vec3 world = pixel_to_plane(seq, seq.poses.front(), start_pixel);
    const auto tracks = track_points(seq, {world});
    const TestSet q = sim_test_set(cfg);

    std::vector<BinaryDescriptor> first(cfg.variants.size());
    for (std::size_t view = 0; view < seq.poses.size(); ++view) {
        if (!tracks[view][0].visible)
            throw DomainError("hamming_evolution: tracked point left the image at view " +
                              std::to_string(view));
        const GrayImage img = render_view(seq, static_cast<int>(view), cfg.threads);
        const GrayImage smoothed = gaussian_smooth(img, cfg.sigma);
        EvolutionRow row;
        row.view = static_cast<int>(view);
        for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
            const BinaryDescriptor d = describe_at(smoothed, tracks[view][0].pixel, seq.model, q,
                                                   cfg.variants[vi], cfg, 0);
            if (view == 0) first[vi] = d;
            double dist;
            if (cfg.variants[vi].masked)
                dist = masked_hamming(first[vi], d) * cfg.dim / 2.0;  // bit-equivalent scale
            else
                dist = hamming(first[vi], d);
            row.distances.push_back(dist);
        }
        res.rows.push_back(std::move(row));
    }
    return res;
}

RecognitionResult run_recognition_experiment(const SimSequence& seq, const SimConfig& cfg,
                                             const std::string& hist_dir) {
    RecognitionResult res;
    for (const auto& v : cfg.variants) res.variant_names.push_back(v.name);
    res.n_points = cfg.n_points;

    // detect once in view 0, then track geometrically
    const GrayImage view0 = render_view(seq, 0, cfg.threads);
    DetectorParams dp;
    dp.threshold = cfg.detect_threshold;
    dp.n_contiguous = cfg.detect_arc;
    dp.n_levels = 1;
    dp.n_target = std::max(cfg.n_points * 8, 1000);
    dp.border_margin = cfg.margin;
    dp.threads = cfg.threads;
    Pyramid pyr;
    pyr.levels.push_back(view0);
    pyr.scale_factor = 1.2;
    const std::vector<Keypoint> detected = detect_multiscale(pyr, dp);

    std::vector<Vec3> world;
    for (const auto& kp : detected) {
        Vec3 w;
        try {
            w = pixel_to_plane(seq, seq.poses.front(), {kp.x, kp.y});
        } catch (const DomainError&) {
            continue;
        }
        world.push_back(w);
    }
    auto all_tracks = track_points(seq, world);

    // keep the first n_points that stay inside the margin in every view
    std::vector<std::size_t> keep;
    for (std::size_t p = 0; p < world.size() && keep.size() < static_cast<std::size_t>(cfg.n_points); ++p) {
        bool ok = true;
        for (std::size_t v = 0; v < seq.poses.size() && ok; ++v) {
            const TrackedPoint& tp = all_tracks[v][p];
            ok = tp.visible && tp.pixel.x >= cfg.margin && tp.pixel.y >= cfg.margin &&
                 tp.pixel.x < seq.model.width - cfg.margin &&
                 tp.pixel.y < seq.model.height - cfg.margin;
        }
        if (ok) keep.push_back(p);
    }
    if (keep.size() < static_cast<std::size_t>(cfg.n_points))
        throw DomainError("run_recognition_experiment: only " + std::to_string(keep.size()) +
                          " keypoints stay visible across the sequence (need " +
                          std::to_string(cfg.n_points) + ")");

    const TestSet q = sim_test_set(cfg);
    const std::size_t n = keep.size();

    auto extract_view = [&](std::size_t view) {
        const GrayImage img = view == 0 ? view0 : render_view(seq, static_cast<int>(view), cfg.threads);
        const GrayImage smoothed = gaussian_smooth(img, cfg.sigma);
        std::vector<std::vector<BinaryDescriptor>> per_variant(cfg.variants.size(),
                                                               std::vector<BinaryDescriptor>(n));
        parallel_for(n, cfg.threads, [&](std::size_t pi) {
            const Vec2 px = all_tracks[view][keep[pi]].pixel;
            for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi)
                per_variant[vi][pi] =
                    describe_at(smoothed, px, seq.model, q, cfg.variants[vi], cfg, pi);
        });
        return per_variant;
    };

    const auto ref = extract_view(0);
    for (std::size_t view = 0; view < seq.poses.size(); ++view) {
        const auto cur = view == 0 ? ref : extract_view(view);
        std::vector<double> rates, cbas;
        for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
            MatchOptions mo;
            mo.masked = cfg.variants[vi].masked;
            mo.threads = cfg.threads;
            const auto matches = match_brute_force(cur[vi], ref[vi], mo);
            int correct = 0;
            for (const auto& m : matches)
                if (m.index_i == m.index_j) ++correct;
            rates.push_back(static_cast<double>(correct) / static_cast<double>(n));

            GroundTruth gt;
            for (std::size_t pi = 0; pi < n; ++pi)
                gt.correspondences.emplace_back(static_cast<int>(pi), static_cast<int>(pi));
            const DistanceHistograms hist =
                distance_histograms(cur[vi], ref[vi], gt, cfg.variants[vi].masked);
            cbas.push_back(bhattacharyya(hist.matching, hist.nonmatching));
            if (!hist_dir.empty()) {
                const std::string path = hist_dir + "/hist_" + cfg.variants[vi].name + "_pair_0_" +
                                         std::to_string(view) + ".csv";
                write_histogram_csv(hist, path);
            }
        }
        res.rates.push_back(std::move(rates));
        res.bhattacharyya.push_back(std::move(cbas));
    }
    return res;
}

void run_simulation(const SimConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const SimSequence seq = build_sequence(cfg);

    if (cfg.experiment == "evolution" || cfg.experiment == "both") {
        const EvolutionResult evo = hamming_evolution(seq, cfg);
        std::ofstream out(out_dir + "/evolution.csv");
        if (!out) throw ParseError("cannot write evolution CSV in " + out_dir);
        out << "view";
        for (const auto& name : evo.variant_names) out << "," << name;
        out << "\n";
        for (const auto& row : evo.rows) {
            out << row.view;
            for (double d : row.distances) out << "," << format_real(d);
            out << "\n";
        }
    }
    if (cfg.experiment == "recognition" || cfg.experiment == "both") {
        const RecognitionResult rec = run_recognition_experiment(seq, cfg, out_dir);
        std::ofstream out(out_dir + "/rates.csv");
        if (!out) throw ParseError("cannot write rates CSV in " + out_dir);
        out << "view";
        for (const auto& name : rec.variant_names) out << "," << name;
        out << "\n";
        for (std::size_t v = 0; v < rec.rates.size(); ++v) {
            out << v;
            for (double r : rec.rates[v]) out << "," << format_real(r);
            out << "\n";
        }
        std::ofstream outc(out_dir + "/bhattacharyya.csv");
        outc << "view";
        for (const auto& name : rec.variant_names) outc << "," << name;
        outc << "\n";
        for (std::size_t v = 0; v < rec.bhattacharyya.size(); ++v) {
            outc << v;
            for (double c : rec.bhattacharyya[v]) outc << "," << format_real(c);
            outc << "\n";
        }
    }
}

}  // namespace dbrief

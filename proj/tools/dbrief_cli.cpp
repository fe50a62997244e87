// Command-line frontend: detect, learn-tests, extract, match, evaluate,
// simulate. Every command parses all referenced inputs before computing
// anything and is a pure function of (inputs, flags, seed).
//
// Exit codes: 0 success, 1 usage error, 2 input parse error, 3 runtime or
// model-domain error.

#include <chrono>
#include <iostream>
#include <limits>

#include "CLI11.hpp"
#include "dbrief/camera.hpp"
#include "dbrief/descriptor.hpp"
#include "dbrief/detector.hpp"
#include "dbrief/evaluation.hpp"
#include "dbrief/image.hpp"
#include "dbrief/learning.hpp"
#include "dbrief/matching.hpp"
#include "dbrief/simulation.hpp"

using namespace dbrief;

namespace {

using Clock = std::chrono::steady_clock;

long micros_since(Clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start).count();
}

struct DetectArgs {
    std::string image, out;
    int n_target = 500;
    double threshold = 20.0;
    int arc = 9;
    int levels = 4;
    double scale_factor = 1.2;
    int margin = 17;
    int threads = default_thread_count();
};

int cmd_detect(const DetectArgs& a) {
    const GrayImage img = read_pgm(a.image);
    const Pyramid pyr = build_pyramid(img, a.levels, a.scale_factor);
    DetectorParams params;
    params.threshold = a.threshold;
    params.n_contiguous = a.arc;
    params.n_target = a.n_target;
    params.border_margin = a.margin;
    params.threads = a.threads;
    const auto kps = detect_multiscale(pyr, params);
    write_keypoints(kps, a.out);
    return 0;
}

struct LearnArgs {
    std::string corpus, out, log, calib;
    int dim = 256;
    int patch_size = 32;
    bool no_rotate = false;
    bool distorted = false;
    double tc_start = 0.2;
    std::uint64_t seed = 0;
    int threads = default_thread_count();
};

int cmd_learn_tests(const LearnArgs& a) {
    const PatchCorpus corpus = load_corpus(a.corpus);
    CameraModel model;
    if (a.distorted) {
        if (a.calib.empty()) throw ParseError("--distorted requires --calib");
        model = load_camera(a.calib);
    }
    if (corpus.patch_size != a.patch_size)
        throw ParseError("corpus patch size " + std::to_string(corpus.patch_size) +
                         " does not match --patch-size " + std::to_string(a.patch_size));

    const TestSet candidates = enumerate_candidate_tests(a.patch_size, true);
    VarianceOptions vo;
    vo.rotate_with_orientation = !a.no_rotate;
    vo.distort_model = a.distorted ? &model : nullptr;
    vo.threads = a.threads;
    const auto stats = compute_variances(corpus, candidates, vo);
    const LearnResult res = greedy_select(stats, corpus, a.dim, vo, a.tc_start);
    if (!a.log.empty()) write_learning_log(res.log, a.log);
    if (!res.reached) {
        std::cerr << "learn-tests: target " << a.dim << " not reachable, achieved "
                  << res.tests.dim() << " tests\n";
        return 3;
    }
    write_test_set(res.tests, a.out);
    return 0;
}

struct ExtractArgs {
    std::string image, keypoints, tests, calib, out, variant = "dbrief";
    bool no_orientation = false;
    double sigma = 2.0;
    double rot_magnitude = 0.2094;
    double scale_factor = 1.2;
    std::uint64_t seed = 0;
    int threads = default_thread_count();
    bool timing = false;
};

int cmd_extract(const ExtractArgs& a) {
    const auto t0 = Clock::now();
    const GrayImage img = read_pgm(a.image);
    const auto kps = read_keypoints(a.keypoints);
    const TestSet q = read_test_set(a.tests);
    const CameraModel model = load_camera(a.calib);
    const long t_load = micros_since(t0);

    ExtractOptions opt;
    if (a.variant == "brief")
        opt.variant = Variant::Brief;
    else if (a.variant == "dbrief")
        opt.variant = Variant::DBrief;
    else if (a.variant == "mdbrief") {
        opt.variant = Variant::DBrief;
        opt.learn_mask = true;
    } else {
        throw ParseError("unknown --variant: " + a.variant + " (brief|dbrief|mdbrief)");
    }
    opt.use_orientation = !a.no_orientation;
    opt.smooth_sigma = a.sigma;
    opt.rot_magnitude = a.rot_magnitude;
    opt.scale_factor = a.scale_factor;
    opt.seed = a.seed;
    opt.threads = a.threads;

    const auto t1 = Clock::now();
    const ExtractResult res = extract(img, kps, q, model, opt);
    const long t_desc = micros_since(t1);

    if (!res.skipped.empty())
        std::cerr << "extract: skipped " << res.skipped.size()
                  << " keypoints outside the model domain\n";

    const auto t2 = Clock::now();
    write_descriptors(res.keypoints, res.descriptors, a.out);
    const long t_write = micros_since(t2);

    if (a.timing) {
        const double per_kp =
            res.keypoints.empty() ? 0.0 : static_cast<double>(t_desc) / res.keypoints.size();
        std::cerr << "stage,micros\n"
                  << "load," << t_load << "\n"
                  << "description," << t_desc << "\n"
                  << "description_per_keypoint," << per_kp << "\n"
                  << "write," << t_write << "\n"
                  << "total," << micros_since(t0) << "\n";
    }
    return 0;
}

struct MatchArgs {
    std::string desc_a, desc_b, out;
    bool masked = false;
    bool cross_check = false;
    double threshold = std::numeric_limits<double>::infinity();
    int threads = default_thread_count();
    bool timing = false;
};

int cmd_match(const MatchArgs& a) {
    std::vector<Keypoint> ka, kb;
    std::vector<BinaryDescriptor> da, db;
    read_descriptors(a.desc_a, ka, da);
    read_descriptors(a.desc_b, kb, db);
    MatchOptions opt;
    opt.masked = a.masked;
    opt.cross_check = a.cross_check;
    opt.threshold = a.threshold;
    opt.threads = a.threads;
    const auto t0 = Clock::now();
    const auto matches = match_brute_force(da, db, opt);
    const long t_match = micros_since(t0);
    write_matches(matches, a.out);
    if (a.timing)
        std::cerr << "stage,micros\nmatching," << t_match << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string desc_a, desc_b, homography, calib, out, hist;
    double radius = 3.0;
    double threshold_max = -1.0;  // default: full range
    bool masked = false;
    std::string denominator = "gt";
    int threads = default_thread_count();
};

int cmd_evaluate(const EvaluateArgs& a) {
    std::vector<Keypoint> ka, kb;
    std::vector<BinaryDescriptor> da, db;
    read_descriptors(a.desc_a, ka, da);
    read_descriptors(a.desc_b, kb, db);
    const Homography h = load_homography(a.homography);
    const CameraModel model = load_camera(a.calib);
    if (a.denominator != "gt" && a.denominator != "all")
        throw ParseError("--denominator must be `gt` or `all`");
    if (da.empty() || db.empty()) throw DomainError("evaluate: empty descriptor files");

    const GroundTruth gt = build_ground_truth(ka, kb, model, h, a.radius);
    const int dim = da.front().dim;

    // masked thresholds advance in units of 2/D so the sweep aligns with the
    // one-bit steps of the plain Hamming sweep
    std::vector<double> thresholds;
    if (a.masked) {
        const double unit = 2.0 / dim;
        const double tmax = a.threshold_max < 0.0 ? 2.0 : a.threshold_max;
        for (double t = 0.0; t <= tmax + 1e-12; t += unit) thresholds.push_back(t);
    } else {
        const double tmax = a.threshold_max < 0.0 ? dim : a.threshold_max;
        for (double t = 0.0; t <= tmax; t += 1.0) thresholds.push_back(t);
    }

    const RateDenominator denom =
        a.denominator == "gt" ? RateDenominator::GroundTruth : RateDenominator::AllSources;
    const auto pr = pr_curve(da, db, gt, thresholds, a.masked, a.threads, denom);
    write_pr_csv(pr, a.out);

    if (!a.hist.empty()) {
        const DistanceHistograms hist = distance_histograms(da, db, gt, a.masked);
        write_histogram_csv(hist, a.hist);
    }
    return 0;
}

struct SimulateArgs {
    std::string config, out;
    int threads = default_thread_count();
    bool timing = false;
};

int cmd_simulate(const SimulateArgs& a) {
    const auto t0 = Clock::now();
    SimConfig cfg = load_sim_config(a.config);
    cfg.threads = a.threads;
    run_simulation(cfg, a.out);
    if (a.timing) std::cerr << "stage,micros\nsimulate," << micros_since(t0) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distortion-aware binary descriptors for calibrated wide-angle cameras"};
    app.require_subcommand(1);

    DetectArgs det;
    auto* cdet = app.add_subcommand("detect", "detect oriented corners and write a keypoint file");
    cdet->add_option("--image", det.image, "input PGM image")->required();
    cdet->add_option("--out", det.out, "output keypoint file")->required();
    cdet->add_option("--n", det.n_target, "number of keypoints to keep");
    cdet->add_option("--threshold", det.threshold, "segment-test intensity threshold");
    cdet->add_option("--arc", det.arc, "contiguous arc length (9..12)");
    cdet->add_option("--levels", det.levels, "pyramid levels");
    cdet->add_option("--scale-factor", det.scale_factor, "pyramid scale factor");
    cdet->add_option("--margin", det.margin, "border margin per level, pixels");
    cdet->add_option("--threads", det.threads, "worker threads")->envname("DBRIEF_THREADS");

    LearnArgs lrn;
    auto* clrn = app.add_subcommand("learn-tests", "learn a low-correlation test set offline");
    clrn->add_option("--corpus", lrn.corpus, "patch corpus directory with manifest.txt")->required();
    clrn->add_option("--out", lrn.out, "output test-set file")->required();
    clrn->add_option("--log", lrn.log, "learning log CSV");
    clrn->add_option("--dim", lrn.dim, "target number of tests");
    clrn->add_option("--patch-size", lrn.patch_size, "patch size S");
    clrn->add_flag("--no-rotate", lrn.no_rotate, "do not rotate tests by patch orientation");
    clrn->add_option("--calib", lrn.calib, "calibration file for distorted learning");
    clrn->add_flag("--distorted", lrn.distorted, "route tests through the camera model");
    clrn->add_option("--tc-start", lrn.tc_start, "initial correlation threshold");
    clrn->add_option("--seed", lrn.seed, "reserved; learning is deterministic")
        ->envname("DBRIEF_SEED");
    clrn->add_option("--threads", lrn.threads, "worker threads")->envname("DBRIEF_THREADS");

    ExtractArgs ext;
    auto* cext = app.add_subcommand("extract", "extract binary descriptors at keypoints");
    cext->add_option("--image", ext.image, "input PGM image")->required();
    cext->add_option("--keypoints", ext.keypoints, "keypoint file")->required();
    cext->add_option("--tests", ext.tests, "test-set file")->required();
    cext->add_option("--calib", ext.calib, "calibration file")->required();
    cext->add_option("--out", ext.out, "output descriptor file")->required();
    cext->add_option("--variant", ext.variant, "brief|dbrief|mdbrief");
    cext->add_flag("--no-orientation", ext.no_orientation, "ignore keypoint orientation");
    cext->add_option("--sigma", ext.sigma, "smoothing sigma");
    cext->add_option("--rot-magnitude", ext.rot_magnitude, "mask-learning rotation bound, radians");
    cext->add_option("--scale-factor", ext.scale_factor, "per-octave offset scale");
    cext->add_option("--seed", ext.seed, "mask-learning seed")->envname("DBRIEF_SEED");
    cext->add_option("--threads", ext.threads, "worker threads")->envname("DBRIEF_THREADS");
    cext->add_flag("--timing", ext.timing, "print per-stage timings to stderr");

    MatchArgs mat;
    auto* cmat = app.add_subcommand("match", "brute-force nearest-neighbor matching");
    cmat->add_option("--desc-a", mat.desc_a, "query descriptor file")->required();
    cmat->add_option("--desc-b", mat.desc_b, "target descriptor file")->required();
    cmat->add_option("--out", mat.out, "output match CSV")->required();
    cmat->add_flag("--masked", mat.masked, "use the masked Hamming distance");
    cmat->add_flag("--cross-check", mat.cross_check, "require mutual nearest neighbors");
    cmat->add_option("--threshold", mat.threshold, "distance threshold");
    cmat->add_option("--threads", mat.threads, "worker threads")->envname("DBRIEF_THREADS");
    cmat->add_flag("--timing", mat.timing, "print matching time to stderr");

    EvaluateArgs eva;
    auto* ceva = app.add_subcommand("evaluate", "PR curve against homography ground truth");
    ceva->add_option("--desc-a", eva.desc_a, "descriptors of image i")->required();
    ceva->add_option("--desc-b", eva.desc_b, "descriptors of image j")->required();
    ceva->add_option("--homography", eva.homography, "normalized-plane homography file")->required();
    ceva->add_option("--calib", eva.calib, "calibration file")->required();
    ceva->add_option("--out", eva.out, "output PR CSV")->required();
    ceva->add_option("--hist", eva.hist, "optional distance-histogram CSV");
    ceva->add_option("--radius", eva.radius, "ground-truth radius, pixels");
    ceva->add_option("--threshold-max", eva.threshold_max, "largest matching threshold");
    ceva->add_flag("--masked", eva.masked, "masked Hamming distances");
    ceva->add_option("--denominator", eva.denominator, "recall denominator: gt|all");
    ceva->add_option("--threads", eva.threads, "worker threads")->envname("DBRIEF_THREADS");

    SimulateArgs sim;
    auto* csim = app.add_subcommand("simulate", "planar-scene experiments from a config file");
    csim->add_option("--config", sim.config, "experiment config file")->required();
    csim->add_option("--out", sim.out, "output directory")->required();
    csim->add_option("--threads", sim.threads, "worker threads")->envname("DBRIEF_THREADS");
    csim->add_flag("--timing", sim.timing, "print total time to stderr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*cdet) return cmd_detect(det);
        if (*clrn) return cmd_learn_tests(lrn);
        if (*cext) return cmd_extract(ext);
        if (*cmat) return cmd_match(mat);
        if (*ceva) return cmd_evaluate(eva);
        if (*csim) return cmd_simulate(sim);
    } catch (const dbrief::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}

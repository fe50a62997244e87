#pragma once

#include <string>
#include <vector>

#include "dbrief/camera.hpp"
#include "dbrief/descriptor.hpp"
#include "dbrief/detector.hpp"
#include "dbrief/evaluation.hpp"
#include "dbrief/image.hpp"

namespace dbrief {

// Camera-to-world pose: rotation maps camera axes to world axes, translation
// is the camera center. The textured plane is z = 0; cameras sit at z < 0
// looking along +z, so image x/y align with world x/y.
struct CameraPose {
    Mat3 rotation;
    Vec3 translation;
};

void validate_pose(const CameraPose& pose);

struct SimSequence {
    std::vector<CameraPose> poses;
    CameraModel model;
    GrayImage texture;
    double texture_scale = 1.0;  // world units per texel
};

struct SimVariantSpec {
    std::string name;  // brief | dbrief | mbrief | mdbrief
    Variant kind = Variant::DBrief;
    bool masked = false;
};

SimVariantSpec parse_variant(const std::string& name);

struct SimConfig {
    std::string calib_path;
    std::string texture_path;
    double texture_scale = 1.0;
    double height = 150.0;       // camera distance from the plane
    Vec2 start{330.0, 512.0};    // world x/y of the first camera center
    double step_x = 12.0;
    int n_views = 10;
    int n_points = 200;
    Vec2 evolution_point{-1.0, -1.0};  // view-0 pixel to track; default: center
    std::vector<SimVariantSpec> variants;
    std::uint64_t seed = 1;
    int dim = 256;
    int patch_size = 32;
    double sigma = 2.0;
    double rot_magnitude = 0.2094;
    std::string tests_path;      // empty: random pattern from the seed
    std::string experiment = "both";  // evolution | recognition | both
    double detect_threshold = 20.0;
    int detect_arc = 9;
    int margin = 25;
    int threads = 1;
};

SimConfig load_sim_config(const std::string& path);

// Deterministic high-texture plane image: multi-octave value noise with
// repeated, individually marked motif stamps.
GrayImage make_test_texture(int width, int height, std::uint64_t seed);

// Inverse-mapping render of the z = 0 plane; rays that miss the plane (or
// point backward) produce intensity 0.
GrayImage render_view(const SimSequence& seq, int pose_index, int threads = 1);

struct TrackedPoint {
    Vec2 pixel;
    bool visible = false;
};

// Exact projection of plane points into every pose.
std::vector<std::vector<TrackedPoint>> track_points(const SimSequence& seq,
                                                    const std::vector<Vec3>& world_points);

struct EvolutionRow {
    int view = 0;
    std::vector<double> distances;  // one per variant; masked values on bit scale (x D/2)
};

struct EvolutionResult {
    std::vector<std::string> variant_names;
    std::vector<EvolutionRow> rows;
};

struct RecognitionResult {
    std::vector<std::string> variant_names;
    std::vector<std::vector<double>> rates;          // [view][variant]
    std::vector<std::vector<double>> bhattacharyya;  // [view][variant]
    int n_points = 0;
};

SimSequence build_sequence(const SimConfig& cfg);

EvolutionResult hamming_evolution(const SimSequence& seq, const SimConfig& cfg);

RecognitionResult run_recognition_experiment(const SimSequence& seq, const SimConfig& cfg,
                                             const std::string& hist_dir = "");

// Full driver: runs the configured experiments and writes the CSV tables.
void run_simulation(const SimConfig& cfg, const std::string& out_dir);

}  // namespace dbrief

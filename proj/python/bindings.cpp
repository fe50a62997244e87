#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dbrief/camera.hpp"
#include "dbrief/descriptor.hpp"
#include "dbrief/detector.hpp"
#include "dbrief/evaluation.hpp"
#include "dbrief/image.hpp"
#include "dbrief/learning.hpp"
#include "dbrief/matching.hpp"
#include "dbrief/simulation.hpp"

namespace py = pybind11;
using namespace dbrief;

namespace {

GrayImage image_from_array(const py::array_t<std::uint8_t, py::array::c_style>& arr) {
    if (arr.ndim() != 2) throw py::value_error("expected a 2-D uint8 array");
    GrayImage img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
    std::memcpy(img.data.data(), arr.data(), img.data.size());
    return img;
}

py::array_t<std::uint8_t> image_to_array(const GrayImage& img) {
    py::array_t<std::uint8_t> arr({img.height, img.width});
    std::memcpy(arr.mutable_data(), img.data.data(), img.data.size());
    return arr;
}

py::array_t<std::uint8_t> descriptor_bytes(const BinaryDescriptor& d) {
    const int nbytes = (d.dim + 7) / 8;
    py::array_t<std::uint8_t> arr(nbytes);
    auto* out = arr.mutable_data();
    for (int j = 0; j < nbytes; ++j)
        out[j] = static_cast<std::uint8_t>((d.bits[static_cast<std::size_t>(j) >> 3] >> ((j & 7) * 8)) & 0xFF);
    return arr;
}

py::object mask_bytes(const BinaryDescriptor& d) {
    if (!d.has_mask()) return py::none();
    const int nbytes = (d.dim + 7) / 8;
    py::array_t<std::uint8_t> arr(nbytes);
    auto* out = arr.mutable_data();
    for (int j = 0; j < nbytes; ++j)
        out[j] = static_cast<std::uint8_t>((d.mask[static_cast<std::size_t>(j) >> 3] >> ((j & 7) * 8)) & 0xFF);
    return arr;
}

Variant variant_from_name(const std::string& name) {
    if (name == "brief") return Variant::Brief;
    if (name == "dbrief" || name == "mdbrief") return Variant::DBrief;
    throw py::value_error("variant must be brief, dbrief or mdbrief");
}

}  // namespace

PYBIND11_MODULE(_dbrief, m) {
    m.doc() = "distortion-aware binary descriptors for calibrated wide-angle cameras";

    py::register_exception<ParseError>(m, "InputParseError");
    py::register_exception<DomainError>(m, "ModelDomainError");

    py::class_<Keypoint>(m, "Keypoint")
        .def(py::init<>())
        .def(py::init([](double x, double y, double angle, int octave, double score) {
                 Keypoint kp;
                 kp.x = x;
                 kp.y = y;
                 kp.angle = angle;
                 kp.octave = octave;
                 kp.score = score;
                 return kp;
             }),
             py::arg("x"), py::arg("y"), py::arg("angle") = 0.0, py::arg("octave") = 0,
             py::arg("score") = 0.0)
        .def_readwrite("x", &Keypoint::x)
        .def_readwrite("y", &Keypoint::y)
        .def_readwrite("angle", &Keypoint::angle)
        .def_readwrite("octave", &Keypoint::octave)
        .def_readwrite("score", &Keypoint::score)
        .def("__repr__", [](const Keypoint& kp) {
            return "Keypoint(x=" + format_real(kp.x) + ", y=" + format_real(kp.y) + ")";
        });

    py::class_<CameraModel>(m, "CameraModel")
        .def_property_readonly("width", [](const CameraModel& c) { return c.width; })
        .def_property_readonly("height", [](const CameraModel& c) { return c.height; })
        .def_property_readonly("lambda_", [](const CameraModel& c) { return c.lambda; })
        .def("unproject",
             [](const CameraModel& c, double u, double v) {
                 const BearingVector b = unproject(c, {u, v});
                 return py::make_tuple(b.v.x, b.v.y, b.v.z);
             })
        .def("project", [](const CameraModel& c, double x, double y, double z) {
            const Vec2 px = project(c, {x, y, z});
            return py::make_tuple(px.x, px.y);
        });
    m.def("load_camera", &load_camera, py::arg("path"));

    py::class_<TestSet>(m, "TestSet")
        .def_property_readonly("dim", &TestSet::dim)
        .def_readonly("patch_size", &TestSet::patch_size);
    m.def("read_test_set", &read_test_set, py::arg("path"));
    m.def("write_test_set", &write_test_set, py::arg("tests"), py::arg("path"));
    m.def("random_test_set", &random_test_set, py::arg("dim"), py::arg("patch_size"),
          py::arg("seed"));

    py::class_<BinaryDescriptor>(m, "BinaryDescriptor")
        .def_property_readonly("dim", [](const BinaryDescriptor& d) { return d.dim; })
        .def_property_readonly("mask_ones", [](const BinaryDescriptor& d) { return d.mask_ones; })
        .def_property_readonly("has_mask", &BinaryDescriptor::has_mask)
        .def("bit", &BinaryDescriptor::get_bit)
        .def("bytes", &descriptor_bytes)
        .def("mask_bytes", &mask_bytes);

    m.def("read_pgm", [](const std::string& path) { return image_to_array(read_pgm(path)); });
    m.def("write_pgm", [](const py::array_t<std::uint8_t, py::array::c_style>& a,
                          const std::string& path) { write_pgm(image_from_array(a), path); });
    m.def(
        "gaussian_smooth",
        [](const py::array_t<std::uint8_t, py::array::c_style>& a, double sigma) {
            return image_to_array(gaussian_smooth(image_from_array(a), sigma));
        },
        py::arg("image"), py::arg("sigma") = 2.0);
    m.def("sample_bilinear", [](const py::array_t<std::uint8_t, py::array::c_style>& a, double x,
                                double y) { return sample_bilinear(image_from_array(a), x, y); });
    m.def("make_test_texture", [](int w, int h, std::uint64_t seed) {
        return image_to_array(make_test_texture(w, h, seed));
    });

    m.def(
        "detect",
        [](const py::array_t<std::uint8_t, py::array::c_style>& a, int n, double threshold,
           int arc, int levels, double scale_factor, int margin, int threads) {
            const Pyramid pyr = build_pyramid(image_from_array(a), levels, scale_factor);
            DetectorParams params;
            params.n_target = n;
            params.threshold = threshold;
            params.n_contiguous = arc;
            params.scale_factor = scale_factor;
            params.border_margin = margin;
            params.threads = threads;
            return detect_multiscale(pyr, params);
        },
        py::arg("image"), py::arg("n") = 500, py::arg("threshold") = 20.0, py::arg("arc") = 9,
        py::arg("levels") = 1, py::arg("scale_factor") = 1.2, py::arg("margin") = 17,
        py::arg("threads") = 1);

    m.def(
        "extract",
        [](const py::array_t<std::uint8_t, py::array::c_style>& a,
           const std::vector<Keypoint>& kps, const TestSet& q, const CameraModel& model,
           const std::string& variant, bool use_orientation, double sigma, double rot_magnitude,
           std::uint64_t seed, int threads) {
            ExtractOptions opt;
            opt.variant = variant_from_name(variant);
            opt.learn_mask = variant == "mdbrief";
            opt.use_orientation = use_orientation;
            opt.smooth_sigma = sigma;
            opt.rot_magnitude = rot_magnitude;
            opt.seed = seed;
            opt.threads = threads;
            const ExtractResult res = extract(image_from_array(a), kps, q, model, opt);
            return py::make_tuple(res.keypoints, res.descriptors, res.skipped);
        },
        py::arg("image"), py::arg("keypoints"), py::arg("tests"), py::arg("camera"),
        py::arg("variant") = "dbrief", py::arg("use_orientation") = true, py::arg("sigma") = 2.0,
        py::arg("rot_magnitude") = 0.2094, py::arg("seed") = 0, py::arg("threads") = 1);

    m.def("hamming", &hamming);
    m.def("masked_hamming", &masked_hamming);

    py::class_<Match>(m, "Match")
        .def_readonly("index_i", &Match::index_i)
        .def_readonly("index_j", &Match::index_j)
        .def_readonly("distance", &Match::distance);
    m.def(
        "match_brute_force",
        [](const std::vector<BinaryDescriptor>& a, const std::vector<BinaryDescriptor>& b,
           bool masked, double threshold, bool cross_check, int threads) {
            MatchOptions opt;
            opt.masked = masked;
            opt.threshold = threshold;
            opt.cross_check = cross_check;
            opt.threads = threads;
            return match_brute_force(a, b, opt);
        },
        py::arg("set_i"), py::arg("set_j"), py::arg("masked") = false,
        py::arg("threshold") = std::numeric_limits<double>::infinity(),
        py::arg("cross_check") = false, py::arg("threads") = 1);

    m.def("write_descriptors", &write_descriptors, py::arg("keypoints"), py::arg("descriptors"),
          py::arg("path"));
    m.def("read_descriptors", [](const std::string& path) {
        std::vector<Keypoint> kps;
        std::vector<BinaryDescriptor> descs;
        read_descriptors(path, kps, descs);
        return py::make_tuple(kps, descs);
    });

    m.def("enumerate_candidate_tests", &enumerate_candidate_tests, py::arg("patch_size"),
          py::arg("apply_filters") = true);
    m.def("bhattacharyya", &bhattacharyya, py::arg("p"), py::arg("q"));

    m.attr("__version__") = "1.0.0";
}

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "dbrief/descriptor.hpp"
#include "doctest.h"

using namespace dbrief;

namespace {

CameraModel pinhole_model() {
    CameraModel m;
    m.variant = CameraVariant::Pinhole;
    m.lambda = 200.0;
    m.principal_point = {160.0, 120.0};
    m.width = 320;
    m.height = 240;
    return m;
}

CameraModel radial_model(double xi) {
    CameraModel m = pinhole_model();
    m.variant = CameraVariant::PinholeRadial;
    m.xi = xi;
    return m;
}

CameraModel fisheye_model() {
    CameraModel m;
    m.variant = CameraVariant::GenericFisheye;
    m.unproj_poly = {209.102840178620, -0.00219808982029219, 4.78500789580928e-06,
                     -1.91374184127112e-08};
    m.lambda = m.unproj_poly[0];
    m.principal_point = {377.0, 240.0};
    m.width = 754;
    m.height = 480;
    return m;
}

GrayImage noise_image(int w, int h, std::uint64_t seed) {
    GrayImage img(w, h);
    std::mt19937_64 rng(seed);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(rng() & 0xFF);
    return img;
}

Keypoint kp_at(double x, double y, double angle = 0.0, int octave = 0) {
    Keypoint kp;
    kp.x = x;
    kp.y = y;
    kp.angle = angle;
    kp.octave = octave;
    return kp;
}

}  // namespace

TEST_CASE("rotate_tests trivial angles") {
    TestSet q;
    q.patch_size = 32;
    q.pairs.emplace_back(Vec2{3.0, 0.0}, Vec2{-2.0, 5.0});

    const TestSet same = rotate_tests(q, 0.0);
    CHECK(same.pairs[0].first.x == 3.0);
    CHECK(same.pairs[0].first.y == 0.0);

    const TestSet quarter = rotate_tests(q, M_PI / 2.0);
    CHECK(quarter.pairs[0].first.x == doctest::Approx(0.0));
    CHECK(quarter.pairs[0].first.y == doctest::Approx(3.0));

    const TestSet twice_pi = rotate_tests(rotate_tests(q, M_PI), M_PI);
    CHECK(twice_pi.pairs[0].first.x == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(twice_pi.pairs[0].second.y == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("project_tests on a pinhole camera anchors exactly at the keypoint") {
    const CameraModel m = pinhole_model();
    const TestSet q = random_test_set(64, 32, 3);
    const Keypoint kp = kp_at(101.25, 77.5, 0.4, 1);
    const ProjectedTestSet p = project_tests(q, kp, m, kp.angle, 1.2, Variant::DBrief);

    const TestSet rotated = rotate_tests(q, kp.angle);
    const double s = std::pow(1.2, kp.octave);
    for (int i = 0; i < q.dim(); ++i) {
        CHECK(p.points[i].first.x == kp.x + rotated.pairs[i].first.x * s);
        CHECK(p.points[i].first.y == kp.y + rotated.pairs[i].first.y * s);
        CHECK(p.points[i].second.x == kp.x + rotated.pairs[i].second.x * s);
        CHECK(p.points[i].second.y == kp.y + rotated.pairs[i].second.y * s);
    }
}

TEST_CASE("radial endpoint displacement grows with offset radius, zero at center") {
    const CameraModel rad = radial_model(-std::pow(2.0, -6.0));
    TestSet q;
    q.patch_size = 32;
    q.pairs.emplace_back(Vec2{0.0, 0.0}, Vec2{2.0, 0.0});
    q.pairs.emplace_back(Vec2{6.0, 0.0}, Vec2{12.0, 0.0});

    // keypoint at the principal point: a zero offset projects exactly there
    const Keypoint center = kp_at(160.0, 120.0);
    const ProjectedTestSet p = project_tests(q, center, rad, 0.0);
    CHECK(p.points[0].first.x == doctest::Approx(160.0).epsilon(1e-12));
    CHECK(p.points[0].first.y == doctest::Approx(120.0).epsilon(1e-12));

    // displacement from plain anchoring grows with the offset radius
    auto displacement = [&](const Vec2& endpoint, const Vec2& offset) {
        return std::abs(endpoint.x - (center.x + offset.x));
    };
    const double d2 = displacement(p.points[0].second, {2.0, 0.0});
    const double d6 = displacement(p.points[1].first, {6.0, 0.0});
    const double d12 = displacement(p.points[1].second, {12.0, 0.0});
    CHECK(d2 < d6);
    CHECK(d6 < d12);
    CHECK(d12 > 1e-4);

    // per-endpoint oracle: the camera-module projection applied directly
    const Vec2 np = normalized_plane_point(rad, {center.x, center.y});
    const Vec2 oracle = project(rad, {rad.lambda * np.x + 12.0, rad.lambda * np.y, rad.lambda});
    CHECK(p.points[1].second.x == doctest::Approx(oracle.x).epsilon(1e-12));
}

TEST_CASE("fisheye projection of a mirrored pattern is point-symmetric at the center") {
    const CameraModel fish = fisheye_model();
    TestSet q;
    q.patch_size = 32;
    q.pairs.emplace_back(Vec2{9.0, 4.0}, Vec2{-9.0, -4.0});
    const Keypoint center = kp_at(fish.principal_point.x, fish.principal_point.y);
    const ProjectedTestSet p = project_tests(q, center, fish, 0.0);
    CHECK(p.points[0].first.x - fish.principal_point.x ==
          doctest::Approx(-(p.points[0].second.x - fish.principal_point.x)).epsilon(1e-9));
    CHECK(p.points[0].first.y - fish.principal_point.y ==
          doctest::Approx(-(p.points[0].second.y - fish.principal_point.y)).epsilon(1e-9));
}

TEST_CASE("project_tests clamps endpoints near the border and counts them") {
    const CameraModel m = pinhole_model();
    TestSet q;
    q.patch_size = 32;
    q.pairs.emplace_back(Vec2{-16.0, 0.0}, Vec2{16.0, 0.0});
    const Keypoint near_edge = kp_at(5.0, 120.0);
    const ProjectedTestSet p = project_tests(q, near_edge, m, 0.0);
    CHECK(p.clamped == 1);
    CHECK(p.points[0].first.x == 0.0);
}

TEST_CASE("project_tests round-trips endpoints back to the anchored plane") {
    const CameraModel rad = radial_model(-0.02);
    const TestSet q = random_test_set(32, 32, 9);
    const Keypoint kp = kp_at(220.0, 60.0, 0.7);
    const ProjectedTestSet p = project_tests(q, kp, rad, kp.angle);

    const Vec2 np = normalized_plane_point(rad, {kp.x, kp.y});
    const Vec2 m_u{rad.lambda * np.x, rad.lambda * np.y};
    const TestSet rotated = rotate_tests(q, kp.angle);
    for (int i = 0; i < q.dim(); ++i) {
        const Vec2 back = normalized_plane_point(rad, p.points[i].first);
        CHECK(back.x * rad.lambda == doctest::Approx(m_u.x + rotated.pairs[i].first.x).epsilon(1e-6));
        CHECK(back.y * rad.lambda == doctest::Approx(m_u.y + rotated.pairs[i].first.y).epsilon(1e-6));
    }
}

TEST_CASE("apply_tests ties produce zero bits") {
    GrayImage img(64, 64, 123);
    const TestSet q = random_test_set(16, 32, 5);
    const ProjectedTestSet p = project_tests(q, kp_at(32, 32), pinhole_model(), 0.0);
    const BinaryDescriptor d = apply_tests(img, p);
    for (int i = 0; i < d.dim; ++i) CHECK(!d.get_bit(i));
}

TEST_CASE("apply_tests sets a bit when the first sample is darker") {
    GrayImage img(64, 64, 50);
    img.at(40, 32) = 200;  // brighten u2
    TestSet q;
    q.patch_size = 32;
    q.pairs.emplace_back(Vec2{0.0, 0.0}, Vec2{8.0, 0.0});
    CameraModel m = pinhole_model();
    m.width = 64;
    m.height = 64;
    const BinaryDescriptor d = apply_tests(img, project_tests(q, kp_at(32, 32), m, 0.0));
    CHECK(d.get_bit(0));
}

TEST_CASE("inverting intensities flips exactly the bits with differing endpoint values") {
    GrayImage img = noise_image(96, 96, 21);
    GrayImage inv = img;
    for (auto& v : inv.data) v = static_cast<std::uint8_t>(255 - v);
    CameraModel m = pinhole_model();
    m.width = 96;
    m.height = 96;
    const TestSet q = random_test_set(128, 32, 77);
    const ProjectedTestSet p = project_tests(q, kp_at(48, 48), m, 0.0);
    const BinaryDescriptor a = apply_tests(img, p);
    const BinaryDescriptor b = apply_tests(inv, p);
    for (int i = 0; i < q.dim(); ++i) {
        const double va = sample_bilinear(img, p.points[i].first.x, p.points[i].first.y);
        const double vb = sample_bilinear(img, p.points[i].second.x, p.points[i].second.y);
        if (va != vb)
            CHECK(a.get_bit(i) != b.get_bit(i));
        else
            CHECK((!a.get_bit(i) && !b.get_bit(i)));
    }
}

TEST_CASE("extract with a pinhole camera is bit-identical to a direct patch oracle") {
    GrayImage img = noise_image(320, 240, 4);
    const CameraModel m = pinhole_model();
    const TestSet q = random_test_set(256, 32, 40);
    std::vector<Keypoint> kps = {kp_at(100, 100, 0.3), kp_at(200.5, 130.25, -1.2),
                                 kp_at(60, 200, 2.1)};
    ExtractOptions opt;
    opt.variant = Variant::DBrief;
    const ExtractResult res = extract(img, kps, q, m, opt);
    REQUIRE(res.descriptors.size() == kps.size());

    const GrayImage smoothed = gaussian_smooth(img, opt.smooth_sigma);
    for (std::size_t k = 0; k < kps.size(); ++k) {
        const double c = std::cos(kps[k].angle), s = std::sin(kps[k].angle);
        for (int i = 0; i < q.dim(); ++i) {
            auto sample_at = [&](const Vec2& u) {
                const double x = std::clamp(kps[k].x + u.x * c - u.y * s, 0.0, 319.0);
                const double y = std::clamp(kps[k].y + u.x * s + u.y * c, 0.0, 239.0);
                return sample_bilinear(smoothed, x, y);
            };
            const bool bit = sample_at(q.pairs[i].first) < sample_at(q.pairs[i].second);
            CHECK(res.descriptors[k].get_bit(i) == bit);
        }
    }
}

TEST_CASE("extract duplicates a duplicated keypoint deterministically") {
    GrayImage img = noise_image(320, 240, 8);
    const CameraModel m = radial_model(-0.01);
    const TestSet q = random_test_set(64, 32, 2);
    std::vector<Keypoint> kps = {kp_at(150, 110, 0.5), kp_at(150, 110, 0.5)};
    ExtractOptions opt;
    opt.learn_mask = true;
    opt.seed = 99;
    const ExtractResult res = extract(img, kps, q, m, opt);
    REQUIRE(res.descriptors.size() == 2);
    // identical bits; masks may differ only through the per-index seed
    CHECK(res.descriptors[0].bits == res.descriptors[1].bits);
}

TEST_CASE("extract skips keypoints that fail preconditions and reports them") {
    GrayImage img = noise_image(320, 240, 3);
    const CameraModel m = pinhole_model();
    const TestSet q = random_test_set(32, 32, 1);
    std::vector<Keypoint> kps = {kp_at(150, 110), kp_at(5000, 5000)};
    const ExtractResult res = extract(img, kps, q, m, ExtractOptions{});
    CHECK(res.descriptors.size() == 1);
    REQUIRE(res.skipped.size() == 1);
    CHECK(res.skipped[0] == 1);
}

TEST_CASE("mdBRIEF masks are present with at least one set bit") {
    GrayImage img = noise_image(320, 240, 12);
    const CameraModel m = radial_model(-0.015625);
    const TestSet q = random_test_set(128, 32, 6);
    std::vector<Keypoint> kps = {kp_at(100, 100), kp_at(250, 50), kp_at(170, 190)};
    ExtractOptions opt;
    opt.learn_mask = true;
    opt.seed = 5;
    const ExtractResult res = extract(img, kps, q, m, opt);
    for (const auto& d : res.descriptors) {
        CHECK(d.has_mask());
        CHECK(d.mask_ones >= 1);
        CHECK(d.mask_ones <= d.dim);
    }
}

TEST_CASE("descriptor bit depends only on its own endpoint samples") {
    GrayImage img = noise_image(320, 240, 15);
    CameraModel m = pinhole_model();
    TestSet q;
    q.patch_size = 32;
    q.pairs.emplace_back(Vec2{-4.0, 0.0}, Vec2{4.0, 0.0});
    q.pairs.emplace_back(Vec2{0.0, -4.0}, Vec2{0.0, 4.0});
    const Keypoint kp = kp_at(160, 120);
    ExtractOptions opt;
    const BinaryDescriptor before = extract(img, {kp}, q, m, opt).descriptors[0];
    // perturb pixels far away from every endpoint of pair 0
    img.at(300, 10) = static_cast<std::uint8_t>(255 - img.at(300, 10));
    img.at(10, 220) = static_cast<std::uint8_t>(255 - img.at(10, 220));
    const BinaryDescriptor after = extract(img, {kp}, q, m, opt).descriptors[0];
    CHECK(before.get_bit(0) == after.get_bit(0));
    CHECK(before.get_bit(1) == after.get_bit(1));
}

TEST_CASE("random_test_set is deterministic and in-bounds") {
    const TestSet a = random_test_set(256, 32, 42);
    const TestSet b = random_test_set(256, 32, 42);
    const TestSet c = random_test_set(256, 32, 43);
    CHECK(a.pairs == b.pairs);
    CHECK(a.pairs != c.pairs);
    for (const auto& [u1, u2] : a.pairs) {
        CHECK(u1.x >= -16.0);
        CHECK(u1.x <= 15.0);
        CHECK(u1.y >= -16.0);
        CHECK(u1.y <= 15.0);
        CHECK(!(u1.x == u2.x && u1.y == u2.y));
    }
}

TEST_CASE("test-set file round-trip and validation") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "dbrief_tests.txt").string();
    const TestSet q = random_test_set(64, 32, 10);
    write_test_set(q, path);
    const TestSet back = read_test_set(path);
    CHECK(back.patch_size == 32);
    CHECK(back.pairs == q.pairs);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_test_set("/nonexistent/tests.txt"), ParseError);
}

TEST_CASE("descriptor file round-trip with and without masks") {
    GrayImage img = noise_image(320, 240, 77);
    const CameraModel m = radial_model(-0.015625);
    const TestSet q = random_test_set(128, 32, 3);
    std::vector<Keypoint> kps = {kp_at(100.5, 90.25, 0.3, 1), kp_at(222, 150, -2.0)};

    for (bool masked : {false, true}) {
        ExtractOptions opt;
        opt.learn_mask = masked;
        opt.seed = 321;
        const ExtractResult res = extract(img, kps, q, m, opt);
        const std::string path =
            (std::filesystem::temp_directory_path() / "dbrief_desc.bin").string();
        write_descriptors(res.keypoints, res.descriptors, path);
        std::vector<Keypoint> rk;
        std::vector<BinaryDescriptor> rd;
        read_descriptors(path, rk, rd);
        REQUIRE(rd.size() == res.descriptors.size());
        for (std::size_t i = 0; i < rd.size(); ++i) {
            CHECK(rd[i].bits == res.descriptors[i].bits);
            CHECK(rd[i].mask == res.descriptors[i].mask);
            CHECK(rd[i].dim == res.descriptors[i].dim);
            CHECK(rk[i].x == doctest::Approx(res.keypoints[i].x).epsilon(1e-6));
            CHECK(rk[i].octave == res.keypoints[i].octave);
        }
        std::remove(path.c_str());
    }
}

TEST_CASE("descriptor file layout: LSB of byte 0 is test 0") {
    std::vector<Keypoint> kps = {kp_at(1, 2)};
    BinaryDescriptor d;
    d.dim = 8;
    d.bits.assign(1, 0b00000101);  // tests 0 and 2 set
    const std::string path = (std::filesystem::temp_directory_path() / "dbrief_bits.bin").string();
    write_descriptors(kps, {d}, path);
    std::ifstream in(path, std::ios::binary);
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    // magic(4) + version(1) + count(4) + dim(2) + keypoint(20) = 31 bytes before bits
    REQUIRE(raw.size() >= 32);
    CHECK(std::string(raw.begin(), raw.begin() + 4) == "DBRF");
    CHECK(static_cast<unsigned char>(raw[31]) == 0b00000101);
    std::remove(path.c_str());
}

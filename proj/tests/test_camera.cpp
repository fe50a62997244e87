#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "dbrief/camera.hpp"
#include "doctest.h"

using namespace dbrief;

namespace {

CameraModel make_pinhole(double lam = 300.0) {
    CameraModel m;
    m.variant = CameraVariant::Pinhole;
    m.lambda = lam;
    m.principal_point = {320.0, 240.0};
    m.width = 640;
    m.height = 480;
    return m;
}

CameraModel make_radial(double xi, double lam = 300.0) {
    CameraModel m = make_pinhole(lam);
    m.variant = CameraVariant::PinholeRadial;
    m.xi = xi;
    return m;
}

CameraModel make_fisheye() {
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

std::string temp_file(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("distort_radial fixed point and distortion-free case") {
    const Vec2 z = distort_radial({0.0, 0.0}, -0.4);
    CHECK(z.x == 0.0);
    CHECK(z.y == 0.0);
    const Vec2 id = distort_radial({0.5, 0.5}, 0.0);
    CHECK(id.x == 0.5);
    CHECK(id.y == 0.5);
}

TEST_CASE("distort_radial at xi = -2^-6 matches the closed-form inverse") {
    const double xi = -std::pow(2.0, -6.0);
    const Vec2 d = distort_radial({1.0, 0.0}, xi);
    CHECK(d.x == doctest::Approx(0.9848450049412842).epsilon(1e-12));
    CHECK(d.y == 0.0);
    const Vec2 back = undistort_radial(d, xi);
    CHECK(std::abs(back.x - 1.0) < 1e-9);
    CHECK(std::abs(back.y) < 1e-9);
}

TEST_CASE("distort_radial rejects a negative radicand") {
    CHECK_THROWS_AS(distort_radial({1.0, 1.0}, 0.2), DomainError);
}

TEST_CASE("undistort_radial trivial cases and round-trip property") {
    const Vec2 z = undistort_radial({0.0, 0.0}, -0.1);
    CHECK(z.x == 0.0);
    const Vec2 id = undistort_radial({0.3, -0.7}, 0.0);
    CHECK(id.x == 0.3);
    CHECK(id.y == -0.7);

    std::mt19937_64 rng(7);
    auto u01 = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    for (double xi : {0.0, -std::pow(2.0, -6.0), -0.05}) {
        for (int i = 0; i < 1000; ++i) {
            const Vec2 p{(u01() * 2 - 1) * 1.5, (u01() * 2 - 1) * 1.5};
            const Vec2 back = distort_radial(undistort_radial(p, xi), xi);
            CHECK(std::abs(back.x - p.x) < 1e-9);
            CHECK(std::abs(back.y - p.y) < 1e-9);
        }
    }
}

TEST_CASE("unproject pinhole at the principal point gives the optical axis") {
    const CameraModel m = make_pinhole();
    const BearingVector b = unproject(m, m.principal_point);
    CHECK(b.v.x == doctest::Approx(0.0));
    CHECK(b.v.y == doctest::Approx(0.0));
    CHECK(b.v.z == doctest::Approx(1.0));
}

TEST_CASE("radial model project/unproject round-trips to 1e-6 px") {
    const CameraModel m = make_radial(-std::pow(2.0, -6.0));
    std::mt19937_64 rng(11);
    auto u01 = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    for (int i = 0; i < 1000; ++i) {
        const Vec2 px{u01() * (m.width - 1), u01() * (m.height - 1)};
        const BearingVector b = unproject(m, px);
        const Vec2 back = project(m, b.v);
        CHECK(std::abs(back.x - px.x) < 1e-6);
        CHECK(std::abs(back.y - px.y) < 1e-6);
    }
}

TEST_CASE("fisheye unprojection is symmetric along an axis through the center") {
    const CameraModel m = make_fisheye();
    const BearingVector b = unproject(m, {m.principal_point.x + 120.0, m.principal_point.y});
    CHECK(std::abs(b.v.y) < 1e-12);
    CHECK(b.v.x > 0.0);
}

TEST_CASE("pinhole projection of the axis point hits the principal point") {
    const CameraModel m = make_pinhole();
    const Vec2 px = project(m, {0.0, 0.0, m.lambda});
    CHECK(px.x == doctest::Approx(320.0));
    CHECK(px.y == doctest::Approx(240.0));
    CHECK_THROWS_AS(project(m, {0.0, 0.0, -1.0}), DomainError);
}

TEST_CASE("radial projection with xi = 0 equals pinhole bit-for-bit") {
    const CameraModel pin = make_pinhole();
    const CameraModel rad = make_radial(0.0);
    std::mt19937_64 rng(5);
    auto u01 = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    for (int i = 0; i < 1000; ++i) {
        const Vec3 p{(u01() * 2 - 1) * 2.0, (u01() * 2 - 1) * 2.0, 0.5 + u01() * 3.0};
        const Vec2 a = project(pin, p);
        const Vec2 b = project(rad, p);
        CHECK(a.x == b.x);
        CHECK(a.y == b.y);
    }
}

TEST_CASE("fisheye project/unproject round-trips to 1e-4 px with scale invariance") {
    const CameraModel m = make_fisheye();
    std::mt19937_64 rng(13);
    auto u01 = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    for (int i = 0; i < 500; ++i) {
        // stay inside the calibrated image circle
        const double ang = u01() * 2.0 * M_PI;
        const double rad = u01() * 230.0;
        const Vec2 px{m.principal_point.x + rad * std::cos(ang),
                      m.principal_point.y + rad * std::sin(ang)};
        const BearingVector b = unproject(m, px);
        const double s = 0.1 + u01() * 10.0;
        const Vec2 back = project(m, b.v * s);
        CHECK(std::abs(back.x - px.x) < 1e-4);
        CHECK(std::abs(back.y - px.y) < 1e-4);
    }
}

TEST_CASE("fisheye projects the axis to the principal point and rejects the backward ray") {
    const CameraModel m = make_fisheye();
    const Vec2 px = project(m, {0.0, 0.0, 2.5});
    CHECK(px.x == m.principal_point.x);
    CHECK(px.y == m.principal_point.y);
    CHECK(!try_project(m, {0.0, 0.0, -1.0}).has_value());
}

TEST_CASE("fisheye forward polynomial, when present, is used directly") {
    CameraModel m = make_fisheye();
    // fit-free check: a forward polynomial built from the solver itself
    // must reproduce the solver's output through the polynomial path
    CameraModel poly = m;
    poly.forward_poly = {100.0};  // constant radius regardless of angle
    const Vec2 p1 = project(poly, {1.0, 0.0, 1.0});
    CHECK(p1.x == doctest::Approx(m.principal_point.x + 100.0));
    const Vec2 p2 = project(poly, {0.0, 2.0, 2.0});
    CHECK(p2.y == doctest::Approx(m.principal_point.y + 100.0));
}

TEST_CASE("calibration file round-trip and validation") {
    const std::string path = temp_file("dbrief_calib.txt");

    SUBCASE("radial model") {
        CameraModel m = make_radial(-0.015625, 120.0);
        save_camera(m, path);
        const CameraModel back = load_camera(path);
        CHECK(back.variant == CameraVariant::PinholeRadial);
        CHECK(back.lambda == m.lambda);
        CHECK(back.xi == m.xi);
        CHECK(back.width == 640);
    }

    SUBCASE("fisheye model") {
        CameraModel m = make_fisheye();
        save_camera(m, path);
        const CameraModel back = load_camera(path);
        CHECK(back.variant == CameraVariant::GenericFisheye);
        CHECK(back.unproj_poly == m.unproj_poly);
        CHECK(back.lambda == m.unproj_poly[0]);
    }

    SUBCASE("unknown keys are rejected") {
        std::ofstream out(path);
        out << "model = pinhole\nlambda = 100\nprincipal_point = 10 10\nsize = 64 64\nbogus = 3\n";
        out.close();
        CHECK_THROWS_AS(load_camera(path), ParseError);
    }

    SUBCASE("missing keys are reported by name") {
        std::ofstream out(path);
        out << "model = pinhole\nprincipal_point = 10 10\nsize = 64 64\n";
        out.close();
        try {
            load_camera(path);
            CHECK(false);
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("lambda") != std::string::npos);
        }
    }

    SUBCASE("xi is rejected for pinhole") {
        std::ofstream out(path);
        out << "model = pinhole\nlambda = 100\nxi = 0.1\nprincipal_point = 10 10\nsize = 64 64\n";
        out.close();
        CHECK_THROWS_AS(load_camera(path), ParseError);
    }

    std::remove(path.c_str());
}

TEST_CASE("radial load validates the forward model at the image corners") {
    const std::string path = temp_file("dbrief_calib_bad.txt");
    std::ofstream out(path);
    // strong negative xi flips the undistortion denominator inside the image
    out << "model = radial\nlambda = 100\nxi = -0.1\nprincipal_point = 320 240\nsize = 640 480\n";
    out.close();
    CHECK_THROWS_AS(load_camera(path), ParseError);
    std::remove(path.c_str());
}

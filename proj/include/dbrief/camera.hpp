#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dbrief/common.hpp"

namespace dbrief {

enum class CameraVariant { Pinhole, PinholeRadial, GenericFisheye };

// Calibrated interior orientation. Sensor coordinates for the pinhole
// variants are (pixel - principal_point) / lambda, so xi is dimensionless.
// The fisheye unprojection polynomial is z(rho) = a0 + a2 rho^2 + a3 rho^3
// + a4 rho^4 with a0 > 0 and lambda = a0.
struct CameraModel {
    CameraVariant variant = CameraVariant::Pinhole;
    double lambda = 1.0;
    double xi = 0.0;                        // PinholeRadial only
    std::vector<double> unproj_poly;        // a0 a2 a3 a4 (GenericFisheye)
    std::vector<double> forward_poly;       // optional rho(theta) coefficients
    double stretch[2][2] = {{1, 0}, {0, 1}};
    Vec2 principal_point;
    int width = 0;
    int height = 0;

    double unproj_z(double rho) const;      // z(rho)
    double unproj_z_deriv(double rho) const;
    double max_domain_radius() const;       // Newton clamp for the forward solve
};

struct BearingVector {
    Vec3 v;  // unit norm, v.z > 0 in front of the camera
};

// Division model m_d = 2m / (1 + sqrt(1 - 4 xi |m|^2)).
Vec2 distort_radial(const Vec2& m, double xi);

// Exact algebraic inverse m = m_d / (1 + xi |m_d|^2).
Vec2 undistort_radial(const Vec2& m_d, double xi);

// Pixel -> unit bearing in the camera frame.
BearingVector unproject(const CameraModel& model, const Vec2& pixel);

// 3-D camera-frame point -> pixel. Empty when the point is outside the
// model's domain (behind the camera for pinhole variants, backward axial
// ray for the fisheye).
std::optional<Vec2> try_project(const CameraModel& model, const Vec3& p);

// Throwing wrapper around try_project.
Vec2 project(const CameraModel& model, const Vec3& p);

// Pixel -> point on the normalized image plane (Z = 1), without the
// intermediate unit normalization; used for test anchoring and homographies.
Vec2 normalized_plane_point(const CameraModel& model, const Vec2& pixel);

// Line-oriented `key = value` calibration file.
CameraModel load_camera(const std::string& path);
void save_camera(const CameraModel& model, const std::string& path);

}  // namespace dbrief

#include "dbrief/camera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace dbrief {

double CameraModel::unproj_z(double rho) const {
    const double a0 = unproj_poly[0], a2 = unproj_poly[1], a3 = unproj_poly[2], a4 = unproj_poly[3];
    return a0 + rho * rho * (a2 + rho * (a3 + rho * a4));
}

double CameraModel::unproj_z_deriv(double rho) const {
    const double a2 = unproj_poly[1], a3 = unproj_poly[2], a4 = unproj_poly[3];
    return rho * (2.0 * a2 + rho * (3.0 * a3 + rho * 4.0 * a4));
}

double CameraModel::max_domain_radius() const {
    if (width <= 0 || height <= 0) return 1000.0;
    const double det = stretch[0][0] * stretch[1][1] - stretch[0][1] * stretch[1][0];
    const double inv[2][2] = {{stretch[1][1] / det, -stretch[0][1] / det},
                              {-stretch[1][0] / det, stretch[0][0] / det}};
    double max_rho = 0.0;
    const double cs[4][2] = {{0, 0},
                             {static_cast<double>(width - 1), 0},
                             {0, static_cast<double>(height - 1)},
                             {static_cast<double>(width - 1), static_cast<double>(height - 1)}};
    for (const auto& c : cs) {
        const double dx = c[0] - principal_point.x;
        const double dy = c[1] - principal_point.y;
        const double mx = inv[0][0] * dx + inv[0][1] * dy;
        const double my = inv[1][0] * dx + inv[1][1] * dy;
        max_rho = std::max(max_rho, std::sqrt(mx * mx + my * my));
    }
    return 2.0 * max_rho;
}

Vec2 distort_radial(const Vec2& m, double xi) {
    const double radicand = 1.0 - 4.0 * xi * m.squared_norm();
    if (radicand < 0.0) throw DomainError("distort_radial: point outside model domain (negative radicand)");
    const double denom = 1.0 + std::sqrt(radicand);
    return {2.0 * m.x / denom, 2.0 * m.y / denom};
}

Vec2 undistort_radial(const Vec2& m_d, double xi) {
    const double denom = 1.0 + xi * m_d.squared_norm();
    if (std::abs(denom) < 1e-12) throw DomainError("undistort_radial: vanishing denominator");
    return {m_d.x / denom, m_d.y / denom};
}

namespace {

Vec2 apply_stretch_inverse(const CameraModel& model, const Vec2& d) {
    const double det = model.stretch[0][0] * model.stretch[1][1] -
                       model.stretch[0][1] * model.stretch[1][0];
    return {(model.stretch[1][1] * d.x - model.stretch[0][1] * d.y) / det,
            (-model.stretch[1][0] * d.x + model.stretch[0][0] * d.y) / det};
}

Vec2 apply_stretch(const CameraModel& model, const Vec2& s) {
    return {model.stretch[0][0] * s.x + model.stretch[0][1] * s.y,
            model.stretch[1][0] * s.x + model.stretch[1][1] * s.y};
}

double polyval(const std::vector<double>& coeffs, double x) {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    return acc;
}

// First positive root of z(rho); used as Newton seed for backward rays.
double hemisphere_radius(const CameraModel& model) {
    double lo = 0.0;
    double hi = model.max_domain_radius();
    if (model.unproj_z(hi) > 0.0) return hi;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (model.unproj_z(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Solve z(rho) * r - rho * pz = 0 for the image radius of direction (r, pz).
std::optional<double> solve_forward_radius(const CameraModel& model, double r, double pz) {
    const double dom = model.max_domain_radius();
    double rho = pz > 1e-9 ? std::clamp(model.lambda * r / pz, 0.0, dom)
                           : hemisphere_radius(model);
    const double scale = std::max(1.0, r * model.lambda);
    bool converged = false;
    for (int it = 0; it < 20; ++it) {
        const double h = model.unproj_z(rho) * r - rho * pz;
        if (std::abs(h) <= 1e-10 * scale) {
            converged = true;
            break;
        }
        const double hp = model.unproj_z_deriv(rho) * r - pz;
        if (std::abs(hp) < 1e-14) break;
        rho = std::clamp(rho - h / hp, 0.0, dom);
    }
    if (converged) return rho;

    // bracketing + bisection fallback
    double lo = 0.0;
    const double h0 = model.unproj_z(0.0) * r;  // a0 * r > 0
    double hi = -1.0;
    const int steps = 128;
    double prev = h0, prev_rho = 0.0;
    for (int i = 1; i <= steps; ++i) {
        const double x = dom * i / steps;
        const double hx = model.unproj_z(x) * r - x * pz;
        if ((prev > 0.0) != (hx > 0.0)) {
            lo = prev_rho;
            hi = x;
            break;
        }
        prev = hx;
        prev_rho = x;
    }
    if (hi < 0.0) return std::nullopt;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double hm = model.unproj_z(mid) * r - mid * pz;
        if (std::abs(hm) <= 1e-10 * scale) return mid;
        ((hm > 0.0) == (h0 > 0.0) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

BearingVector unproject(const CameraModel& model, const Vec2& pixel) {
    Vec3 dir;
    switch (model.variant) {
        case CameraVariant::Pinhole: {
            dir = {(pixel.x - model.principal_point.x) / model.lambda,
                   (pixel.y - model.principal_point.y) / model.lambda, 1.0};
            break;
        }
        case CameraVariant::PinholeRadial: {
            const Vec2 m_d{(pixel.x - model.principal_point.x) / model.lambda,
                           (pixel.y - model.principal_point.y) / model.lambda};
            const Vec2 m = undistort_radial(m_d, model.xi);
            dir = {m.x, m.y, 1.0};
            break;
        }
        case CameraVariant::GenericFisheye: {
            const Vec2 m = apply_stretch_inverse(model, pixel - model.principal_point);
            const double rho = m.norm();
            dir = {m.x, m.y, model.unproj_z(rho)};
            break;
        }
    }
    if (dir.squared_norm() < 1e-24) throw DomainError("unproject: zero-norm direction");
    return {dir.normalized()};
}

std::optional<Vec2> try_project(const CameraModel& model, const Vec3& p) {
    switch (model.variant) {
        case CameraVariant::Pinhole: {
            if (p.z <= 0.0) return std::nullopt;
            // same association as the radial path so xi = 0 reduces bit-for-bit
            return Vec2{model.lambda * (p.x / p.z) + model.principal_point.x,
                        model.lambda * (p.y / p.z) + model.principal_point.y};
        }
        case CameraVariant::PinholeRadial: {
            if (p.z <= 0.0) return std::nullopt;
            const Vec2 m{p.x / p.z, p.y / p.z};
            if (1.0 - 4.0 * model.xi * m.squared_norm() < 0.0) return std::nullopt;
            const Vec2 m_d = distort_radial(m, model.xi);
            return Vec2{model.lambda * m_d.x + model.principal_point.x,
                        model.lambda * m_d.y + model.principal_point.y};
        }
        case CameraVariant::GenericFisheye: {
            const double r = std::sqrt(p.x * p.x + p.y * p.y);
            if (r < 1e-12) {
                if (p.z <= 0.0) return std::nullopt;  // backward axial ray
                return model.principal_point;
            }
            double rho;
            if (!model.forward_poly.empty()) {
                const double theta = std::atan(p.z / r);
                rho = polyval(model.forward_poly, theta);
                if (!(rho >= 0.0) || !std::isfinite(rho)) return std::nullopt;
            } else {
                const auto solved = solve_forward_radius(model, r, p.z);
                if (!solved) return std::nullopt;
                rho = *solved;
            }
            const Vec2 s{rho * p.x / r, rho * p.y / r};
            return apply_stretch(model, s) + model.principal_point;
        }
    }
    return std::nullopt;
}

Vec2 project(const CameraModel& model, const Vec3& p) {
    const auto px = try_project(model, p);
    if (!px) throw DomainError("project: point outside camera model domain");
    return *px;
}

Vec2 normalized_plane_point(const CameraModel& model, const Vec2& pixel) {
    switch (model.variant) {
        case CameraVariant::Pinhole:
            return {(pixel.x - model.principal_point.x) / model.lambda,
                    (pixel.y - model.principal_point.y) / model.lambda};
        case CameraVariant::PinholeRadial: {
            const Vec2 m_d{(pixel.x - model.principal_point.x) / model.lambda,
                           (pixel.y - model.principal_point.y) / model.lambda};
            return undistort_radial(m_d, model.xi);
        }
        case CameraVariant::GenericFisheye: {
            const Vec2 m = apply_stretch_inverse(model, pixel - model.principal_point);
            const double z = model.unproj_z(m.norm());
            if (z <= 1e-9 * std::max(1.0, m.norm()))
                throw DomainError("normalized_plane_point: ray at or beyond the hemisphere");
            return {m.x / z, m.y / z};
        }
    }
    throw DomainError("normalized_plane_point: unknown variant");
}

namespace {

void validate(const CameraModel& m, const std::string& path) {
    if (m.width <= 0 || m.height <= 0) throw ParseError(path + ": size must be positive");
    const double det = m.stretch[0][0] * m.stretch[1][1] - m.stretch[0][1] * m.stretch[1][0];
    if (std::abs(det) <= 1e-12) throw ParseError(path + ": stretch matrix is singular");
    if (m.variant == CameraVariant::GenericFisheye) {
        if (m.unproj_poly.size() != 4) throw ParseError(path + ": poly_unproj needs a0 a2 a3 a4");
        if (m.unproj_poly[0] <= 0.0) throw ParseError(path + ": poly_unproj a0 must be positive");
    } else if (m.lambda <= 0.0) {
        throw ParseError(path + ": lambda must be positive");
    }
    if (m.variant == CameraVariant::PinholeRadial) {
        // forward model must stay real-valued over the sensor domain
        const double cs[4][2] = {{0, 0},
                                 {static_cast<double>(m.width - 1), 0},
                                 {0, static_cast<double>(m.height - 1)},
                                 {static_cast<double>(m.width - 1), static_cast<double>(m.height - 1)}};
        for (const auto& c : cs) {
            const Vec2 m_d{(c[0] - m.principal_point.x) / m.lambda,
                           (c[1] - m.principal_point.y) / m.lambda};
            if (1.0 + m.xi * m_d.squared_norm() <= 1e-12)
                throw ParseError(path + ": radial model degenerates inside the image");
            const Vec2 und = undistort_radial(m_d, m.xi);
            if (1.0 - 4.0 * m.xi * und.squared_norm() < 0.0)
                throw ParseError(path + ": radial model not real-valued at image corners");
        }
    }
}

}  // namespace

CameraModel load_camera(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open calibration file: " + path);

    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(path + ": expected `key = value`, got: " + line);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(path + ": empty key");
        if (kv.count(key)) throw ParseError(path + ": duplicate key: " + key);
        kv[key] = value;
    }

    auto take = [&kv, &path](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(path + ": missing required key: " + key);
        const std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto take_optional = [&kv](const std::string& key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        const std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto parse_reals = [&path](const std::string& s, const std::string& key) {
        std::istringstream ss(s);
        std::vector<double> vals;
        double v;
        while (ss >> v) vals.push_back(v);
        std::string rest;
        if (ss.fail() && !ss.eof() && (ss.clear(), ss >> rest))
            throw ParseError(path + ": non-numeric value for " + key);
        return vals;
    };

    CameraModel model;
    const std::string kind = take("model");
    if (kind == "pinhole")
        model.variant = CameraVariant::Pinhole;
    else if (kind == "radial")
        model.variant = CameraVariant::PinholeRadial;
    else if (kind == "fisheye")
        model.variant = CameraVariant::GenericFisheye;
    else
        throw ParseError(path + ": unknown model: " + kind);

    const auto pp = parse_reals(take("principal_point"), "principal_point");
    if (pp.size() != 2) throw ParseError(path + ": principal_point needs 2 values");
    model.principal_point = {pp[0], pp[1]};

    const auto sz = parse_reals(take("size"), "size");
    if (sz.size() != 2) throw ParseError(path + ": size needs 2 values");
    model.width = static_cast<int>(sz[0]);
    model.height = static_cast<int>(sz[1]);

    if (model.variant == CameraVariant::GenericFisheye) {
        model.unproj_poly = parse_reals(take("poly_unproj"), "poly_unproj");
        const auto st = parse_reals(take("stretch"), "stretch");
        if (st.size() != 4) throw ParseError(path + ": stretch needs 4 values");
        model.stretch[0][0] = st[0];
        model.stretch[0][1] = st[1];
        model.stretch[1][0] = st[2];
        model.stretch[1][1] = st[3];
        if (auto fp = take_optional("poly_forward")) {
            model.forward_poly = parse_reals(*fp, "poly_forward");
            if (model.forward_poly.empty()) throw ParseError(path + ": poly_forward is empty");
        }
        if (model.unproj_poly.size() == 4) model.lambda = model.unproj_poly[0];
    } else {
        const auto lam = parse_reals(take("lambda"), "lambda");
        if (lam.size() != 1) throw ParseError(path + ": lambda needs 1 value");
        model.lambda = lam[0];
        if (model.variant == CameraVariant::PinholeRadial) {
            const auto xi = parse_reals(take("xi"), "xi");
            if (xi.size() != 1) throw ParseError(path + ": xi needs 1 value");
            model.xi = xi[0];
        }
    }

    if (!kv.empty()) throw ParseError(path + ": unknown key for model `" + kind + "`: " + kv.begin()->first);

    validate(model, path);
    return model;
}

void save_camera(const CameraModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    switch (model.variant) {
        case CameraVariant::Pinhole:
            out << "model = pinhole\n";
            out << "lambda = " << format_real(model.lambda) << "\n";
            break;
        case CameraVariant::PinholeRadial:
            out << "model = radial\n";
            out << "lambda = " << format_real(model.lambda) << "\n";
            out << "xi = " << format_real(model.xi) << "\n";
            break;
        case CameraVariant::GenericFisheye:
            out << "model = fisheye\n";
            out << "poly_unproj =";
            for (double c : model.unproj_poly) out << " " << format_real(c);
            out << "\n";
            if (!model.forward_poly.empty()) {
                out << "poly_forward =";
                for (double c : model.forward_poly) out << " " << format_real(c);
                out << "\n";
            }
            out << "stretch = " << format_real(model.stretch[0][0]) << " "
                << format_real(model.stretch[0][1]) << " " << format_real(model.stretch[1][0])
                << " " << format_real(model.stretch[1][1]) << "\n";
            break;
    }
    out << "principal_point = " << format_real(model.principal_point.x) << " "
        << format_real(model.principal_point.y) << "\n";
    out << "size = " << model.width << " " << model.height << "\n";
}

}  // namespace dbrief

#include "dbrief/descriptor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace dbrief {

namespace {

inline void set_bit(std::vector<std::uint64_t>& words, int i) {
    words[static_cast<std::size_t>(i) >> 6] |= std::uint64_t{1} << (i & 63);
}

inline int popcount_words(const std::vector<std::uint64_t>& words) {
    int n = 0;
    for (std::uint64_t w : words) n += std::popcount(w);
    return n;
}

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Vec2 clamp_to_image(const GrayImage& img, const Vec2& p, int& clamped) {
    Vec2 q = p;
    bool hit = false;
    if (q.x < 0.0) { q.x = 0.0; hit = true; }
    if (q.y < 0.0) { q.y = 0.0; hit = true; }
    if (q.x > img.width - 1.0) { q.x = img.width - 1.0; hit = true; }
    if (q.y > img.height - 1.0) { q.y = img.height - 1.0; hit = true; }
    if (hit) ++clamped;
    return q;
}

Vec2 clamp_to_size(int width, int height, const Vec2& p, int& clamped) {
    Vec2 q = p;
    bool hit = false;
    if (q.x < 0.0) { q.x = 0.0; hit = true; }
    if (q.y < 0.0) { q.y = 0.0; hit = true; }
    if (q.x > width - 1.0) { q.x = width - 1.0; hit = true; }
    if (q.y > height - 1.0) { q.y = height - 1.0; hit = true; }
    if (hit) ++clamped;
    return q;
}

}  // namespace

TestSet rotate_tests(const TestSet& q, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    TestSet out;
    out.patch_size = q.patch_size;
    out.pairs.reserve(q.pairs.size());
    for (const auto& [u1, u2] : q.pairs) {
        out.pairs.emplace_back(Vec2{u1.x * c - u1.y * s, u1.x * s + u1.y * c},
                               Vec2{u2.x * c - u2.y * s, u2.x * s + u2.y * c});
    }
    return out;
}

ProjectedTestSet project_tests(const TestSet& q, const Keypoint& kp, const CameraModel& model,
                               double angle, double scale_factor, Variant variant) {
    ProjectedTestSet out;
    out.source_keypoint = kp;
    out.points.reserve(q.pairs.size());

    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double octave_scale = std::pow(scale_factor, static_cast<double>(kp.octave));

    auto rotated = [&](const Vec2& u) -> Vec2 {
        return {(u.x * c - u.y * s) * octave_scale, (u.x * s + u.y * c) * octave_scale};
    };

    const int w = model.width > 0 ? model.width : 1 << 20;
    const int h = model.height > 0 ? model.height : 1 << 20;

    if (variant == Variant::Brief || model.variant == CameraVariant::Pinhole) {
        // the perspective projection reduces to anchoring at the keypoint
        const Vec2 anchor{kp.x, kp.y};
        for (const auto& [u1, u2] : q.pairs) {
            out.points.emplace_back(clamp_to_size(w, h, anchor + rotated(u1), out.clamped),
                                    clamp_to_size(w, h, anchor + rotated(u2), out.clamped));
        }
        return out;
    }

    const BearingVector bv = unproject(model, {kp.x, kp.y});
    if (bv.v.z <= 1e-6)
        throw DomainError("project_tests: keypoint bearing too close to the hemisphere boundary");
    const Vec2 m_u{model.lambda * bv.v.x / bv.v.z, model.lambda * bv.v.y / bv.v.z};
    const Vec2 anchor_pixel{kp.x, kp.y};

    auto place = [&](const Vec2& u) -> Vec2 {
        const Vec2 r = rotated(u);
        const auto px = try_project(model, {m_u.x + r.x, m_u.y + r.y, model.lambda});
        if (!px) {
            // endpoint fell outside the model domain; degrade to the anchor
            ++out.clamped;
            Vec2 p = anchor_pixel;
            int unused = 0;
            return clamp_to_size(w, h, p, unused);
        }
        return clamp_to_size(w, h, *px, out.clamped);
    };

    for (const auto& [u1, u2] : q.pairs) out.points.emplace_back(place(u1), place(u2));
    return out;
}

BinaryDescriptor apply_tests(const GrayImage& smoothed, const ProjectedTestSet& pts) {
    BinaryDescriptor d;
    d.dim = static_cast<int>(pts.points.size());
    d.bits.assign(static_cast<std::size_t>(descriptor_words(d.dim)), 0);
    int unused = 0;
    for (int i = 0; i < d.dim; ++i) {
        const Vec2 a = clamp_to_image(smoothed, pts.points[static_cast<std::size_t>(i)].first, unused);
        const Vec2 b = clamp_to_image(smoothed, pts.points[static_cast<std::size_t>(i)].second, unused);
        if (sample_bilinear(smoothed, a.x, a.y) < sample_bilinear(smoothed, b.x, b.y)) set_bit(d.bits, i);
    }
    return d;
}

ExtractResult extract(const GrayImage& img, const std::vector<Keypoint>& kps, const TestSet& q,
                      const CameraModel& model, const ExtractOptions& options) {
    const GrayImage smoothed = options.presmoothed ? img : gaussian_smooth(img, options.smooth_sigma);

    struct Slot {
        bool ok = false;
        Keypoint kp;
        BinaryDescriptor desc;
        int clamped = 0;
    };
    std::vector<Slot> slots(kps.size());

    parallel_for(kps.size(), options.threads, [&](std::size_t i) {
        const Keypoint& kp = kps[i];
        Slot& slot = slots[i];
        if (!img.in_bounds(kp.x, kp.y)) return;
        const double base = options.use_orientation ? kp.angle : 0.0;
        try {
            ProjectedTestSet p0 =
                project_tests(q, kp, model, base, options.scale_factor, options.variant);
            BinaryDescriptor d = apply_tests(smoothed, p0);
            slot.clamped = p0.clamped;

            if (options.learn_mask) {
                // two small rotations, magnitudes in [rot/2, rot], opposite signs
                std::mt19937_64 rng(options.seed ^ static_cast<std::uint64_t>(i));
                const double half = options.rot_magnitude / 2.0;
                const double a1 = half + half * uniform01(rng);
                const double a2 = half + half * uniform01(rng);
                const ProjectedTestSet p1 =
                    project_tests(q, kp, model, base + a1, options.scale_factor, options.variant);
                const ProjectedTestSet p2 =
                    project_tests(q, kp, model, base - a2, options.scale_factor, options.variant);
                const BinaryDescriptor d1 = apply_tests(smoothed, p1);
                const BinaryDescriptor d2 = apply_tests(smoothed, p2);
                d.mask.assign(d.bits.size(), 0);
                for (std::size_t wi = 0; wi < d.bits.size(); ++wi)
                    d.mask[wi] = ~(d.bits[wi] ^ d1.bits[wi]) & ~(d.bits[wi] ^ d2.bits[wi]);
                // keep padding bits clear
                if (d.dim & 63) d.mask.back() &= (std::uint64_t{1} << (d.dim & 63)) - 1;
                d.mask_ones = popcount_words(d.mask);
                if (d.mask_ones == 0) {
                    for (std::size_t wi = 0; wi < d.mask.size(); ++wi) d.mask[wi] = ~std::uint64_t{0};
                    if (d.dim & 63) d.mask.back() &= (std::uint64_t{1} << (d.dim & 63)) - 1;
                    d.mask_ones = d.dim;
                }
            }
            slot.kp = kp;
            slot.desc = std::move(d);
            slot.ok = true;
        } catch (const DomainError&) {
            slot.ok = false;
        }
    });

    ExtractResult res;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].ok) {
            res.keypoints.push_back(slots[i].kp);
            res.descriptors.push_back(std::move(slots[i].desc));
            res.clamp_count += slots[i].clamped;
        } else {
            res.skipped.push_back(i);
        }
    }
    return res;
}

TestSet random_test_set(int dim, int patch_size, std::uint64_t seed) {
    if (dim < 1) throw DomainError("random_test_set: dim must be >= 1");
    if (patch_size < 8) throw DomainError("random_test_set: patch_size must be >= 8");
    std::mt19937_64 rng(seed);
    const double sigma = patch_size / 5.0;
    const double lo = -patch_size / 2.0;
    const double hi = patch_size / 2.0 - 1.0;

    auto gauss_coord = [&]() {
        // Box-Muller with a fixed-layout generator keeps patterns reproducible
        double u1 = uniform01(rng);
        while (u1 <= 0.0) u1 = uniform01(rng);
        const double u2 = uniform01(rng);
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        return std::clamp(std::round(z * sigma), lo, hi);
    };

    TestSet q;
    q.patch_size = patch_size;
    q.pairs.reserve(static_cast<std::size_t>(dim));
    while (q.dim() < dim) {
        const Vec2 a{gauss_coord(), gauss_coord()};
        const Vec2 b{gauss_coord(), gauss_coord()};
        if (a.x == b.x && a.y == b.y) continue;
        q.pairs.emplace_back(a, b);
    }
    return q;
}

TestSet read_test_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open test-set file: " + path);
    std::string header;
    std::getline(in, header);
    if (header != "dbrief-tests v1")
        throw ParseError(path + ": bad header, expected `dbrief-tests v1`");
    std::string meta;
    std::getline(in, meta);
    int dim = -1, patch = -1;
    if (std::sscanf(meta.c_str(), "D=%d S=%d", &dim, &patch) != 2 || dim < 1 || patch < 2)
        throw ParseError(path + ": bad meta line: " + meta);
    TestSet q;
    q.patch_size = patch;
    q.pairs.reserve(static_cast<std::size_t>(dim));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        double x1, y1, x2, y2;
        if (!(ss >> x1 >> y1 >> x2 >> y2)) throw ParseError(path + ": malformed test line: " + line);
        q.pairs.emplace_back(Vec2{x1, y1}, Vec2{x2, y2});
    }
    if (q.dim() != dim)
        throw ParseError(path + ": expected " + std::to_string(dim) + " tests, found " +
                         std::to_string(q.dim()));
    const double half = patch / 2.0;
    for (const auto& [a, b] : q.pairs) {
        if (std::max({std::abs(a.x), std::abs(a.y), std::abs(b.x), std::abs(b.y)}) > half)
            throw ParseError(path + ": test endpoint outside patch bounds");
    }
    return q;
}

void write_test_set(const TestSet& q, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    out << "dbrief-tests v1\n";
    out << "D=" << q.dim() << " S=" << q.patch_size << "\n";
    for (const auto& [a, b] : q.pairs) {
        auto as_int = [&path](double v) {
            const long r = std::lround(v);
            if (std::abs(v - r) > 1e-9)
                throw ParseError(path + ": test-set file stores integer offsets only");
            return r;
        };
        out << as_int(a.x) << " " << as_int(a.y) << " " << as_int(b.x) << " " << as_int(b.y)
            << "\n";
    }
}

namespace {

void put_u16(std::ofstream& out, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                                static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ofstream& out, float v) {
    std::uint32_t u;
    static_assert(sizeof(u) == sizeof(v));
    std::memcpy(&u, &v, 4);
    put_u32(out, u);
}

void put_words(std::ofstream& out, const std::vector<std::uint64_t>& words, int nbytes) {
    for (int j = 0; j < nbytes; ++j) {
        const unsigned char b =
            static_cast<unsigned char>((words[static_cast<std::size_t>(j) >> 3] >> ((j & 7) * 8)) & 0xFF);
        out.write(reinterpret_cast<const char*>(&b), 1);
    }
}

std::uint16_t get_u16(std::ifstream& in, const std::string& path) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    if (!in) throw ParseError(path + ": truncated descriptor file");
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw ParseError(path + ": truncated descriptor file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

float get_f32(std::ifstream& in, const std::string& path) {
    const std::uint32_t u = get_u32(in, path);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

std::vector<std::uint64_t> get_words(std::ifstream& in, int dim, const std::string& path) {
    const int nbytes = (dim + 7) / 8;
    std::vector<std::uint64_t> words(static_cast<std::size_t>(descriptor_words(dim)), 0);
    for (int j = 0; j < nbytes; ++j) {
        unsigned char b;
        in.read(reinterpret_cast<char*>(&b), 1);
        if (!in) throw ParseError(path + ": truncated descriptor file");
        words[static_cast<std::size_t>(j) >> 3] |= static_cast<std::uint64_t>(b) << ((j & 7) * 8);
    }
    return words;
}

}  // namespace

void write_descriptors(const std::vector<Keypoint>& kps,
                       const std::vector<BinaryDescriptor>& descs, const std::string& path) {
    if (kps.size() != descs.size())
        throw DomainError("write_descriptors: keypoint/descriptor count mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    out.write("DBRF", 4);
    const unsigned char version = 1;
    out.write(reinterpret_cast<const char*>(&version), 1);
    put_u32(out, static_cast<std::uint32_t>(kps.size()));
    const int dim = descs.empty() ? 0 : descs.front().dim;
    put_u16(out, static_cast<std::uint16_t>(dim));
    const int nbytes = (dim + 7) / 8;
    for (std::size_t i = 0; i < kps.size(); ++i) {
        if (descs[i].dim != dim) throw DomainError("write_descriptors: mixed descriptor dimensions");
        put_f32(out, static_cast<float>(kps[i].x));
        put_f32(out, static_cast<float>(kps[i].y));
        put_f32(out, static_cast<float>(kps[i].angle));
        put_f32(out, static_cast<float>(kps[i].octave));
        put_f32(out, static_cast<float>(kps[i].score));
        put_words(out, descs[i].bits, nbytes);
        const unsigned char flag = descs[i].has_mask() ? 1 : 0;
        out.write(reinterpret_cast<const char*>(&flag), 1);
        if (flag) put_words(out, descs[i].mask, nbytes);
    }
    if (!out) throw ParseError("failed writing descriptor file: " + path);
}

void read_descriptors(const std::string& path, std::vector<Keypoint>& kps,
                      std::vector<BinaryDescriptor>& descs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open descriptor file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "DBRF") throw ParseError(path + ": bad magic, not a descriptor file");
    unsigned char version;
    in.read(reinterpret_cast<char*>(&version), 1);
    if (!in || version != 1) throw ParseError(path + ": unsupported descriptor file version");
    const std::uint32_t count = get_u32(in, path);
    const int dim = get_u16(in, path);
    kps.clear();
    descs.clear();
    kps.reserve(count);
    descs.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Keypoint kp;
        kp.x = get_f32(in, path);
        kp.y = get_f32(in, path);
        kp.angle = get_f32(in, path);
        kp.octave = static_cast<int>(get_f32(in, path));
        kp.score = get_f32(in, path);
        BinaryDescriptor d;
        d.dim = dim;
        d.bits = get_words(in, dim, path);
        unsigned char flag;
        in.read(reinterpret_cast<char*>(&flag), 1);
        if (!in) throw ParseError(path + ": truncated descriptor file");
        if (flag) {
            d.mask = get_words(in, dim, path);
            d.mask_ones = popcount_words(d.mask);
            if (d.mask_ones < 1) throw ParseError(path + ": descriptor mask has no set bits");
        }
        kps.push_back(kp);
        descs.push_back(std::move(d));
    }
}

}  // namespace dbrief

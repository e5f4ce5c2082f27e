#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mpcad/core.hpp"
#include "mpcad/eval.hpp"
#include "mpcad/volume.hpp"

namespace mpcad {

// Synthetic chest-like volume: an elliptic body cylinder on air, two
// elliptic lung fields, tube-shaped vessels and soft-edged spherical
// nodules, then additive Gaussian noise. HU levels sit in typical thoracic
// ranges so windowing and mean-threshold lung segmentation behave as on real
// scans. Everything is driven by one seeded generator, so equal specs give
// bitwise-equal volumes.
struct PhantomSpec {
    Dim3 dims{256, 256, 256};
    Vec3 spacing{1, 1, 1};
    std::string scan_id = "phantom";
    int n_nodules = 10;
    double diameter_min_mm = 4;
    double diameter_max_mm = 16;
    double nodule_hu = 30;
    int n_vessels = 8;
    double vessel_radius_mm = 1.2;
    double vessel_hu = 50;
    double lung_hu = -850;
    double body_hu = 40;
    double air_hu = -1000;
    double noise_sigma = 15;
    std::uint64_t seed = 1;
    int max_retries = 10000;
};

inline void validate(const PhantomSpec& s) {
    validate(s.dims);
    if (s.spacing.x <= 0 || s.spacing.y <= 0 || s.spacing.z <= 0)
        throw std::invalid_argument("phantom spacing must be positive");
    if (s.n_nodules < 0 || s.n_vessels < 0) throw std::invalid_argument("phantom counts must be >= 0");
    if (s.n_nodules > 0 && !(s.diameter_min_mm >= 3))
        throw std::invalid_argument("phantom nodule diameters must be >= 3 mm");
    if (!(s.diameter_max_mm >= s.diameter_min_mm))
        throw std::invalid_argument("phantom diameter range is inverted");
    if (!(s.vessel_radius_mm > 0)) throw std::invalid_argument("phantom vessel radius must be > 0");
    if (s.noise_sigma < 0) throw std::invalid_argument("phantom noise sigma must be >= 0");
    if (s.max_retries < 1) throw std::invalid_argument("phantom max_retries must be >= 1");
}

namespace detail {

struct LungField {
    double cx, cy;        // world mm, ellipse center
    double ax, ay;        // semi-axes mm
    double z_lo, z_hi;    // world mm
};

// Point strictly inside the lung ellipse with a margin (all world mm).
inline bool inside_lung(const LungField& f, double x, double y, double z, double margin) {
    if (z < f.z_lo + margin || z > f.z_hi - margin) return false;
    double ax = f.ax - margin, ay = f.ay - margin;
    if (ax <= 0 || ay <= 0) return false;
    double u = (x - f.cx) / ax, v = (y - f.cy) / ay;
    return u * u + v * v < 1.0;
}

struct Capsule {
    Vec3 a, b;  // segment endpoints, world mm
    double radius;
};

inline double dist_to_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
    Vec3 ab = b - a;
    double len2 = dot(ab, ab);
    double t = len2 > 0 ? clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    return norm(p - (a + ab * t));
}

}  // namespace detail

struct Phantom {
    CtVolume volume;
    std::vector<NoduleAnnotation> annotations;
};

inline Phantom generate_phantom(const PhantomSpec& spec) {
    validate(spec);
    Rng rng(spec.seed);

    CtVolume v;
    v.dims = spec.dims;
    v.spacing = spec.spacing;
    v.origin = {0, 0, 0};
    v.hu.assign(static_cast<std::size_t>(spec.dims.count()), spec.air_hu);

    double Lx = spec.dims.nx * spec.spacing.x;
    double Ly = spec.dims.ny * spec.spacing.y;
    double Lz = spec.dims.nz * spec.spacing.z;
    double cx = 0.5 * (spec.dims.nx - 1) * spec.spacing.x;
    double cy = 0.5 * (spec.dims.ny - 1) * spec.spacing.y;

    double body_ax = 0.45 * Lx, body_ay = 0.40 * Ly;
    detail::LungField lungs[2] = {
        {cx - 0.22 * Lx, cy, 0.16 * Lx, 0.28 * Ly, 0.08 * Lz, 0.92 * Lz},
        {cx + 0.22 * Lx, cy, 0.16 * Lx, 0.28 * Ly, 0.08 * Lz, 0.92 * Lz},
    };

    // Body and lung fields.
    for (int z = 0; z < spec.dims.nz; ++z) {
        double wz = z * spec.spacing.z;
        for (int y = 0; y < spec.dims.ny; ++y) {
            double wy = y * spec.spacing.y;
            for (int x = 0; x < spec.dims.nx; ++x) {
                double wx = x * spec.spacing.x;
                double bu = (wx - cx) / body_ax, bv = (wy - cy) / body_ay;
                if (bu * bu + bv * bv >= 1.0) continue;
                double hu = spec.body_hu;
                for (const detail::LungField& f : lungs) {
                    double lu = (wx - f.cx) / f.ax, lv = (wy - f.cy) / f.ay;
                    if (lu * lu + lv * lv < 1.0 && wz >= f.z_lo && wz <= f.z_hi) {
                        hu = spec.lung_hu;
                        break;
                    }
                }
                v.at(x, y, z) = hu;
            }
        }
    }

    // Vessels: capsules running roughly head-to-foot inside one lung.
    std::vector<detail::Capsule> vessels;
    for (int i = 0; i < spec.n_vessels; ++i) {
        const detail::LungField& f = lungs[i % 2];
        double margin = spec.vessel_radius_mm + 1.0;
        bool placed = false;
        for (int attempt = 0; attempt < spec.max_retries && !placed; ++attempt) {
            double x0 = rng.uniform(f.cx - f.ax, f.cx + f.ax);
            double y0 = rng.uniform(f.cy - f.ay, f.cy + f.ay);
            double z0 = rng.uniform(f.z_lo + margin, 0.5 * (f.z_lo + f.z_hi));
            double len = rng.uniform(0.3, 0.6) * (f.z_hi - f.z_lo);
            double dx = rng.uniform(-0.25, 0.25), dy = rng.uniform(-0.25, 0.25);
            Vec3 a{x0, y0, z0};
            Vec3 b{x0 + dx * len, y0 + dy * len, z0 + len};
            if (!detail::inside_lung(f, a.x, a.y, a.z, margin) || !detail::inside_lung(f, b.x, b.y, b.z, margin))
                continue;
            vessels.push_back({a, b, spec.vessel_radius_mm});
            placed = true;
        }
        if (!placed)
            throw std::runtime_error("phantom: could not place vessel " + std::to_string(i) +
                                     " inside the lung field after " + std::to_string(spec.max_retries) + " tries");
    }
    for (const detail::Capsule& c : vessels) {
        int x0 = std::max(0, static_cast<int>(std::floor((std::min(c.a.x, c.b.x) - c.radius) / spec.spacing.x)));
        int x1 = std::min(spec.dims.nx - 1, static_cast<int>(std::ceil((std::max(c.a.x, c.b.x) + c.radius) / spec.spacing.x)));
        int y0 = std::max(0, static_cast<int>(std::floor((std::min(c.a.y, c.b.y) - c.radius) / spec.spacing.y)));
        int y1 = std::min(spec.dims.ny - 1, static_cast<int>(std::ceil((std::max(c.a.y, c.b.y) + c.radius) / spec.spacing.y)));
        int z0 = std::max(0, static_cast<int>(std::floor((std::min(c.a.z, c.b.z) - c.radius) / spec.spacing.z)));
        int z1 = std::min(spec.dims.nz - 1, static_cast<int>(std::ceil((std::max(c.a.z, c.b.z) + c.radius) / spec.spacing.z)));
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    Vec3 p{x * spec.spacing.x, y * spec.spacing.y, z * spec.spacing.z};
                    if (detail::dist_to_segment(p, c.a, c.b) <= c.radius) v.at(x, y, z) = spec.vessel_hu;
                }
    }

    // Nodules: rejection-sampled so each sits inside a lung with clearance
    // from the pleural margin, from every vessel, and from other nodules
    // (separation keeps distinct findings from fusing downstream).
    std::vector<NoduleAnnotation> anns;
    for (int i = 0; i < spec.n_nodules; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < spec.max_retries && !placed; ++attempt) {
            double d = rng.uniform(spec.diameter_min_mm, spec.diameter_max_mm);
            double r = 0.5 * d;
            const detail::LungField& f = lungs[static_cast<std::size_t>(rng.uniform_index(2))];
            double px = rng.uniform(f.cx - f.ax, f.cx + f.ax);
            double py = rng.uniform(f.cy - f.ay, f.cy + f.ay);
            double pz = rng.uniform(f.z_lo, f.z_hi);
            if (!detail::inside_lung(f, px, py, pz, r + 2.0 * spec.spacing.x)) continue;
            Vec3 p{px, py, pz};
            bool clear = true;
            for (const detail::Capsule& c : vessels)
                if (detail::dist_to_segment(p, c.a, c.b) < r + c.radius + 2.0) clear = false;
            for (const NoduleAnnotation& a : anns)
                if (norm(p - a.center_mm) < r + a.radius_mm() + 10.0) clear = false;
            if (!clear) continue;
            NoduleAnnotation a;
            a.scan_id = spec.scan_id;
            a.center_mm = p;
            a.diameter_mm = d;
            a.votes = {5, 5, 5, 5};
            a.agreement = 4;
            anns.push_back(a);
            placed = true;
        }
        if (!placed)
            throw std::runtime_error("phantom: could not place nodule " + std::to_string(i) +
                                     " without overlap after " + std::to_string(spec.max_retries) + " tries");
    }
    for (const NoduleAnnotation& a : anns) {
        double r = a.radius_mm();
        int x0 = std::max(0, static_cast<int>(std::floor((a.center_mm.x - r - 1) / spec.spacing.x)));
        int x1 = std::min(spec.dims.nx - 1, static_cast<int>(std::ceil((a.center_mm.x + r + 1) / spec.spacing.x)));
        int y0 = std::max(0, static_cast<int>(std::floor((a.center_mm.y - r - 1) / spec.spacing.y)));
        int y1 = std::min(spec.dims.ny - 1, static_cast<int>(std::ceil((a.center_mm.y + r + 1) / spec.spacing.y)));
        int z0 = std::max(0, static_cast<int>(std::floor((a.center_mm.z - r - 1) / spec.spacing.z)));
        int z1 = std::min(spec.dims.nz - 1, static_cast<int>(std::ceil((a.center_mm.z + r + 1) / spec.spacing.z)));
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    Vec3 p{x * spec.spacing.x, y * spec.spacing.y, z * spec.spacing.z};
                    double dist = norm(p - a.center_mm);
                    double cov = clamp(r + 0.5 - dist, 0.0, 1.0);  // soft one-voxel shell
                    if (cov <= 0) continue;
                    double& hu = v.at(x, y, z);
                    hu = hu + cov * (spec.nodule_hu - hu);
                }
    }

    if (spec.noise_sigma > 0)
        for (double& hu : v.hu) hu += rng.gaussian(0.0, spec.noise_sigma);

    return {std::move(v), std::move(anns)};
}

}  // namespace mpcad

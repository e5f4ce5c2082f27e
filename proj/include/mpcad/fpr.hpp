#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mpcad/core.hpp"
#include "mpcad/detect.hpp"
#include "mpcad/msdnet.hpp"
#include "mpcad/nnet.hpp"
#include "mpcad/volume.hpp"

namespace mpcad {

// Candidate patch, resampled to a fixed 32-cube with intensities in [0,1].
struct Cube32 {
    static constexpr int kSide = 32;
    std::vector<double> v;  // kSide^3, x fastest
    std::string scan_id;
    int margin_vox = 0;

    static Cube32 zeros() {
        Cube32 c;
        c.v.assign(static_cast<std::size_t>(kSide) * kSide * kSide, 0.0);
        return c;
    }
    std::int64_t index(int x, int y, int z) const {
        return (static_cast<std::int64_t>(z) * kSide + y) * kSide + x;
    }
    double at(int x, int y, int z) const { return v[static_cast<std::size_t>(index(x, y, z))]; }
    double& at(int x, int y, int z) { return v[static_cast<std::size_t>(index(x, y, z))]; }
};

namespace detail {

// Trilinear sample of a gray volume at a continuous voxel index; zero
// outside the grid (cube extraction pads with air, unlike resampling which
// clamps to the edge).
inline double sample_gray_zero_pad(const GrayVolume& g, double xf, double yf, double zf) {
    if (xf <= -1 || yf <= -1 || zf <= -1 || xf >= g.dims.nx || yf >= g.dims.ny || zf >= g.dims.nz) return 0.0;
    int x0 = static_cast<int>(std::floor(xf)), y0 = static_cast<int>(std::floor(yf)), z0 = static_cast<int>(std::floor(zf));
    double fx = xf - x0, fy = yf - y0, fz = zf - z0;
    auto px = [&](int x, int y, int z) -> double {
        if (x < 0 || x >= g.dims.nx || y < 0 || y >= g.dims.ny || z < 0 || z >= g.dims.nz) return 0.0;
        return g.at(x, y, z);
    };
    double c00 = px(x0, y0, z0) * (1 - fx) + px(x0 + 1, y0, z0) * fx;
    double c10 = px(x0, y0 + 1, z0) * (1 - fx) + px(x0 + 1, y0 + 1, z0) * fx;
    double c01 = px(x0, y0, z0 + 1) * (1 - fx) + px(x0 + 1, y0, z0 + 1) * fx;
    double c11 = px(x0, y0 + 1, z0 + 1) * (1 - fx) + px(x0 + 1, y0 + 1, z0 + 1) * fx;
    double c0 = c00 * (1 - fy) + c10 * fy;
    double c1 = c01 * (1 - fy) + c11 * fy;
    return c0 * (1 - fz) + c1 * fz;
}

}  // namespace detail

// Crop an axis-aligned box around the candidate and rescale it to 32^3.
// The per-axis half size is radius_mm converted to voxels plus margin_vox;
// sample t of axis a sits at center_a - h_a + (t + 0.5) * 2 h_a / 32 in
// continuous voxel coordinates. Regions outside the volume read as zero, and
// intensities come out divided by 255.
inline Cube32 extract_cube(const GrayVolume& g, const Candidate& c, int margin_vox = 4) {
    validate(g);
    if (margin_vox < 0) throw std::invalid_argument("cube margin must be >= 0");
    if (!(c.radius_mm > 0)) throw std::invalid_argument("candidate radius must be > 0");
    Vec3 center = world_to_voxel_continuous(g, c.center_mm);
    double hx = c.radius_mm / g.spacing.x + margin_vox;
    double hy = c.radius_mm / g.spacing.y + margin_vox;
    double hz = c.radius_mm / g.spacing.z + margin_vox;
    Cube32 cube = Cube32::zeros();
    cube.scan_id = c.scan_id;
    cube.margin_vox = margin_vox;
    const int n = Cube32::kSide;
    for (int z = 0; z < n; ++z) {
        double zf = center.z - hz + (z + 0.5) * (2.0 * hz / n);
        for (int y = 0; y < n; ++y) {
            double yf = center.y - hy + (y + 0.5) * (2.0 * hy / n);
            for (int x = 0; x < n; ++x) {
                double xf = center.x - hx + (x + 0.5) * (2.0 * hx / n);
                cube.at(x, y, z) = detail::sample_gray_zero_pad(g, xf, yf, zf) / 255.0;
            }
        }
    }
    return cube;
}

// Deterministic nodule-likeness score used by end-to-end tests in place of a
// trained classifier. Mass above the cube's median intensity is summarized
// by two factors: the fraction of that mass inside the sphere inscribed in
// the cube (compact findings keep their mass central; a uniform cube puts
// pi/6 of it there), and a sphericity weight comparing the mass's RMS radius
// about its centroid with that of an equal-volume ball (1 for a ball, small
// for line-like vessels). Score = logistic(8 * sphericity * (central_frac -
// pi/6)); with no above-median mass the statistic is defined as 0.
inline double heuristic_scorer(const Cube32& cube) {
    const int n = Cube32::kSide;
    std::vector<double> sorted(cube.v);
    std::sort(sorted.begin(), sorted.end());
    double median = 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);

    double total = 0, inside = 0, cx = 0, cy = 0, cz = 0;
    std::int64_t count = 0;
    const double mid = 0.5 * (n - 1);
    const double r_in = n / 2.0;
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                double m = cube.at(x, y, z) - median;
                if (m <= 0) continue;
                total += m;
                ++count;
                cx += m * x;
                cy += m * y;
                cz += m * z;
                double dx = x - mid, dy = y - mid, dz = z - mid;
                if (std::sqrt(dx * dx + dy * dy + dz * dz) <= r_in) inside += m;
            }
    if (total <= 0) return logistic(0.0);

    cx /= total;
    cy /= total;
    cz /= total;
    double rms = 0;
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                double m = cube.at(x, y, z) - median;
                if (m <= 0) continue;
                double dx = x - cx, dy = y - cy, dz = z - cz;
                rms += m * (dx * dx + dy * dy + dz * dz);
            }
    rms = std::sqrt(rms / total);
    double r_eq = std::cbrt(3.0 * static_cast<double>(count) / (4.0 * kPi));
    double rms_ball = std::sqrt(3.0 / 5.0) * r_eq;
    double sphericity = rms > 0 ? std::min(1.0, rms_ball / rms) : 1.0;

    double frac = inside / total;
    double statistic = 8.0 * sphericity * (frac - kPi / 6.0);
    return logistic(statistic);
}

// Forward pass of a cube through a bound network; dropout is inert.
inline double classify_cube(const Network& net, const Cube32& cube) {
    Tensor x = Tensor::zeros({1, Cube32::kSide, Cube32::kSide, Cube32::kSide});
    x.data = cube.v;
    Tensor y = forward(net, x);
    if (y.count() != 1) throw std::invalid_argument("classifier output is not a scalar");
    return y.data[0];
}

}  // namespace mpcad

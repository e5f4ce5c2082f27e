#pragma once

#include <cmath>
#include <stdexcept>

#include "mpcad/core.hpp"
#include "mpcad/volume.hpp"

namespace mpcad {

enum class AugmentKind { Rot90, Rot180, Rot270, FlipH, FlipV, Affine };

// m is the inverse map: it takes an OUTPUT pixel (row, col) to the input
// sampling position. Only meaningful for Affine.
struct AugmentOp {
    AugmentKind kind = AugmentKind::Rot90;
    double m[2][3] = {{1, 0, 0}, {0, 1, 0}};

    static AugmentOp rot90() { return {AugmentKind::Rot90, {}}; }
    static AugmentOp rot180() { return {AugmentKind::Rot180, {}}; }
    static AugmentOp rot270() { return {AugmentKind::Rot270, {}}; }
    static AugmentOp flip_h() { return {AugmentKind::FlipH, {}}; }
    static AugmentOp flip_v() { return {AugmentKind::FlipV, {}}; }
    static AugmentOp affine(const double mat[2][3]) {
        AugmentOp op;
        op.kind = AugmentKind::Affine;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 3; ++c) op.m[r][c] = mat[r][c];
        double det = op.m[0][0] * op.m[1][1] - op.m[0][1] * op.m[1][0];
        if (std::fabs(det) < 1e-12) throw std::invalid_argument("affine matrix is singular");
        return op;
    }
};

namespace detail {

inline double bilinear_zero_fill(const GraySlice& s, double r, double c) {
    if (r <= -1 || c <= -1 || r >= s.rows || c >= s.cols) return 0.0;
    int r0 = static_cast<int>(std::floor(r)), c0 = static_cast<int>(std::floor(c));
    double fr = r - r0, fc = c - c0;
    auto px = [&](int rr, int cc) -> double {
        if (rr < 0 || rr >= s.rows || cc < 0 || cc >= s.cols) return 0.0;
        return s.at(rr, cc);
    };
    double top = px(r0, c0) * (1 - fc) + px(r0, c0 + 1) * fc;
    double bot = px(r0 + 1, c0) * (1 - fc) + px(r0 + 1, c0 + 1) * fc;
    return top * (1 - fr) + bot * fr;
}

}  // namespace detail

// Rotations and flips are exact index remaps; rotations require a square
// slice. Rot90 is clockwise: out(r, c) = in(N-1-c, r). Affine resamples
// bilinearly through the op's inverse map with zero fill outside the slice.
inline GraySlice augment(const GraySlice& s, const AugmentOp& op) {
    bool rotation = op.kind == AugmentKind::Rot90 || op.kind == AugmentKind::Rot180 || op.kind == AugmentKind::Rot270;
    if (rotation && s.rows != s.cols) throw std::invalid_argument("rotation requires a square slice");
    GraySlice out = s;
    int H = s.rows, W = s.cols;
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            switch (op.kind) {
                case AugmentKind::Rot90: out.at(r, c) = s.at(H - 1 - c, r); break;
                case AugmentKind::Rot180: out.at(r, c) = s.at(H - 1 - r, W - 1 - c); break;
                case AugmentKind::Rot270: out.at(r, c) = s.at(c, W - 1 - r); break;
                case AugmentKind::FlipH: out.at(r, c) = s.at(r, W - 1 - c); break;
                case AugmentKind::FlipV: out.at(r, c) = s.at(H - 1 - r, c); break;
                case AugmentKind::Affine: {
                    double sr = op.m[0][0] * r + op.m[0][1] * c + op.m[0][2];
                    double sc = op.m[1][0] * r + op.m[1][1] * c + op.m[1][2];
                    double v = detail::bilinear_zero_fill(s, sr, sc);
                    out.at(r, c) = static_cast<std::uint8_t>(clamp(round_half_up(v), 0, 255));
                    break;
                }
            }
        }
    }
    return out;
}

// Seeded random affine jitter about the slice center: rotation within
// +-max_rot_deg, shear within +-max_shear, isotropic scale in
// [1-max_scale_delta, 1+max_scale_delta]. The stored matrix is the inverse
// (output-to-input) map augment() expects.
inline AugmentOp random_affine(Rng& rng, int rows, int cols, double max_rot_deg = 10.0, double max_shear = 0.1,
                               double max_scale_delta = 0.1) {
    double theta = rng.uniform(-max_rot_deg, max_rot_deg) * kPi / 180.0;
    double shear = rng.uniform(-max_shear, max_shear);
    double scale = rng.uniform(1.0 - max_scale_delta, 1.0 + max_scale_delta);

    // Forward linear part F = R(theta) * Shear(shear) * scale, applied about
    // the slice center.
    double ct = std::cos(theta), st = std::sin(theta);
    double f00 = scale * ct, f01 = scale * (ct * shear - st);
    double f10 = scale * st, f11 = scale * (st * shear + ct);
    double det = f00 * f11 - f01 * f10;
    double i00 = f11 / det, i01 = -f01 / det;
    double i10 = -f10 / det, i11 = f00 / det;
    double cr = 0.5 * (rows - 1), cc = 0.5 * (cols - 1);
    double mat[2][3] = {{i00, i01, cr - i00 * cr - i01 * cc}, {i10, i11, cc - i10 * cr - i11 * cc}};
    return AugmentOp::affine(mat);
}

}  // namespace mpcad

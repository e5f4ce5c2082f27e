#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "mpcad/core.hpp"

namespace mpcad {

struct Dim3 {
    int nx = 0, ny = 0, nz = 0;
    std::int64_t count() const {
        return static_cast<std::int64_t>(nx) * ny * nz;
    }
    bool operator==(const Dim3& o) const { return nx == o.nx && ny == o.ny && nz == o.nz; }
};

// CT volume in Hounsfield units. Values are kept as doubles in memory (the
// MPV1 file format quantizes HU to signed 16-bit on write). Voxel (i,j,k)
// is centered at origin + (i,j,k) * spacing; direction cosines are identity.
struct CtVolume {
    Dim3 dims;
    Vec3 spacing{1, 1, 1};  // mm per voxel
    Vec3 origin{0, 0, 0};   // mm, center of voxel (0,0,0)
    std::vector<double> hu;

    std::int64_t index(int x, int y, int z) const {
        return static_cast<std::int64_t>(z) * dims.ny * dims.nx + static_cast<std::int64_t>(y) * dims.nx + x;
    }
    double at(int x, int y, int z) const { return hu[index(x, y, z)]; }
    double& at(int x, int y, int z) { return hu[index(x, y, z)]; }
};

// Windowed 8-bit volume, same geometry as its source.
struct GrayVolume {
    Dim3 dims;
    Vec3 spacing{1, 1, 1};
    Vec3 origin{0, 0, 0};
    std::vector<std::uint8_t> g;

    std::int64_t index(int x, int y, int z) const {
        return static_cast<std::int64_t>(z) * dims.ny * dims.nx + static_cast<std::int64_t>(y) * dims.nx + x;
    }
    std::uint8_t at(int x, int y, int z) const { return g[index(x, y, z)]; }
    std::uint8_t& at(int x, int y, int z) { return g[index(x, y, z)]; }
};

// One extracted 2-D slice. Row/column semantics depend on the plane it came
// from; see plane_to_voxel below.
struct GraySlice {
    int rows = 0, cols = 0;
    double row_spacing_mm = 1, col_spacing_mm = 1;
    std::vector<std::uint8_t> g;

    std::int64_t index(int r, int c) const { return static_cast<std::int64_t>(r) * cols + c; }
    std::uint8_t at(int r, int c) const { return g[index(r, c)]; }
    std::uint8_t& at(int r, int c) { return g[index(r, c)]; }
};

enum class PlaneAxis { Axial, Coronal, Sagittal };

inline const char* plane_name(PlaneAxis a) {
    switch (a) {
        case PlaneAxis::Axial: return "axial";
        case PlaneAxis::Coronal: return "coronal";
        default: return "sagittal";
    }
}

struct WindowSpec {
    double lo_hu = -1000.0;
    double hi_hu = 400.0;
    int out_max = 255;
};

struct MipSpec {
    PlaneAxis axis = PlaneAxis::Axial;
    double thickness_mm = 10.0;
    double stride_mm = 1.0;
};

inline void validate(const Dim3& d) {
    if (d.nx < 1 || d.ny < 1 || d.nz < 1)
        throw std::invalid_argument("volume dims must all be >= 1");
}

inline void validate(const CtVolume& v) {
    validate(v.dims);
    if (v.spacing.x <= 0 || v.spacing.y <= 0 || v.spacing.z <= 0)
        throw std::invalid_argument("volume spacing must be positive");
    if (static_cast<std::int64_t>(v.hu.size()) != v.dims.count())
        throw std::invalid_argument("voxel count does not match dims");
}

inline void validate(const GrayVolume& v) {
    validate(v.dims);
    if (v.spacing.x <= 0 || v.spacing.y <= 0 || v.spacing.z <= 0)
        throw std::invalid_argument("volume spacing must be positive");
    if (static_cast<std::int64_t>(v.g.size()) != v.dims.count())
        throw std::invalid_argument("voxel count does not match dims");
}

inline void validate(const WindowSpec& w) {
    if (!(w.lo_hu < w.hi_hu)) throw std::invalid_argument("window lo_hu must be < hi_hu");
    if (w.out_max < 1 || w.out_max > 255) throw std::invalid_argument("window out_max must be in [1,255]");
}

inline void validate(const MipSpec& m) {
    if (!(m.stride_mm > 0)) throw std::invalid_argument("mip stride_mm must be > 0");
    if (!(m.thickness_mm >= m.stride_mm)) throw std::invalid_argument("mip thickness_mm must be >= stride_mm");
}

// --- geometry -------------------------------------------------------------

inline Vec3 voxel_to_world(const Vec3& spacing, const Vec3& origin, double ix, double iy, double iz) {
    return {origin.x + ix * spacing.x, origin.y + iy * spacing.y, origin.z + iz * spacing.z};
}

template <typename Volume>
Vec3 voxel_to_world(const Volume& v, const Index3& idx) {
    if (idx.x < 0 || idx.x >= v.dims.nx || idx.y < 0 || idx.y >= v.dims.ny || idx.z < 0 || idx.z >= v.dims.nz)
        throw std::out_of_range("voxel index outside volume dims");
    return voxel_to_world(v.spacing, v.origin, idx.x, idx.y, idx.z);
}

template <typename Volume>
Vec3 world_to_voxel_continuous(const Volume& v, const Vec3& p) {
    return {(p.x - v.origin.x) / v.spacing.x, (p.y - v.origin.y) / v.spacing.y, (p.z - v.origin.z) / v.spacing.z};
}

// Nearest-voxel inverse of voxel_to_world; exact on round-trips.
template <typename Volume>
Index3 world_to_voxel(const Volume& v, const Vec3& p) {
    Vec3 c = world_to_voxel_continuous(v, p);
    Index3 idx{round_half_up(c.x), round_half_up(c.y), round_half_up(c.z)};
    if (idx.x < 0 || idx.x >= v.dims.nx || idx.y < 0 || idx.y >= v.dims.ny || idx.z < 0 || idx.z >= v.dims.nz)
        throw std::out_of_range("world point outside volume bounds");
    return idx;
}

// (row, col) -> voxel index map for each plane:
//   axial slice k:    (row, col) = (y, x)
//   coronal slice j:  (row, col) = (z, x)
//   sagittal slice i: (row, col) = (z, y)
inline Index3 plane_to_voxel(PlaneAxis axis, int slice, int row, int col) {
    switch (axis) {
        case PlaneAxis::Axial: return {col, row, slice};
        case PlaneAxis::Coronal: return {col, slice, row};
        default: return {slice, col, row};
    }
}

// Same map on continuous coordinates.
inline Vec3 plane_to_voxel_continuous(PlaneAxis axis, double slice, double row, double col) {
    switch (axis) {
        case PlaneAxis::Axial: return {col, row, slice};
        case PlaneAxis::Coronal: return {col, slice, row};
        default: return {slice, col, row};
    }
}

inline int plane_axis_extent(const Dim3& d, PlaneAxis axis) {
    switch (axis) {
        case PlaneAxis::Axial: return d.nz;
        case PlaneAxis::Coronal: return d.ny;
        default: return d.nx;
    }
}

inline double plane_axis_spacing(const Vec3& spacing, PlaneAxis axis) {
    switch (axis) {
        case PlaneAxis::Axial: return spacing.z;
        case PlaneAxis::Coronal: return spacing.y;
        default: return spacing.x;
    }
}

// --- windowing ------------------------------------------------------------

// Clamp-then-linear map of HU into [0, out_max], rounded half-up.
inline std::uint8_t window_value(double h, const WindowSpec& w) {
    double c = clamp(h, w.lo_hu, w.hi_hu);
    return static_cast<std::uint8_t>(round_half_up(w.out_max * (c - w.lo_hu) / (w.hi_hu - w.lo_hu)));
}

inline GrayVolume apply_window(const CtVolume& v, const WindowSpec& w = {}) {
    validate(v);
    validate(w);
    GrayVolume out;
    out.dims = v.dims;
    out.spacing = v.spacing;
    out.origin = v.origin;
    out.g.resize(v.hu.size());
    for (std::size_t i = 0; i < v.hu.size(); ++i) out.g[i] = window_value(v.hu[i], w);
    return out;
}

// --- resampling -----------------------------------------------------------

namespace detail {

// Trilinear sample at a continuous voxel index, clamp-to-edge outside the
// grid. A dim-1 axis degenerates to nearest-value extension.
inline double sample_trilinear_clamped(const CtVolume& v, double xf, double yf, double zf) {
    xf = clamp(xf, 0.0, static_cast<double>(v.dims.nx - 1));
    yf = clamp(yf, 0.0, static_cast<double>(v.dims.ny - 1));
    zf = clamp(zf, 0.0, static_cast<double>(v.dims.nz - 1));
    int x0 = static_cast<int>(std::floor(xf)), y0 = static_cast<int>(std::floor(yf)), z0 = static_cast<int>(std::floor(zf));
    int x1 = std::min(x0 + 1, v.dims.nx - 1), y1 = std::min(y0 + 1, v.dims.ny - 1), z1 = std::min(z0 + 1, v.dims.nz - 1);
    double fx = xf - x0, fy = yf - y0, fz = zf - z0;
    double c00 = v.at(x0, y0, z0) * (1 - fx) + v.at(x1, y0, z0) * fx;
    double c10 = v.at(x0, y1, z0) * (1 - fx) + v.at(x1, y1, z0) * fx;
    double c01 = v.at(x0, y0, z1) * (1 - fx) + v.at(x1, y0, z1) * fx;
    double c11 = v.at(x0, y1, z1) * (1 - fx) + v.at(x1, y1, z1) * fx;
    double c0 = c00 * (1 - fy) + c10 * fy;
    double c1 = c01 * (1 - fy) + c11 * fy;
    return c0 * (1 - fz) + c1 * fz;
}

}  // namespace detail

// Resample to isotropic spacing by trilinear interpolation. Output dims are
// round(dim_i * s_i / target) per axis (minimum 1); the origin is preserved,
// so output voxel j samples the input at continuous index j * target / s_i.
// Samples past the last voxel clamp to the edge.
inline CtVolume resample_isotropic(const CtVolume& v, double target_mm = 1.0) {
    validate(v);
    if (!(target_mm > 0)) throw std::invalid_argument("resample target_mm must be > 0");
    CtVolume out;
    out.dims.nx = std::max(1, round_half_up(v.dims.nx * v.spacing.x / target_mm));
    out.dims.ny = std::max(1, round_half_up(v.dims.ny * v.spacing.y / target_mm));
    out.dims.nz = std::max(1, round_half_up(v.dims.nz * v.spacing.z / target_mm));
    out.spacing = {target_mm, target_mm, target_mm};
    out.origin = v.origin;
    out.hu.resize(static_cast<std::size_t>(out.dims.count()));
    double rx = target_mm / v.spacing.x, ry = target_mm / v.spacing.y, rz = target_mm / v.spacing.z;
    std::int64_t o = 0;
    for (int z = 0; z < out.dims.nz; ++z) {
        for (int y = 0; y < out.dims.ny; ++y) {
            for (int x = 0; x < out.dims.nx; ++x, ++o) {
                out.hu[o] = detail::sample_trilinear_clamped(v, x * rx, y * ry, z * rz);
            }
        }
    }
    return out;
}

// --- plane extraction -----------------------------------------------------

inline GraySlice extract_plane_slice(const GrayVolume& g, PlaneAxis axis, int index) {
    validate(g);
    int extent = plane_axis_extent(g.dims, axis);
    if (index < 0 || index >= extent) throw std::out_of_range("plane slice index out of range");
    GraySlice s;
    switch (axis) {
        case PlaneAxis::Axial:
            s.rows = g.dims.ny; s.cols = g.dims.nx;
            s.row_spacing_mm = g.spacing.y; s.col_spacing_mm = g.spacing.x;
            break;
        case PlaneAxis::Coronal:
            s.rows = g.dims.nz; s.cols = g.dims.nx;
            s.row_spacing_mm = g.spacing.z; s.col_spacing_mm = g.spacing.x;
            break;
        case PlaneAxis::Sagittal:
            s.rows = g.dims.nz; s.cols = g.dims.ny;
            s.row_spacing_mm = g.spacing.z; s.col_spacing_mm = g.spacing.y;
            break;
    }
    s.g.resize(static_cast<std::size_t>(s.rows) * s.cols);
    for (int r = 0; r < s.rows; ++r) {
        for (int c = 0; c < s.cols; ++c) {
            Index3 v = plane_to_voxel(axis, index, r, c);
            s.at(r, c) = g.at(v.x, v.y, v.z);
        }
    }
    return s;
}

// --- MIP slabs ------------------------------------------------------------

struct SlabWindow {
    int begin = 0, end = 0;  // half-open range of source slice indices
};

// Window placement for mip_slab: k = round(thickness/voxel) slices per slab,
// one slab every round(stride/voxel) slices, trailing slabs truncated at the
// axis extent. k wider than the whole axis collapses to a single full-extent
// slab.
inline std::vector<SlabWindow> mip_windows(int axis_extent, double voxel_mm, const MipSpec& spec) {
    validate(spec);
    if (axis_extent < 1) throw std::invalid_argument("axis extent must be >= 1");
    int k = std::max(1, round_half_up(spec.thickness_mm / voxel_mm));
    int stride = std::max(1, round_half_up(spec.stride_mm / voxel_mm));
    if (k > axis_extent) return {SlabWindow{0, axis_extent}};
    std::vector<SlabWindow> out;
    for (int start = 0; start < axis_extent; start += stride)
        out.push_back(SlabWindow{start, std::min(start + k, axis_extent)});
    return out;
}

// Maximum intensity projection slabs along spec.axis. g must already be
// isotropically resampled.
inline std::vector<GraySlice> mip_slab(const GrayVolume& g, const MipSpec& spec) {
    validate(g);
    int extent = plane_axis_extent(g.dims, spec.axis);
    double voxel_mm = plane_axis_spacing(g.spacing, spec.axis);
    std::vector<SlabWindow> windows = mip_windows(extent, voxel_mm, spec);
    std::vector<GraySlice> slabs;
    slabs.reserve(windows.size());
    for (const SlabWindow& w : windows) {
        GraySlice slab = extract_plane_slice(g, spec.axis, w.begin);
        for (int s = w.begin + 1; s < w.end; ++s) {
            GraySlice next = extract_plane_slice(g, spec.axis, s);
            for (std::size_t i = 0; i < slab.g.size(); ++i) slab.g[i] = std::max(slab.g[i], next.g[i]);
        }
        slabs.push_back(std::move(slab));
    }
    return slabs;
}

}  // namespace mpcad

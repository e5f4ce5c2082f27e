#pragma once

#include <algorithm>
#include <memory>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "mpcad/lungseg.hpp"
#include "mpcad/morphology.hpp"
#include "mpcad/volume.hpp"

namespace mpcad {

// Candidate provenance. Serialized names are part of the CSV contract.
enum class Source { Axial1mm, Coronal1mm, Sagittal1mm, AxialMip10mm, Fused };

inline const char* source_name(Source s) {
    switch (s) {
        case Source::Axial1mm: return "axial_1mm";
        case Source::Coronal1mm: return "coronal_1mm";
        case Source::Sagittal1mm: return "sagittal_1mm";
        case Source::AxialMip10mm: return "axial_mip_10mm";
        default: return "fused";
    }
}

inline Source source_from_name(const std::string& n) {
    if (n == "axial_1mm") return Source::Axial1mm;
    if (n == "coronal_1mm") return Source::Coronal1mm;
    if (n == "sagittal_1mm") return Source::Sagittal1mm;
    if (n == "axial_mip_10mm") return Source::AxialMip10mm;
    if (n == "fused") return Source::Fused;
    throw std::invalid_argument("unknown candidate source: " + n);
}

struct Box2D {
    int slice_index = 0;
    PlaneAxis axis = PlaneAxis::Axial;
    int row_min = 0, row_max = 0, col_min = 0, col_max = 0;
    double score = 0;

    double center_row() const { return 0.5 * (row_min + row_max); }
    double center_col() const { return 0.5 * (col_min + col_max); }
};

struct Candidate {
    std::string scan_id;
    Vec3 center_mm;
    double radius_mm = 0;
    double score = 0;
    Source source = Source::Fused;
};

// Pluggable per-slice detector. Implementations must be deterministic and
// safe for concurrent read-only use.
class DetectorPort {
public:
    virtual ~DetectorPort() = default;
    virtual std::vector<Box2D> detect(const GraySlice& s) const = 0;
};

inline std::vector<Box2D> detect_slice(const GraySlice& s, const DetectorPort& detector) {
    return detector.detect(s);
}

struct DetectParams {
    int threshold = 140;       // pixel >= threshold is foreground
    std::int64_t min_area = 4;  // px^2, inclusive
    std::int64_t max_area = 10000;
};

// Deterministic stand-in for a trained slice detector: bounding boxes of
// 8-connected components of {pixel >= thresh} with area in [min_area,
// max_area]; score is the component's mean intensity / 255.
inline std::vector<Box2D> reference_blob_detect(const GraySlice& s, int thresh, std::int64_t min_area,
                                                std::int64_t max_area) {
    if (thresh < 0 || thresh > 255) throw std::invalid_argument("blob threshold must be in [0,255]");
    BinaryMask2D m = BinaryMask2D::zeros(s.rows, s.cols);
    for (std::size_t i = 0; i < s.g.size(); ++i)
        if (s.g[i] >= thresh) m.bits[i] = 1;
    Labeling lab = connected_components(m, 8);
    std::vector<double> sums(lab.components.size() + 1, 0.0);
    for (std::size_t i = 0; i < s.g.size(); ++i)
        if (lab.labels[i]) sums[lab.labels[i]] += s.g[i];
    std::vector<Box2D> out;
    for (const Component& c : lab.components) {
        if (c.area < min_area || c.area > max_area) continue;
        Box2D b;
        b.row_min = c.row_min;
        b.row_max = c.row_max;
        b.col_min = c.col_min;
        b.col_max = c.col_max;
        b.score = sums[c.label] / (255.0 * static_cast<double>(c.area));
        out.push_back(b);
    }
    return out;
}

class ReferenceBlobDetector : public DetectorPort {
public:
    explicit ReferenceBlobDetector(const DetectParams& p = {}) : p_(p) {}
    std::vector<Box2D> detect(const GraySlice& s) const override {
        return reference_blob_detect(s, p_.threshold, p_.min_area, p_.max_area);
    }

private:
    DetectParams p_;
};

// Geometry of one detection stream: how a stream slice index plus in-plane
// (row, col) maps back into the source volume's world frame. Plane streams
// have one slice per voxel layer; MIP streams have one slice per slab, whose
// axis coordinate is the slab center (so slab geometry stays explicit).
struct StreamGeometry {
    Source source = Source::Axial1mm;
    PlaneAxis axis = PlaneAxis::Axial;
    Vec3 spacing{1, 1, 1};
    Vec3 origin{0, 0, 0};
    std::vector<double> slice_coord;  // continuous voxel index along axis, per stream slice
    double step_index = 1;            // axis index distance between adjacent stream slices

    double axis_spacing() const { return plane_axis_spacing(spacing, axis); }
    double row_spacing() const {
        switch (axis) {
            case PlaneAxis::Axial: return spacing.y;
            default: return spacing.z;
        }
    }
    double col_spacing() const {
        switch (axis) {
            case PlaneAxis::Sagittal: return spacing.y;
            default: return spacing.x;
        }
    }
    Vec3 world(int slice, double row, double col) const {
        Vec3 v = plane_to_voxel_continuous(axis, slice_coord[static_cast<std::size_t>(slice)], row, col);
        return voxel_to_world(spacing, origin, v.x, v.y, v.z);
    }
};

template <typename Volume>
StreamGeometry plane_stream_geometry(const Volume& v, PlaneAxis axis, Source source) {
    StreamGeometry g;
    g.source = source;
    g.axis = axis;
    g.spacing = v.spacing;
    g.origin = v.origin;
    int n = plane_axis_extent(v.dims, axis);
    g.slice_coord.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g.slice_coord[static_cast<std::size_t>(i)] = i;
    g.step_index = 1;
    return g;
}

template <typename Volume>
StreamGeometry mip_stream_geometry(const Volume& v, const MipSpec& spec, Source source) {
    StreamGeometry g;
    g.source = source;
    g.axis = spec.axis;
    g.spacing = v.spacing;
    g.origin = v.origin;
    int extent = plane_axis_extent(v.dims, spec.axis);
    double voxel = plane_axis_spacing(v.spacing, spec.axis);
    std::vector<SlabWindow> windows = mip_windows(extent, voxel, spec);
    g.slice_coord.reserve(windows.size());
    for (const SlabWindow& w : windows) g.slice_coord.push_back(0.5 * (w.begin + w.end - 1));
    g.step_index = std::max(1, round_half_up(spec.stride_mm / voxel));
    return g;
}

struct GroupParams {
    double link_dist_mm = 5.0;
};

// Chain 2-D boxes into 3-D candidates: boxes on consecutive stream slices
// whose in-plane centers lie within link_dist_mm join one chain (transitively).
// Chain center: score-weighted mean of member box centers in world mm (plain
// mean when all scores are zero). Radius: half the larger of the biggest
// in-plane box side and the chain's extent along the slicing axis. Score: max.
inline std::vector<Candidate> group_boxes(const std::vector<Box2D>& boxes, const StreamGeometry& geom,
                                          const GroupParams& gp = {}, const std::string& scan_id = {}) {
    std::vector<std::size_t> order(boxes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const Box2D &x = boxes[a], &y = boxes[b];
        return std::tie(x.slice_index, x.row_min, x.col_min, x.row_max, x.col_max, x.score) <
               std::tie(y.slice_index, y.row_min, y.col_min, y.row_max, y.col_max, y.score);
    });

    std::vector<std::size_t> parent(boxes.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    auto unite = [&](std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };

    double rs = geom.row_spacing(), cs = geom.col_spacing();
    for (std::size_t ia = 0; ia < order.size(); ++ia) {
        const Box2D& a = boxes[order[ia]];
        for (std::size_t ib = ia + 1; ib < order.size(); ++ib) {
            const Box2D& b = boxes[order[ib]];
            if (b.slice_index > a.slice_index + 1) break;
            if (b.slice_index != a.slice_index + 1) continue;
            double dr = (a.center_row() - b.center_row()) * rs;
            double dc = (a.center_col() - b.center_col()) * cs;
            if (std::sqrt(dr * dr + dc * dc) <= gp.link_dist_mm) unite(order[ia], order[ib]);
        }
    }

    std::vector<Candidate> cands;
    for (std::size_t ri = 0; ri < order.size(); ++ri) {
        std::size_t root = order[ri];
        if (find(root) != root) continue;
        double wsum = 0, score = 0, side_mm = 0;
        double coord_min = 0, coord_max = 0;
        Vec3 wc{0, 0, 0}, uc{0, 0, 0};
        std::size_t n = 0;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            if (find(i) != root) continue;
            const Box2D& b = boxes[i];
            Vec3 p = geom.world(b.slice_index, b.center_row(), b.center_col());
            wc.x += b.score * p.x;
            wc.y += b.score * p.y;
            wc.z += b.score * p.z;
            uc.x += p.x;
            uc.y += p.y;
            uc.z += p.z;
            wsum += b.score;
            score = std::max(score, b.score);
            side_mm = std::max(side_mm, std::max((b.row_max - b.row_min + 1) * rs, (b.col_max - b.col_min + 1) * cs));
            double coord = geom.slice_coord[static_cast<std::size_t>(b.slice_index)];
            if (n == 0) {
                coord_min = coord_max = coord;
            } else {
                coord_min = std::min(coord_min, coord);
                coord_max = std::max(coord_max, coord);
            }
            ++n;
        }
        Candidate c;
        c.scan_id = scan_id;
        if (wsum > 0) {
            c.center_mm = {wc.x / wsum, wc.y / wsum, wc.z / wsum};
        } else {
            c.center_mm = {uc.x / static_cast<double>(n), uc.y / static_cast<double>(n), uc.z / static_cast<double>(n)};
        }
        double extent_mm = (coord_max - coord_min + geom.step_index) * geom.axis_spacing();
        c.radius_mm = 0.5 * std::max(side_mm, extent_mm);
        c.score = score;
        c.source = geom.source;
        cands.push_back(c);
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::tie(a.center_mm.x, a.center_mm.y, a.center_mm.z) <
               std::tie(b.center_mm.x, b.center_mm.y, b.center_mm.z);
    });
    return cands;
}

// Run one detector over a stack of stream slices and stamp stream indices.
inline std::vector<Box2D> detect_slices(const std::vector<GraySlice>& slices, const DetectorPort& detector,
                                        PlaneAxis axis) {
    std::vector<Box2D> all;
    for (std::size_t i = 0; i < slices.size(); ++i) {
        std::vector<Box2D> bs = detector.detect(slices[i]);
        for (Box2D& b : bs) {
            b.slice_index = static_cast<int>(i);
            b.axis = axis;
            all.push_back(b);
        }
    }
    return all;
}

}  // namespace mpcad

#pragma once

#include <cstdint>

#include "mpcad/morphology.hpp"
#include "mpcad/volume.hpp"

namespace mpcad {

struct SegParams {
    int close_radius = 3;   // 0 disables the closing step
    int dilate_radius = 2;  // 0 disables the final dilation
};

// Lung mask for one gray slice:
//   1. threshold strictly below the slice mean (air and lung are dark),
//   2. drop 8-connected components touching the image border (ambient air),
//   3. morphological closing to seal vessel holes,
//   4. dilation to recover nodules attached to the pleural wall.
inline BinaryMask2D segment_lung_slice(const GraySlice& slice, const SegParams& p = {}) {
    BinaryMask2D m = BinaryMask2D::zeros(slice.rows, slice.cols);
    double sum = 0;
    for (std::uint8_t v : slice.g) sum += v;
    double mean = slice.g.empty() ? 0.0 : sum / static_cast<double>(slice.g.size());
    for (std::size_t i = 0; i < slice.g.size(); ++i)
        if (static_cast<double>(slice.g[i]) < mean) m.bits[i] = 1;

    Labeling lab = connected_components(m, 8);
    for (const Component& comp : lab.components) {
        if (!comp.touches_border) continue;
        for (std::size_t i = 0; i < m.bits.size(); ++i)
            if (lab.labels[i] == comp.label) m.bits[i] = 0;
    }

    if (p.close_radius > 0) m = close(m, StructuringElement::disk(p.close_radius));
    if (p.dilate_radius > 0) m = dilate(m, StructuringElement::disk(p.dilate_radius));
    return m;
}

// Keep pixels under the mask, replace the rest with fill.
inline GraySlice apply_mask(const GraySlice& slice, const BinaryMask2D& mask, std::uint8_t fill = 0) {
    if (mask.rows != slice.rows || mask.cols != slice.cols)
        throw std::invalid_argument("mask shape does not match slice");
    GraySlice out = slice;
    for (std::size_t i = 0; i < out.g.size(); ++i)
        if (!mask.bits[i]) out.g[i] = fill;
    return out;
}

}  // namespace mpcad

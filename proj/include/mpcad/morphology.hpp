#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mpcad/core.hpp"

namespace mpcad {

struct BinaryMask2D {
    int rows = 0, cols = 0;
    std::vector<std::uint8_t> bits;  // 0 or 1

    static BinaryMask2D zeros(int rows, int cols) {
        BinaryMask2D m;
        m.rows = rows;
        m.cols = cols;
        m.bits.assign(static_cast<std::size_t>(rows) * cols, 0);
        return m;
    }
    std::int64_t index(int r, int c) const { return static_cast<std::int64_t>(r) * cols + c; }
    std::uint8_t at(int r, int c) const { return bits[index(r, c)]; }
    std::uint8_t& at(int r, int c) { return bits[index(r, c)]; }
    bool operator==(const BinaryMask2D& o) const { return rows == o.rows && cols == o.cols && bits == o.bits; }
};

// Flat structuring elements. Disk(r) is the digital disk dx^2 + dy^2 <= r^2.
struct StructuringElement {
    enum class Shape { Square3, Disk };
    Shape shape = Shape::Square3;
    int radius = 1;

    static StructuringElement square3() { return {Shape::Square3, 1}; }
    static StructuringElement disk(int r) {
        if (r < 1) throw std::invalid_argument("structuring element radius must be >= 1");
        return {Shape::Disk, r};
    }

    std::vector<std::pair<int, int>> offsets() const {
        std::vector<std::pair<int, int>> out;
        if (shape == Shape::Square3) {
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) out.emplace_back(dr, dc);
            return out;
        }
        for (int dr = -radius; dr <= radius; ++dr)
            for (int dc = -radius; dc <= radius; ++dc)
                if (dr * dr + dc * dc <= radius * radius) out.emplace_back(dr, dc);
        return out;
    }
};

// Minkowski dilation with zero padding outside the image.
inline BinaryMask2D dilate(const BinaryMask2D& m, const StructuringElement& se) {
    BinaryMask2D out = BinaryMask2D::zeros(m.rows, m.cols);
    auto offs = se.offsets();
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) {
            if (!m.at(r, c)) continue;
            for (auto [dr, dc] : offs) {
                int rr = r + dr, cc = c + dc;
                if (rr >= 0 && rr < m.rows && cc >= 0 && cc < m.cols) out.at(rr, cc) = 1;
            }
        }
    }
    return out;
}

inline BinaryMask2D erode(const BinaryMask2D& m, const StructuringElement& se) {
    BinaryMask2D out = BinaryMask2D::zeros(m.rows, m.cols);
    auto offs = se.offsets();
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) {
            bool all = true;
            for (auto [dr, dc] : offs) {
                int rr = r + dr, cc = c + dc;
                if (rr < 0 || rr >= m.rows || cc < 0 || cc >= m.cols || !m.at(rr, cc)) {
                    all = false;
                    break;
                }
            }
            if (all) out.at(r, c) = 1;
        }
    }
    return out;
}

inline BinaryMask2D close(const BinaryMask2D& m, const StructuringElement& se) {
    return erode(dilate(m, se), se);
}

struct Component {
    int label = 0;
    std::int64_t area = 0;
    int row_min = 0, row_max = 0, col_min = 0, col_max = 0;
    bool touches_border = false;
};

struct Labeling {
    std::vector<std::int32_t> labels;  // 0 = background, components dense from 1
    std::vector<Component> components;

    int rows = 0, cols = 0;
    std::int32_t label_at(int r, int c) const { return labels[static_cast<std::int64_t>(r) * cols + c]; }
};

// Connected components by BFS flood fill, 4- or 8-connectivity. Labels are
// assigned in raster-scan order of each component's first pixel.
inline Labeling connected_components(const BinaryMask2D& m, int connectivity = 8) {
    if (connectivity != 4 && connectivity != 8) throw std::invalid_argument("connectivity must be 4 or 8");
    Labeling out;
    out.rows = m.rows;
    out.cols = m.cols;
    out.labels.assign(m.bits.size(), 0);
    static const int d4[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
    static const int d8[8][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
    const int(*dirs)[2] = connectivity == 4 ? d4 : d8;
    int ndirs = connectivity;
    std::vector<std::int64_t> stack;
    std::int32_t next = 1;
    for (std::int64_t start = 0; start < static_cast<std::int64_t>(m.bits.size()); ++start) {
        if (!m.bits[start] || out.labels[start]) continue;
        Component comp;
        comp.label = next;
        comp.row_min = comp.row_max = static_cast<int>(start / m.cols);
        comp.col_min = comp.col_max = static_cast<int>(start % m.cols);
        out.labels[start] = next;
        stack.assign(1, start);
        while (!stack.empty()) {
            std::int64_t i = stack.back();
            stack.pop_back();
            int r = static_cast<int>(i / m.cols), c = static_cast<int>(i % m.cols);
            ++comp.area;
            comp.row_min = std::min(comp.row_min, r);
            comp.row_max = std::max(comp.row_max, r);
            comp.col_min = std::min(comp.col_min, c);
            comp.col_max = std::max(comp.col_max, c);
            if (r == 0 || r == m.rows - 1 || c == 0 || c == m.cols - 1) comp.touches_border = true;
            for (int k = 0; k < ndirs; ++k) {
                int rr = r + dirs[k][0], cc = c + dirs[k][1];
                if (rr < 0 || rr >= m.rows || cc < 0 || cc >= m.cols) continue;
                std::int64_t j = static_cast<std::int64_t>(rr) * m.cols + cc;
                if (m.bits[j] && !out.labels[j]) {
                    out.labels[j] = next;
                    stack.push_back(j);
                }
            }
        }
        out.components.push_back(comp);
        ++next;
    }
    return out;
}

}  // namespace mpcad

#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpcad {

// Dense value tensor, row-major with the last extent fastest (for a
// (C, D, H, W) tensor the W axis is contiguous, matching volume storage).
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    static Tensor zeros(std::vector<int> shape) {
        Tensor t;
        t.shape = std::move(shape);
        t.data.assign(static_cast<std::size_t>(count_of(t.shape)), 0.0);
        return t;
    }

    static std::int64_t count_of(const std::vector<int>& shape) {
        std::int64_t n = 1;
        for (int e : shape) {
            if (e < 1) throw std::invalid_argument("tensor extents must be >= 1");
            n *= e;
        }
        return n;
    }

    std::int64_t count() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }

    // (C, D, H, W) accessors for the 4-d case.
    std::int64_t index4(int c, int d, int h, int w) const {
        return ((static_cast<std::int64_t>(c) * shape[1] + d) * shape[2] + h) * shape[3] + w;
    }
    double at4(int c, int d, int h, int w) const { return data[index4(c, d, h, w)]; }
    double& at4(int c, int d, int h, int w) { return data[index4(c, d, h, w)]; }
};

inline std::string shape_string(const std::vector<int>& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

}  // namespace mpcad

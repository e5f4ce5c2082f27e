#pragma once

#include <algorithm>
#include <numeric>
#include <tuple>
#include <vector>

#include "mpcad/detect.hpp"

namespace mpcad {

// The published merge rule compares the larger candidate radius r against
// 0.88 times the center distance d. Read literally ("merged if r < 0.88*d")
// it joins far-apart findings and keeps overlapping ones separate, which
// contradicts its duplicate-removal purpose, so the default mode inverts the
// inequality; the literal reading stays available.
struct MergeRule {
    enum class Mode { Proximity, LiteralPaper };
    Mode mode = Mode::Proximity;
    double factor = 0.88;
};

inline bool merge_predicate(const Candidate& a, const Candidate& b, const MergeRule& rule = {}) {
    if (!(rule.factor > 0)) throw std::invalid_argument("merge factor must be > 0");
    double d = norm(a.center_mm - b.center_mm);
    double r = std::max(a.radius_mm, b.radius_mm);
    if (rule.mode == MergeRule::Mode::LiteralPaper) return r < rule.factor * d;
    return rule.factor * d <= r;
}

// Union join of candidate streams: pool everything, connect pairs satisfying
// the merge predicate, and collapse each connected component to one fused
// candidate (score-weighted mean center, max radius, max score). Output is
// sorted by descending score, ties broken by center coordinates, so the
// result is independent of stream order and intra-stream order.
inline std::vector<Candidate> fuse_streams(const std::vector<std::vector<Candidate>>& streams,
                                           const MergeRule& rule = {}) {
    std::vector<Candidate> all;
    for (const auto& s : streams) all.insert(all.end(), s.begin(), s.end());
    if (all.empty()) return {};

    // Canonical processing order makes the collapse arithmetic independent of
    // how the inputs were arranged.
    std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.center_mm.x, a.center_mm.y, a.center_mm.z, a.radius_mm, a.score, a.source) <
               std::tie(b.center_mm.x, b.center_mm.y, b.center_mm.z, b.radius_mm, b.score, b.source);
    });

    std::vector<std::size_t> parent(all.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = i + 1; j < all.size(); ++j) {
            if (!merge_predicate(all[i], all[j], rule)) continue;
            std::size_t a = find(i), b = find(j);
            if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
    }

    std::vector<Candidate> out;
    for (std::size_t root = 0; root < all.size(); ++root) {
        if (find(root) != root) continue;
        double wsum = 0, radius = 0, score = 0;
        Vec3 wc{0, 0, 0}, uc{0, 0, 0};
        std::size_t n = 0;
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (find(i) != root) continue;
            const Candidate& c = all[i];
            wc = wc + c.center_mm * c.score;
            uc = uc + c.center_mm;
            wsum += c.score;
            radius = std::max(radius, c.radius_mm);
            score = std::max(score, c.score);
            ++n;
        }
        Candidate f;
        f.scan_id = all[root].scan_id;
        f.center_mm = wsum > 0 ? wc * (1.0 / wsum) : uc * (1.0 / static_cast<double>(n));
        f.radius_mm = radius;
        f.score = score;
        f.source = Source::Fused;
        out.push_back(f);
    }
    std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::tie(a.center_mm.x, a.center_mm.y, a.center_mm.z) <
               std::tie(b.center_mm.x, b.center_mm.y, b.center_mm.z);
    });
    return out;
}

}  // namespace mpcad

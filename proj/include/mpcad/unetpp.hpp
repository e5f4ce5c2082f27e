#pragma once

#include <stdexcept>
#include <vector>

namespace mpcad {

// Topology and shape inference for the nested-skip encoder/decoder grid.
// Only structure is modeled here; the grid is never executed numerically.
//
// Nodes X^{i,j} form the triangle {i + j <= L} plus one extra "ultimate"
// concatenation node per level above the bottom: X^{L-1,2}, ..., X^{0,L+1}.
// Every node with j >= 1 receives skip edges from X^{i,0..j-1} and one
// upsample edge from the deepest-stage level-(i+1) node with stage <= j-1
// (which is X^{i+1,j-1} inside the triangle, and the previous ultimate node
// along the terminal chain).

enum class UnetEdgeKind { Upsample, Skip, Conv };

struct UnetNode {
    int level = 0;     // i: 0 = full resolution
    int stage = 0;     // j: 0 = encoder column
    int channels = 0;  // 0 = unspecified backbone feature width
    int side = 0;      // spatial extent (square slices)
};

struct UnetEdge {
    int from_level = 0, from_stage = 0;
    int to_level = 0, to_stage = 0;
    UnetEdgeKind kind = UnetEdgeKind::Skip;
};

struct UnetPPTopology {
    int levels = 4;
    int input_side = 512;
    std::vector<UnetNode> nodes;
    std::vector<UnetEdge> edges;

    const UnetNode* find(int level, int stage) const {
        for (const UnetNode& n : nodes)
            if (n.level == level && n.stage == stage) return &n;
        return nullptr;
    }
    int in_degree(int level, int stage) const {
        int d = 0;
        for (const UnetEdge& e : edges)
            if (e.to_level == level && e.to_stage == stage && e.kind != UnetEdgeKind::Conv) ++d;
        return d;
    }
};

// Decoder module m (stage j = m) runs decoder_base / 2^(m-1) channels; the
// final module's width is not pinned down by its description ("almost the
// same" as the one before), so by default it repeats the previous module.
inline int unetpp_module_channels(int stage, int levels, int decoder_base, bool last_repeats_previous = true) {
    if (stage < 1 || stage > levels + 1) throw std::invalid_argument("decoder stage out of range");
    if (stage <= levels) return decoder_base >> (stage - 1);
    int last = decoder_base >> (levels - 1);
    return last_repeats_previous ? last : last >> 1;
}

inline UnetPPTopology build_unetpp_topology(int levels = 4, int mid_channels = 256, int decoder_base = 128,
                                            int input_side = 512, bool last_repeats_previous = true) {
    if (levels < 1) throw std::invalid_argument("unetpp levels must be >= 1");
    if (mid_channels < 1 || decoder_base < 1) throw std::invalid_argument("unetpp channel counts must be >= 1");
    UnetPPTopology t;
    t.levels = levels;
    t.input_side = input_side;

    auto add_node = [&](int i, int j) {
        UnetNode n;
        n.level = i;
        n.stage = j;
        n.side = input_side >> i;
        if (j == 0)
            n.channels = i == levels ? mid_channels : 0;
        else
            n.channels = unetpp_module_channels(j, levels, decoder_base, last_repeats_previous);
        t.nodes.push_back(n);
    };
    for (int i = 0; i <= levels; ++i)
        for (int j = 0; i + j <= levels; ++j) add_node(i, j);
    for (int i = levels - 1; i >= 0; --i) add_node(i, levels + 1 - i);  // ultimate nodes

    // Encoder chain.
    for (int i = 0; i < levels; ++i)
        t.edges.push_back({i, 0, i + 1, 0, UnetEdgeKind::Conv});

    auto max_stage_at = [&](int level, int cap) {
        int best = -1;
        for (const UnetNode& n : t.nodes)
            if (n.level == level && n.stage <= cap) best = std::max(best, n.stage);
        return best;
    };
    for (const UnetNode& n : t.nodes) {
        if (n.stage == 0) continue;
        for (int j = 0; j < n.stage; ++j)
            t.edges.push_back({n.level, j, n.level, n.stage, UnetEdgeKind::Skip});
        int up_stage = max_stage_at(n.level + 1, n.stage - 1);
        if (up_stage < 0) throw std::logic_error("no upsample source for decoder node");
        t.edges.push_back({n.level + 1, up_stage, n.level, n.stage, UnetEdgeKind::Upsample});
    }
    return t;
}

}  // namespace mpcad

#pragma once

#include <string>
#include <vector>

#include "mpcad/nnet.hpp"

namespace mpcad {

// Multi-scale dense classifier over 32-cubes. Scale 1 is the finest grid
// (full cube resolution), each further scale halves the grid. One basic
// block runs per depth step; finer scales retire as depth grows, and a
// transition (1x1x1 conv squeeze) fires on every scale still active at the
// named depths. With the defaults below this yields exactly 32 basic blocks,
// 5 transition blocks (3 at depth 16, 2 at depth 24) and one classifier.
struct MsdNetSpec {
    int scales = 3;
    std::vector<int> initial_filters{32, 64, 128};
    std::vector<int> growth{8, 16, 32};
    int max_depth = 32;
    std::vector<int> prune_after{16, 24, 32};   // scale s is active for depths <= prune_after[s-1]
    std::vector<int> transition_depths{16, 24};
    double reduction = 0.75;                    // fraction of filters removed by squeezes
    std::vector<int> classifier_conv{128, 64};
    std::vector<int> classifier_dense{128, 32};
    std::vector<double> classifier_dropout{0.5, 0.2};
    int input_side = 32;
};

inline void validate(const MsdNetSpec& s) {
    auto fail = [](const std::string& what) { throw std::invalid_argument("msdnet spec: " + what); };
    if (s.scales < 1) fail("scales must be >= 1");
    if (static_cast<int>(s.initial_filters.size()) != s.scales) fail("initial_filters must list one count per scale");
    if (static_cast<int>(s.growth.size()) != s.scales) fail("growth must list one rate per scale");
    if (static_cast<int>(s.prune_after.size()) != s.scales) fail("prune_after must list one depth per scale");
    for (int f : s.initial_filters)
        if (f < 1) fail("initial filter counts must be >= 1");
    for (int g : s.growth)
        if (g < 1) fail("growth rates must be >= 1");
    if (s.max_depth < 1) fail("max_depth must be >= 1");
    for (int i = 0; i < s.scales; ++i) {
        if (s.prune_after[static_cast<std::size_t>(i)] < 1) fail("prune_after depths must be >= 1");
        if (i && s.prune_after[static_cast<std::size_t>(i)] < s.prune_after[static_cast<std::size_t>(i - 1)])
            fail("prune_after must be nondecreasing toward coarser scales");
    }
    if (s.prune_after.back() != s.max_depth) fail("the coarsest scale must stay active through max_depth");
    for (int t : s.transition_depths)
        if (t < 1 || t >= s.max_depth) fail("transition depths must lie strictly inside [1, max_depth)");
    if (!(s.reduction > 0 && s.reduction < 1)) fail("reduction must be in (0,1)");
    if (s.classifier_conv.size() != 2 || s.classifier_dense.size() != 2 || s.classifier_dropout.size() != 2)
        fail("classifier wants two conv widths, two dense widths and two dropout rates");
    for (int c : s.classifier_conv)
        if (c < 1) fail("classifier conv widths must be >= 1");
    for (int d : s.classifier_dense)
        if (d < 1) fail("classifier dense widths must be >= 1");
    int final_side = s.input_side >> (s.scales - 1);
    if ((final_side << (s.scales - 1)) != s.input_side || final_side < 2)
        fail("input_side must be divisible by 2^(scales-1) with at least 2 voxels at the coarsest scale");
}

// 1-based scales active at a depth step; depth 0 means "after the stems".
inline std::vector<int> msdnet_active_scales(const MsdNetSpec& s, int depth) {
    std::vector<int> out;
    for (int sc = 1; sc <= s.scales; ++sc)
        if (depth <= s.prune_after[static_cast<std::size_t>(sc - 1)]) out.push_back(sc);
    return out;
}

// Post-squeeze width: keep (1 - reduction) of the filters, rounded half-up.
inline int msdnet_squeezed(int channels, double reduction) {
    return std::max(1, round_half_up((1.0 - reduction) * channels));
}

struct MsdNet {
    Network net;
    MsdNetSpec spec;
    int basic_blocks = 0;
    int transition_blocks = 0;
    int classifier_blocks = 0;
};

namespace detail {

inline std::string msd_two_digit(int v) {
    std::string s = std::to_string(v);
    return s.size() < 2 ? "0" + s : s;
}

}  // namespace detail

inline MsdNet build_msdnet(const MsdNetSpec& spec = {}) {
    validate(spec);
    MsdNet m;
    m.spec = spec;
    Network& net = m.net;

    auto conv_block = [&](const std::string& base, int from, int out_ch, int k, int stride, int pad) {
        int c = net.add(base + ".conv", LayerSpec::conv3d(out_ch, k, stride, pad), {from});
        int b = net.add(base + ".bn", LayerSpec::batchnorm(), {c});
        return net.add(base + ".relu", LayerSpec::relu_(), {b});
    };

    int input = net.add_input("cube");

    // Stems: cascade from the input, halving resolution per scale.
    std::vector<int> run(static_cast<std::size_t>(spec.scales), -1);      // running feature node per scale
    std::vector<int> width(static_cast<std::size_t>(spec.scales), 0);     // its channel count
    int prev = input;
    for (int sc = 1; sc <= spec.scales; ++sc) {
        int stride = sc == 1 ? 1 : 2;
        prev = conv_block("s" + std::to_string(sc) + ".stem", prev, spec.initial_filters[static_cast<std::size_t>(sc - 1)], 3,
                          stride, 1);
        run[static_cast<std::size_t>(sc - 1)] = prev;
        width[static_cast<std::size_t>(sc - 1)] = spec.initial_filters[static_cast<std::size_t>(sc - 1)];
    }

    for (int d = 1; d <= spec.max_depth; ++d) {
        std::vector<int> active = msdnet_active_scales(spec, d);
        std::vector<int> prev_active = msdnet_active_scales(spec, d - 1);
        auto was_active = [&](int sc) {
            for (int a : prev_active)
                if (a == sc) return true;
            return false;
        };
        std::string dp = "d" + detail::msd_two_digit(d);
        for (int sc : active) {
            std::size_t si = static_cast<std::size_t>(sc - 1);
            int g = spec.growth[si];
            std::string base = dp + ".s" + std::to_string(sc);

            // Horizontal bottleneck: squeeze then 3x3x3 growth conv.
            int h = conv_block(base + ".h.squeeze", run[si], msdnet_squeezed(width[si], spec.reduction), 1, 1, 0);
            h = conv_block(base + ".h.grow", h, g, 3, 1, 1);

            std::vector<int> parts{run[si], h};
            int grown = g;
            // Vertical bottleneck from the finer scale, stride 2 in the
            // growth conv; exists while the finer scale still produced a
            // feature at the previous depth (including the handoff step
            // right after it retired behind its transition).
            if (sc >= 2 && was_active(sc - 1)) {
                std::size_t fi = static_cast<std::size_t>(sc - 2);
                int v = conv_block(base + ".v.squeeze", run[fi], msdnet_squeezed(width[fi], spec.reduction), 1, 1, 0);
                v = conv_block(base + ".v.grow", v, g, 3, 2, 1);
                parts.push_back(v);
                grown += g;
            }
            run[si] = net.add(base + ".cat", LayerSpec::concat_(), parts);
            width[si] += grown;
        }
        m.basic_blocks += 1;

        for (int t : spec.transition_depths) {
            if (t != d) continue;
            for (int sc : active) {
                std::size_t si = static_cast<std::size_t>(sc - 1);
                int squeezed = msdnet_squeezed(width[si], spec.reduction);
                run[si] = conv_block(dp + ".t.s" + std::to_string(sc), run[si], squeezed, 1, 1, 0);
                width[si] = squeezed;
                m.transition_blocks += 1;
            }
        }
    }

    // Classifier at the end of the coarsest scale.
    int x = run[static_cast<std::size_t>(spec.scales - 1)];
    x = conv_block("cls.conv1", x, spec.classifier_conv[0], 3, 1, 1);
    x = conv_block("cls.conv2", x, spec.classifier_conv[1], 3, 1, 1);
    x = net.add("cls.pool", LayerSpec::avgpool(2, 2), {x});
    x = net.add("cls.fc1", LayerSpec::dense_(spec.classifier_dense[0]), {x});
    x = net.add("cls.drop1", LayerSpec::dropout(spec.classifier_dropout[0]), {x});
    x = net.add("cls.fc2", LayerSpec::dense_(spec.classifier_dense[1]), {x});
    x = net.add("cls.drop2", LayerSpec::dropout(spec.classifier_dropout[1]), {x});
    x = net.add("cls.out", LayerSpec::dense_(1), {x});
    x = net.add("cls.sigmoid", LayerSpec::sigmoid_(), {x});
    net.set_output(x);
    m.classifier_blocks = 1;
    return m;
}

}  // namespace mpcad

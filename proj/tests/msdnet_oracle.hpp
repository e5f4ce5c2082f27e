#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mpcad/msdnet.hpp"

// Independent parameter count for a multi-scale dense classifier spec. This
// replays the architecture bookkeeping with its own arithmetic; it shares no
// code with build_msdnet or the shape-inference machinery, so agreement pins
// both down.
namespace oracle {

inline std::int64_t msdnet_param_count(const mpcad::MsdNetSpec& s) {
    auto squeeze = [&](int c) {
        int kept = static_cast<int>(std::floor((1.0 - s.reduction) * c + 0.5));
        return kept < 1 ? 1 : kept;
    };
    std::int64_t total = 0;
    // Every conv block is conv(w+b) followed by batchnorm (4 tensors).
    auto conv_block = [&](int out, int in, int k) {
        total += static_cast<std::int64_t>(out) * in * k * k * k + out;  // w + b
        total += 4LL * out;                                              // bn stats
    };

    std::vector<int> width(static_cast<std::size_t>(s.scales), 0);
    int in_ch = 1;
    for (int sc = 0; sc < s.scales; ++sc) {
        conv_block(s.initial_filters[static_cast<std::size_t>(sc)], in_ch, 3);
        in_ch = s.initial_filters[static_cast<std::size_t>(sc)];
        width[static_cast<std::size_t>(sc)] = in_ch;
    }

    auto active_at = [&](int sc, int depth) {  // sc is 0-based here
        return depth <= s.prune_after[static_cast<std::size_t>(sc)];
    };
    for (int d = 1; d <= s.max_depth; ++d) {
        for (int sc = 0; sc < s.scales; ++sc) {
            if (!active_at(sc, d)) continue;
            int g = s.growth[static_cast<std::size_t>(sc)];
            conv_block(squeeze(width[static_cast<std::size_t>(sc)]), width[static_cast<std::size_t>(sc)], 1);
            conv_block(g, squeeze(width[static_cast<std::size_t>(sc)]), 3);
            int grown = g;
            if (sc >= 1 && active_at(sc - 1, d - 1)) {
                conv_block(squeeze(width[static_cast<std::size_t>(sc - 1)]), width[static_cast<std::size_t>(sc - 1)], 1);
                conv_block(g, squeeze(width[static_cast<std::size_t>(sc - 1)]), 3);
                grown += g;
            }
            width[static_cast<std::size_t>(sc)] += grown;
        }
        for (int t : s.transition_depths) {
            if (t != d) continue;
            for (int sc = 0; sc < s.scales; ++sc) {
                if (!active_at(sc, d)) continue;
                int sq = squeeze(width[static_cast<std::size_t>(sc)]);
                conv_block(sq, width[static_cast<std::size_t>(sc)], 1);
                width[static_cast<std::size_t>(sc)] = sq;
            }
        }
    }

    conv_block(s.classifier_conv[0], width[static_cast<std::size_t>(s.scales - 1)], 3);
    conv_block(s.classifier_conv[1], s.classifier_conv[0], 3);
    int side = (s.input_side >> (s.scales - 1)) / 2;  // after the stride-2 average pool
    std::int64_t flat = static_cast<std::int64_t>(s.classifier_conv[1]) * side * side * side;
    total += static_cast<std::int64_t>(s.classifier_dense[0]) * flat + s.classifier_dense[0];
    total += static_cast<std::int64_t>(s.classifier_dense[1]) * s.classifier_dense[0] + s.classifier_dense[1];
    total += s.classifier_dense[1] + 1;  // final scalar head
    return total;
}

}  // namespace oracle

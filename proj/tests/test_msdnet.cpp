#include <catch2/catch_amalgamated.hpp>

#include "mpcad/msdnet.hpp"
#include "mpcad/nnet_reference.hpp"
#include "msdnet_oracle.hpp"
#include "test_support.hpp"

using namespace mpcad;

namespace {

int node_index(const Network& net, const std::string& name) {
    for (std::size_t i = 0; i < net.nodes().size(); ++i)
        if (net.nodes()[i].name == name) return static_cast<int>(i);
    return -1;
}

int channels_of(const Network& net, const std::vector<std::vector<int>>& shapes, const std::string& name) {
    int i = node_index(net, name);
    REQUIRE(i >= 0);
    return shapes[static_cast<std::size_t>(i)][0];
}

MsdNetSpec reduced_spec() {
    MsdNetSpec s;
    s.scales = 3;
    s.initial_filters = {4, 6, 8};
    s.growth = {2, 3, 4};
    s.max_depth = 6;
    s.prune_after = {3, 5, 6};
    s.transition_depths = {3, 5};
    s.input_side = 16;
    return s;
}

}  // namespace

TEST_CASE("default build counts 32 basic, 5 transition, 1 classifier block") {
    MsdNet m = build_msdnet();
    CHECK(m.basic_blocks == 32);
    CHECK(m.transition_blocks == 5);
    CHECK(m.classifier_blocks == 1);
}

TEST_CASE("active scales retire at the pruning depths") {
    MsdNetSpec s;
    CHECK(msdnet_active_scales(s, 0) == std::vector<int>{1, 2, 3});
    CHECK(msdnet_active_scales(s, 1) == std::vector<int>{1, 2, 3});
    CHECK(msdnet_active_scales(s, 16) == std::vector<int>{1, 2, 3});
    CHECK(msdnet_active_scales(s, 17) == std::vector<int>{2, 3});
    CHECK(msdnet_active_scales(s, 24) == std::vector<int>{2, 3});
    CHECK(msdnet_active_scales(s, 25) == std::vector<int>{3});
    CHECK(msdnet_active_scales(s, 32) == std::vector<int>{3});
}

TEST_CASE("squeeze keeps a quarter of the filters, rounded half up") {
    CHECK(msdnet_squeezed(160, 0.75) == 40);
    CHECK(msdnet_squeezed(576, 0.75) == 144);
    CHECK(msdnet_squeezed(1152, 0.75) == 288);
    CHECK(msdnet_squeezed(10, 0.75) == 3);  // 2.5 rounds up
    CHECK(msdnet_squeezed(2, 0.75) == 1);
    CHECK(msdnet_squeezed(1, 0.75) == 1);  // floor at one filter
}

TEST_CASE("channel widths follow the growth and transition trace") {
    MsdNet m = build_msdnet();
    std::vector<std::vector<int>> shapes = infer_shapes(m.net, {1, 32, 32, 32});
    const Network& net = m.net;

    CHECK(channels_of(net, shapes, "s1.stem.relu") == 32);
    CHECK(channels_of(net, shapes, "s2.stem.relu") == 64);
    CHECK(channels_of(net, shapes, "s3.stem.relu") == 128);

    // Depth 16: widths before and after the three-scale transition.
    CHECK(channels_of(net, shapes, "d16.s1.cat") == 160);   // 32 + 16*8
    CHECK(channels_of(net, shapes, "d16.s2.cat") == 576);   // 64 + 16*(16+16)
    CHECK(channels_of(net, shapes, "d16.s3.cat") == 1152);  // 128 + 16*(32+32)
    CHECK(channels_of(net, shapes, "d16.t.s1.relu") == 40);
    CHECK(channels_of(net, shapes, "d16.t.s2.relu") == 144);
    CHECK(channels_of(net, shapes, "d16.t.s3.relu") == 288);

    // Depth 17 keeps the vertical handoff from the just-retired finer scale.
    CHECK(node_index(net, "d17.s1.cat") == -1);
    CHECK(node_index(net, "d17.s2.v.grow.conv") >= 0);
    CHECK(channels_of(net, shapes, "d17.s2.cat") == 176);  // 144 + 16 + 16
    CHECK(node_index(net, "d18.s2.v.grow.conv") == -1);

    // Depth 24: second transition on the two remaining scales.
    CHECK(channels_of(net, shapes, "d24.s2.cat") == 288);  // 176 + 7*16
    CHECK(channels_of(net, shapes, "d24.s3.cat") == 800);
    CHECK(channels_of(net, shapes, "d24.t.s2.relu") == 72);
    CHECK(channels_of(net, shapes, "d24.t.s3.relu") == 200);

    // Depth 25 handoff from scale 2, then horizontal-only growth to 32.
    CHECK(node_index(net, "d25.s3.v.grow.conv") >= 0);
    CHECK(channels_of(net, shapes, "d25.s3.cat") == 264);  // 200 + 32 + 32
    CHECK(node_index(net, "d26.s3.v.grow.conv") == -1);
    CHECK(channels_of(net, shapes, "d32.s3.cat") == 488);  // 264 + 7*32
}

TEST_CASE("spatial grid halves per scale and the head is scalar") {
    MsdNet m = build_msdnet();
    std::vector<std::vector<int>> shapes = infer_shapes(m.net, {1, 32, 32, 32});
    const Network& net = m.net;
    int s1 = node_index(net, "s1.stem.relu");
    int s2 = node_index(net, "s2.stem.relu");
    int s3 = node_index(net, "s3.stem.relu");
    CHECK(shapes[static_cast<std::size_t>(s1)] == std::vector<int>{32, 32, 32, 32});
    CHECK(shapes[static_cast<std::size_t>(s2)] == std::vector<int>{64, 16, 16, 16});
    CHECK(shapes[static_cast<std::size_t>(s3)] == std::vector<int>{128, 8, 8, 8});
    int pool = node_index(net, "cls.pool");
    CHECK(shapes[static_cast<std::size_t>(pool)] == std::vector<int>{64, 4, 4, 4});
    CHECK(shapes[static_cast<std::size_t>(net.output())] == std::vector<int>{1});
    CHECK(net.nodes()[static_cast<std::size_t>(net.output())].spec.kind == LayerKind::Sigmoid);
}

TEST_CASE("parameter count equals the independent oracle") {
    MsdNet m = build_msdnet();
    std::int64_t want = oracle::msdnet_param_count(m.spec);
    CHECK(param_count(m.net, {1, 32, 32, 32}) == want);

    MsdNet r = build_msdnet(reduced_spec());
    CHECK(param_count(r.net, {1, 16, 16, 16}) == oracle::msdnet_param_count(r.spec));
}

TEST_CASE("reduced builds execute and the two executors agree") {
    MsdNet m = build_msdnet(reduced_spec());
    Rng rng(2021);
    init_params(m.net, {1, 16, 16, 16}, rng, true);
    Tensor x = Tensor::zeros({1, 16, 16, 16});
    for (double& v : x.data) v = rng.uniform();
    Tensor fast = forward(m.net, x);
    REQUIRE(fast.shape == std::vector<int>{1});
    CHECK(fast.data[0] > 0.0);
    CHECK(fast.data[0] < 1.0);
    Tensor slow = reference_forward(m.net, x);
    CHECK(support::rel_err(fast.data[0], slow.data[0]) < 1e-5);
}

TEST_CASE("reduced build block counts follow the spec arithmetic") {
    MsdNet m = build_msdnet(reduced_spec());
    CHECK(m.basic_blocks == 6);
    // Transition at 3 fires on 3 scales, at 5 on 2 scales.
    CHECK(m.transition_blocks == 5);
    CHECK(m.classifier_blocks == 1);
}

TEST_CASE("spec validation rejects inconsistent configurations") {
    MsdNetSpec s;
    s.initial_filters = {32, 64};
    CHECK_THROWS_AS(validate(s), std::invalid_argument);

    s = MsdNetSpec{};
    s.prune_after = {16, 24, 30};  // coarsest scale must survive to max_depth
    CHECK_THROWS_AS(validate(s), std::invalid_argument);

    s = MsdNetSpec{};
    s.transition_depths = {16, 32};  // at max_depth is too late
    CHECK_THROWS_AS(validate(s), std::invalid_argument);

    s = MsdNetSpec{};
    s.reduction = 1.0;
    CHECK_THROWS_AS(validate(s), std::invalid_argument);

    s = MsdNetSpec{};
    s.input_side = 18;  // not divisible by 4
    CHECK_THROWS_AS(validate(s), std::invalid_argument);

    s = MsdNetSpec{};
    s.prune_after = {24, 16, 32};  // finer scale outliving a coarser one
    CHECK_THROWS_AS(validate(s), std::invalid_argument);

    CHECK_NOTHROW(validate(MsdNetSpec{}));
}

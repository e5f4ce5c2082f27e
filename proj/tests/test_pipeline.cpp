#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "mpcad/phantom.hpp"
#include "mpcad/pipeline.hpp"
#include "test_support.hpp"

using namespace mpcad;

namespace {

bool files_equal(const std::string& a, const std::string& b) {
    return detail::read_text_file(a) == detail::read_text_file(b);
}

// Tiny fast scene: two mid-size nodules, no vessels, light noise.
PhantomSpec pipeline_scene() {
    PhantomSpec s;
    s.dims = {64, 64, 64};
    s.scan_id = "unit";
    s.n_nodules = 2;
    s.diameter_min_mm = 5;
    s.diameter_max_mm = 8;
    s.n_vessels = 0;
    s.noise_sigma = 15;
    s.seed = 21;
    return s;
}

GrayVolume marker_volume() {
    GrayVolume g = support::zero_gray(40, 40, 40);
    for (int z = 20; z <= 21; ++z)
        for (int y = 20; y <= 21; ++y)
            for (int x = 20; x <= 21; ++x) g.at(x, y, z) = 255;
    return g;
}

}  // namespace

// --- parallel_for -----------------------------------------------------------

TEST_CASE("parallel_for fills per-index slots identically for any thread count") {
    const std::size_t n = 137;
    std::vector<long> serial(n), four(n), many(n);
    parallel_for(n, 1, [&](std::size_t i) { serial[i] = static_cast<long>(i * i); });
    parallel_for(n, 4, [&](std::size_t i) { four[i] = static_cast<long>(i * i); });
    parallel_for(n, 16, [&](std::size_t i) { many[i] = static_cast<long>(i * i); });
    CHECK(serial == four);
    CHECK(serial == many);
}

TEST_CASE("parallel_for visits every index exactly once") {
    const std::size_t n = 200;
    std::vector<int> visits(n, 0);
    parallel_for(n, 8, [&](std::size_t i) { visits[i] += 1; });
    CHECK(std::count(visits.begin(), visits.end(), 1) == static_cast<long>(n));
}

TEST_CASE("parallel_for rethrows worker exceptions and tolerates edge inputs") {
    auto boom = [](std::size_t i) {
        if (i == 3) throw std::runtime_error("index 3");
    };
    CHECK_THROWS_AS(parallel_for(10, 1, boom), std::runtime_error);
    CHECK_THROWS_AS(parallel_for(10, 4, boom), std::runtime_error);
    int calls = 0;
    parallel_for(0, 4, [&](std::size_t) { ++calls; });
    CHECK(calls == 0);
    parallel_for(3, 0, [&](std::size_t) { ++calls; });  // non-positive runs serial
    CHECK(calls == 3);
}

// --- configuration mapping ----------------------------------------------------

TEST_CASE("pipeline params default cleanly from an empty config") {
    PipelineParams p = PipelineParams::from_config(Config::parse(""));
    CHECK(p.window.lo_hu == -1000.0);
    CHECK(p.window.hi_hu == 400.0);
    CHECK(p.target_mm == 1.0);
    CHECK(p.mip.thickness_mm == 10.0);
    CHECK(p.mip.stride_mm == 1.0);
    CHECK_FALSE(p.mip_use_mask);
    CHECK(p.seg.close_radius == 3);
    CHECK(p.seg.dilate_radius == 2);
    CHECK(p.detect.threshold == 140);
    CHECK(p.detect.min_area == 4);
    CHECK(p.detect.max_area == 10000);
    CHECK(p.group.link_dist_mm == 5.0);
    CHECK(p.detect_use_mask);
    CHECK(p.merge.mode == MergeRule::Mode::Proximity);
    CHECK(p.merge.factor == 0.88);
    CHECK(p.cube_margin_vox == 4);
    CHECK_FALSE(p.fpr_use_mask);
    CHECK(p.match.radius_scale == 1.0);
    CHECK(p.bootstrap.n == 1000);
    CHECK(p.bootstrap.level == 0.95);
    CHECK(p.bootstrap.seed == 2020);
}

TEST_CASE("every config key lands on its pipeline field") {
    Config cfg = Config::parse(
        "window.lo_hu = -900\n"
        "window.hi_hu = 300\n"
        "resample.target_mm = 0.8\n"
        "mip.thickness_mm = 12\n"
        "mip.stride_mm = 2\n"
        "mip.use_mask = true\n"
        "seg.close_radius = 2\n"
        "seg.dilate_radius = 0\n"
        "detect.threshold = 120\n"
        "detect.min_area = 6\n"
        "detect.max_area = 500\n"
        "detect.link_dist_mm = 4.5\n"
        "detect.use_mask = false\n"
        "fuse.mode = literal\n"
        "fuse.factor = 0.9\n"
        "fpr.margin_vox = 2\n"
        "fpr.use_mask = true\n"
        "eval.radius_scale = 1.25\n"
        "bootstrap.n = 50\n"
        "bootstrap.level = 0.9\n"
        "bootstrap.seed = 77\n");
    PipelineParams p = PipelineParams::from_config(cfg);
    CHECK(p.window.lo_hu == -900.0);
    CHECK(p.window.hi_hu == 300.0);
    CHECK(p.target_mm == 0.8);
    CHECK(p.mip.thickness_mm == 12.0);
    CHECK(p.mip.stride_mm == 2.0);
    CHECK(p.mip_use_mask);
    CHECK(p.seg.close_radius == 2);
    CHECK(p.seg.dilate_radius == 0);
    CHECK(p.detect.threshold == 120);
    CHECK(p.detect.min_area == 6);
    CHECK(p.detect.max_area == 500);
    CHECK(p.group.link_dist_mm == 4.5);
    CHECK_FALSE(p.detect_use_mask);
    CHECK(p.merge.mode == MergeRule::Mode::LiteralPaper);
    CHECK(p.merge.factor == 0.9);
    CHECK(p.cube_margin_vox == 2);
    CHECK(p.fpr_use_mask);
    CHECK(p.match.radius_scale == 1.25);
    CHECK(p.bootstrap.n == 50);
    CHECK(p.bootstrap.level == 0.9);
    CHECK(p.bootstrap.seed == 77);
}

TEST_CASE("unknown config keys and bad fuse modes are rejected by name") {
    try {
        PipelineParams::from_config(Config::parse("detect.thresold = 150\n"));
        FAIL("expected an unknown-key error");
    } catch (const config_error& e) {
        CHECK(e.key() == "detect.thresold");
    }
    try {
        PipelineParams::from_config(Config::parse("fuse.mode = both\n"));
        FAIL("expected a fuse mode error");
    } catch (const config_error& e) {
        CHECK(e.key() == "fuse.mode");
        CHECK(std::string(e.what()).find("both") != std::string::npos);
    }
    CHECK_THROWS_AS(PipelineParams::from_config(Config::parse("detect.threshold = soon\n")),
                    config_error);
}

TEST_CASE("pipeline paths carry the fixed artifact names") {
    PipelinePaths paths = pipeline_paths("/tmp/run");
    CHECK(paths.preprocessed == "/tmp/run/preprocessed.mpv1");
    CHECK(paths.masked == "/tmp/run/masked.mpv1");
    CHECK(paths.mask == "/tmp/run/mask.mpv1");
    CHECK(paths.candidates == "/tmp/run/candidates.csv");
    CHECK(paths.fused == "/tmp/run/fused.csv");
    CHECK(paths.scored == "/tmp/run/scored.csv");
    CHECK(paths.report == "/tmp/run/report.txt");
    CHECK(paths.froc == "/tmp/run/froc.csv");
}

// --- fusing per scan ------------------------------------------------------------

TEST_CASE("fuse_by_scan never merges across scan ids") {
    Candidate a;
    a.scan_id = "one";
    a.center_mm = {10, 10, 10};
    a.radius_mm = 4;
    a.score = 0.9;
    a.source = Source::Axial1mm;
    Candidate b = a;
    b.scan_id = "two";
    b.score = 0.4;
    Candidate c = a;
    c.source = Source::Coronal1mm;
    c.score = 0.7;

    std::vector<Candidate> fused = fuse_by_scan({a, b, c}, MergeRule{});
    REQUIRE(fused.size() == 2);  // a+c collapse, b stays
    CHECK(fused[0].scan_id == "one");
    CHECK(fused[0].score == 0.9);
    CHECK(fused[0].source == Source::Fused);
    CHECK(fused[1].scan_id == "two");
    CHECK(fused[1].score == 0.4);
}

// --- marker probe through the detection stack ------------------------------------

TEST_CASE("a 2x2x2 marker is localized exactly by every plane stream") {
    GrayVolume g = marker_volume();
    PipelineParams p;
    struct Probe {
        PlaneAxis axis;
        Source source;
    };
    const Probe probes[] = {
        {PlaneAxis::Axial, Source::Axial1mm},
        {PlaneAxis::Coronal, Source::Coronal1mm},
        {PlaneAxis::Sagittal, Source::Sagittal1mm},
    };
    for (const Probe& pr : probes) {
        INFO(plane_name(pr.axis));
        std::vector<Candidate> cands = detect_plane_stream(g, pr.axis, pr.source, "m", p, 1);
        REQUIRE(cands.size() == 1);
        CHECK(cands[0].center_mm.x == Catch::Approx(20.5).margin(1e-9));
        CHECK(cands[0].center_mm.y == Catch::Approx(20.5).margin(1e-9));
        CHECK(cands[0].center_mm.z == Catch::Approx(20.5).margin(1e-9));
        CHECK(cands[0].radius_mm == Catch::Approx(1.0).margin(1e-9));
        CHECK(cands[0].score == 1.0);
        CHECK(cands[0].source == pr.source);
    }
}

TEST_CASE("all four streams fused still pin the marker to within half a voxel") {
    GrayVolume g = marker_volume();
    PipelineParams p;
    std::vector<Candidate> all = detect_candidates(g, g, "m", p, 1);
    REQUIRE(all.size() == 4);  // one candidate per stream
    std::vector<Candidate> fused = fuse_by_scan(all, p.merge);
    REQUIRE(fused.size() == 1);
    CHECK(std::abs(fused[0].center_mm.x - 20.5) <= 0.5);
    CHECK(std::abs(fused[0].center_mm.y - 20.5) <= 0.5);
    CHECK(std::abs(fused[0].center_mm.z - 20.5) <= 0.5);
    // the slab stack is symmetric around the marker, so the fused center is exact
    CHECK(fused[0].center_mm.z == Catch::Approx(20.5).margin(1e-9));
    CHECK(fused[0].source == Source::Fused);
    CHECK(fused[0].score == 1.0);
}

// --- stage plumbing ---------------------------------------------------------------

TEST_CASE("stage_detect insists on the volumes its flags will read") {
    PipelineParams p;  // plane streams masked, mip unmasked: both paths needed
    CHECK_THROWS_AS(stage_detect("", "masked.mpv1", "s", "out.csv", p, 1), std::invalid_argument);
    p.mip_use_mask = true;  // now only the masked volume is read at all
    CHECK_THROWS_AS(stage_detect("gray.mpv1", "", "s", "out.csv", p, 1), std::invalid_argument);
}

TEST_CASE("stage_fuse refuses candidates that already carry fpr scores") {
    support::TempDir td("fusebad");
    CandidateTable t;
    Candidate c;
    c.scan_id = "s";
    c.center_mm = {1, 2, 3};
    c.radius_mm = 2;
    c.score = 0.5;
    c.source = Source::Axial1mm;
    t.rows = {c};
    t.has_fpr = true;
    t.fpr = {0.9};
    std::string in = td.path("scored.csv");
    write_candidates(in, t);
    PipelineParams p;
    CHECK_THROWS_AS(stage_fuse(in, td.path("out.csv"), p), std::invalid_argument);
}

// --- whole pipeline ---------------------------------------------------------------

TEST_CASE("the pipeline is byte-deterministic across thread counts and stage runs") {
    support::TempDir td("pipe");
    PhantomSpec spec = pipeline_scene();
    Phantom ph = generate_phantom(spec);
    std::string ct_path = td.path("scan.mpv1");
    std::string ann_path = td.path("truth.csv");
    write_mpv1(ct_path, ph.volume);
    write_annotations(ann_path, ph.annotations);

    PipelineParams p;
    p.bootstrap.n = 200;   // keep evaluation quick
    p.mip_use_mask = true;  // at 64^3 the unmasked projection would keep the body disc
    p.seg.dilate_radius = 0;  // dilation drags a bright body ring into the masked volume

    std::string dir1 = td.path("t1");
    std::string dir4 = td.path("t4");
    bool eval1 = false, eval4 = false;
    EvalOutputs e1 = run_pipeline(ct_path, ann_path, dir1, spec.scan_id, "", p, 1, &eval1);
    EvalOutputs e4 = run_pipeline(ct_path, ann_path, dir4, spec.scan_id, "", p, 4, &eval4);
    CHECK(eval1);
    CHECK(eval4);

    PipelinePaths p1 = pipeline_paths(dir1);
    PipelinePaths p4 = pipeline_paths(dir4);
    CHECK(files_equal(p1.preprocessed, p4.preprocessed));
    CHECK(files_equal(p1.masked, p4.masked));
    CHECK(files_equal(p1.mask, p4.mask));
    CHECK(files_equal(p1.candidates, p4.candidates));
    CHECK(files_equal(p1.fused, p4.fused));
    CHECK(files_equal(p1.scored, p4.scored));
    CHECK(files_equal(p1.report, p4.report));
    CHECK(files_equal(p1.froc, p4.froc));
    CHECK(e1.report.cpm == e4.report.cpm);

    // running the stages by hand with the same paths reproduces every artifact
    std::string dirM = td.path("manual");
    std::filesystem::create_directories(dirM);
    PipelinePaths pm = pipeline_paths(dirM);
    stage_preprocess(ct_path, pm.preprocessed, p);
    stage_segment(pm.preprocessed, pm.masked, pm.mask, p, 1);
    stage_detect(pm.preprocessed, pm.masked, spec.scan_id, pm.candidates, p, 1);
    stage_fuse(pm.candidates, pm.fused, p);
    stage_classify(pm.fused, pm.preprocessed, "", pm.scored, p, 1);
    stage_evaluate(pm.scored, ann_path, pm.report, pm.froc, p);
    CHECK(files_equal(p1.preprocessed, pm.preprocessed));
    CHECK(files_equal(p1.masked, pm.masked));
    CHECK(files_equal(p1.mask, pm.mask));
    CHECK(files_equal(p1.candidates, pm.candidates));
    CHECK(files_equal(p1.fused, pm.fused));
    CHECK(files_equal(p1.scored, pm.scored));
    CHECK(files_equal(p1.report, pm.report));
    CHECK(files_equal(p1.froc, pm.froc));

    // evaluation bookkeeping reflects the scene
    CHECK(e1.curve.n_scans == 1);
    CHECK(e1.curve.n_nodules == 2);
    CHECK(e1.strat.overall.total == 2);
    CHECK(e1.strat.excluded_small == 0);
    CHECK(sensitivity_at(e1.curve, 8.0) >= 0.5);
    CHECK(e1.report.cpm > 0.0);

    // the scored table carries the second-stage column
    CandidateTable scored = read_candidates(p1.scored);
    CHECK(scored.has_fpr);
    REQUIRE(scored.rows.size() == scored.fpr.size());
    CHECK(!scored.rows.empty());
    for (double f : scored.fpr) {
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
    }

    // the human-readable report mentions the headline metric
    std::string report = detail::read_text_file(p1.report);
    CHECK(report.find("CPM") != std::string::npos);
    CHECK(report.find("detected/total") != std::string::npos);
}

TEST_CASE("skipping the annotation file skips evaluation but keeps artifacts") {
    support::TempDir td("noann");
    PhantomSpec spec = pipeline_scene();
    spec.n_nodules = 1;
    spec.diameter_min_mm = 6;
    spec.diameter_max_mm = 6;
    Phantom ph = generate_phantom(spec);
    std::string ct_path = td.path("scan.mpv1");
    write_mpv1(ct_path, ph.volume);

    PipelineParams p;
    std::string dir = td.path("out");
    bool evaluated = true;
    run_pipeline(ct_path, "", dir, spec.scan_id, "", p, 1, &evaluated);
    CHECK_FALSE(evaluated);
    PipelinePaths paths = pipeline_paths(dir);
    CHECK(std::filesystem::exists(paths.scored));
    CHECK_FALSE(std::filesystem::exists(paths.report));
    CHECK_FALSE(std::filesystem::exists(paths.froc));
}

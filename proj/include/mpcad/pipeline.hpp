#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mpcad/config.hpp"
#include "mpcad/csv.hpp"
#include "mpcad/detect.hpp"
#include "mpcad/eval.hpp"
#include "mpcad/fpr.hpp"
#include "mpcad/fuse.hpp"
#include "mpcad/lungseg.hpp"
#include "mpcad/msdnet.hpp"
#include "mpcad/parallel.hpp"
#include "mpcad/volume.hpp"
#include "mpcad/volume_io.hpp"
#include "mpcad/weights_io.hpp"

namespace mpcad {

// Every tunable of the pipeline, with defaults matching the stage contracts.
// `from_config` maps the flat key = value file onto this struct and rejects
// keys it does not know.
struct PipelineParams {
    WindowSpec window;
    double target_mm = 1.0;
    MipSpec mip;
    bool mip_use_mask = false;  // maximum projection reads the unmasked volume by default
    SegParams seg;
    DetectParams detect;
    GroupParams group;
    bool detect_use_mask = true;  // plane streams read the lung-masked volume by default
    MergeRule merge;
    int cube_margin_vox = 4;
    bool fpr_use_mask = false;
    MatchParams match;
    BootstrapParams bootstrap;

    static PipelineParams from_config(const Config& cfg) {
        PipelineParams p;
        p.window.lo_hu = cfg.get_double("window.lo_hu", p.window.lo_hu);
        p.window.hi_hu = cfg.get_double("window.hi_hu", p.window.hi_hu);
        p.target_mm = cfg.get_double("resample.target_mm", p.target_mm);
        p.mip.thickness_mm = cfg.get_double("mip.thickness_mm", p.mip.thickness_mm);
        p.mip.stride_mm = cfg.get_double("mip.stride_mm", p.mip.stride_mm);
        p.mip_use_mask = cfg.get_bool("mip.use_mask", p.mip_use_mask);
        p.seg.close_radius = cfg.get_int("seg.close_radius", p.seg.close_radius);
        p.seg.dilate_radius = cfg.get_int("seg.dilate_radius", p.seg.dilate_radius);
        p.detect.threshold = cfg.get_int("detect.threshold", p.detect.threshold);
        p.detect.min_area = cfg.get_int("detect.min_area", static_cast<int>(p.detect.min_area));
        p.detect.max_area = cfg.get_int("detect.max_area", static_cast<int>(p.detect.max_area));
        p.group.link_dist_mm = cfg.get_double("detect.link_dist_mm", p.group.link_dist_mm);
        p.detect_use_mask = cfg.get_bool("detect.use_mask", p.detect_use_mask);
        std::string mode = cfg.get_string("fuse.mode", "proximity");
        if (mode == "proximity") {
            p.merge.mode = MergeRule::Mode::Proximity;
        } else if (mode == "literal") {
            p.merge.mode = MergeRule::Mode::LiteralPaper;
        } else {
            throw config_error("fuse.mode", "expected 'proximity' or 'literal', got '" + mode + "'");
        }
        p.merge.factor = cfg.get_double("fuse.factor", p.merge.factor);
        p.cube_margin_vox = cfg.get_int("fpr.margin_vox", p.cube_margin_vox);
        p.fpr_use_mask = cfg.get_bool("fpr.use_mask", p.fpr_use_mask);
        p.match.radius_scale = cfg.get_double("eval.radius_scale", p.match.radius_scale);
        p.bootstrap.n = cfg.get_int("bootstrap.n", p.bootstrap.n);
        p.bootstrap.level = cfg.get_double("bootstrap.level", p.bootstrap.level);
        p.bootstrap.seed = cfg.get_u64("bootstrap.seed", p.bootstrap.seed);
        cfg.reject_unconsumed();
        return p;
    }
};

// --- preprocess -----------------------------------------------------------------

// HU volume in, isotropically resampled windowed gray volume out.
inline void stage_preprocess(const std::string& ct_path, const std::string& out_gray_path,
                             const PipelineParams& p) {
    CtVolume ct = read_mpv1_ct(ct_path);
    CtVolume iso = resample_isotropic(ct, p.target_mm);
    GrayVolume g = apply_window(iso, p.window);
    write_mpv1(out_gray_path, g);
}

// --- segment --------------------------------------------------------------------

// Per-axial-slice lung mask applied to the gray volume. Optionally also
// writes the mask itself as a 0/255 gray volume.
inline void stage_segment(const std::string& gray_path, const std::string& out_masked_path,
                          const std::string& out_mask_path, const PipelineParams& p, int threads) {
    GrayVolume g = read_mpv1_gray(gray_path);
    GrayVolume masked = g;
    GrayVolume mask;
    mask.dims = g.dims;
    mask.spacing = g.spacing;
    mask.origin = g.origin;
    mask.g.assign(g.g.size(), 0);
    std::size_t plane = static_cast<std::size_t>(g.dims.nx) * static_cast<std::size_t>(g.dims.ny);
    parallel_for(static_cast<std::size_t>(g.dims.nz), threads, [&](std::size_t z) {
        GraySlice s = extract_plane_slice(g, PlaneAxis::Axial, static_cast<int>(z));
        BinaryMask2D m = segment_lung_slice(s, p.seg);
        std::size_t base = z * plane;
        for (std::size_t i = 0; i < m.bits.size(); ++i) {
            if (m.bits[i]) {
                mask.g[base + i] = 255;
            } else {
                masked.g[base + i] = 0;
            }
        }
    });
    write_mpv1(out_masked_path, masked);
    if (!out_mask_path.empty()) write_mpv1(out_mask_path, mask);
}

// --- detect ---------------------------------------------------------------------

namespace detail {

// Detect over a prepared slice stack, slice-parallel with per-slice result
// slots so the box order never depends on the thread count.
inline std::vector<Box2D> detect_stack(const std::vector<GraySlice>& slices, const DetectorPort& det,
                                       PlaneAxis axis, int threads) {
    std::vector<std::vector<Box2D>> per_slice(slices.size());
    parallel_for(slices.size(), threads, [&](std::size_t i) {
        per_slice[i] = det.detect(slices[i]);
        for (Box2D& b : per_slice[i]) {
            b.slice_index = static_cast<int>(i);
            b.axis = axis;
        }
    });
    std::vector<Box2D> all;
    for (auto& v : per_slice) all.insert(all.end(), v.begin(), v.end());
    return all;
}

inline std::vector<GraySlice> plane_stack(const GrayVolume& g, PlaneAxis axis, int threads) {
    int n = plane_axis_extent(g.dims, axis);
    std::vector<GraySlice> slices(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), threads,
                 [&](std::size_t i) { slices[i] = extract_plane_slice(g, axis, static_cast<int>(i)); });
    return slices;
}

}  // namespace detail

// One orthogonal-plane detection stream, grouped into 3-D candidates.
inline std::vector<Candidate> detect_plane_stream(const GrayVolume& vol, PlaneAxis axis, Source source,
                                                  const std::string& scan_id, const PipelineParams& p,
                                                  int threads) {
    ReferenceBlobDetector det(p.detect);
    std::vector<GraySlice> slices = detail::plane_stack(vol, axis, threads);
    std::vector<Box2D> boxes = detail::detect_stack(slices, det, axis, threads);
    return group_boxes(boxes, plane_stream_geometry(vol, axis, source), p.group, scan_id);
}

// The maximum-projection slab stream.
inline std::vector<Candidate> detect_mip_stream(const GrayVolume& vol, const std::string& scan_id,
                                                const PipelineParams& p, int threads) {
    ReferenceBlobDetector det(p.detect);
    std::vector<GraySlice> slabs = mip_slab(vol, p.mip);
    std::vector<Box2D> boxes = detail::detect_stack(slabs, det, p.mip.axis, threads);
    return group_boxes(boxes, mip_stream_geometry(vol, p.mip, Source::AxialMip10mm), p.group, scan_id);
}

// All four detection streams over one scan: the three orthogonal plane stacks
// plus the axial maximum-projection slabs.
inline std::vector<Candidate> detect_candidates(const GrayVolume& plane_vol, const GrayVolume& mip_vol,
                                                const std::string& scan_id, const PipelineParams& p,
                                                int threads) {
    std::vector<Candidate> out;
    struct PlaneStream {
        PlaneAxis axis;
        Source source;
    };
    const PlaneStream planes[] = {
        {PlaneAxis::Axial, Source::Axial1mm},
        {PlaneAxis::Coronal, Source::Coronal1mm},
        {PlaneAxis::Sagittal, Source::Sagittal1mm},
    };
    for (const PlaneStream& ps : planes) {
        std::vector<Candidate> cands = detect_plane_stream(plane_vol, ps.axis, ps.source, scan_id, p, threads);
        out.insert(out.end(), cands.begin(), cands.end());
    }
    std::vector<Candidate> cands = detect_mip_stream(mip_vol, scan_id, p, threads);
    out.insert(out.end(), cands.begin(), cands.end());
    return out;
}

// Paths may be empty when the flag combination never touches that volume.
inline void stage_detect(const std::string& gray_path, const std::string& masked_path,
                         const std::string& scan_id, const std::string& out_csv, const PipelineParams& p,
                         int threads) {
    GrayVolume raw, masked;
    bool need_raw = !p.detect_use_mask || !p.mip_use_mask;
    bool need_masked = p.detect_use_mask || p.mip_use_mask;
    if (need_raw) {
        if (gray_path.empty()) throw std::invalid_argument("detect: unmasked gray volume path required");
        raw = read_mpv1_gray(gray_path);
    }
    if (need_masked) {
        if (masked_path.empty()) throw std::invalid_argument("detect: masked gray volume path required");
        masked = read_mpv1_gray(masked_path);
    }
    const GrayVolume& plane_vol = p.detect_use_mask ? masked : raw;
    const GrayVolume& mip_vol = p.mip_use_mask ? masked : raw;
    write_candidates(out_csv, detect_candidates(plane_vol, mip_vol, scan_id, p, threads));
}

// --- fuse -----------------------------------------------------------------------

// Candidates only ever merge within their own scan.
inline std::vector<Candidate> fuse_by_scan(const std::vector<Candidate>& cands, const MergeRule& rule) {
    std::map<std::string, std::vector<Candidate>> by_scan;
    for (const Candidate& c : cands) by_scan[c.scan_id].push_back(c);
    std::vector<Candidate> out;
    for (auto& [id, group] : by_scan) {
        std::vector<Candidate> fused = fuse_streams({group}, rule);
        out.insert(out.end(), fused.begin(), fused.end());
    }
    return out;
}

inline void stage_fuse(const std::string& in_csv, const std::string& out_csv, const PipelineParams& p) {
    CandidateTable t = read_candidates(in_csv);
    if (t.has_fpr) throw std::invalid_argument("fuse expects unscored candidates (no fpr_score column)");
    write_candidates(out_csv, fuse_by_scan(t.rows, p.merge));
}

// --- classify -------------------------------------------------------------------

// Appends the second-stage score column. With a weights file the network
// scores each cube; otherwise the shape-based heuristic stands in.
inline void stage_classify(const std::string& in_csv, const std::string& gray_path,
                           const std::string& weights_path, const std::string& out_csv,
                           const PipelineParams& p, int threads) {
    CandidateTable t = read_candidates(in_csv);
    GrayVolume g = read_mpv1_gray(gray_path);
    MsdNet net;
    bool use_net = !weights_path.empty();
    if (use_net) {
        net = build_msdnet();
        net.net.params = read_mpw1(weights_path);
    }
    t.has_fpr = true;
    t.fpr.assign(t.rows.size(), 0.0);
    parallel_for(t.rows.size(), threads, [&](std::size_t i) {
        Cube32 cube = extract_cube(g, t.rows[i], p.cube_margin_vox);
        t.fpr[i] = use_net ? classify_cube(net.net, cube) : heuristic_scorer(cube);
    });
    write_candidates(out_csv, t);
}

// --- evaluate -------------------------------------------------------------------

struct EvalOutputs {
    CpmReport report;
    StratReport strat;
    FrocCurve curve;
};

namespace detail {

inline std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

inline std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

inline std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

inline std::string eval_report_text(const EvalOutputs& e) {
    std::string out;
    out += "sensitivity by false-positive rate\n";
    out += "  fp/scan:";
    const char* rate_names[] = {"1/8", "1/4", "1/2", "1", "2", "4", "8"};
    for (const char* r : rate_names) out += pad_left(r, 8);
    out += "\n  sens:   ";
    for (double s : e.report.sensitivities) out += pad_left(fmt3(s), 8);
    out += "\n\n";
    out += "CPM " + fmt3(e.report.cpm) + " (CI " + fmt3(e.report.ci_low) + "-" + fmt3(e.report.ci_high) +
           ", " + std::to_string(e.report.n_bootstrap) + " bootstraps, seed " +
           std::to_string(e.report.seed) + ")\n\n";
    out += "detected/total by size and type\n";
    out += "  " + pad_right("size", 8);
    for (int t = 0; t < 3; ++t) out += pad_left(nodule_type_name(static_cast<NoduleType>(t)), 14);
    out += pad_left("all", 14);
    out += "\n";
    auto cell = [](const StratCell& c) {
        return std::to_string(c.detected) + "/" + std::to_string(c.total);
    };
    for (int b = 0; b < 4; ++b) {
        out += "  " + pad_right(size_bin_name(static_cast<SizeBin>(b)), 8);
        for (int t = 0; t < 3; ++t) out += pad_left(cell(e.strat.cells[b][t]), 14);
        out += pad_left(cell(e.strat.bin_totals[b]), 14);
        out += "\n";
    }
    out += "  " + pad_right("all", 8);
    for (int t = 0; t < 3; ++t) out += pad_left(cell(e.strat.type_totals[t]), 14);
    out += pad_left(cell(e.strat.overall), 14);
    out += "\n";
    if (e.strat.excluded_small > 0)
        out += "warning: excluded " + std::to_string(e.strat.excluded_small) + " annotation(s) under 3 mm\n";
    return out;
}

}  // namespace detail

inline EvalOutputs evaluate_candidates(const CandidateTable& t, const std::vector<NoduleAnnotation>& anns,
                                       const PipelineParams& p) {
    std::vector<Candidate> cands = effective_candidates(t);
    EvalOutputs e;
    std::vector<ScanRecord> records = make_scan_records(cands, anns, p.match);
    e.curve = froc_curve(records);
    e.report = cpm_report(records, p.bootstrap);
    MatchResult m = match_hits(cands, anns, p.match);
    e.strat = stratify(anns, m.detected);
    return e;
}

inline EvalOutputs stage_evaluate(const std::string& cand_csv, const std::string& ann_csv,
                                  const std::string& report_path, const std::string& froc_csv_path,
                                  const PipelineParams& p) {
    CandidateTable t = read_candidates(cand_csv);
    std::vector<NoduleAnnotation> anns = read_annotations(ann_csv);
    EvalOutputs e = evaluate_candidates(t, anns, p);
    if (!froc_csv_path.empty()) write_froc_csv(froc_csv_path, e.curve);
    if (!report_path.empty()) detail::write_text_file(report_path, detail::eval_report_text(e));
    return e;
}

// --- full pipeline ----------------------------------------------------------------

struct PipelinePaths {
    std::string preprocessed;
    std::string masked;
    std::string mask;
    std::string candidates;
    std::string fused;
    std::string scored;
    std::string report;
    std::string froc;
};

inline PipelinePaths pipeline_paths(const std::string& out_dir) {
    namespace fs = std::filesystem;
    auto join = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
    PipelinePaths p;
    p.preprocessed = join("preprocessed.mpv1");
    p.masked = join("masked.mpv1");
    p.mask = join("mask.mpv1");
    p.candidates = join("candidates.csv");
    p.fused = join("fused.csv");
    p.scored = join("scored.csv");
    p.report = join("report.txt");
    p.froc = join("froc.csv");
    return p;
}

// Chains the stages through materialized intermediate files; each stage
// re-reads its predecessor's output, so running the stages by hand with the
// same paths produces byte-identical artifacts. Returns the evaluation
// outputs when an annotation CSV was supplied.
inline EvalOutputs run_pipeline(const std::string& ct_path, const std::string& ann_path,
                                const std::string& out_dir, const std::string& scan_id,
                                const std::string& weights_path, const PipelineParams& p, int threads,
                                bool* evaluated = nullptr) {
    std::filesystem::create_directories(out_dir);
    PipelinePaths paths = pipeline_paths(out_dir);
    stage_preprocess(ct_path, paths.preprocessed, p);
    stage_segment(paths.preprocessed, paths.masked, paths.mask, p, threads);
    stage_detect(paths.preprocessed, paths.masked, scan_id, paths.candidates, p, threads);
    stage_fuse(paths.candidates, paths.fused, p);
    stage_classify(paths.fused, p.fpr_use_mask ? paths.masked : paths.preprocessed, weights_path,
                   paths.scored, p, threads);
    if (evaluated) *evaluated = !ann_path.empty();
    if (ann_path.empty()) return {};
    return stage_evaluate(paths.scored, ann_path, paths.report, paths.froc, p);
}

}  // namespace mpcad

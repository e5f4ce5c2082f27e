#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mpcad/phantom.hpp"
#include "mpcad/pipeline.hpp"

namespace {

struct GlobalOpts {
    std::string config_path;
    int threads = 1;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

mpcad::PipelineParams load_params(const GlobalOpts& g) {
    mpcad::PipelineParams p;
    if (!g.config_path.empty()) p = mpcad::PipelineParams::from_config(mpcad::Config::load(g.config_path));
    if (g.seed_set) p.bootstrap.seed = g.seed;
    return p;
}

std::string stem_of(const std::string& path) { return std::filesystem::path(path).stem().string(); }

void print_cpm(const mpcad::CpmReport& r) { std::printf("CPM %.3f\n", r.cpm); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-planar lung nodule CAD pipeline"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "key = value configuration file");
    app.add_option("--threads", g.threads, "worker thread count (default 1)");
    app.add_option("--seed", g.seed, "seed override (phantom generation, bootstrap)")
        ->each([&g](const std::string&) { g.seed_set = true; });

    // phantom
    std::string ph_volume, ph_annotations;
    mpcad::PhantomSpec ph_spec;
    int ph_dim = ph_spec.dims.nx;
    double ph_spacing = ph_spec.spacing.x;
    auto* ph = app.add_subcommand("phantom", "generate a synthetic CT volume with ground truth");
    ph->fallthrough();
    ph->add_option("--out-volume", ph_volume, "output HU volume (MPV1)")->required();
    ph->add_option("--out-annotations", ph_annotations, "output annotation CSV")->required();
    ph->add_option("--scan-id", ph_spec.scan_id, "scan id stamped on the annotations");
    ph->add_option("--dim", ph_dim, "cubic volume side in voxels (default 256)");
    ph->add_option("--spacing", ph_spacing, "isotropic voxel spacing in mm (default 1)");
    ph->add_option("--nodules", ph_spec.n_nodules, "nodule count");
    ph->add_option("--diameter-min", ph_spec.diameter_min_mm, "smallest nodule diameter, mm");
    ph->add_option("--diameter-max", ph_spec.diameter_max_mm, "largest nodule diameter, mm");
    ph->add_option("--vessels", ph_spec.n_vessels, "vessel count");
    ph->add_option("--vessel-radius", ph_spec.vessel_radius_mm, "vessel radius, mm");
    ph->add_option("--noise-sigma", ph_spec.noise_sigma, "additive Gaussian noise sigma, HU");
    ph->callback([&] {
        ph_spec.dims = {ph_dim, ph_dim, ph_dim};
        ph_spec.spacing = {ph_spacing, ph_spacing, ph_spacing};
        if (g.seed_set) ph_spec.seed = g.seed;
        mpcad::Phantom out = mpcad::generate_phantom(ph_spec);
        mpcad::write_mpv1(ph_volume, out.volume);
        mpcad::write_annotations(ph_annotations, out.annotations);
    });

    // preprocess
    std::string pre_in, pre_out;
    auto* pre = app.add_subcommand("preprocess", "resample to isotropic spacing and window to 8-bit");
    pre->fallthrough();
    pre->add_option("--in", pre_in, "input HU volume (MPV1)")->required();
    pre->add_option("--out", pre_out, "output gray volume (MPV1)")->required();
    pre->callback([&] { mpcad::stage_preprocess(pre_in, pre_out, load_params(g)); });

    // segment
    std::string seg_in, seg_out, seg_mask;
    auto* seg = app.add_subcommand("segment", "mask the gray volume to the lung field, slice by slice");
    seg->fallthrough();
    seg->add_option("--in", seg_in, "input gray volume (MPV1)")->required();
    seg->add_option("--out", seg_out, "output masked gray volume (MPV1)")->required();
    seg->add_option("--mask", seg_mask, "also write the 0/255 mask volume here");
    seg->callback([&] { mpcad::stage_segment(seg_in, seg_out, seg_mask, load_params(g), g.threads); });

    // detect
    std::string det_gray, det_masked, det_out, det_scan_id, det_plane = "all";
    bool det_no_mask = false;
    auto* det = app.add_subcommand("detect", "run the 2-D detection streams and group into candidates");
    det->fallthrough();
    det->add_option("--gray", det_gray, "unmasked gray volume (MPV1)");
    det->add_option("--masked", det_masked, "lung-masked gray volume (MPV1)");
    det->add_option("--out", det_out, "output candidate CSV")->required();
    det->add_option("--scan-id", det_scan_id, "scan id (default: input file stem)");
    det->add_option("--plane", det_plane, "restrict to one stream: axial|coronal|sagittal|mip|all")
        ->check(CLI::IsMember({"axial", "coronal", "sagittal", "mip", "all"}));
    det->add_flag("--no-mask", det_no_mask, "run every stream on the unmasked volume");
    det->callback([&] {
        mpcad::PipelineParams p = load_params(g);
        if (det_no_mask) {
            p.detect_use_mask = false;
            p.mip_use_mask = false;
        }
        std::string scan_id = det_scan_id;
        if (scan_id.empty()) scan_id = stem_of(det_gray.empty() ? det_masked : det_gray);
        if (det_plane == "all") {
            mpcad::stage_detect(det_gray, det_masked, scan_id, det_out, p, g.threads);
            return;
        }
        bool use_mask = det_plane == "mip" ? p.mip_use_mask : p.detect_use_mask;
        const std::string& path = use_mask ? det_masked : det_gray;
        if (path.empty())
            throw std::invalid_argument(use_mask ? "detect: masked gray volume path required"
                                                 : "detect: unmasked gray volume path required");
        mpcad::GrayVolume vol = mpcad::read_mpv1_gray(path);
        std::vector<mpcad::Candidate> cands;
        if (det_plane == "mip") {
            cands = mpcad::detect_mip_stream(vol, scan_id, p, g.threads);
        } else {
            mpcad::PlaneAxis axis = det_plane == "axial"     ? mpcad::PlaneAxis::Axial
                                    : det_plane == "coronal" ? mpcad::PlaneAxis::Coronal
                                                             : mpcad::PlaneAxis::Sagittal;
            mpcad::Source source = det_plane == "axial"     ? mpcad::Source::Axial1mm
                                   : det_plane == "coronal" ? mpcad::Source::Coronal1mm
                                                            : mpcad::Source::Sagittal1mm;
            cands = mpcad::detect_plane_stream(vol, axis, source, scan_id, p, g.threads);
        }
        mpcad::write_candidates(det_out, cands);
    });

    // fuse
    std::string fuse_in, fuse_out;
    auto* fus = app.add_subcommand("fuse", "merge candidates across detection streams");
    fus->fallthrough();
    fus->add_option("--in", fuse_in, "input candidate CSV")->required();
    fus->add_option("--out", fuse_out, "output fused candidate CSV")->required();
    fus->callback([&] { mpcad::stage_fuse(fuse_in, fuse_out, load_params(g)); });

    // classify
    std::string cls_in, cls_gray, cls_weights, cls_out;
    auto* cls = app.add_subcommand("classify", "score candidate cubes (network weights or heuristic)");
    cls->fallthrough();
    cls->add_option("--in", cls_in, "input candidate CSV")->required();
    cls->add_option("--gray", cls_gray, "gray volume the cubes are cut from (MPV1)")->required();
    cls->add_option("--weights", cls_weights, "MPW1 network weights; omit to use the heuristic scorer");
    cls->add_option("--out", cls_out, "output CSV with fpr_score column")->required();
    cls->callback(
        [&] { mpcad::stage_classify(cls_in, cls_gray, cls_weights, cls_out, load_params(g), g.threads); });

    // evaluate
    std::string ev_cands, ev_anns, ev_report, ev_froc, ev_sens;
    auto* ev = app.add_subcommand("evaluate", "score candidates against annotations (FROC, CPM, CI)");
    ev->fallthrough();
    ev->add_option("--candidates", ev_cands, "candidate CSV (fpr_score column ranks when present)");
    ev->add_option("--annotations", ev_anns, "annotation CSV");
    ev->add_option("--report", ev_report, "write the plain-text report here");
    ev->add_option("--froc", ev_froc, "write the FROC points CSV here");
    ev->add_option("--sensitivities", ev_sens, "compute CPM directly from a 7-sensitivity fixture");
    ev->callback([&] {
        mpcad::PipelineParams p = load_params(g);
        if (!ev_sens.empty()) {
            std::vector<double> s = mpcad::read_sensitivities(ev_sens);
            if (s.size() != 7)
                throw std::invalid_argument("expected 7 sensitivities, got " + std::to_string(s.size()));
            std::array<double, 7> arr{};
            std::copy(s.begin(), s.end(), arr.begin());
            std::printf("CPM %.3f\n", mpcad::cpm_of_sensitivities(arr));
            return;
        }
        if (ev_cands.empty() || ev_anns.empty())
            throw std::invalid_argument("evaluate needs --candidates and --annotations (or --sensitivities)");
        mpcad::EvalOutputs e = mpcad::stage_evaluate(ev_cands, ev_anns, ev_report, ev_froc, p);
        print_cpm(e.report);
    });

    // pipeline
    std::string pl_ct, pl_anns, pl_dir, pl_scan_id, pl_weights;
    auto* pl = app.add_subcommand("pipeline", "run every stage, materializing intermediates in a directory");
    pl->fallthrough();
    pl->add_option("--ct", pl_ct, "input HU volume (MPV1)")->required();
    pl->add_option("--annotations", pl_anns, "annotation CSV; enables the evaluate stage");
    pl->add_option("--out-dir", pl_dir, "directory for intermediate and final artifacts")->required();
    pl->add_option("--scan-id", pl_scan_id, "scan id (default: input file stem)");
    pl->add_option("--weights", pl_weights, "MPW1 network weights for the classify stage");
    pl->callback([&] {
        mpcad::PipelineParams p = load_params(g);
        std::string scan_id = pl_scan_id.empty() ? stem_of(pl_ct) : pl_scan_id;
        bool evaluated = false;
        mpcad::EvalOutputs e = mpcad::run_pipeline(pl_ct, pl_anns, pl_dir, scan_id, pl_weights, p,
                                                   g.threads, &evaluated);
        if (evaluated) print_cpm(e.report);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const mpcad::config_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const mpcad::io_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "mpcad/core.hpp"
#include "mpcad/detect.hpp"

namespace mpcad {

// --- annotations ------------------------------------------------------------

struct NoduleAnnotation {
    std::string scan_id;
    Vec3 center_mm;
    double diameter_mm = 0;
    std::vector<int> votes;  // reader texture scores, 1..5, optional
    int agreement = 0;       // number of readers

    double radius_mm() const { return 0.5 * diameter_mm; }
};

inline void validate(const NoduleAnnotation& a) {
    if (!(a.diameter_mm > 0)) throw std::invalid_argument("annotation diameter must be > 0");
    for (int v : a.votes)
        if (v < 1 || v > 5) throw std::invalid_argument("texture votes must be in 1..5");
}

enum class NoduleType { GroundGlass, PartSolid, Solid };

inline const char* nodule_type_name(NoduleType t) {
    switch (t) {
        case NoduleType::GroundGlass: return "ground-glass";
        case NoduleType::PartSolid: return "part-solid";
        default: return "solid";
    }
}

// Strict-majority typing: more than half the votes must equal 1
// (ground-glass) or 5 (solid); anything else, including ties and empty vote
// lists, is part-solid.
inline NoduleType nodule_type_of(const std::vector<int>& votes) {
    std::size_t ones = 0, fives = 0;
    for (int v : votes) {
        if (v == 1) ++ones;
        if (v == 5) ++fives;
    }
    if (2 * ones > votes.size()) return NoduleType::GroundGlass;
    if (2 * fives > votes.size()) return NoduleType::Solid;
    return NoduleType::PartSolid;
}

// Half-open, lower-inclusive diameter bins partitioning [3, inf) mm.
enum class SizeBin { S3to6, S6to8, S8to15, S15plus };

inline const char* size_bin_name(SizeBin b) {
    switch (b) {
        case SizeBin::S3to6: return "3-6mm";
        case SizeBin::S6to8: return "6-8mm";
        case SizeBin::S8to15: return "8-15mm";
        default: return ">=15mm";
    }
}

inline SizeBin size_bin_of(double diameter_mm) {
    if (diameter_mm < 3) throw std::invalid_argument("size bins start at 3 mm");
    if (diameter_mm < 6) return SizeBin::S3to6;
    if (diameter_mm < 8) return SizeBin::S6to8;
    if (diameter_mm < 15) return SizeBin::S8to15;
    return SizeBin::S15plus;
}

// --- hit matching -----------------------------------------------------------

enum class HitLabel { TP, FP, DuplicateIgnored };

struct MatchParams {
    double radius_scale = 1.0;  // hit iff distance <= radius_scale * diameter/2
};

struct MatchResult {
    std::vector<HitLabel> labels;    // parallel to the candidate list
    std::vector<bool> detected;      // parallel to the annotation list
    std::vector<int> hit_annotation; // candidate -> annotation index, -1 for FP
};

// Greedy assignment in descending score order: each candidate claims the
// nearest still-unclaimed annotation it lies inside (center distance at most
// radius_scale times the annotation radius); later hits on a claimed
// annotation count neither for nor against (DuplicateIgnored); candidates
// hitting nothing are FP. Score ties resolve by scan id then center, so the
// labeling is independent of input order.
inline MatchResult match_hits(const std::vector<Candidate>& cands, const std::vector<NoduleAnnotation>& anns,
                              const MatchParams& mp = {}) {
    for (const NoduleAnnotation& a : anns) validate(a);
    MatchResult r;
    r.labels.assign(cands.size(), HitLabel::FP);
    r.detected.assign(anns.size(), false);
    r.hit_annotation.assign(cands.size(), -1);

    std::vector<std::size_t> order(cands.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const Candidate &x = cands[a], &y = cands[b];
        if (x.score != y.score) return x.score > y.score;
        return std::tie(x.scan_id, x.center_mm.x, x.center_mm.y, x.center_mm.z) <
               std::tie(y.scan_id, y.center_mm.x, y.center_mm.y, y.center_mm.z);
    });

    std::vector<bool> claimed(anns.size(), false);
    for (std::size_t ci : order) {
        const Candidate& c = cands[ci];
        int best = -1, best_any = -1;
        double best_dist = 0;
        for (std::size_t ai = 0; ai < anns.size(); ++ai) {
            const NoduleAnnotation& a = anns[ai];
            if (a.scan_id != c.scan_id) continue;
            double d = norm(c.center_mm - a.center_mm);
            if (d > mp.radius_scale * a.radius_mm()) continue;
            best_any = static_cast<int>(ai);
            if (claimed[ai]) continue;
            if (best < 0 || d < best_dist) {
                best = static_cast<int>(ai);
                best_dist = d;
            }
        }
        if (best >= 0) {
            claimed[static_cast<std::size_t>(best)] = true;
            r.detected[static_cast<std::size_t>(best)] = true;
            r.labels[ci] = HitLabel::TP;
            r.hit_annotation[ci] = best;
        } else if (best_any >= 0) {
            r.labels[ci] = HitLabel::DuplicateIgnored;
            r.hit_annotation[ci] = best_any;
        }
    }
    return r;
}

// --- FROC and CPM -----------------------------------------------------------

// One scan's worth of labeled scores. Duplicate hits are dropped here: they
// never count as detections or false positives at any threshold (labels are
// fixed once by match_hits, not reassigned per threshold).
struct ScanRecord {
    std::string scan_id;
    int n_nodules = 0;
    std::vector<double> tp_scores;
    std::vector<double> fp_scores;
};

inline std::vector<ScanRecord> make_scan_records(const std::vector<Candidate>& cands,
                                                 const std::vector<NoduleAnnotation>& anns,
                                                 const MatchParams& mp = {}) {
    MatchResult m = match_hits(cands, anns, mp);
    std::map<std::string, ScanRecord> by_scan;
    for (const NoduleAnnotation& a : anns) {
        ScanRecord& rec = by_scan[a.scan_id];
        rec.scan_id = a.scan_id;
        rec.n_nodules += 1;
    }
    for (std::size_t i = 0; i < cands.size(); ++i) {
        ScanRecord& rec = by_scan[cands[i].scan_id];
        rec.scan_id = cands[i].scan_id;
        if (m.labels[i] == HitLabel::TP) rec.tp_scores.push_back(cands[i].score);
        if (m.labels[i] == HitLabel::FP) rec.fp_scores.push_back(cands[i].score);
    }
    std::vector<ScanRecord> out;
    out.reserve(by_scan.size());
    for (auto& [id, rec] : by_scan) out.push_back(std::move(rec));
    return out;
}

struct FrocPoint {
    double fp_per_scan = 0;
    double sensitivity = 0;
};

struct FrocCurve {
    std::vector<FrocPoint> points;
    int n_scans = 0;
    std::int64_t n_nodules = 0;
};

// Threshold sweep over the distinct candidate scores, descending; every
// threshold keeps the candidates scoring at least that much.
inline FrocCurve froc_curve(const std::vector<ScanRecord>& records) {
    FrocCurve c;
    c.n_scans = static_cast<int>(records.size());
    std::vector<std::pair<double, bool>> scored;  // (score, is_tp)
    for (const ScanRecord& r : records) {
        c.n_nodules += r.n_nodules;
        for (double s : r.tp_scores) scored.emplace_back(s, true);
        for (double s : r.fp_scores) scored.emplace_back(s, false);
    }
    if (c.n_scans < 1) throw std::invalid_argument("froc needs at least one scan");
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::int64_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scored.size(); ++i) {
        if (scored[i].second) ++tp; else ++fp;
        bool boundary = i + 1 == scored.size() || scored[i + 1].first != scored[i].first;
        if (!boundary) continue;
        FrocPoint p;
        p.fp_per_scan = static_cast<double>(fp) / c.n_scans;
        p.sensitivity = c.n_nodules > 0 ? static_cast<double>(tp) / static_cast<double>(c.n_nodules) : 0.0;
        c.points.push_back(p);
    }
    return c;
}

inline constexpr std::array<double, 7> kCpmRates{0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};

// Step-function reading: the sensitivity at a rate is the best sensitivity
// among curve points not exceeding that false-positive rate, zero if the
// curve starts above it.
inline double sensitivity_at(const FrocCurve& c, double fp_per_scan) {
    double best = 0;
    for (const FrocPoint& p : c.points)
        if (p.fp_per_scan <= fp_per_scan) best = std::max(best, p.sensitivity);
    return best;
}

inline std::array<double, 7> cpm_sensitivities(const FrocCurve& c) {
    std::array<double, 7> out{};
    for (std::size_t i = 0; i < kCpmRates.size(); ++i) out[i] = sensitivity_at(c, kCpmRates[i]);
    return out;
}

inline double cpm_of_sensitivities(const std::array<double, 7>& s) {
    double sum = 0;
    for (double v : s) sum += v;
    return sum / 7.0;
}

inline double cpm(const FrocCurve& c) { return cpm_of_sensitivities(cpm_sensitivities(c)); }

// --- bootstrap --------------------------------------------------------------

struct BootstrapParams {
    int n = 1000;
    double level = 0.95;
    std::uint64_t seed = 2020;
};

// Linear-interpolation empirical quantile of a sorted sample.
inline double percentile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("percentile of empty sample");
    if (q <= 0) return sorted.front();
    if (q >= 1) return sorted.back();
    double h = q * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(h);
    double f = h - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] * (1.0 - f) + sorted[lo + 1] * f;
}

inline double cpm_of_records(const std::vector<ScanRecord>& records) { return cpm(froc_curve(records)); }

// Scan-level bootstrap of the CPM: each replicate draws n_scans scans with
// replacement and recomputes the pooled metric. Replicate r runs on its own
// generator seeded seed^r, so the result does not depend on execution order
// and replicates can run concurrently.
inline std::pair<double, double> bootstrap_ci(const std::vector<ScanRecord>& records, const BootstrapParams& bp = {}) {
    if (records.empty()) throw std::invalid_argument("bootstrap needs at least one scan");
    if (bp.n < 1) throw std::invalid_argument("bootstrap replicate count must be >= 1");
    if (!(bp.level > 0 && bp.level < 1)) throw std::invalid_argument("bootstrap level must be in (0,1)");
    std::size_t n_scans = records.size();
    std::vector<double> cpms(static_cast<std::size_t>(bp.n));
    for (int rep = 0; rep < bp.n; ++rep) {
        Rng rng(bp.seed ^ static_cast<std::uint64_t>(rep));
        std::vector<ScanRecord> sample;
        sample.reserve(n_scans);
        for (std::size_t k = 0; k < n_scans; ++k)
            sample.push_back(records[static_cast<std::size_t>(rng.uniform_index(n_scans))]);
        cpms[static_cast<std::size_t>(rep)] = cpm_of_records(sample);
    }
    std::sort(cpms.begin(), cpms.end());
    double alpha = 0.5 * (1.0 - bp.level);
    return {percentile_sorted(cpms, alpha), percentile_sorted(cpms, 1.0 - alpha)};
}

struct CpmReport {
    std::array<double, 7> sensitivities{};
    double cpm = 0;
    double ci_low = 0, ci_high = 0;
    int n_bootstrap = 0;
    std::uint64_t seed = 0;
};

inline CpmReport cpm_report(const std::vector<ScanRecord>& records, const BootstrapParams& bp = {}) {
    FrocCurve curve = froc_curve(records);
    CpmReport rep;
    rep.sensitivities = cpm_sensitivities(curve);
    rep.cpm = cpm_of_sensitivities(rep.sensitivities);
    auto [lo, hi] = bootstrap_ci(records, bp);
    rep.ci_low = lo;
    rep.ci_high = hi;
    rep.n_bootstrap = bp.n;
    rep.seed = bp.seed;
    return rep;
}

// --- stratification ---------------------------------------------------------

struct StratCell {
    int total = 0;
    int detected = 0;

    double rate() const { return total > 0 ? static_cast<double>(detected) / total : 0.0; }
};

struct StratReport {
    StratCell cells[4][3];  // [SizeBin][NoduleType]
    StratCell bin_totals[4];
    StratCell type_totals[3];
    StratCell overall;
    int excluded_small = 0;  // diameter < 3 mm, outside the inclusion rule
};

inline StratReport stratify(const std::vector<NoduleAnnotation>& anns, const std::vector<bool>& detected) {
    if (anns.size() != detected.size()) throw std::invalid_argument("stratify: detected flags must match annotations");
    StratReport r;
    for (std::size_t i = 0; i < anns.size(); ++i) {
        validate(anns[i]);
        if (anns[i].diameter_mm < 3) {
            r.excluded_small += 1;
            continue;
        }
        int b = static_cast<int>(size_bin_of(anns[i].diameter_mm));
        int t = static_cast<int>(nodule_type_of(anns[i].votes));
        auto bump = [&](StratCell& c) {
            c.total += 1;
            if (detected[i]) c.detected += 1;
        };
        bump(r.cells[b][t]);
        bump(r.bin_totals[b]);
        bump(r.type_totals[t]);
        bump(r.overall);
    }
    return r;
}

}  // namespace mpcad

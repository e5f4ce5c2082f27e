#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "mpcad/core.hpp"
#include "mpcad/detect.hpp"
#include "mpcad/eval.hpp"

namespace mpcad {

namespace detail {

inline std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path, 0);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw io_error("read failure on " + path, text.size());
    return text;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open " + path + " for writing", 0);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw io_error("write failure on " + path, text.size());
}

// Walks a text buffer line by line, remembering where each line starts so
// parse errors can report a byte offset.
struct LineScanner {
    const std::string& text;
    std::size_t pos = 0;
    std::uint64_t line_start = 0;

    bool next(std::string& line) {
        if (pos >= text.size()) return false;
        line_start = pos;
        std::size_t nl = text.find('\n', pos);
        std::size_t end = nl == std::string::npos ? text.size() : nl;
        line.assign(text, pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = nl == std::string::npos ? text.size() : nl + 1;
        return true;
    }
};

inline std::vector<std::string> split_on(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t p = line.find(sep, start);
        if (p == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, p - start));
        start = p + 1;
    }
}

inline double parse_double_field(const std::string& field, const char* what, std::uint64_t offset) {
    double v = 0;
    const char* first = field.data();
    const char* last = first + field.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw io_error(std::string("malformed ") + what + " '" + field + "'", offset);
    return v;
}

inline int parse_int_field(const std::string& field, const char* what, std::uint64_t offset) {
    int v = 0;
    const char* first = field.data();
    const char* last = first + field.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw io_error(std::string("malformed ") + what + " '" + field + "'", offset);
    return v;
}

}  // namespace detail

// --- candidate CSV ------------------------------------------------------------

inline constexpr const char* kCandidateHeader = "scan_id,x_mm,y_mm,z_mm,radius_mm,score,source";
inline constexpr const char* kCandidateHeaderFpr = "scan_id,x_mm,y_mm,z_mm,radius_mm,score,source,fpr_score";

// Candidate list plus the optional second-stage score column. When `has_fpr`
// is set, `fpr` runs parallel to `rows`.
struct CandidateTable {
    bool has_fpr = false;
    std::vector<Candidate> rows;
    std::vector<double> fpr;
};

// Candidates re-scored for ranking: the second-stage score replaces the
// detector score when present, otherwise candidates pass through unchanged.
inline std::vector<Candidate> effective_candidates(const CandidateTable& t) {
    std::vector<Candidate> out = t.rows;
    if (t.has_fpr)
        for (std::size_t i = 0; i < out.size(); ++i) out[i].score = t.fpr[i];
    return out;
}

inline void write_candidates(const std::string& path, const CandidateTable& t) {
    if (t.has_fpr && t.fpr.size() != t.rows.size())
        throw std::invalid_argument("candidate table: fpr column length mismatch");
    std::string text = t.has_fpr ? kCandidateHeaderFpr : kCandidateHeader;
    text += '\n';
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const Candidate& c = t.rows[i];
        if (c.scan_id.find_first_of(",\n\r") != std::string::npos)
            throw std::invalid_argument("scan id '" + c.scan_id + "' contains a delimiter");
        text += c.scan_id;
        text += ',';
        text += detail::fmt6(c.center_mm.x);
        text += ',';
        text += detail::fmt6(c.center_mm.y);
        text += ',';
        text += detail::fmt6(c.center_mm.z);
        text += ',';
        text += detail::fmt6(c.radius_mm);
        text += ',';
        text += detail::fmt6(c.score);
        text += ',';
        text += source_name(c.source);
        if (t.has_fpr) {
            text += ',';
            text += detail::fmt6(t.fpr[i]);
        }
        text += '\n';
    }
    detail::write_text_file(path, text);
}

inline void write_candidates(const std::string& path, const std::vector<Candidate>& cands) {
    CandidateTable t;
    t.rows = cands;
    write_candidates(path, t);
}

inline CandidateTable read_candidates(const std::string& path) {
    std::string text = detail::read_text_file(path);
    detail::LineScanner sc{text};
    std::string line;
    if (!sc.next(line)) throw io_error("empty candidate CSV " + path, 0);
    CandidateTable t;
    if (line == kCandidateHeaderFpr) {
        t.has_fpr = true;
    } else if (line != kCandidateHeader) {
        throw io_error("unexpected candidate CSV header '" + line + "'", 0);
    }
    std::size_t want = t.has_fpr ? 8 : 7;
    while (sc.next(line)) {
        if (line.empty()) continue;
        std::vector<std::string> f = detail::split_on(line, ',');
        if (f.size() != want)
            throw io_error("candidate row has " + std::to_string(f.size()) + " fields, expected " +
                               std::to_string(want),
                           sc.line_start);
        Candidate c;
        c.scan_id = f[0];
        c.center_mm.x = detail::parse_double_field(f[1], "x_mm", sc.line_start);
        c.center_mm.y = detail::parse_double_field(f[2], "y_mm", sc.line_start);
        c.center_mm.z = detail::parse_double_field(f[3], "z_mm", sc.line_start);
        c.radius_mm = detail::parse_double_field(f[4], "radius_mm", sc.line_start);
        c.score = detail::parse_double_field(f[5], "score", sc.line_start);
        try {
            c.source = source_from_name(f[6]);
        } catch (const std::invalid_argument& e) {
            throw io_error(e.what(), sc.line_start);
        }
        if (t.has_fpr) t.fpr.push_back(detail::parse_double_field(f[7], "fpr_score", sc.line_start));
        t.rows.push_back(std::move(c));
    }
    return t;
}

// --- annotation CSV -----------------------------------------------------------

inline constexpr const char* kAnnotationHeader = "scan_id,x_mm,y_mm,z_mm,diameter_mm,votes";

inline void write_annotations(const std::string& path, const std::vector<NoduleAnnotation>& anns) {
    std::string text = kAnnotationHeader;
    text += '\n';
    for (const NoduleAnnotation& a : anns) {
        if (a.scan_id.find_first_of(",\n\r") != std::string::npos)
            throw std::invalid_argument("scan id '" + a.scan_id + "' contains a delimiter");
        text += a.scan_id;
        text += ',';
        text += detail::fmt6(a.center_mm.x);
        text += ',';
        text += detail::fmt6(a.center_mm.y);
        text += ',';
        text += detail::fmt6(a.center_mm.z);
        text += ',';
        text += detail::fmt6(a.diameter_mm);
        text += ',';
        for (std::size_t i = 0; i < a.votes.size(); ++i) {
            if (i) text += ';';
            text += std::to_string(a.votes[i]);
        }
        text += '\n';
    }
    detail::write_text_file(path, text);
}

// The reader count is not persisted; reading derives it from the vote list.
inline std::vector<NoduleAnnotation> read_annotations(const std::string& path) {
    std::string text = detail::read_text_file(path);
    detail::LineScanner sc{text};
    std::string line;
    if (!sc.next(line)) throw io_error("empty annotation CSV " + path, 0);
    if (line != kAnnotationHeader) throw io_error("unexpected annotation CSV header '" + line + "'", 0);
    std::vector<NoduleAnnotation> out;
    while (sc.next(line)) {
        if (line.empty()) continue;
        std::vector<std::string> f = detail::split_on(line, ',');
        if (f.size() != 6)
            throw io_error("annotation row has " + std::to_string(f.size()) + " fields, expected 6",
                           sc.line_start);
        NoduleAnnotation a;
        a.scan_id = f[0];
        a.center_mm.x = detail::parse_double_field(f[1], "x_mm", sc.line_start);
        a.center_mm.y = detail::parse_double_field(f[2], "y_mm", sc.line_start);
        a.center_mm.z = detail::parse_double_field(f[3], "z_mm", sc.line_start);
        a.diameter_mm = detail::parse_double_field(f[4], "diameter_mm", sc.line_start);
        if (!f[5].empty())
            for (const std::string& v : detail::split_on(f[5], ';'))
                a.votes.push_back(detail::parse_int_field(v, "vote", sc.line_start));
        a.agreement = static_cast<int>(a.votes.size());
        try {
            validate(a);
        } catch (const std::invalid_argument& e) {
            throw io_error(e.what(), sc.line_start);
        }
        out.push_back(std::move(a));
    }
    return out;
}

// --- FROC points CSV ----------------------------------------------------------

inline constexpr const char* kFrocHeader = "fp_per_scan,sensitivity";

inline void write_froc_csv(const std::string& path, const FrocCurve& c) {
    std::string text = kFrocHeader;
    text += '\n';
    for (const FrocPoint& p : c.points) {
        text += detail::fmt6(p.fp_per_scan);
        text += ',';
        text += detail::fmt6(p.sensitivity);
        text += '\n';
    }
    detail::write_text_file(path, text);
}

// --- sensitivity fixtures -------------------------------------------------------

// Plain-text list of sensitivities: numbers separated by whitespace or
// newlines, `#` starting a comment that runs to end of line.
inline std::vector<double> read_sensitivities(const std::string& path) {
    std::string text = detail::read_text_file(path);
    std::vector<double> out;
    std::size_t i = 0;
    while (i < text.size()) {
        char ch = text[i];
        if (ch == '#') {
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n' || ch == ',') {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != ',' &&
               text[i] != '#')
            ++i;
        out.push_back(detail::parse_double_field(text.substr(start, i - start), "sensitivity", start));
    }
    return out;
}

}  // namespace mpcad

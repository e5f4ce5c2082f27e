#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "mpcad/config.hpp"
#include "mpcad/csv.hpp"
#include "test_support.hpp"

using namespace mpcad;

namespace {

Candidate cand(const std::string& scan, double x, double y, double z, double r, double score,
               Source src = Source::Fused) {
    Candidate c;
    c.scan_id = scan;
    c.center_mm = {x, y, z};
    c.radius_mm = r;
    c.score = score;
    c.source = src;
    return c;
}

NoduleAnnotation ann(const std::string& scan, double x, double y, double z, double diam,
                     std::vector<int> votes = {}) {
    NoduleAnnotation a;
    a.scan_id = scan;
    a.center_mm = {x, y, z};
    a.diameter_mm = diam;
    a.votes = std::move(votes);
    a.agreement = static_cast<int>(a.votes.size());
    return a;
}

}  // namespace

// --- candidate CSV ------------------------------------------------------------

TEST_CASE("candidate csv round trips through the fixed six-decimal format") {
    support::TempDir td("cands");
    std::vector<Candidate> cands{
        cand("scan-a", 1.25, -3.5, 100.0, 4.0, 0.875, Source::Axial1mm),
        cand("scan-b", 0, 0, 0, 2.5, 1.0, Source::AxialMip10mm),
    };
    std::string path = td.path("c.csv");
    write_candidates(path, cands);

    std::string text = detail::read_text_file(path);
    CHECK(text.rfind("scan_id,x_mm,y_mm,z_mm,radius_mm,score,source\n", 0) == 0);
    CHECK(text.find("scan-a,1.250000,-3.500000,100.000000,4.000000,0.875000,axial_1mm\n") !=
          std::string::npos);
    CHECK(text.find("axial_mip_10mm") != std::string::npos);

    CandidateTable back = read_candidates(path);
    CHECK_FALSE(back.has_fpr);
    REQUIRE(back.rows.size() == 2);
    CHECK(back.rows[0].scan_id == "scan-a");
    CHECK(back.rows[0].center_mm.x == 1.25);  // six decimals keep these exactly
    CHECK(back.rows[0].center_mm.y == -3.5);
    CHECK(back.rows[0].score == 0.875);
    CHECK(back.rows[0].source == Source::Axial1mm);
    CHECK(back.rows[1].source == Source::AxialMip10mm);
    CHECK(back.rows[1].radius_mm == 2.5);
}

TEST_CASE("the fpr column appears only when requested and runs parallel") {
    support::TempDir td("fpr");
    CandidateTable t;
    t.rows = {cand("s", 1, 2, 3, 4, 0.5), cand("s", 5, 6, 7, 8, 0.25)};
    t.has_fpr = true;
    t.fpr = {0.75, 0.125};
    std::string path = td.path("c.csv");
    write_candidates(path, t);

    std::string text = detail::read_text_file(path);
    CHECK(text.rfind("scan_id,x_mm,y_mm,z_mm,radius_mm,score,source,fpr_score\n", 0) == 0);

    CandidateTable back = read_candidates(path);
    REQUIRE(back.has_fpr);
    REQUIRE(back.fpr.size() == 2);
    CHECK(back.fpr[0] == 0.75);
    CHECK(back.fpr[1] == 0.125);
    CHECK(back.rows[0].score == 0.5);  // detector score is preserved alongside

    std::vector<Candidate> eff = effective_candidates(back);
    CHECK(eff[0].score == 0.75);
    CHECK(eff[1].score == 0.125);
    std::vector<Candidate> plain = effective_candidates({false, back.rows, {}});
    CHECK(plain[0].score == 0.5);
}

TEST_CASE("writing a mismatched fpr column fails before touching the file") {
    support::TempDir td("fprbad");
    CandidateTable t;
    t.rows = {cand("s", 1, 2, 3, 4, 0.5)};
    t.has_fpr = true;
    t.fpr = {0.1, 0.2};
    CHECK_THROWS_AS(write_candidates(td.path("c.csv"), t), std::invalid_argument);
}

TEST_CASE("scan ids with delimiters are rejected on write") {
    support::TempDir td("delim");
    CHECK_THROWS_AS(write_candidates(td.path("c.csv"), {cand("a,b", 0, 0, 0, 1, 1)}),
                    std::invalid_argument);
}

TEST_CASE("candidate csv reader reports malformed input with byte offsets") {
    support::TempDir td("badcsv");
    std::string path = td.path("c.csv");

    CHECK_THROWS_AS(read_candidates(td.path("missing.csv")), io_error);

    detail::write_text_file(path, "");
    CHECK_THROWS_AS(read_candidates(path), io_error);

    detail::write_text_file(path, "bogus,header\n");
    try {
        read_candidates(path);
        FAIL("expected a header error");
    } catch (const io_error& e) {
        CHECK(e.offset() == 0);
        CHECK(std::string(e.what()).find("header") != std::string::npos);
    }

    std::string head = std::string(kCandidateHeader) + "\n";
    detail::write_text_file(path, head + "s,1,2,3,4,0.5\n");  // six fields
    try {
        read_candidates(path);
        FAIL("expected a field-count error");
    } catch (const io_error& e) {
        CHECK(e.offset() == head.size());
    }

    detail::write_text_file(path, head + "s,1,2,3,4,abc,fused\n");
    try {
        read_candidates(path);
        FAIL("expected a number error");
    } catch (const io_error& e) {
        CHECK(e.offset() == head.size());
        CHECK(std::string(e.what()).find("score") != std::string::npos);
    }

    std::string good_row = "s,1.000000,2.000000,3.000000,4.000000,0.500000,fused\n";
    detail::write_text_file(path, head + good_row + "s,1,2,3,4,0.5,warp_drive\n");
    try {
        read_candidates(path);
        FAIL("expected a source error");
    } catch (const io_error& e) {
        CHECK(e.offset() == head.size() + good_row.size());
        CHECK(std::string(e.what()).find("warp_drive") != std::string::npos);
    }
}

TEST_CASE("candidate csv ignores blank lines and final newline variants") {
    support::TempDir td("blank");
    std::string path = td.path("c.csv");
    std::string text = std::string(kCandidateHeader) +
                       "\n\ns,1.000000,2.000000,3.000000,4.000000,0.500000,fused";
    detail::write_text_file(path, text);  // no trailing newline
    CandidateTable t = read_candidates(path);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].center_mm.z == 3.0);
}

// --- annotation CSV -----------------------------------------------------------

TEST_CASE("annotation csv round trips votes as a semicolon list") {
    support::TempDir td("anns");
    std::vector<NoduleAnnotation> anns{
        ann("p1", 10.5, 20.25, 30.0, 6.5, {5, 3, 5, 1}),
        ann("p2", 1, 2, 3, 4.0),
    };
    std::string path = td.path("a.csv");
    write_annotations(path, anns);

    std::string text = detail::read_text_file(path);
    CHECK(text.rfind("scan_id,x_mm,y_mm,z_mm,diameter_mm,votes\n", 0) == 0);
    CHECK(text.find("p1,10.500000,20.250000,30.000000,6.500000,5;3;5;1\n") != std::string::npos);
    CHECK(text.find("p2,1.000000,2.000000,3.000000,4.000000,\n") != std::string::npos);

    std::vector<NoduleAnnotation> back = read_annotations(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].votes == std::vector<int>{5, 3, 5, 1});
    CHECK(back[0].agreement == 4);
    CHECK(back[0].diameter_mm == 6.5);
    CHECK(back[1].votes.empty());
    CHECK(back[1].agreement == 0);
}

TEST_CASE("annotation csv validates rows as it reads them") {
    support::TempDir td("annbad");
    std::string path = td.path("a.csv");
    std::string head = std::string(kAnnotationHeader) + "\n";

    detail::write_text_file(path, "wrong\n");
    CHECK_THROWS_AS(read_annotations(path), io_error);

    detail::write_text_file(path, head + "s,1,2,3,4\n");  // five fields
    CHECK_THROWS_AS(read_annotations(path), io_error);

    detail::write_text_file(path, head + "s,1,2,3,0,5\n");  // zero diameter
    try {
        read_annotations(path);
        FAIL("expected a validation error");
    } catch (const io_error& e) {
        CHECK(e.offset() == head.size());
        CHECK(std::string(e.what()).find("diameter") != std::string::npos);
    }

    detail::write_text_file(path, head + "s,1,2,3,6,5;9\n");  // vote out of range
    CHECK_THROWS_AS(read_annotations(path), io_error);

    detail::write_text_file(path, head + "s,1,2,3,6,5;x\n");  // vote not a number
    CHECK_THROWS_AS(read_annotations(path), io_error);
}

// --- FROC CSV and sensitivity fixtures ------------------------------------------

TEST_CASE("froc csv lists curve points under the fixed header") {
    support::TempDir td("froc");
    FrocCurve c;
    c.n_scans = 2;
    c.n_nodules = 4;
    c.points = {{0.0, 0.25}, {0.5, 0.75}};
    std::string path = td.path("f.csv");
    write_froc_csv(path, c);
    CHECK(detail::read_text_file(path) ==
          "fp_per_scan,sensitivity\n0.000000,0.250000\n0.500000,0.750000\n");
}

TEST_CASE("sensitivity fixtures accept comments and loose whitespace") {
    support::TempDir td("sens");
    std::string path = td.path("s.txt");
    detail::write_text_file(path,
                            "# published operating points\n"
                            "0.893 0.917\t0.930\n"
                            "0.942, 0.960  # middle rates\n"
                            "0.966\n0.973");
    std::vector<double> s = read_sensitivities(path);
    REQUIRE(s.size() == 7);
    CHECK(s[0] == 0.893);
    CHECK(s[3] == 0.942);
    CHECK(s[6] == 0.973);

    detail::write_text_file(path, "0.5 oops\n");
    CHECK_THROWS_AS(read_sensitivities(path), io_error);

    detail::write_text_file(path, "# nothing but comments\n");
    CHECK(read_sensitivities(path).empty());
}

// --- config -------------------------------------------------------------------

TEST_CASE("config parses keys, trims whitespace and strips comments") {
    Config c = Config::parse(
        "# pipeline settings\n"
        "threads = 4\n"
        "  scale =  1.25  # trailing comment\n"
        "name= phantom_run\n"
        "masked=true\n"
        "\n");
    CHECK(c.get_int("threads", 1) == 4);
    CHECK(c.get_double("scale", 0.0) == 1.25);
    CHECK(c.get_string("name", "") == "phantom_run");
    CHECK(c.get_bool("masked", false));
    CHECK_NOTHROW(c.reject_unconsumed());
}

TEST_CASE("config falls back per key and tracks consumption separately") {
    Config c = Config::parse("a = 1\nb = 2\n");
    CHECK(c.get_int("a", 0) == 1);
    CHECK(c.get_int("missing", 42) == 42);
    CHECK(c.has("b"));
    CHECK_FALSE(c.has("missing"));
    // b was never consumed
    try {
        c.reject_unconsumed();
        FAIL("expected an unknown-key error");
    } catch (const config_error& e) {
        CHECK(e.key() == "b");
        CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
    }
    CHECK(c.get_int("b", 0) == 2);
    CHECK_NOTHROW(c.reject_unconsumed());
}

TEST_CASE("config rejects malformed lines, duplicates and type errors") {
    CHECK_THROWS_AS(Config::parse("just words\n"), config_error);
    CHECK_THROWS_AS(Config::parse("= 5\n"), config_error);
    CHECK_THROWS_AS(Config::parse("a = 1\na = 2\n"), config_error);

    Config c = Config::parse("n = 1.5\nf = maybe\nu = -3\n");
    try {
        c.get_int("n", 0);
        FAIL("expected an integer error");
    } catch (const config_error& e) {
        CHECK(e.key() == "n");
    }
    CHECK(c.get_double("n", 0) == 1.5);
    CHECK_THROWS_AS(c.get_bool("f", true), config_error);
    CHECK_THROWS_AS(c.get_u64("u", 0), config_error);
}

TEST_CASE("config accepts the documented boolean spellings") {
    Config c = Config::parse("a=true\nb=1\nc=yes\nd=on\ne=false\nf=0\ng=no\nh=off\n");
    CHECK(c.get_bool("a", false));
    CHECK(c.get_bool("b", false));
    CHECK(c.get_bool("c", false));
    CHECK(c.get_bool("d", false));
    CHECK_FALSE(c.get_bool("e", true));
    CHECK_FALSE(c.get_bool("f", true));
    CHECK_FALSE(c.get_bool("g", true));
    CHECK_FALSE(c.get_bool("h", true));
}

TEST_CASE("config loads from a file and value-only equals signs stay intact") {
    support::TempDir td("cfg");
    std::string path = td.path("p.cfg");
    detail::write_text_file(path, "expr = a=b\n");
    Config c = Config::load(path);
    CHECK(c.get_string("expr", "") == "a=b");  // split on the first '='
    CHECK_THROWS_AS(Config::load(td.path("missing.cfg")), io_error);
}

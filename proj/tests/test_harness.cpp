#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "opcalc/errors.hpp"
#include "opcalc/scenario.hpp"

using namespace opcalc;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "opcalc-test-harness";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::map<std::string, int> status_counts(const std::vector<ReportRow>& rows) {
    std::map<std::string, int> c;
    for (const auto& r : rows) c[r.status.substr(0, r.status.find('('))]++;
    return c;
}

// 2x2 rotation scenario: generator 2i I, spans crossing the branch seam
void write_rotation_scenario(const fs::path& dir) {
    spit(dir / "rot.mat", "2\n0,2 0,0\n0,0 0,2\n");
    spit(dir / "rot.json",
         "{\"id\":\"rot\",\"generator\":{\"dim\":2,\"T\":2.0,\"terms\":[{\"coef\":"
         "{\"kind\":\"const\",\"value\":1.0},\"matrix_file\":\"rot.mat\"}]},"
         "\"times\":[[1.75,0.75,0.0]],\"kappa_policy\":{\"mode\":\"fixed\",\"value\":[0,0]},"
         "\"checks\":[\"eq4_chain\",\"wrap_detect\",\"integral_rep\",\"semigroup\"]}");
}

}  // namespace

TEST_CASE("check registry and default tolerances") {
    const std::vector<std::string> expected{
        "eq4_chain",  "eq5_commuting",      "eq6_shifted_chain", "eq7_shifted_commuting",
        "thm1_axioms", "thm2_module",       "wrap_detect",       "round_trip",
        "generator_recovery", "integral_rep", "semigroup"};
    const auto& reg = check_registry();
    CHECK(reg.size() == expected.size());
    for (const std::string& name : expected) {
        CHECK(check_registered(name));
        CHECK(std::find(reg.begin(), reg.end(), name) != reg.end());
        CHECK(default_tolerance(name) > 0.0);
    }
    CHECK_FALSE(check_registered("bogus"));

    CHECK(default_tolerance("eq4_chain") == 1e-8);
    CHECK(default_tolerance("thm1_axioms") == 1e-12);
    CHECK(default_tolerance("thm2_module") == 1e-10);
    CHECK(default_tolerance("round_trip") == 1e-9);
    CHECK(default_tolerance("generator_recovery") == 1e-5);
    CHECK(default_tolerance("integral_rep") == 1e-6);
}

TEST_CASE("report csv layout is pinned") {
    ReportRow row;
    row.id = "abc";
    row.check = "round_trip";
    row.t = 0.5;
    row.r = 0.25;
    row.s = 0.0;
    row.kappa = Complex(2.0, -1.0);
    row.k_norm = 5.0;
    row.nodes = 256;
    row.h = 0.001;
    row.residual = 1.25e-10;
    row.threshold = 1e-9;
    row.status = "pass";

    std::ostringstream out;
    write_report_csv({row}, out);
    CHECK(out.str() ==
          "id,check,t,r,s,kappa_re,kappa_im,K_norm,N,h,residual,threshold,status\n"
          "abc,round_trip,0.5,0.25,0,2,-1,5,256,0.001,1.25e-10,1e-09,pass\n");
}

TEST_CASE("config parse errors point into the document") {
    const fs::path dir = work_dir();

    spit(dir / "bad_dim.json",
         "{\"id\":\"x\",\"generator\":{\"T\":1.0,\"terms\":[]},\"times\":[[0,0,0]],"
         "\"checks\":[\"eq4_chain\"]}");
    CHECK_THROWS_WITH_AS(load_scenarios(dir / "bad_dim.json"),
                         doctest::Contains("/generator/dim"), ConfigInvalid);

    spit(dir / "bad_matrix.json",
         "{\"id\":\"x\",\"generator\":{\"dim\":2,\"T\":1.0,\"terms\":[{\"coef\":{\"kind\":"
         "\"const\"},\"matrix_file\":\"nope.mat\"}]},\"times\":[[0,0,0]],"
         "\"checks\":[\"eq4_chain\"]}");
    CHECK_THROWS_AS(load_scenarios(dir / "bad_matrix.json"), MatrixFileMissing);

    spit(dir / "bad_check.json",
         "{\"id\":\"x\",\"generator\":{\"dim\":1,\"T\":1.0,\"terms\":[]},"
         "\"times\":[[0.1,0,0]],\"checks\":[\"bogus\"]}");
    CHECK_THROWS_WITH_AS(load_scenarios(dir / "bad_check.json"),
                         doctest::Contains("/checks/0"), ConfigInvalid);

    spit(dir / "bad_time.json",
         "{\"id\":\"x\",\"generator\":{\"dim\":1,\"T\":1.0,\"terms\":[]},"
         "\"times\":[[5.0,0,0]],\"checks\":[\"eq4_chain\"]}");
    CHECK_THROWS_WITH_AS(load_scenarios(dir / "bad_time.json"),
                         doctest::Contains("/times/0"), ConfigInvalid);

    spit(dir / "bad_tol.json",
         "{\"id\":\"x\",\"generator\":{\"dim\":1,\"T\":1.0,\"terms\":[]},"
         "\"times\":[[0.1,0,0]],\"checks\":[\"eq4_chain\"],"
         "\"tolerances\":{\"eq4_chain\":-1.0}}");
    CHECK_THROWS_AS(load_scenarios(dir / "bad_tol.json"), ConfigInvalid);

    spit(dir / "dup.json",
         "{\"scenarios\":[{\"id\":\"x\",\"generator\":{\"dim\":1,\"T\":1.0,\"terms\":[]},"
         "\"times\":[[0.1,0,0]],\"checks\":[\"eq4_chain\"]},"
         "{\"id\":\"x\",\"generator\":{\"dim\":1,\"T\":1.0,\"terms\":[]},"
         "\"times\":[[0.1,0,0]],\"checks\":[\"eq4_chain\"]}]}");
    CHECK_THROWS_AS(load_scenarios(dir / "dup.json"), ConfigInvalid);

    CHECK_THROWS_AS(load_scenarios(dir / "absent.json"), ConfigInvalid);
}

TEST_CASE("zero generator scenario passes everything cleanly") {
    const fs::path dir = work_dir();
    spit(dir / "zero.json",
         "{\"id\":\"zero\",\"generator\":{\"dim\":3,\"T\":1.0,\"terms\":[]},"
         "\"times\":[[0.9,0.4,-0.3]],\"checks\":[\"eq4_chain\",\"thm1_axioms\","
         "\"round_trip\"]}");
    auto scns = load_scenarios(dir / "zero.json");
    REQUIRE(scns.size() == 1);
    auto rows = run_checks(scns[0]);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
        CHECK(r.status == "pass");
        CHECK(r.residual < 1e-12);
    }
}

TEST_CASE("tolerance overrides flip a row to fail") {
    const fs::path dir = work_dir();
    spit(dir / "m.mat", "1\n0.1,0.2\n");
    spit(dir / "tight.json",
         "{\"id\":\"tight\",\"generator\":{\"dim\":1,\"T\":2.0,\"terms\":[{\"coef\":"
         "{\"kind\":\"sin\"},\"matrix_file\":\"m.mat\"}]},\"times\":[[0.7,0.4,0.1]],"
         "\"checks\":[\"round_trip\"],\"tolerances\":{\"round_trip\":1e-30}}");
    auto rows = run_checks(load_scenarios(dir / "tight.json")[0]);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].status == "fail");
    CHECK(rows[0].residual > rows[0].threshold);

    auto res = run_config(dir / "tight.json", dir / "tight_out", 1, false);
    CHECK(res.exit_code == 1);
}

TEST_CASE("rotation scenario: wrap rows and diagnosis") {
    const fs::path dir = work_dir() / "rot";
    fs::create_directories(dir);
    write_rotation_scenario(dir);

    auto rows = run_checks(load_scenarios(dir / "rot.json")[0]);
    std::map<std::string, std::string> status;
    for (const auto& r : rows) status[r.check] = r.status;
    CHECK(status["eq4_chain"] == "wrap");
    CHECK(status["integral_rep"] == "wrap");
    CHECK(status["wrap_detect"] == "wrap");
    CHECK(status["semigroup"] == "pass");

    // wrap defect eigenvalues document the lattice offset
    for (const auto& r : rows)
        if (r.check == "integral_rep")
            for (Complex mu : r.defect_eigenvalues)
                CHECK(std::abs(std::abs(mu.imag()) - 6.283185307179586) < 1e-6);

    // without strict wrap the run succeeds; with it the exit flips, bytes do not
    auto res = run_config(dir / "rot.json", dir / "out", 1, false);
    CHECK(res.exit_code == 0);

    // the merged run result comes back sorted by (id, check)
    for (size_t i = 1; i < res.rows.size(); ++i)
        CHECK(std::pair(res.rows[i - 1].id, res.rows[i - 1].check) <=
              std::pair(res.rows[i].id, res.rows[i].check));
    auto strict = run_config(dir / "rot.json", dir / "out_strict", 1, true);
    CHECK(strict.exit_code == 1);
    CHECK(slurp(res.report_path) == slurp(strict.report_path));

    const std::string summary = slurp(res.summary_path);
    CHECK(summary.find("wrap_diagnoses") != std::string::npos);
    CHECK(summary.find("6.28") != std::string::npos);
}

TEST_CASE("ensemble generation is deterministic") {
    const fs::path dir = work_dir() / "ens";
    EnsembleOptions opt;
    opt.seed = 42;
    opt.count = 2;
    opt.dim = 3;
    opt.profile = "right-half-plane";
    auto w1 = generate_ensemble(opt, dir / "a");
    auto w2 = generate_ensemble(opt, dir / "b");
    REQUIRE(w1.size() == w2.size());
    CHECK(w1.size() >= 3);  // ensemble.json plus matrix files
    for (size_t i = 0; i < w1.size(); ++i) CHECK(slurp(w1[i]) == slurp(w2[i]));

    // a different seed changes the content
    opt.seed = 43;
    auto w3 = generate_ensemble(opt, dir / "c");
    CHECK(slurp(w1.front()) != slurp(w3.front()));

    EnsembleOptions bad = opt;
    bad.profile = "unknown";
    CHECK_THROWS_AS(generate_ensemble(bad, dir / "d"), ConfigInvalid);
    bad = opt;
    bad.dim = 99;
    CHECK_THROWS_AS(generate_ensemble(bad, dir / "e"), ConfigInvalid);
}

TEST_CASE("right-half-plane ensemble passes all checks") {
    const fs::path dir = work_dir() / "rhp";
    EnsembleOptions opt;
    opt.seed = 42;
    opt.count = 2;
    opt.dim = 3;
    opt.profile = "right-half-plane";
    generate_ensemble(opt, dir);

    auto scns = load_scenarios(dir / "ensemble.json");
    REQUIRE(scns.size() == 2);
    CHECK(scns[0].checks.size() == check_registry().size());

    auto res1 = run_config(dir / "ensemble.json", dir / "out1", 1, false);
    CHECK(res1.exit_code == 0);
    auto counts = status_counts(res1.rows);
    CHECK(counts["fail"] == 0);
    CHECK(counts["skipped"] == 0);
    CHECK(counts["pass"] > 0);

    // worker count must not change a byte
    auto res4 = run_config(dir / "ensemble.json", dir / "out4", 4, false);
    CHECK(slurp(res1.report_path) == slurp(res4.report_path));
    CHECK(slurp(res1.summary_path) == slurp(res4.summary_path));
}

TEST_CASE("near-cut ensemble engages the kappa ladder") {
    const fs::path dir = work_dir() / "ncut";
    EnsembleOptions opt;
    opt.seed = 7;
    opt.count = 2;
    opt.dim = 4;
    opt.profile = "near-cut";
    generate_ensemble(opt, dir);
    auto res = run_config(dir / "ensemble.json", dir / "out", 0, false);
    CHECK(res.exit_code == 0);

    bool kappa_used = false;
    int round_trip_passes = 0;
    for (const auto& r : res.rows) {
        if (r.check == "round_trip" && std::abs(r.kappa) > 0.0) kappa_used = true;
        if (r.check == "round_trip" && r.status == "pass") ++round_trip_passes;
    }
    CHECK(kappa_used);
    CHECK(round_trip_passes >= 3);
}

TEST_CASE("rotational ensemble wraps without failing") {
    const fs::path dir = work_dir() / "rotens";
    EnsembleOptions opt;
    opt.seed = 11;
    opt.count = 3;
    opt.dim = 2;
    opt.profile = "rotational";
    generate_ensemble(opt, dir);
    auto res = run_config(dir / "ensemble.json", dir / "out", 0, false);
    auto counts = status_counts(res.rows);
    CHECK(counts["wrap"] > 0);
    CHECK(counts["fail"] == 0);
    CHECK(res.exit_code == 0);
}

TEST_CASE("convergence studies") {
    const fs::path dir = work_dir() / "study";
    fs::create_directories(dir);

    // stencil sweep on a generated scenario: second order slope
    EnsembleOptions opt;
    opt.seed = 42;
    opt.count = 1;
    opt.dim = 3;
    opt.profile = "right-half-plane";
    generate_ensemble(opt, dir / "ens");
    Scenario sc = load_scenarios(dir / "ens" / "ensemble.json")[0];

    StudyResult fd = convergence_study(sc, "fd_step", {1e-2, 5e-3, 2.5e-3});
    REQUIRE(fd.residuals.size() == 3);
    REQUIRE(fd.slope.has_value());
    CHECK(*fd.slope > 1.5);
    CHECK(*fd.slope < 2.5);
    CHECK(fd.sweep == "fd_step");

    // a single point has no slope
    CHECK_FALSE(convergence_study(sc, "fd_step", {1e-2}).slope.has_value());

    CHECK_THROWS_AS(convergence_study(sc, "bogus", {1.0}), ConfigInvalid);
    CHECK_THROWS_AS(convergence_study(sc, "nodes", {64.5}), ConfigInvalid);
    CHECK_THROWS_AS(convergence_study(sc, "nodes", {8}), ConfigInvalid);

    // node sweep on a wide spectrum: geometric quadrature convergence
    spit(dir / "hard.mat", "4\n0.3,0 0,0 0,0 0,0\n0,0 0.8,0.6 0,0 0,0\n"
                           "0,0 0,0 2.2,-0.4 0,0\n0,0 0,0 0,0 3,0.3\n");
    spit(dir / "hard.json",
         "{\"id\":\"hard\",\"generator\":{\"dim\":4,\"T\":1.0,\"terms\":[{\"coef\":"
         "{\"kind\":\"const\"},\"matrix_file\":\"hard.mat\"}]},\"times\":[[0.9,0.4,0.0]],"
         "\"kappa_policy\":{\"mode\":\"fixed\",\"value\":[0,0]},\"checks\":[\"round_trip\"]}");
    Scenario hard = load_scenarios(dir / "hard.json")[0];
    StudyResult nodes = convergence_study(hard, "nodes", {64, 128, 256});
    REQUIRE(nodes.residuals.size() == 3);
    CHECK(nodes.residuals[0] > nodes.residuals[1]);
    CHECK(nodes.residuals[1] > nodes.residuals[2]);
    REQUIRE(nodes.ratios.size() == 2);
    CHECK(nodes.ratios[0] >= 10.0);

    // study files land next to each other; the csv is the value table, the
    // json records which parameter was swept
    write_study(nodes, dir / "out");
    CHECK(fs::exists(dir / "out" / "study.csv"));
    CHECK(fs::exists(dir / "out" / "study.json"));
    const std::string csv = slurp(dir / "out" / "study.csv");
    CHECK(csv.rfind("value,residual,ratio\n", 0) == 0);
    CHECK(csv.find("64") != std::string::npos);
    CHECK(slurp(dir / "out" / "study.json").find("nodes") != std::string::npos);
}

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "opcalc/errors.hpp"
#include "opcalc/scenario.hpp"

namespace fs = std::filesystem;

namespace {

// OPCALC_OUT beats --out everywhere, so batch drivers can redirect a whole
// invocation without touching its arguments.
fs::path resolve_out(const std::string& cli_out) {
    const char* env = std::getenv("OPCALC_OUT");
    if (env != nullptr && *env != '\0') return fs::path(env);
    return fs::path(cli_out);
}

int cmd_run(const std::string& config, const std::string& out, int workers,
            bool strict_wrap) {
    const opcalc::RunResult res =
        opcalc::run_config(config, resolve_out(out), workers, strict_wrap);
    size_t pass = 0, fail = 0, wrap = 0, skipped = 0;
    for (const auto& row : res.rows) {
        if (row.status == "pass")
            ++pass;
        else if (row.status == "fail")
            ++fail;
        else if (row.status == "wrap")
            ++wrap;
        else
            ++skipped;
    }
    std::cout << "rows " << res.rows.size() << ": " << pass << " pass, " << fail
              << " fail, " << wrap << " wrap, " << skipped << " skipped\n";
    std::cout << "report:  " << res.report_path.string() << "\n";
    std::cout << "summary: " << res.summary_path.string() << "\n";
    return res.exit_code;
}

int cmd_gen(uint64_t seed, int count, int dim, const std::string& profile,
            const std::string& out) {
    opcalc::EnsembleOptions opt;
    opt.seed = seed;
    opt.count = count;
    opt.dim = dim;
    opt.profile = profile;
    const auto written = opcalc::generate_ensemble(opt, resolve_out(out));
    std::cout << "wrote " << written.size() << " files under "
              << resolve_out(out).string() << "\n";
    std::cout << "config: " << written.front().string() << "\n";
    return 0;
}

int cmd_study(const std::string& config, const std::string& sweep,
              const std::vector<double>& values, const std::string& out) {
    const auto scenarios = opcalc::load_scenarios(config);
    const opcalc::Scenario& scn = scenarios.front();
    const opcalc::StudyResult study = opcalc::convergence_study(scn, sweep, values);

    std::cout << "scenario " << scn.id << ", sweep " << sweep << "\n";
    if (study.sweep == "nodes") {
        std::cout << "value      residual           ratio\n";
        for (size_t i = 0; i < study.values.size(); ++i) {
            std::printf("%-10.10g %-18.12g ", study.values[i], study.residuals[i]);
            if (i > 0) std::printf("%.6g", study.ratios[i - 1]);
            std::printf("\n");
        }
    } else {
        std::cout << "value      residual\n";
        for (size_t i = 0; i < study.values.size(); ++i)
            std::printf("%-10.10g %-18.12g\n", study.values[i], study.residuals[i]);
        if (study.slope)
            std::printf("slope %.6g\n", *study.slope);
        else
            std::printf("slope undefined\n");
    }
    opcalc::write_study(study, resolve_out(out));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"verification harness for logarithmic representations of evolution families"};
    app.require_subcommand(1);

    std::string config, out = ".";
    int workers = 0;
    bool strict_wrap = false;

    CLI::App* run = app.add_subcommand("run", "run the checks of a scenario config");
    run->add_option("config", config, "scenario JSON file")->required();
    run->add_option("--out", out, "output directory for report.csv / summary.json");
    run->add_option("--workers", workers, "scenario-level worker cap, 0 = hardware");
    run->add_flag("--strict-wrap", strict_wrap, "wrap rows fail the run");

    uint64_t seed = 0;
    int count = 1, dim = 4;
    std::string profile;
    CLI::App* gen = app.add_subcommand("gen", "generate a seeded scenario ensemble");
    gen->add_option("--seed", seed, "ensemble seed")->required();
    gen->add_option("--count", count, "number of scenarios")->required();
    gen->add_option("--dim", dim, "matrix dimension, 1..16")->required();
    gen->add_option("--profile", profile, "right-half-plane | near-cut | rotational")
        ->required();
    gen->add_option("--out", out, "output directory");

    std::string sweep;
    std::vector<double> values;
    CLI::App* study = app.add_subcommand("study", "residual-vs-parameter sweep");
    study->add_option("config", config, "scenario JSON file")->required();
    study->add_option("--sweep", sweep, "nodes | fd_step")->required();
    study->add_option("--values", values, "comma-separated sweep values")
        ->required()
        ->delimiter(',');
    study->add_option("--out", out, "output directory for study.csv / study.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return cmd_run(config, out, workers, strict_wrap);
        if (gen->parsed()) return cmd_gen(seed, count, dim, profile, out);
        return cmd_study(config, sweep, values, out);
    } catch (const opcalc::Error& e) {
        std::cerr << "error (" << e.kind() << "): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

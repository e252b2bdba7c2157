#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opcalc/complex_matrix.hpp"
#include "opcalc/evolution.hpp"
#include "opcalc/functional_calculus.hpp"

namespace opcalc {

struct KappaPolicy {
    enum class Mode { Auto, Fixed };
    Mode mode = Mode::Auto;
    Complex value{0.0, 0.0};  // Fixed only
};

// Shift operand for the shifted sum identities and module elements. Poly
// builds p(M) from the family's first term matrix, then adds the smallest
// real multiple of I that pushes min Re of the spectrum to
// 2 (1 + max ||U||) + 1, the large-shift regime where the shifted logs are
// safely away from the cut.
struct KPolicy {
    enum class Mode { Zero, Scalar, Poly };
    Mode mode = Mode::Zero;
    Complex value{0.0, 0.0};       // Scalar only
    std::vector<Complex> coeffs;   // Poly only, c0 + c1 M + ...
};

// One batch verification job: a generator, the time triples to test, and the
// checks to run on them. Parsed from JSON; see load_scenarios for the schema.
struct Scenario {
    std::string id;
    GeneratorSpec generator;
    std::vector<std::array<double, 3>> times;  // (t, r, s)
    KappaPolicy kappa_policy;
    KPolicy k_policy;
    std::vector<std::string> checks;
    int quadrature_nodes = kDefaultNodes;
    double fd_step = 0.0;  // 0 selects the default 1e-3 T
    uint64_t seed = 0;
    std::map<std::string, double> tolerances;  // base-tolerance overrides
};

// One verification outcome. status is pass | fail | wrap | skipped(Reason);
// pass iff residual <= threshold, wrap rows are informative (the identity is
// expected to break there), skipped rows carry the throwing error's kind.
struct ReportRow {
    std::string id;
    std::string check;
    double t = 0.0, r = 0.0, s = 0.0;
    Complex kappa{0.0, 0.0};
    double k_norm = 0.0;
    int nodes = kDefaultNodes;
    double h = 0.0;
    double residual = 0.0;
    double threshold = 0.0;
    std::string status;
    std::vector<Complex> defect_eigenvalues;  // wrap diagnosis; summary.json only
};

// Stable check identifiers accepted in scenario "checks" lists.
const std::vector<std::string>& check_registry();
bool check_registered(const std::string& name);
double default_tolerance(const std::string& check);

// Parses a config file: either one scenario object or {"scenarios": [...]}.
// Matrix files are resolved relative to the config's directory and loaded
// eagerly. Throws ConfigInvalid (message carries a JSON-pointer path) or
// MatrixFileMissing.
std::vector<Scenario> load_scenarios(const std::filesystem::path& config_path);

// Runs every check x triple of one scenario, single-threaded. Library errors
// during a check become skipped rows, never aborts.
std::vector<ReportRow> run_checks(const Scenario& scenario);

void write_report_csv(const std::vector<ReportRow>& rows, std::ostream& os);

struct RunResult {
    std::vector<ReportRow> rows;
    std::filesystem::path report_path;
    std::filesystem::path summary_path;
    int exit_code = 0;  // 0 clean, 1 failures (or wraps under strict_wrap)
};

// Full pipeline: load, run scenarios across workers (0 = hardware pick),
// merge rows sorted by (id, check), write report.csv and summary.json into
// out_dir. Output bytes do not depend on the worker count.
RunResult run_config(const std::filesystem::path& config_path,
                     const std::filesystem::path& out_dir, int workers = 0,
                     bool strict_wrap = false);

struct EnsembleOptions {
    uint64_t seed = 0;
    int count = 1;
    int dim = 4;
    std::string profile;  // right-half-plane | near-cut | rotational
};

// Writes ensemble.json plus one matrix file per scenario into out_dir,
// byte-deterministic in the options. Returns the written paths,
// ensemble.json first.
std::vector<std::filesystem::path> generate_ensemble(const EnsembleOptions& options,
                                                     const std::filesystem::path& out_dir);

struct StudyResult {
    std::string sweep;  // "nodes" | "fd_step"
    std::vector<double> values;
    std::vector<double> residuals;
    std::optional<double> slope;  // log-log least squares, fd_step sweeps
    std::vector<double> ratios;   // successive residual ratios, nodes sweeps
};

// Residual-vs-parameter sweep on the scenario's first triple: fd_step sweeps
// the generator-recovery step, nodes sweeps the quadrature against the
// eigendecomposition oracle.
StudyResult convergence_study(const Scenario& scenario, const std::string& sweep,
                              const std::vector<double>& values);

void write_study(const StudyResult& study, const std::filesystem::path& out_dir);

}  // namespace opcalc

#include "opcalc/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "opcalc/errors.hpp"
#include "opcalc/linalg.hpp"
#include "opcalc/log_representation.hpp"
#include "opcalc/operator_algebra.hpp"

namespace opcalc {
namespace fs = std::filesystem;

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------- registry

const std::vector<std::string>& registry() {
    static const std::vector<std::string> names = {
        "eq4_chain",    "eq5_commuting",      "eq6_shifted_chain",
        "eq7_shifted_commuting", "thm1_axioms", "thm2_module",
        "wrap_detect",  "round_trip",         "generator_recovery",
        "integral_rep", "semigroup"};
    return names;
}

// ------------------------------------------------------------ json parsing

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
    throw ConfigInvalid(path + ": " + msg);
}

const json& need(const json& obj, const std::string& obj_path, const char* key) {
    if (!obj.is_object()) bad(obj_path.empty() ? "/" : obj_path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) bad(obj_path + "/" + key, "missing required field");
    return *it;
}

double need_number(const json& j, const std::string& path) {
    if (!j.is_number()) bad(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) bad(path, "expected a finite number");
    return v;
}

long long need_int(const json& j, const std::string& path) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) bad(path, "expected an integer");
    return j.get<long long>();
}

std::string need_string(const json& j, const std::string& path) {
    if (!j.is_string()) bad(path, "expected a string");
    return j.get<std::string>();
}

Complex need_complex(const json& j, const std::string& path) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    bad(path, "expected a number or an [re, im] pair");
}

bool valid_id(const std::string& id) {
    if (id.empty() || id.size() > 64) return false;
    for (char c : id) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                        c == '_' || c == '.';
        if (!ok) return false;
    }
    return true;
}

Coefficient parse_coef(const json& j, const std::string& path) {
    const std::string kind = need_string(need(j, path, "kind"), path + "/kind");
    if (kind == "const") {
        double v = 1.0;
        if (j.contains("value")) v = need_number(j["value"], path + "/value");
        return Coefficient::constant(v);
    }
    if (kind == "sin") return Coefficient::sine();
    if (kind == "cos") return Coefficient::cosine();
    if (kind == "poly") {
        const json& c = need(j, path, "coeffs");
        if (!c.is_array() || c.empty()) bad(path + "/coeffs", "expected a nonempty array");
        std::vector<double> cs;
        for (size_t i = 0; i < c.size(); ++i)
            cs.push_back(need_number(c[i], path + "/coeffs/" + std::to_string(i)));
        return Coefficient::poly(std::move(cs));
    }
    bad(path + "/kind", "unknown coefficient kind '" + kind + "'");
}

GeneratorSpec parse_generator(const json& j, const std::string& path, const fs::path& base) {
    const long long dim = need_int(need(j, path, "dim"), path + "/dim");
    if (dim < 1 || dim > 64) bad(path + "/dim", "dim must be in [1, 64]");
    const double horizon = need_number(need(j, path, "T"), path + "/T");
    if (!(horizon > 0.0)) bad(path + "/T", "T must be positive");

    const json& terms = need(j, path, "terms");
    if (!terms.is_array()) bad(path + "/terms", "expected an array");
    std::vector<GeneratorTerm> parsed;
    for (size_t i = 0; i < terms.size(); ++i) {
        const std::string tp = path + "/terms/" + std::to_string(i);
        const json& tj = terms[i];
        Coefficient coef = parse_coef(need(tj, tp, "coef"), tp + "/coef");
        const std::string file = need_string(need(tj, tp, "matrix_file"), tp + "/matrix_file");
        fs::path mp = fs::path(file);
        if (!mp.is_absolute()) mp = base / mp;
        ComplexMatrix m = read_matrix_file(mp.string());
        if (m.dim() != static_cast<int>(dim))
            bad(tp + "/matrix_file", "matrix dimension " + std::to_string(m.dim()) +
                                         " does not match dim " + std::to_string(dim));
        parsed.push_back({std::move(coef), std::move(m)});
    }

    GeneratorSpec spec(static_cast<int>(dim), std::move(parsed), horizon);
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        bad(path, e.what());
    }
    return spec;
}

Scenario parse_scenario(const json& j, const std::string& path, const fs::path& base) {
    Scenario scn;
    scn.id = need_string(need(j, path, "id"), path + "/id");
    if (!valid_id(scn.id))
        bad(path + "/id", "id must be 1..64 chars from [A-Za-z0-9._-]");

    scn.generator = parse_generator(need(j, path, "generator"), path + "/generator", base);

    const json& times = need(j, path, "times");
    if (!times.is_array() || times.empty())
        bad(path + "/times", "expected a nonempty array of [t, r, s] triples");
    for (size_t i = 0; i < times.size(); ++i) {
        const std::string tp = path + "/times/" + std::to_string(i);
        const json& trip = times[i];
        if (!trip.is_array() || trip.size() != 3) bad(tp, "expected a [t, r, s] triple");
        std::array<double, 3> a{};
        for (int k = 0; k < 3; ++k) {
            a[k] = need_number(trip[k], tp + "/" + std::to_string(k));
            if (std::abs(a[k]) > scn.generator.T)
                bad(tp + "/" + std::to_string(k), "time outside the horizon [-T, T]");
        }
        scn.times.push_back(a);
    }

    if (j.contains("kappa_policy")) {
        const std::string kp = path + "/kappa_policy";
        const json& pj = j["kappa_policy"];
        const std::string mode = need_string(need(pj, kp, "mode"), kp + "/mode");
        if (mode == "auto") {
            scn.kappa_policy.mode = KappaPolicy::Mode::Auto;
        } else if (mode == "fixed") {
            scn.kappa_policy.mode = KappaPolicy::Mode::Fixed;
            scn.kappa_policy.value = need_complex(need(pj, kp, "value"), kp + "/value");
        } else {
            bad(kp + "/mode", "expected \"auto\" or \"fixed\"");
        }
    }

    if (j.contains("K_policy")) {
        const std::string kp = path + "/K_policy";
        const json& pj = j["K_policy"];
        const std::string mode = need_string(need(pj, kp, "mode"), kp + "/mode");
        if (mode == "zero") {
            scn.k_policy.mode = KPolicy::Mode::Zero;
        } else if (mode == "scalar") {
            scn.k_policy.mode = KPolicy::Mode::Scalar;
            scn.k_policy.value = need_complex(need(pj, kp, "value"), kp + "/value");
        } else if (mode == "poly") {
            scn.k_policy.mode = KPolicy::Mode::Poly;
            const json& c = need(pj, kp, "coeffs");
            if (!c.is_array() || c.empty()) bad(kp + "/coeffs", "expected a nonempty array");
            for (size_t i = 0; i < c.size(); ++i)
                scn.k_policy.coeffs.push_back(
                    need_complex(c[i], kp + "/coeffs/" + std::to_string(i)));
        } else {
            bad(kp + "/mode", "expected \"zero\", \"scalar\" or \"poly\"");
        }
    }

    const json& checks = need(j, path, "checks");
    if (!checks.is_array() || checks.empty())
        bad(path + "/checks", "expected a nonempty array of check names");
    for (size_t i = 0; i < checks.size(); ++i) {
        const std::string cp = path + "/checks/" + std::to_string(i);
        const std::string name = need_string(checks[i], cp);
        if (!check_registered(name)) bad(cp, "unknown check '" + name + "'");
        scn.checks.push_back(name);
    }

    if (j.contains("quadrature_nodes")) {
        const long long n = need_int(j["quadrature_nodes"], path + "/quadrature_nodes");
        if (n < kMinNodes || n > 65536)
            bad(path + "/quadrature_nodes",
                "expected an integer in [" + std::to_string(kMinNodes) + ", 65536]");
        scn.quadrature_nodes = static_cast<int>(n);
    }
    if (j.contains("fd_step")) {
        const double h = need_number(j["fd_step"], path + "/fd_step");
        if (!(h > 0.0)) bad(path + "/fd_step", "fd_step must be positive");
        scn.fd_step = h;
    }
    if (j.contains("seed")) {
        const json& sj = j["seed"];
        if (sj.is_number_unsigned()) {
            scn.seed = sj.get<uint64_t>();
        } else if (sj.is_number_integer() && sj.get<long long>() >= 0) {
            scn.seed = static_cast<uint64_t>(sj.get<long long>());
        } else {
            bad(path + "/seed", "expected a nonnegative integer");
        }
    }
    if (j.contains("tolerances")) {
        const json& tj = j["tolerances"];
        const std::string tp = path + "/tolerances";
        if (!tj.is_object()) bad(tp, "expected an object mapping check names to tolerances");
        for (auto it = tj.begin(); it != tj.end(); ++it) {
            if (!check_registered(it.key())) bad(tp + "/" + it.key(), "unknown check");
            const double tol = need_number(it.value(), tp + "/" + it.key());
            if (!(tol > 0.0)) bad(tp + "/" + it.key(), "tolerance must be positive");
            scn.tolerances[it.key()] = tol;
        }
    }
    return scn;
}

// -------------------------------------------------------------- check runs

double base_tolerance(const Scenario& scn, const std::string& check) {
    auto it = scn.tolerances.find(check);
    if (it != scn.tolerances.end()) return it->second;
    return default_tolerance(check);
}

// Per-scenario state shared by the check handlers. The shift operand K and
// the commutant basis are resolved lazily so scenarios that never ask for
// them cannot fail on them.
struct CheckContext {
    const Scenario& scn;
    EvolutionFamily fam;
    std::optional<EvolutionFamily> fam2;  // 0.6-scaled partner for eq5 / eq7
    std::optional<ComplexMatrix> k_shift;
    std::optional<CommutantBasis> basis;
    double fd = 0.0;

    explicit CheckContext(const Scenario& s, EvolutionFamily f)
        : scn(s), fam(std::move(f)) {
        fd = scn.fd_step > 0.0 ? scn.fd_step : 1e-3 * scn.generator.T;
    }

    Complex resolve_kappa(double t, double s) const {
        if (scn.kappa_policy.mode == KappaPolicy::Mode::Fixed) return scn.kappa_policy.value;
        return choose_kappa(fam(t, s)).kappa;
    }

    const EvolutionFamily& partner() {
        if (!fam2) {
            GeneratorSpec spec2 = scn.generator;
            for (auto& term : spec2.terms) term.matrix *= Complex(0.6, 0.0);
            fam2 = spec2.commuting() ? EvolutionFamily::closed_form(spec2, scn.id + "-b")
                                     : EvolutionFamily::rk4(spec2, 0.0, scn.id + "-b");
        }
        return *fam2;
    }

    // Zero / scalar K come straight from the policy. Poly K is p(M) plus the
    // real shift that puts min Re of its spectrum at 2 (1 + max ||U||) + 1.
    const ComplexMatrix& shift_operand() {
        if (k_shift) return *k_shift;
        const int n = scn.generator.dim;
        const KPolicy& pol = scn.k_policy;
        if (pol.mode == KPolicy::Mode::Zero) {
            k_shift = ComplexMatrix(n);
        } else if (pol.mode == KPolicy::Mode::Scalar) {
            k_shift = pol.value * ComplexMatrix::identity(n);
        } else {
            const ComplexMatrix m = scn.generator.terms.empty() ? ComplexMatrix(n)
                                                                : scn.generator.terms[0].matrix;
            ComplexMatrix p = pol.coeffs.back() * ComplexMatrix::identity(n);
            for (size_t i = pol.coeffs.size() - 1; i-- > 0;)
                p = m * p + pol.coeffs[i] * ComplexMatrix::identity(n);
            double max_u = 0.0;
            for (const auto& trip : scn.times) {
                max_u = std::max(max_u, spectral_norm(fam(trip[0], trip[2])));
                max_u = std::max(max_u, spectral_norm(fam(trip[0], trip[1])));
                max_u = std::max(max_u, spectral_norm(fam(trip[1], trip[2])));
            }
            double min_re = std::numeric_limits<double>::infinity();
            for (Complex ev : eig(p).values) min_re = std::min(min_re, ev.real());
            const double shift = std::max(0.0, 2.0 * (1.0 + max_u) + 1.0 - min_re);
            k_shift = p + shift * ComplexMatrix::identity(n);
        }
        return *k_shift;
    }

    const CommutantBasis& commutant() {
        if (!basis) {
            const ComplexMatrix m = scn.generator.terms.empty()
                                        ? ComplexMatrix(scn.generator.dim)
                                        : scn.generator.terms[0].matrix;
            basis = commutant_basis(m);
        }
        return *basis;
    }
};

void finish_row(ReportRow& row, double residual, double threshold, bool wrap,
                std::vector<Complex> defect = {}) {
    row.residual = residual;
    row.threshold = threshold;
    row.defect_eigenvalues = std::move(defect);
    row.status = wrap ? "wrap" : (residual <= threshold ? "pass" : "fail");
}

void run_one(CheckContext& cx, const std::string& check, const std::array<double, 3>& trip,
             ReportRow& row) {
    const double t = trip[0], r = trip[1], s = trip[2];
    const int nodes = cx.scn.quadrature_nodes;
    const double tol = base_tolerance(cx.scn, check);

    if (check == "round_trip") {
        const Complex kappa = cx.resolve_kappa(t, s);
        row.kappa = kappa;
        const LogRepresentation rep = compute_a(cx.fam, t, s, kappa, nodes);
        const ComplexMatrix u = cx.fam(t, s);
        const double resid = spectral_norm(reconstruct_U(rep) - u);
        finish_row(row, resid, tol * (1.0 + std::abs(kappa)) * spectral_norm(u), false);
    } else if (check == "generator_recovery") {
        const Complex kappa = cx.resolve_kappa(t, s);
        row.kappa = kappa;
        row.h = cx.fd;
        const ComplexMatrix rec = generator_from_logrep(cx.fam, t, s, kappa, cx.fd, nodes);
        finish_row(row, spectral_norm(rec - cx.fam.generator(t)), tol, false);
    } else if (check == "integral_rep") {
        const Complex kappa = cx.resolve_kappa(t, s);
        row.kappa = kappa;
        const IntegralCheckReport rep = integral_representation_check(cx.fam, t, s, kappa, nodes);
        finish_row(row, rep.discrepancy, tol, rep.wrap_flag, rep.defect_eigenvalues);
    } else if (check == "semigroup") {
        const SemigroupReport rep = verify_semigroup(cx.fam, {trip});
        finish_row(row, rep.max_residual(), tol * rep.scale, false);
    } else if (check == "eq4_chain") {
        const IdentityResult res = sum_chain_identity(cx.fam, t, r, s, nodes);
        finish_row(row, res.residual, tol * res.scale, res.wrap_flag, res.defect_eigenvalues);
    } else if (check == "eq5_commuting") {
        const IdentityResult res = sum_commuting_identity(cx.fam, cx.partner(), t, r, nodes);
        finish_row(row, res.residual, tol * res.scale, res.wrap_flag, res.defect_eigenvalues);
    } else if (check == "eq6_shifted_chain") {
        const ComplexMatrix& k = cx.shift_operand();
        row.k_norm = spectral_norm(k);
        const IdentityResult res = shifted_chain_identity(cx.fam, t, r, s, k, nodes);
        finish_row(row, res.residual, tol * res.scale, res.wrap_flag, res.defect_eigenvalues);
    } else if (check == "eq7_shifted_commuting") {
        const ComplexMatrix& k = cx.shift_operand();
        row.k_norm = spectral_norm(k);
        const IdentityResult res =
            shifted_commuting_identity(cx.fam, cx.partner(), t, r, k, nodes);
        finish_row(row, res.residual, tol * res.scale, res.wrap_flag, res.defect_eigenvalues);
    } else if (check == "thm1_axioms") {
        static const std::vector<Complex> scalars = {
            {2.0, 0.0}, {0.5, -1.0}, {-3.0, 0.25}};
        const std::array<std::pair<double, double>, 3> pairs{{{t, s}, {t, r}, {r, s}}};
        std::vector<LogElement> sample;
        for (size_t i = 0; i < pairs.size(); ++i)
            sample.push_back(
                scalar_log_element(cx.fam, pairs[i].first, pairs[i].second, scalars[i]));
        finish_row(row, space_axioms_check(sample, scalars).worst(), tol, false);
    } else if (check == "thm2_module") {
        const ComplexMatrix& k = cx.shift_operand();
        row.k_norm = spectral_norm(k);
        const auto& gens = cx.commutant().generators;
        const ComplexMatrix& cal_a = gens.size() > 1 ? gens[1] : gens.front();
        std::vector<LogElement> sample;
        sample.push_back(module_log_element(cx.fam, t, s, k, cal_a));
        sample.push_back(module_log_element(cx.fam, t, r, k, gens.back()));
        finish_row(row, module_axioms_check(sample, gens).worst(), tol, false);
    } else if (check == "wrap_detect") {
        const WrapReport rep = branch_wrap_detect({cx.fam(t, r), cx.fam(r, s)});
        double worst = 0.0;
        for (double a : rep.argument_sums) worst = std::max(worst, std::abs(a));
        std::vector<Complex> diag;
        for (int d : rep.wrapped_directions) diag.push_back({0.0, rep.argument_sums[d]});
        finish_row(row, worst, tol, rep.wrap_flag, std::move(diag));
    } else {
        bad("/checks", "unknown check '" + check + "'");  // unreachable after validation
    }
}

bool row_order(const ReportRow& a, const ReportRow& b) {
    if (a.id != b.id) return a.id < b.id;
    return a.check < b.check;
}

// ------------------------------------------------------------------ output

json summary_json(const std::vector<ReportRow>& rows, size_t scenario_count) {
    json checks = json::object();
    size_t n_pass = 0, n_fail = 0, n_wrap = 0, n_skip = 0;
    json diagnoses = json::array();
    for (const ReportRow& row : rows) {
        json& c = checks[row.check];
        if (c.is_null())
            c = {{"pass", 0}, {"fail", 0}, {"wrap", 0}, {"skipped", 0}, {"max_residual", 0.0}};
        if (row.status == "pass") {
            ++n_pass;
            c["pass"] = c["pass"].get<int>() + 1;
        } else if (row.status == "fail") {
            ++n_fail;
            c["fail"] = c["fail"].get<int>() + 1;
        } else if (row.status == "wrap") {
            ++n_wrap;
            c["wrap"] = c["wrap"].get<int>() + 1;
        } else {
            ++n_skip;
            c["skipped"] = c["skipped"].get<int>() + 1;
        }
        if (row.status == "pass" || row.status == "fail") {
            c["max_residual"] = std::max(c["max_residual"].get<double>(), row.residual);
        } else if (row.status == "wrap") {
            const double prev =
                c.contains("max_wrap_residual") ? c["max_wrap_residual"].get<double>() : 0.0;
            c["max_wrap_residual"] = std::max(prev, row.residual);
            json eigs = json::array();
            for (Complex ev : row.defect_eigenvalues)
                eigs.push_back(json::array({ev.real(), ev.imag()}));
            diagnoses.push_back({{"id", row.id},
                                 {"check", row.check},
                                 {"t", row.t},
                                 {"r", row.r},
                                 {"s", row.s},
                                 {"defect_eigenvalues", eigs}});
        }
    }
    return json{{"checks", checks},
                {"counts",
                 {{"pass", n_pass}, {"fail", n_fail}, {"wrap", n_wrap}, {"skipped", n_skip}}},
                {"rows", rows.size()},
                {"scenarios", scenario_count},
                {"wrap_diagnoses", diagnoses}};
}

// ---------------------------------------------------------------- ensemble

uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double unit_open(uint64_t& state) {  // (0, 1]
    return static_cast<double>((splitmix64(state) >> 11) + 1) * 0x1.0p-53;
}

Complex gauss(uint64_t& state) {  // complex standard normal, E|z|^2 = 1
    const double u1 = unit_open(state);
    const double u2 = unit_open(state);
    const double rad = std::sqrt(-std::log(u1));
    return {rad * std::cos(2.0 * kPi * u2), rad * std::sin(2.0 * kPi * u2)};
}

// Haar-ish unitary: Ginibre sample, then modified Gram-Schmidt twice. The
// second pass keeps columns orthonormal to machine precision at n <= 16.
ComplexMatrix random_unitary(int n, uint64_t& state) {
    ComplexMatrix q(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) q(i, j) = gauss(state);
    for (int pass = 0; pass < 2; ++pass) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < j; ++k) {
                Complex dot{0.0, 0.0};
                for (int i = 0; i < n; ++i) dot += std::conj(q(i, k)) * q(i, j);
                for (int i = 0; i < n; ++i) q(i, j) -= dot * q(i, k);
            }
            double nrm = 0.0;
            for (int i = 0; i < n; ++i) nrm += std::norm(q(i, j));
            nrm = std::sqrt(nrm);
            for (int i = 0; i < n; ++i) q(i, j) /= nrm;
        }
    }
    return q;
}

ComplexMatrix conjugated_diagonal(const std::vector<Complex>& d, uint64_t& state) {
    const int n = static_cast<int>(d.size());
    const ComplexMatrix q = random_unitary(n, state);
    return q * ComplexMatrix::diagonal(d) * conj_transpose(q);
}

std::string pad4(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", i);
    return buf;
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

// One scenario of the requested profile; writes its matrix files into
// out_dir and returns the scenario JSON object referencing them by name.
json build_ensemble_scenario(const EnsembleOptions& o, int index, const fs::path& out_dir,
                             std::vector<fs::path>& written) {
    uint64_t state = o.seed + 0x9e3779b97f4a7c15ull * static_cast<uint64_t>(index + 1);
    const int n = o.dim;
    json scn;
    json terms = json::array();

    auto emit_matrix = [&](const ComplexMatrix& m, int term_idx) {
        const std::string name = scn["id"].get<std::string>() + "-m" +
                                 std::to_string(term_idx) + ".mat";
        write_matrix_file(m, (out_dir / name).string());
        written.push_back(out_dir / name);
        return name;
    };

    if (o.profile == "right-half-plane") {
        scn["id"] = "rhp-" + std::to_string(o.seed) + "-" + pad4(index);
        std::vector<Complex> d1(n), d2(n);
        for (int j = 0; j < n; ++j)
            d1[j] = {0.2 + 0.25 * (j + 0.8 * unit_open(state)) / std::max(1, n - 1),
                     -0.25 + 0.5 * unit_open(state)};
        for (int j = 0; j < n; ++j)
            d2[j] = {0.2 + 0.25 * unit_open(state), -0.25 + 0.5 * unit_open(state)};
        if (n == 1) d1[0] = {0.2 + 0.25 * unit_open(state), d1[0].imag()};
        const double c = 0.35 + 0.3 * unit_open(state);
        // both terms share the eigenbasis, so the family commutes
        const ComplexMatrix q = random_unitary(n, state);
        const ComplexMatrix m1 = q * ComplexMatrix::diagonal(d1) * conj_transpose(q);
        const ComplexMatrix m2 = q * ComplexMatrix::diagonal(d2) * conj_transpose(q);
        terms.push_back({{"coef", {{"kind", "const"}, {"value", c}}},
                         {"matrix_file", emit_matrix(m1, 0)}});
        terms.push_back({{"coef", {{"kind", "sin"}}}, {"matrix_file", emit_matrix(m2, 1)}});
        scn["generator"] = {{"dim", n}, {"T", 1.0}, {"terms", terms}};
        scn["times"] = json::array({json::array({0.8, 0.3, -0.2}),
                                    json::array({0.95, 0.5, 0.0}),
                                    json::array({0.6, 0.1, -0.5})});
        scn["kappa_policy"] = {{"mode", "auto"}};
        if (index % 2 == 0) {
            scn["K_policy"] = {{"mode", "scalar"}, {"value", complex_json({5.0, 0.0})}};
        } else {
            scn["K_policy"] = {{"mode", "poly"},
                               {"coeffs", json::array({complex_json({0.0, 0.0}),
                                                       complex_json({0.5, 0.0})})}};
        }
        scn["checks"] = {"round_trip",       "generator_recovery", "integral_rep",
                         "semigroup",        "eq4_chain",          "eq5_commuting",
                         "eq6_shifted_chain", "eq7_shifted_commuting", "thm1_axioms",
                         "thm2_module",      "wrap_detect"};
    } else if (o.profile == "near-cut") {
        scn["id"] = "ncut-" + std::to_string(o.seed) + "-" + pad4(index);
        // Upper-half spectrum with arguments pinned right at pi over the
        // longest time span: kappa = 0 fails the clearance rule there, so the
        // ladder has to rescue the log; the half-span pairs stay one sided
        // and work at kappa = 0.
        const double c = 0.9 + 0.2 * unit_open(state);
        std::vector<Complex> d(n);
        for (int j = 0; j < n; ++j)
            d[j] = {(0.05 + 0.15 * unit_open(state)) / (1.2 * c),
                    (kPi - 0.12 + 0.18 * unit_open(state)) / (1.2 * c)};
        const ComplexMatrix m = conjugated_diagonal(d, state);
        terms.push_back({{"coef", {{"kind", "const"}, {"value", c}}},
                         {"matrix_file", emit_matrix(m, 0)}});
        scn["generator"] = {{"dim", n}, {"T", 1.5}, {"terms", terms}};
        scn["times"] = json::array({json::array({1.2, 0.6, 0.0}),
                                    json::array({0.9, 0.3, -0.35})});
        scn["kappa_policy"] = {{"mode", "auto"}};
        scn["K_policy"] = {{"mode", "zero"}};
        // the recovery constant blows up with the phase speed near the cut,
        // so this profile takes a finer stencil than the 1e-3 T default
        scn["fd_step"] = 1e-4 * 1.5;
        scn["checks"] = {"round_trip", "generator_recovery", "integral_rep", "semigroup",
                         "wrap_detect"};
    } else {  // rotational
        scn["id"] = "rot-" + std::to_string(o.seed) + "-" + pad4(index);
        const double omega = 1.5 + unit_open(state);
        // equal frequencies in every direction: arguments add coherently, so
        // the long triple wraps exactly when 1.75 omega > pi
        const std::vector<Complex> d(n, Complex{0.0, omega});
        const ComplexMatrix m = conjugated_diagonal(d, state);
        terms.push_back({{"coef", {{"kind", "const"}, {"value", 1.0}}},
                         {"matrix_file", emit_matrix(m, 0)}});
        scn["generator"] = {{"dim", n}, {"T", 2.0}, {"terms", terms}};
        scn["times"] = json::array({json::array({1.75, 0.75, 0.0}),
                                    json::array({0.9, 0.45, 0.0})});
        scn["kappa_policy"] = {{"mode", "auto"}};
        scn["K_policy"] = {{"mode", "zero"}};
        scn["checks"] = {"eq4_chain", "wrap_detect", "integral_rep", "semigroup"};
    }
    scn["quadrature_nodes"] = kDefaultNodes;
    scn["seed"] = state;  // final stream state, recorded for reproducibility
    return scn;
}

// ------------------------------------------------------------------- study

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    // least squares slope of log y against log x
    const size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    return (n * sxy - sx * sy) / denom;
}

}  // namespace

// ------------------------------------------------------------- public api

const std::vector<std::string>& check_registry() { return registry(); }

bool check_registered(const std::string& name) {
    const auto& reg = registry();
    return std::find(reg.begin(), reg.end(), name) != reg.end();
}

double default_tolerance(const std::string& check) {
    if (check == "eq4_chain" || check == "eq5_commuting" || check == "eq6_shifted_chain" ||
        check == "eq7_shifted_commuting")
        return 1e-8;  // x (1 + max operand norm)
    if (check == "thm1_axioms") return 1e-12;
    if (check == "thm2_module") return 1e-10;
    if (check == "wrap_detect") return kPi;  // argument-sum budget
    if (check == "round_trip") return 1e-9;  // x (1 + |kappa|) ||U||
    if (check == "generator_recovery") return 1e-5;
    if (check == "integral_rep") return 1e-6;
    if (check == "semigroup") return kTolSemigroup;  // x (1 + max ||U||)
    throw std::invalid_argument("unknown check '" + check + "'");
}

std::vector<Scenario> load_scenarios(const fs::path& config_path) {
    std::ifstream in(config_path);
    if (!in) throw ConfigInvalid("/: cannot open config file '" + config_path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("/: ") + e.what());
    }
    const fs::path base =
        config_path.has_parent_path() ? config_path.parent_path() : fs::path(".");

    std::vector<Scenario> out;
    if (doc.is_object() && doc.contains("scenarios")) {
        const json& arr = doc["scenarios"];
        if (!arr.is_array() || arr.empty()) bad("/scenarios", "expected a nonempty array");
        for (size_t i = 0; i < arr.size(); ++i)
            out.push_back(parse_scenario(arr[i], "/scenarios/" + std::to_string(i), base));
    } else {
        out.push_back(parse_scenario(doc, "", base));
    }

    std::set<std::string> seen;
    for (size_t i = 0; i < out.size(); ++i)
        if (!seen.insert(out[i].id).second)
            bad((out.size() > 1 ? "/scenarios/" + std::to_string(i) : std::string()) + "/id",
                "duplicate scenario id '" + out[i].id + "'");
    return out;
}

std::vector<ReportRow> run_checks(const Scenario& scenario) {
    std::vector<ReportRow> rows;
    EvolutionFamily fam = scenario.generator.commuting()
                              ? EvolutionFamily::closed_form(scenario.generator, scenario.id)
                              : EvolutionFamily::rk4(scenario.generator, 0.0, scenario.id);
    CheckContext cx(scenario, std::move(fam));
    for (const std::string& check : scenario.checks) {
        for (const auto& trip : scenario.times) {
            ReportRow row;
            row.id = scenario.id;
            row.check = check;
            row.t = trip[0];
            row.r = trip[1];
            row.s = trip[2];
            row.nodes = scenario.quadrature_nodes;
            try {
                run_one(cx, check, trip, row);
            } catch (const Error& e) {
                row.status = std::string("skipped(") + e.kind() + ")";
            } catch (const std::invalid_argument&) {
                row.status = "skipped(InvalidArgument)";
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_report_csv(const std::vector<ReportRow>& rows, std::ostream& os) {
    os << "id,check,t,r,s,kappa_re,kappa_im,K_norm,N,h,residual,threshold,status\n";
    for (const ReportRow& row : rows) {
        os << row.id << ',' << row.check << ',' << format_double(row.t) << ','
           << format_double(row.r) << ',' << format_double(row.s) << ','
           << format_double(row.kappa.real()) << ',' << format_double(row.kappa.imag()) << ','
           << format_double(row.k_norm) << ',' << row.nodes << ',' << format_double(row.h)
           << ',' << format_double(row.residual) << ',' << format_double(row.threshold) << ','
           << row.status << '\n';
    }
}

RunResult run_config(const fs::path& config_path, const fs::path& out_dir, int workers,
                     bool strict_wrap) {
    const std::vector<Scenario> scenarios = load_scenarios(config_path);
    const size_t n = scenarios.size();

    int w = workers;
    if (w <= 0) w = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    w = std::min<int>(w, static_cast<int>(n));

    std::vector<std::vector<ReportRow>> per(n);
    std::atomic<size_t> next{0};
    auto drain = [&]() {
        for (size_t i; (i = next.fetch_add(1)) < n;) per[i] = run_checks(scenarios[i]);
    };
    if (w <= 1) {
        drain();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < w; ++k) pool.emplace_back(drain);
        for (auto& th : pool) th.join();
    }

    RunResult result;
    for (auto& rows : per)
        for (auto& row : rows) result.rows.push_back(std::move(row));
    std::stable_sort(result.rows.begin(), result.rows.end(), row_order);

    if (!out_dir.empty()) fs::create_directories(out_dir);
    result.report_path = out_dir / "report.csv";
    result.summary_path = out_dir / "summary.json";
    {
        std::ofstream os(result.report_path);
        if (!os) throw ConfigInvalid("/: cannot write '" + result.report_path.string() + "'");
        write_report_csv(result.rows, os);
    }
    {
        std::ofstream os(result.summary_path);
        if (!os) throw ConfigInvalid("/: cannot write '" + result.summary_path.string() + "'");
        os << summary_json(result.rows, n).dump(2) << '\n';
    }

    bool any_fail = false, any_wrap = false;
    for (const ReportRow& row : result.rows) {
        any_fail = any_fail || row.status == "fail";
        any_wrap = any_wrap || row.status == "wrap";
    }
    result.exit_code = (any_fail || (strict_wrap && any_wrap)) ? 1 : 0;
    return result;
}

std::vector<fs::path> generate_ensemble(const EnsembleOptions& options,
                                        const fs::path& out_dir) {
    if (options.dim < 1 || options.dim > 16) bad("/dim", "dim must be in [1, 16]");
    if (options.count < 1 || options.count > 10000)
        bad("/count", "count must be in [1, 10000]");
    if (options.profile != "right-half-plane" && options.profile != "near-cut" &&
        options.profile != "rotational")
        bad("/profile", "expected right-half-plane, near-cut or rotational");

    if (!out_dir.empty()) fs::create_directories(out_dir);
    std::vector<fs::path> written;
    json doc;
    doc["scenarios"] = json::array();
    for (int i = 0; i < options.count; ++i)
        doc["scenarios"].push_back(build_ensemble_scenario(options, i, out_dir, written));

    const fs::path main_path = out_dir / "ensemble.json";
    std::ofstream os(main_path);
    if (!os) throw ConfigInvalid("/: cannot write '" + main_path.string() + "'");
    os << doc.dump(2) << '\n';
    written.insert(written.begin(), main_path);
    return written;
}

StudyResult convergence_study(const Scenario& scenario, const std::string& sweep,
                              const std::vector<double>& values) {
    if (sweep != "nodes" && sweep != "fd_step")
        bad("/sweep", "expected \"nodes\" or \"fd_step\"");
    if (values.empty()) bad("/values", "expected at least one value");
    for (size_t i = 0; i + 1 < values.size(); ++i) {
        const bool inc = values[0] < values[1];
        if ((inc && !(values[i] < values[i + 1])) || (!inc && !(values[i] > values[i + 1])))
            bad("/values", "values must be strictly monotone");
    }

    EvolutionFamily fam = scenario.generator.commuting()
                              ? EvolutionFamily::closed_form(scenario.generator, scenario.id)
                              : EvolutionFamily::rk4(scenario.generator, 0.0, scenario.id);
    const double t = scenario.times[0][0];
    const double s = scenario.times[0][2];
    const Complex kappa = scenario.kappa_policy.mode == KappaPolicy::Mode::Fixed
                              ? scenario.kappa_policy.value
                              : choose_kappa(fam(t, s)).kappa;

    StudyResult study;
    study.sweep = sweep;
    study.values = values;

    if (sweep == "fd_step") {
        const ComplexMatrix truth = fam.generator(t);
        for (double h : values) {
            if (!(h > 0.0)) bad("/values", "fd_step values must be positive");
            const ComplexMatrix rec =
                generator_from_logrep(fam, t, s, kappa, h, scenario.quadrature_nodes);
            study.residuals.push_back(spectral_norm(rec - truth));
        }
        bool usable = study.residuals.size() >= 2;
        for (double rsd : study.residuals) usable = usable && rsd > 0.0;
        if (usable) study.slope = fit_slope(values, study.residuals);
    } else {
        const ComplexMatrix b =
            fam(t, s) + kappa * ComplexMatrix::identity(scenario.generator.dim);
        const ComplexMatrix oracle = eigendecomposition_log(b);
        for (double v : values) {
            double ip = 0.0;
            if (std::modf(v, &ip) != 0.0 || v < kMinNodes)
                bad("/values", "node counts must be integers >= " + std::to_string(kMinNodes));
            const LogComputation lc =
                principal_log_full(b, std::nullopt, static_cast<int>(v));
            study.residuals.push_back(spectral_norm(lc.value - oracle));
        }
        for (size_t i = 0; i + 1 < study.residuals.size(); ++i)
            study.ratios.push_back(study.residuals[i] /
                                   std::max(study.residuals[i + 1], 1e-300));
    }
    return study;
}

void write_study(const StudyResult& study, const fs::path& out_dir) {
    if (!out_dir.empty()) fs::create_directories(out_dir);
    {
        std::ofstream os(out_dir / "study.csv");
        if (!os) throw ConfigInvalid("/: cannot write study.csv");
        if (study.sweep == "nodes") {
            os << "value,residual,ratio\n";
            for (size_t i = 0; i < study.values.size(); ++i) {
                os << format_double(study.values[i]) << ','
                   << format_double(study.residuals[i]) << ',';
                if (i > 0) os << format_double(study.ratios[i - 1]);
                os << '\n';
            }
        } else {
            os << "value,residual\n";
            for (size_t i = 0; i < study.values.size(); ++i)
                os << format_double(study.values[i]) << ','
                   << format_double(study.residuals[i]) << '\n';
        }
    }
    json j;
    j["sweep"] = study.sweep;
    j["values"] = study.values;
    j["residuals"] = study.residuals;
    j["slope"] = study.slope ? json(*study.slope) : json(nullptr);
    j["ratios"] = study.ratios;
    std::ofstream os(out_dir / "study.json");
    if (!os) throw ConfigInvalid("/: cannot write study.json");
    os << j.dump(2) << '\n';
}

}  // namespace opcalc

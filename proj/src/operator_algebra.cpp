#include "opcalc/operator_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "opcalc/errors.hpp"
#include "opcalc/functional_calculus.hpp"
#include "opcalc/linalg.hpp"

namespace opcalc {

namespace {

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double unit_double(uint64_t& state) {
    return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

// operator norm through the Hermitian eigenproblem of m^H m; accurate enough
// for the tight axiom tolerances, power iteration as fallback
double op_norm_accurate(const ComplexMatrix& m) {
    if (max_abs(m) == 0.0) return 0.0;
    try {
        const EigenDecomposition ed = eig(conj_transpose(m) * m);
        double mx = 0.0;
        for (Complex v : ed.values) mx = std::max(mx, std::abs(v));
        return std::sqrt(mx);
    } catch (const Error&) {
        return spectral_norm(m);
    }
}

void require_log_admissible(const ComplexMatrix& x) {
    const EigenDecomposition ed = eig(x);
    if (!kappa_admissible(ed.values, spectral_norm(x), {0.0, 0.0}))
        throw BranchCutIntersection("logarithm operand too close to the branch cut");
}

void require_pair_commute(const ComplexMatrix& a, const ComplexMatrix& b, const char* what) {
    const double bound = kTolCommute * frobenius_norm(a) * frobenius_norm(b);
    if (frobenius_norm(commutator(a, b)) > bound) throw NonCommuting(what);
}

std::vector<Complex> defect_spectrum(const ComplexMatrix& defect) {
    try {
        return eig(defect).values;
    } catch (const Error&) {
        return {};
    }
}

// shared body of the four sum identities: factors are the individual log
// operands, combined the right-hand side operand
IdentityResult identity_core(const std::vector<ComplexMatrix>& factors,
                             const ComplexMatrix& combined, int nodes) {
    for (const ComplexMatrix& f : factors) require_log_admissible(f);
    require_log_admissible(combined);

    const WrapReport wrap = branch_wrap_detect(factors);

    ComplexMatrix lhs(combined.dim());
    double scale = 1.0 + spectral_norm(combined);
    for (const ComplexMatrix& f : factors) {
        lhs += principal_log_full(f, std::nullopt, nodes).value;
        scale = std::max(scale, 1.0 + spectral_norm(f));
    }
    const ComplexMatrix defect = lhs - principal_log_full(combined, std::nullopt, nodes).value;

    IdentityResult out;
    out.residual = spectral_norm(defect);
    out.scale = scale;
    out.wrap_flag = wrap.wrap_flag;
    out.defect_eigenvalues = defect_spectrum(defect);
    return out;
}

}  // namespace

CommutantBasis commutant_basis(const ComplexMatrix& m, int degree) {
    if (degree < 0) throw std::invalid_argument("degree must be nonnegative");
    CommutantBasis basis;
    basis.degree = degree;
    basis.generators.push_back(ComplexMatrix::identity(m.dim()));
    ComplexMatrix power = ComplexMatrix::identity(m.dim());
    for (int d = 1; d <= degree; ++d) {
        power = power * m;
        const double norm = frobenius_norm(power);
        if (norm == 0.0) break;  // nilpotent tail adds nothing
        basis.generators.push_back((1.0 / norm) * power);
    }
    return basis;
}

WrapReport branch_wrap_detect(const std::vector<ComplexMatrix>& factors) {
    if (factors.empty()) throw std::invalid_argument("wrap detection needs at least one factor");
    const int n = factors[0].dim();
    for (const ComplexMatrix& f : factors)
        if (f.dim() != n) throw std::invalid_argument("wrap factors must share a dimension");

    for (int attempt = 0; attempt < 4; ++attempt) {
        std::vector<Complex> coeff(factors.size(), Complex{1.0, 0.0});
        if (attempt > 0) {
            uint64_t state = 0x8f1c93d5u + 0x51edu * static_cast<uint64_t>(attempt);
            for (Complex& c : coeff)
                c = Complex{0.5 + unit_double(state), 0.5 * unit_double(state) - 0.25};
        }
        ComplexMatrix g(n);
        for (size_t j = 0; j < factors.size(); ++j) {
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k) g(i, k) += coeff[j] * factors[j](i, k);
        }

        EigenDecomposition ed;
        try {
            ed = eig(g);
        } catch (const Error&) {
            continue;
        }

        std::vector<std::vector<Complex>> diag(factors.size());
        bool ok = true;
        try {
            LuFactorization lu(ed.vectors);
            for (size_t j = 0; j < factors.size() && ok; ++j) {
                const ComplexMatrix d = lu.solve(factors[j] * ed.vectors);
                double off = 0.0;
                for (int i = 0; i < n; ++i)
                    for (int k = 0; k < n; ++k)
                        if (i != k) off += std::norm(d(i, k));
                if (std::sqrt(off) > kSimDiagTol * (frobenius_norm(factors[j]) + 1e-300)) {
                    ok = false;
                    break;
                }
                diag[j].resize(n);
                for (int i = 0; i < n; ++i) diag[j][i] = d(i, i);
            }
        } catch (const SingularMatrix&) {
            continue;
        }
        if (!ok) continue;

        WrapReport report;
        report.argument_sums.resize(n);
        for (int i = 0; i < n; ++i) {
            double sum = 0.0;
            for (size_t j = 0; j < factors.size(); ++j) sum += std::arg(diag[j][i]);
            report.argument_sums[i] = sum;
            if (sum <= -std::numbers::pi || sum > std::numbers::pi) {
                report.wrap_flag = true;
                report.wrapped_directions.push_back(i);
            }
        }
        return report;
    }
    throw Defective("factors are not simultaneously diagonalizable within tolerance");
}

IdentityResult sum_chain_identity(const EvolutionFamily& fam, double t, double r, double s,
                                  int nodes) {
    return identity_core({fam(t, r), fam(r, s)}, fam(t, s), nodes);
}

IdentityResult sum_commuting_identity(const EvolutionFamily& f1, const EvolutionFamily& f2,
                                      double t, double r, int nodes) {
    const ComplexMatrix u1 = f1(t, r);
    const ComplexMatrix u2 = f2(t, r);
    require_pair_commute(u1, u2, "factor families do not commute at the requested times");
    return identity_core({u1, u2}, u1 * u2, nodes);
}

IdentityResult shifted_chain_identity(const EvolutionFamily& fam, double t, double r, double s,
                                      const ComplexMatrix& k_shift, int nodes) {
    if (k_shift.dim() != fam.dim()) throw std::invalid_argument("shift dimension mismatch");
    const ComplexMatrix utr = fam(t, r);
    const ComplexMatrix urs = fam(r, s);
    require_pair_commute(k_shift, utr, "shift K must commute with the family");
    require_pair_commute(k_shift, urs, "shift K must commute with the family");
    const ComplexMatrix combined = fam(t, s) + k_shift * utr + k_shift * urs + k_shift * k_shift;
    return identity_core({utr + k_shift, urs + k_shift}, combined, nodes);
}

IdentityResult shifted_commuting_identity(const EvolutionFamily& f1, const EvolutionFamily& f2,
                                          double t, double r, const ComplexMatrix& k_shift,
                                          int nodes) {
    if (k_shift.dim() != f1.dim()) throw std::invalid_argument("shift dimension mismatch");
    const ComplexMatrix u1 = f1(t, r);
    const ComplexMatrix u2 = f2(t, r);
    require_pair_commute(u1, u2, "factor families do not commute at the requested times");
    require_pair_commute(k_shift, u1, "shift K must commute with both families");
    require_pair_commute(k_shift, u2, "shift K must commute with both families");
    const ComplexMatrix combined = u1 * u2 + k_shift * u1 + k_shift * u2 + k_shift * k_shift;
    return identity_core({u1 + k_shift, u2 + k_shift}, combined, nodes);
}

LogElement scalar_log_element(const EvolutionFamily& fam, double t, double s, Complex k) {
    const ComplexMatrix u = fam(t, s);
    require_log_admissible(u);
    LogElement elem;
    elem.core = principal_log(u);
    elem.value = k * elem.core;
    elem.scalar_k = k;
    elem.family_ref = fam.id();
    elem.t = t;
    elem.s = s;
    return elem;
}

LogElement module_log_element(const EvolutionFamily& fam, double t, double s,
                              const ComplexMatrix& k_shift, const ComplexMatrix& cal_k) {
    if (k_shift.dim() != fam.dim() || cal_k.dim() != fam.dim())
        throw std::invalid_argument("factor dimension mismatch");
    const ComplexMatrix b = fam(t, s) + k_shift;
    require_log_admissible(b);
    LogElement elem;
    elem.core = principal_log(b);
    const double bound = kTolCommute * frobenius_norm(cal_k) * frobenius_norm(elem.core);
    if (frobenius_norm(commutator(cal_k, elem.core)) > bound)
        throw NotInCommutant("actor does not commute with the logarithm");
    elem.value = cal_k * elem.core;
    elem.factor_K = k_shift;
    elem.factor_cal_K = cal_k;
    elem.family_ref = fam.id();
    elem.t = t;
    elem.s = s;
    return elem;
}

LogElement module_action(const ComplexMatrix& cal_k, const LogElement& elem) {
    if (cal_k.dim() != elem.value.dim()) throw std::invalid_argument("actor dimension mismatch");
    const double bound = kTolCommute * frobenius_norm(cal_k) * frobenius_norm(elem.core);
    if (frobenius_norm(commutator(cal_k, elem.core)) > bound)
        throw NotInCommutant("actor does not commute with the element's logarithm");
    LogElement out = elem;
    out.value = cal_k * elem.value;
    if (elem.factor_cal_K) {
        out.factor_cal_K = cal_k * (*elem.factor_cal_K);
    } else {
        out.factor_cal_K = elem.scalar_k * cal_k;
        out.factor_K = ComplexMatrix(elem.value.dim());
    }
    return out;
}

double containment_residual(const EvolutionFamily& fam, double t, double s, Complex k) {
    const LogElement direct = scalar_log_element(fam, t, s, k);
    const ComplexMatrix zero_shift(fam.dim());
    ComplexMatrix k_eye(fam.dim());
    for (int i = 0; i < fam.dim(); ++i) k_eye(i, i) = k;
    const LogElement via_module = module_log_element(fam, t, s, zero_shift, k_eye);
    return max_abs(direct.value - via_module.value);
}

double AxiomReport::worst() const {
    double w = 0.0;
    for (const auto& [name, r] : residuals) w = std::max(w, r);
    return w;
}

double AxiomReport::get(const std::string& name) const {
    for (const auto& [label, r] : residuals)
        if (label == name) return r;
    return -1.0;
}

AxiomReport space_axioms_check(const std::vector<LogElement>& sample,
                               const std::vector<Complex>& scalars) {
    if (sample.empty()) throw std::invalid_argument("axiom check needs sample elements");
    if (scalars.size() < 2) throw std::invalid_argument("axiom check needs at least two scalars");
    const int n = sample[0].value.dim();
    for (const LogElement& e : sample)
        if (e.value.dim() != n) throw std::invalid_argument("sample dimension mismatch");

    const size_t m = sample.size();
    double add_commute = 0.0, add_assoc = 0.0, scalar_identity = 0.0, scalar_assoc = 0.0;
    double scalar_distrib = 0.0, vector_distrib = 0.0;
    double norm_homog = 0.0, triangle = 0.0, norm_zero = 0.0;

    for (size_t i = 0; i < m; ++i) {
        const ComplexMatrix& a = sample[i].value;
        const ComplexMatrix& b = sample[(i + 1) % m].value;
        const ComplexMatrix& c = sample[(i + 2) % m].value;
        const double sc = 1.0 + frobenius_norm(a) + frobenius_norm(b) + frobenius_norm(c);

        add_commute = std::max(add_commute, frobenius_norm((a + b) - (b + a)) / sc);
        add_assoc = std::max(add_assoc, frobenius_norm(((a + b) + c) - (a + (b + c))) / sc);
        scalar_identity =
            std::max(scalar_identity, frobenius_norm(Complex{1.0, 0.0} * a - a) / sc);
        norm_zero = std::max(norm_zero, op_norm_accurate(a - a));

        const double na = op_norm_accurate(a);
        const double nb = op_norm_accurate(b);
        triangle = std::max(triangle, op_norm_accurate(a + b) - na - nb);

        for (size_t p = 0; p < scalars.size(); ++p) {
            const Complex k1 = scalars[p];
            const Complex k2 = scalars[(p + 1) % scalars.size()];
            const double ks = sc * (1.0 + std::abs(k1)) * (1.0 + std::abs(k2));
            scalar_assoc =
                std::max(scalar_assoc, frobenius_norm((k1 * k2) * a - k1 * (k2 * a)) / ks);
            scalar_distrib = std::max(
                scalar_distrib, frobenius_norm((k1 + k2) * a - (k1 * a + k2 * a)) / ks);
            vector_distrib = std::max(
                vector_distrib, frobenius_norm(k1 * (a + b) - (k1 * a + k1 * b)) / ks);
            norm_homog = std::max(norm_homog, std::abs(op_norm_accurate(k1 * a) -
                                                       std::abs(k1) * na) /
                                                  (1.0 + std::abs(k1) * na));
        }
    }

    AxiomReport report;
    report.residuals = {{"add_commute", add_commute},
                        {"add_assoc", add_assoc},
                        {"zero_element", frobenius_norm(principal_log(ComplexMatrix::identity(n)))},
                        {"scalar_identity", scalar_identity},
                        {"scalar_assoc", scalar_assoc},
                        {"scalar_distrib", scalar_distrib},
                        {"vector_distrib", vector_distrib},
                        {"norm_homogeneity", norm_homog},
                        {"norm_zero", norm_zero},
                        {"triangle", std::max(0.0, triangle)}};
    return report;
}

AxiomReport module_axioms_check(const std::vector<LogElement>& sample,
                                const std::vector<ComplexMatrix>& actors) {
    if (sample.empty()) throw std::invalid_argument("axiom check needs sample elements");
    if (actors.empty()) throw std::invalid_argument("axiom check needs actor matrices");
    const int n = sample[0].value.dim();
    for (const ComplexMatrix& k : actors)
        if (k.dim() != n) throw std::invalid_argument("actor dimension mismatch");

    const ComplexMatrix eye = ComplexMatrix::identity(n);
    double unit_action = 0.0, action_assoc = 0.0, distrib_elem = 0.0, distrib_alg = 0.0;
    double submult = 0.0, commutant = 0.0;

    for (size_t i = 0; i < sample.size(); ++i) {
        const ComplexMatrix& a = sample[i].value;
        const ComplexMatrix& b = sample[(i + 1) % sample.size()].value;
        const double sa = 1.0 + frobenius_norm(a) + frobenius_norm(b);
        unit_action = std::max(unit_action, frobenius_norm(eye * a - a) / sa);

        const double na = op_norm_accurate(a);
        for (size_t p = 0; p < actors.size(); ++p) {
            const ComplexMatrix& k1 = actors[p];
            const ComplexMatrix& k2 = actors[(p + 1) % actors.size()];
            const double nk1 = frobenius_norm(k1);
            const double nk2 = frobenius_norm(k2);
            const double ks = sa * (1.0 + nk1) * (1.0 + nk2);

            action_assoc =
                std::max(action_assoc, frobenius_norm((k1 * k2) * a - k1 * (k2 * a)) / ks);
            distrib_elem =
                std::max(distrib_elem, frobenius_norm(k1 * (a + b) - (k1 * a + k1 * b)) / ks);
            distrib_alg =
                std::max(distrib_alg, frobenius_norm((k1 + k2) * a - (k1 * a + k2 * a)) / ks);

            const double bound = op_norm_accurate(k1) * na;
            submult = std::max(submult, (op_norm_accurate(k1 * a) - bound) / (1.0 + bound));

            const ComplexMatrix& core = sample[i].core;
            const double cn = frobenius_norm(core) * nk1;
            if (cn > 0.0)
                commutant = std::max(commutant, frobenius_norm(commutator(k1, core)) / cn);
        }
    }

    AxiomReport report;
    report.residuals = {{"unit_action", unit_action},
                        {"action_assoc", action_assoc},
                        {"action_distrib_elem", distrib_elem},
                        {"action_distrib_alg", distrib_alg},
                        {"submultiplicative", std::max(0.0, submult)},
                        {"commutant", commutant}};
    return report;
}

}  // namespace opcalc

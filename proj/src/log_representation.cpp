#include "opcalc/log_representation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "opcalc/errors.hpp"
#include "opcalc/linalg.hpp"

namespace opcalc {

namespace {

ComplexMatrix shifted(const ComplexMatrix& u, Complex kappa) {
    ComplexMatrix b = u;
    for (int i = 0; i < b.dim(); ++i) b(i, i) += kappa;
    return b;
}

void require_admissible(const ComplexMatrix& u, Complex kappa) {
    const EigenDecomposition ed = eig(u);
    if (!kappa_admissible(ed.values, spectral_norm(u), kappa))
        throw BranchCutIntersection(
            "kappa leaves the shifted spectrum too close to the branch cut");
}

}  // namespace

LogRepresentation compute_a(const EvolutionFamily& fam, double t, double s, Complex kappa,
                            int nodes) {
    const ComplexMatrix u = fam(t, s);
    require_admissible(u, kappa);
    LogComputation lc = principal_log_full(shifted(u, kappa), std::nullopt, nodes);
    LogRepresentation rep;
    rep.kappa = kappa;
    rep.t = t;
    rep.s = s;
    rep.a = std::move(lc.value);
    rep.family_ref = fam.id();
    rep.certificate = lc.certificate;
    rep.contour = lc.contour;
    return rep;
}

LogRepresentation compute_a_auto(const EvolutionFamily& fam, double t, double s, int nodes) {
    const ComplexMatrix u = fam(t, s);
    const KappaChoice kc = choose_kappa(u);
    LogComputation lc = principal_log_full(shifted(u, kc.kappa), std::nullopt, nodes);
    LogRepresentation rep;
    rep.kappa = kc.kappa;
    rep.t = t;
    rep.s = s;
    rep.a = std::move(lc.value);
    rep.family_ref = fam.id();
    rep.certificate = lc.certificate;
    rep.contour = lc.contour;
    return rep;
}

ComplexMatrix reconstruct_U(const LogRepresentation& rep) {
    ComplexMatrix u = matrix_exp(rep.a);
    for (int i = 0; i < u.dim(); ++i) u(i, i) -= rep.kappa;
    return u;
}

ComplexMatrix generator_from_logrep(const EvolutionFamily& fam, double t, double s,
                                    Complex kappa, double h, int nodes) {
    const double T = fam.horizon();
    if (h == 0.0) h = kFdStepFactor * T;
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("fd step must be positive");
    if (std::abs(t - h) > T || std::abs(t + h) > T)
        throw std::invalid_argument("finite-difference stencil leaves the family horizon");
    if (!fam.spec().commuting())
        throw NonCommuting("generator recovery assumes a commuting family");

    const ComplexMatrix u_mid = fam(t, s);
    const ComplexMatrix u_plus = fam(t + h, s);
    const ComplexMatrix u_minus = fam(t - h, s);

    // admissibility across the whole stencil, and one contour for both logs
    // so the branch agrees at t-h and t+h
    std::vector<Complex> cloud;
    double norm_scale = 0.0;
    for (const ComplexMatrix* u : {&u_mid, &u_plus, &u_minus}) {
        const EigenDecomposition ed = eig(*u);
        if (!kappa_admissible(ed.values, spectral_norm(*u), kappa))
            throw BranchCutIntersection(
                "kappa leaves the shifted spectrum too close to the branch cut");
        for (Complex lam : ed.values) cloud.push_back(lam + kappa);
        norm_scale = std::max(norm_scale, frobenius_norm(*u) + std::abs(kappa));
    }
    std::optional<Contour> shared;
    try {
        shared = auto_contour(cloud, norm_scale, /*for_log=*/true, nodes);
    } catch (const Error&) {
        // stencil spectra straddle the cut; no single contour exists, so take
        // the logs separately and let the jump check below speak
    }
    const ComplexMatrix a_plus =
        shared ? principal_log(shifted(u_plus, kappa), *shared)
               : principal_log_full(shifted(u_plus, kappa), std::nullopt, nodes).value;
    const ComplexMatrix a_minus =
        shared ? principal_log(shifted(u_minus, kappa), *shared)
               : principal_log_full(shifted(u_minus, kappa), std::nullopt, nodes).value;
    const ComplexMatrix da = a_plus - a_minus;
    if (frobenius_norm(da) > std::numbers::pi)
        throw BranchInconsistency("principal branch jumped across the stencil");

    ComplexMatrix pre = kappa * fam(s, t);
    for (int i = 0; i < pre.dim(); ++i) pre(i, i) += 1.0;
    return (1.0 / (2.0 * h)) * (pre * da);
}

IntegralCheckReport integral_representation_check(const EvolutionFamily& fam, double t,
                                                  double s, Complex kappa, int nodes) {
    if (!fam.spec().commuting())
        throw NonCommuting("integral comparison assumes a commuting family");
    const LogRepresentation rep = compute_a(fam, t, s, kappa, nodes);

    const int n = fam.dim();
    const int pts = kSimpsonPoints;  // odd, 2m+1 nodes for m panels of width 2 delta
    std::vector<double> taus(pts);
    const double delta = (t - s) / static_cast<double>(pts - 1);
    for (int j = 0; j < pts; ++j) taus[j] = s + delta * j;
    taus.back() = t;

    const std::vector<ComplexMatrix> path = evaluate_path(fam, s, taus);

    ComplexMatrix q(n);
    for (int j = 0; j < pts; ++j) {
        const ComplexMatrix a_tau = fam.generator(taus[j]);
        ComplexMatrix f(n);
        if (kappa == Complex{0.0, 0.0}) {
            f = a_tau;
        } else {
            ComplexMatrix m = kappa * path[j];
            for (int i = 0; i < n; ++i) m(i, i) += 1.0;
            f = LuFactorization(m).solve(a_tau);
        }
        const double w = (j == 0 || j == pts - 1) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
        q += (w * delta / 3.0) * f;
    }

    // fix the integration constant: a(s,s) = Log(1 + kappa) I
    const Complex a_ss = std::log(Complex{1.0, 0.0} + kappa);
    ComplexMatrix defect = rep.a - q;
    for (int i = 0; i < n; ++i) defect(i, i) -= a_ss;

    IntegralCheckReport report;
    report.discrepancy = spectral_norm(defect);
    report.points = pts;
    try {
        const EigenDecomposition ed = eig(defect);
        report.defect_eigenvalues = ed.values;
        bool on_lattice = true;
        bool nonzero = false;
        for (Complex mu : ed.values) {
            const double m = std::round(mu.imag() / (2.0 * std::numbers::pi));
            const Complex nearest{0.0, 2.0 * std::numbers::pi * m};
            if (std::abs(mu - nearest) > kWrapLatticeTol * (1.0 + std::abs(mu)))
                on_lattice = false;
            if (m != 0.0) nonzero = true;
        }
        report.wrap_flag = on_lattice && nonzero;
    } catch (const Error&) {
        // defect structure not resolvable; report the norm alone
    }
    return report;
}

}  // namespace opcalc

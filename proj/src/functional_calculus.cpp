#include "opcalc/functional_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "opcalc/errors.hpp"
#include "opcalc/linalg.hpp"

namespace opcalc {

namespace {

constexpr double kPi = std::numbers::pi;

// fixed-order pairwise tree; the result depends only on element order
template <typename T>
T pairwise_sum(std::vector<T>& items, size_t lo, size_t hi) {
    if (hi - lo == 1) return std::move(items[lo]);
    const size_t mid = lo + (hi - lo) / 2;
    T left = pairwise_sum(items, lo, mid);
    T right = pairwise_sum(items, mid, hi);
    left += right;
    return left;
}

Complex eval_fn(AnalyticFn f, Complex z) {
    switch (f) {
        case AnalyticFn::Identity: return z;
        case AnalyticFn::Log: return std::log(z);  // principal branch
        case AnalyticFn::Exp: return std::exp(z);
    }
    return z;
}

struct Sweep {
    ComplexMatrix value;  // empty when count-only
    double count_raw = 0.0;
};

Sweep contour_sweep(AnalyticFn f, const ComplexMatrix& a, const Contour& c, bool want_value) {
    const int n = a.dim();
    const int nodes = c.nodes();
    std::vector<ComplexMatrix> value_terms;
    std::vector<Complex> count_terms(static_cast<size_t>(nodes));
    if (want_value) value_terms.resize(static_cast<size_t>(nodes), ComplexMatrix(n));

    const ComplexMatrix ident = ComplexMatrix::identity(n);
    for (int j = 0; j < nodes; ++j) {
        const double theta = 2.0 * kPi * j / nodes;
        const Complex lambda = c.point(theta);
        const Complex dlambda = c.tangent(theta);
        ComplexMatrix shifted = (-1.0) * a;
        for (int i = 0; i < n; ++i) shifted(i, i) += lambda;
        ComplexMatrix resolvent;
        try {
            resolvent = LuFactorization(shifted).solve(ident);
        } catch (const SingularMatrix&) {
            throw SingularMatrix("dunford_apply: quadrature node at theta = " +
                                 format_double(theta) + " collides with an eigenvalue");
        }
        // weight = dtheta / (2 pi i) = 1 / (i N)
        const Complex w = dlambda / (Complex(0.0, 1.0) * static_cast<double>(nodes));
        count_terms[static_cast<size_t>(j)] = w * trace(resolvent);
        if (want_value) {
            resolvent *= w * eval_fn(f, lambda);
            value_terms[static_cast<size_t>(j)] = std::move(resolvent);
        }
    }

    Sweep s;
    s.count_raw = pairwise_sum(count_terms, 0, count_terms.size()).real();
    if (want_value) s.value = pairwise_sum(value_terms, 0, value_terms.size());
    return s;
}

int rounded_count(double raw) {
    const double nearest = std::round(raw);
    if (std::abs(raw - nearest) > kCountRoundTol)
        throw AmbiguousCount("argument-principle count " + format_double(raw) +
                             " is not close to an integer");
    return static_cast<int>(nearest);
}

}  // namespace

double cut_distance(Complex z) {
    if (z.real() > 0.0) return std::abs(z);
    return std::abs(z.imag());
}

Contour::Contour(Kind k, Complex c, double sx, double sy, int n)
    : kind_(k), center_(c), semi_x_(sx), semi_y_(sy), nodes_(n) {
    if (!(sx > 0.0) || !(sy > 0.0))
        throw std::invalid_argument("Contour: semi-axes must be positive");
    if (n < kMinNodes)
        throw std::invalid_argument("Contour: at least " + std::to_string(kMinNodes) +
                                    " nodes required");
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()) || !std::isfinite(sx) ||
        !std::isfinite(sy))
        throw std::invalid_argument("Contour: non-finite geometry");
}

Contour Contour::circle(Complex center, double radius, int nodes) {
    return Contour(Kind::Circle, center, radius, radius, nodes);
}

Contour Contour::ellipse(Complex center, double semi_x, double semi_y, int nodes) {
    return Contour(Kind::Ellipse, center, semi_x, semi_y, nodes);
}

Contour Contour::with_nodes(int nodes) const {
    return Contour(kind_, center_, semi_x_, semi_y_, nodes);
}

Complex Contour::point(double theta) const {
    return center_ + Complex(semi_x_ * std::cos(theta), semi_y_ * std::sin(theta));
}

Complex Contour::tangent(double theta) const {
    return Complex(-semi_x_ * std::sin(theta), semi_y_ * std::cos(theta));
}

bool Contour::crosses_cut() const {
    const double cy = center_.imag();
    if (std::abs(cy) > semi_y_) return false;  // never touches the real axis
    // real-axis intersections at cx +- a sqrt(1 - (cy/b)^2)
    const double t = 1.0 - (cy / semi_y_) * (cy / semi_y_);
    const double spread = semi_x_ * std::sqrt(std::max(t, 0.0));
    return center_.real() - spread <= 0.0;
}

double Contour::level(Complex z) const {
    const double dx = (z.real() - center_.real()) / semi_x_;
    const double dy = (z.imag() - center_.imag()) / semi_y_;
    return std::hypot(dx, dy);
}

double Contour::cut_level() const {
    // level over the ray {x <= 0, y = 0} is minimized at x = min(0, cx)
    const double ly = center_.imag() / semi_y_;
    if (center_.real() <= 0.0) return std::abs(ly);
    return std::hypot(center_.real() / semi_x_, ly);
}

ComplexMatrix dunford_apply(AnalyticFn f, const ComplexMatrix& a, const Contour& c) {
    if (a.dim() == 0) throw std::invalid_argument("dunford_apply: empty matrix");
    if (f == AnalyticFn::Log && c.crosses_cut())
        throw BranchCutIntersection("dunford_apply: contour touches the branch cut");
    Sweep s = contour_sweep(f, a, c, true);
    const int count = rounded_count(s.count_raw);
    if (count != a.dim())
        throw ContourInvalid("dunford_apply: contour encloses " + std::to_string(count) +
                             " of " + std::to_string(a.dim()) + " eigenvalues");
    return std::move(s.value);
}

SpectralCertificate validate_contour(const ComplexMatrix& a, const Contour& c) {
    if (a.dim() == 0) throw std::invalid_argument("validate_contour: empty matrix");
    Sweep s = contour_sweep(AnalyticFn::Identity, a, c, false);
    SpectralCertificate cert;
    cert.enclosed_count = rounded_count(s.count_raw);
    cert.count_defect = std::abs(s.count_raw - std::round(s.count_raw));
    cert.method = CertificateMethod::ContourOnly;
    cert.wrap_flag = false;
    if (!c.crosses_cut()) {
        // every enclosed point is separated from the cut by at least the
        // curve's own distance to it
        double dmin = std::numeric_limits<double>::infinity();
        const int samples = std::max(c.nodes(), 512);
        for (int j = 0; j < samples; ++j)
            dmin = std::min(dmin, cut_distance(c.point(2.0 * kPi * j / samples)));
        cert.cut_clearance = dmin;
    } else {
        cert.cut_clearance = 0.0;
    }
    return cert;
}

namespace {

// Trapezoid-rule convergence on the ellipse theta -> c + a cos + i b sin is
// governed by the confocal coordinate, not euclidean distance: writing
// z - c = alpha w + beta / w with alpha = (a+b)/2, beta = (a-b)/2, the curve
// is |w| = 1 and a singularity at level |w| contributes ~ |w|^{-sign N}.
double joukowski_level(Complex z, Complex center, double a, double b) {
    const double alpha = 0.5 * (a + b);
    const double beta = 0.5 * (a - b);
    const Complex zeta = z - center;
    const Complex disc = std::sqrt(zeta * zeta - 4.0 * alpha * beta);
    const double w1 = std::abs((zeta + disc) / (2.0 * alpha));
    const double w2 = std::abs((zeta - disc) / (2.0 * alpha));
    return std::max(w1, w2);
}

struct Candidate {
    double a = 0.0, b = 0.0;
    double rate = 0.0;
    bool ok = false;
};

// predicted rate = min(cut level, 1 / max eigenvalue level), both confocal
Candidate score_ellipse(const std::vector<Complex>& spec, Complex center, double a, double b) {
    Candidate cand;
    if (!(a > 0.0) || !(b > 0.0)) return cand;
    double lmax = 0.0;
    for (const Complex& z : spec) lmax = std::max(lmax, joukowski_level(z, center, a, b));
    if (lmax >= 0.999) return cand;
    double lcut = std::numeric_limits<double>::infinity();
    const double reach = std::abs(center.real()) + 6.0 * (a + b);
    for (int j = 0; j <= 256; ++j) {
        const Complex ray_pt(-reach * j / 256.0, 0.0);
        lcut = std::min(lcut, joukowski_level(ray_pt, center, a, b));
    }
    if (lcut <= 1.001) return cand;
    cand.a = a;
    cand.b = b;
    cand.rate = std::min(lcut, 1.0 / std::max(lmax, 1e-3));
    cand.ok = true;
    return cand;
}

}  // namespace

Contour auto_contour(const std::vector<Complex>& spectrum, double norm_scale, bool for_log,
                     int nodes) {
    if (spectrum.empty()) throw std::invalid_argument("auto_contour: empty spectrum");
    Complex centroid = 0.0;
    for (const Complex& z : spectrum) centroid += z;
    centroid /= static_cast<double>(spectrum.size());
    double rho_in = 0.0;
    for (const Complex& z : spectrum) rho_in = std::max(rho_in, std::abs(z - centroid));
    const double radius = std::max(1.25 * rho_in + 0.05 * norm_scale, 1e-8);

    if (!for_log) return Contour::circle(centroid, radius, nodes);

    // circle is kept when the whole cut stays clear with enough margin for
    // fast quadrature convergence
    const double circle_clear = cut_distance(centroid);
    if (circle_clear >= 1.2 * radius) return Contour::circle(centroid, radius, nodes);

    double re_lo = spectrum[0].real(), re_hi = re_lo;
    double im_lo = spectrum[0].imag(), im_hi = im_lo;
    for (const Complex& z : spectrum) {
        re_lo = std::min(re_lo, z.real());
        re_hi = std::max(re_hi, z.real());
        im_lo = std::min(im_lo, z.imag());
        im_hi = std::max(im_hi, z.imag());
    }
    const Complex box_center(0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi));
    const double w = 0.5 * (re_hi - re_lo);
    const double h = 0.5 * (im_hi - im_lo);
    const double scale = std::max({w, h, 0.05 * (1.0 + norm_scale), 1e-8});

    static constexpr double kInnerLevels[] = {0.80, 0.85, 0.90, 0.95};
    static constexpr double kWidthFactors[] = {1.05, 1.1, 1.2, 1.35, 1.5, 1.75, 2.0, 2.5};

    Candidate best;
    for (const double lin : kInnerLevels) {
        for (const double fa : kWidthFactors) {
            const double a = std::max(w + 0.01 * scale, 1e-8) * fa / lin;
            // minimal b containing the spectrum at level lin
            double bmin = 0.0;
            bool feasible = true;
            for (const Complex& z : spectrum) {
                const double lx = (z.real() - box_center.real()) / a;
                const double dy = std::abs(z.imag() - box_center.imag());
                const double room = lin * lin - lx * lx;
                if (room <= 1e-9) {
                    if (dy > 0.0) feasible = false;
                    continue;
                }
                bmin = std::max(bmin, dy / std::sqrt(room));
            }
            if (!feasible) continue;
            bmin = std::max(bmin, 0.01 * scale);
            for (const double bf : {0.0, 0.35, 0.625, 1.0, 1.25}) {
                const double b = std::max(bmin, bf * a);
                const Candidate cand = score_ellipse(spectrum, box_center, a, b);
                if (cand.ok && cand.rate > best.rate) best = cand;
            }
        }
    }
    if (best.ok) {
        Contour e = Contour::ellipse(box_center, best.a, best.b, nodes);
        if (!e.crosses_cut()) return e;
    }
    // last resort: the original circle, provided it at least avoids the cut
    Contour circ = Contour::circle(centroid, radius, nodes);
    if (!circ.crosses_cut()) return circ;
    throw BranchCutIntersection("auto_contour: no admissible contour around the spectrum");
}

namespace {

// Gershgorin enclosure for the rare defective fallback
Contour gershgorin_contour(const ComplexMatrix& a, bool for_log, int nodes) {
    const int n = a.dim();
    Complex center = trace(a) / static_cast<double>(n);
    double rho = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = std::abs(a(i, i) - center);
        for (int j = 0; j < n; ++j)
            if (j != i) row += std::abs(a(i, j));
        rho = std::max(rho, row);
    }
    const double radius = std::max(1.25 * rho + 0.05 * frobenius_norm(a), 1e-8);
    Contour c = Contour::circle(center, radius, nodes);
    if (for_log && c.crosses_cut())
        throw BranchCutIntersection(
            "principal_log: defective eigenbasis and the Gershgorin circle crosses the cut");
    return c;
}

}  // namespace

LogComputation principal_log_full(const ComplexMatrix& a, const std::optional<Contour>& c,
                                  int nodes) {
    if (a.dim() == 0) throw std::invalid_argument("principal_log: empty matrix");
    std::optional<std::vector<Complex>> spectrum;
    try {
        spectrum = eig(a).values;
    } catch (const Defective&) {
        spectrum.reset();  // contour methods still apply
    }

    double clearance = 0.0;
    if (spectrum) {
        double scale = 0.0;
        for (const Complex& z : *spectrum) scale = std::max(scale, std::abs(z));
        clearance = std::numeric_limits<double>::infinity();
        for (const Complex& z : *spectrum) clearance = std::min(clearance, cut_distance(z));
        if (clearance <= kCutTolFactor * (1.0 + scale))
            throw BranchCutIntersection("principal_log: eigenvalue on the branch cut");
    }

    Contour contour = c.has_value()
                          ? *c
                          : (spectrum ? auto_contour(*spectrum, spectral_norm(a), true, nodes)
                                      : gershgorin_contour(a, true, nodes));

    LogComputation out{dunford_apply(AnalyticFn::Log, a, contour), contour, {}};
    out.certificate.enclosed_count = a.dim();
    out.certificate.wrap_flag = false;
    if (spectrum) {
        out.certificate.cut_clearance = clearance;
        out.certificate.method = CertificateMethod::Oracle;
    } else {
        SpectralCertificate geom = validate_contour(a, contour);
        out.certificate.cut_clearance = geom.cut_clearance;
        out.certificate.count_defect = geom.count_defect;
        out.certificate.method = CertificateMethod::ContourOnly;
    }
    return out;
}

ComplexMatrix principal_log(const ComplexMatrix& a) {
    return principal_log_full(a).value;
}

ComplexMatrix principal_log(const ComplexMatrix& a, const Contour& c) {
    return principal_log_full(a, c).value;
}

bool kappa_admissible(const std::vector<Complex>& u_spectrum, double u_norm, Complex kappa) {
    double clearance = std::numeric_limits<double>::infinity();
    for (const Complex& z : u_spectrum) clearance = std::min(clearance, cut_distance(z + kappa));
    return clearance >= kClearanceFactor * (1.0 + u_norm);
}

KappaChoice choose_kappa(const ComplexMatrix& u) {
    if (u.dim() == 0) throw std::invalid_argument("choose_kappa: empty matrix");
    const std::vector<Complex> spec = eig(u).values;
    const double norm = spectral_norm(u);

    std::vector<Complex> ladder{Complex(0.0, 0.0)};
    for (double v = 1.0; v <= kKappaLadderMax; v *= 2.0) ladder.emplace_back(v, 0.0);
    for (double v = 2.0; v <= kKappaLadderMax; v *= 2.0) {
        ladder.emplace_back(0.0, v);
        ladder.emplace_back(0.0, -v);
    }

    for (const Complex& kappa : ladder) {
        if (!kappa_admissible(spec, norm, kappa)) continue;
        KappaChoice choice;
        choice.kappa = kappa;
        choice.certificate.enclosed_count = u.dim();
        double clearance = std::numeric_limits<double>::infinity();
        for (const Complex& z : spec) clearance = std::min(clearance, cut_distance(z + kappa));
        choice.certificate.cut_clearance = clearance;
        choice.certificate.method = CertificateMethod::Oracle;
        choice.certificate.wrap_flag = false;
        return choice;
    }
    throw NoAdmissibleKappa("choose_kappa: ladder exhausted at |kappa| = " +
                            format_double(kKappaLadderMax));
}

int enclosed_count_oracle(const std::vector<Complex>& spectrum, const Contour& c) {
    int count = 0;
    for (const Complex& z : spectrum)
        if (c.level(z) < 1.0) ++count;
    return count;
}

ComplexMatrix eigendecomposition_log(const ComplexMatrix& a) {
    const EigenDecomposition ed = eig(a);
    double scale = 0.0;
    for (const Complex& z : ed.values) scale = std::max(scale, std::abs(z));
    ComplexMatrix logs(a.dim());
    for (int i = 0; i < a.dim(); ++i) {
        if (cut_distance(ed.values[i]) <= kCutTolFactor * (1.0 + scale))
            throw BranchCutIntersection("eigendecomposition_log: eigenvalue on the branch cut");
        logs(i, i) = std::log(ed.values[i]);
    }
    // V Log(D) V^{-1} as the solution of X V = V Log(D)
    const ComplexMatrix rhs = ed.vectors * logs;
    const ComplexMatrix xt = LuFactorization(conj_transpose(ed.vectors))
                                 .solve(conj_transpose(rhs));
    return conj_transpose(xt);
}

}  // namespace opcalc

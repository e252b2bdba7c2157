#include "opcalc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "opcalc/errors.hpp"

namespace opcalc {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double unit_from_bits(uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;  // [0, 1)
}

std::vector<Complex> matvec(const ComplexMatrix& a, const std::vector<Complex>& v) {
    const int n = a.dim();
    std::vector<Complex> out(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Complex s = 0.0;
        for (int j = 0; j < n; ++j) s += a(i, j) * v[static_cast<size_t>(j)];
        out[static_cast<size_t>(i)] = s;
    }
    return out;
}

std::vector<Complex> conj_matvec(const ComplexMatrix& a, const std::vector<Complex>& v) {
    const int n = a.dim();
    std::vector<Complex> out(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        Complex s = 0.0;
        for (int i = 0; i < n; ++i) s += std::conj(a(i, j)) * v[static_cast<size_t>(i)];
        out[static_cast<size_t>(j)] = s;
    }
    return out;
}

double vec_norm(const std::vector<Complex>& v) {
    double s = 0.0;
    for (const Complex& z : v) s += std::norm(z);
    return std::sqrt(s);
}

}  // namespace

LuFactorization::LuFactorization(const ComplexMatrix& a)
    : lu_(a), perm_(static_cast<size_t>(a.dim())) {
    const int n = a.dim();
    if (n == 0) throw std::invalid_argument("LuFactorization: empty matrix");
    const double threshold = kPivotRelThreshold * frobenius_norm(a);
    for (int i = 0; i < n; ++i) perm_[static_cast<size_t>(i)] = i;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::abs(lu_(k, k));
        for (int i = k + 1; i < n; ++i) {
            const double cand = std::abs(lu_(i, k));
            if (cand > best) {
                best = cand;
                piv = i;
            }
        }
        if (best <= threshold)
            throw SingularMatrix("pivot " + std::to_string(k) + " below threshold " +
                                 format_double(threshold));
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
            std::swap(perm_[static_cast<size_t>(k)], perm_[static_cast<size_t>(piv)]);
        }
        const Complex inv_piv = 1.0 / lu_(k, k);
        for (int i = k + 1; i < n; ++i) {
            const Complex m = lu_(i, k) * inv_piv;
            lu_(i, k) = m;
            if (m == Complex(0.0, 0.0)) continue;
            for (int j = k + 1; j < n; ++j) lu_(i, j) -= m * lu_(k, j);
        }
    }
}

std::vector<Complex> LuFactorization::solve(const std::vector<Complex>& b) const {
    const int n = dim();
    if (b.size() != static_cast<size_t>(n))
        throw std::invalid_argument("LuFactorization::solve: size mismatch");
    std::vector<Complex> x(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<size_t>(i)] = b[static_cast<size_t>(perm_[static_cast<size_t>(i)])];
    for (int i = 1; i < n; ++i) {
        Complex s = x[static_cast<size_t>(i)];
        for (int j = 0; j < i; ++j) s -= lu_(i, j) * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(i)] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
        Complex s = x[static_cast<size_t>(i)];
        for (int j = i + 1; j < n; ++j) s -= lu_(i, j) * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(i)] = s / lu_(i, i);
    }
    return x;
}

ComplexMatrix LuFactorization::solve(const ComplexMatrix& b) const {
    const int n = dim();
    if (b.dim() != n) throw std::invalid_argument("LuFactorization::solve: dim mismatch");
    ComplexMatrix x(n);
    std::vector<Complex> col(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) col[static_cast<size_t>(i)] = b(i, j);
        const std::vector<Complex> sol = solve(col);
        for (int i = 0; i < n; ++i) x(i, j) = sol[static_cast<size_t>(i)];
    }
    return x;
}

ComplexMatrix solve_linear(const ComplexMatrix& a, const ComplexMatrix& b) {
    const LuFactorization lu(a);
    ComplexMatrix x = lu.solve(b);
    // one refinement pass: r = b - a x, x += a^{-1} r
    ComplexMatrix r = b - a * x;
    x += lu.solve(r);
    if (!x.all_finite()) throw SingularMatrix("solve_linear: non-finite solution");
    return x;
}

ComplexMatrix inverse(const ComplexMatrix& a) {
    return solve_linear(a, ComplexMatrix::identity(a.dim()));
}

ComplexMatrix matrix_exp(const ComplexMatrix& a) {
    const int n = a.dim();
    if (n == 0) throw std::invalid_argument("matrix_exp: empty matrix");
    if (!a.all_finite()) throw std::invalid_argument("matrix_exp: non-finite input");
    const double fro = frobenius_norm(a);
    int s = 0;
    if (fro > kExpScaleTarget)
        s = static_cast<int>(std::ceil(std::log2(fro / kExpScaleTarget)));
    if (s > 1024) throw Overflow("matrix_exp: norm too large to scale");
    ComplexMatrix x = std::ldexp(1.0, -s) * a;
    ComplexMatrix sum = ComplexMatrix::identity(n);
    ComplexMatrix term = ComplexMatrix::identity(n);
    for (int k = 1; k <= kExpSeriesTerms; ++k) {
        term = (1.0 / k) * (term * x);
        sum += term;
    }
    for (int i = 0; i < s; ++i) sum = sum * sum;
    if (!sum.all_finite()) throw Overflow("matrix_exp: result not representable");
    return sum;
}

double spectral_norm(const ComplexMatrix& a) {
    const int n = a.dim();
    if (n == 0) return 0.0;
    if (frobenius_norm(a) == 0.0) return 0.0;
    double best = 0.0;
    // two deterministic starts; the Rayleigh quotient of A^H A never
    // overshoots, so max over starts is still a lower estimate
    for (uint64_t start = 0; start < 2; ++start) {
        uint64_t state = 0x0bc1f3a5u + start * 0x51ed2701u + static_cast<uint64_t>(n) * 977u;
        std::vector<Complex> v(static_cast<size_t>(n));
        for (Complex& z : v)
            z = Complex(unit_from_bits(splitmix64(state)) - 0.5,
                        unit_from_bits(splitmix64(state)) - 0.5);
        double nv = vec_norm(v);
        if (nv == 0.0) continue;
        for (Complex& z : v) z /= nv;
        double lam = 0.0, prev = -1.0;
        for (int it = 0; it < kPowerIterMax; ++it) {
            const std::vector<Complex> w = matvec(a, v);
            lam = 0.0;
            for (const Complex& z : w) lam += std::norm(z);  // = ||A v||^2, v unit
            std::vector<Complex> u = conj_matvec(a, w);
            const double nu = vec_norm(u);
            if (nu == 0.0) break;
            for (Complex& z : u) z /= nu;
            v = std::move(u);
            if (prev >= 0.0 && std::abs(lam - prev) <= kPowerIterRelTol * lam) break;
            prev = lam;
        }
        best = std::max(best, std::sqrt(lam));
    }
    return best;
}

namespace {

struct Givens {
    double c;   // real
    Complex s;  // |s|^2 + c^2 = 1
};

// G = [c, s; -conj(s), c] zeroing b in (a, b)^T: G [a; b] = [r; 0].
Givens make_givens(Complex a, Complex b) {
    const double aa = std::abs(a);
    const double h = std::hypot(aa, std::abs(b));
    if (h == 0.0) return {1.0, Complex(0.0, 0.0)};
    if (aa == 0.0) return {0.0, Complex(1.0, 0.0)};
    const Complex phase = a / aa;
    return {aa / h, phase * std::conj(b) / h};
}

// rows i and i+1 of m, columns [jlo, jhi)
void apply_givens_left(ComplexMatrix& m, const Givens& g, int i, int jlo, int jhi) {
    for (int j = jlo; j < jhi; ++j) {
        const Complex x = m(i, j);
        const Complex y = m(i + 1, j);
        m(i, j) = g.c * x + g.s * y;
        m(i + 1, j) = -std::conj(g.s) * x + g.c * y;
    }
}

// columns j and j+1 of m, rows [ilo, ihi): m <- m G^H
void apply_givens_right(ComplexMatrix& m, const Givens& g, int j, int ilo, int ihi) {
    for (int i = ilo; i < ihi; ++i) {
        const Complex x = m(i, j);
        const Complex y = m(i, j + 1);
        m(i, j) = g.c * x + std::conj(g.s) * y;
        m(i, j + 1) = -g.s * x + g.c * y;
    }
}

// eigenvalue of [[a, b], [c, d]] closest to d
Complex wilkinson_shift(Complex a, Complex b, Complex c, Complex d) {
    const Complex tr2 = 0.5 * (a + d);
    const Complex det = a * d - b * c;
    const Complex disc = std::sqrt(tr2 * tr2 - det);
    const Complex m1 = tr2 + disc;
    const Complex m2 = tr2 - disc;
    return (std::abs(m1 - d) < std::abs(m2 - d)) ? m1 : m2;
}

}  // namespace

EigenDecomposition eig(const ComplexMatrix& a) {
    const int n = a.dim();
    if (n == 0) throw std::invalid_argument("eig: empty matrix");
    if (!a.all_finite()) throw std::invalid_argument("eig: non-finite input");

    const double anorm = std::max(frobenius_norm(a), std::numeric_limits<double>::min());

    // Hessenberg reduction by Householder reflectors, Q accumulated.
    ComplexMatrix t = a;
    ComplexMatrix q = ComplexMatrix::identity(n);
    for (int k = 0; k + 2 < n; ++k) {
        double colnorm = 0.0;
        for (int i = k + 1; i < n; ++i) colnorm += std::norm(t(i, k));
        colnorm = std::sqrt(colnorm);
        if (colnorm <= kEps * anorm) continue;
        const Complex alpha = t(k + 1, k);
        const double aa = std::abs(alpha);
        const Complex phase = (aa == 0.0) ? Complex(1.0, 0.0) : alpha / aa;
        const Complex mu = -phase * colnorm;
        std::vector<Complex> v(static_cast<size_t>(n), Complex(0.0, 0.0));
        v[static_cast<size_t>(k + 1)] = alpha - mu;
        for (int i = k + 2; i < n; ++i) v[static_cast<size_t>(i)] = t(i, k);
        const double vnorm = vec_norm(v);
        if (vnorm == 0.0) continue;
        for (Complex& z : v) z /= vnorm;
        // t <- (I - 2 v v^H) t
        for (int j = 0; j < n; ++j) {
            Complex dot = 0.0;
            for (int i = k + 1; i < n; ++i) dot += std::conj(v[static_cast<size_t>(i)]) * t(i, j);
            dot *= 2.0;
            for (int i = k + 1; i < n; ++i) t(i, j) -= dot * v[static_cast<size_t>(i)];
        }
        // t <- t (I - 2 v v^H)
        for (int i = 0; i < n; ++i) {
            Complex dot = 0.0;
            for (int j = k + 1; j < n; ++j) dot += t(i, j) * v[static_cast<size_t>(j)];
            dot *= 2.0;
            for (int j = k + 1; j < n; ++j) t(i, j) -= dot * std::conj(v[static_cast<size_t>(j)]);
        }
        // q <- q (I - 2 v v^H)
        for (int i = 0; i < n; ++i) {
            Complex dot = 0.0;
            for (int j = k + 1; j < n; ++j) dot += q(i, j) * v[static_cast<size_t>(j)];
            dot *= 2.0;
            for (int j = k + 1; j < n; ++j) q(i, j) -= dot * std::conj(v[static_cast<size_t>(j)]);
        }
        for (int i = k + 2; i < n; ++i) t(i, k) = 0.0;
        t(k + 1, k) = mu;
    }

    // Shifted QR with deflation from the bottom; q keeps the accumulated
    // similarity so a = q t q^H throughout.
    const int max_total_iters = 60 * n + 120;
    int total_iters = 0;
    int iters_since_deflation = 0;
    int m = n - 1;
    while (m > 0) {
        const double dsmall =
            kEps * std::max(std::abs(t(m - 1, m - 1)) + std::abs(t(m, m)), anorm * 1e-3);
        if (std::abs(t(m, m - 1)) <= dsmall) {
            t(m, m - 1) = 0.0;
            --m;
            iters_since_deflation = 0;
            continue;
        }
        if (++total_iters > max_total_iters)
            throw NoConvergence("eig: QR iteration cap exceeded");

        int l = m;
        while (l > 0) {
            const double s =
                kEps * std::max(std::abs(t(l - 1, l - 1)) + std::abs(t(l, l)), anorm * 1e-3);
            if (std::abs(t(l, l - 1)) <= s) {
                t(l, l - 1) = 0.0;
                break;
            }
            --l;
        }

        Complex sigma;
        if (++iters_since_deflation % 16 == 0) {
            sigma = t(m, m) + 1.5 * std::abs(t(m, m - 1));  // exceptional shift
        } else {
            sigma = wilkinson_shift(t(m - 1, m - 1), t(m - 1, m), t(m, m - 1), t(m, m));
        }

        for (int i = l; i <= m; ++i) t(i, i) -= sigma;
        std::vector<Givens> rots;
        rots.reserve(static_cast<size_t>(m - l));
        for (int k = l; k < m; ++k) {
            const Givens g = make_givens(t(k, k), t(k + 1, k));
            apply_givens_left(t, g, k, k, n);
            t(k + 1, k) = 0.0;
            rots.push_back(g);
        }
        for (int k = l; k < m; ++k) {
            const Givens& g = rots[static_cast<size_t>(k - l)];
            apply_givens_right(t, g, k, 0, std::min(k + 2, m + 1));
            apply_givens_right(q, g, k, 0, n);
        }
        for (int i = l; i <= m; ++i) t(i, i) += sigma;
    }

    EigenDecomposition dec;
    dec.values.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) dec.values[static_cast<size_t>(i)] = t(i, i);

    // Eigenvectors of the triangular factor by back-substitution, then
    // rotate back. Near-equal diagonal entries get a floored denominator;
    // for a diagonalizable matrix the numerator is small in step.
    const double smlnum = kEps * anorm;
    ComplexMatrix y(n);
    for (int k = 0; k < n; ++k) {
        y(k, k) = 1.0;
        for (int j = k - 1; j >= 0; --j) {
            Complex num = 0.0;
            for (int i = j + 1; i <= k; ++i) num += t(j, i) * y(i, k);
            Complex d = t(j, j) - t(k, k);
            if (std::abs(d) < smlnum) d = Complex(smlnum, 0.0);
            y(j, k) = -num / d;
        }
        double cn = 0.0;
        for (int i = 0; i <= k; ++i) cn += std::norm(y(i, k));
        cn = std::sqrt(cn);
        if (cn == 0.0 || !std::isfinite(cn))
            throw Defective("eig: eigenvector back-substitution failed");
        for (int i = 0; i <= k; ++i) y(i, k) /= cn;
    }
    dec.vectors = q * y;

    double vnorm_inv = 0.0;
    try {
        vnorm_inv = spectral_norm(inverse(dec.vectors));
    } catch (const SingularMatrix&) {
        throw Defective("eig: eigenvector matrix numerically singular");
    }
    dec.condition = spectral_norm(dec.vectors) * vnorm_inv;
    if (!(dec.condition < kDefectiveCondBound))
        throw Defective("eig: eigenvector condition " + format_double(dec.condition) +
                        " exceeds bound");
    return dec;
}

bool same_spectrum(std::vector<Complex> a, std::vector<Complex> b, double tol) {
    if (a.size() != b.size()) return false;
    for (const Complex& x : a) {
        double best = std::numeric_limits<double>::infinity();
        size_t best_i = b.size();
        for (size_t i = 0; i < b.size(); ++i) {
            const double d = std::abs(x - b[i]);
            if (d < best) {
                best = d;
                best_i = i;
            }
        }
        if (best_i == b.size() || best > tol) return false;
        b.erase(b.begin() + static_cast<std::ptrdiff_t>(best_i));
    }
    return b.empty();
}

}  // namespace opcalc

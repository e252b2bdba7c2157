#pragma once

#include <vector>

#include "opcalc/complex_matrix.hpp"

namespace opcalc {

// Tolerances and sizing for the dense kernels. These are frozen; tests and
// the acceptance suite assume them.
inline constexpr double kTolSolve = 1e-12;        // backward error bound, relative
inline constexpr double kPivotRelThreshold = 1e-14;  // x ||A||_F: below = singular
inline constexpr double kExpScaleTarget = 0.5;    // scale until ||A / 2^s||_F <= this
inline constexpr int kExpSeriesTerms = 18;
inline constexpr int kPowerIterMax = 30;
inline constexpr double kPowerIterRelTol = 1e-10;
inline constexpr double kEigResidualTol = 1e-10;  // x ||A||: eigenpair residual bound
inline constexpr double kDefectiveCondBound = 1e12;

// Right eigenpairs A v_i = values[i] v_i with vectors as columns.
// condition = cond_2 of the eigenvector matrix; finite by construction
// (Defective is thrown instead of returning an unusable basis).
struct EigenDecomposition {
    std::vector<Complex> values;
    ComplexMatrix vectors;
    double condition = 0.0;
};

// LU factorization with partial pivoting, reusable across right-hand sides.
// Throws SingularMatrix when a pivot falls below kPivotRelThreshold * ||A||_F.
class LuFactorization {
public:
    explicit LuFactorization(const ComplexMatrix& a);
    ComplexMatrix solve(const ComplexMatrix& b) const;
    std::vector<Complex> solve(const std::vector<Complex>& b) const;
    int dim() const { return lu_.dim(); }

private:
    ComplexMatrix lu_;
    std::vector<int> perm_;
};

// X with A X = B. One step of iterative refinement keeps the forward error
// near condition(A) * machine epsilon.
ComplexMatrix solve_linear(const ComplexMatrix& a, const ComplexMatrix& b);

ComplexMatrix inverse(const ComplexMatrix& a);

// Scaling-and-squaring exponential: scale so ||A/2^s||_F <= kExpScaleTarget,
// sum kExpSeriesTerms Taylor terms, square s times. Throws Overflow if the
// result leaves the representable range.
ComplexMatrix matrix_exp(const ComplexMatrix& a);

// Operator 2-norm estimate: power iteration on A^H A with deterministic
// start vectors, kPowerIterMax iterations or kPowerIterRelTol relative
// change, whichever first. Never exceeds the true norm.
double spectral_norm(const ComplexMatrix& a);

// Eigendecomposition oracle: Householder Hessenberg reduction, then shifted
// QR with deflation to a Schur form, eigenvectors by back-substitution on
// the triangular factor. Independent of the contour route; used as the
// reference it is checked against. Throws NoConvergence past the iteration
// cap and Defective when the eigenvector matrix condition exceeds
// kDefectiveCondBound.
EigenDecomposition eig(const ComplexMatrix& a);

// Multiset comparison up to permutation: greedy matching within tol.
bool same_spectrum(std::vector<Complex> a, std::vector<Complex> b, double tol);

}  // namespace opcalc

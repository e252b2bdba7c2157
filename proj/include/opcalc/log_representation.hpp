#pragma once

#include <string>
#include <vector>

#include "opcalc/complex_matrix.hpp"
#include "opcalc/evolution.hpp"
#include "opcalc/functional_calculus.hpp"

namespace opcalc {

inline constexpr int kSimpsonPoints = 129;         // composite Simpson grid
inline constexpr double kFdStepFactor = 1e-3;      // default h = this * T
inline constexpr double kWrapLatticeTol = 1e-3;    // defect eigenvalue distance to 2 pi i Z

// a(t, s) = Log(U(t, s) + kappa I) for an evolution family, together with
// the evidence that the logarithm was taken on a clean branch.
struct LogRepresentation {
    Complex kappa;
    double t = 0.0;
    double s = 0.0;
    ComplexMatrix a;
    std::string family_ref;
    SpectralCertificate certificate;
    Contour contour = Contour::circle({0.0, 0.0}, 1.0);  // where the quadrature ran
};

// Log(U(t,s) + kappa I) with the caller's kappa revalidated against the
// shifted spectrum's cut clearance; BranchCutIntersection when inadmissible.
LogRepresentation compute_a(const EvolutionFamily& fam, double t, double s, Complex kappa,
                            int nodes = kDefaultNodes);

// Same, with kappa picked from the standard ladder (NoAdmissibleKappa when
// the ladder is exhausted).
LogRepresentation compute_a_auto(const EvolutionFamily& fam, double t, double s,
                                 int nodes = kDefaultNodes);

// matrix_exp(rep.a) - kappa I; inverse of compute_a up to quadrature error.
ComplexMatrix reconstruct_U(const LogRepresentation& rep);

// (I + kappa U(s,t)) [a(t+h,s) - a(t-h,s)] / (2h), a second-order central
// difference in t. Both stencil logarithms run on one shared contour so the
// branch cannot jump between them; a jump that still shows up as
// ||a(t+h,s) - a(t-h,s)|| > pi throws BranchInconsistency. Requires a
// commuting family (NonCommuting) and kappa admissible at t-h, t, t+h
// (BranchCutIntersection). h = 0 selects the default kFdStepFactor * T.
ComplexMatrix generator_from_logrep(const EvolutionFamily& fam, double t, double s,
                                    Complex kappa, double h = 0.0,
                                    int nodes = kDefaultNodes);

struct IntegralCheckReport {
    double discrepancy = 0.0;  // operator norm of a(t,s) - a(s,s) - Q
    bool wrap_flag = false;    // defect sits on the 2 pi i lattice with a nonzero point
    std::vector<Complex> defect_eigenvalues;
    int points = kSimpsonPoints;
};

// Q = int_s^t (I + kappa U(s,tau))^{-1} A(tau) dtau by composite Simpson on
// kSimpsonPoints nodes, compared against a(t,s) - a(s,s) with
// a(s,s) = Log(1 + kappa) I. The two agree up to quadrature error unless the
// logarithm's branch wrapped along the way; then the defect is a projector
// combination of 2 pi i multiples and wrap_flag is set. Diagnostic: large
// discrepancies are reported, not thrown.
IntegralCheckReport integral_representation_check(const EvolutionFamily& fam, double t,
                                                  double s, Complex kappa,
                                                  int nodes = kDefaultNodes);

}  // namespace opcalc

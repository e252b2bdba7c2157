#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opcalc/complex_matrix.hpp"
#include "opcalc/evolution.hpp"
#include "opcalc/functional_calculus.hpp"

namespace opcalc {

inline constexpr double kSimDiagTol = 1e-8;  // relative off-diagonal acceptance

// k * Log(U) or calK * Log(U + K): an element of the logarithm families the
// sum identities close over. `core` keeps the bare logarithm so commutant
// membership of later actors can be tested against it.
struct LogElement {
    ComplexMatrix value;
    ComplexMatrix core;
    Complex scalar_k{1.0, 0.0};               // scalar case
    std::optional<ComplexMatrix> factor_K;    // shift, matrix case
    std::optional<ComplexMatrix> factor_cal_K;  // actor, matrix case
    std::string family_ref;
    double t = 0.0;
    double s = 0.0;
};

// I plus the normalized nonzero powers M, M^2, ..., M^degree; everything
// here commutes with any logarithm built from the same family.
struct CommutantBasis {
    std::vector<ComplexMatrix> generators;
    int degree = 4;
};
CommutantBasis commutant_basis(const ComplexMatrix& m, int degree = 4);

// Joint-eigendirection argument bookkeeping for products of commuting
// factors: Log(F1 F2 ...) = Log F1 + Log F2 + ... exactly when no direction's
// argument sum leaves (-pi, pi].
struct WrapReport {
    bool wrap_flag = false;
    std::vector<double> argument_sums;    // one per joint eigendirection
    std::vector<int> wrapped_directions;  // indices with sums outside (-pi, pi]
};
// Throws Defective when no seeded linear combination of the factors yields a
// basis diagonalizing them all.
WrapReport branch_wrap_detect(const std::vector<ComplexMatrix>& factors);

// Shared result shape of the four sum identities. The residual is the
// operator norm of the defect; scale = 1 + max operand norm is the intended
// threshold base. On wrap the identity fails by design and the defect's
// eigenvalues document the 2 pi i structure.
struct IdentityResult {
    double residual = 0.0;
    double scale = 1.0;
    bool wrap_flag = false;
    std::vector<Complex> defect_eigenvalues;
};

// Log U(t,r) + Log U(r,s) vs Log U(t,s), all at kappa = 0.
IdentityResult sum_chain_identity(const EvolutionFamily& fam, double t, double r, double s,
                                  int nodes = kDefaultNodes);

// Log U1(t,r) + Log U2(t,r) vs Log(U1 U2) for commuting families.
IdentityResult sum_commuting_identity(const EvolutionFamily& f1, const EvolutionFamily& f2,
                                      double t, double r, int nodes = kDefaultNodes);

// Log(U(t,r)+K) + Log(U(r,s)+K) vs Log(U(t,s) + K U(t,r) + K U(r,s) + K^2)
// for K in the family's commutant.
IdentityResult shifted_chain_identity(const EvolutionFamily& fam, double t, double r, double s,
                                      const ComplexMatrix& k_shift,
                                      int nodes = kDefaultNodes);

// Log(U1+K) + Log(U2+K) vs Log(U1 U2 + K U1 + K U2 + K^2), factors at (t,r).
IdentityResult shifted_commuting_identity(const EvolutionFamily& f1, const EvolutionFamily& f2,
                                          double t, double r, const ComplexMatrix& k_shift,
                                          int nodes = kDefaultNodes);

// k * Log U(t,s); requires kappa = 0 admissible for U(t,s).
LogElement scalar_log_element(const EvolutionFamily& fam, double t, double s, Complex k);

// cal_k * Log(U(t,s) + k_shift); the shifted operand must clear the cut and
// cal_k must commute with the logarithm (NotInCommutant).
LogElement module_log_element(const EvolutionFamily& fam, double t, double s,
                              const ComplexMatrix& k_shift, const ComplexMatrix& cal_k);

// cal_k * elem; NotInCommutant unless cal_k commutes with elem.core.
LogElement module_action(const ComplexMatrix& cal_k, const LogElement& elem);

// max-abs difference between k * Log U and the same element rebuilt through
// the module route (K = 0, cal K = k I); the scalar family embeds in the
// module family.
double containment_residual(const EvolutionFamily& fam, double t, double s, Complex k);

struct AxiomReport {
    std::vector<std::pair<std::string, double>> residuals;
    double worst() const;
    double get(const std::string& name) const;  // -1 when absent
};

// Vector-space laws over the sampled elements and scalars, plus the norm
// axioms; residuals are relative where a natural scale exists.
AxiomReport space_axioms_check(const std::vector<LogElement>& sample,
                               const std::vector<Complex>& scalars);

// Module laws for the actor set: unit, associativity, both distributivities,
// submultiplicativity of the norm under the action, and commutant membership
// of every actor against every sample core.
AxiomReport module_axioms_check(const std::vector<LogElement>& sample,
                                const std::vector<ComplexMatrix>& actors);

}  // namespace opcalc

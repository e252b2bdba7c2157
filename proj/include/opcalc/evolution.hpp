#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "opcalc/complex_matrix.hpp"

namespace opcalc {

inline constexpr int kRk4DefaultSteps = 2048;     // default step = T / this
inline constexpr double kTolSemigroup = 1e-8;     // relative
inline constexpr double kTolCommute = 1e-10;      // x product of norms

// Real coefficient function of time, with an exact antiderivative so
// commuting families get closed-form evolutions.
struct Coefficient {
    enum class Kind { Const, Sin, Cos, Poly };
    Kind kind = Kind::Const;
    double value = 1.0;            // Const
    std::vector<double> coeffs;    // Poly: c0 + c1 t + ... + cd t^d

    static Coefficient constant(double c);
    static Coefficient sine();
    static Coefficient cosine();
    static Coefficient poly(std::vector<double> c);

    double operator()(double t) const;
    double integral(double s, double t) const;  // int_s^t of the coefficient
};

struct GeneratorTerm {
    Coefficient coef;
    ComplexMatrix matrix;
};

// Time-dependent generator A(t) = sum_k coef_k(t) M_k on [-T, T].
struct GeneratorSpec {
    int dim = 0;
    std::vector<GeneratorTerm> terms;
    double T = 1.0;

    GeneratorSpec() = default;
    GeneratorSpec(int d, std::vector<GeneratorTerm> t, double horizon)
        : dim(d), terms(std::move(t)), T(horizon) {}

    void validate() const;  // throws std::invalid_argument
    ComplexMatrix generator(double t) const;
    // pairwise commutators of the term matrices within
    // kTolCommute * ||M_j|| * ||M_k||
    bool commuting() const;
    // sum_k |coef_k(t)| ||M_k||, with cached term norms; upper bound used by
    // the propagation stability guard
    double generator_norm_bound(double t) const;
    double term_norm(size_t k) const;

private:
    mutable std::vector<double> term_norms_;  // lazily filled
};

// One RK4 pass for U' = A(tau) U, U(s) = I, fixed step. Throws StepTooLarge
// when ||A|| * step > 1 along the way, std::invalid_argument for times
// outside [-T, T].
ComplexMatrix propagate(const GeneratorSpec& spec, double t, double s, double step = 0.0);

// exp(sum_k (int_s^t coef_k) M_k); requires a commuting spec (NonCommuting).
ComplexMatrix closed_form_evolution(const GeneratorSpec& spec, double t, double s);

// Two-parameter evolution family U(t, s) with U(s, s) = I exact and a
// memoized evaluation cache keyed by the exact (t, s) pair. Cheap to copy;
// copies share the cache.
class EvolutionFamily {
public:
    enum class Method { ClosedForm, Rk4, Product };

    static EvolutionFamily closed_form(GeneratorSpec spec, std::string id = "");
    static EvolutionFamily rk4(GeneratorSpec spec, double step = 0.0, std::string id = "");

    Method method() const;
    const GeneratorSpec& spec() const;
    const std::string& id() const;
    int dim() const;
    double horizon() const;
    double step() const;  // 0 unless Rk4

    ComplexMatrix operator()(double t, double s) const;
    // A(t); for a product family the sum of the factors' generators
    ComplexMatrix generator(double t) const;
    double generator_norm_bound(double t) const;

    friend EvolutionFamily product_family(const EvolutionFamily& f1, const EvolutionFamily& f2);

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

struct SemigroupReport {
    double max_chain_residual = 0.0;    // max ||U(t,r)U(r,s) - U(t,s)||
    double max_inverse_residual = 0.0;  // max ||U(s,t)U(t,s) - I||
    double scale = 1.0;                 // 1 + max ||U(t,s)|| over the triples
    double max_residual() const { return std::max(max_chain_residual, max_inverse_residual); }
    double relative() const { return max_residual() / scale; }
};

// Composition and inverse relations over the given triples (s <= r <= t not
// required; any triples within the horizon work). Empty input samples a
// fixed grid over [-T, T].
SemigroupReport verify_semigroup(const EvolutionFamily& fam,
                                 const std::vector<std::array<double, 3>>& triples = {});

// W(t, s) = U1(t, s) U2(t, s). Requires every term matrix of f1 to commute
// with every term matrix of f2 (NonCommuting otherwise); then W is itself an
// evolution family with generator A1 + A2.
EvolutionFamily product_family(const EvolutionFamily& f1, const EvolutionFamily& f2);

// U(s, tau_j) for a monotone grid of taus, evaluated in one sweep so RK4
// families cost a single pass.
std::vector<ComplexMatrix> evaluate_path(const EvolutionFamily& fam, double s,
                                         const std::vector<double>& taus);

}  // namespace opcalc

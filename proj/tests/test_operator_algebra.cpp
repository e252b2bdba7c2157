#include <cmath>
#include <numbers>

#include "doctest.h"
#include "opcalc/errors.hpp"
#include "opcalc/linalg.hpp"
#include "opcalc/operator_algebra.hpp"
#include "test_util.hpp"

using namespace opcalc;
using test_util::diag2;
using test_util::mat2;

namespace {

EvolutionFamily scalar_family() {
    ComplexMatrix one(1);
    one(0, 0) = 1.0;
    return EvolutionFamily::closed_form({1, {{Coefficient::constant(1.0), one}}, 2.0}, "scalar");
}

const ComplexMatrix kM = diag2({0.4, 0.3}, {-0.2, 0.15});

EvolutionFamily d2_family() {
    return EvolutionFamily::closed_form({2, {{Coefficient::sine(), kM}}, 2.0}, "d2");
}

}  // namespace

TEST_CASE("sum of chained logarithms") {
    IdentityResult r = sum_chain_identity(scalar_family(), 1.2, 0.5, -0.3);
    CHECK(r.residual < 1e-12);
    CHECK_FALSE(r.wrap_flag);

    IdentityResult r2 = sum_chain_identity(d2_family(), 1.4, 0.6, -0.5);
    CHECK(r2.residual < 1e-9 * r2.scale);
    CHECK(r2.scale >= 1.0);
    CHECK_FALSE(r2.wrap_flag);
}

TEST_CASE("sum of commuting factor logarithms") {
    // scalar factors 2 and 3: Log 2 + Log 3 = Log 6
    ComplexMatrix one(1);
    one(0, 0) = 1.0;
    EvolutionFamily two = EvolutionFamily::closed_form(
        {1, {{Coefficient::constant(std::log(2.0)), one}}, 2.0}, "two");
    EvolutionFamily three = EvolutionFamily::closed_form(
        {1, {{Coefficient::constant(std::log(3.0)), one}}, 2.0}, "three");
    IdentityResult r = sum_commuting_identity(two, three, 1.0, 0.0);
    CHECK(r.residual < 1e-12);
    CHECK_FALSE(r.wrap_flag);
}

TEST_CASE("wrapped chain reports the 2 pi i defect") {
    EvolutionFamily rfam = EvolutionFamily::closed_form(
        {2, {{Coefficient::constant(1.0), diag2({0.0, 2.0}, {0.0, 2.0})}}, 2.0}, "rot");
    IdentityResult r = sum_chain_identity(rfam, 1.75, 0.75, 0.0);
    CHECK(r.wrap_flag);
    REQUIRE(r.defect_eigenvalues.size() == 2);
    for (Complex mu : r.defect_eigenvalues)
        CHECK(std::abs(mu - Complex(0.0, 2.0 * std::numbers::pi)) < 1e-6);
}

TEST_CASE("branch wrap detector on raw factors") {
    // arguments 2.0 + 1.5 = 3.5 leave (-pi, pi]; 0.4 + 0.3 stays inside
    ComplexMatrix f1 = diag2(std::polar(1.0, 2.0), std::polar(1.0, 0.4));
    ComplexMatrix f2 = diag2(std::polar(1.0, 1.5), std::polar(1.0, 0.3));
    WrapReport wr = branch_wrap_detect({f1, f2});
    CHECK(wr.wrap_flag);
    REQUIRE(wr.wrapped_directions.size() == 1);
    CHECK(wr.wrapped_directions[0] == 0);
    REQUIRE(wr.argument_sums.size() == 2);
    CHECK(wr.argument_sums[0] == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(wr.argument_sums[1] == doctest::Approx(0.7).epsilon(1e-12));

    // a single factor never wraps
    CHECK_FALSE(branch_wrap_detect({f1}).wrap_flag);

    // a pair with no simultaneous eigenbasis refuses
    ComplexMatrix n1 = ComplexMatrix::identity(2), n2 = ComplexMatrix::identity(2);
    n1(0, 1) = 1.0;
    n2(1, 0) = 1.0;
    CHECK_THROWS_AS(branch_wrap_detect({n1, n2}), Defective);
}

TEST_CASE("shifted chain identity") {
    EvolutionFamily fam = d2_family();
    ComplexMatrix k5 = diag2(5.0, 5.0);

    IdentityResult r = shifted_chain_identity(fam, 1.4, 0.6, -0.5, k5);
    CHECK(r.residual < 1e-9 * r.scale);
    CHECK_FALSE(r.wrap_flag);

    // K = 0 reduces to the plain chain
    IdentityResult plain = sum_chain_identity(fam, 1.4, 0.6, -0.5);
    IdentityResult rz = shifted_chain_identity(fam, 1.4, 0.6, -0.5, ComplexMatrix(2));
    CHECK(std::abs(rz.residual - plain.residual) < 1e-12);

    // a shift outside the commutant refuses
    ComplexMatrix kbad(2);
    kbad(0, 1) = 1.0;
    CHECK_THROWS_AS(shifted_chain_identity(fam, 1.4, 0.6, -0.5, kbad), NonCommuting);
}

TEST_CASE("shifted commuting identity with a polynomial shift") {
    EvolutionFamily fam = d2_family();
    EvolutionFamily fam_b = EvolutionFamily::closed_form(
        {2, {{Coefficient::cosine(), 0.6 * kM}}, 2.0}, "d2b");
    ComplexMatrix kpoly = kM * kM + diag2(6.0, 6.0);
    IdentityResult r = shifted_commuting_identity(fam, fam_b, 1.4, 0.6, kpoly);
    CHECK(r.residual < 1e-9 * r.scale);
    CHECK_FALSE(r.wrap_flag);
}

TEST_CASE("commutant basis and module elements") {
    EvolutionFamily fam = d2_family();
    ComplexMatrix k5 = diag2(5.0, 5.0);

    // scalar element is k times its core, exactly
    LogElement e1 = scalar_log_element(fam, 1.4, -0.5, {2.0, 0.5});
    CHECK(frobenius_norm(e1.value - Complex(2.0, 0.5) * e1.core) == 0.0);
    CHECK(e1.scalar_k == Complex(2.0, 0.5));
    CHECK(e1.family_ref == "d2");

    CommutantBasis basis = commutant_basis(kM);
    CHECK(basis.generators.size() == 5);  // I, M, ..., M^4 normalized
    for (const ComplexMatrix& g : basis.generators)
        CHECK(frobenius_norm(commutator(g, kM)) < 1e-12);

    LogElement e2 = module_log_element(fam, 1.4, -0.5, k5, basis.generators[2]);
    CHECK(e2.factor_K.has_value());
    CHECK(e2.factor_cal_K.has_value());

    // action multiplies by the actor, exactly
    LogElement e3 = module_action(basis.generators[1], e2);
    CHECK(frobenius_norm(e3.value - basis.generators[1] * e2.value) == 0.0);

    ComplexMatrix kbad(2);
    kbad(0, 1) = 1.0;
    CHECK_THROWS_AS(module_action(kbad, e2), NotInCommutant);
    CHECK_THROWS_AS(module_log_element(fam, 1.4, -0.5, k5, kbad), NotInCommutant);
}

TEST_CASE("scalar elements embed in the module family") {
    double res = containment_residual(d2_family(), 1.4, -0.5, {2.0, 0.5});
    CHECK(res <= 1e-14);
}

TEST_CASE("vector space axioms") {
    EvolutionFamily fam = d2_family();
    std::vector<LogElement> sample{
        scalar_log_element(fam, 1.4, -0.5, {1.0, 0.0}),
        scalar_log_element(fam, 0.9, 0.1, {0.0, 1.5}),
        scalar_log_element(fam, 1.1, -0.8, {-0.7, 0.2}),
    };
    AxiomReport rep = space_axioms_check(sample, {{2.0, 0.0}, {0.5, -1.0}, {-3.0, 0.25}});
    CHECK(rep.worst() <= 1e-12);
    CHECK_FALSE(rep.residuals.empty());
    CHECK(rep.get(rep.residuals.front().first) >= 0.0);
    CHECK(rep.get("no-such-axiom") == -1.0);
}

TEST_CASE("module axioms") {
    EvolutionFamily fam = d2_family();
    ComplexMatrix k5 = diag2(5.0, 5.0);
    CommutantBasis basis = commutant_basis(kM);
    std::vector<LogElement> sample{
        module_log_element(fam, 1.4, -0.5, k5, basis.generators[1]),
        module_log_element(fam, 0.9, 0.1, k5, basis.generators[2]),
    };
    AxiomReport rep = module_axioms_check(sample, basis.generators);
    CHECK(rep.worst() <= 1e-10);
    CHECK_FALSE(rep.residuals.empty());
}

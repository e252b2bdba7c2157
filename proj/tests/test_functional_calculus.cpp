#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "doctest.h"
#include "opcalc/errors.hpp"
#include "opcalc/functional_calculus.hpp"
#include "opcalc/linalg.hpp"
#include "test_util.hpp"

using namespace opcalc;
using test_util::conjugated_diagonal;
using test_util::mat2;

TEST_CASE("cut_distance") {
    CHECK(cut_distance({1.0, 0.0}) == 1.0);
    CHECK(cut_distance({3.0, 4.0}) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(cut_distance({-3.0, 4.0}) == 4.0);   // left half plane: vertical distance
    CHECK(cut_distance({-3.0, -0.5}) == 0.5);
    CHECK(cut_distance({0.0, -2.0}) == 2.0);   // Re = 0 counts as left
    CHECK(cut_distance({-1.0, 0.0}) == 0.0);
    CHECK(cut_distance({0.0, 0.0}) == 0.0);
}

TEST_CASE("contour geometry") {
    Contour c = Contour::circle({2.0, 1.0}, 0.5, 64);
    CHECK(c.kind() == Contour::Kind::Circle);
    CHECK(c.semi_x() == c.semi_y());
    CHECK(c.radius() == 0.5);
    CHECK(c.nodes() == 64);
    CHECK(c.with_nodes(128).nodes() == 128);
    CHECK(c.with_nodes(128).center() == c.center());

    // point and tangent agree with a central difference
    const double th = 0.9;
    Complex fd = (c.point(th + 1e-6) - c.point(th - 1e-6)) / Complex(2e-6, 0.0);
    CHECK(std::abs(fd - c.tangent(th)) <= 1e-6);

    CHECK(c.level(c.center()) == 0.0);
    CHECK(c.level(c.point(0.3)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.level({2.0, 2.0}) > 1.0);

    Contour e = Contour::ellipse({1.0, 0.0}, 2.0, 0.5, 32);
    CHECK(e.kind() == Contour::Kind::Ellipse);
    CHECK(e.point(0.0) == Complex(3.0, 0.0));
    Complex top = e.point(std::numbers::pi / 2);
    CHECK(std::abs(top - Complex(1.0, 0.5)) <= 1e-12);

    CHECK_THROWS_AS(Contour::circle({0.0, 0.0}, 1.0, 8), std::invalid_argument);
    CHECK_THROWS_AS(Contour::circle({0.0, 0.0}, -1.0), std::invalid_argument);
}

TEST_CASE("contours against the cut") {
    // strictly in the right half plane: clear
    CHECK_FALSE(Contour::circle({2.0, 0.0}, 1.0).crosses_cut());
    CHECK(Contour::circle({2.0, 0.0}, 1.0).cut_level() > 1.0);

    // curve around the origin encloses cut points
    CHECK(Contour::circle({0.0, 0.0}, 1.0).crosses_cut());
    CHECK(Contour::circle({-5.0, 0.05}, 0.2).crosses_cut());

    // ellipse hugging the upper half plane above the cut
    Contour above = Contour::ellipse({-1.0, 0.4}, 1.5, 0.2);
    CHECK_FALSE(above.crosses_cut());
    CHECK(above.cut_level() > 1.0);
    Contour touching = Contour::ellipse({-1.0, 0.1}, 1.5, 0.5);
    CHECK(touching.crosses_cut());
}

TEST_CASE("argument principle counting") {
    ComplexMatrix a = ComplexMatrix::diagonal({1.0, 2.0, 3.0});

    SpectralCertificate all = validate_contour(a, Contour::circle({2.0, 0.0}, 1.5));
    CHECK(all.enclosed_count == 3);
    CHECK(all.count_defect <= kCountRoundTol);
    CHECK(all.valid_for_log(3));

    SpectralCertificate mid = validate_contour(a, Contour::circle({2.0, 0.0}, 0.5));
    CHECK(mid.enclosed_count == 1);
    CHECK_FALSE(mid.valid_for_log(3));

    // trapezoid count with a pole near the curve and few nodes is ambiguous:
    // for a circle of radius r and one eigenvalue at distance 0.9 r the raw
    // count is r^N / (r^N - (0.9 r)^N) = 1.227 at N = 16
    ComplexMatrix near = ComplexMatrix::diagonal({Complex(2.9, 0.0)});
    CHECK_THROWS_AS(validate_contour(near, Contour::circle({2.0, 0.0}, 1.0, 16)), AmbiguousCount);
    SpectralCertificate resolved = validate_contour(near, Contour::circle({2.0, 0.0}, 1.0, 64));
    CHECK(resolved.enclosed_count == 1);

    // geometric oracle, circle and ellipse: the point at 2 + 1.6i sits 1.6
    // from the circle's center, outside radius 1.5 but inside the ellipse
    std::vector<Complex> spec{{1.0, 0.0}, {3.0, 0.0}, {2.0, 1.6}};
    CHECK(enclosed_count_oracle(spec, Contour::circle({2.0, 0.0}, 1.5)) == 2);
    CHECK(enclosed_count_oracle(spec, Contour::ellipse({2.0, 0.5}, 2.0, 1.5)) == 3);
    CHECK(enclosed_count_oracle(spec, Contour::circle({10.0, 0.0}, 0.5)) == 0);
}

TEST_CASE("dunford_apply against diagonal closed forms") {
    ComplexMatrix d = ComplexMatrix::diagonal({{2.0, 0.0}, {3.0, 1.0}});
    Contour c = Contour::circle({2.5, 0.5}, 1.5);

    ComplexMatrix idm = dunford_apply(AnalyticFn::Identity, d, c);
    CHECK(max_abs(idm - d) <= 1e-12);

    ComplexMatrix ex = dunford_apply(AnalyticFn::Exp, d, c);
    CHECK(max_abs(ex - matrix_exp(d)) <= 1e-11);

    ComplexMatrix lg = dunford_apply(AnalyticFn::Log, d, c);
    CHECK(std::abs(lg(0, 0) - std::log(Complex(2.0, 0.0))) <= 1e-12);
    CHECK(std::abs(lg(1, 1) - std::log(Complex(3.0, 1.0))) <= 1e-12);
    CHECK(std::abs(lg(0, 1)) <= 1e-13);

    // same on a non-normal similarity transform
    ComplexMatrix a = conjugated_diagonal({{2.0, 0.0}, {3.0, 1.0}}, 77);
    ComplexMatrix la = dunford_apply(AnalyticFn::Log, a, c);
    CHECK(max_abs(matrix_exp(la) - a) <= 1e-11);
}

TEST_CASE("dunford_apply guards") {
    // enclosing the cut is fatal for Log only
    ComplexMatrix d2 = ComplexMatrix::diagonal({Complex(2.0, 0.0)});
    Contour wide = Contour::circle({0.5, 0.0}, 2.0);
    CHECK_THROWS_AS(dunford_apply(AnalyticFn::Log, d2, wide), BranchCutIntersection);
    CHECK(max_abs(dunford_apply(AnalyticFn::Identity, d2, wide) - d2) <= 1e-12);

    // missing part of the spectrum; the circle stays clear of the cut so the
    // enclosure count is what trips
    ComplexMatrix split = ComplexMatrix::diagonal({1.0, 5.0});
    CHECK_THROWS_AS(dunford_apply(AnalyticFn::Log, split, Contour::circle({1.0, 0.0}, 0.5, 64)),
                    ContourInvalid);

    // node colliding with an eigenvalue: theta = 0 sits at center + radius
    ComplexMatrix hit = ComplexMatrix::diagonal({Complex(3.0, 0.0)});
    CHECK_THROWS_AS(dunford_apply(AnalyticFn::Log, hit, Contour::circle({2.0, 0.0}, 1.0, 16)),
                    SingularMatrix);
}

TEST_CASE("principal_log on diagonalizable input") {
    // branch values: the positive imaginary axis maps to i pi/2, the positive
    // real axis to a real logarithm (separate inputs; a joint spectrum {i, 2}
    // leaves no room for an axis-aligned contour beside the cut)
    CHECK(std::abs(principal_log(ComplexMatrix::diagonal({Complex(0.0, 1.0)}))(0, 0) -
                   Complex(0.0, std::numbers::pi / 2)) <= 1e-12);
    CHECK(std::abs(principal_log(ComplexMatrix::diagonal({Complex(2.0, 0.0)}))(0, 0) -
                   std::log(2.0)) <= 1e-12);

    // upper-half value just above the cut keeps arg near +pi
    ComplexMatrix nc = ComplexMatrix::diagonal({Complex(-1.0, 0.1)});
    CHECK(std::abs(principal_log(nc)(0, 0) - std::log(Complex(-1.0, 0.1))) <= 1e-11);

    // full result carries contour and certificate
    ComplexMatrix a = conjugated_diagonal({{0.7, 0.4}, {2.0, -0.3}, {1.2, 0.8}}, 13);
    LogComputation full = principal_log_full(a);
    CHECK(full.certificate.valid_for_log(3));
    CHECK(full.certificate.enclosed_count == 3);
    CHECK(max_abs(matrix_exp(full.value) - a) <= 1e-10);

    // caller-picked contour is honored
    ComplexMatrix one = ComplexMatrix::diagonal({Complex(1.0, 0.0)});
    Contour pick = Contour::circle({1.0, 0.0}, 0.25, 32);
    LogComputation forced = principal_log_full(one, pick);
    CHECK(forced.contour.nodes() == 32);
    CHECK(std::abs(forced.value(0, 0)) <= 1e-12);
}

TEST_CASE("principal_log branch cut and fallback") {
    // eigenvalue on the cut
    CHECK_THROWS_AS(principal_log(ComplexMatrix::diagonal({-1.0, 2.0})), BranchCutIntersection);
    CHECK_THROWS_AS(eigendecomposition_log(ComplexMatrix::diagonal({-1.0, 2.0})),
                    BranchCutIntersection);

    // Jordan block: eig refuses, the Gershgorin fallback still gets the
    // quadrature right: Log [[2,1],[0,2]] = [[log 2, 1/2],[0, log 2]]
    ComplexMatrix j = mat2(2.0, 1.0, 0.0, 2.0);
    CHECK_THROWS_AS(eigendecomposition_log(j), Defective);
    ComplexMatrix lj = principal_log(j);
    CHECK(std::abs(lj(0, 0) - std::log(2.0)) <= 1e-10);
    CHECK(std::abs(lj(0, 1) - 0.5) <= 1e-10);
    CHECK(std::abs(lj(1, 0)) <= 1e-10);

    // single-sided spectrum close to the negative axis still works
    ComplexMatrix near = ComplexMatrix::diagonal({{-1.0, 0.3}, {-0.5, 0.2}, {-1.4, 0.45}});
    CHECK(max_abs(principal_log(near) - eigendecomposition_log(near)) <= 1e-9);
}

TEST_CASE("contour and eigendecomposition logs agree") {
    std::mt19937_64 rng(314);
    auto uu = [&]() { return double(rng() >> 11) * 0x1.0p-53; };
    for (int trial = 0; trial < 20; ++trial) {
        int n = 2 + int(rng() % 9);
        std::vector<Complex> lam(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i)
            lam[static_cast<size_t>(i)] = Complex(0.6 + 2.0 * i / std::max(1, n - 1) + 0.06 * (uu() - 0.5),
                                                  1.6 * (uu() - 0.5));
        ComplexMatrix a = conjugated_diagonal(lam, 1000 + static_cast<uint64_t>(trial));
        ComplexMatrix ref = eigendecomposition_log(a);
        LogComputation lc = principal_log_full(a);
        CHECK(max_abs(lc.value - ref) <= 1e-10 * (1.0 + spectral_norm(ref)));
        CHECK(validate_contour(a, lc.contour).enclosed_count == n);
    }
}

TEST_CASE("quadrature converges geometrically") {
    // wide spread keeps the 64-node error visible above rounding
    ComplexMatrix hard = ComplexMatrix::diagonal({{0.3, 0.0}, {0.8, 0.6}, {2.2, -0.4}, {3.0, 0.3}});
    ComplexMatrix ref = eigendecomposition_log(hard);
    LogComputation lc = principal_log_full(hard);
    double e64 = max_abs(dunford_apply(AnalyticFn::Log, hard, lc.contour.with_nodes(64)) - ref);
    double e128 = max_abs(dunford_apply(AnalyticFn::Log, hard, lc.contour.with_nodes(128)) - ref);
    double e256 = max_abs(dunford_apply(AnalyticFn::Log, hard, lc.contour.with_nodes(256)) - ref);
    CHECK(e64 > e128);
    CHECK(e128 > e256);
    CHECK(e64 / e128 >= 10.0);
}

TEST_CASE("auto_contour placement") {
    // tight cluster away from the cut keeps the circle
    Contour tight = auto_contour({{1.0, 0.0}, {1.1, 0.0}}, 1.1, true);
    CHECK(tight.kind() == Contour::Kind::Circle);
    CHECK_FALSE(tight.crosses_cut());
    CHECK(enclosed_count_oracle({{1.0, 0.0}, {1.1, 0.0}}, tight) == 2);

    // one-sided spectrum near the cut forces the ellipse family
    std::vector<Complex> near{{-1.0, 0.3}, {-0.5, 0.2}};
    Contour el = auto_contour(near, 1.1, true);
    CHECK(el.kind() == Contour::Kind::Ellipse);
    CHECK_FALSE(el.crosses_cut());
    CHECK(el.cut_level() > 1.0);
    CHECK(enclosed_count_oracle(near, el) == 2);

    // without the log constraint the circle may cross; it must still enclose
    Contour free = auto_contour(near, 1.1, false);
    CHECK(enclosed_count_oracle(near, free) == 2);
}

TEST_CASE("kappa admissibility rule") {
    // clearance threshold is 0.1 * (1 + ||U||), compared with >=
    CHECK(kappa_admissible({{1.0, 0.0}}, 1.0, {0.0, 0.0}));
    CHECK(kappa_admissible({{0.2, 0.0}}, 1.0, {0.0, 0.0}));        // exactly at the bar
    CHECK_FALSE(kappa_admissible({{0.15, 0.0}}, 1.0, {0.0, 0.0}));
    CHECK(kappa_admissible({{0.15, 0.0}}, 1.0, {1.0, 0.0}));
    CHECK_FALSE(kappa_admissible({{-1.0, 0.05}}, 1.0, {0.0, 0.0}));
    // the worst eigenvalue decides
    CHECK_FALSE(kappa_admissible({{2.0, 0.0}, {0.05, 0.0}}, 2.0, {0.0, 0.0}));
}

TEST_CASE("choose_kappa walks the ladder") {
    KappaChoice id = choose_kappa(ComplexMatrix::identity(2));
    CHECK(id.kappa == Complex(0.0, 0.0));
    CHECK(id.certificate.cut_clearance >= 0.2);

    // -I: 0 and 1 leave the spectrum on the cut, 2 clears it
    KappaChoice mi = choose_kappa(-1.0 * ComplexMatrix::identity(3));
    CHECK(mi.kappa == Complex(2.0, 0.0));

    // diag(-2, 3): real shifts 0, 1, 2 all pin an eigenvalue onto the cut
    KappaChoice dk = choose_kappa(ComplexMatrix::diagonal({-2.0, 3.0}));
    CHECK(dk.kappa == Complex(4.0, 0.0));

    // far negative eigenvalue: no real shift reaches clearance, the
    // imaginary arm does (|Im kappa| is the clearance left of the axis)
    KappaChoice im = choose_kappa(ComplexMatrix::diagonal({Complex(-2000.0, 0.0)}));
    CHECK(im.kappa == Complex(0.0, 256.0));

    CHECK_THROWS_AS(choose_kappa(ComplexMatrix::diagonal({Complex(-1e6, 0.0)})), NoAdmissibleKappa);
}

#pragma once

#include <optional>
#include <vector>

#include "opcalc/complex_matrix.hpp"

namespace opcalc {

inline constexpr int kDefaultNodes = 256;
inline constexpr int kMinNodes = 16;
inline constexpr double kCountRoundTol = 0.1;    // max distance to an integer count
inline constexpr double kClearanceFactor = 0.1;  // x (1 + ||U||): kappa admissibility
inline constexpr double kKappaLadderMax = 1024.0;
inline constexpr double kCutTolFactor = 1e-12;   // eigenvalue this close to the cut = on it

// distance from z to the branch cut (-inf, 0]
double cut_distance(Complex z);

// Closed integration curve, positively oriented, trapezoid nodes at
// theta_j = 2 pi j / N. Circles are stored as equal semi-axes.
class Contour {
public:
    enum class Kind { Circle, Ellipse };

    static Contour circle(Complex center, double radius, int nodes = kDefaultNodes);
    static Contour ellipse(Complex center, double semi_x, double semi_y,
                           int nodes = kDefaultNodes);

    Kind kind() const { return kind_; }
    Complex center() const { return center_; }
    double semi_x() const { return semi_x_; }
    double semi_y() const { return semi_y_; }
    double radius() const { return semi_x_; }
    int nodes() const { return nodes_; }
    Contour with_nodes(int nodes) const;

    Complex point(double theta) const;
    Complex tangent(double theta) const;  // d point / d theta

    // exact test against (-inf, 0]; a curve that intersects or encloses any
    // cut point reports true
    bool crosses_cut() const;

    // smallest "ellipse level" sqrt((dx/a)^2 + (dy/b)^2) over the cut;
    // > 1 means the whole cut is strictly outside
    double cut_level() const;

    // level of an arbitrary point; < 1 = strictly inside
    double level(Complex z) const;

private:
    Contour(Kind k, Complex c, double sx, double sy, int n);
    Kind kind_;
    Complex center_;
    double semi_x_, semi_y_;
    int nodes_;
};

enum class AnalyticFn { Identity, Log, Exp };

enum class CertificateMethod { Oracle, ContourOnly };

// Evidence that a logarithm (or other contour integral) of a matrix is
// trustworthy: full spectrum enclosed and the branch cut kept clear.
struct SpectralCertificate {
    int enclosed_count = 0;
    double count_defect = 0.0;   // distance of the raw count integral from the integer
    double cut_clearance = 0.0;  // distance of the spectrum to the cut (or a lower bound)
    bool wrap_flag = false;      // single factors never wrap; sums may, see operator_algebra
    CertificateMethod method = CertificateMethod::ContourOnly;

    bool valid_for_log(int dim) const {
        return enclosed_count == dim && cut_clearance > 0.0;
    }
};

// (1 / 2 pi i) contour integral of f(lambda) (lambda I - A)^{-1}, trapezoid
// rule over the contour nodes. Node contributions are combined with a
// fixed-order pairwise tree, so the result does not depend on evaluation
// order. Throws ContourInvalid when the argument-principle count misses the
// full spectrum, BranchCutIntersection when f = Log and the curve touches
// the cut, SingularMatrix when a node collides with an eigenvalue.
ComplexMatrix dunford_apply(AnalyticFn f, const ComplexMatrix& a, const Contour& c);

// Argument-principle certificate for c relative to A's spectrum. Throws
// AmbiguousCount when the count integral is farther than kCountRoundTol
// from any integer.
SpectralCertificate validate_contour(const ComplexMatrix& a, const Contour& c);

// Contour selection from a known spectrum. Circle at the centroid, radius
// 1.25 max-distance + 0.05 norm_scale; for logarithms a crossing (or
// insufficiently cleared) circle falls back to a scored family of ellipses
// around the spectrum's bounding box, maximizing the predicted quadrature
// convergence rate min(cut level, 1 / max eigenvalue level).
Contour auto_contour(const std::vector<Complex>& spectrum, double norm_scale,
                     bool for_log, int nodes = kDefaultNodes);

struct LogComputation {
    ComplexMatrix value;
    Contour contour;
    SpectralCertificate certificate;
};

// Principal branch logarithm via the contour integral, Im(Log) in (-pi, pi].
// Eigenvalues are taken from eig() to place the contour (with a Gershgorin
// fallback when the eigenbasis is defective); values always come from the
// quadrature. Agrees with the eigendecomposition route for diagonalizable
// input; that independence is what the test suite checks.
LogComputation principal_log_full(const ComplexMatrix& a,
                                  const std::optional<Contour>& c = std::nullopt,
                                  int nodes = kDefaultNodes);
ComplexMatrix principal_log(const ComplexMatrix& a);
ComplexMatrix principal_log(const ComplexMatrix& a, const Contour& c);

// Smallest shift kappa from the ladder 0, 1, 2, 4, ..., 1024, then
// +-2i, +-4i, ..., +-1024i whose shifted spectrum clears the cut by
// kClearanceFactor * (1 + ||U||). Throws NoAdmissibleKappa when the ladder
// is exhausted.
struct KappaChoice {
    Complex kappa;
    SpectralCertificate certificate;
};
KappaChoice choose_kappa(const ComplexMatrix& u);

// admissibility of a caller-supplied kappa under the same rule
bool kappa_admissible(const std::vector<Complex>& u_spectrum, double u_norm, Complex kappa);

// geometric count of spectrum points strictly inside c (oracle side of the
// argument-principle comparison)
int enclosed_count_oracle(const std::vector<Complex>& spectrum, const Contour& c);

// Independent route to the same logarithm: V Log(D) V^{-1} from the
// eigendecomposition. Used as the cross-check oracle for the contour route;
// throws Defective for non-diagonalizable input, BranchCutIntersection when
// an eigenvalue sits on the cut.
ComplexMatrix eigendecomposition_log(const ComplexMatrix& a);

}  // namespace opcalc

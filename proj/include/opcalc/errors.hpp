#pragma once

#include <stdexcept>
#include <string>

namespace opcalc {

// Base for every failure the library reports deliberately. Precondition
// violations that indicate caller bugs (bad dimensions, null sizes) throw
// std::invalid_argument instead. kind() gives a stable machine-readable
// label, used by the report writer for skipped-row reasons.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what_arg) : std::runtime_error(what_arg) {}
    virtual const char* kind() const { return "Error"; }
};

#define OPCALC_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what_arg) : Error(what_arg) {}        \
        const char* kind() const override { return #Name; }                    \
    }

// linear algebra
OPCALC_DEFINE_ERROR(SingularMatrix);
OPCALC_DEFINE_ERROR(Overflow);
OPCALC_DEFINE_ERROR(NoConvergence);
OPCALC_DEFINE_ERROR(Defective);

// contour calculus
OPCALC_DEFINE_ERROR(ContourInvalid);
OPCALC_DEFINE_ERROR(BranchCutIntersection);
OPCALC_DEFINE_ERROR(AmbiguousCount);
OPCALC_DEFINE_ERROR(NoAdmissibleKappa);

// evolution families
OPCALC_DEFINE_ERROR(StepTooLarge);
OPCALC_DEFINE_ERROR(NonCommuting);

// logarithmic representation and algebra
OPCALC_DEFINE_ERROR(BranchWrap);
OPCALC_DEFINE_ERROR(BranchInconsistency);
OPCALC_DEFINE_ERROR(NotInCommutant);

// harness
OPCALC_DEFINE_ERROR(ConfigInvalid);
OPCALC_DEFINE_ERROR(MatrixFileMissing);

#undef OPCALC_DEFINE_ERROR

}  // namespace opcalc

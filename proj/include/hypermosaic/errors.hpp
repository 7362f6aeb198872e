#pragma once

#include <stdexcept>
#include <string>

namespace hypermosaic {

class Error : public std::runtime_error {
public:
    Error(const char* kind, const std::string& what)
        : std::runtime_error(std::string(kind) + ": " + what), kind_(kind) {}
    const char* kind() const noexcept { return kind_; }

private:
    const char* kind_;
};

#define HM_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                            \
    public:                                                                \
        explicit Name(const std::string& what) : Error(#Name, what) {}     \
    };

HM_DEFINE_ERROR(NotGeneralPosition)
HM_DEFINE_ERROR(Unbounded)
HM_DEFINE_ERROR(DimensionUnsupported)
HM_DEFINE_ERROR(DegeneratePolytope)
HM_DEFINE_ERROR(InballHit)
HM_DEFINE_ERROR(QuadratureNotConverged)
HM_DEFINE_ERROR(PreconditionViolated)
HM_DEFINE_ERROR(InsufficientSamples)
HM_DEFINE_ERROR(CertificationStarvation)
HM_DEFINE_ERROR(OutOfRange)
HM_DEFINE_ERROR(WindowNotContained)
HM_DEFINE_ERROR(CoverageFailure)
HM_DEFINE_ERROR(NoRoot)
HM_DEFINE_ERROR(ConfigInvalid)

#undef HM_DEFINE_ERROR

}  // namespace hypermosaic

#pragma once

#include <stdexcept>
#include <string>

namespace steinclt {

// Named error conditions. Each maps one precondition or failure mode of the
// public API; all derive from std::runtime_error so callers can catch broadly.

#define STEINCLT_DEFINE_ERROR(Name)                          \
  struct Name : std::runtime_error {                         \
    explicit Name(const std::string& what_arg)               \
        : std::runtime_error(#Name ": " + what_arg) {}       \
  }

STEINCLT_DEFINE_ERROR(NonSymmetric);
STEINCLT_DEFINE_ERROR(NonPsd);
STEINCLT_DEFINE_ERROR(ZeroDiagonal);
STEINCLT_DEFINE_ERROR(SingularMatrix);
STEINCLT_DEFINE_ERROR(DimensionTooSmall);
STEINCLT_DEFINE_ERROR(ShapeMismatch);
STEINCLT_DEFINE_ERROR(CollinearNormals);
STEINCLT_DEFINE_ERROR(DegenerateTriple);
STEINCLT_DEFINE_ERROR(RegularizationFailed);
STEINCLT_DEFINE_ERROR(SingularGram);
STEINCLT_DEFINE_ERROR(BadDirections);
STEINCLT_DEFINE_ERROR(InfiniteOffset);
STEINCLT_DEFINE_ERROR(MissingTripleNormal);
STEINCLT_DEFINE_ERROR(ZeroAngle);
STEINCLT_DEFINE_ERROR(ZeroAlpha);
STEINCLT_DEFINE_ERROR(ZeroBeta);
STEINCLT_DEFINE_ERROR(ZeroSigmaStar);
STEINCLT_DEFINE_ERROR(EmptyPairSet);
STEINCLT_DEFINE_ERROR(QuadratureBudgetExceeded);
STEINCLT_DEFINE_ERROR(IoError);

#undef STEINCLT_DEFINE_ERROR

}  // namespace steinclt

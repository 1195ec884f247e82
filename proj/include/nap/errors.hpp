#pragma once

#include <stdexcept>
#include <string>

namespace nap {

#define NAP_DEFINE_ERROR(Name)                            \
  struct Name : std::runtime_error {                      \
    explicit Name(const std::string& msg)                 \
        : std::runtime_error(std::string(#Name ": ") + msg) {} \
  }

NAP_DEFINE_ERROR(ShapeMismatch);
NAP_DEFINE_ERROR(NonFiniteValue);
NAP_DEFINE_ERROR(LogOfNonPositive);
NAP_DEFINE_ERROR(NotAScalar);
NAP_DEFINE_ERROR(MissingGrad);
NAP_DEFINE_ERROR(ConfigInvalid);
NAP_DEFINE_ERROR(ParseError);
NAP_DEFINE_ERROR(InvariantViolation);
NAP_DEFINE_ERROR(TooFewDomains);
NAP_DEFINE_ERROR(FewerThanTwoDomains);
NAP_DEFINE_ERROR(DegenerateLabels);
NAP_DEFINE_ERROR(NonFiniteLoss);
NAP_DEFINE_ERROR(IoError);

#undef NAP_DEFINE_ERROR

}  // namespace nap

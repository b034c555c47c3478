#pragma once

#include <stdexcept>
#include <string>

namespace cornerlab {

// Every recoverable failure raised by the library derives from Error, so
// callers can catch the whole family while tests match the precise kind.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CORNERLAB_DECLARE_ERROR(Name)            \
  class Name : public Error {                    \
   public:                                       \
    explicit Name(const std::string& what)       \
        : Error(std::string(#Name ": ") + what) {} \
  }

CORNERLAB_DECLARE_ERROR(NotABridge);
CORNERLAB_DECLARE_ERROR(BadStep);
CORNERLAB_DECLARE_ERROR(NotACorner);
CORNERLAB_DECLARE_ERROR(TooLarge);
CORNERLAB_DECLARE_ERROR(BadParam);
CORNERLAB_DECLARE_ERROR(DomainError);
CORNERLAB_DECLARE_ERROR(EmptyWindow);
CORNERLAB_DECLARE_ERROR(CflViolation);
CORNERLAB_DECLARE_ERROR(NumericalError);
CORNERLAB_DECLARE_ERROR(TooFewSamples);
CORNERLAB_DECLARE_ERROR(MissingData);
CORNERLAB_DECLARE_ERROR(ConfigError);

#undef CORNERLAB_DECLARE_ERROR

}  // namespace cornerlab

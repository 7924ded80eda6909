#pragma once

#include <stdexcept>
#include <string>

namespace fit {

// Every failure raised by the library derives from Error so callers (the CLI in
// particular) can report a one-line diagnostic.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FIT_DEFINE_ERROR(Name)              \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  };

FIT_DEFINE_ERROR(DimensionError)
FIT_DEFINE_ERROR(IndexError)
FIT_DEFINE_ERROR(DomainError)
FIT_DEFINE_ERROR(RangeError)
FIT_DEFINE_ERROR(OrderingError)
FIT_DEFINE_ERROR(ParameterError)
FIT_DEFINE_ERROR(InsufficientDataError)
FIT_DEFINE_ERROR(IoError)

#undef FIT_DEFINE_ERROR

}  // namespace fit

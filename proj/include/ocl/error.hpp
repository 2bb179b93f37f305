#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace ocl {

// Error taxonomy maps onto the CLI exit codes: ConfigError -> 2, NumericError -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct StructureError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

}  // namespace ocl

#define OCL_THROW(ErrType, msg_expr)  \
  do {                                \
    std::ostringstream oss__;         \
    oss__ << msg_expr;                \
    throw ErrType(oss__.str());       \
  } while (0)

#define OCL_CHECK(cond, ErrType, msg_expr)            \
  do {                                                \
    if (!(cond)) OCL_THROW(ErrType, msg_expr);        \
  } while (0)

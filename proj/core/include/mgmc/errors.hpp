#pragma once

#include <stdexcept>
#include <string>

namespace mgmc {

enum class ErrorCategory {
  Dimension,
  Contract,
  Bounds,
  Numeric,
  Determinism,
  Data,
  Schema,
  Config,
  Io,
};

const char* to_string(ErrorCategory category) noexcept;

// Process exit code used by the CLI for each category.
int exit_code(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define MGMC_DEFINE_ERROR(Name, Category)                       \
  class Name : public Error {                                   \
   public:                                                      \
    explicit Name(const std::string& what)                      \
        : Error(ErrorCategory::Category, what) {}               \
  };

MGMC_DEFINE_ERROR(DimensionError, Dimension)
MGMC_DEFINE_ERROR(ContractError, Contract)
MGMC_DEFINE_ERROR(BoundsError, Bounds)
MGMC_DEFINE_ERROR(NumericError, Numeric)
MGMC_DEFINE_ERROR(DeterminismError, Determinism)
MGMC_DEFINE_ERROR(DataError, Data)
MGMC_DEFINE_ERROR(SchemaError, Schema)
MGMC_DEFINE_ERROR(ConfigError, Config)
MGMC_DEFINE_ERROR(IoError, Io)

#undef MGMC_DEFINE_ERROR

}  // namespace mgmc

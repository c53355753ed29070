#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace toriclab {

enum class ErrorKind {
  PointOutsideDomain,
  PointOffGrid,
  OrderUnsupported,
  HessianNotPositiveDefinite,
  InvalidParams,
  InsufficientJetOrder,
  InsufficientMargin,
  UncertifiedWeights,
  NonConvexIterate,
  MaxIterationsExceeded,
  SingularLinearSystem,
  LeftDomain,
  GeodesicIntegrationFailure,
  InvalidRange,
  RadiusInfeasible,
  DegenerateSampleSet,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries the module and operation that
// produced it so reports can echo the origin back to the user.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, std::string operation, std::string detail);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& operation() const noexcept { return operation_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string operation_;
  std::string detail_;
};

}  // namespace toriclab

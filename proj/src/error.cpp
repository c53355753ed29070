#include "toriclab/error.hpp"

namespace toriclab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::PointOutsideDomain: return "PointOutsideDomain";
    case ErrorKind::PointOffGrid: return "PointOffGrid";
    case ErrorKind::OrderUnsupported: return "OrderUnsupported";
    case ErrorKind::HessianNotPositiveDefinite: return "HessianNotPositiveDefinite";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::InsufficientJetOrder: return "InsufficientJetOrder";
    case ErrorKind::InsufficientMargin: return "InsufficientMargin";
    case ErrorKind::UncertifiedWeights: return "UncertifiedWeights";
    case ErrorKind::NonConvexIterate: return "NonConvexIterate";
    case ErrorKind::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorKind::SingularLinearSystem: return "SingularLinearSystem";
    case ErrorKind::LeftDomain: return "LeftDomain";
    case ErrorKind::GeodesicIntegrationFailure: return "GeodesicIntegrationFailure";
    case ErrorKind::InvalidRange: return "InvalidRange";
    case ErrorKind::RadiusInfeasible: return "RadiusInfeasible";
    case ErrorKind::DegenerateSampleSet: return "DegenerateSampleSet";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string format_message(ErrorKind kind, const std::string& module, const std::string& operation,
                           const std::string& detail) {
  std::string msg;
  msg.append(to_string(kind));
  msg.append(" in ").append(module).append("::").append(operation);
  if (!detail.empty()) msg.append(": ").append(detail);
  return msg;
}

}  // namespace

Error::Error(ErrorKind kind, std::string module, std::string operation, std::string detail)
    : std::runtime_error(format_message(kind, module, operation, detail)),
      kind_(kind),
      module_(std::move(module)),
      operation_(std::move(operation)),
      detail_(std::move(detail)) {}

}  // namespace toriclab

#pragma once

#include <stdexcept>
#include <string>

namespace icpattack {

/// Bad inputs: malformed files, invalid configs, out-of-range arguments.
/// CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failures inside solvers. CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// No correspondence survived the trim filter.
class AssociationEmptyError : public NumericalError {
 public:
  explicit AssociationEmptyError(const std::string& what) : NumericalError(what) {}
};

/// The normal-equation system is singular or ill-conditioned.
class DegenerateGeometryError : public NumericalError {
 public:
  explicit DegenerateGeometryError(const std::string& what) : NumericalError(what) {}
};

/// ICP hit its iteration cap without meeting the tolerance where
/// convergence was required.
class IcpNotConvergedError : public NumericalError {
 public:
  explicit IcpNotConvergedError(const std::string& what) : NumericalError(what) {}
};

}  // namespace icpattack

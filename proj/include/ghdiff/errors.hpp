#ifndef GHDIFF_ERRORS_HPP
#define GHDIFF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ghdiff {

struct DisconnectedGraph : std::runtime_error {
  explicit DisconnectedGraph(const std::string& what) : std::runtime_error(what) {}
};

struct ZeroSelfWeight : std::runtime_error {
  explicit ZeroSelfWeight(const std::string& what) : std::runtime_error(what) {}
};

struct ConvergenceFailure : std::runtime_error {
  explicit ConvergenceFailure(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyEvalSet : std::runtime_error {
  explicit EmptyEvalSet(const std::string& what) : std::runtime_error(what) {}
};

struct StructureMismatch : std::runtime_error {
  explicit StructureMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct ZeroScale : std::runtime_error {
  explicit ZeroScale(const std::string& what) : std::runtime_error(what) {}
};

struct InsufficientMass : std::runtime_error {
  explicit InsufficientMass(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigParseError : std::runtime_error {
  explicit ConfigParseError(const std::string& what) : std::runtime_error(what) {}
};

struct UnknownParameter : std::runtime_error {
  explicit UnknownParameter(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a runtime bookkeeping identity the engine maintains is violated.
struct InvariantViolation : std::logic_error {
  explicit InvariantViolation(const std::string& what) : std::logic_error(what) {}
};

}  // namespace ghdiff

#endif  // GHDIFF_ERRORS_HPP

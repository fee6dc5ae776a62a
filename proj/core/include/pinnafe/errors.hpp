#pragma once
#include <stdexcept>
#include <string>

namespace pinnafe {

struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// evaluation requested inside a singular band where the problem data are
// undefined and no finite-difference fallback is possible
struct SingularError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SimplexViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SizeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ExactSolutionMissing : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pinnafe

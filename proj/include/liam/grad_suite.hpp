#pragma once

// Finite-difference verification of every differentiable primitive and every
// composite loss. 64-bit gradients are compared with 64-bit central
// differences. 32-bit gradients are compared with central differences of the
// same function evaluated in 64 bits at the identical (float-representable)
// point, since a 32-bit difference quotient carries roughly 1e-3 of rounding
// noise on its own.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace liam {

inline constexpr double kGradTolerance32 = 1e-4;
inline constexpr double kGradTolerance64 = 1e-6;

struct GradCheckResult {
  std::string name;
  std::uint64_t seed = 0;
  double max_rel_error_32 = 0.0;
  double max_rel_error_64 = 0.0;
  bool pass() const {
    return max_rel_error_32 < kGradTolerance32 && max_rel_error_64 < kGradTolerance64;
  }
};

/// Names of every case in the suite, primitives first.
std::vector<std::string> gradient_case_names();

/// Runs every case once per seed.
std::vector<GradCheckResult> run_gradient_suite(std::span<const std::uint64_t> seeds);

}  // namespace liam

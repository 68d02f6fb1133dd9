#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "selkov/scheme.hpp"

namespace selkov {

struct OpsCheckSizes {
  std::size_t operator_fields = 1000;  // per boundary mode
  std::size_t sign_tuples = 100000;
  std::size_t coercive_states = 1000;
  std::size_t solver_rhs = 100;       // per truncation N in {0, 1, 2}
};

/// One property checked over `trials` random inputs. `worst` is the largest
/// normalized defect seen; the property passes when it stays within tolerance.
struct OpsCheckResult {
  std::string suite;
  std::string property;
  std::string boundary;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double worst = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;

  bool passed() const noexcept { return failures == 0; }
};

/// Lattice operator identities, the sign inequality, coercivity of the implicit
/// operator, and the implicit solve against a dense finite-difference Newton.
std::vector<OpsCheckResult> run_ops_check(const ModelParams& params, const SchemeConfig& cfg, std::uint64_t seed,
                                          const OpsCheckSizes& sizes = {});

}  // namespace selkov

#pragma once

#include <cstdint>
#include <ostream>

namespace dfcr {

/// Quick oracle checks over the numerical cores (confidence update,
/// gradients, homography, signed-rank test, AIS codec). Prints one line per
/// check; returns true when all pass.
bool run_self_test(std::ostream& out, std::uint64_t seed = 1);

}  // namespace dfcr

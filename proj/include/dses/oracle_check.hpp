#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace dses {

/// Small-instance equivalence suite.
///
/// Mode suite: on lattice-exact instances (coordinates on a 0.125 lattice,
/// rotations from the 24 axis-permuting rotations, within-cloud Chebyshev
/// separation > bin) the translation returned by mode_translation must reach
/// an inlier count at least as high as every translation on a bin/4 sweep of
/// the candidate span.
///
/// Search suite: DSES with the saturated-L0 metric must return the same
/// inlier count as the exhaustive 6-D grid maximum on instances whose truth is
/// a grid node.
struct OracleReport {
    std::size_t mode_instances = 0;
    std::size_t mode_violations = 0;
    std::size_t mode_sweep_points = 0;
    /// Same sweep on off-lattice instances with arbitrary rotations. Bins can
    /// split a cluster of candidates there, so exceedances are informational.
    std::size_t generic_instances = 0;
    std::size_t generic_exceedances = 0;
    std::size_t search_instances = 0;
    std::size_t search_violations = 0;
    std::vector<std::string> messages;

    bool passed() const { return mode_violations == 0 && search_violations == 0; }
};

OracleReport run_mode_oracle(std::size_t trials, std::uint64_t seed, std::size_t generic_trials = 0);
OracleReport run_search_oracle(std::size_t trials, std::uint64_t seed);
/// Both suites; the search suite gets max(1, trials / 4) instances.
OracleReport run_oracle_check(std::size_t trials, std::uint64_t seed);

}  // namespace dses

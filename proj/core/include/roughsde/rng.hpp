#pragma once

#include <array>
#include <cstdint>

// Counter-based random numbers. Every draw is a pure function of
// (master seed, path index, draw counter), so ensembles are identical for any
// worker count and any evaluation order, and tables can be regenerated
// bit-exactly from their seed.

namespace roughsde {

// Philox4x32-10 block cipher (constants from Salmon et al., SC'11).
// Returns four 32-bit words for key = (seed, path) and a 64-bit counter.
std::array<std::uint32_t, 4> philox4x32(std::uint64_t seed, std::uint64_t path,
                                        std::uint64_t counter);

// Inverse standard normal CDF, Wichura's AS241 (PPND16), |relative error| ~ 1e-15.
// Requires p in (0,1).
double inverse_normal_cdf(double p);

// Uniform draw in the open interval (0,1): 53 bits from one Philox block.
double uniform_open01(std::uint64_t seed, std::uint64_t path, std::uint64_t counter);

// Standard normal draw via inverse CDF of uniform_open01.
double normal_draw(std::uint64_t seed, std::uint64_t path, std::uint64_t counter);

}  // namespace roughsde

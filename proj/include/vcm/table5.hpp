#pragma once

// Worked 8-token, 2-concept lattice with its published forward table
// (values rounded to three decimals). Fixture version 1.

#include <array>
#include <cstddef>

#include "vcm/alignment.hpp"
#include "vcm/matrix.hpp"

namespace vcm::table5 {

inline constexpr int kFixtureVersion = 1;
inline constexpr std::size_t kTokens = 8;
inline constexpr std::size_t kConcepts = 2;
inline constexpr std::size_t kStates = 2 * kConcepts + 1;

// (p_blank, p_keep) per token.
inline constexpr std::array<Emission, kTokens> kEmissions = {{
    {0.8, 0.2}, {0.6, 0.4}, {0.2, 0.8}, {0.3, 0.7},
    {0.7, 0.3}, {0.9, 0.1}, {0.1, 0.9}, {0.3, 0.7},
}};

inline constexpr std::array<std::array<double, kStates>, kTokens> kPublishedAlpha = {{
    {0.800, 0.200, 0.000, 0.000, 0.000},
    {0.480, 0.400, 0.120, 0.000, 0.000},
    {0.096, 0.704, 0.104, 0.096, 0.000},
    {0.029, 0.560, 0.242, 0.140, 0.029},
    {0.020, 0.177, 0.562, 0.115, 0.118},
    {0.018, 0.020, 0.664, 0.068, 0.210},
    {0.002, 0.034, 0.068, 0.659, 0.028},
    {0.001, 0.025, 0.031, 0.509, 0.206},
}};

// alpha(8,4) + alpha(8,5) as published.
inline constexpr double kPublishedTotal = 0.509 + 0.206;

EmissionSequence emissions();

struct Comparison {
  Matrix alpha;             // computed, unrounded
  Matrix delta;             // computed - published
  std::size_t mismatches = 0;  // cells whose 3-decimal rounding differs
  double max_abs_delta = 0.0;
  double total = 0.0;       // computed p(Z|Y)
};

Comparison compare();

}  // namespace vcm::table5

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "malab/grid_convex/field.hpp"
#include "malab/sections/section.hpp"

namespace malab {

/// Two sections S_h1(x1), S_h2(x2) with h1 <= h2 and x1 in S_h2(x2).
struct SectionPair {
  std::size_t x1 = 0, x2 = 0;
  double h1 = 0.0, h2 = 0.0;
};

struct EngulfingOptions {
  int pairs = 200;
  std::uint64_t seed = 1;
  double height_range = 64.0;  // h2 spans [h_max / range, h_max]
  double ratio_range = 16.0;   // h1 spans [h2 / range, h2]
  int min_exponent = 1;        // delta scanned over 2^-min .. 2^-max
  int max_exponent = 10;
};

/// Pairs whose outer section S_{2 h2}(x2) and inner section S_{h1}(x1) stay away from
/// the boundary. Deterministic for a fixed seed.
std::vector<SectionPair> sample_section_pairs(const ConvexField& u, const EngulfingOptions& options = {});

struct EngulfingFailure {
  int property = 0;  // 1, 2 or 3
  SectionPair pair;
};

/// P1: S_{d h1}(x1) meets S_{d h2}(x2)  =>  S_{d h1}(x1) in S_{h2}(x2)
/// P2: some S_{d h1}(z) lies in S_{h1}(x1) and S_{h2}(x2)
/// P3: S_{d h2}(x1) in S_{2 h2}(x2)
struct EngulfingResult {
  double delta = 0.0;
  std::array<int, 3> tested{0, 0, 0};
  std::array<int, 3> passed{0, 0, 0};
  std::vector<EngulfingFailure> failures;

  bool all_passed() const { return failures.empty(); }
};

EngulfingResult engulfing_check(const ConvexField& u, double delta, const std::vector<SectionPair>& pairs);

struct DeltaEstimate {
  double delta = 0.0;
  EngulfingResult result;
  std::size_t pairs = 0;
};

/// Largest dyadic delta passing all three properties on the sampled pairs, found by
/// bisection over the exponent (each property is monotone in delta). Throws
/// NoPassingDelta when no pair can be sampled or even the smallest delta fails.
DeltaEstimate estimate_delta(const ConvexField& u, const EngulfingOptions& options = {});

}  // namespace malab

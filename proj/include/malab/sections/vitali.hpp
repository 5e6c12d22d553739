#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "malab/grid_convex/field.hpp"
#include "malab/sections/section.hpp"

namespace malab {

struct CoverElement {
  Section full;    // S_h(x_i)
  Section shrunk;  // S_{delta h}(x_i), pairwise disjoint
};

struct VitaliCover {
  double delta = 0.0;
  std::vector<CoverElement> selected;
  std::size_t targets = 0;
  std::size_t candidates = 0;
  std::vector<std::size_t> excluded;  // targets whose height search failed
};

/// Largest power of two not above h.
double dyadic_floor(double h);

/// Covers the target nodes by sections S_{h_i}(x_i) whose shrinkings S_{delta h_i}(x_i)
/// are disjoint. Heights are rounded down to powers of two; candidates are greedily
/// selected by height, ties broken by centre index. Throws CoverageGap listing the
/// uncovered nodes.
VitaliCover vitali_cover(const ConvexField& u, const std::vector<std::size_t>& targets,
                         const std::vector<double>& heights, double delta);

/// Variant with heights found on demand, only for targets not yet inside a candidate's
/// shrunk section (visited in the given order). Targets whose search returns nothing are
/// listed in `excluded` and dropped from the coverage requirement.
VitaliCover vitali_cover_search(const ConvexField& u, const std::vector<std::size_t>& targets,
                                const std::function<std::optional<double>(std::size_t)>& height,
                                double delta);

}  // namespace malab

#pragma once

#include <cstddef>
#include <vector>

#include "malab/grid_convex/field.hpp"

namespace malab {

/// S_h(x0) = {x : u(x) < u(x0) + p . (x - x0) + h} sampled on the interior nodes.
struct Section {
  std::size_t center = 0;
  Vec x0;
  Vec slope;
  double base_value = 0.0;
  double height = 0.0;
  std::vector<std::size_t> nodes;  // sorted node indices
  std::vector<Vec> boundary;       // counter-clockwise hull of threshold crossings
  double measure = 0.0;
  bool touches_boundary = false;   // some node lies within two cells of the domain boundary

  bool contains(std::size_t node) const;
  /// u(x) - u(x0) - p . (x - x0) at a node.
  double excess(const ConvexField& u, std::size_t node) const;
};

struct SectionOptions {
  /// Return single-node masks instead of throwing EmptySection.
  bool allow_unresolved = false;
};

/// Centred-difference gradient; nonuniform differences against the boundary crossing
/// when a neighbor is missing.
Vec discrete_gradient(const ConvexField& u, std::size_t node);

/// Throws EmptySection when only the centre node lies below the threshold and
/// Unsupported for 3D fields.
Section compute_section(const ConvexField& u, std::size_t center, double h,
                        const SectionOptions& options = {});

/// Same supporting plane as `base`, different height.
Section section_with_slope(const ConvexField& u, const Section& base, double h,
                           const SectionOptions& options = {});

bool sections_intersect(const Section& a, const Section& b);
bool section_subset(const Section& inner, const Section& outer);
/// Nodes in both sections.
std::vector<std::size_t> section_intersection(const Section& a, const Section& b);

}  // namespace malab

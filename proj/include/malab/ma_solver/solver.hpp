#pragma once

#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "malab/grid_convex/domain.hpp"
#include "malab/grid_convex/field.hpp"
#include "malab/ma_solver/rhs.hpp"

namespace malab {

struct SolverOptions {
  double tol = 1e-8;
  /// Largest integer coordinate of a stencil direction: 1 gives 4 directions in 2D,
  /// 2 gives 8. In 3D frames are orthogonal triples of primitive vectors.
  int stencil_width = 2;
  int max_iterations = 100;
  /// Smallest step accepted by the backtracking line search.
  double min_step = 1.0 / 1024.0;
  /// Nested iteration: grids with odd extents are started from the interpolated
  /// solution on the grid of twice the spacing, down to this many nodes per axis.
  int coarsest_nodes = 33;
};

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;
  double residual_l1 = 0.0;
  int stencil_directions = 0;
  int stencil_width = 0;
  double wall_time = 0.0;

  /// Wall time is left out unless requested so that reports stay reproducible.
  nlohmann::json to_json(bool with_timing = false) const;
};

/// Orthogonal direction frames of the wide stencil.
std::vector<std::vector<Index3>> stencil_frames(int dim, int width);

/// Discrete Monge-Ampere operator min over frames of prod d_j^+ - sum d_j^-, with d_j
/// the second difference along the unit direction of frame vector j. Zero off the interior.
std::vector<double> monge_ampere_operator(const ConvexField& u, int stencil_width = 2);

struct ResidualStats {
  double max = 0.0;
  double l1 = 0.0;
};

ResidualStats residual(const ConvexField& u, const RhsSpec& rhs, int stencil_width = 2);

/// Damped semismooth Newton on the wide-stencil scheme from a Poisson initial guess.
/// Throws DegenerateRhs or NonConvergence.
std::pair<ConvexField, SolveReport> solve_dirichlet(const Grid& grid, const DomainSpec& domain,
                                                    const RhsSpec& rhs,
                                                    const SolverOptions& options = {});

/// c^{1/n} (|x|^2 - R^2) / 2 on the ball of radius R, as a Dirichlet field.
ConvexField radial_reference(const Grid& grid, double radius, double c);

}  // namespace malab

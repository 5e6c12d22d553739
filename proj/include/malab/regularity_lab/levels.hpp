#pragma once

#include <string>
#include <vector>

#include "malab/grid_convex/field.hpp"
#include "malab/sections/section.hpp"

namespace malab {

/// Node mask standing in for S_1(0) (or another designated base section).
struct Region {
  std::vector<std::uint8_t> mask;
  std::string label;

  std::size_t count() const;
};

/// {u < -|u|_inf / 2}, the default analysis region of a solved field.
Region interior_region(const ConvexField& u);
/// {u < level} over the interior nodes.
Region sublevel_region(const ConvexField& u, double level);
Region section_region(const ConvexField& u, const Section& s);

/// Sets below this many cells count as empty.
inline constexpr double kResolutionCells = 4.0;

/// D_k = {|D^2u| >= M^k} within the region, k = 0..K.
struct LevelDecomposition {
  double M = 4.0;
  double cell = 0.0;
  std::vector<std::vector<std::size_t>> sets;  // D_k, nested, sorted
  std::vector<double> measure;
  std::vector<double> energy;                  // integral of |D^2u| over D_k
  std::vector<double> region_norms;            // |D^2u| on the region, ascending
  std::size_t unresolved = 0;                  // region nodes without a usable Hessian
  double region_measure = 0.0;

  int levels() const { return static_cast<int>(sets.size()); }
  /// |F_K| = |{|D^2u| >= K} in region|, zero below the resolution floor.
  double tail_measure(double K) const;
  /// Largest K with a resolvable F_K (0 when none above 1).
  double max_threshold() const;
};

/// K < 0 keeps every resolvable level.
LevelDecomposition level_decompose(const HessianField& H, const Region& region, double M, int K = -1);

struct TailReport {
  std::vector<double> K;
  std::vector<double> measure;   // |F_K|
  std::vector<double> constant;  // |F_K| K log K
  double uniform_c = 0.0;        // smallest c valid for every sampled K
  double fitted_c = 0.0;         // geometric least-squares fit of the constants
  double fit_residual = 0.0;     // rms of log-constant residuals
  double slope = 0.0;            // d log|F_K| / d log K, when at least 3 points exist
  bool trivial = false;          // no resolvable F_K with K >= 2
};

/// K sampled at 2^{j/4} on [2, K_max]; K_max <= 0 uses the largest resolvable threshold.
TailReport tail_bound_check(const LevelDecomposition& d, double K_max = 0.0);

struct MeasureDecay {
  double epsilon = 0.0;              // min over k
  std::vector<double> step_epsilon;  // (log(|D_k| / |D_k+1|) / log M - 1) / 2
  int levels = 0;
};

/// Throws InsufficientLevels with fewer than three nonempty levels.
MeasureDecay measure_decay_check(const LevelDecomposition& d);

struct W21Norm {
  double epsilon = 0.0;
  double direct = 0.0;
  double layer_cake = 0.0;
  double relative_difference = 0.0;
};

/// Integral of |D^2u|^{1+eps} over the region by node quadrature and through the
/// distribution function int_1^inf t^{eps-1} (int_{|D^2u|>=t} |D^2u|) dt.
/// Throws LayerCakeMismatch beyond `tolerance`. `clamp` replaces |D^2u| by max(|D^2u|, 1).
W21Norm w21eps_norm(const HessianField& H, const Region& region, double epsilon,
                    double tolerance = 0.01, bool clamp = false);

struct RefinementInput {
  const HessianField* hessian;
  const Region* region;
};

struct EpsilonEstimate {
  double epsilon = 0.0;  // 0 when no tested value is stable
  std::vector<double> tested;
  std::vector<std::vector<double>> norms;  // norms[e][grid]
  std::vector<double> growth;              // worst relative growth per tested eps
};

inline constexpr double kStableGrowth = 0.10;

/// Largest dyadic eps in {1/16, ..., 2} such that the norm grows by at most 10% between
/// successive refinements for it and every smaller tested value. Throws InsufficientLevels with fewer than three grids.
EpsilonEstimate epsilon_estimate(const std::vector<RefinementInput>& family);

}  // namespace malab

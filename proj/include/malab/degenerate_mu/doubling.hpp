#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "malab/degenerate_mu/measure.hpp"

namespace malab {

/// A sampled set, kept as geometry so that it can be moved by an affine map.
struct SampledSet {
  enum class Kind { Ellipsoid, Simplex, Halfspace, Slab, Strips, Bernoulli };
  Kind kind = Kind::Ellipsoid;
  Vec center;                 // Ellipsoid
  Mat shape;                  // (x - c)^T shape (x - c) <= 1
  std::vector<Vec> vertices;  // Simplex
  Vec normal;                 // Halfspace: lo <= n.x <= hi; Strips: outside (lo, hi)
  double lo = 0.0, hi = 0.0;
  int term = 0;               // Slab: |P_term| <= width, through the measure's coordinates
  double width = 0.0;
  double probability = 0.0;   // Bernoulli, keyed by node index
  std::uint64_t key = 0;

  bool contains(const Vec& x, std::size_t node, const MeasureSpec& spec) const;
  SampledSet mapped(const Mat& T, const Vec& b) const;
  std::string name() const;
};

struct DoublingOptions {
  int sets = 200;
  int subsets = 50;
  std::uint64_t seed = 1;
  /// Fitting rule: beta is the least value >= 1 for which every sample satisfies the
  /// inequality with gamma = gamma_floor; gamma is then the largest valid constant.
  double gamma_floor = 1.0 / 64;
  double beta_max = 8.0;
  int min_set_nodes = 64;
};

struct DoublingSample {
  int set = 0;
  std::string set_kind;
  std::string subset_kind;
  double volume_ratio = 0.0;  // |E| / |S|
  double mass_ratio = 0.0;    // mu(E) / mu(S)
};

struct MuInftyReport {
  double gamma = 0.0;
  double beta = 0.0;
  double worst_ratio = 0.0;  // min of mass_ratio / volume_ratio^beta
  DoublingSample worst;
  int sets = 0;
  std::string sampler;
  std::vector<DoublingSample> samples;

  /// Every sample satisfies mass_ratio >= gamma volume_ratio^beta.
  bool certified() const;
  nlohmann::json to_json(bool with_samples = false) const;
  std::string csv() const;
};

/// Seeded pairs E in S: random ellipsoids and simplices S in the domain, each with slabs
/// around every zero set {P_i = 0}, halfspace cuts, sub-ellipsoids, two-sided strips and
/// random node subsets. Throws PropertyViolated when no beta <= beta_max fits.
MuInftyReport check_doubling(const MeasureSpec& spec, const DomainSpec& domain, const Grid& grid,
                             const DoublingOptions& options = {});

struct AffineInvariance {
  double mass_ratio_difference = 0.0;    // max absolute difference over pairs and maps
  double volume_ratio_difference = 0.0;
  std::size_t pairs = 0;
  int maps = 0;
};

/// Recomputes the sampled ratios after moving domain, sets and mu by each unimodular
/// map x -> T x + b.
AffineInvariance affine_invariance_check(const MeasureSpec& spec, const DomainSpec& domain,
                                         const Grid& grid,
                                         const std::vector<std::pair<Mat, Vec>>& maps,
                                         const DoublingOptions& options = {});

}  // namespace malab

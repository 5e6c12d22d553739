#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "malab/grid_convex/field.hpp"
#include "malab/regularity_lab/levels.hpp"
#include "malab/sections/normalization.hpp"
#include "malab/sections/section.hpp"

namespace malab {

/// int_{S_h(x0)} |D^2u| <= C0 |{C0^{-1} I <= D^2u <= C0 I} in S_{delta h}(x0) in S_t(y)|.
struct BasicReport {
  double lhs = 0.0;
  double C0 = 0.0;  // smallest passing power of two
  bool passed = false;
  double good_measure = 0.0;  // at C0
  double rhs = 0.0;
  std::vector<double> scan_C0, scan_rhs;
  double core_measure = 0.0;        // |S_{delta h}(x0) in S_t(y)|
  double laplacian_integral = 0.0;  // int_{S_h(x0)} Laplacian
  double low_threshold = 0.0;       // 2 * laplacian_integral / core_measure
  double low_measure = 0.0;         // |{|D^2u| <= low_threshold} in core|, at least half the core
};

/// Throws NoPassingConstant when no C0 <= 2^max_exponent works.
BasicReport lemma_basic_check(const ConvexField& u, const HessianField& H, const Section& base,
                              const Section& outer, double delta, int max_exponent = 20);

struct ScOptions {
  double delta = 1.0 / 16;
  double tolerance = 0.10;  // relative, for the two-route comparison
  int max_exponent = 20;
  RescaleOptions rescale;
};

/// int_{S_h(x0)} |D^2u| <= C0 alpha |{C0^{-1} alpha <= |D^2u| <= C0 alpha} in S_{delta h}(x0) in S_t(y)|,
/// plus the comparison of the rescaled field u~ with the same quantities pulled back to
/// the original grid (D^2u~ = A^{-T} D^2u A^{-1}, dx = h^{n/2} dx~).
struct ScReport {
  double alpha = 0.0;
  double lhs = 0.0;
  double C0 = 0.0;
  bool passed = false;
  double good_measure = 0.0;
  double rhs = 0.0;

  BasicReport rescaled;           // lemma_basic_check on u~ with S~_1(0) and S~_{t/h}(y~)
  double pulled_lhs = 0.0;        // h^{-n/2} int_{S_h} |A^{-T} D^2u A^{-1}|
  double pulled_good = 0.0;       // pulled-back good-set measure at rescaled.C0
  double lhs_difference = 0.0;    // relative
  double good_difference = 0.0;   // relative to |S~_1|
};

/// Throws RescaleMismatch when the routes differ beyond the tolerance and
/// NoPassingConstant as above.
ScReport lemma_basic_sc_check(const ConvexField& u, const HessianField& H, const Section& section,
                              const Section& outer, const Normalization& normalization,
                              const ScOptions& options = {});

struct DecayOptions {
  double delta = 1.0 / 16;
  double C0 = 0.0;                    // <= 0 selects sqrt(M): the good band is then [M^k, M^{k+1}]
  int search_levels = 20;
  std::vector<std::uint8_t> allowed;  // stand-in for S_2(0); empty allows every interior node
  /// Normalized size of a section; empty uses the John-ellipsoid alpha = |A|^2.
  std::function<double(const Section&, const Normalization&)> size;
};

struct DecayStep {
  int k = 0;
  std::size_t targets = 0;   // |D_{k+1}| in nodes
  std::size_t searched = 0;  // section searches performed
  std::size_t excluded = 0;  // failed searches
  std::size_t selected = 0;
  double energy = 0.0;       // int_{D_k}
  double energy_next = 0.0;  // int_{D_{k+1}}
  double band_energy = 0.0;  // int_{D_k \ D_{k+1}}
  double cover_lhs = 0.0;    // sum of int_{S_{h_i}} |D^2u|
  double cover_rhs = 0.0;    // sum of C0 alpha_i |good band in S_{delta h_i}|
  double constant = 0.0;     // energy_next / band_energy
  double contraction = 0.0;  // energy_next / energy
};

struct DecayReport {
  double M = 0.0;
  double C0 = 0.0;
  double delta = 0.0;
  double tau = 0.0;             // 1 / (1 + max constant)
  double C = 0.0;
  double epsilon = 0.0;         // from measure decay; NaN with too few levels
  double fit_residual = 0.0;    // rms residual of log energy vs k
  double fit_rate = 0.0;        // fitted per-level energy ratio
  bool monotone = false;        // energies strictly decreasing over >= 3 levels
  bool valid = false;           // exclusions below 1% at every step
  std::vector<DecayStep> steps;
};

/// Covers each D_{k+1} by sections of normalized size C0 M^k (bisection over 20
/// dyadic heights) and compares the truncated energies.
DecayReport decay_iterate(const ConvexField& u, const HessianField& H, const LevelDecomposition& d,
                          const DecayOptions& options = {});

}  // namespace malab

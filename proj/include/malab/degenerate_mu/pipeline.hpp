#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "malab/degenerate_mu/doubling.hpp"
#include "malab/degenerate_mu/measure.hpp"
#include "malab/ma_solver/solver.hpp"
#include "malab/regularity_lab/lemmas.hpp"
#include "malab/regularity_lab/levels.hpp"
#include "malab/sections/normalization.hpp"

namespace malab {

/// Normalization of a section relative to mu: the John map A is kept and the inclusion
/// radii are compared with rho = h mu(S_h)^{-1/n} instead of sqrt(h).
struct MuNormalization {
  Normalization base;
  double mass = 0.0;   // mu(S_h(x0))
  double rho = 0.0;    // h mu^{-1/n}
  double sigma = 0.0;  // min(r_in / rho, rho / r_out)
  double alpha = 0.0;  // h^{-1} mu^{2/n} |A|^2
  Mat T;               // x -> T (x - x0), T = h^{-1} mu^{1/n} A
  Vec x0;

  nlohmann::json to_json() const;
};

/// Throws ZeroMuMass when the section carries no mass.
MuNormalization mu_normalize_section(const Section& section, const MeasureField& mu,
                                     NormalizationMethod method = NormalizationMethod::John);
MuNormalization mu_normalize_section(const ConvexField& u, const Section& section, const MeasureSpec& spec,
                                     NormalizationMethod method = NormalizationMethod::John);

/// Right-hand side for det D^2u = mu: the mean density of mu over each node's cell.
RhsSpec measure_rhs(const MeasureField& mu, const std::string& label = "mu");

struct Thm2Options {
  int nodes = 129;
  int doubling_nodes = 65;
  double M = 2.0;
  double delta = 1.0 / 16;
  bool run_decay = true;
  DoublingOptions doubling;
  SolverOptions solver;
};

struct Thm2Report {
  MeasureSpec measure;  // mass-normalized
  MuInftyReport doubling;
  SolveReport solve;
  ConvexField u;

  /// Levels are taken of |D^2u| / hessian_scale, the mean over the analysis region, with
  /// base M_eff = min(M, (top / hessian_scale)^{1/3}) and top the largest norm still
  /// carried by a resolvable set, so that three levels exist whenever the Hessian varies.
  double hessian_scale = 0.0;
  double M_eff = 0.0;
  std::vector<double> level_measure;
  DecayReport decay;
  double epsilon = 0.0;  // NaN when the Hessian is constant at grid resolution

  // Good set {|D^2u| <= 2 C1 / c1} in {det D^2u > c2} on the analysis region.
  double C1 = 0.0;  // mean |D^2u|
  double c1 = 0.5;
  double c2 = 0.0;  // gamma (mu(region)/|region|) (c1/4)^{beta-1}
  double good_measure = 0.0;
  double region_measure = 0.0;

  nlohmann::json to_json() const;
};

/// Normalizes mu to unit mass, certifies the doubling property, solves det D^2u = mu
/// and runs the level decomposition and decay chain with mu-relative section sizes.
Thm2Report thm2_pipeline(const DomainSpec& domain, const MeasureSpec& spec, const Thm2Options& options = {});

}  // namespace malab

#include "malab/regularity_lab/levels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "malab/error.hpp"

namespace malab {

std::size_t Region::count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

Region interior_region(const ConvexField& u) {
  return {sup_norm_and_interior(u).mask, "interior"};
}

Region sublevel_region(const ConvexField& u, double level) {
  Region r{std::vector<std::uint8_t>(u.grid.count(), 0), "sublevel"};
  for (std::size_t i = 0; i < u.grid.count(); ++i)
    r.mask[i] = u.interior[i] && u.values[i] < level ? 1 : 0;
  return r;
}

Region section_region(const ConvexField& u, const Section& s) {
  Region r{std::vector<std::uint8_t>(u.grid.count(), 0), "section"};
  for (std::size_t i : s.nodes) r.mask[i] = 1;
  return r;
}

double LevelDecomposition::tail_measure(double K) const {
  const auto it = std::lower_bound(region_norms.begin(), region_norms.end(), K);
  const auto n = static_cast<double>(region_norms.end() - it);
  return n < kResolutionCells ? 0.0 : n * cell;
}

double LevelDecomposition::max_threshold() const {
  if (region_norms.size() < kResolutionCells) return 0.0;
  return region_norms[region_norms.size() - static_cast<std::size_t>(kResolutionCells)];
}

LevelDecomposition level_decompose(const HessianField& H, const Region& region, double M, int K) {
  if (!(M > 1.0)) throw Error(ErrorCode::Unsupported, "threshold base must exceed 1");
  LevelDecomposition d;
  d.M = M;
  d.cell = H.grid.cell_volume();
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < H.grid.count(); ++i) {
    if (!region.mask[i]) continue;
    d.region_measure += d.cell;
    if (!H.usable(i)) {
      ++d.unresolved;
      continue;
    }
    nodes.push_back(i);
    d.region_norms.push_back(H.norm[i]);
  }
  std::sort(d.region_norms.begin(), d.region_norms.end());
  for (int k = 0; K < 0 || k <= K; ++k) {
    const double t = std::pow(M, k);
    std::vector<std::size_t> dk;
    const auto& src = k == 0 ? nodes : d.sets.back();
    for (std::size_t i : src)
      if (H.norm[i] >= t) dk.push_back(i);
    if (dk.size() < kResolutionCells) dk.clear();
    if (dk.empty() && K < 0) break;
    double e = 0.0;
    for (std::size_t i : dk) e += H.norm[i] * d.cell;
    d.measure.push_back(static_cast<double>(dk.size()) * d.cell);
    d.energy.push_back(e);
    d.sets.push_back(std::move(dk));
    if (d.sets.back().empty() && k > 0) {
      // Higher levels are empty as well.
      for (int j = k + 1; j <= K; ++j) {
        d.sets.emplace_back();
        d.measure.push_back(0.0);
        d.energy.push_back(0.0);
      }
      break;
    }
  }
  if (d.sets.empty()) {
    d.sets.emplace_back();
    d.measure.push_back(0.0);
    d.energy.push_back(0.0);
  }
  return d;
}

TailReport tail_bound_check(const LevelDecomposition& d, double K_max) {
  TailReport r;
  if (K_max <= 0.0) K_max = d.max_threshold();
  for (int j = 4; std::pow(2.0, j / 4.0) <= K_max; ++j) {
    const double K = std::pow(2.0, j / 4.0);
    const double m = d.tail_measure(K);
    if (m <= 0.0) break;
    r.K.push_back(K);
    r.measure.push_back(m);
    r.constant.push_back(m * K * std::log(K));
  }
  if (r.K.empty()) {
    r.trivial = true;
    return r;
  }
  r.uniform_c = *std::max_element(r.constant.begin(), r.constant.end());
  double mean = 0.0;
  for (double c : r.constant) mean += std::log(c);
  mean /= static_cast<double>(r.constant.size());
  r.fitted_c = std::exp(mean);
  double ss = 0.0;
  for (double c : r.constant) ss += std::pow(std::log(c) - mean, 2);
  r.fit_residual = std::sqrt(ss / static_cast<double>(r.constant.size()));
  if (r.K.size() >= 3) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(r.K.size());
    for (std::size_t k = 0; k < r.K.size(); ++k) {
      const double x = std::log(r.K[k]), y = std::log(r.measure[k]);
      sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    r.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return r;
}

MeasureDecay measure_decay_check(const LevelDecomposition& d) {
  MeasureDecay r;
  while (r.levels < d.levels() && d.measure[r.levels] > 0.0) ++r.levels;
  if (r.levels < 3)
    throw Error(ErrorCode::InsufficientLevels,
                std::to_string(r.levels) + " nonempty levels, at least 3 are needed");
  r.epsilon = std::numeric_limits<double>::infinity();
  for (int k = 0; k + 1 < r.levels; ++k) {
    const double e = (std::log(d.measure[k] / d.measure[k + 1]) / std::log(d.M) - 1.0) / 2.0;
    r.step_epsilon.push_back(e);
    r.epsilon = std::min(r.epsilon, e);
  }
  return r;
}

W21Norm w21eps_norm(const HessianField& H, const Region& region, double epsilon, double tolerance,
                    bool clamp) {
  if (epsilon < 0.0) throw Error(ErrorCode::Unsupported, "epsilon must be non-negative");
  W21Norm r;
  r.epsilon = epsilon;
  const double cell = H.grid.cell_volume();
  std::vector<double> big;  // |D^2u| >= 1
  double below = 0.0;
  for (std::size_t i = 0; i < H.grid.count(); ++i) {
    if (!region.mask[i] || !H.usable(i)) continue;
    const double v = clamp ? std::max(H.norm[i], 1.0) : H.norm[i];
    r.direct += std::pow(v, 1.0 + epsilon) * cell;
    if (v >= 1.0) big.push_back(v);
    else below += std::pow(v, 1.0 + epsilon) * cell;
  }
  // Energy above t: E(t) = sum over |D^2u| >= t, from suffix sums of sorted values.
  std::sort(big.begin(), big.end());
  std::vector<double> suffix(big.size() + 1, 0.0);
  for (std::size_t k = big.size(); k-- > 0;) suffix[k] = suffix[k + 1] + big[k] * cell;
  auto energy_above = [&](double t) {
    return suffix[std::lower_bound(big.begin(), big.end(), t) - big.begin()];
  };
  // int_{|D^2u|>=1} |D^2u|^{1+eps} = E(1) + eps * int_1^inf t^{eps-1} E(t) dt.
  // Trapezoid in s = log t, 2000 points per decade, up to the largest value.
  double tail = 0.0;
  if (!big.empty() && epsilon > 0.0) {
    const double top = std::log(big.back());
    const int steps = std::max(1, static_cast<int>(std::ceil(top / std::log(10.0) * 2000.0)));
    const double ds = top / steps;
    for (int k = 0; k <= steps; ++k) {
      const double s = k * ds;
      const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
      tail += w * std::exp(epsilon * s) * energy_above(std::exp(s));
    }
    tail *= ds;
  }
  r.layer_cake = below + energy_above(1.0) + epsilon * tail;
  const double scale = std::max(std::abs(r.direct), 1e-300);
  r.relative_difference = std::abs(r.direct - r.layer_cake) / scale;
  if (r.direct > 0.0 && r.relative_difference > tolerance)
    throw Error(ErrorCode::LayerCakeMismatch,
                "direct " + std::to_string(r.direct) + " vs layer cake " + std::to_string(r.layer_cake));
  return r;
}

EpsilonEstimate epsilon_estimate(const std::vector<RefinementInput>& family) {
  if (family.size() < 3)
    throw Error(ErrorCode::InsufficientLevels, "epsilon estimate needs at least 3 grids");
  EpsilonEstimate r;
  r.tested = {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0, 2.0};
  for (double e : r.tested) {
    std::vector<double> row;
    for (const auto& in : family) row.push_back(w21eps_norm(*in.hessian, *in.region, e).direct);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g + 1 < row.size(); ++g)
      worst = std::max(worst, row[g] > 0.0 ? (row[g + 1] - row[g]) / row[g] : 0.0);
    r.norms.push_back(row);
    r.growth.push_back(worst);
  }
  for (std::size_t k = 0; k < r.tested.size() && r.growth[k] <= kStableGrowth; ++k) r.epsilon = r.tested[k];
  return r;
}

}  // namespace malab

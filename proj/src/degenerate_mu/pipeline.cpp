#include "malab/degenerate_mu/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "malab/error.hpp"
#include "malab/regularity_lab/report.hpp"
#include "malab/sections/report.hpp"

namespace malab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json nan_safe(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json matrix_json(const Mat& m) {
  nlohmann::json out = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

}  // namespace

nlohmann::json MuNormalization::to_json() const {
  return {{"base", malab::to_json(base)}, {"mass", mass},   {"rho", rho},
          {"sigma", sigma},               {"alpha", alpha}, {"T", matrix_json(T)}};
}

MuNormalization mu_normalize_section(const Section& section, const MeasureField& mu, NormalizationMethod method) {
  MuNormalization out;
  out.mass = mu.of(section.nodes);
  if (!(out.mass > 0.0)) throw Error(ErrorCode::ZeroMuMass, "section carries no mu mass");
  out.base = john_normalize(section, method);
  const double n = mu.grid.dim(), h = section.height;
  out.rho = h * std::pow(out.mass, -1.0 / n);
  out.sigma = std::min(out.base.r_in / out.rho, out.rho / out.base.r_out);
  out.alpha = std::pow(out.mass, 2.0 / n) * out.base.alpha / h;
  out.T = (std::pow(out.mass, 1.0 / n) / h) * out.base.A;
  out.x0 = section.x0;
  return out;
}

MuNormalization mu_normalize_section(const ConvexField& u, const Section& section, const MeasureSpec& spec,
                                     NormalizationMethod method) {
  return mu_normalize_section(section, measure_field(spec, u.grid, u.domain), method);
}

RhsSpec measure_rhs(const MeasureField& mu, const std::string& label) {
  auto density = std::make_shared<std::vector<double>>(mu.grid.count(), 0.0);
  double top = 0.0;
  for (std::size_t i = 0; i < mu.grid.count(); ++i) {
    (*density)[i] = mu.cell_density(i);
    top = std::max(top, (*density)[i]);
  }
  const Grid grid = mu.grid;
  return RhsSpec::from_measure(
      [density, grid](const Vec& x) {
        const auto i = grid.nearest(x);
        return i ? (*density)[*i] : 0.0;
      },
      top, label);
}

nlohmann::json Thm2Report::to_json() const {
  return {{"measure", measure.to_json()},
          {"doubling", doubling.to_json()},
          {"solve", solve.to_json()},
          {"hessian_scale", hessian_scale},
          {"M_eff", nan_safe(M_eff)},
          {"level_measure", level_measure},
          {"decay", malab::to_json(decay)},
          {"epsilon", nan_safe(epsilon)},
          {"C1", C1},
          {"c1", c1},
          {"c2", c2},
          {"good_measure", good_measure},
          {"region_measure", region_measure}};
}

Thm2Report thm2_pipeline(const DomainSpec& domain, const MeasureSpec& spec, const Thm2Options& o) {
  spec.validate();
  const Grid grid = domain_grid(domain, o.nodes);
  Thm2Report rep;
  rep.measure = normalize_mass(spec, grid, domain);
  rep.doubling = check_doubling(rep.measure, domain, domain_grid(domain, o.doubling_nodes), o.doubling);

  const MeasureField mu = measure_field(rep.measure, grid, domain);
  auto solved = solve_dirichlet(grid, domain, measure_rhs(mu), o.solver);
  rep.u = std::move(solved.first);
  rep.solve = solved.second;
  const ConvexField& u = rep.u;

  HessianField H = discrete_hessian(u);
  const Region region = interior_region(u);
  const double cell = grid.cell_volume();
  std::vector<double> norms;
  double region_mass = 0.0;
  for (std::size_t i = 0; i < grid.count(); ++i) {
    if (!region.mask[i]) continue;
    rep.region_measure += cell;
    region_mass += mu.mass[i];
    if (H.usable(i)) norms.push_back(H.norm[i]);
  }
  if (norms.empty()) throw Error(ErrorCode::InsufficientStencil, "no usable Hessian in the analysis region");
  std::sort(norms.begin(), norms.end());
  double sum = 0.0;
  for (double v : norms) sum += v;
  rep.hessian_scale = rep.C1 = sum / static_cast<double>(norms.size());

  // Largest norm that a set of 2 * kResolutionCells cells still reaches.
  const std::size_t keep = static_cast<std::size_t>(2.0 * kResolutionCells);
  const double top = norms[norms.size() - std::min(norms.size(), keep)];
  rep.M_eff = std::min(o.M, std::cbrt(top / rep.hessian_scale));
  rep.epsilon = kNaN;
  if (rep.M_eff > 1.0 + 1e-9) {
    HessianField Hs = H;
    for (double& v : Hs.entries) v /= rep.hessian_scale;
    for (double& v : Hs.norm) v /= rep.hessian_scale;
    const LevelDecomposition d = level_decompose(Hs, region, rep.M_eff);
    rep.level_measure = d.measure;
    if (o.run_decay) {
      DecayOptions dopt;
      dopt.delta = o.delta;
      const double scale = rep.hessian_scale;
      dopt.size = [&mu, scale](const Section& s, const Normalization& nz) {
        const double m = mu.of(s.nodes);
        return std::pow(m, 2.0 / mu.grid.dim()) * nz.alpha / s.height / scale;
      };
      rep.decay = decay_iterate(u, Hs, d, dopt);
      rep.epsilon = rep.decay.epsilon;
    } else {
      try {
        rep.epsilon = measure_decay_check(d).epsilon;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InsufficientLevels) throw;
      }
    }
  }

  const double mean_density = region_mass / rep.region_measure;
  rep.c2 = rep.doubling.gamma * mean_density * std::pow(rep.c1 / 4.0, rep.doubling.beta - 1.0);
  const double bound = 2.0 * rep.C1 / rep.c1;
  for (std::size_t i = 0; i < grid.count(); ++i)
    if (region.mask[i] && H.usable(i) && H.norm[i] <= bound && H.matrix(i).determinant() > rep.c2)
      rep.good_measure += cell;
  return rep;
}

}  // namespace malab

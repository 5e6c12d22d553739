#include "malab/regularity_lab/lemmas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "malab/error.hpp"
#include "malab/sections/vitali.hpp"

namespace malab {

namespace {

// Eigenvalues of a symmetric 2x2 matrix, ascending.
std::pair<double, double> eigen2(const Mat& m) {
  const double a = m(0, 0), b = m(0, 1), c = m(1, 1);
  const double mean = 0.5 * (a + c), rad = std::hypot(0.5 * (a - c), b);
  return {mean - rad, mean + rad};
}

bool within(const std::pair<double, double>& ev, double C0) {
  return ev.first >= 1.0 / C0 && ev.second <= C0;
}

std::vector<std::size_t> core_nodes(const ConvexField& u, const Section& base, const Section& outer, double delta) {
  const Section small = section_with_slope(u, base, delta * base.height, {.allow_unresolved = true});
  return section_intersection(small, outer);
}

Section plane_section(const ConvexField& u, std::size_t start, const Vec& x0, const Vec& slope,
                      double base_value, double h) {
  Section tmpl;
  tmpl.center = start;
  tmpl.x0 = x0;
  tmpl.slope = slope;
  tmpl.base_value = base_value;
  return section_with_slope(u, tmpl, h, {.allow_unresolved = true});
}

}  // namespace

BasicReport lemma_basic_check(const ConvexField& u, const HessianField& H, const Section& base,
                              const Section& outer, double delta, int max_exponent) {
  BasicReport r;
  const double cell = u.grid.cell_volume();
  for (std::size_t i : base.nodes) {
    if (!H.usable(i)) continue;
    r.lhs += H.norm[i] * cell;
    const Mat m = H.matrix(i);
    r.laplacian_integral += m.trace() * cell;
  }
  const auto core = core_nodes(u, base, outer, delta);
  std::vector<std::pair<double, double>> ev;
  for (std::size_t i : core)
    if (H.usable(i)) ev.push_back(eigen2(H.matrix(i)));
  r.core_measure = static_cast<double>(core.size()) * cell;
  if (r.core_measure > 0.0) {
    r.low_threshold = 2.0 * r.laplacian_integral / r.core_measure;
    for (const auto& e : ev)
      if (std::max(std::abs(e.first), std::abs(e.second)) <= r.low_threshold) r.low_measure += cell;
  }
  for (int j = 0; j <= max_exponent; ++j) {
    const double C0 = std::ldexp(1.0, j);
    double good = 0.0;
    for (const auto& e : ev)
      if (within(e, C0)) good += cell;
    r.scan_C0.push_back(C0);
    r.scan_rhs.push_back(C0 * good);
    if (r.lhs <= C0 * good) {
      r.C0 = C0;
      r.good_measure = good;
      r.rhs = C0 * good;
      r.passed = true;
      return r;
    }
  }
  throw Error(ErrorCode::NoPassingConstant,
              "no C0 <= 2^" + std::to_string(max_exponent) + " balances lhs " + std::to_string(r.lhs));
}

ScReport lemma_basic_sc_check(const ConvexField& u, const HessianField& H, const Section& section,
                              const Section& outer, const Normalization& nz, const ScOptions& options) {
  ScReport r;
  r.alpha = nz.alpha;
  const double cell = u.grid.cell_volume();
  const double h = section.height;
  for (std::size_t i : section.nodes)
    if (H.usable(i)) r.lhs += H.norm[i] * cell;
  const auto core = core_nodes(u, section, outer, options.delta);
  for (int j = 0; j <= options.max_exponent && !r.passed; ++j) {
    const double C0 = std::ldexp(1.0, j);
    double good = 0.0;
    for (std::size_t i : core)
      if (H.usable(i) && H.norm[i] >= r.alpha / C0 && H.norm[i] <= C0 * r.alpha) good += cell;
    if (r.lhs <= C0 * r.alpha * good) {
      r.C0 = C0;
      r.good_measure = good;
      r.rhs = C0 * r.alpha * good;
      r.passed = true;
    }
  }
  if (!r.passed)
    throw Error(ErrorCode::NoPassingConstant, "no C0 balances the scaled inequality");

  // Rescaled route.
  const RescaledField rf = rescale_solution(u, section, nz, options.rescale);
  const HessianField Ht = discrete_hessian(rf.field);
  const Grid& gt = rf.field.grid;
  const std::size_t origin = *gt.nearest(Vec::Zero(2));
  const Section base_t = plane_section(rf.field, origin, Vec::Zero(2), Vec::Zero(2), 0.0, 1.0);
  const Vec yt = rf.to_rescaled(outer.x0);
  const double u_y = (outer.base_value - section.base_value - section.slope.dot(outer.x0 - section.x0)) / h;
  const auto y_node = gt.nearest(yt);
  const Section outer_t = plane_section(rf.field, y_node ? *y_node : origin, yt,
                                        rf.transport_slope(outer.slope), u_y, outer.height / h);
  r.rescaled = lemma_basic_check(rf.field, Ht, base_t, outer_t, options.delta, options.max_exponent);

  // Pulled-back route on the original grid.
  const Mat Ainv = nz.A.inverse();
  const double jac = 1.0 / h;  // h^{-n/2} with n = 2
  for (std::size_t i : section.nodes) {
    if (!H.usable(i)) continue;
    const Mat B = Ainv.transpose() * H.matrix(i) * Ainv;
    r.pulled_lhs += operator_norm(B) * cell * jac;
  }
  for (std::size_t i : core) {
    if (!H.usable(i)) continue;
    const Mat B = Ainv.transpose() * H.matrix(i) * Ainv;
    if (within(eigen2(B), r.rescaled.C0)) r.pulled_good += cell * jac;
  }
  const double unit_measure = section.measure * jac;
  r.lhs_difference = std::abs(r.pulled_lhs - r.rescaled.lhs) / std::max(r.pulled_lhs, 1e-300);
  r.good_difference = std::abs(r.pulled_good - r.rescaled.good_measure) / std::max(unit_measure, 1e-300);
  if (r.lhs_difference > options.tolerance || r.good_difference > options.tolerance)
    throw Error(ErrorCode::RescaleMismatch,
                "routes differ: lhs " + std::to_string(r.lhs_difference) + ", good set " +
                    std::to_string(r.good_difference));
  return r;
}

DecayReport decay_iterate(const ConvexField& u, const HessianField& H, const LevelDecomposition& d,
                          const DecayOptions& options) {
  DecayReport rep;
  rep.M = d.M;
  rep.C0 = options.C0 > 0.0 ? options.C0 : std::sqrt(d.M);
  rep.delta = options.delta;
  const double cell = u.grid.cell_volume();
  std::vector<std::uint8_t> allowed = options.allowed;
  if (allowed.empty()) allowed = u.interior;

  double range = 0.0;
  for (std::size_t i = 0; i < u.grid.count(); ++i)
    if (u.interior[i]) range = std::max(range, std::abs(u.values[i]));
  const double h_start = dyadic_floor(std::max(4.0 * range, 1e-300));

  auto admissible = [&](std::size_t x, double h) -> std::optional<Section> {
    // Single-node sections count, so admissibility is monotone in h.
    Section s = compute_section(u, x, h, {.allow_unresolved = true});
    if (s.touches_boundary) return std::nullopt;
    for (std::size_t i : s.nodes)
      if (!allowed[i]) return std::nullopt;
    return s;
  };
  auto alpha_of = [&](const Section& s) -> std::optional<double> {
    if (s.nodes.size() < 9) return std::nullopt;
    try {
      const Normalization nz = john_normalize(s);
      return options.size ? options.size(s, nz) : nz.alpha;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateSection) return std::nullopt;
      throw;
    }
  };

  bool valid = true;
  for (int k = 0; k + 1 < d.levels() && !d.sets[k + 1].empty(); ++k) {
    DecayStep st;
    st.k = k;
    st.energy = d.energy[k];
    st.energy_next = d.energy[k + 1];
    st.band_energy = st.energy - st.energy_next;
    st.targets = d.sets[k + 1].size();
    const double target = rep.C0 * std::pow(d.M, k);

    auto search = [&](std::size_t x) -> std::optional<double> {
      ++st.searched;
      // Largest admissible dyadic height: admissibility shrinks as h grows.
      int lo = 0, hi = 60;  // h_start * 2^-j
      if (!admissible(x, std::ldexp(h_start, -hi))) {
        ++st.excluded;
        return std::nullopt;
      }
      while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (admissible(x, std::ldexp(h_start, -mid))) hi = mid;
        else lo = mid;
      }
      const int top = hi;
      auto alpha_at = [&](int m) -> std::optional<double> {
        const auto s = admissible(x, std::ldexp(h_start, -(top + m)));
        return s ? alpha_of(*s) : std::nullopt;
      };
      const auto a_top = alpha_at(0);
      if (!a_top || *a_top >= target) {
        ++st.excluded;
        return std::nullopt;
      }
      int bottom = options.search_levels - 1;
      std::optional<double> a_bottom;
      while (bottom > 0 && !(a_bottom = alpha_at(bottom))) --bottom;
      if (!a_bottom || *a_bottom < target) {
        ++st.excluded;
        return std::nullopt;
      }
      int a = 0, b = bottom;  // alpha(a) < target <= alpha(b)
      while (b - a > 1) {
        const int mid = (a + b) / 2;
        const auto am = alpha_at(mid);
        if (am && *am >= target) b = mid;
        else a = mid;
      }
      return std::ldexp(h_start, -(top + b));
    };

    std::vector<std::size_t> order = d.sets[k + 1];
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t p, std::size_t q) { return H.norm[p] > H.norm[q]; });
    const VitaliCover cover = vitali_cover_search(u, order, search, options.delta);
    st.selected = cover.selected.size();
    for (const auto& e : cover.selected) {
      double a = target;
      if (const auto al = alpha_of(e.full)) a = *al;
      for (std::size_t i : e.full.nodes)
        if (H.usable(i)) st.cover_lhs += H.norm[i] * cell;
      double good = 0.0;
      for (std::size_t i : e.shrunk.nodes)
        if (H.usable(i) && H.norm[i] >= a / rep.C0 && H.norm[i] <= rep.C0 * a) good += cell;
      st.cover_rhs += rep.C0 * a * good;
    }
    st.constant = st.band_energy > 0.0 ? st.energy_next / st.band_energy
                                       : std::numeric_limits<double>::infinity();
    st.contraction = st.energy > 0.0 ? st.energy_next / st.energy : 0.0;
    if (static_cast<double>(st.excluded) >= 0.01 * static_cast<double>(st.targets)) valid = false;
    rep.steps.push_back(st);
  }
  rep.valid = valid;

  rep.C = 0.0;
  for (const auto& st : rep.steps) rep.C = std::max(rep.C, st.constant);
  rep.tau = std::isfinite(rep.C) ? 1.0 / (1.0 + rep.C) : 0.0;

  int nonempty = 0;
  while (nonempty < d.levels() && d.energy[nonempty] > 0.0) ++nonempty;
  rep.monotone = nonempty >= 3;
  for (int k = 0; k + 1 < nonempty; ++k)
    if (!(d.energy[k + 1] < d.energy[k])) rep.monotone = false;
  if (nonempty >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int k = 0; k < nonempty; ++k) {
      const double y = std::log(d.energy[k]);
      sx += k, sy += y, sxx += double(k) * k, sxy += k * y;
    }
    const double n = nonempty;
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / n;
    double ss = 0.0;
    for (int k = 0; k < nonempty; ++k) ss += std::pow(std::log(d.energy[k]) - icpt - slope * k, 2);
    rep.fit_rate = std::exp(slope);
    rep.fit_residual = std::sqrt(ss / n);
  }
  try {
    rep.epsilon = measure_decay_check(d).epsilon;
  } catch (const Error&) {
    rep.epsilon = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

}  // namespace malab

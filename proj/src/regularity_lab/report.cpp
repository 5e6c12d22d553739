#include "malab/regularity_lab/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace malab {

namespace {

// JSON has no NaN or infinity.
nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json to_json(const LevelDecomposition& d) {
  nlohmann::json levels = nlohmann::json::array();
  for (int k = 0; k < d.levels(); ++k)
    levels.push_back({{"k", k}, {"threshold", std::pow(d.M, k)}, {"nodes", d.sets[k].size()},
                      {"measure", d.measure[k]}, {"energy", d.energy[k]}});
  return {{"M", d.M}, {"levels", levels}, {"region_measure", d.region_measure}, {"unresolved", d.unresolved}};
}

nlohmann::json to_json(const TailReport& t) {
  return {{"K", t.K},           {"measure", t.measure},   {"constant", t.constant},
          {"uniform_c", t.uniform_c}, {"fitted_c", t.fitted_c}, {"fit_residual", t.fit_residual},
          {"slope", t.slope},   {"trivial", t.trivial}};
}

nlohmann::json to_json(const MeasureDecay& m) {
  return {{"epsilon", m.epsilon}, {"step_epsilon", m.step_epsilon}, {"levels", m.levels}};
}

nlohmann::json to_json(const W21Norm& w) {
  return {{"epsilon", w.epsilon}, {"direct", w.direct}, {"layer_cake", w.layer_cake},
          {"relative_difference", w.relative_difference}};
}

nlohmann::json to_json(const EpsilonEstimate& e) {
  return {{"epsilon", e.epsilon}, {"tested", e.tested}, {"norms", e.norms}, {"growth", e.growth}};
}

nlohmann::json to_json(const BasicReport& b) {
  return {{"lhs", b.lhs},
          {"C0", b.C0},
          {"passed", b.passed},
          {"good_measure", b.good_measure},
          {"rhs", b.rhs},
          {"core_measure", b.core_measure},
          {"laplacian_integral", b.laplacian_integral},
          {"low_threshold", b.low_threshold},
          {"low_measure", b.low_measure}};
}

nlohmann::json to_json(const ScReport& s) {
  return {{"alpha", s.alpha},
          {"lhs", s.lhs},
          {"C0", s.C0},
          {"passed", s.passed},
          {"good_measure", s.good_measure},
          {"rhs", s.rhs},
          {"rescaled", to_json(s.rescaled)},
          {"pulled_lhs", s.pulled_lhs},
          {"pulled_good", s.pulled_good},
          {"lhs_difference", s.lhs_difference},
          {"good_difference", s.good_difference}};
}

nlohmann::json to_json(const DecayReport& r) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : r.steps)
    steps.push_back({{"k", s.k},
                     {"targets", s.targets},
                     {"searched", s.searched},
                     {"excluded", s.excluded},
                     {"selected", s.selected},
                     {"energy", s.energy},
                     {"energy_next", s.energy_next},
                     {"band_energy", s.band_energy},
                     {"cover_lhs", s.cover_lhs},
                     {"cover_rhs", s.cover_rhs},
                     {"constant", number(s.constant)},
                     {"contraction", s.contraction}});
  return {{"M", r.M},
          {"tau", r.tau},
          {"epsilon", number(r.epsilon)},
          {"constants", {{"C0", r.C0}, {"C2", r.M}, {"C", number(r.C)}, {"delta", r.delta}}},
          {"fit_rate", r.fit_rate},
          {"fit_residual", r.fit_residual},
          {"monotone", r.monotone},
          {"valid", r.valid},
          {"steps", steps}};
}

std::string decay_csv(const LevelDecomposition& d) {
  std::ostringstream out;
  out.precision(12);
  out << "k,measure,energy,contraction\n";
  for (int k = 0; k < d.levels(); ++k) {
    out << k << ',' << d.measure[k] << ',' << d.energy[k] << ',';
    if (k + 1 < d.levels() && d.energy[k] > 0.0) out << d.energy[k + 1] / d.energy[k];
    out << '\n';
  }
  return out.str();
}

std::string loglog_svg(const std::string& title, const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < std::min(x.size(), y.size()); ++k)
    if (x[k] > 0.0 && y[k] > 0.0) pts.emplace_back(std::log10(x[k]), std::log10(y[k]));
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\">\n"
      << "<text x=\"20\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  if (!pts.empty()) {
    double x0 = pts[0].first, x1 = x0, y0 = pts[0].second, y1 = y0;
    for (const auto& [a, b] : pts) {
      x0 = std::min(x0, a), x1 = std::max(x1, a), y0 = std::min(y0, b), y1 = std::max(y1, b);
    }
    const double wx = std::max(x1 - x0, 1e-9), wy = std::max(y1 - y0, 1e-9);
    auto px = [&](double a) { return 60.0 + 540.0 * (a - x0) / wx; };
    auto py = [&](double b) { return 440.0 - 380.0 * (b - y0) / wy; };
    svg << "<rect x=\"60\" y=\"60\" width=\"540\" height=\"380\" fill=\"none\" stroke=\"#888\"/>\n"
        << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\" points=\"";
    for (const auto& [a, b] : pts) svg << px(a) << ',' << py(b) << ' ';
    svg << "\"/>\n";
    for (const auto& [a, b] : pts) svg << "<circle cx=\"" << px(a) << "\" cy=\"" << py(b) << "\" r=\"3\"/>\n";
    svg << "<text x=\"60\" y=\"465\" font-size=\"11\">log10 x: " << x0 << " .. " << x1
        << ", log10 y: " << y0 << " .. " << y1 << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace malab

#include "malab/sections/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace malab {

namespace {

nlohmann::json vec_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

nlohmann::json mat_json(const Mat& m) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

const char* method_name(NormalizationMethod m) {
  return m == NormalizationMethod::John ? "john" : "inertia";
}

}  // namespace

nlohmann::json to_json(const Section& s) {
  nlohmann::json hull = nlohmann::json::array();
  for (const Vec& p : s.boundary) hull.push_back(vec_json(p));
  return {{"center", s.center},         {"x0", vec_json(s.x0)},
          {"slope", vec_json(s.slope)}, {"height", s.height},
          {"nodes", s.nodes.size()},    {"measure", s.measure},
          {"touches_boundary", s.touches_boundary}, {"boundary", hull}};
}

nlohmann::json to_json(const Normalization& n) {
  return {{"method", method_name(n.method)}, {"A", mat_json(n.A)}, {"r_in", n.r_in},
          {"r_out", n.r_out},                 {"sigma", n.sigma},  {"alpha", n.alpha}};
}

nlohmann::json to_json(const EngulfingResult& r) {
  nlohmann::json props = nlohmann::json::array();
  for (int k = 0; k < 3; ++k) props.push_back({{"property", k + 1}, {"tested", r.tested[k]}, {"passed", r.passed[k]}});
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : r.failures)
    fails.push_back({{"property", f.property}, {"x1", f.pair.x1}, {"x2", f.pair.x2}, {"h1", f.pair.h1}, {"h2", f.pair.h2}});
  return {{"delta", r.delta}, {"properties", props}, {"failures", fails}};
}

nlohmann::json to_json(const VitaliCover& c) {
  nlohmann::json sel = nlohmann::json::array();
  for (const auto& e : c.selected)
    sel.push_back({{"center", e.full.center}, {"x0", vec_json(e.full.x0)}, {"height", e.full.height},
                   {"nodes", e.full.nodes.size()}, {"shrunk_nodes", e.shrunk.nodes.size()}});
  return {{"delta", c.delta}, {"targets", c.targets}, {"candidates", c.candidates}, {"selected", sel}};
}

std::string sections_svg(const DomainSpec& domain, const std::vector<const Section*>& outlines,
                         const std::vector<const Section*>& highlight) {
  double lo_x = -domain.radius, hi_x = domain.radius, lo_y = -domain.radius, hi_y = domain.radius;
  if (!domain.is_ball) {
    lo_x = lo_y = 1e300;
    hi_x = hi_y = -1e300;
    for (const Vec& v : domain.vertices) {
      lo_x = std::min(lo_x, v(0)), hi_x = std::max(hi_x, v(0));
      lo_y = std::min(lo_y, v(1)), hi_y = std::max(hi_y, v(1));
    }
  }
  const double pad = 0.025 * std::max(hi_x - lo_x, hi_y - lo_y);
  const double scale = 800.0 / (std::max(hi_x - lo_x, hi_y - lo_y) + 2 * pad);
  auto px = [&](const Vec& p) {
    std::ostringstream o;
    o << (p(0) - lo_x + pad) * scale << ',' << (hi_y + pad - p(1)) * scale;
    return o.str();
  };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">\n";
  if (domain.is_ball) {
    const Vec c = Vec::Zero(2);
    const std::string centre = px(c);
    svg << "<circle cx=\"" << centre.substr(0, centre.find(',')) << "\" cy=\""
        << centre.substr(centre.find(',') + 1) << "\" r=\"" << domain.radius * scale
        << "\" fill=\"none\" stroke=\"black\"/>\n";
  } else {
    svg << "<polygon fill=\"none\" stroke=\"black\" points=\"";
    for (const Vec& v : domain.vertices) svg << px(v) << ' ';
    svg << "\"/>\n";
  }
  auto poly = [&](const Section& s, const char* style) {
    svg << "<polygon " << style << " points=\"";
    for (const Vec& p : s.boundary) svg << px(p) << ' ';
    svg << "\"/>\n";
  };
  for (const Section* s : highlight) poly(*s, "fill=\"#4a90d9\" fill-opacity=\"0.35\" stroke=\"none\"");
  for (const Section* s : outlines) poly(*s, "fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1\"");
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace malab

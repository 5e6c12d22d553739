#include "malab/degenerate_mu/measure.hpp"

#include <cmath>

#include "malab/error.hpp"

namespace malab {

namespace {

using nlohmann::json;

json polynomial_json(const Polynomial& p, int dim) {
  json out = json::array();
  for (const Monomial& m : p.terms) {
    json powers = json::array();
    for (int a = 0; a < dim; ++a) powers.push_back(m.powers[a]);
    out.push_back({{"c", m.coefficient}, {"powers", powers}});
  }
  return out;
}

Polynomial polynomial_from_json(const json& j, int dim) {
  if (!j.is_array()) throw Error(ErrorCode::ConfigError, "polynomial must be an array of monomials");
  Polynomial p;
  for (const json& m : j) {
    Monomial mono;
    mono.coefficient = m.at("c").get<double>();
    const json& powers = m.at("powers");
    if (!powers.is_array() || static_cast<int>(powers.size()) != dim)
      throw Error(ErrorCode::ConfigError, "monomial powers must have one entry per dimension");
    for (int a = 0; a < dim; ++a) {
      mono.powers[a] = powers[a].get<int>();
      if (mono.powers[a] < 0) throw Error(ErrorCode::ConfigError, "negative monomial power");
    }
    p.terms.push_back(mono);
  }
  return p;
}

// 3-point Gauss-Legendre on [-1/2, 1/2].
constexpr double kGaussNode = 0.38729833462074168852;  // sqrt(3/5) / 2
constexpr double kGaussPoints[3] = {-kGaussNode, 0.0, kGaussNode};
constexpr double kGaussWeights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

}  // namespace

double Polynomial::operator()(const Vec& x) const {
  double s = 0.0;
  for (const Monomial& m : terms) {
    double v = m.coefficient;
    for (int a = 0; a < x.size(); ++a)
      for (int k = 0; k < m.powers[a]; ++k) v *= x(a);
    s += v;
  }
  return s;
}

bool Polynomial::identically_zero() const {
  for (const Monomial& m : terms)
    if (m.coefficient != 0.0) return false;
  return true;
}

bool Polynomial::constant() const {
  for (const Monomial& m : terms)
    if (m.coefficient != 0.0 && (m.powers[0] || m.powers[1] || m.powers[2])) return false;
  return true;
}

Polynomial Polynomial::one() { return Polynomial{{Monomial{1.0, {0, 0, 0}}}}; }

Polynomial Polynomial::coordinate(int axis) {
  Monomial m{1.0, {0, 0, 0}};
  m.powers[axis] = 1;
  return Polynomial{{m}};
}

double MeasureTerm::operator()(const Vec& x) const {
  const double gv = g ? g(x) : 0.5 * (g_lower + g_upper);
  if (exponent == 0.0) return gv;
  return gv * std::pow(std::abs(P(x)), exponent);
}

Vec MeasureSpec::pull_back(const Vec& x) const {
  if (map.size() == 0) return x;
  return map.partialPivLu().solve(x - shift);
}

double MeasureSpec::density(const Vec& y) const {
  const Vec x = pull_back(y);
  double s = 0.0;
  for (const MeasureTerm& t : terms) s += t(x);
  if (modifier) s *= modifier(x);
  return scale * s;
}

bool MeasureSpec::flagged() const {
  for (const MeasureTerm& t : terms)
    if (t.bounds_only() && t.g_lower != t.g_upper) return true;
  return false;
}

void MeasureSpec::validate() const {
  if (dim != 2 && dim != 3) throw Error(ErrorCode::ConfigError, "measure dimension must be 2 or 3");
  if (terms.empty()) throw Error(ErrorCode::ConfigError, "measure needs at least one term");
  if (!(scale > 0.0)) throw Error(ErrorCode::ConfigError, "measure scale must be positive");
  for (const MeasureTerm& t : terms) {
    if (!(t.g_lower > 0.0) || !(t.g_upper >= t.g_lower))
      throw Error(ErrorCode::ConfigError, "term bounds need 0 < lower <= upper");
    if (!(t.exponent >= 0.0)) throw Error(ErrorCode::ConfigError, "term exponent must be nonnegative");
    if (t.P.identically_zero()) throw Error(ErrorCode::ConfigError, "term polynomial is identically zero");
  }
  if (map.size() != 0 && std::abs(std::abs(map.determinant()) - 1.0) > 1e-9)
    throw Error(ErrorCode::ConfigError, "push-forward map must be unimodular");
}

MeasureSpec MeasureSpec::pushed_forward(const Mat& T, const Vec& b) const {
  MeasureSpec out = *this;
  if (map.size() == 0) {
    out.map = T;
    out.shift = b;
  } else {
    out.map = T * map;
    out.shift = T * shift + b;
  }
  out.validate();
  return out;
}

nlohmann::json MeasureSpec::to_json() const {
  json terms_json = json::array();
  for (const MeasureTerm& t : terms) {
    json g = {{"lower", t.g_lower}, {"upper", t.g_upper}, {"explicit", !t.bounds_only()}};
    terms_json.push_back({{"polynomial", polynomial_json(t.P, dim)}, {"exponent", t.exponent}, {"g", g}});
  }
  json j = {{"dim", dim}, {"terms", terms_json}, {"scale", scale}, {"flagged", flagged()}};
  if (modifier) j["modifier"] = true;
  if (map.size() != 0) {
    json m = json::array();
    for (int r = 0; r < map.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < map.cols(); ++c) row.push_back(map(r, c));
      m.push_back(row);
    }
    j["map"] = m;
    j["shift"] = std::vector<double>(shift.data(), shift.data() + shift.size());
  }
  return j;
}

MeasureSpec MeasureSpec::from_json(const nlohmann::json& j) {
  try {
    MeasureSpec s;
    s.dim = j.value("dim", 2);
    s.scale = j.value("scale", 1.0);
    for (const json& tj : j.at("terms")) {
      MeasureTerm t;
      t.P = tj.contains("polynomial") ? polynomial_from_json(tj.at("polynomial"), s.dim) : Polynomial::one();
      t.exponent = tj.value("exponent", 0.0);
      if (tj.contains("g")) {
        const json& g = tj.at("g");
        t.g_lower = g.value("lower", 1.0);
        t.g_upper = g.value("upper", t.g_lower);
        if (g.contains("polynomial")) {
          const Polynomial gp = polynomial_from_json(g.at("polynomial"), s.dim);
          const double lo = t.g_lower, hi = t.g_upper;
          t.g = [gp, lo, hi](const Vec& x) {
            const double v = gp(x);
            if (v < lo * (1.0 - 1e-12) || v > hi * (1.0 + 1e-12))
              throw Error(ErrorCode::ConfigError, "explicit g leaves its bounds");
            return v;
          };
        }
      }
      s.terms.push_back(std::move(t));
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("measure spec: ") + e.what());
  }
}

MeasureSpec MeasureSpec::lebesgue(int dim) {
  MeasureSpec s;
  s.dim = dim;
  s.terms.push_back(MeasureTerm{});
  return s;
}

MeasureSpec MeasureSpec::coordinate_power(int dim, int axis, double alpha) {
  MeasureSpec s;
  s.dim = dim;
  MeasureTerm t;
  t.P = Polynomial::coordinate(axis);
  t.exponent = alpha;
  s.terms.push_back(t);
  return s;
}

double MeasureField::of(const std::vector<std::size_t>& nodes) const {
  double s = 0.0;
  for (std::size_t i : nodes)
    if (inside[i]) s += mass[i];
  return s;
}

double MeasureField::of_mask(const std::vector<std::uint8_t>& mask) const {
  double s = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i] && inside[i]) s += mass[i];
  return s;
}

MeasureField measure_field(const MeasureSpec& spec, const Grid& grid, const DomainSpec& domain,
                           const Mat& map, const Vec& shift) {
  if (grid.dim() != spec.dim) throw Error(ErrorCode::Unsupported, "measure and grid dimensions differ");
  MeasureField f;
  f.grid = grid;
  f.mass.assign(grid.count(), 0.0);
  f.inside.assign(grid.count(), 0);
  const int n = grid.dim();
  const double s = grid.spacing(), vol = grid.cell_volume();
  const int kz = n == 3 ? 3 : 1;
  for (std::size_t i = 0; i < grid.count(); ++i) {
    const Vec x = grid.point(i);
    if (domain.signed_distance(x) > 0.0) continue;
    f.inside[i] = 1;
    double m = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < kz; ++c) {
          Vec q = x;
          q(0) += s * kGaussPoints[a];
          q(1) += s * kGaussPoints[b];
          double w = kGaussWeights[a] * kGaussWeights[b];
          if (n == 3) {
            q(2) += s * kGaussPoints[c];
            w *= kGaussWeights[c];
          }
          if (map.size() != 0) q = map * q + shift;
          m += w * spec.density(q);
        }
    f.mass[i] = m * vol;
    f.total += f.mass[i];
  }
  return f;
}

double mu_of_set(const MeasureSpec& spec, const Grid& grid, const DomainSpec& domain,
                 const std::vector<std::uint8_t>& mask) {
  return measure_field(spec, grid, domain).of_mask(mask);
}

MeasureSpec normalize_mass(const MeasureSpec& spec, const Grid& grid, const DomainSpec& domain) {
  const double total = measure_field(spec, grid, domain).total;
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroMuMass, "measure vanishes on the domain");
  MeasureSpec out = spec;
  out.scale = spec.scale / total;
  return out;
}

}  // namespace malab

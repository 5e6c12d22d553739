#include "malab/ma_solver/wang.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>

#include <boost/numeric/odeint.hpp>

#include "malab/error.hpp"

namespace malab {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<double, 2>;

struct Blowup {};

/// y'' = (F + y'^2) / (c (1 + c) y + c (1 - c) t y'), the profile equation of
/// u = S^{1+c} y(T S^{-c}) with det D^2u = F.
struct ProfileOde {
  double c;
  double F;
  void operator()(const State& s, State& ds, double t) const {
    const double den = c * (1.0 + c) * s[0] + c * (1.0 - c) * t * s[1];
    if (!(den > 0.0) || !std::isfinite(s[0]) || !std::isfinite(s[1])) throw Blowup{};
    ds[0] = s[1];
    ds[1] = (F + s[1] * s[1]) / den;
  }
  double second(double t, double y, double dy) const {
    return (F + dy * dy) / (c * (1.0 + c) * y + c * (1.0 - c) * t * dy);
  }
};

State integrate(const ProfileOde& ode, State s, double t0, double t1, double tol) {
  if (t0 == t1) return s;
  auto stepper = odeint::make_controlled(1e-14, tol, odeint::runge_kutta_dopri5<State>());
  const double dt0 = 1e-3 * (t1 - t0);
  odeint::integrate_adaptive(stepper, ode, s, t0, t1, dt0);
  return s;
}

/// Tabulates the ODE solution at `times` (monotone, starting at the initial time).
ProfileTable tabulate(const ProfileOde& ode, State s, const std::vector<double>& times, double tol) {
  ProfileTable table;
  std::vector<std::array<double, 3>> rows;
  auto stepper = odeint::make_dense_output(1e-14, tol, odeint::runge_kutta_dopri5<State>());
  const double dt0 = 1e-3 * (times.back() - times.front());
  odeint::integrate_times(stepper, ode, s, times.begin(), times.end(), dt0,
                          [&](const State& x, double t) { rows.push_back({t, x[0], x[1]}); });
  if (rows.front()[0] > rows.back()[0]) std::reverse(rows.begin(), rows.end());
  for (const auto& r : rows) {
    table.t.push_back(r[0]);
    table.v.push_back(r[1]);
    table.dv.push_back(r[2]);
    table.ddv.push_back(ode.second(r[0], r[1], r[2]));
  }
  return table;
}

std::vector<double> uniform_times(double lo, double hi, int count) {
  std::vector<double> t(count);
  for (int i = 0; i < count; ++i) t[i] = lo + (hi - lo) * i / (count - 1);
  return t;
}

/// psi(eta1), psi'(eta1) obtained from the phi-chart through psi(eta) = eta^m phi(eta^{-a}).
State glue_state(const State& phi_end, double xi1, double eta1, double a) {
  const double m = 1.0 + a;
  return {std::pow(eta1, m) * phi_end[0], m * phi_end[0] / xi1 - a * phi_end[1]};
}

struct Shot {
  double eta1;
  double xi1;
  State phi_end;
  State psi0;
  State psi1;
  double slope;  // psi'(0) * eta1 / psi(eta1)
};

std::optional<Shot> shoot(double alpha, double kappa, double eta1, double tol) {
  const double a = 1.0 / alpha;
  Shot s;
  s.eta1 = eta1;
  s.xi1 = std::pow(eta1, -a);
  try {
    s.phi_end = integrate(ProfileOde{a, 1.0}, State{1.0, 0.0}, 0.0, s.xi1, tol);
    s.psi1 = glue_state(s.phi_end, s.xi1, eta1, a);
    s.psi0 = integrate(ProfileOde{alpha, kappa}, s.psi1, eta1, 0.0, tol);
  } catch (const Blowup&) {
    return std::nullopt;
  } catch (const odeint::step_adjustment_error&) {
    return std::nullopt;
  } catch (const odeint::no_progress_error&) {
    return std::nullopt;
  }
  if (!(s.psi0[0] > 0.0) || !std::isfinite(s.psi0[1])) return std::nullopt;
  s.slope = s.psi0[1] * eta1 / s.psi1[0];
  return s;
}

/// Second derivatives (u_SS, u_ST, u_TT) of u = S^{1+c} g(tau), tau = T S^{-c}.
std::array<double, 3> chart_hessian(double S, double c, double tau, double g, double g1, double g2) {
  return {std::pow(S, c - 1.0) * (c * (1.0 + c) * (g - tau * g1) + c * c * tau * tau * g2),
          g1 - c * tau * g2, std::pow(S, 1.0 - c) * g2};
}

}  // namespace

void ProfileTable::eval(double x, double& value, double& d1, double& d2) const {
  x = std::clamp(x, t.front(), t.back());
  std::size_t k = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), x) - t.begin());
  k = std::clamp<std::size_t>(k, 1, t.size() - 1) - 1;
  const double h = t[k + 1] - t[k];
  const double s = (x - t[k]) / h;
  const double y0 = v[k], y1 = v[k + 1];
  const double p0 = h * dv[k], p1 = h * dv[k + 1];
  const double q0 = h * h * ddv[k], q1 = h * h * ddv[k + 1];
  const double c0 = y0, c1 = p0, c2 = 0.5 * q0;
  const double c3 = 10 * (y1 - y0) - 6 * p0 - 4 * p1 - 1.5 * q0 + 0.5 * q1;
  const double c4 = -15 * (y1 - y0) + 8 * p0 + 7 * p1 + 1.5 * q0 - q1;
  const double c5 = 6 * (y1 - y0) - 3 * p0 - 3 * p1 - 0.5 * q0 + 0.5 * q1;
  value = c0 + s * (c1 + s * (c2 + s * (c3 + s * (c4 + s * c5))));
  d1 = (c1 + s * (2 * c2 + s * (3 * c3 + s * (4 * c4 + s * 5 * c5)))) / h;
  d2 = (2 * c2 + s * (6 * c3 + s * (12 * c4 + s * 20 * c5))) / (h * h);
}

double WangSolution::value(double x, double y) const {
  if (degenerate) return amplitude * (0.25 * x * x + y * y);
  const double X = std::abs(balance * x), Y = std::abs(y / balance);
  if (X == 0.0 && Y == 0.0) return 0.0;
  const double a = 1.0 / alpha;
  double g, g1, g2;
  if (X <= xi1 * std::pow(Y, a)) {
    phi.eval(X * std::pow(Y, -a), g, g1, g2);
    return amplitude * std::pow(Y, 1.0 + a) * g;
  }
  psi.eval(Y * std::pow(X, -alpha), g, g1, g2);
  return amplitude * std::pow(X, 1.0 + alpha) * g;
}

Mat WangSolution::hessian(double x, double y) const {
  Mat h(2, 2);
  if (degenerate) {
    h << 0.5, 0.0, 0.0, 2.0;
    return amplitude * h;
  }
  const double X = std::abs(balance * x), Y = std::abs(y / balance);
  const double sign = (x < 0) != (y < 0) ? -1.0 : 1.0;
  const double a = 1.0 / alpha;
  double g, g1, g2;
  // Second derivatives come from the profile equation, so det D^2u is exact in each chart.
  if (X <= xi1 * std::pow(Y, a)) {
    const double tau = X * std::pow(Y, -a);
    phi.eval(tau, g, g1, g2);
    g2 = ProfileOde{a, 1.0}.second(tau, g, g1);
    const auto d = chart_hessian(Y, a, tau, g, g1, g2);
    h << d[2], sign * d[1], sign * d[1], d[0];
  } else {
    const double tau = Y * std::pow(X, -alpha);
    psi.eval(tau, g, g1, g2);
    g2 = ProfileOde{alpha, kappa}.second(tau, g, g1);
    const auto d = chart_hessian(X, alpha, tau, g, g1, g2);
    h << d[0], sign * d[1], sign * d[1], d[2];
  }
  // Chain rule for (x, y) -> (balance x, y / balance).
  h(0, 0) *= balance * balance;
  h(1, 1) /= balance * balance;
  return amplitude * h;
}

double WangSolution::tail_exponent() const { return (1.0 + alpha) / (alpha - 1.0); }

WangSolution WangSolution::scaled(double amp) const {
  WangSolution w = *this;
  w.amplitude = amp;
  w.lambda_w = lambda_w * amp * amp / (amplitude * amplitude);
  w.Lambda_w = Lambda_w * amp * amp / (amplitude * amplitude);
  return w;
}

nlohmann::json WangSolution::to_json() const {
  nlohmann::json j;
  j["alpha"] = alpha;
  j["kappa"] = kappa;
  j["eta1"] = eta1;
  j["xi1"] = xi1;
  j["amplitude"] = amplitude;
  j["balance"] = balance;
  j["degenerate"] = degenerate;
  j["lambda_w"] = lambda_w;
  j["Lambda_w"] = Lambda_w;
  j["scaling_defect"] = scaling_defect;
  j["glue_slope"] = glue_slope;
  j["tail_exponent"] = degenerate ? nlohmann::json(nullptr) : nlohmann::json(tail_exponent());
  return j;
}

WangSolution wang_construct(double alpha, const WangOptions& options) {
  if (!(alpha >= 1.0)) throw Error(ErrorCode::InvalidExponent, "Wang exponent must be at least 1");
  WangSolution w;
  w.alpha = alpha;
  if (alpha == 1.0) {
    w.degenerate = true;
    w.lambda_w = w.Lambda_w = 1.0;
    return w;
  }

  const double tol = options.ode_tol;
  std::optional<Shot> found;
  bool any_shot = false;
  for (double kappa = 4.0; kappa <= options.kappa_max && !found; kappa *= 4.0) {
    std::optional<Shot> prev;
    for (double le = options.log10_eta_min; le <= options.log10_eta_max + 1e-12;
         le += options.log10_eta_step) {
      const auto cur = shoot(alpha, kappa, std::pow(10.0, le), tol);
      any_shot = any_shot || cur.has_value();
      if (prev && cur && (prev->slope < 0) != (cur->slope < 0)) {
        double lo = std::log(prev->eta1), hi = std::log(cur->eta1);
        const bool lo_negative = prev->slope < 0;
        Shot best = *cur;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
          const double mid = 0.5 * (lo + hi);
          const auto m = shoot(alpha, kappa, std::exp(mid), tol);
          if (!m) break;
          best = *m;
          if ((m->slope < 0) == lo_negative) lo = mid; else hi = mid;
        }
        w.kappa = kappa;
        found = best;
        break;
      }
      prev = cur;
    }
  }
  if (!any_shot) throw Error(ErrorCode::ProfileBlowup, "profile integration failed for every trial");
  if (!found) throw Error(ErrorCode::PinchFailure, "no C^1 gluing found up to kappa_max");

  const double a = 1.0 / alpha;
  w.eta1 = found->eta1;
  w.xi1 = found->xi1;
  w.glue_slope = std::abs(found->slope);
  try {
    w.phi = tabulate(ProfileOde{a, 1.0}, State{1.0, 0.0}, uniform_times(0.0, w.xi1, 2001), tol);
    std::vector<double> times;
    const double knee = std::min(1.0, w.eta1);
    for (double t : uniform_times(0.0, knee, 2001)) times.push_back(t);
    if (w.eta1 > 1.0) {
      const int per_decade = 200;
      const int count = std::max(2, static_cast<int>(std::ceil(std::log10(w.eta1) * per_decade)) + 1);
      for (int i = 1; i < count; ++i) times.push_back(std::pow(w.eta1, static_cast<double>(i) / (count - 1)));
    }
    std::reverse(times.begin(), times.end());
    w.psi = tabulate(ProfileOde{alpha, w.kappa}, found->psi1, times, tol);
  } catch (const Blowup&) {
    throw Error(ErrorCode::ProfileBlowup, "profile integration failed on the glued solution");
  }
  if (w.glue_slope > 1e-6) throw Error(ErrorCode::PinchFailure, "gluing left a kink on the x axis");

  double psi0, d1, d2;
  w.psi.eval(0.0, psi0, d1, d2);
  w.balance = std::pow(psi0, -1.0 / (1.0 + alpha));

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> coord(-1.0, 1.0), scale(0.25, 1.0);
  w.lambda_w = std::numeric_limits<double>::infinity();
  w.Lambda_w = 0.0;
  for (int k = 0; k < options.pinch_samples; ++k) {
    const double x = coord(rng), y = coord(rng), t = scale(rng);
    if (x == 0.0 && y == 0.0) continue;
    const double det = w.hessian(x, y).determinant();
    w.lambda_w = std::min(w.lambda_w, det);
    w.Lambda_w = std::max(w.Lambda_w, det);
    const double u = w.value(x, y);
    const double defect = std::abs(w.value(t * x, std::pow(t, alpha) * y) - std::pow(t, 1.0 + alpha) * u);
    w.scaling_defect = std::max(w.scaling_defect, defect / std::abs(u));
  }
  if (!(w.lambda_w > 0.0)) throw Error(ErrorCode::PinchFailure, "Monge-Ampere density is not bounded below");
  return w;
}

ConvexField wang_field(const WangSolution& w, const Grid& grid, const DomainSpec& domain) {
  return ConvexField::sample(grid, domain, [&](const Vec& p) { return w.value(p(0), p(1)); });
}

}  // namespace malab

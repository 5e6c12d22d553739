#include "malab/ma_solver/rhs.hpp"

#include <cmath>
#include <numbers>

namespace malab {

RhsSpec RhsSpec::constant(double c) {
  RhsSpec r;
  r.density = [c](const Vec&) { return c; };
  r.lambda = r.Lambda = c;
  r.label = "constant";
  return r;
}

RhsSpec RhsSpec::oscillatory(double amplitude, int cells) {
  RhsSpec r;
  const double k = std::numbers::pi * cells;
  r.density = [amplitude, k](const Vec& x) {
    double s = 1.0;
    for (int a = 0; a < x.size(); ++a) s *= std::sin(k * x(a));
    return 1.0 + amplitude * (s > 0 ? 1.0 : (s < 0 ? -1.0 : 0.0));
  };
  r.lambda = 1.0 - amplitude;
  r.Lambda = 1.0 + amplitude;
  r.label = "oscillatory";
  return r;
}

RhsSpec RhsSpec::from_density(std::function<double(const Vec&)> f, double lambda, double Lambda,
                              std::string label) {
  RhsSpec r;
  r.density = std::move(f);
  r.lambda = lambda;
  r.Lambda = Lambda;
  r.label = std::move(label);
  return r;
}

RhsSpec RhsSpec::from_measure(std::function<double(const Vec&)> f, double Lambda, std::string label) {
  RhsSpec r;
  r.density = std::move(f);
  r.lambda = 0.0;
  r.Lambda = Lambda;
  r.measure = true;
  r.label = std::move(label);
  return r;
}

}  // namespace malab

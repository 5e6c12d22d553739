#include "malab/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "malab/error.hpp"

namespace malab {

namespace {

double cross(const Vec& o, const Vec& a, const Vec& b) {
  return (a(0) - o(0)) * (b(1) - o(1)) - (a(1) - o(1)) * (b(0) - o(0));
}

}  // namespace

std::vector<Vec> convex_hull_2d(std::vector<Vec> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
    return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec& a, const Vec& b) { return a(0) == b(0) && a(1) == b(1); }),
            pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

Ellipsoid min_volume_enclosing_ellipsoid(const std::vector<Vec>& points, double tol,
                                         int max_iterations) {
  const std::size_t count = points.size();
  if (count == 0) throw Error(ErrorCode::DegenerateSection, "no points for ellipsoid");
  const int n = static_cast<int>(points.front().size());
  if (count < static_cast<std::size_t>(n + 1))
    throw Error(ErrorCode::DegenerateSection, "fewer than n+1 points");

  Eigen::MatrixXd lifted(n + 1, count);
  for (std::size_t j = 0; j < count; ++j) {
    lifted.block(0, j, n, 1) = points[j];
    lifted(n, j) = 1.0;
  }
  Eigen::VectorXd weight = Eigen::VectorXd::Constant(count, 1.0 / count);
  const double target = n + 1.0;

  Eigen::VectorXd m(count);
  for (int iter = 0; iter < max_iterations; ++iter) {
    const Eigen::MatrixXd x = lifted * weight.asDiagonal() * lifted.transpose();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(x);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 1e-14 * x.norm()))
      throw Error(ErrorCode::DegenerateSection, "points do not span the space");
    const Eigen::MatrixXd solved = ldlt.solve(lifted);
    m = (lifted.array() * solved.array()).colwise().sum().transpose();

    Eigen::Index up = 0;
    m.maxCoeff(&up);
    Eigen::Index down = -1;
    for (std::size_t j = 0; j < count; ++j) {
      if (weight(j) > 0 && (down < 0 || m(j) < m(down))) down = static_cast<Eigen::Index>(j);
    }
    const double eps_up = m(up) / target - 1.0;
    const double eps_down = 1.0 - m(down) / target;
    if (eps_up <= tol && eps_down <= tol) break;

    if (eps_up > eps_down) {
      const double step = (m(up) - target) / (target * (m(up) - 1.0));
      weight *= (1.0 - step);
      weight(up) += step;
    } else {
      double step = (m(down) - target) / (target * (m(down) - 1.0));
      step = std::max(step, -weight(down) / (1.0 - weight(down)));
      weight *= (1.0 - step);
      weight(down) += step;
      if (weight(down) < 0) weight(down) = 0;
    }
  }

  Eigen::MatrixXd pts = lifted.topRows(n);
  Vec centre = pts * weight;
  Mat scatter = pts * weight.asDiagonal() * pts.transpose() - centre * centre.transpose();
  Mat shape = scatter.inverse() / n;
  return Ellipsoid{centre, shape};
}

Mat unit_det_rounding(const Mat& shape) {
  const int n = static_cast<int>(shape.rows());
  Eigen::SelfAdjointEigenSolver<Mat> eig(shape);
  const Vec lambda = eig.eigenvalues();
  double log_geo = 0.0;
  for (int i = 0; i < n; ++i) log_geo += std::log(lambda(i));
  const double geo = std::exp(log_geo / n);
  Vec root(n);
  for (int i = 0; i < n; ++i) root(i) = std::sqrt(lambda(i) / geo);
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double rounded_radius(const Mat& shape) {
  const int n = static_cast<int>(shape.rows());
  return std::pow(shape.determinant(), -1.0 / (2.0 * n));
}

double symmetric_norm(const Mat& m) {
  if (m.rows() == 2) {
    const double half_trace = 0.5 * (m(0, 0) + m(1, 1));
    const double half_diff = 0.5 * (m(0, 0) - m(1, 1));
    const double off = 0.5 * (m(0, 1) + m(1, 0));
    return std::abs(half_trace) + std::sqrt(half_diff * half_diff + off * off);
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace malab

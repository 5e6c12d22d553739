#include "malab/sections/engulfing.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "malab/error.hpp"

namespace malab {

namespace {

std::optional<Section> compact_section(const ConvexField& u, std::size_t c, double h) {
  try {
    Section s = compute_section(u, c, h);
    if (s.touches_boundary) return std::nullopt;
    return s;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptySection) return std::nullopt;
    throw;
  }
}

Section shrunk(const ConvexField& u, std::size_t c, double h) {
  return compute_section(u, c, h, {.allow_unresolved = true});
}

}  // namespace

std::vector<SectionPair> sample_section_pairs(const ConvexField& u, const EngulfingOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> interior;
  for (std::size_t i = 0; i < u.grid.count(); ++i)
    if (u.interior[i]) interior.push_back(i);
  std::vector<SectionPair> pairs;
  if (interior.empty()) return pairs;
  std::uniform_int_distribution<std::size_t> pick(0, interior.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double range = 0.0;
  for (std::size_t i : interior) range = std::max(range, std::abs(u.values[i]));
  const double h_floor = 1e-12 * std::max(1.0, range);
  const double h_start = std::ldexp(std::max(range, 1e-300), -24);

  const int attempts = 20 * options.pairs;
  for (int a = 0; a < attempts && static_cast<int>(pairs.size()) < options.pairs; ++a) {
    const std::size_t x2 = interior[pick(rng)];
    // Largest dyadic h with S_{2h}(x2) compact.
    double h = 0.0;
    for (double trial = h_start; trial < 4.0 * range; trial *= 2.0) {
      if (compact_section(u, x2, 2.0 * trial)) h = trial;
      else if (h > 0.0) break;
    }
    if (h <= h_floor) continue;
    const double h2 = h * std::pow(options.height_range, -unit(rng));
    const auto outer = compact_section(u, x2, h2);
    if (!outer || outer->nodes.size() < 9) continue;
    const std::size_t x1 = outer->nodes[std::uniform_int_distribution<std::size_t>(0, outer->nodes.size() - 1)(rng)];
    const double h1 = h2 * std::pow(options.ratio_range, -unit(rng));
    const auto inner = compact_section(u, x1, h1);
    if (!inner || inner->nodes.size() < 5) continue;
    pairs.push_back({x1, x2, h1, h2});
  }
  return pairs;
}

EngulfingResult engulfing_check(const ConvexField& u, double delta, const std::vector<SectionPair>& pairs) {
  EngulfingResult r;
  r.delta = delta;
  for (const SectionPair& p : pairs) {
    const Section s1 = compute_section(u, p.x1, p.h1);
    const Section s2 = compute_section(u, p.x2, p.h2);
    const Section d1 = shrunk(u, p.x1, delta * p.h1);
    const Section d2 = shrunk(u, p.x2, delta * p.h2);

    if (sections_intersect(d1, d2)) {
      ++r.tested[0];
      if (section_subset(d1, s2)) ++r.passed[0];
      else r.failures.push_back({1, p});
    }

    {
      ++r.tested[1];
      // Candidate centres: the nodes deepest inside both sections.
      const auto common = section_intersection(s1, s2);
      std::vector<std::pair<double, std::size_t>> depth;
      depth.reserve(common.size());
      for (std::size_t z : common)
        depth.emplace_back(std::min((p.h1 - s1.excess(u, z)) / p.h1, (p.h2 - s2.excess(u, z)) / p.h2), z);
      const std::size_t tries = std::min<std::size_t>(8, depth.size());
      std::partial_sort(depth.begin(), depth.begin() + tries, depth.end(),
                        [](const auto& a, const auto& b) { return a.first > b.first; });
      bool ok = false;
      for (std::size_t k = 0; k < tries && !ok; ++k) {
        const Section dz = shrunk(u, depth[k].second, delta * p.h1);
        ok = section_subset(dz, s1) && section_subset(dz, s2);
      }
      if (ok) ++r.passed[1];
      else r.failures.push_back({2, p});
    }

    {
      ++r.tested[2];
      const Section big = compute_section(u, p.x2, 2.0 * p.h2);
      const Section d12 = shrunk(u, p.x1, delta * p.h2);
      if (section_subset(d12, big)) ++r.passed[2];
      else r.failures.push_back({3, p});
    }
  }
  return r;
}

DeltaEstimate estimate_delta(const ConvexField& u, const EngulfingOptions& options) {
  const auto pairs = sample_section_pairs(u, options);
  if (pairs.empty()) throw Error(ErrorCode::NoPassingDelta, "no resolvable section pairs");
  auto run = [&](int k) { return engulfing_check(u, std::ldexp(1.0, -k), pairs); };
  EngulfingResult best = run(options.max_exponent);
  if (!best.all_passed())
    throw Error(ErrorCode::NoPassingDelta,
                "delta = 2^-" + std::to_string(options.max_exponent) + " fails on " +
                    std::to_string(best.failures.size()) + " pairs");
  int lo = options.max_exponent, hi = options.min_exponent - 1;  // lo passes; hi is untested
  EngulfingResult top = run(options.min_exponent);
  if (top.all_passed()) return {top.delta, top, pairs.size()};
  hi = options.min_exponent;  // fails
  while (lo - hi > 1) {
    const int mid = (lo + hi) / 2;
    EngulfingResult r = run(mid);
    if (r.all_passed()) {
      lo = mid;
      best = std::move(r);
    } else {
      hi = mid;
    }
  }
  return {best.delta, best, pairs.size()};
}

}  // namespace malab

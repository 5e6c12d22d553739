#include "malab/sections/vitali.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "malab/error.hpp"

namespace malab {

double dyadic_floor(double h) {
  int e;
  std::frexp(h, &e);
  return std::ldexp(1.0, e - 1);
}

namespace {

VitaliCover build_cover(const ConvexField& u, const std::vector<std::size_t>& order,
                        const std::function<std::optional<double>(std::size_t)>& height, double delta) {
  VitaliCover cover;
  cover.delta = delta;
  cover.targets = order.size();

  // Finite subfamily whose shrunk sections already cover the targets.
  const SectionOptions loose{.allow_unresolved = true};
  const std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::uint8_t> hit(u.grid.count(), 0), dropped(u.grid.count(), 0);
  std::vector<CoverElement> candidates;
  std::vector<std::size_t> owner(u.grid.count(), none);
  for (std::size_t x : order) {
    if (hit[x]) continue;
    const auto h = height(x);
    if (!h) {
      cover.excluded.push_back(x);
      dropped[x] = 1;
      continue;
    }
    const double hq = dyadic_floor(*h);
    CoverElement e;
    e.shrunk = compute_section(u, x, delta * hq, loose);
    for (std::size_t i : e.shrunk.nodes) {
      if (!hit[i]) owner[i] = candidates.size();
      hit[i] = 1;
    }
    e.full = compute_section(u, x, hq, loose);
    candidates.push_back(std::move(e));
  }
  cover.candidates = candidates.size();

  // Greedy selection by height, ties broken by centre index.
  std::vector<std::size_t> rank(candidates.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
    if (candidates[a].full.height != candidates[b].full.height)
      return candidates[a].full.height > candidates[b].full.height;
    return candidates[a].full.center < candidates[b].full.center;
  });
  std::vector<std::size_t> used_by(u.grid.count(), none);
  std::vector<std::size_t> blocker(candidates.size(), none);
  for (std::size_t c : rank) {
    bool free = true;
    for (std::size_t i : candidates[c].shrunk.nodes)
      if (used_by[i] != none) {
        free = false;
        blocker[c] = used_by[i];
        break;
      }
    if (!free) continue;
    for (std::size_t i : candidates[c].shrunk.nodes) used_by[i] = cover.selected.size();
    cover.selected.push_back(candidates[c]);
  }

  std::vector<std::uint8_t> covered(u.grid.count(), 0);
  for (const auto& e : cover.selected) {
    for (std::size_t i : e.full.nodes) covered[i] = 1;
    covered[e.full.center] = 1;
  }
  std::vector<std::size_t> gaps;
  for (std::size_t x : order)
    if (!covered[x] && !dropped[x]) gaps.push_back(x);
  if (!gaps.empty()) {
    std::ostringstream msg;
    msg << gaps.size() << " target nodes uncovered:";
    for (std::size_t k = 0; k < std::min<std::size_t>(gaps.size(), 10); ++k) msg << ' ' << gaps[k];
    const std::size_t c = owner[gaps.front()];
    if (c < candidates.size() && blocker[c] < cover.selected.size())
      msg << "; candidate at node " << candidates[c].full.center << " was blocked by the section at node "
          << cover.selected[blocker[c]].full.center;
    throw Error(ErrorCode::CoverageGap, msg.str());
  }
  return cover;
}

}  // namespace

VitaliCover vitali_cover(const ConvexField& u, const std::vector<std::size_t>& targets,
                         const std::vector<double>& heights, double delta) {
  if (targets.size() != heights.size())
    throw Error(ErrorCode::Unsupported, "one height per target node is required");
  std::vector<std::size_t> perm(targets.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> hq(targets.size());
  for (std::size_t k = 0; k < targets.size(); ++k) hq[k] = dyadic_floor(heights[k]);
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    if (hq[a] != hq[b]) return hq[a] > hq[b];
    return targets[a] < targets[b];
  });
  std::vector<std::size_t> order;
  std::vector<double> by_node(u.grid.count(), 0.0);
  for (std::size_t k : perm) {
    order.push_back(targets[k]);
    by_node[targets[k]] = std::max(by_node[targets[k]], hq[k]);
  }
  return build_cover(u, order, [&](std::size_t x) { return std::optional<double>(by_node[x]); }, delta);
}

VitaliCover vitali_cover_search(const ConvexField& u, const std::vector<std::size_t>& targets,
                                const std::function<std::optional<double>(std::size_t)>& height,
                                double delta) {
  return build_cover(u, targets, height, delta);
}

}  // namespace malab

#include "fedcluster/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedcluster {

Vector clip_point(const Vector& z, const Vector& v, double tau) {
  if (tau < 0.0) throw std::invalid_argument("clip radius must be nonnegative");
  return squared_distance(z, v) <= tau * tau ? z : v;
}

Vector threshold_update(const std::vector<Vector>& points, const Vector& v_prev, double tau) {
  if (points.empty()) throw std::invalid_argument("threshold_update on empty point set");
  const double tau_sq = tau * tau;
  std::vector<const Vector*> inside;
  inside.reserve(points.size());
  for (const Vector& z : points) {
    if (squared_distance(z, v_prev) <= tau_sq) inside.push_back(&z);
  }
  if (inside.empty()) return v_prev;
  if (inside.size() == points.size()) return mean(points);
  // Mixed case, evaluated as v_prev + (1/N) sum_inside (z - v_prev) so the
  // fully-clipped directions contribute exactly zero. Displacements are
  // summed in a canonical (lexicographically sorted) order, keeping the
  // result bit-identical under any reordering of the input.
  std::vector<Vector> deltas;
  deltas.reserve(inside.size());
  for (const Vector* z : inside) deltas.push_back(sub(*z, v_prev));
  std::sort(deltas.begin(), deltas.end());
  Vector acc(v_prev.size(), 0.0);
  for (const Vector& d : deltas) add_scaled(acc, 1.0, d);
  Vector out = v_prev;
  add_scaled(out, 1.0 / static_cast<double>(points.size()), acc);
  return out;
}

double percentile_radius(const std::vector<Vector>& points, const Vector& center, double pct) {
  if (points.empty()) throw std::invalid_argument("percentile of empty point set");
  if (pct <= 0.0 || pct >= 100.0) throw std::invalid_argument("percentile must be in (0,100)");
  std::vector<double> dists;
  dists.reserve(points.size());
  for (const Vector& z : points) dists.push_back(std::sqrt(squared_distance(z, center)));
  std::sort(dists.begin(), dists.end());
  // nearest-rank rule: the ceil(p/100 * N)-th order statistic
  const auto n = static_cast<double>(dists.size());
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
  rank = std::min(std::max<std::size_t>(rank, 1), dists.size());
  return dists[rank - 1];
}

double radius_from_policy(const RadiusPolicy& policy, const std::vector<Vector>& points,
                          const Vector& center) {
  double tau = 0.0;
  if (const auto* f = std::get_if<FixedRadius>(&policy)) {
    tau = f->tau;
  } else if (const auto* t = std::get_if<TheoryScaledRadius>(&policy)) {
    tau = t->scale * std::sqrt(t->delta_i * t->sigma * t->delta);
  } else {
    tau = percentile_radius(points, center, std::get<PercentileRadius>(policy).pct);
  }
  if (!(tau >= 0.0)) throw std::invalid_argument("radius policy produced a negative/NaN radius");
  return tau;
}

std::vector<ClusterId> assign_clusters(const std::vector<Vector>& points,
                                       const std::vector<Vector>& centers) {
  if (centers.empty()) throw std::invalid_argument("assign_clusters with no centers");
  std::vector<ClusterId> out;
  out.reserve(points.size());
  for (const Vector& z : points) {
    int best = 0;
    double best_d = squared_distance(z, centers.front());
    for (std::size_t k = 1; k < centers.size(); ++k) {
      const double d = squared_distance(z, centers[k]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(k);
      }
    }
    out.push_back(best);
  }
  return out;
}

std::vector<Vector> maximin_inits(const std::vector<Vector>& points, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > points.size()) {
    throw std::invalid_argument("maximin_inits: need 1 <= k <= #points");
  }
  std::vector<Vector> centers{points.front()};
  std::vector<double> min_d(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    min_d[i] = squared_distance(points[i], centers.front());
  }
  while (static_cast<int>(centers.size()) < k) {
    std::size_t far = 0;
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (min_d[i] > min_d[far]) far = i;
    }
    centers.push_back(points[far]);
    for (std::size_t i = 0; i < points.size(); ++i) {
      min_d[i] = std::min(min_d[i], squared_distance(points[i], centers.back()));
    }
  }
  return centers;
}

ClusteringResult run_threshold_clustering(const std::vector<Vector>& points, int k,
                                          std::vector<Vector> inits, int rounds,
                                          const RadiusPolicy& policy,
                                          const ClusteringAdversary* adversary) {
  if (static_cast<int>(inits.size()) != k) {
    throw std::invalid_argument("run_threshold_clustering: need k initial centers");
  }
  if (rounds < 1) throw std::invalid_argument("run_threshold_clustering: rounds must be >= 1");

  const bool adversarial = adversary != nullptr && !adversary->byzantine.empty() &&
                           is_attack(adversary->kind);
  std::vector<Vector> effective = points;

  ClusteringResult res;
  res.state.centers = std::move(inits);
  res.state.radii.assign(static_cast<std::size_t>(k), 0.0);
  res.trajectory.push_back(res.state.centers);

  for (int l = 1; l <= rounds; ++l) {
    auto& centers = res.state.centers;
    for (int c = 0; c < k; ++c) {
      res.state.radii[static_cast<std::size_t>(c)] =
          radius_from_policy(policy, effective, centers[static_cast<std::size_t>(c)]);
    }
    if (adversarial) {
      // Omniscient repositioning: each bad point aims at the cluster whose
      // center is currently nearest to its honest value.
      for (int idx : adversary->byzantine) {
        const Vector& honest = points[static_cast<std::size_t>(idx)];
        const int target = assign_clusters({honest}, centers).front();
        AttackContext ctx;
        ctx.center = &centers[static_cast<std::size_t>(target)];
        ctx.radius = res.state.radii[static_cast<std::size_t>(target)];
        if (adversary->true_means != nullptr &&
            static_cast<std::size_t>(target) < adversary->true_means->size()) {
          ctx.true_mean = &(*adversary->true_means)[static_cast<std::size_t>(target)];
        }
        effective[static_cast<std::size_t>(idx)] = apply_attack(adversary->kind, honest, ctx);
      }
    }
    for (int c = 0; c < k; ++c) {
      centers[static_cast<std::size_t>(c)] =
          threshold_update(effective, centers[static_cast<std::size_t>(c)],
                           res.state.radii[static_cast<std::size_t>(c)]);
    }
    res.state.round = l;
    res.trajectory.push_back(centers);
  }
  return res;
}

}  // namespace fedcluster

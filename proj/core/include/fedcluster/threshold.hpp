#pragma once

#include <variant>
#include <vector>

#include "fedcluster/attacks.hpp"
#include "fedcluster/vec.hpp"

namespace fedcluster {

// Thresholding radius policies. Theory value tau = c sqrt(delta_i sigma Delta);
// the practical alternative is a percentile of distances to the center.
struct FixedRadius {
  double tau = 0.0;
};

struct TheoryScaledRadius {
  double sigma = 0.0;
  double delta = 0.0;
  double delta_i = 1.0;
  double scale = 1.0;
};

struct PercentileRadius {
  double pct = 20.0;  // in (0, 100)
};

using RadiusPolicy = std::variant<FixedRadius, TheoryScaledRadius, PercentileRadius>;

/// z if ||z - v|| <= tau (boundary inclusive), else v.
Vector clip_point(const Vector& z, const Vector& v, double tau);

/// Mean of the clipped points: points outside the tau-ball around v_prev are
/// replaced by v_prev before averaging. Summation runs in a canonical
/// (lexicographically sorted) order, so the result is bit-identical under any
/// reordering of the input.
Vector threshold_update(const std::vector<Vector>& points, const Vector& v_prev, double tau);

/// Nearest-rank p-th percentile of the distances ||z_i - center||.
double percentile_radius(const std::vector<Vector>& points, const Vector& center, double pct);

double radius_from_policy(const RadiusPolicy& policy, const std::vector<Vector>& points,
                          const Vector& center);

/// Index of the nearest center per point; ties break to the lowest index.
std::vector<ClusterId> assign_clusters(const std::vector<Vector>& points,
                                       const std::vector<Vector>& centers);

/// Deterministic farthest-point center initialization: the first point, then
/// repeatedly the point farthest from the chosen set (ties to lowest index).
std::vector<Vector> maximin_inits(const std::vector<Vector>& points, int k);

struct CenterState {
  std::vector<Vector> centers;
  std::vector<double> radii;
  int round = 0;
};

/// Malicious points reposition themselves each clustering round, knowing the
/// current center and radius. `true_means`, when given, orients the
/// edge-of-ball direction (matched to centers by cluster index).
struct ClusteringAdversary {
  std::vector<int> byzantine;  // point indices
  AttackKind kind = NoAttack{};
  const std::vector<Vector>* true_means = nullptr;
};

struct ClusteringResult {
  CenterState state;
  /// state.centers after every round, trajectory[l][k], l in [0, rounds].
  std::vector<std::vector<Vector>> trajectory;
};

/// Iterative clipped-mean center estimation: each round, each cluster center
/// is replaced by the clipped mean of all points with the policy radius.
ClusteringResult run_threshold_clustering(const std::vector<Vector>& points, int k,
                                          std::vector<Vector> inits, int rounds,
                                          const RadiusPolicy& policy,
                                          const ClusteringAdversary* adversary = nullptr);

}  // namespace fedcluster

#pragma once

#include <cstdint>
#include <vector>

#include "fedcluster/problems.hpp"
#include "fedcluster/vec.hpp"

namespace fedcluster {

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method,
/// O(n^3)). Returns the matched column for each row.
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost);

/// Per-member ratio ||grad_i(x) - mean-grad(x)||^2 / ||mean-grad(x)||^2 over
/// the given cluster, with exact gradients. At a shared optimum the ratio is
/// 0/0; those entries come back NaN and callers exclude them from maxima.
std::vector<double> estimate_intra_ratio(const ProblemInstance& problem, const Vector& x,
                                         const std::vector<int>& cluster);

/// min over cross-cluster pairs of ||grad_i(x) - grad_j(x)||^2.
double estimate_inter_separation(const ProblemInstance& problem, const Vector& x);

/// Squared distance from each center to its best-matched true mean
/// (minimum-cost matching over all center/mean pairings), indexed by center.
std::vector<double> center_error(const std::vector<Vector>& centers,
                                 const std::vector<Vector>& true_means);

/// Empirical variance E||m - mean(m)||^2 of the stationary momentum recursion
/// m <- alpha g + (1 - alpha) m at a fixed x, after a burn-in of at least
/// 5/alpha steps.
double momentum_variance_probe(const LossOracle& oracle, const Vector& x, double alpha,
                               int draws, std::uint64_t seed, int batch_size = 1);

/// Best agreement fraction between two labelings over all relabelings of the
/// first argument (exhaustive for at most 8 labels, matching-based above).
double clustering_accuracy(const std::vector<ClusterId>& assigned,
                           const std::vector<ClusterId>& truth);

}  // namespace fedcluster

#include "fedcluster/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fedcluster/rng.hpp"

namespace fedcluster {

std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  for (const auto& row : cost) {
    if (static_cast<int>(row.size()) != n) {
      throw std::invalid_argument("min_cost_assignment needs a square matrix");
    }
  }
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                           u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (p[static_cast<std::size_t>(j)] > 0) {
      out[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    }
  }
  return out;
}

std::vector<double> estimate_intra_ratio(const ProblemInstance& problem, const Vector& x,
                                         const std::vector<int>& cluster) {
  if (cluster.empty()) throw std::invalid_argument("estimate_intra_ratio on empty cluster");
  std::vector<Vector> grads;
  grads.reserve(cluster.size());
  for (int i : cluster) {
    grads.push_back(problem.clients[static_cast<std::size_t>(i)]->grad(x));
  }
  const Vector avg = mean(grads);
  const double denom = norm_sq(avg);
  std::vector<double> out;
  out.reserve(cluster.size());
  for (const Vector& g : grads) {
    if (denom <= 1e-18) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      out.push_back(squared_distance(g, avg) / denom);
    }
  }
  return out;
}

double estimate_inter_separation(const ProblemInstance& problem, const Vector& x) {
  const int n = static_cast<int>(problem.clients.size());
  if (problem.num_clusters < 2) {
    throw std::invalid_argument("inter-cluster separation needs at least two clusters");
  }
  std::vector<Vector> grads;
  grads.reserve(static_cast<std::size_t>(n));
  for (const auto& c : problem.clients) grads.push_back(c->grad(x));
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (problem.true_labels[static_cast<std::size_t>(i)] ==
          problem.true_labels[static_cast<std::size_t>(j)]) {
        continue;
      }
      best = std::min(best, squared_distance(grads[static_cast<std::size_t>(i)],
                                             grads[static_cast<std::size_t>(j)]));
    }
  }
  return best;
}

std::vector<double> center_error(const std::vector<Vector>& centers,
                                 const std::vector<Vector>& true_means) {
  if (centers.size() != true_means.size()) {
    throw std::invalid_argument("center_error needs one true mean per center");
  }
  const int k = static_cast<int>(centers.size());
  std::vector<std::vector<double>> cost(static_cast<std::size_t>(k),
                                        std::vector<double>(static_cast<std::size_t>(k), 0.0));
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          squared_distance(centers[static_cast<std::size_t>(i)],
                           true_means[static_cast<std::size_t>(j)]);
    }
  }
  const std::vector<int> match = min_cost_assignment(cost);
  std::vector<double> out(static_cast<std::size_t>(k), 0.0);
  for (int i = 0; i < k; ++i) {
    out[static_cast<std::size_t>(i)] =
        cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(match[static_cast<std::size_t>(i)])];
  }
  return out;
}

double momentum_variance_probe(const LossOracle& oracle, const Vector& x, double alpha,
                               int draws, std::uint64_t seed, int batch_size) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0,1]");
  if (draws < 2) throw std::invalid_argument("need at least two draws");
  RngStream rng(seed, {oracle.identity(), 0, purpose_tag(Purpose::kProbe)});
  // Start the recursion at a fresh draw so a noiseless oracle reports an
  // exact zero instead of the residue of a geometric decay from the origin.
  Vector m = oracle.stoch_grad(x, batch_size, rng);
  auto step = [&] {
    const Vector g = oracle.stoch_grad(x, batch_size, rng);
    for (std::size_t c = 0; c < m.size(); ++c) {
      m[c] = alpha * g[c] + (1.0 - alpha) * m[c];
    }
  };
  const int burn_in = static_cast<int>(std::ceil(5.0 / alpha));
  for (int t = 0; t < burn_in; ++t) step();
  std::vector<Vector> samples;
  samples.reserve(static_cast<std::size_t>(draws));
  for (int t = 0; t < draws; ++t) {
    step();
    samples.push_back(m);
  }
  const Vector center = mean(samples);
  double acc = 0.0;
  for (const Vector& s : samples) acc += squared_distance(s, center);
  return acc / draws;
}

double clustering_accuracy(const std::vector<ClusterId>& assigned,
                           const std::vector<ClusterId>& truth) {
  if (assigned.size() != truth.size()) {
    throw std::invalid_argument("labelings must have equal length");
  }
  if (assigned.empty()) throw std::invalid_argument("empty labelings");
  int k = 0;
  for (ClusterId c : assigned) k = std::max(k, c + 1);
  for (ClusterId c : truth) k = std::max(k, c + 1);
  std::vector<std::vector<double>> counts(static_cast<std::size_t>(k),
                                          std::vector<double>(static_cast<std::size_t>(k), 0.0));
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    counts[static_cast<std::size_t>(assigned[i])][static_cast<std::size_t>(truth[i])] += 1.0;
  }
  double best = 0.0;
  if (k <= 8) {
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    do {
      double agree = 0.0;
      for (int a = 0; a < k; ++a) {
        agree += counts[static_cast<std::size_t>(a)][static_cast<std::size_t>(
            perm[static_cast<std::size_t>(a)])];
      }
      best = std::max(best, agree);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    // Same optimum via minimum-cost matching on negated counts.
    std::vector<std::vector<double>> cost = counts;
    for (auto& row : cost) {
      for (double& c : row) c = -c;
    }
    const std::vector<int> match = min_cost_assignment(cost);
    for (int a = 0; a < k; ++a) {
      best += counts[static_cast<std::size_t>(a)][static_cast<std::size_t>(
          match[static_cast<std::size_t>(a)])];
    }
  }
  return best / static_cast<double>(assigned.size());
}

}  // namespace fedcluster

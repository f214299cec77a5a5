#include "fedcluster/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace fedcluster {

namespace {

int effective_clusters(const ProblemInstance& problem, const TrainerConfig& cfg) {
  return cfg.num_clusters > 0 ? cfg.num_clusters : problem.num_clusters;
}

void validate(const ProblemInstance& problem, const TrainerConfig& cfg) {
  if (problem.clients.empty()) throw std::invalid_argument("problem has no clients");
  if (!(cfg.eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (cfg.rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (cfg.clustering_rounds < 1) throw std::invalid_argument("clustering_rounds must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0,1]");
}

Vector starting_point(const ProblemInstance& problem, const TrainerConfig& cfg) {
  if (!cfg.init.empty()) return cfg.init;
  return Vector(static_cast<std::size_t>(problem.clients[0]->dim()), 0.0);
}

/// Gradient as sent on the wire: exact when batch_size == 0, otherwise a
/// batch average with a stream keyed by the sender's data identity, the
/// round, and the requester, so evaluation order never matters.
Vector query_grad(const ProblemInstance& problem, const TrainerConfig& cfg, int sender,
                  const Vector& x, int round, std::uint64_t requester) {
  const LossOracle& oracle = *problem.clients[static_cast<std::size_t>(sender)];
  if (cfg.batch_size <= 0) return oracle.grad(x);
  RngStream rng(cfg.seed,
                {oracle.identity(), static_cast<std::uint64_t>(round),
                 purpose_tag(Purpose::kStochGrad, requester)});
  return oracle.stoch_grad(x, cfg.batch_size, rng);
}

bool all_have_value(const ProblemInstance& problem) {
  for (const auto& c : problem.clients) {
    if (!c->has_value()) return false;
  }
  return true;
}

/// Per-round diagnostics: exact own-gradient norm, own loss, and the average
/// loss over the client's true cluster (the personalized generalization
/// proxy), plus the cluster assignment when one exists.
void record_metrics(RunRecord& rec, const ProblemInstance& problem, int round,
                    const std::vector<Vector>& xs, const std::vector<ClusterId>* assignment) {
  const int n = static_cast<int>(problem.clients.size());
  const bool losses = all_have_value(problem);
  for (int i = 0; i < n; ++i) {
    const Vector& x = xs[static_cast<std::size_t>(i)];
    const Vector g = problem.clients[static_cast<std::size_t>(i)]->grad(x);
    rec.rows.push_back({round, i, "grad_norm_sq", norm_sq(g)});
    if (losses) {
      rec.rows.push_back(
          {round, i, "loss", problem.clients[static_cast<std::size_t>(i)]->value(x)});
      double cluster_loss = 0.0;
      int members = 0;
      for (int j = 0; j < n; ++j) {
        if (problem.true_labels[static_cast<std::size_t>(j)] ==
            problem.true_labels[static_cast<std::size_t>(i)]) {
          cluster_loss += problem.clients[static_cast<std::size_t>(j)]->value(x);
          ++members;
        }
      }
      rec.rows.push_back({round, i, "cluster_loss", cluster_loss / members});
    }
    if (assignment != nullptr) {
      rec.rows.push_back(
          {round, i, "cluster", static_cast<double>((*assignment)[static_cast<std::size_t>(i)])});
    }
  }
}

bool check_divergence(RunRecord& rec, int round, const std::vector<Vector>& xs) {
  for (const Vector& x : xs) {
    if (!all_finite(x)) {
      rec.rows.push_back({round, -1, "diverged", 1.0});
      rec.diverged = true;
      return true;
    }
  }
  return false;
}

std::vector<int> byzantine_indices(const std::vector<bool>& flags) {
  std::vector<int> out;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

void finish(RunRecord& rec, std::vector<Vector> xs, std::vector<ClusterId> assignment) {
  rec.final_params = std::move(xs);
  rec.final_assignment = std::move(assignment);
}

/// Connected components of the mutual-inclusion graph: i and j are linked
/// when either one's final ball contains the other's gradient.
std::vector<ClusterId> inclusion_components(const std::vector<std::vector<bool>>& in_ball) {
  const int n = static_cast<int>(in_ball.size());
  std::vector<ClusterId> comp(static_cast<std::size_t>(n), -1);
  int next = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[static_cast<std::size_t>(s)] != -1) continue;
    std::vector<int> stack{s};
    comp[static_cast<std::size_t>(s)] = next;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      for (int j = 0; j < n; ++j) {
        if (comp[static_cast<std::size_t>(j)] != -1) continue;
        if (in_ball[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ||
            in_ball[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) {
          comp[static_cast<std::size_t>(j)] = next;
          stack.push_back(j);
        }
      }
    }
    ++next;
  }
  return comp;
}

}  // namespace

RunRecord run_federated_clustering(const ProblemInstance& problem, const TrainerConfig& cfg) {
  validate(problem, cfg);
  const int n = static_cast<int>(problem.clients.size());
  const std::vector<bool> byz_flags = cfg.byz.flags(n, cfg.seed);
  ClusteringAdversary adversary{byzantine_indices(byz_flags), cfg.byz.kind, nullptr};

  RunRecord rec;
  std::vector<Vector> xs(static_cast<std::size_t>(n), starting_point(problem, cfg));

  auto cluster_at = [&](int i, int round) {
    std::vector<Vector> points;
    points.reserve(static_cast<std::size_t>(n));
    const std::uint64_t requester = problem.clients[static_cast<std::size_t>(i)]->identity();
    for (int j = 0; j < n; ++j) {
      points.push_back(
          query_grad(problem, cfg, j, xs[static_cast<std::size_t>(i)], round, requester));
    }
    rec.message_count += n - 1;
    Vector own = points[static_cast<std::size_t>(i)];
    return run_threshold_clustering(points, 1, {std::move(own)}, cfg.clustering_rounds,
                                    cfg.radius_policy, &adversary);
  };

  for (int t = 1; t <= cfg.rounds; ++t) {
    std::vector<Vector> next = xs;
    for (int i = 0; i < n; ++i) {
      const Vector v = cluster_at(i, t).state.centers[0];
      add_scaled(next[static_cast<std::size_t>(i)], -cfg.eta, v);
    }
    xs = std::move(next);
    record_metrics(rec, problem, t, xs, nullptr);
    if (check_divergence(rec, t, xs)) break;
  }

  // Final clustering: each client's ball either captures another client's
  // gradient or not; components of that graph are the reported clusters.
  std::vector<ClusterId> assignment(static_cast<std::size_t>(n), -1);
  if (!rec.diverged) {
    std::vector<std::vector<bool>> in_ball(static_cast<std::size_t>(n),
                                           std::vector<bool>(static_cast<std::size_t>(n), false));
    for (int i = 0; i < n; ++i) {
      std::vector<Vector> points;
      const std::uint64_t requester = problem.clients[static_cast<std::size_t>(i)]->identity();
      for (int j = 0; j < n; ++j) {
        points.push_back(query_grad(problem, cfg, j, xs[static_cast<std::size_t>(i)],
                                    cfg.rounds + 1, requester));
      }
      Vector own = points[static_cast<std::size_t>(i)];
      const ClusteringResult res =
          run_threshold_clustering(points, 1, {std::move(own)}, cfg.clustering_rounds,
                                   cfg.radius_policy, &adversary);
      const double tau = res.state.radii[0];
      for (int j = 0; j < n; ++j) {
        in_ball[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            squared_distance(points[static_cast<std::size_t>(j)], res.state.centers[0]) <=
            tau * tau;
      }
    }
    assignment = inclusion_components(in_ball);
  }
  finish(rec, std::move(xs), std::move(assignment));
  return rec;
}

RunRecord run_momentum_clustering(const ProblemInstance& problem, const TrainerConfig& cfg) {
  validate(problem, cfg);
  const int n = static_cast<int>(problem.clients.size());
  const int k = effective_clusters(problem, cfg);
  const std::vector<bool> byz_flags = cfg.byz.flags(n, cfg.seed);
  ClusteringAdversary adversary{byzantine_indices(byz_flags), cfg.byz.kind, nullptr};

  RunRecord rec;
  const Vector x0 = starting_point(problem, cfg);
  std::vector<Vector> xs(static_cast<std::size_t>(n), x0);
  std::vector<Vector> ms(static_cast<std::size_t>(n), Vector(x0.size(), 0.0));
  std::vector<Vector> centers;
  std::vector<ClusterId> assignment(static_cast<std::size_t>(n), 0);

  for (int t = 1; t <= cfg.rounds; ++t) {
    for (int i = 0; i < n; ++i) {
      const Vector g = query_grad(problem, cfg, i, xs[static_cast<std::size_t>(i)], t,
                                  problem.clients[static_cast<std::size_t>(i)]->identity());
      Vector& m = ms[static_cast<std::size_t>(i)];
      for (std::size_t c = 0; c < m.size(); ++c) {
        m[c] = cfg.alpha * g[c] + (1.0 - cfg.alpha) * m[c];
      }
    }
    rec.message_count += n;
    if (centers.empty()) {
      // Cold start: momentums of k distinct clients, chosen by seeded draw
      // over the identity-sorted order so relabeling does not matter.
      std::vector<int> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return problem.clients[static_cast<std::size_t>(a)]->identity() <
               problem.clients[static_cast<std::size_t>(b)]->identity();
      });
      RngStream rng(cfg.seed, {0, 0, purpose_tag(Purpose::kInit)});
      for (int pick : rng.sample_without_replacement(n, k)) {
        centers.push_back(ms[static_cast<std::size_t>(order[static_cast<std::size_t>(pick)])]);
      }
    }
    const ClusteringResult res = run_threshold_clustering(
        ms, k, std::move(centers), cfg.clustering_rounds, cfg.radius_policy, &adversary);
    centers = res.state.centers;
    assignment = assign_clusters(ms, centers);
    for (int i = 0; i < n; ++i) {
      add_scaled(xs[static_cast<std::size_t>(i)], -cfg.eta,
                 centers[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])]);
    }
    record_metrics(rec, problem, t, xs, &assignment);
    if (check_divergence(rec, t, xs)) break;
  }
  finish(rec, std::move(xs), std::move(assignment));
  return rec;
}

RunRecord run_myopic(const ProblemInstance& problem, const TrainerConfig& cfg) {
  validate(problem, cfg);
  const int n = static_cast<int>(problem.clients.size());
  const int k = effective_clusters(problem, cfg);
  const std::vector<bool> byz_flags = cfg.byz.flags(n, cfg.seed);
  ClusteringAdversary adversary{byzantine_indices(byz_flags), cfg.byz.kind, nullptr};

  RunRecord rec;
  std::vector<Vector> xs(static_cast<std::size_t>(n), starting_point(problem, cfg));
  std::vector<ClusterId> assignment(static_cast<std::size_t>(n), 0);

  for (int t = 1; t <= cfg.rounds; ++t) {
    std::vector<Vector> grads;
    grads.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      grads.push_back(query_grad(problem, cfg, i, xs[static_cast<std::size_t>(i)], t,
                                 problem.clients[static_cast<std::size_t>(i)]->identity()));
    }
    rec.message_count += n;
    const ClusteringResult res =
        run_threshold_clustering(grads, k, maximin_inits(grads, k), cfg.clustering_rounds,
                                 cfg.radius_policy, &adversary);
    assignment = assign_clusters(grads, res.state.centers);
    for (int i = 0; i < n; ++i) {
      add_scaled(xs[static_cast<std::size_t>(i)], -cfg.eta,
                 res.state.centers[static_cast<std::size_t>(
                     assignment[static_cast<std::size_t>(i)])]);
    }
    record_metrics(rec, problem, t, xs, &assignment);
    if (check_divergence(rec, t, xs)) break;
  }
  finish(rec, std::move(xs), std::move(assignment));
  return rec;
}

namespace {

std::vector<Vector> model_inits(const ProblemInstance& problem, const TrainerConfig& cfg, int k) {
  if (!cfg.cluster_inits.empty()) {
    if (static_cast<int>(cfg.cluster_inits.size()) != k) {
      throw std::invalid_argument("cluster_inits size must match the cluster count");
    }
    return cfg.cluster_inits;
  }
  return std::vector<Vector>(static_cast<std::size_t>(k), starting_point(problem, cfg));
}

std::vector<ClusterId> loss_assignment(const ProblemInstance& problem,
                                       const std::vector<Vector>& models) {
  const int n = static_cast<int>(problem.clients.size());
  std::vector<ClusterId> out(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const LossOracle& oracle = *problem.clients[static_cast<std::size_t>(i)];
    double best = oracle.value(models[0]);
    for (std::size_t c = 1; c < models.size(); ++c) {
      const double v = oracle.value(models[c]);
      if (v < best) {
        best = v;
        out[static_cast<std::size_t>(i)] = static_cast<ClusterId>(c);
      }
    }
  }
  return out;
}

std::vector<Vector> client_views(const std::vector<Vector>& models,
                                 const std::vector<ClusterId>& assignment) {
  std::vector<Vector> out;
  out.reserve(assignment.size());
  for (ClusterId k : assignment) out.push_back(models[static_cast<std::size_t>(k)]);
  return out;
}

}  // namespace

RunRecord run_ifca(const ProblemInstance& problem, const TrainerConfig& cfg, IfcaOption option) {
  validate(problem, cfg);
  if (!all_have_value(problem)) {
    throw std::invalid_argument("loss-based cluster selection needs loss values on every client");
  }
  if (cfg.local_steps < 1) throw std::invalid_argument("local_steps must be >= 1");
  const int n = static_cast<int>(problem.clients.size());
  const int k = effective_clusters(problem, cfg);
  std::vector<Vector> models = model_inits(problem, cfg, k);

  RunRecord rec;
  std::vector<ClusterId> assignment(static_cast<std::size_t>(n), 0);
  for (int t = 1; t <= cfg.rounds; ++t) {
    assignment = loss_assignment(problem, models);
    rec.message_count += n;
    for (int c = 0; c < k; ++c) {
      std::vector<int> members;
      for (int i = 0; i < n; ++i) {
        if (assignment[static_cast<std::size_t>(i)] == c) members.push_back(i);
      }
      if (members.empty()) continue;
      Vector& model = models[static_cast<std::size_t>(c)];
      if (option == IfcaOption::kGradAveraging) {
        std::vector<Vector> grads;
        for (int i : members) {
          grads.push_back(query_grad(problem, cfg, i, model, t,
                                     purpose_tag(Purpose::kInit, static_cast<std::uint64_t>(c))));
        }
        add_scaled(model, -cfg.eta, mean(grads));
      } else {
        std::vector<Vector> locals;
        for (int i : members) {
          Vector y = model;
          RngStream rng(cfg.seed,
                        {problem.clients[static_cast<std::size_t>(i)]->identity(),
                         static_cast<std::uint64_t>(t), purpose_tag(Purpose::kStochGrad)});
          for (int s = 0; s < cfg.local_steps; ++s) {
            const LossOracle& oracle = *problem.clients[static_cast<std::size_t>(i)];
            const Vector g = cfg.batch_size <= 0 ? oracle.grad(y)
                                                 : oracle.stoch_grad(y, cfg.batch_size, rng);
            add_scaled(y, -cfg.eta, g);
          }
          locals.push_back(std::move(y));
        }
        model = mean(locals);
      }
    }
    const std::vector<Vector> xs = client_views(models, assignment);
    record_metrics(rec, problem, t, xs, &assignment);
    if (check_divergence(rec, t, xs)) break;
  }
  std::vector<Vector> finals = client_views(models, assignment);
  finish(rec, std::move(finals), std::move(assignment));
  return rec;
}

RunRecord run_hypcluster(const ProblemInstance& problem, const TrainerConfig& cfg) {
  validate(problem, cfg);
  if (!all_have_value(problem)) {
    throw std::invalid_argument("loss-based cluster selection needs loss values on every client");
  }
  if (cfg.local_steps < 1) throw std::invalid_argument("local_steps must be >= 1");
  const int n = static_cast<int>(problem.clients.size());
  const int k = effective_clusters(problem, cfg);
  std::vector<Vector> models = model_inits(problem, cfg, k);

  RunRecord rec;
  std::vector<ClusterId> assignment(static_cast<std::size_t>(n), 0);
  for (int t = 1; t <= cfg.rounds; ++t) {
    assignment = loss_assignment(problem, models);
    rec.message_count += n;
    for (int c = 0; c < k; ++c) {
      std::vector<int> members;
      for (int i = 0; i < n; ++i) {
        if (assignment[static_cast<std::size_t>(i)] == c) members.push_back(i);
      }
      if (members.empty()) continue;
      Vector& model = models[static_cast<std::size_t>(c)];
      for (int s = 0; s < cfg.local_steps; ++s) {
        std::vector<Vector> grads;
        for (int i : members) {
          grads.push_back(query_grad(problem, cfg, i, model, t,
                                     purpose_tag(Purpose::kProbe, static_cast<std::uint64_t>(
                                                                      c * cfg.local_steps + s))));
        }
        add_scaled(model, -cfg.eta, mean(grads));
      }
    }
    const std::vector<Vector> xs = client_views(models, assignment);
    record_metrics(rec, problem, t, xs, &assignment);
    if (check_divergence(rec, t, xs)) break;
  }
  std::vector<Vector> finals = client_views(models, assignment);
  finish(rec, std::move(finals), std::move(assignment));
  return rec;
}

namespace {

/// Deterministic 2-means: seeds at the lexicographically first farthest pair,
/// assigns ties to the lower center, iterates to a fixed point. The tie
/// comparison carries a relative tolerance so that distances equal up to
/// floating-point rounding still resolve to the lower center.
std::pair<std::vector<int>, std::vector<int>> two_means(const std::vector<Vector>& pts) {
  const int n = static_cast<int>(pts.size());
  int a = 0;
  int b = 1;
  double best = -1.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = squared_distance(pts[static_cast<std::size_t>(i)],
                                        pts[static_cast<std::size_t>(j)]);
      if (d > best) {
        best = d;
        a = i;
        b = j;
      }
    }
  }
  Vector c0 = pts[static_cast<std::size_t>(a)];
  Vector c1 = pts[static_cast<std::size_t>(b)];
  std::vector<int> side(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const double d0 = squared_distance(pts[static_cast<std::size_t>(i)], c0);
      const double d1 = squared_distance(pts[static_cast<std::size_t>(i)], c1);
      const int s = d0 - d1 <= 1e-9 * std::max(d0, d1) ? 0 : 1;
      if (s != side[static_cast<std::size_t>(i)]) {
        side[static_cast<std::size_t>(i)] = s;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
    std::vector<Vector> left;
    std::vector<Vector> right;
    for (int i = 0; i < n; ++i) {
      (side[static_cast<std::size_t>(i)] == 0 ? left : right)
          .push_back(pts[static_cast<std::size_t>(i)]);
    }
    if (!left.empty()) c0 = mean(left);
    if (!right.empty()) c1 = mean(right);
  }
  std::pair<std::vector<int>, std::vector<int>> out;
  for (int i = 0; i < n; ++i) {
    (side[static_cast<std::size_t>(i)] == 0 ? out.first : out.second).push_back(i);
  }
  return out;
}

}  // namespace

RunRecord run_clustered_fl(const ProblemInstance& problem, const TrainerConfig& cfg) {
  validate(problem, cfg);
  const int n = static_cast<int>(problem.clients.size());
  RunRecord rec;
  std::vector<Vector> finals(static_cast<std::size_t>(n));
  std::vector<ClusterId> assignment(static_cast<std::size_t>(n), -1);
  int round_counter = 0;

  // FedAvg restricted to a subset; convergence = norm of the gradient
  // averaged over the last quarter of rounds at most fedavg_tol (averaging
  // first cancels the stochastic-gradient noise around the optimum).
  auto fedavg_subset = [&](const std::vector<int>& members, bool top_level) {
    Vector x = starting_point(problem, cfg);
    const int tail_start = cfg.fedavg_rounds - std::max(1, cfg.fedavg_rounds / 4);
    Vector tail_sum(x.size(), 0.0);
    int tail_count = 0;
    for (int r = 1; r <= cfg.fedavg_rounds; ++r) {
      ++round_counter;
      std::vector<Vector> grads;
      for (int i : members) {
        grads.push_back(query_grad(problem, cfg, i, x, round_counter, 0));
      }
      rec.message_count += static_cast<long long>(members.size());
      const Vector g = mean(grads);
      add_scaled(x, -cfg.eta, g);
      if (r > tail_start) {
        add_scaled(tail_sum, 1.0, g);
        ++tail_count;
      }
      if (top_level) {
        const std::vector<Vector> xs(static_cast<std::size_t>(n), x);
        record_metrics(rec, problem, r, xs, nullptr);
      }
    }
    const bool converged = all_finite(x) && norm(tail_sum) / tail_count <= cfg.fedavg_tol;
    return std::make_pair(std::move(x), converged);
  };

  std::vector<std::vector<int>> leaves;
  int next_label = 0;
  auto settle_leaf = [&](const std::vector<int>& members, const Vector& model) {
    for (int i : members) {
      finals[static_cast<std::size_t>(i)] = model;
      assignment[static_cast<std::size_t>(i)] = next_label;
    }
    leaves.push_back(members);
    ++next_label;
  };

  std::function<void(const std::vector<int>&, int)> split = [&](const std::vector<int>& members,
                                                                int depth) {
    auto [model, converged] = fedavg_subset(members, depth == 0);
    if (!converged) {
      rec.diverged = true;
      rec.rows.push_back({round_counter, -1, "diverged", 1.0});
      settle_leaf(members, model);
      return;
    }
    if (members.size() == 1) {
      settle_leaf(members, model);
      return;
    }
    std::vector<Vector> grads;
    for (int i : members) {
      const LossOracle& oracle = *problem.clients[static_cast<std::size_t>(i)];
      RngStream rng(cfg.seed, {oracle.identity(), static_cast<std::uint64_t>(depth),
                               purpose_tag(Purpose::kSplit)});
      grads.push_back(oracle.stoch_grad(model, std::max(1, cfg.batch_size), rng));
    }
    double spread_sq = 0.0;
    for (std::size_t i = 0; i < grads.size(); ++i) {
      for (std::size_t j = i + 1; j < grads.size(); ++j) {
        spread_sq = std::max(spread_sq, squared_distance(grads[i], grads[j]));
      }
    }
    if (std::sqrt(spread_sq) < cfg.split_tol) {
      settle_leaf(members, model);
      return;
    }
    auto [left, right] = two_means(grads);
    if (left.empty() || right.empty()) {
      settle_leaf(members, model);
      return;
    }
    std::vector<int> left_ids;
    std::vector<int> right_ids;
    for (int p : left) left_ids.push_back(members[static_cast<std::size_t>(p)]);
    for (int p : right) right_ids.push_back(members[static_cast<std::size_t>(p)]);
    if (depth == 0) rec.top_split = {left_ids, right_ids};
    split(left_ids, depth + 1);
    if (!rec.diverged) split(right_ids, depth + 1);
  };

  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  split(all, 0);
  rec.partition = std::move(leaves);
  finish(rec, std::move(finals), std::move(assignment));
  return rec;
}

RunRecord run_local(const ProblemInstance& problem, const TrainerConfig& cfg) {
  validate(problem, cfg);
  const int n = static_cast<int>(problem.clients.size());
  RunRecord rec;
  std::vector<Vector> xs(static_cast<std::size_t>(n), starting_point(problem, cfg));
  for (int t = 1; t <= cfg.rounds; ++t) {
    for (int i = 0; i < n; ++i) {
      const Vector g = query_grad(problem, cfg, i, xs[static_cast<std::size_t>(i)], t,
                                  problem.clients[static_cast<std::size_t>(i)]->identity());
      add_scaled(xs[static_cast<std::size_t>(i)], -cfg.eta, g);
    }
    record_metrics(rec, problem, t, xs, nullptr);
    if (check_divergence(rec, t, xs)) break;
  }
  finish(rec, std::move(xs), std::vector<ClusterId>(static_cast<std::size_t>(n), -1));
  return rec;
}

RunRecord run_fedavg(const ProblemInstance& problem, const TrainerConfig& cfg) {
  validate(problem, cfg);
  const int n = static_cast<int>(problem.clients.size());
  const std::vector<bool> byz_flags = cfg.byz.flags(n, cfg.seed);
  RunRecord rec;
  Vector x = starting_point(problem, cfg);
  for (int t = 1; t <= cfg.rounds; ++t) {
    std::vector<Vector> grads;
    for (int i = 0; i < n; ++i) {
      Vector g = query_grad(problem, cfg, i, x, t, 0);
      if (byz_flags[static_cast<std::size_t>(i)]) {
        g = apply_attack(cfg.byz.kind, g, AttackContext{});
      }
      grads.push_back(std::move(g));
    }
    rec.message_count += n;
    add_scaled(x, -cfg.eta, mean(grads));
    const std::vector<Vector> xs(static_cast<std::size_t>(n), x);
    record_metrics(rec, problem, t, xs, nullptr);
    if (check_divergence(rec, t, xs)) break;
  }
  finish(rec, std::vector<Vector>(static_cast<std::size_t>(n), x),
         std::vector<ClusterId>(static_cast<std::size_t>(n), 0));
  return rec;
}

RunRecord run_ground_truth(const ProblemInstance& problem, const TrainerConfig& cfg) {
  validate(problem, cfg);
  const int n = static_cast<int>(problem.clients.size());
  const int k = problem.num_clusters;
  std::vector<Vector> models = model_inits(problem, cfg, k);
  RunRecord rec;
  for (int t = 1; t <= cfg.rounds; ++t) {
    for (int c = 0; c < k; ++c) {
      std::vector<Vector> grads;
      for (int i = 0; i < n; ++i) {
        if (problem.true_labels[static_cast<std::size_t>(i)] != c) continue;
        grads.push_back(query_grad(problem, cfg, i, models[static_cast<std::size_t>(c)], t,
                                   problem.clients[static_cast<std::size_t>(i)]->identity()));
      }
      if (!grads.empty()) {
        add_scaled(models[static_cast<std::size_t>(c)], -cfg.eta, mean(grads));
      }
    }
    rec.message_count += n;
    const std::vector<Vector> xs = client_views(models, problem.true_labels);
    record_metrics(rec, problem, t, xs, &problem.true_labels);
    if (check_divergence(rec, t, xs)) break;
  }
  finish(rec, client_views(models, problem.true_labels), problem.true_labels);
  return rec;
}

}  // namespace fedcluster

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedcluster/attacks.hpp"
#include "fedcluster/problems.hpp"
#include "fedcluster/threshold.hpp"

namespace fedcluster {

struct ClientState {
  ClientId id = 0;
  Vector params;
  Vector momentum;
  bool byzantine = false;
  ClusterId true_cluster = 0;
};

struct TrainerConfig {
  double eta = 0.1;      // learning rate
  int rounds = 100;      // T
  int clustering_rounds = 10;  // inner center-estimation iterations l
  RadiusPolicy radius_policy = PercentileRadius{};
  int batch_size = 0;    // 0 = exact gradients
  double alpha = 0.1;    // momentum mixing, in (0, 1]
  int num_clusters = 0;  // K for server-side variants; 0 = problem's K
  std::uint64_t seed = 0;
  Vector init;                       // shared x_0; empty = zeros
  std::vector<Vector> cluster_inits; // per-model inits (IFCA/HypCluster/GT)
  double split_tol = 1e-3;   // stop splitting below this gradient spread
  int fedavg_rounds = 200;   // inner FedAvg length for recursive splitting
  double fedavg_tol = 0.1;   // inner FedAvg convergence tolerance
  int local_steps = 1;       // local GD steps (IFCA option II / HypCluster)
  ByzantineSchedule byz;
};

struct MetricRow {
  int round = 0;
  int client = 0;  // -1 for run-level metrics
  std::string metric;
  double value = 0.0;
};

struct RunRecord {
  std::vector<MetricRow> rows;
  std::vector<Vector> final_params;        // per client
  std::vector<ClusterId> final_assignment; // per client, -1 if none
  long long message_count = 0;
  bool diverged = false;
  /// Recursive bipartitioning output: groups of client indices.
  std::vector<std::vector<int>> partition;
  std::vector<std::vector<int>> top_split;
};

enum class IfcaOption { kGradAveraging, kModelAveraging };

/// Every round each client clusters all N clients' gradients evaluated at its
/// own parameters (one cluster, l clipped-mean iterations initialized at the
/// client's own gradient) and steps with the resulting center.
RunRecord run_federated_clustering(const ProblemInstance& problem, const TrainerConfig& cfg);

/// Clients track momentum m = alpha g + (1 - alpha) m; the server clusters
/// the N momentums into K centers (warm-started across rounds) and each
/// client steps with its assigned center.
RunRecord run_momentum_clustering(const ProblemInstance& problem, const TrainerConfig& cfg);

/// Server clusters the clients' own-parameter gradients each round; each
/// client steps with its assigned center.
RunRecord run_myopic(const ProblemInstance& problem, const TrainerConfig& cfg);

/// K shared cluster models; each client joins the model with the lowest loss
/// (ties to the lowest index). kGradAveraging updates each model with the
/// mean member gradient; kModelAveraging averages the members' local GD runs.
RunRecord run_ifca(const ProblemInstance& problem, const TrainerConfig& cfg, IfcaOption option);

/// Centralized loss-based reassignment alternating with per-cluster GD on
/// the members' data.
RunRecord run_hypcluster(const ProblemInstance& problem, const TrainerConfig& cfg);

/// Trains FedAvg to an approximate optimum, takes one stochastic gradient
/// per client there, 2-means bipartitions the gradients, and recurses until
/// the gradient spread falls below split_tol.
RunRecord run_clustered_fl(const ProblemInstance& problem, const TrainerConfig& cfg);

/// Independent (S)GD per client.
RunRecord run_local(const ProblemInstance& problem, const TrainerConfig& cfg);

/// One global model trained on the mean of all client gradients.
RunRecord run_fedavg(const ProblemInstance& problem, const TrainerConfig& cfg);

/// One model per true cluster, trained on the mean member gradient.
RunRecord run_ground_truth(const ProblemInstance& problem, const TrainerConfig& cfg);

}  // namespace fedcluster

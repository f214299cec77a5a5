#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fedcluster/rng.hpp"
#include "fedcluster/vec.hpp"

namespace fedcluster {

/// Per-client loss object. `grad` is the exact (expected) gradient;
/// `stoch_grad` averages per-sample gradients over a batch drawn from `rng`.
/// Analytic oracles have zero gradient noise: stoch_grad == grad.
class LossOracle {
 public:
  virtual ~LossOracle() = default;

  virtual int dim() const = 0;

  /// False for gradient-only oracles (no loss value is defined).
  virtual bool has_value() const { return true; }

  virtual double value(const Vector& x) const = 0;
  virtual Vector grad(const Vector& x) const = 0;

  virtual Vector stoch_grad(const Vector& x, int batch_size, RngStream& rng) const {
    (void)batch_size;
    (void)rng;
    return grad(x);
  }

  /// Local dataset size m_i; 0 for analytic oracles.
  virtual int dataset_size() const { return 0; }

  /// Stable identity used to key RNG substreams, so that relabeling clients
  /// permutes trajectories and nothing else.
  std::uint64_t identity() const { return identity_; }
  void set_identity(std::uint64_t id) { identity_ = id; }

 private:
  std::uint64_t identity_ = 0;
};

/// Constants of the problem family; 0 where unknown.
struct TheoryParams {
  double sigma = 0.0;    // within-cluster std (total, not per-coordinate)
  double delta = 0.0;    // inter-cluster separation
  double delta_i = 1.0;  // fraction of clients in own cluster
  double beta_i = 0.0;   // malicious fraction
  double A = 0.0;        // intra-cluster similarity constant
  double D = 0.0;        // inter-cluster slack constant
  double L = 0.0;        // smoothness
  double mu = 0.0;       // strong convexity
};

struct ProblemInstance {
  std::vector<std::shared_ptr<const LossOracle>> clients;
  std::vector<ClusterId> true_labels;
  int num_clusters = 1;
  TheoryParams params;
  /// Cluster minimizers x_k*, when known analytically (empty otherwise).
  std::vector<Vector> cluster_optima;
};

/// f(x) = (c/2) ||x - center||^2, exact gradients.
std::shared_ptr<LossOracle> make_quadratic_oracle(double curvature, Vector center);

/// Same quadratic, but stochastic gradients carry additive isotropic
/// Gaussian noise with per-coordinate std `noise_std` per sample; batches
/// average independent samples.
std::shared_ptr<LossOracle> make_noisy_quadratic_oracle(double curvature, Vector center,
                                                        double noise_std);

// --- constructed counter-examples ---------------------------------------

/// Three 1-d clients; true clustering {0,1} | {2}. The middle client's loss
/// is a piecewise cubic/quadratic, C^1 at the knot x=1 with a saddle there.
ProblemInstance make_example1(double eta);

/// Two 1-d quadratics with optima at -0.5 and +0.5.
ProblemInstance make_example2();

/// Gradient oracles g1 = x, g2 = x - 1/2, g3 = x or x - 1 w.p. 1/2 each.
/// Client 2 has no loss value; loss-based baselines cannot run on this one.
ProblemInstance make_example3(std::uint64_t seed);

// --- synthetic clustered linear regression -------------------------------

/// K clusters of n_i clients, each client holding n samples of dimension d
/// (d > n so the local system is overdetermined). Clients in cluster k share
/// the minimizer x_k*; sample matrix entries are N(k+1, 1).
/// f_i(x) = (1/(2n)) || A_i^T x - y_i ||^2 with y_i = A_i^T x_k*.
ProblemInstance make_synthetic_regression(int K, int n_i, int d, int n,
                                          std::uint64_t seed);

/// Least-squares client: f(x) = (1/(2n)) sum_j (a_j . x - y_j)^2.
/// Stochastic gradients average a uniformly-without-replacement batch of the
/// client's n samples.
class RegressionOracle : public LossOracle {
 public:
  RegressionOracle(std::vector<Vector> samples, Vector targets);

  int dim() const override;
  double value(const Vector& x) const override;
  Vector grad(const Vector& x) const override;
  Vector stoch_grad(const Vector& x, int batch_size, RngStream& rng) const override;
  int dataset_size() const override { return static_cast<int>(samples_.size()); }

  const Vector& sample(int j) const { return samples_[static_cast<std::size_t>(j)]; }
  double target(int j) const { return targets_[static_cast<std::size_t>(j)]; }

  /// Largest eigenvalue of the local Hessian (1/n) A A^T, by power iteration.
  double smoothness() const;

 private:
  Vector residuals(const Vector& x) const;

  std::vector<Vector> samples_;  // columns a_j of A
  Vector targets_;               // y_j
};

/// One CSV row per sample: client_id, cluster_id, features..., target.
/// Only data-backed (regression) clients are dumped.
void dump_problem_csv(const ProblemInstance& problem, const std::string& path);

// --- labeled Gaussian blobs ----------------------------------------------

struct BlobData {
  std::vector<Vector> points;
  std::vector<ClusterId> labels;
  std::vector<Vector> centers;
  TheoryParams params;
};

/// per_cluster isotropic Gaussian points around each center; sigma is the
/// per-coordinate standard deviation.
BlobData make_blobs(int K, int per_cluster, double sigma,
                    const std::vector<Vector>& centers, std::uint64_t seed);

// --- adversarial two-point mixture (estimation lower bound) ---------------

struct TwoPointDist {
  double high = 0.0;  // support {0, high}
  double p_high = 0.0;
  double mean() const { return p_high * high; }
  double sample(RngStream& rng) const { return rng.uniform() < p_high ? high : 0.0; }
};

struct LowerBoundMixture {
  TwoPointDist d1;
  TwoPointDist d2;
  double p = 0.0;
  double support_gap = 0.0;  // the point value delta
  double error_floor = 0.0;  // sigma^4 / (4 Delta^2)
};

/// Requires delta_gap^2 >= 2 sigma^2 (hard error otherwise).
LowerBoundMixture make_lower_bound_mixture(double sigma, double delta_gap);

}  // namespace fedcluster

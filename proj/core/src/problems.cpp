#include "fedcluster/problems.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace fedcluster {

namespace {

class QuadraticOracle : public LossOracle {
 public:
  QuadraticOracle(double curvature, Vector center)
      : curvature_(curvature), center_(std::move(center)) {}

  int dim() const override { return static_cast<int>(center_.size()); }

  double value(const Vector& x) const override {
    return 0.5 * curvature_ * squared_distance(x, center_);
  }

  Vector grad(const Vector& x) const override {
    Vector g = sub(x, center_);
    for (double& v : g) v *= curvature_;
    return g;
  }

 protected:
  double curvature_;
  Vector center_;
};

class NoisyQuadraticOracle : public QuadraticOracle {
 public:
  NoisyQuadraticOracle(double curvature, Vector center, double noise_std)
      : QuadraticOracle(curvature, std::move(center)), noise_std_(noise_std) {}

  Vector stoch_grad(const Vector& x, int batch_size, RngStream& rng) const override {
    if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
    Vector g = grad(x);
    const double s = noise_std_ / std::sqrt(static_cast<double>(batch_size));
    for (double& v : g) v += s * rng.normal();
    return g;
  }

 private:
  double noise_std_;
};

// Piecewise client of the first counter-example:
//   x <  1 : 4(x-1)^3 + 3(x-1)^4 + 1
//   x >= 1 : (x-1)^2 / (2 eta) + 1
// C^1 at the knot, saddle at x = 1, global minimum 0 at x = 0.
class SaddlePieceOracle : public LossOracle {
 public:
  explicit SaddlePieceOracle(double eta) : eta_(eta) {}

  int dim() const override { return 1; }

  double value(const Vector& x) const override {
    const double u = x.at(0) - 1.0;
    if (u < 0.0) return 4.0 * u * u * u + 3.0 * u * u * u * u + 1.0;
    return u * u / (2.0 * eta_) + 1.0;
  }

  Vector grad(const Vector& x) const override {
    const double u = x.at(0) - 1.0;
    if (u < 0.0) return {12.0 * u * u + 12.0 * u * u * u};
    return {u / eta_};
  }

 private:
  double eta_;
};

// Linear gradient oracle g(x) = x - root, with the consistent quadratic loss
// (x - root)^2 / 2.
class LinearGradOracle : public LossOracle {
 public:
  explicit LinearGradOracle(double root) : root_(root) {}
  int dim() const override { return 1; }
  double value(const Vector& x) const override {
    const double u = x.at(0) - root_;
    return 0.5 * u * u;
  }
  Vector grad(const Vector& x) const override { return {x.at(0) - root_}; }

 private:
  double root_;
};

// Gradient-only client of the third counter-example:
// g(x) = x w.p. 1/2, x - 1 w.p. 1/2. Expectation x - 1/2.
class CoinGradOracle : public LossOracle {
 public:
  int dim() const override { return 1; }
  bool has_value() const override { return false; }
  double value(const Vector&) const override {
    throw std::logic_error("gradient-only oracle has no loss value");
  }
  Vector grad(const Vector& x) const override { return {x.at(0) - 0.5}; }
  Vector stoch_grad(const Vector& x, int batch_size, RngStream& rng) const override {
    if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
    double s = 0.0;
    for (int b = 0; b < batch_size; ++b) {
      s += rng.uniform() < 0.5 ? x.at(0) : x.at(0) - 1.0;
    }
    return {s / static_cast<double>(batch_size)};
  }
};

void assign_identities(ProblemInstance& p) {
  for (std::size_t i = 0; i < p.clients.size(); ++i) {
    // clients are shared as const; identities are set before publication
    const_cast<LossOracle*>(p.clients[i].get())->set_identity(i);
  }
}

}  // namespace

std::shared_ptr<LossOracle> make_quadratic_oracle(double curvature, Vector center) {
  return std::make_shared<QuadraticOracle>(curvature, std::move(center));
}

std::shared_ptr<LossOracle> make_noisy_quadratic_oracle(double curvature, Vector center,
                                                        double noise_std) {
  return std::make_shared<NoisyQuadraticOracle>(curvature, std::move(center), noise_std);
}

ProblemInstance make_example1(double eta) {
  if (eta <= 0.0) throw std::invalid_argument("eta must be positive");
  ProblemInstance p;
  p.clients = {
      make_quadratic_oracle(1.0 / (3.0 * eta), Vector{0.0}),
      std::make_shared<SaddlePieceOracle>(eta),
      make_quadratic_oracle(1.0 / eta, Vector{2.0}),
  };
  p.true_labels = {0, 0, 1};
  p.num_clusters = 2;
  p.cluster_optima = {Vector{0.0}, Vector{2.0}};
  p.params.delta_i = 2.0 / 3.0;
  p.params.L = 1.0 / eta;
  assign_identities(p);
  return p;
}

ProblemInstance make_example2() {
  ProblemInstance p;
  p.clients = {
      make_quadratic_oracle(2.0, Vector{-0.5}),
      make_quadratic_oracle(2.0, Vector{0.5}),
  };
  p.true_labels = {0, 1};
  p.num_clusters = 2;
  p.cluster_optima = {Vector{-0.5}, Vector{0.5}};
  p.params.delta = 2.0;  // |f1' - f2'| = 2 everywhere
  p.params.delta_i = 0.5;
  p.params.L = 2.0;
  p.params.mu = 2.0;
  assign_identities(p);
  return p;
}

ProblemInstance make_example3(std::uint64_t) {
  ProblemInstance p;
  p.clients = {
      std::make_shared<LinearGradOracle>(0.0),
      std::make_shared<LinearGradOracle>(0.5),
      std::make_shared<CoinGradOracle>(),
  };
  p.true_labels = {0, 1, 1};
  p.num_clusters = 2;
  p.cluster_optima = {Vector{0.0}, Vector{0.5}};
  p.params.sigma = 0.5;  // the coin gradient has variance 1/4
  p.params.delta_i = 2.0 / 3.0;
  p.params.L = 1.0;
  assign_identities(p);
  return p;
}

RegressionOracle::RegressionOracle(std::vector<Vector> samples, Vector targets)
    : samples_(std::move(samples)), targets_(std::move(targets)) {
  if (samples_.empty() || samples_.size() != targets_.size()) {
    throw std::invalid_argument("regression oracle: samples/targets mismatch");
  }
}

int RegressionOracle::dim() const { return static_cast<int>(samples_.front().size()); }

Vector RegressionOracle::residuals(const Vector& x) const {
  Vector r(targets_.size());
  for (std::size_t j = 0; j < samples_.size(); ++j) {
    r[j] = dot(samples_[j], x) - targets_[j];
  }
  return r;
}

double RegressionOracle::value(const Vector& x) const {
  const Vector r = residuals(x);
  return norm_sq(r) / (2.0 * static_cast<double>(r.size()));
}

Vector RegressionOracle::grad(const Vector& x) const {
  Vector g(x.size(), 0.0);
  const Vector r = residuals(x);
  for (std::size_t j = 0; j < samples_.size(); ++j) {
    add_scaled(g, r[j], samples_[j]);
  }
  const double inv = 1.0 / static_cast<double>(samples_.size());
  for (double& v : g) v *= inv;
  return g;
}

Vector RegressionOracle::stoch_grad(const Vector& x, int batch_size, RngStream& rng) const {
  const int n = dataset_size();
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  if (batch_size >= n) return grad(x);
  const std::vector<int> batch = rng.sample_without_replacement(n, batch_size);
  Vector g(x.size(), 0.0);
  for (int j : batch) {
    const Vector& a = samples_[static_cast<std::size_t>(j)];
    add_scaled(g, dot(a, x) - targets_[static_cast<std::size_t>(j)], a);
  }
  const double inv = 1.0 / static_cast<double>(batch_size);
  for (double& v : g) v *= inv;
  return g;
}

double RegressionOracle::smoothness() const {
  // power iteration on H = (1/n) A A^T
  const int d = dim();
  Vector v(static_cast<std::size_t>(d), 1.0 / std::sqrt(static_cast<double>(d)));
  double lambda = 0.0;
  for (int it = 0; it < 60; ++it) {
    Vector hv(static_cast<std::size_t>(d), 0.0);
    for (std::size_t j = 0; j < samples_.size(); ++j) {
      add_scaled(hv, dot(samples_[j], v), samples_[j]);
    }
    const double inv = 1.0 / static_cast<double>(samples_.size());
    for (double& e : hv) e *= inv;
    lambda = norm(hv);
    if (lambda == 0.0) return 0.0;
    for (std::size_t j = 0; j < hv.size(); ++j) v[j] = hv[j] / lambda;
  }
  return lambda;
}

ProblemInstance make_synthetic_regression(int K, int n_i, int d, int n, std::uint64_t seed) {
  if (d <= n) throw std::invalid_argument("need d > n (overdetermined local system)");
  if (K < 1 || n_i < 1) throw std::invalid_argument("K and n_i must be positive");
  ProblemInstance p;
  p.num_clusters = K;
  for (int k = 0; k < K; ++k) {
    RngStream opt_rng(seed, {static_cast<std::uint64_t>(k), 0,
                             purpose_tag(Purpose::kClusterOptimum)});
    p.cluster_optima.push_back(opt_rng.normal_vector(d));
  }
  double max_L = 0.0;
  for (int k = 0; k < K; ++k) {
    for (int c = 0; c < n_i; ++c) {
      const int id = k * n_i + c;
      RngStream data_rng(seed, {static_cast<std::uint64_t>(id), 0,
                                purpose_tag(Purpose::kData)});
      std::vector<Vector> samples;
      samples.reserve(static_cast<std::size_t>(n));
      Vector targets(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) {
        // entries of A are N(k+1, 1); clusters are 1-based in the mean
        samples.push_back(data_rng.normal_vector(d, static_cast<double>(k + 1), 1.0));
        targets[static_cast<std::size_t>(j)] =
            dot(samples.back(), p.cluster_optima[static_cast<std::size_t>(k)]);
      }
      auto oracle = std::make_shared<RegressionOracle>(std::move(samples), std::move(targets));
      max_L = std::max(max_L, oracle->smoothness());
      p.clients.push_back(oracle);
      p.true_labels.push_back(k);
    }
  }
  p.params.delta_i = 1.0 / static_cast<double>(K);
  p.params.L = max_L;
  assign_identities(p);
  return p;
}

void dump_problem_csv(const ProblemInstance& problem, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "client_id,cluster_id,features,target\n";
  char buf[32];
  for (std::size_t i = 0; i < problem.clients.size(); ++i) {
    const auto* reg = dynamic_cast<const RegressionOracle*>(problem.clients[i].get());
    if (reg == nullptr) continue;
    for (int j = 0; j < reg->dataset_size(); ++j) {
      out << i << ',' << problem.true_labels[i];
      for (double v : reg->sample(j)) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ',' << buf;
      }
      std::snprintf(buf, sizeof(buf), "%.17g", reg->target(j));
      out << ',' << buf << '\n';
    }
  }
}

BlobData make_blobs(int K, int per_cluster, double sigma,
                    const std::vector<Vector>& centers, std::uint64_t seed) {
  if (static_cast<int>(centers.size()) != K) {
    throw std::invalid_argument("make_blobs: need one center per cluster");
  }
  BlobData data;
  data.centers = centers;
  const int d = static_cast<int>(centers.front().size());
  for (int k = 0; k < K; ++k) {
    RngStream rng(seed, {static_cast<std::uint64_t>(k), 0, purpose_tag(Purpose::kData)});
    for (int j = 0; j < per_cluster; ++j) {
      Vector pt = rng.normal_vector(d, 0.0, sigma);
      for (int c = 0; c < d; ++c) {
        pt[static_cast<std::size_t>(c)] += centers[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
      }
      data.points.push_back(std::move(pt));
      data.labels.push_back(k);
    }
  }
  double min_gap_sq = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < centers.size(); ++a) {
    for (std::size_t b = a + 1; b < centers.size(); ++b) {
      min_gap_sq = std::min(min_gap_sq, squared_distance(centers[a], centers[b]));
    }
  }
  data.params.sigma = sigma * std::sqrt(static_cast<double>(d));  // total std
  data.params.delta = centers.size() > 1 ? std::sqrt(min_gap_sq) : 0.0;
  data.params.delta_i = 1.0 / static_cast<double>(K);
  return data;
}

LowerBoundMixture make_lower_bound_mixture(double sigma, double delta_gap) {
  if (sigma < 0.0 || delta_gap <= 0.0) {
    throw std::invalid_argument("need sigma >= 0 and delta_gap > 0");
  }
  if (delta_gap * delta_gap < 2.0 * sigma * sigma) {
    throw std::invalid_argument("lower-bound mixture needs delta^2 >= 2 sigma^2");
  }
  LowerBoundMixture m;
  m.p = 0.5 - delta_gap / (2.0 * std::sqrt(4.0 * sigma * sigma + delta_gap * delta_gap));
  m.support_gap = delta_gap / (1.0 - 2.0 * m.p);
  m.d1 = {m.support_gap, m.p};
  m.d2 = {m.support_gap, 1.0 - m.p};
  m.error_floor = sigma * sigma * sigma * sigma / (4.0 * delta_gap * delta_gap);
  return m;
}

}  // namespace fedcluster

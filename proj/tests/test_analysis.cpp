#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fedcluster/analysis.hpp"
#include "fedcluster/problems.hpp"
#include "fedcluster/threshold.hpp"
#include "fedcluster/trainers.hpp"

using namespace fedcluster;

TEST_CASE("minimum-cost matching solves small instances") {
  CHECK(min_cost_assignment({{1.0}}) == std::vector<int>{0});
  CHECK(min_cost_assignment({{1, 100}, {100, 1}}) == std::vector<int>{0, 1});
  CHECK(min_cost_assignment({{100, 1}, {1, 100}}) == std::vector<int>{1, 0});
  // Greedy would pick (0,0)=0 and then be forced into (1,1)=100; the optimum
  // crosses over.
  CHECK(min_cost_assignment({{0, 1}, {2, 100}}) == std::vector<int>{1, 0});
}

TEST_CASE("intra-cluster ratio vanishes for singletons and identical clients") {
  ProblemInstance p;
  for (int i = 0; i < 3; ++i) {
    auto oracle = make_quadratic_oracle(2.0, {1.0});
    oracle->set_identity(static_cast<std::uint64_t>(i + 1));
    p.clients.push_back(oracle);
  }
  p.true_labels = {0, 0, 0};
  p.num_clusters = 1;
  const Vector x{0.3};
  CHECK(estimate_intra_ratio(p, x, {1})[0] == 0.0);
  for (double r : estimate_intra_ratio(p, x, {0, 1, 2})) CHECK(r == 0.0);
}

TEST_CASE("intra-cluster ratio is undefined at a shared optimum") {
  ProblemInstance p;
  for (int i = 0; i < 2; ++i) {
    auto oracle = make_quadratic_oracle(2.0, {1.0});
    oracle->set_identity(static_cast<std::uint64_t>(i + 1));
    p.clients.push_back(oracle);
  }
  p.true_labels = {0, 0};
  const std::vector<double> ratios = estimate_intra_ratio(p, {1.0}, {0, 1});
  for (double r : ratios) CHECK(std::isnan(r));
}

TEST_CASE("strongly convex quadratics with a shared optimum respect the curvature bound") {
  // Curvatures mu=1 and L=3 around one optimum: the ratio along any
  // trajectory stays at or below (2L/mu)^2.
  ProblemInstance p;
  auto a = make_quadratic_oracle(1.0, {2.0});
  auto b = make_quadratic_oracle(3.0, {2.0});
  a->set_identity(1);
  b->set_identity(2);
  p.clients = {a, b};
  p.true_labels = {0, 0};
  const double bound = (2.0 * 3.0 / 1.0) * (2.0 * 3.0 / 1.0);
  for (double x = -5.0; x <= 5.0; x += 0.25) {
    if (x == 2.0) continue;
    for (double r : estimate_intra_ratio(p, {x}, {0, 1})) {
      CHECK(r <= bound);
    }
  }
}

TEST_CASE("intra-cluster ratio ignores constant loss shifts") {
  // Gradients are unaffected by adding a constant to every loss, and the
  // estimator only consumes gradients.
  class ShiftedOracle : public LossOracle {
   public:
    ShiftedOracle(std::shared_ptr<LossOracle> base, double shift)
        : base_(std::move(base)), shift_(shift) {}
    int dim() const override { return base_->dim(); }
    double value(const Vector& x) const override { return base_->value(x) + shift_; }
    Vector grad(const Vector& x) const override { return base_->grad(x); }

   private:
    std::shared_ptr<LossOracle> base_;
    double shift_;
  };

  ProblemInstance plain;
  ProblemInstance shifted;
  for (int i = 0; i < 3; ++i) {
    auto base = make_quadratic_oracle(1.0 + i, {0.5});
    base->set_identity(static_cast<std::uint64_t>(i + 1));
    plain.clients.push_back(base);
    auto wrapped = std::make_shared<ShiftedOracle>(base, 42.0);
    wrapped->set_identity(static_cast<std::uint64_t>(i + 1));
    shifted.clients.push_back(wrapped);
  }
  plain.true_labels = shifted.true_labels = {0, 0, 0};
  const Vector x{-1.2};
  CHECK(estimate_intra_ratio(plain, x, {0, 1, 2}) ==
        estimate_intra_ratio(shifted, x, {0, 1, 2}));
}

TEST_CASE("inter-cluster separation on the two-quadratic pair is the constant 4") {
  const ProblemInstance p = make_example2();
  for (double x : {-3.0, 0.0, 0.25, 7.0}) {
    CHECK(estimate_inter_separation(p, {x}) == doctest::Approx(4.0).epsilon(1e-12));
  }
}

TEST_CASE("inter-cluster separation vanishes for identical clusters") {
  ProblemInstance p;
  for (int i = 0; i < 4; ++i) {
    auto oracle = make_quadratic_oracle(2.0, {1.0});
    oracle->set_identity(static_cast<std::uint64_t>(i + 1));
    p.clients.push_back(oracle);
  }
  p.true_labels = {0, 0, 1, 1};
  p.num_clusters = 2;
  CHECK(estimate_inter_separation(p, {0.0}) == 0.0);
}

TEST_CASE("inter-cluster separation is symmetric in cluster order") {
  ProblemInstance p = make_example2();
  ProblemInstance swapped = p;
  std::swap(swapped.clients[0], swapped.clients[1]);
  std::swap(swapped.true_labels[0], swapped.true_labels[1]);
  CHECK(estimate_inter_separation(p, {0.4}) == estimate_inter_separation(swapped, {0.4}));
}

TEST_CASE("center error matches centers to means optimally") {
  SUBCASE("exact centers give zero error") {
    const std::vector<Vector> means{{0, 0}, {5, 5}};
    for (double e : center_error(means, means)) CHECK(e == 0.0);
  }
  SUBCASE("single center against a hand mean") {
    const std::vector<double> err = center_error({{1, 1}}, {{4, 5}});
    CHECK(err[0] == squared_distance({1, 1}, {4, 5}));
  }
  SUBCASE("swapped centers are matched across") {
    const std::vector<double> err = center_error({{5, 5}, {0, 0}}, {{0, 0}, {5, 5}});
    CHECK(err[0] == 0.0);
    CHECK(err[1] == 0.0);
  }
  SUBCASE("identity pairing upper-bounds the optimal matching") {
    const std::vector<Vector> centers{{0.5, 0}, {4, 0}};
    const std::vector<Vector> means{{4.2, 0}, {0, 0}};
    const std::vector<double> matched = center_error(centers, means);
    double matched_total = 0.0;
    for (double e : matched) matched_total += e;
    double identity_total = 0.0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      identity_total += squared_distance(centers[k], means[k]);
    }
    CHECK(matched_total <= identity_total);
  }
}

TEST_CASE("momentum variance probe matches the closed forms") {
  auto noisy = make_noisy_quadratic_oracle(2.0, {0.0, 0.0, 0.0, 0.0}, 0.5);
  const Vector x(4, 1.0);
  // Total gradient noise variance: 4 coords * 0.25 = 1.
  SUBCASE("alpha=1 reproduces the raw noise variance") {
    const double v = momentum_variance_probe(*noisy, x, 1.0, 10000, 3);
    CHECK(v >= 0.8);
    CHECK(v <= 1.2);
  }
  SUBCASE("small alpha shrinks the variance below 1.2 alpha sigma^2") {
    const double v = momentum_variance_probe(*noisy, x, 0.1, 10000, 3);
    CHECK(v <= 0.12);
    // The stationary value is alpha/(2-alpha) sigma^2, about 0.0526 here.
    CHECK(v >= 0.03);
  }
  SUBCASE("a deterministic oracle has zero momentum variance") {
    auto exact = make_quadratic_oracle(2.0, {0.0});
    CHECK(momentum_variance_probe(*exact, {1.0}, 0.2, 2000, 3) == 0.0);
  }
}

TEST_CASE("clustering accuracy scores the best relabeling") {
  CHECK(clustering_accuracy({0, 1, 1}, {0, 1, 1}) == 1.0);
  CHECK(clustering_accuracy({1, 0, 0}, {0, 1, 1}) == 1.0);
  CHECK(clustering_accuracy({0, 0, 1}, {0, 1, 1}) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("clustering accuracy is invariant under relabeling either argument") {
  const std::vector<ClusterId> a{0, 0, 1, 2, 2, 1};
  const std::vector<ClusterId> b{1, 1, 0, 2, 0, 2};
  const double base = clustering_accuracy(a, b);
  std::vector<ClusterId> a_relab;
  for (ClusterId v : a) a_relab.push_back((v + 1) % 3);
  std::vector<ClusterId> b_relab;
  for (ClusterId v : b) b_relab.push_back((v + 2) % 3);
  CHECK(clustering_accuracy(a_relab, b) == base);
  CHECK(clustering_accuracy(a, b_relab) == base);
  CHECK(clustering_accuracy(a_relab, b_relab) == base);
}

TEST_CASE("clustering accuracy agrees between enumeration and matching") {
  // 9 and 10 labels straddle the switch from permutation enumeration to
  // assignment-based scoring; a label set present in both regimes must score
  // identically after padding with extra singleton labels.
  std::vector<ClusterId> a{0, 0, 1, 1, 2, 2, 3, 3};
  std::vector<ClusterId> b{1, 0, 1, 1, 2, 3, 3, 0};
  const double small = clustering_accuracy(a, b);
  std::vector<ClusterId> a_big = a;
  std::vector<ClusterId> b_big = b;
  for (ClusterId extra = 4; extra < 10; ++extra) {
    a_big.push_back(extra);
    b_big.push_back(extra);
  }
  const double big = clustering_accuracy(a_big, b_big);
  const int n_small = static_cast<int>(a.size());
  const int n_big = static_cast<int>(a_big.size());
  CHECK(big * n_big == doctest::Approx(small * n_small + (n_big - n_small)));
}

TEST_CASE("lower-bound mixture error floor is respected by clipped-mean estimation") {
  const double sigma = 1.0;
  const double delta_gap = 2.0;  // Delta^2 = 4 sigma^2
  const LowerBoundMixture mix = make_lower_bound_mixture(sigma, delta_gap);
  const int n_i = 30;
  double total_err = 0.0;
  const int seeds = 500;
  for (int seed = 0; seed < seeds; ++seed) {
    RngStream rng(static_cast<std::uint64_t>(seed), {0, 0, purpose_tag(Purpose::kData)});
    std::vector<Vector> points;
    for (int i = 0; i < n_i; ++i) points.push_back({mix.d1.sample(rng)});
    for (int i = 0; i < n_i; ++i) points.push_back({mix.d2.sample(rng)});
    const ClusteringResult res = run_threshold_clustering(
        points, 2, {{0.0}, {mix.support_gap}}, 10,
        TheoryScaledRadius{sigma, delta_gap, 0.5, 0.5});
    double best = squared_distance(res.state.centers[0], {mix.d1.mean()});
    best = std::min(best, squared_distance(res.state.centers[1], {mix.d1.mean()}));
    total_err += best;
  }
  CHECK(total_err / seeds >= mix.error_floor);
}

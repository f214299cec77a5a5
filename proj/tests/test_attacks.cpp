#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fedcluster/attacks.hpp"
#include "fedcluster/problems.hpp"
#include "fedcluster/threshold.hpp"
#include "fedcluster/trainers.hpp"

using namespace fedcluster;

TEST_CASE("sign flip negates the message") {
  CHECK(apply_attack(SignFlip{}, {2, -1}, {}) == Vector{-2, 1});
}

TEST_CASE("large gradient scales the message") {
  CHECK(apply_attack(LargeGradient{100.0}, {1, 0}, {}) == Vector{100, 0});
  CHECK_THROWS_AS(apply_attack(LargeGradient{-1.0}, {1, 0}, {}), std::invalid_argument);
}

TEST_CASE("no attack passes the message through") {
  CHECK(apply_attack(NoAttack{}, {3, 4}, {}) == Vector{3, 4});
  CHECK_FALSE(is_attack(NoAttack{}));
  CHECK(is_attack(SignFlip{}));
}

TEST_CASE("edge-of-ball point sits just inside the radius and survives clipping") {
  const Vector v{0, 0};
  AttackContext ctx;
  ctx.center = &v;
  ctx.radius = 3.0;
  const Vector out = apply_attack(EdgeOfBall{0.01}, {7, 7}, ctx);
  CHECK(out[0] == doctest::Approx(2.97).epsilon(1e-12));
  CHECK(out[1] == 0.0);
  CHECK(clip_point(out, v, 3.0) == out);
}

TEST_CASE("edge-of-ball placement bounds hold for random geometries") {
  RngStream rng(2, {0, 0, purpose_tag(Purpose::kAttack)});
  for (int trial = 0; trial < 100; ++trial) {
    const Vector v = rng.normal_vector(4);
    const Vector true_mean = rng.normal_vector(4);
    const double tau = 0.1 + 3.0 * rng.uniform();
    const double eps = 0.05 + 0.4 * rng.uniform();
    AttackContext ctx;
    ctx.center = &v;
    ctx.radius = tau;
    ctx.true_mean = &true_mean;
    const Vector out = apply_attack(EdgeOfBall{eps}, rng.normal_vector(4), ctx);
    const double dist = std::sqrt(squared_distance(out, v));
    CHECK(dist <= tau * (1.0 + 1e-12));
    CHECK(dist >= (1.0 - 2.0 * eps) * tau);
    CHECK(clip_point(out, v, tau) == out);
  }
}

TEST_CASE("edge-of-ball without a center context is a configuration error") {
  CHECK_THROWS_AS(apply_attack(EdgeOfBall{0.1}, {1, 0}, {}), std::invalid_argument);
}

TEST_CASE("schedule flags exactly floor(beta N) clients, stable per seed") {
  ByzantineSchedule sched;
  sched.beta = 0.25;
  sched.kind = SignFlip{};
  const std::vector<bool> flags = sched.flags(10, 3);
  int count = 0;
  for (bool f : flags) count += f;
  CHECK(count == 2);  // floor(0.25 * 10)
  CHECK(sched.flags(10, 3) == flags);
  ByzantineSchedule none;
  none.beta = 0.0;
  none.kind = SignFlip{};
  for (bool f : none.flags(10, 3)) CHECK_FALSE(f);
}

TEST_CASE("beta=0 leaves every trainer trajectory bit-identical") {
  const ProblemInstance p = make_synthetic_regression(2, 3, 6, 4, 5);
  TrainerConfig plain;
  plain.eta = 0.05;
  plain.rounds = 10;
  plain.batch_size = 2;
  plain.seed = 7;
  TrainerConfig zero_beta = plain;
  zero_beta.byz.beta = 0.0;
  zero_beta.byz.kind = LargeGradient{1e4};

  const RunRecord a = run_federated_clustering(p, plain);
  const RunRecord b = run_federated_clustering(p, zero_beta);
  REQUIRE(a.final_params.size() == b.final_params.size());
  CHECK(a.final_params == b.final_params);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].value == b.rows[i].value);
  }

  const RunRecord ga = run_fedavg(p, plain);
  const RunRecord gb = run_fedavg(p, zero_beta);
  CHECK(ga.final_params == gb.final_params);
}

TEST_CASE("edge-of-ball attackers degrade center estimation monotonically in beta") {
  const std::vector<Vector> centers{{0, 0, 0}, {10, 0, 0}};
  std::vector<double> errs;
  for (double beta : {0.0, 0.05, 0.1, 0.2}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const BlobData data = make_blobs(2, 30, 1.0, centers, seed);
      ByzantineSchedule sched;
      sched.beta = beta;
      sched.kind = EdgeOfBall{0.01};
      ClusteringAdversary adv;
      adv.kind = sched.kind;
      adv.true_means = &centers;
      const std::vector<bool> flags = sched.flags(static_cast<int>(data.points.size()), seed);
      for (std::size_t i = 0; i < flags.size(); ++i) {
        if (flags[i]) adv.byzantine.push_back(static_cast<int>(i));
      }
      const ClusteringResult res =
          run_threshold_clustering(data.points, 2, maximin_inits(data.points, 2), 10,
                                   PercentileRadius{33.0}, beta > 0.0 ? &adv : nullptr);
      for (int k = 0; k < 2; ++k) {
        double best = squared_distance(res.state.centers[0], centers[static_cast<std::size_t>(k)]);
        best = std::min(best,
                        squared_distance(res.state.centers[1], centers[static_cast<std::size_t>(k)]));
        total += best;
      }
    }
    errs.push_back(total / 200.0);
  }
  for (std::size_t i = 1; i < errs.size(); ++i) CHECK(errs[i] >= errs[i - 1]);
}

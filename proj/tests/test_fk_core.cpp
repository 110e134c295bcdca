#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dicpf/model.hpp"
#include "dicpf/rng.hpp"
#include "dicpf/weights.hpp"
#include "support/test_models.hpp"
#include "support/test_util.hpp"

using namespace dicpf;

TEST_CASE("rng streams are deterministic and distinct") {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  bool identical = true, all_same = true;
  for (int i = 0; i < 1000; ++i) {
    const double xa = a.uniform(), xb = b.uniform(), xc = c.uniform();
    identical = identical && (xa == xb);
    all_same = all_same && (xa == xc);
  }
  CHECK(identical);
  CHECK_FALSE(all_same);

  RngStream s1 = RngStream(42, 7).substream(3);
  RngStream s2 = RngStream(42, 7).substream(3);
  RngStream s3 = RngStream(42, 7).substream(4);
  CHECK(s1.uniform() == s2.uniform());
  CHECK(s1.uniform() != s3.uniform());
}

TEST_CASE("normalize_weights: equal log weights give uniform probabilities") {
  const auto nw = normalize_weights(Vector::Zero(4));
  for (int i = 0; i < 4; ++i) CHECK(nw.probs(i) == Catch::Approx(0.25).margin(1e-15));
  CHECK(nw.log_mean == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("normalize_weights: single support point") {
  Vector lw(2);
  lw << std::log(2.0), kNegInf;
  const auto nw = normalize_weights(lw);
  CHECK(nw.probs(0) == 1.0);
  CHECK(nw.probs(1) == 0.0);
  CHECK(nw.log_mean == Catch::Approx(std::log(2.0) - std::log(2.0)).margin(1e-12));
}

TEST_CASE("normalize_weights: invariant under constant shifts") {
  RngStream rng(1, 0);
  Vector a(16);
  for (int i = 0; i < 16; ++i) a(i) = rng.normal();

  // direct exponentiation is safe at these magnitudes: the oracle
  Vector direct = a.array().exp();
  direct /= direct.sum();

  const auto base = normalize_weights(a);
  for (int i = 0; i < 16; ++i) CHECK(base.probs(i) == Catch::Approx(direct(i)).margin(1e-12));

  for (double shift : {137.5, 700.0, -700.0, -3.25}) {
    const auto shifted = normalize_weights(a.array() + shift);
    for (int i = 0; i < 16; ++i) {
      CHECK(shifted.probs(i) == Catch::Approx(base.probs(i)).margin(1e-12));
    }
  }
}

TEST_CASE("normalize_weights: total degeneracy is an error") {
  Vector lw = Vector::Constant(5, kNegInf);
  CHECK_THROWS_AS(normalize_weights(lw), AllWeightsZeroError);
}

TEST_CASE("categorical_sample: point masses") {
  RngStream rng(2, 0);
  CHECK(categorical_sample(rng, Vector::Ones(1)) == 0);
  Vector p(3);
  p << 0.0, 1.0, 0.0;
  for (int rep = 0; rep < 100; ++rep) CHECK(categorical_sample(rng, p) == 1);
}

TEST_CASE("categorical_sample: frequencies match the probabilities") {
  RngStream rng(3, 0);
  Vector p(3);
  p << 0.2, 0.3, 0.5;
  const long n = 100000;
  Eigen::Vector3d counts = Eigen::Vector3d::Zero();
  for (long t = 0; t < n; ++t) counts(categorical_sample(rng, p)) += 1.0;
  for (int i = 0; i < 3; ++i) {
    const double freq = counts(i) / static_cast<double>(n);
    CHECK(std::abs(freq - p(i)) < 3.0 * testutil::binomial_se(p(i), n));
  }
}

TEST_CASE("categorical_sample_many matches the single-draw marginals") {
  RngStream rng(4, 0);
  Vector p(4);
  p << 0.1, 0.0, 0.6, 0.3;
  IndexVector out(100000);
  categorical_sample_many(rng, p, out);
  Eigen::Vector4d counts = Eigen::Vector4d::Zero();
  for (Eigen::Index t = 0; t < out.size(); ++t) counts(out(t)) += 1.0;
  CHECK(counts(1) == 0.0);
  for (int i = 0; i < 4; ++i) {
    const double freq = counts(i) / static_cast<double>(out.size());
    CHECK(std::abs(freq - p(i)) < 3.0 * testutil::binomial_se(p(i), out.size()) + 1e-12);
  }
}

TEST_CASE("simulate_prior_trajectory: single step returns the start") {
  testutil::FlatPotentialWalk model(1, 1.0);
  RngStream rng(5, 0);
  const auto traj = simulate_prior_trajectory(model, Vector::Constant(1, 2.5), rng);
  CHECK(traj.length() == 1);
  CHECK(traj.state(1)(0) == 2.5);
}

TEST_CASE("simulate_prior_trajectory: zero step noise keeps the path constant") {
  testutil::FlatPotentialWalk model(20, 0.0);
  RngStream rng(6, 0);
  const auto traj = simulate_prior_trajectory(model, Vector::Constant(1, -1.25), rng);
  for (int k = 1; k <= 20; ++k) CHECK(traj.state(k)(0) == -1.25);
}

TEST_CASE("simulate_prior_trajectory: increment variance obeys the law of large numbers") {
  const int T = 10000;
  testutil::FlatPotentialWalk model(T, 1.0);
  RngStream rng(7, 0);
  const auto traj = simulate_prior_trajectory(model, Vector::Zero(1), rng);
  std::vector<double> increments;
  increments.reserve(T - 1);
  for (int k = 2; k <= T; ++k) increments.push_back(traj.state(k)(0) - traj.state(k - 1)(0));
  CHECK(testutil::variance(increments) == Catch::Approx(1.0).epsilon(0.05));
}

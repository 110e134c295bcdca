#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dicpf/init_kernels.hpp"
#include "dicpf/reversibility.hpp"
#include "dicpf/stat_tests.hpp"
#include "support/test_util.hpp"

using namespace dicpf;

namespace {

/// Autoregression with the wrong carry-over factor (0.9 instead of
/// sqrt(1 - beta^2)): not reversible w.r.t. N(mu, Sigma).
struct BrokenCnKernel {
  CrankNicolsonKernel inner;

  Vector sample(const Vector& x, RngStream& rng) const {
    const Vector w = inner.chol_lower() * rng.normal_vector(inner.dim());
    return 0.9 * (x - inner.mu()) + inner.beta() * w + inner.mu();
  }
  bool is_exact_m1_draw() const { return false; }
};

}  // namespace

TEST_CASE("cn_sample: beta == 1 draws fresh from the initial measure") {
  const Vector mu = Vector::Constant(1, 3.0);
  const Matrix sigma = Matrix::Constant(1, 1, 4.0);
  CrankNicolsonKernel kernel(mu, sigma, 1.0);
  RngStream rng(11, 0);
  const long n = 100000;
  std::vector<double> draws(n);
  for (long t = 0; t < n; ++t) draws[t] = cn_sample(kernel, Vector::Constant(1, -50.0), rng)(0);
  const double se = 2.0 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(testutil::mean(draws) - 3.0) < 3.0 * se);
  CHECK(kernel.is_exact_m1_draw());
}

TEST_CASE("cn_sample: pinned noise isolates the autoregressive part") {
  CrankNicolsonKernel kernel(Vector::Zero(1), Matrix::Identity(1, 1), 0.6);
  const Vector z = kernel.apply_noise(Vector::Constant(1, 5.0), Vector::Zero(1));
  CHECK(z(0) == Catch::Approx(4.0).margin(1e-15));
}

TEST_CASE("cn_sample: conditional mean and variance match the closed form") {
  CrankNicolsonKernel kernel(Vector::Constant(1, 2.0), Matrix::Constant(1, 1, 9.0), 0.3);
  RngStream rng(12, 0);
  const long n = 1000000;
  std::vector<double> draws(n);
  const Vector x = Vector::Constant(1, 10.0);
  for (long t = 0; t < n; ++t) draws[t] = kernel.sample(x, rng)(0);

  const double expected_mean = std::sqrt(0.91) * 8.0 + 2.0;  // 9.6315...
  const double expected_var = 0.3 * 0.3 * 9.0;               // 0.81
  const double mean_se = std::sqrt(expected_var / static_cast<double>(n));
  const double var_se = expected_var * std::sqrt(2.0 / static_cast<double>(n - 1));
  CHECK(std::abs(testutil::mean(draws) - expected_mean) < 3.0 * mean_se);
  CHECK(std::abs(testutil::variance(draws) - expected_var) < 3.0 * var_se);
}

TEST_CASE("cn kernel validates beta") {
  CHECK_THROWS_AS(CrankNicolsonKernel(Vector::Zero(1), Matrix::Identity(1, 1), 0.0), ConfigError);
  CHECK_THROWS_AS(CrankNicolsonKernel(Vector::Zero(1), Matrix::Identity(1, 1), 1.5), ConfigError);
}

TEST_CASE("rw_mh_sample: unconstrained walk never rejects") {
  RandomWalkKernel kernel(Matrix::Identity(2, 2), Domain::all(2));
  RngStream rng(13, 0);
  Vector x = Vector::Zero(2);
  for (int t = 0; t < 10000; ++t) {
    auto [y, accepted] = rw_mh_sample(kernel, x, rng);
    REQUIRE(accepted);
    x = y;
  }
}

TEST_CASE("rw_mh_sample: proposal outside the box is rejected in place") {
  RandomWalkKernel kernel(Matrix::Constant(1, 1, 0.04),
                          Domain::box(Vector::Zero(1), Vector::Ones(1)));
  const auto [y, accepted] = kernel.accept_step(Vector::Constant(1, 0.5), Vector::Constant(1, 2.0));
  CHECK(y(0) == 0.5);
  CHECK_FALSE(accepted);
}

TEST_CASE("rw_mh_sample: starting outside the domain is an error") {
  RandomWalkKernel kernel(Matrix::Constant(1, 1, 0.04),
                          Domain::box(Vector::Zero(1), Vector::Ones(1)));
  RngStream rng(14, 0);
  CHECK_THROWS_AS(kernel.sample_mh(Vector::Constant(1, 3.0), rng), StartOutsideDomainError);
}

TEST_CASE("rw_mh_sample: box occupancy matches the uniform invariant law") {
  RandomWalkKernel kernel(Matrix::Constant(1, 1, 0.04),
                          Domain::box(Vector::Zero(1), Vector::Ones(1)));
  RngStream rng(15, 0);
  Vector x = Vector::Constant(1, 0.5);
  const long n = 1000000;
  const int n_batches = 100;
  const long batch = n / n_batches;
  std::vector<double> batch_means(n_batches, 0.0);
  for (int bidx = 0; bidx < n_batches; ++bidx) {
    long hits = 0;
    for (long t = 0; t < batch; ++t) {
      x = kernel.sample(x, rng);
      if (x(0) <= 0.5) ++hits;
    }
    batch_means[bidx] = static_cast<double>(hits) / static_cast<double>(batch);
  }
  const double occupancy = testutil::mean(batch_means);
  const double se = testutil::sd(batch_means) / std::sqrt(static_cast<double>(n_batches));
  CHECK(std::abs(occupancy - 0.5) < 3.0 * se);
}

TEST_CASE("rw kernel steps are symmetric about zero on an unconstrained domain") {
  RandomWalkKernel kernel(Matrix::Constant(1, 1, 2.25), Domain::all(1));
  RngStream rng(16, 0);
  const long n = 40000;
  std::vector<double> first_half, flipped_second_half;
  Vector x = Vector::Zero(1);
  for (long t = 0; t < n; ++t) {
    const Vector y = kernel.sample(x, rng);
    const double diff = y(0) - x(0);
    if (t < n / 2) first_half.push_back(diff);
    else flipped_second_half.push_back(-diff);
    x = y;
  }
  const KsResult ks = ks_test_two_sample(first_half, flipped_second_half);
  CHECK(ks.p_value > 0.001);
}

TEST_CASE("exact_m1_kernel: moments of the initial measure") {
  const auto m1 = InitialMeasure::gaussian(Vector::Zero(1), Matrix::Constant(1, 1, 100.0));
  const auto kernel = exact_m1_kernel(m1);
  RngStream rng(17, 0);
  const long n = 100000;
  std::vector<double> draws(n);
  for (long t = 0; t < n; ++t) draws[t] = kernel.sample(Vector::Constant(1, 123.0), rng)(0);
  const double mean_se = 10.0 / std::sqrt(static_cast<double>(n));
  const double sd_se = 10.0 / std::sqrt(2.0 * static_cast<double>(n));
  CHECK(std::abs(testutil::mean(draws)) < 3.0 * mean_se);
  CHECK(std::abs(testutil::sd(draws) - 10.0) < 3.0 * sd_se);
  CHECK(kernel.is_exact_m1_draw());
}

TEST_CASE("exact_m1_kernel: distribution agrees with the beta == 1 autoregression") {
  const auto m1 = InitialMeasure::gaussian(Vector::Constant(1, 1.0), Matrix::Constant(1, 1, 2.0));
  const auto exact = exact_m1_kernel(m1);
  const CrankNicolsonKernel cn(m1.mean(), m1.cov(), 1.0);
  RngStream rng(18, 0);
  const long n = 10000;
  std::vector<double> a(n), b(n);
  for (long t = 0; t < n; ++t) a[t] = exact.sample(Vector::Constant(1, -4.0), rng)(0);
  for (long t = 0; t < n; ++t) b[t] = cn.sample(Vector::Constant(1, 9.0), rng)(0);
  CHECK(ks_test_two_sample(a, b).p_value > 0.001);
}

TEST_CASE("exact_m1_kernel: output does not depend on the conditioning point") {
  const auto m1 = InitialMeasure::gaussian(Vector::Zero(1), Matrix::Identity(1, 1));
  const auto kernel = exact_m1_kernel(m1);
  RngStream rng(19, 0);
  const long n = 50000;
  double sum_x = 0.0, sum_z = 0.0, sum_xx = 0.0, sum_zz = 0.0, sum_xz = 0.0;
  for (long t = 0; t < n; ++t) {
    const double x = rng.normal() * 5.0;
    const double z = kernel.sample(Vector::Constant(1, x), rng)(0);
    sum_x += x; sum_z += z; sum_xx += x * x; sum_zz += z * z; sum_xz += x * z;
  }
  const double nd = static_cast<double>(n);
  const double cov = sum_xz / nd - (sum_x / nd) * (sum_z / nd);
  const double vx = sum_xx / nd - (sum_x / nd) * (sum_x / nd);
  const double vz = sum_zz / nd - (sum_z / nd) * (sum_z / nd);
  const double corr = cov / std::sqrt(vx * vz);
  CHECK(std::abs(corr) < 3.0 / std::sqrt(nd));
}

TEST_CASE("exact_m1_kernel: improper initial measures are refused") {
  const auto m1 = InitialMeasure::uniform_improper(Domain::all(1));
  CHECK_THROWS_AS(exact_m1_kernel(m1), ImproperM1Error);
}

TEST_CASE("reversibility_test: autoregressive kernel under its own Gaussian measure") {
  Vector mu(2);
  mu << 1.0, -2.0;
  Matrix sigma(2, 2);
  sigma << 2.0, 0.6, 0.6, 1.0;
  const auto m1 = InitialMeasure::gaussian(mu, sigma);
  CrankNicolsonKernel kernel(mu, sigma, 0.5);
  RngStream rng(20, 0);
  auto start = [&m1](RngStream& r) { return m1.sample(r); };
  const auto report = reversibility_test(kernel, start, 100000, rng);
  INFO("min p-value " << report.min_p());
  CHECK(report.passed(0.001));
}

TEST_CASE("reversibility_test: constrained random walk from a stationary chain") {
  RandomWalkKernel kernel(Matrix::Constant(1, 1, 0.04),
                          Domain::box(Vector::Zero(1), Vector::Ones(1)));
  RngStream rng(21, 0);
  StationaryChainSampler start(kernel, Vector::Constant(1, 0.5), 5000, 100);
  const auto report = reversibility_test(kernel, start, 100000, rng);
  INFO("min p-value " << report.min_p());
  CHECK(report.passed(0.001));
}

TEST_CASE("reversibility_test: broken autoregression is detected") {
  const Vector mu = Vector::Zero(1);
  const Matrix sigma = Matrix::Identity(1, 1);
  const auto m1 = InitialMeasure::gaussian(mu, sigma);
  BrokenCnKernel kernel{CrankNicolsonKernel(mu, sigma, 0.5)};
  RngStream rng(22, 0);
  auto start = [&m1](RngStream& r) { return m1.sample(r); };
  const auto report = reversibility_test(kernel, start, 100000, rng);
  double square_diff_p = 1.0;
  for (const auto& t : report.tests) {
    if (t.name.rfind("square-diff", 0) == 0) square_diff_p = t.p_value;
  }
  CHECK(square_diff_p < 1e-6);
  CHECK_FALSE(report.passed(0.001));
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dicpf/models/kalman.hpp"
#include "dicpf/models/mvn_static.hpp"
#include "dicpf/models/noisy_ar.hpp"
#include "dicpf/models/seir.hpp"
#include "dicpf/models/stochastic_volatility.hpp"
#include "support/test_util.hpp"

using namespace dicpf;

namespace {

/// Numerical integral of exp(log_density) over [lo, hi] (Simpson).
template <typename F>
double integrate_density(F&& log_density, double lo, double hi, int n_intervals = 4000) {
  const double h = (hi - lo) / n_intervals;
  double acc = std::exp(log_density(lo)) + std::exp(log_density(hi));
  for (int i = 1; i < n_intervals; ++i) {
    acc += std::exp(log_density(lo + i * h)) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("noisy AR: constructor guards") {
  Vector y = Vector::Zero(5);
  CHECK_THROWS_AS(NoisyArModel({0.8, 0.0, 0.5, 1.0, false}, y), ConfigError);
  CHECK_THROWS_AS(NoisyArModel({0.8, 0.5, 0.0, 1.0, false}, y), ConfigError);
  CHECK_THROWS_AS(NoisyArModel({0.8, 0.5, 0.5, 0.0, false}, y), ConfigError);
  CHECK_NOTHROW(NoisyArModel({0.8, 0.5, 0.5, 0.0, true}, y));  // flat prior ignores sigma1
}

TEST_CASE("noisy AR: first potential at the observation") {
  Vector y(3);
  y << 0.7, 0.0, -0.1;
  NoisyArModel model({0.8, 0.5, 0.5, 10.0, false}, y);
  const double lp = model.log_potential(1, Vector::Zero(1), Vector::Constant(1, 0.7));
  CHECK(lp == Catch::Approx(gaussian_logpdf(0.0, 0.0, 0.5)).margin(1e-12));
}

TEST_CASE("noisy AR: transition density integrates to one") {
  Vector y = Vector::Zero(2);
  NoisyArModel model({0.8, 0.7, 0.5, 1.0, false}, y);
  const Vector prev = Vector::Constant(1, 1.3);
  auto logdens = [&](double x) {
    return model.log_transition_density(2, prev, Vector::Constant(1, x));
  };
  const double center = 0.8 * 1.3;
  CHECK(integrate_density(logdens, center - 8 * 0.7, center + 8 * 0.7) ==
        Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("stochastic volatility: potential reductions and symmetry") {
  Vector y(2);
  y << 1.3, 2.0;
  SvModel model({1.0, 1.0, 1.0, false}, y);

  // unit volatility at x = 0
  CHECK(model.log_potential(1, Vector::Zero(1), Vector::Zero(1)) ==
        Catch::Approx(gaussian_logpdf(1.3, 0.0, 1.0)).margin(1e-12));

  // closed form at x = 1, y = 2
  const double expected = -0.5 * std::log(2.0 * M_PI) - 1.0 - 2.0 * std::exp(-2.0);
  CHECK(model.log_potential(2, Vector::Zero(1), Vector::Ones(1)) ==
        Catch::Approx(expected).margin(1e-12));

  // even in the observation
  Vector y_neg(2);
  y_neg << -1.3, -2.0;
  SvModel mirrored({1.0, 1.0, 1.0, false}, y_neg);
  for (double x : {-2.0, -0.5, 0.0, 1.7}) {
    CHECK(model.log_potential(1, Vector::Zero(1), Vector::Constant(1, x)) ==
          Catch::Approx(mirrored.log_potential(1, Vector::Zero(1), Vector::Constant(1, x)))
              .margin(1e-14));
  }
}

TEST_CASE("stochastic volatility: potential is finite for finite inputs") {
  Vector y(1);
  y << 250.0;
  SvModel model({1.0, 2.0, 1.0, false}, y);
  for (double x : {-30.0, -5.0, 0.0, 5.0, 30.0}) {
    const double lp = model.log_potential(1, Vector::Zero(1), Vector::Constant(1, x));
    CHECK(std::isfinite(lp));
  }
}

TEST_CASE("stochastic volatility: transition density integrates to one") {
  Vector y = Vector::Zero(2);
  SvModel model({0.4, 1.0, 1.0, false}, y);
  const Vector prev = Vector::Constant(1, -0.6);
  auto logdens = [&](double x) {
    return model.log_transition_density(2, prev, Vector::Constant(1, x));
  };
  CHECK(integrate_density(logdens, -0.6 - 8 * 0.4, -0.6 + 8 * 0.4) ==
        Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("static multivariate normal: potential value, rotation invariance, gradient") {
  MvnStaticModel model1(MvnStaticParams{1, 1.0});
  CHECK(model1.log_potential(1, Vector::Zero(1), Vector::Zero(1)) ==
        Catch::Approx(-0.5 * std::log(2.0 * M_PI)).margin(1e-12));

  MvnStaticModel model2(MvnStaticParams{2, 3.0});
  Vector x(2);
  x << 1.2, -0.7;
  const double angle = 0.83;
  Matrix rot(2, 2);
  rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  CHECK(model2.log_potential(1, x, x) ==
        Catch::Approx(model2.log_potential(1, x, rot * x)).margin(1e-12));

  // central finite differences against the analytic gradient -x / sigma^2
  const double h = 1e-6;
  for (int i = 0; i < 2; ++i) {
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    const double fd = (model2.log_potential(1, x, xp) - model2.log_potential(1, x, xm)) / (2 * h);
    CHECK(fd == Catch::Approx(-x(i) / 9.0).margin(1e-4));
  }
}

TEST_CASE("seir: no infected means certainly zero counts") {
  SeirParams params;
  params.popsize = 1000;
  Vector y0 = Vector::Zero(1);
  SeirModel model(params, y0);
  Vector state(5);
  state << 1000, 0, 0, 0, 0.0;
  CHECK(model.log_potential(1, state, state) == 0.0);

  Vector y1 = Vector::Constant(1, 3.0);
  SeirModel model_pos(params, y1);
  CHECK(model_pos.log_potential(1, state, state) == kNegInf);
}

TEST_CASE("seir: compartments are conserved exactly along simulated paths") {
  SeirParams params;
  params.popsize = 100000;
  SeirModel model(params, Vector::Zero(1));
  RngStream rng(60, 0);
  Vector state(5);
  state << 99000, 600, 400, 0, logit(3.0 / params.r0_max);
  for (int step = 0; step < 10000; ++step) {
    state = model.sample_transition(2, state, rng);
    REQUIRE(state(seir::kS) + state(seir::kE) + state(seir::kI) + state(seir::kR) ==
            params.popsize);
    REQUIRE(state(seir::kS) >= 0);
  }
}

TEST_CASE("seir: one-step infection flow has the binomial mean") {
  SeirParams params;
  params.popsize = 100000;
  SeirModel model(params, Vector::Zero(1));
  const double p_gamma = model.p_recovery();
  const double target_beta = 0.3;
  const double rho = logit(target_beta / (params.r0_max * p_gamma));

  Vector state(5);
  state << 1000, 500, 100, 98400, rho;
  const double p_expected = 1.0 - std::exp(-target_beta * 100.0 / params.popsize);

  RngStream rng(61, 0);
  const long n = 1000000;
  double total = 0.0;
  for (long t = 0; t < n; ++t) {
    const Vector next = model.sample_transition(2, state, rng);
    total += state(seir::kS) - next(seir::kS);
  }
  const double mean_de = total / static_cast<double>(n);
  const double se = std::sqrt(1000.0 * p_expected * (1.0 - p_expected) / static_cast<double>(n));
  CHECK(std::abs(mean_de - 1000.0 * p_expected) < 3.0 * se);
}

TEST_CASE("seir: transition density is a proper pmf over reachable states") {
  SeirParams params;
  params.popsize = 50;
  params.rw_sd = 0.3;
  SeirModel model(params, Vector::Zero(1));
  Vector state(5);
  state << 30, 12, 8, 0, 0.2;

  // marginalise the three binomial flows; the rho increment integrates to one
  double total = 0.0;
  for (int de = 0; de <= 30; ++de) {
    for (int di = 0; di <= 12; ++di) {
      for (int dr = 0; dr <= 8; ++dr) {
        Vector next(5);
        next << 30 - de, 12 + de - di, 8 + di - dr, dr, 0.2;
        const double lp = model.log_transition_density(2, state, next) -
                          gaussian_logpdf(0.2, 0.2, params.rw_sd);
        total += std::exp(lp);
      }
    }
  }
  CHECK(total == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("seir: observation size gives the stated mean") {
  SeirParams params;
  params.popsize = 100000;
  SeirModel model(params, Vector::Zero(1));
  const double infected = 500.0;
  const double expected_mean = params.sampling_effort * model.p_recovery() * infected;

  RngStream rng(62, 0);
  const long n = 200000;
  double total = 0.0;
  for (long t = 0; t < n; ++t) {
    total += static_cast<double>(
        rng.neg_binomial(model.obs_size(infected), params.obs_failure_prob));
  }
  const double sample_mean = total / static_cast<double>(n);
  // var = mean / p for this parameterisation
  const double se = std::sqrt(expected_mean / params.obs_failure_prob / static_cast<double>(n));
  CHECK(std::abs(sample_mean - expected_mean) < 3.0 * se);
}

TEST_CASE("seir: initial domain constraint set") {
  const Domain domain = seir_initial_domain(1000);
  Vector ok(5);
  ok << 900, 60, 40, 0, -1.2;
  CHECK(domain.contains(ok));

  Vector bad_sum(5);
  bad_sum << 900, 60, 41, 0, -1.2;
  CHECK_FALSE(domain.contains(bad_sum));

  Vector bad_r(5);
  bad_r << 900, 60, 40, 1, -1.2;
  CHECK_FALSE(domain.contains(bad_r));

  // reconstruction rounds and rebuilds the susceptible count
  Vector free(3);
  free << 0.4, 59.7, 40.2;
  const Vector rebuilt = domain.from_free(free);
  CHECK(rebuilt(seir::kE) == 60);
  CHECK(rebuilt(seir::kI) == 40);
  CHECK(rebuilt(seir::kS) == 900);
  CHECK(rebuilt(seir::kR) == 0);
  CHECK(domain.contains(rebuilt));
}

TEST_CASE("kalman: single-step posterior equals the Gaussian product") {
  NoisyArParams params{1.0, 1.0, 0.5, 2.0, false};
  Vector y = Vector::Constant(1, 1.4);
  const auto kf = kalman_smooth(params, y);
  const double prior_var = 4.0, obs_var = 0.25;
  const double post_var = 1.0 / (1.0 / prior_var + 1.0 / obs_var);
  const double post_mean = post_var * (1.4 / obs_var);
  CHECK(kf.smooth_mean(0) == Catch::Approx(post_mean).margin(1e-12));
  CHECK(kf.smooth_var(0) == Catch::Approx(post_var).margin(1e-12));
  CHECK(kf.loglik == Catch::Approx(gaussian_logpdf(1.4, 0.0, std::sqrt(prior_var + obs_var)))
                        .margin(1e-12));
}

TEST_CASE("kalman: flat prior single step centres on the observation") {
  NoisyArParams params{1.0, 1.0, 0.5, 1.0, true};
  Vector y = Vector::Constant(1, -2.2);
  const auto kf = kalman_smooth(params, y);
  CHECK(kf.smooth_mean(0) == Catch::Approx(-2.2).margin(1e-12));
  CHECK(kf.smooth_var(0) == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("kalman: smoother matches the dense-precision oracle at T = 5") {
  Vector y(5);
  y << 0.3, -0.4, 0.8, 0.1, -0.6;

  for (bool flat : {false, true}) {
    NoisyArParams params{1.0, 0.7, 0.5, 3.0, flat};
    const auto kf = kalman_smooth(params, y);

    // independent route: posterior precision of x_{1:5} given y
    const double qx = 1.0 / (0.7 * 0.7), ry = 1.0 / (0.5 * 0.5);
    Matrix precision = Matrix::Zero(5, 5);
    Vector shift = Vector::Zero(5);
    if (!flat) precision(0, 0) += 1.0 / 9.0;
    for (int k = 0; k < 4; ++k) {
      precision(k, k) += qx;
      precision(k + 1, k + 1) += qx;
      precision(k, k + 1) -= qx;
      precision(k + 1, k) -= qx;
    }
    for (int k = 0; k < 5; ++k) {
      precision(k, k) += ry;
      shift(k) += y(k) * ry;
    }
    const Matrix cov = precision.inverse();
    const Vector mean = cov * shift;
    for (int k = 0; k < 5; ++k) {
      CHECK(kf.smooth_mean(k) == Catch::Approx(mean(k)).margin(1e-8));
      CHECK(kf.smooth_var(k) == Catch::Approx(cov(k, k)).margin(1e-8));
    }
  }
}

TEST_CASE("kalman: posterior sampler reproduces the smoothing moments") {
  NoisyArParams params{1.0, 0.6, 0.8, 5.0, false};
  RngStream data_rng(63, 0);
  auto [x_true, y] = simulate_noisy_ar(params, 12, 0.0, data_rng);
  const auto kf = kalman_smooth(params, y);

  RngStream rng(64, 0);
  const long n = 20000;
  std::vector<double> first(n), last(n);
  for (long t = 0; t < n; ++t) {
    const Vector draw = kalman_posterior_sample(params, y, rng);
    first[t] = draw(0);
    last[t] = draw(11);
  }
  const double se1 = std::sqrt(kf.smooth_var(0) / n);
  const double seT = std::sqrt(kf.smooth_var(11) / n);
  CHECK(std::abs(testutil::mean(first) - kf.smooth_mean(0)) < 3.0 * se1);
  CHECK(std::abs(testutil::mean(last) - kf.smooth_mean(11)) < 3.0 * seT);
  CHECK(testutil::variance(first) == Catch::Approx(kf.smooth_var(0)).epsilon(0.05));
  CHECK(testutil::variance(last) == Catch::Approx(kf.smooth_var(11)).epsilon(0.05));
}

TEST_CASE("simulate_noisy_ar: degenerate noise is rejected") {
  RngStream rng(65, 0);
  CHECK_THROWS_AS(simulate_noisy_ar({1.0, 1.0, 0.0, 1.0, false}, 10, 0.0, rng), ConfigError);
}

TEST_CASE("simulate_noisy_ar: smoother recovers the truth to observation accuracy") {
  NoisyArParams params{1.0, 0.5, 1.0, 10.0, false};
  RngStream rng(66, 0);
  auto [x_true, y] = simulate_noisy_ar(params, 50, 0.0, rng);
  const auto kf = kalman_smooth(params, y);
  double rmse = 0.0;
  for (int k = 0; k < 50; ++k) {
    rmse += (kf.smooth_mean(k) - x_true(k)) * (kf.smooth_mean(k) - x_true(k));
  }
  rmse = std::sqrt(rmse / 50.0);
  CHECK(rmse < 2.0 * params.sigma_y);
}

TEST_CASE("simulate_seir: conservation and piecewise schedule") {
  SeirParams params;
  params.popsize = 200000;
  RngStream rng(67, 0);
  const Vector rho = piecewise_r0_path(60, {1, 21, 41}, {3.0, 1.2, 0.8}, params.r0_max);
  CHECK(inv_logit(rho(0)) * params.r0_max == Catch::Approx(3.0).margin(1e-12));
  CHECK(inv_logit(rho(30)) * params.r0_max == Catch::Approx(1.2).margin(1e-12));
  CHECK(inv_logit(rho(59)) * params.r0_max == Catch::Approx(0.8).margin(1e-12));

  const auto sim = simulate_seir(params, rho, 300, 150, rng);
  REQUIRE(sim.counts.size() == 60);
  for (int k = 0; k < 60; ++k) {
    CHECK(sim.latent(seir::kS, k) + sim.latent(seir::kE, k) + sim.latent(seir::kI, k) +
              sim.latent(seir::kR, k) ==
          params.popsize);
    CHECK(sim.counts(k) >= 0.0);
  }
}

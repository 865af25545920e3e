#include "oracles.hpp"
#include "pclna/kalman.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace pclna;
using pclna::test::model;

namespace {

const LimitCycleBundle& cycle() {
  static const auto net = model("brusselator");
  static const auto lc = find_limit_cycle(net, net.parameter_values(), net.initial_concentrations());
  return lc;
}

Trajectory noisy_path(const LimitCycleBundle& lc, int n, double dt, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 30.0);
  Trajectory tr;
  tr.states.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    tr.times.push_back(i * dt);
    const Vec x = lc.network().omega() * lc.phi(i * dt);
    tr.states(i, 0) = x(0) + z(rng);
    tr.states(i, 1) = x(1) + z(rng);
  }
  return tr;
}

PriorState cycle_prior(const LimitCycleBundle& lc) {
  return {lc.network().omega() * lc.anchor(), 100.0 * Mat::Identity(2, 2)};
}

}  // namespace

TEST(Kalman, ConditioningMatchesJointGaussian) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 20; ++rep) {
    const Mat sigma = pclna::test::random_spd(rng, 3);
    Vec mu(3), y(2);
    mu << z(rng), z(rng), z(rng);
    y << z(rng), z(rng);
    ObservationModel obs{Mat::Zero(2, 3), 0.5 * Mat::Identity(2, 2)};
    obs.B(0, 0) = 1.0;
    obs.B(1, 2) = 1.0;
    const auto post = condition_on_observation(mu, sigma, obs, y);
    ASSERT_TRUE(post.ok);
    // joint of (x, y) then Schur complement
    const Mat Syy = obs.B * sigma * obs.B.transpose() + obs.sigma_e;
    const Mat Sxy = sigma * obs.B.transpose();
    const Mat K = Sxy * Syy.inverse();
    EXPECT_LT((post.mu - (mu + K * (y - obs.B * mu))).norm(), 1e-12);
    EXPECT_LT((post.cov - (sigma - K * Sxy.transpose())).norm(), 1e-12);
    EXPECT_NEAR(post.log_density, oracle::mvn_logpdf_dense(y, obs.B * mu, Syy), 1e-12);
  }
}

TEST(Kalman, TransversalConditionalIsConditionalCovariance) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 20; ++rep) {
    const Mat sigma = pclna::test::random_spd(rng, 3);
    Vec f(3);
    f << z(rng), z(rng), z(rng);
    const auto basis = transversal_basis(f);
    const Vec se = sigma * basis.e1;
    const Mat expect = sigma - se * se.transpose() / basis.e1.dot(se);
    const Mat got = transversal_conditional(sigma, basis);
    EXPECT_LT((got - expect).norm(), 1e-10 * sigma.norm());
    EXPECT_LT((got * basis.e1).norm(), 1e-10 * sigma.norm());
  }
}

TEST(Kalman, SingleObservationIsGaussianDensity) {
  const auto& lc = cycle();
  const auto obs = ObservationModel::select(lc.network(), {"X"}, 25.0);
  const auto prior = cycle_prior(lc);
  Trajectory one;
  one.times = {0.0};
  one.states.resize(1, 1);
  one.states(0, 0) = prior.mu0(0) + 7.0;
  const double var = prior.sigma0(0, 0) + 25.0;
  const double expect = -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * 49.0 / var;
  EXPECT_NEAR(pclna_loglik(lc, obs, prior, one).loglik, expect, 1e-12);
  EXPECT_NEAR(lna_loglik(lc, lc.network().omega(), obs, prior, one).loglik, expect, 1e-12);
  EXPECT_NEAR(restart_loglik(lc.network(), lc.theta(), obs, prior, one).loglik, expect, 1e-12);
}

TEST(Kalman, LnaFilterMatchesJointDensityOnLinearNetwork) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.3, 2.0);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 5; ++rep) {
    const oracle::LinearPair lin{u(rng) * 20.0, u(rng), u(rng), u(rng)};
    auto params = parse_model(oracle::LinearPair::model_text());
    auto p = params.parameters();
    p[0].value = lin.k1;
    p[1].value = lin.k2;
    p[2].value = lin.k3;
    p[3].value = lin.k4;
    const double omega = 10.0;
    const ReactionNetwork net(params.species(), p, params.reactions(), omega, params.initial());

    std::vector<double> times{0.0};
    for (int i = 1; i < 10; ++i) times.push_back(times.back() + 0.2 + u(rng));
    Vec mu0(2);
    mu0 << 50.0 * u(rng), 50.0 * u(rng);
    const Mat sigma0 = pclna::test::random_spd(rng, 2, 1.0);
    const auto obs = rep % 2 == 0 ? ObservationModel::select(net, {"A", "B"}, 4.0)
                                  : ObservationModel::select(net, {"B"}, 4.0);
    Trajectory tr;
    tr.times = times;
    tr.states.resize(10, obs.B.rows());
    for (int i = 0; i < 10; ++i)
      for (Eigen::Index j = 0; j < obs.B.rows(); ++j) tr.states(i, j) = 60.0 * u(rng);

    const double expect = oracle::joint_lna_logdensity(lin, omega, mu0, sigma0, obs.B, obs.sigma_e, times, tr.states);
    const TransientPath path(net, net.parameter_values(), mu0 / omega, times.back());
    const auto got = lna_loglik(path, omega, obs, {mu0, sigma0}, tr);
    ASSERT_TRUE(got.ok) << got.diagnostic;
    EXPECT_LT(std::abs(got.loglik - expect), 1e-6 * std::abs(expect));
  }
}

TEST(Kalman, UninformativeNoiseLimit) {
  const auto& lc = cycle();
  const double s = 1e12;
  const auto obs = ObservationModel::select(lc.network(), {"X", "Y"}, s);
  const auto tr = noisy_path(lc, 8, 1.3, 4);
  const double expect = -0.5 * 16.0 * std::log(2.0 * std::numbers::pi * s);
  EXPECT_NEAR(pclna_loglik(lc, obs, cycle_prior(lc), tr).loglik, expect, 1e-3);
}

TEST(Kalman, SeriesAreAdditive) {
  const auto& lc = cycle();
  const auto obs = ObservationModel::select(lc.network(), {"X", "Y"}, 100.0);
  const auto a = noisy_path(lc, 8, 1.1, 5);
  const auto b = noisy_path(lc, 6, 0.9, 6);
  const auto& net = lc.network();
  const auto prior = cycle_prior(lc);
  for (Backend be : {Backend::pclna, Backend::lna, Backend::restart}) {
    const double la = multi_series_loglik(be, &lc, net, lc.theta(), obs, prior, {a}).loglik;
    const double lb = multi_series_loglik(be, &lc, net, lc.theta(), obs, prior, {b}).loglik;
    const double both = multi_series_loglik(be, &lc, net, lc.theta(), obs, prior, {a, b}).loglik;
    const double twice = multi_series_loglik(be, &lc, net, lc.theta(), obs, prior, {a, a}).loglik;
    EXPECT_NEAR(both, la + lb, 1e-9 * std::abs(both)) << to_string(be);
    EXPECT_NEAR(twice, 2.0 * la, 1e-9 * std::abs(twice)) << to_string(be);
  }
}

TEST(Kalman, PclnaPrefersTrueParameters) {
  const auto& lc = cycle();
  const auto& net = lc.network();
  const auto obs = ObservationModel::select(net, {"X", "Y"}, 100.0);
  const auto data = simulate_ssa_replicates(net, lc.theta(), Vec((net.omega() * lc.anchor()).array().round()), uniform_grid(0.0, 20.0, 2.0), 7, 5);
  Vec off = lc.theta();
  off(1) = 2.8;
  const auto lc_off = find_limit_cycle(net, off, lc.anchor());
  const double at_truth = multi_series_loglik(Backend::pclna, &lc, net, lc.theta(), obs, cycle_prior(lc), data).loglik;
  const double away = multi_series_loglik(Backend::pclna, &lc_off, net, off, obs, cycle_prior(lc_off), data).loglik;
  EXPECT_GT(at_truth, away);
}

TEST(Kalman, RestartPredictionReintegratesFromPosteriorMean) {
  const auto& lc = cycle();
  const auto& net = lc.network();
  const auto obs = ObservationModel::select(net, {"X", "Y"}, 100.0);
  const auto prior = cycle_prior(lc);
  const auto tr = noisy_path(lc, 2, 1.5, 8);
  const auto post = condition_on_observation(prior.mu0, prior.sigma0, obs, tr.states.row(0).transpose());
  const auto step = integrate_lna(net, lc.theta(), post.mu / net.omega(), 1.5);
  const Vec mu = net.omega() * step.phi;
  const Mat sigma = step.C * post.cov * step.C.transpose() + net.omega() * step.V;
  const auto second = condition_on_observation(mu, sigma, obs, tr.states.row(1).transpose());
  const auto got = restart_loglik(net, lc.theta(), obs, prior, tr);
  EXPECT_EQ(got.ode_integrations, 1);
  EXPECT_NEAR(got.loglik, post.log_density + second.log_density, 1e-9);
}

TEST(Kalman, DimensionMismatchIsReported) {
  const auto& lc = cycle();
  const auto obs = ObservationModel::select(lc.network(), {"X", "Y"}, 1.0);
  Trajectory bad;
  bad.times = {0.0};
  bad.states = Mat::Zero(1, 3);
  EXPECT_THROW(pclna_loglik(lc, obs, cycle_prior(lc), bad), std::invalid_argument);
}

TEST(Kalman, BackendNames) {
  EXPECT_EQ(parse_backend("restart"), Backend::restart);
  EXPECT_EQ(to_string(Backend::pclna), "pclna");
  EXPECT_THROW(parse_backend("kalman"), std::invalid_argument);
}

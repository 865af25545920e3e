#include "pclna/model.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pclna;
using pclna::test::model;

namespace {

const char* kImmigrationDeath = R"(
[species]
M
[parameters]
c1 = 1
c2 = 0.5
[omega]
50
[reactions]
0 -> M @ mass_action(c1)
M -> 0 @ mass_action(c2)
)";

ReactionNetwork parse(const std::string& text) { return parse_model(text); }

}  // namespace

TEST(Model, ImmigrationDeathDimensions) {
  const auto net = parse(kImmigrationDeath);
  EXPECT_EQ(net.n_species(), 1);
  EXPECT_EQ(net.n_reactions(), 2);
  EXPECT_EQ(net.stoich()(0, 0), 1.0);
  EXPECT_EQ(net.stoich()(0, 1), -1.0);
  EXPECT_EQ(net.omega(), 50.0);
}

TEST(Model, UndeclaredParameterIsNamed) {
  std::string text = kImmigrationDeath;
  text.replace(text.find("mass_action(c2)"), 15, "mass_action(c9)");
  try {
    parse(text);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("c9"), std::string::npos);
    EXPECT_EQ(e.line(), 11);
    EXPECT_GT(e.column(), 1);
  }
}

TEST(Model, BrusselatorStoichiometry) {
  const auto net = model("brusselator");
  Mat expected(2, 4);
  expected << 1, -1, 1, -1, 0, 1, -1, 0;
  EXPECT_EQ(net.stoich(), expected);
}

TEST(Model, RatesByHand) {
  const auto net = parse(kImmigrationDeath);
  Vec phi(1);
  phi << 2.0;
  const Vec r = net.rates(phi, net.parameter_values());
  EXPECT_DOUBLE_EQ(r(0), 1.0);
  EXPECT_DOUBLE_EQ(r(1), 1.0);
}

TEST(Model, DegradationRatesVanishAtZero) {
  const auto net = model("brusselator");
  const Vec r = net.rates(Vec::Zero(2), net.parameter_values());
  EXPECT_EQ(r(1), 0.0);
  EXPECT_EQ(r(2), 0.0);
  EXPECT_EQ(r(3), 0.0);
  EXPECT_EQ(r(0), 1.0);  // immigration does not read a species
}

TEST(Model, MichaelisMentenHalfSaturation) {
  const auto net = parse_model(R"(
[species]
X
[parameters]
c = 2
k = 1
d = 1
[omega]
1
[reactions]
0 -> X @ michaelis_menten(c, k; inhibitor=X)
X -> 0 @ mass_action(d)
)");
  Vec phi(1);
  phi << 1.0;
  EXPECT_DOUBLE_EQ(net.rates(phi, net.parameter_values())(0), 1.0);
}

TEST(Model, DriftExamples) {
  const auto net = parse(kImmigrationDeath);
  const Vec theta = net.parameter_values();
  Vec phi(1);
  phi << 2.0;
  EXPECT_DOUBLE_EQ(net.drift(phi, theta)(0), 0.0);
  phi << 0.0;
  EXPECT_DOUBLE_EQ(net.drift(phi, theta)(0), 1.0);

  const auto bru = model("brusselator");
  const Vec tb = bru.parameter_values();
  Vec fp(2);
  fp << tb(0), tb(1) / tb(0);  // (a, b/a) for c = d = 1
  EXPECT_NEAR(bru.drift(fp, tb).norm(), 0.0, 1e-14);
}

TEST(Model, LinearJacobianIsConstant) {
  const auto net = parse(kImmigrationDeath);
  const Vec theta = net.parameter_values();
  Vec a(1), b(1);
  a << 0.3;
  b << 7.0;
  EXPECT_DOUBLE_EQ(net.jacobian(a, theta)(0, 0), -0.5);
  EXPECT_EQ(net.jacobian(a, theta), net.jacobian(b, theta));
}

TEST(Model, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (const char* name : {"brusselator", "feedback3"}) {
    const auto net = model(name);
    for (int rep = 0; rep < 100; ++rep) {
      Vec phi(net.n_species()), theta(net.n_params());
      for (Eigen::Index i = 0; i < phi.size(); ++i) phi(i) = u(rng);
      for (Eigen::Index k = 0; k < theta.size(); ++k) theta(k) = u(rng);
      const Mat J = net.jacobian(phi, theta);
      const Mat Jfd = jacobian_fd(net, phi, theta);
      for (Eigen::Index i = 0; i < J.rows(); ++i) {
        for (Eigen::Index j = 0; j < J.cols(); ++j) {
          EXPECT_NEAR(J(i, j), Jfd(i, j), 1e-5 * std::max(1.0, std::abs(Jfd(i, j)))) << name;
        }
      }
    }
  }
}

TEST(Model, DiffusionByHand) {
  const auto net = parse(kImmigrationDeath);
  Vec phi(1);
  phi << 2.0;
  EXPECT_DOUBLE_EQ(net.diffusion(phi, net.parameter_values())(0, 0), 2.0);
}

TEST(Model, DiffusionZeroWhenRatesVanish) {
  const auto net = parse(kImmigrationDeath);
  Vec phi(1);
  phi << 0.0;
  Vec theta(2);
  theta << 0.0, 0.5;
  EXPECT_EQ(net.diffusion(phi, theta), Mat::Zero(1, 1));
}

TEST(Model, DiffusionSymmetricPsd) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  const auto net = model("feedback3");
  for (int rep = 0; rep < 100; ++rep) {
    Vec phi(3);
    for (int i = 0; i < 3; ++i) phi(i) = u(rng);
    const Mat S = net.diffusion(phi, net.parameter_values());
    EXPECT_EQ((S - S.transpose()).norm(), 0.0);
    EXPECT_GE(min_eigenvalue(S), -1e-12 * S.trace());
  }
}

TEST(Model, SerializeRoundTrip) {
  for (const char* name : {"brusselator", "feedback3", "immigration_death"}) {
    const auto net = model(name);
    const auto again = parse_model(serialize_model(net));
    EXPECT_TRUE(net == again) << name;
    EXPECT_EQ(model_hash(net), model_hash(again));
    EXPECT_EQ(serialize_model(net), serialize_model(again));
  }
}

TEST(Model, HashChangesWithParameters) {
  const auto net = model("brusselator");
  auto params = net.parameters();
  params[1].value = 2.6;
  const ReactionNetwork other(net.species(), params, net.reactions(), net.omega(), net.initial());
  EXPECT_NE(model_hash(net), model_hash(other));
}

TEST(Model, PropensitiesUseConcentrationConvention) {
  const auto net = model("brusselator");
  const Vec theta = net.parameter_values();
  Vec x(2);
  x << 1200, 900;
  Vec w;
  net.propensities(x, theta, w);
  const double omega = net.omega();
  const Vec r = net.rates(x / omega, theta);
  EXPECT_NEAR(w(0), omega * r(0), 1e-9);
  EXPECT_NEAR(w(1), omega * r(1), 1e-9);
  // 2X + Y -> 3X: omega c (x/omega)^2 (y/omega)
  EXPECT_NEAR(w(2), theta(2) * x(0) * x(0) * x(1) / (omega * omega), 1e-9);
}

TEST(Model, RejectsMalformedInput) {
  EXPECT_THROW(parse_model("[species]\nX\n[omega]\n1\n[reactions]\nX -> X @ mass_action(k)\n"), ParseError);
  EXPECT_THROW(parse_model("[species]\nX\n[parameters]\nk = 1\n[omega]\n0\n[reactions]\nX -> 0 @ mass_action(k)\n"),
               ParseError);
  EXPECT_THROW(parse_model("[species]\nX\n[parameters]\nk = 1\n[omega]\n1\n[reactions]\nX -> 0 -> X @ mass_action(k)\n"),
               ParseError);
  EXPECT_THROW(parse_model("[species]\nX\nX\n[parameters]\nk = 1\n[omega]\n1\n[reactions]\nX -> 0 @ mass_action(k)\n"),
               ParseError);
  EXPECT_THROW(parse_model("[bogus]\n"), ParseError);
}

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "../support/instances.hpp"
#include "fsagp/error.hpp"
#include "fsagp/inference.hpp"
#include "fsagp/random.hpp"

using namespace fsagp;

namespace {

/// Intercept-only data with a negligible spatial process so Sigma_Y = tau2 I.
struct NuggetOnly {
  SpatialDataset data;
  CovarianceParams params;
  FitProblem problem;
};

NuggetOnly nugget_only(std::size_t n, std::size_t R, double tau2, std::uint64_t seed, double mu = 0.0) {
  NuggetOnly out;
  auto rng = make_rng(seed, 9);
  std::normal_distribution<double> z;
  out.data.sites = LocationSet(instances::uniform_points(n, 10.0, rng));
  out.data.Y.resize(n, R);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < R; ++r) out.data.Y(i, r) = mu + std::sqrt(tau2) * z(rng);
  }
  out.data.X = Eigen::MatrixXd::Ones(n, 1);
  out.params.lmc.R = R;
  for (std::size_t q = 0; q < R; ++q) out.params.lmc.latent.push_back(CorrelationSpec::exponential(1.0));
  out.params.lmc.transform = ConstantTransform{1e-9 * Eigen::MatrixXd::Identity(R, R)};
  out.params.nugget = NuggetSpec::shared(R, tau2);
  out.problem = FitProblem::make(out.data, Scheme::full());
  return out;
}

/// Batch-means Monte-Carlo standard error.
double mcse(const std::vector<double>& x, std::size_t batches = 40) {
  const std::size_t len = x.size() / batches;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    means[b] = std::accumulate(x.begin() + b * len, x.begin() + (b + 1) * len, 0.0) / len;
  }
  const double m = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  double v = 0.0;
  for (double e : means) v += (e - m) * (e - m);
  return std::sqrt(v / (batches - 1) / batches);
}

}  // namespace

TEST_CASE("scalar priors") {
  const auto u = ScalarPrior::uniform(1.0, 3.0);
  CHECK(u.in_support(2.0));
  CHECK_FALSE(u.in_support(3.5));
  CHECK(std::isinf(u.log_density(0.5)));
  CHECK(u.log_density(1.5) == u.log_density(2.5));

  const auto ig = ScalarPrior::inv_gamma(2.0, 1.0);
  CHECK_FALSE(ig.in_support(0.0));
  // log density up to a constant: -(a+1) log x - b/x.
  CHECK(ig.log_density(2.0) - ig.log_density(1.0) == doctest::Approx(-3.0 * std::log(2.0) - 0.5 + 1.0));

  const auto tn = ScalarPrior::truncated_normal(0.0, 4.0);
  CHECK_FALSE(tn.in_support(-0.1));
  CHECK(tn.log_density(3.0) - tn.log_density(1.0) == doctest::Approx(-1.0));

  const auto nm = ScalarPrior::normal(1.0, 1000.0);
  CHECK(nm.in_support(-1e6));
  CHECK_THROWS(ScalarPrior::uniform(3.0, 1.0).validate("x"));
  CHECK_THROWS(ScalarPrior::inv_gamma(-1.0, 1.0).validate("x"));
}

TEST_CASE("parameter map names, transforms and priors") {
  LmcSpec lmc;
  lmc.R = 2;
  lmc.latent = {CorrelationSpec::exponential(10), CorrelationSpec::exponential(20)};
  Eigen::MatrixXd A(2, 2);
  A << 1.0, 0.0, 0.5, 0.5;
  lmc.transform = ConstantTransform{A};
  PriorSpec priors;
  priors.ranges = {ScalarPrior::uniform(1, 47)};
  ParameterMap map(lmc, NuggetMode::Shared, priors);

  std::vector<std::string> names;
  for (const auto& s : map.scalars()) names.push_back(s.name);
  CHECK(names == std::vector<std::string>{"phi_0", "phi_1", "A_00", "A_10", "A_11", "tau2"});
  std::vector<std::string> blocks;
  for (const auto& b : map.blocks()) blocks.push_back(b.name);
  CHECK(blocks == std::vector<std::string>{"phi_0", "phi_1", "A", "tau2"});

  CovarianceParams params{lmc, NuggetSpec::shared(2, 0.01)};
  const Eigen::VectorXd nat = map.natural(params);
  CHECK(nat(0) == 10.0);
  CHECK(nat(3) == 0.5);
  CHECK(nat(5) == 0.01);
  const Eigen::VectorXd z = map.to_sampling(nat);
  CHECK(z(0) == doctest::Approx(std::log(10.0)));
  CHECK(z(3) == 0.5);
  CHECK((map.from_sampling(z) - nat).cwiseAbs().maxCoeff() < 1e-12);

  CovarianceParams copy = params;
  Eigen::VectorXd nat2 = nat;
  nat2(1) = 15.0;
  map.assign(copy, nat2);
  CHECK(copy.lmc.latent[1].range == 15.0);
  CHECK(copy.nugget.variances(1) == 0.01);

  Eigen::VectorXd out = nat;
  out(0) = 50.0;
  CHECK(std::isinf(map.log_prior_with_jacobian(out)));
  // Jacobian of a log-scale coordinate adds log x.
  Eigen::VectorXd a = nat, b = nat;
  b(0) = 20.0;
  CHECK(map.log_prior_with_jacobian(b) - map.log_prior_with_jacobian(a) == doctest::Approx(std::log(2.0)));

  ParameterMap fixed(lmc, NuggetMode::Shared, priors, {"A", "phi_1"});
  CHECK(fixed.blocks().size() == 2);
  ParameterMap none(lmc, NuggetMode::None, priors);
  CHECK(none.scalars().size() == 5);
  ParameterMap per(lmc, NuggetMode::PerResponse, priors);
  CHECK(per.scalars().back().name == "tau2_1");
}

TEST_CASE("stored sample count") {
  McmcConfig c;
  c.iterations = 3000;
  c.burn_in = 1000;
  c.thin = 3;
  CHECK(c.stored_samples() == 667);
  c.burn_in = 3000;
  CHECK_THROWS(c.validate());
}

TEST_CASE("beta conditional") {
  SUBCASE("scalar conjugate normal") {
    const double tau2 = 0.4, m0 = 0.5, v0 = 2.0;
    auto t = nugget_only(25, 1, tau2, 3, 1.2);
    LikelihoodWorkspace ws(t.problem.layout, t.params);
    PriorSpec priors;
    priors.beta_mean = Eigen::VectorXd::Constant(1, m0);
    priors.beta_var = Eigen::VectorXd::Constant(1, v0);
    const auto cond = beta_conditional(t.problem, ws, priors);
    const double n = 25.0, sum = t.data.Y.sum();
    const double prec = n / tau2 + 1.0 / v0;
    CHECK(cond.mean(0) == doctest::Approx((sum / tau2 + m0 / v0) / prec).epsilon(1e-8));
    CHECK(cond.cov(0, 0) == doctest::Approx(1.0 / prec).epsilon(1e-8));
  }
  SUBCASE("least squares limit") {
    auto t = nugget_only(16, 1, 1.0, 4);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Random(16, 2).householderQr().householderQ() * Eigen::MatrixXd::Identity(16, 2);
    t.problem.X = Q;
    LikelihoodWorkspace ws(t.problem.layout, t.params);
    PriorSpec priors;
    priors.beta_var = Eigen::VectorXd::Constant(1, 1e12);
    const auto cond = beta_conditional(t.problem, ws, priors);
    CHECK((cond.mean - Q.transpose() * t.problem.y).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("draws are reproducible") {
    auto t = nugget_only(10, 2, 0.3, 5);
    LikelihoodWorkspace ws(t.problem.layout, t.params);
    Rng a = make_rng(7), b = make_rng(7);
    CHECK((gibbs_beta(t.problem, ws, PriorSpec{}, a) - gibbs_beta(t.problem, ws, PriorSpec{}, b)).norm() == 0.0);
  }
  SUBCASE("prior length mismatch") {
    auto t = nugget_only(10, 2, 0.3, 5);
    LikelihoodWorkspace ws(t.problem.layout, t.params);
    PriorSpec priors;
    priors.beta_mean = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(beta_conditional(t.problem, ws, priors), ConfigError);
  }
}

TEST_CASE("metropolis step") {
  Rng rng = make_rng(1);
  auto flat = [](const Eigen::VectorXd&) -> std::optional<double> { return 0.0; };
  Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
  double cur = 0.0;
  for (int k = 0; k < 100; ++k) CHECK(metropolis_step(z, cur, flat, 0.0, rng));

  auto outside = [](const Eigen::VectorXd&) -> std::optional<double> { return std::nullopt; };
  for (int k = 0; k < 100; ++k) CHECK_FALSE(metropolis_step(z, cur, outside, 1.0, rng));

  // N(1, 4) target.
  auto normal = [](const Eigen::VectorXd& x) -> std::optional<double> {
    return -0.5 * (x(0) - 1.0) * (x(0) - 1.0) / 4.0;
  };
  Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  double lt = *normal(x);
  std::vector<double> draws;
  for (int t = 0; t < 200000; ++t) {
    metropolis_step(x, lt, normal, 4.0, rng);
    if (t >= 1000) draws.push_back(x(0));
  }
  const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / draws.size();
  CHECK(std::abs(mean - 1.0) < 3.0 * mcse(draws));
  std::vector<double> sq(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) sq[i] = (draws[i] - 1.0) * (draws[i] - 1.0);
  const double var = std::accumulate(sq.begin(), sq.end(), 0.0) / sq.size();
  CHECK(std::abs(var - 4.0) < 3.0 * mcse(sq));
}

TEST_CASE("sampler on a nugget-only model") {
  auto t = nugget_only(40, 1, 0.25, 21, 0.7);
  LmcSpec shape = t.params.lmc;
  PriorSpec priors;
  priors.ranges = {ScalarPrior::uniform(0.5, 2.0)};
  ParameterMap map(shape, NuggetMode::Shared, priors, {"phi_0", "A"});
  ModelState init{Eigen::VectorXd::Zero(1), t.params};
  McmcConfig cfg;
  cfg.iterations = 600;
  cfg.burn_in = 100;
  cfg.seed = 5;

  SUBCASE("bit-reproducible under a fixed seed") {
    const auto a = run_mcmc(t.problem, map, priors, init, cfg);
    const auto b = run_mcmc(t.problem, map, priors, init, cfg);
    CHECK(a.samples.size() == b.samples.size());
    CHECK((a.samples - b.samples).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.loglik_trace == b.loglik_trace);
    CHECK(a.names == std::vector<std::string>{"beta_0", "phi_0", "A_00", "tau2"});
    cfg.seed = 6;
    const auto c = run_mcmc(t.problem, map, priors, init, cfg);
    CHECK((a.samples - c.samples).cwiseAbs().maxCoeff() > 0.0);
  }
  SUBCASE("thinning and fixed blocks") {
    cfg.thin = 4;
    const auto a = run_mcmc(t.problem, map, priors, init, cfg);
    CHECK(a.size() == 125);
    CHECK((a.samples.col(1).array() == 1.0).all());
    CHECK(a.acceptance_rates.count("tau2") == 1);
    CHECK(a.acceptance_rates.count("A") == 0);
  }
}

TEST_CASE("beta concentrates on noiseless data") {
  auto t = nugget_only(30, 2, 1e-8, 8);
  t.data.Y.col(0).setConstant(1.5);
  t.data.Y.col(1).setConstant(-0.5);
  t.problem = FitProblem::make(t.data, Scheme::full());
  PriorSpec priors;
  priors.ranges = {ScalarPrior::uniform(0.5, 2.0)};
  ParameterMap map(t.params.lmc, NuggetMode::Shared, priors, {"phi_0", "phi_1", "A", "tau2"});
  McmcConfig cfg;
  cfg.iterations = 200;
  cfg.burn_in = 50;
  const auto chain = run_mcmc(t.problem, map, priors, {Eigen::VectorXd::Zero(2), t.params}, cfg);
  CHECK(chain.mean("beta_0") == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(chain.mean("beta_1") == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(chain.sd("beta_0") < 1e-3);
}

TEST_CASE("DIC") {
  auto t = nugget_only(30, 2, 0.5, 10, 0.3);
  PriorSpec priors;
  priors.ranges = {ScalarPrior::uniform(0.5, 2.0)};
  ParameterMap map(t.params.lmc, NuggetMode::Shared, priors, {"phi_0", "phi_1", "A", "tau2"});
  ModelState init{Eigen::VectorXd::Zero(2), t.params};

  SUBCASE("identical samples give zero effective parameters") {
    PosteriorChain chain;
    chain.names = {"beta_0", "beta_1", "phi_0", "phi_1", "A_00", "A_10", "A_11", "tau2"};
    Eigen::VectorXd beta(2);
    beta << 0.2, 0.4;
    Eigen::RowVectorXd row(8);
    row << beta.transpose(), map.natural(t.params).transpose();
    chain.samples = row.replicate(20, 1);
    LikelihoodWorkspace ws(t.problem.layout, t.params);
    chain.loglik_trace.assign(20, loglik(ws, beta, t.problem.y, t.problem.X));
    const auto d = dic(chain, t.problem, map, init);
    CHECK(d.p_d == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(d.dic == doctest::Approx(d.deviance_at_mean));
  }
  SUBCASE("mean-only model has p_D near the coefficient count") {
    McmcConfig cfg;
    cfg.iterations = 6000;
    cfg.burn_in = 100;
    cfg.seed = 3;
    const auto chain = run_mcmc(t.problem, map, priors, init, cfg);
    const auto d = dic(chain, t.problem, map, init);
    // Dbar - D(theta_bar) is chi-square(2) on average; its Monte-Carlo error here is about 0.04.
    CHECK(d.p_d == doctest::Approx(2.0).epsilon(0.1));
    CHECK(d.dic == doctest::Approx(d.mean_deviance + d.p_d));
  }
}

TEST_CASE("initial state heuristics") {
  auto t = nugget_only(50, 2, 0.3, 12, 2.0);
  LmcSpec shape = t.params.lmc;
  PriorSpec priors;
  priors.ranges = {ScalarPrior::uniform(1.0, 9.0)};
  const auto st = initial_state(t.data, shape, NuggetMode::Shared, priors);
  CHECK(st.beta.size() == 2);
  CHECK(st.beta(0) == doctest::Approx(t.data.Y.col(0).mean()));
  CHECK(st.cov.lmc.latent[0].range == doctest::Approx(3.0));
  CHECK(st.cov.nugget.present());
  CHECK_NOTHROW(st.cov.lmc.validate());
}

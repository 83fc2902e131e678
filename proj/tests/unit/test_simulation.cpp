#include <doctest.h>

#include <cmath>

#include "fsagp/error.hpp"
#include "fsagp/random.hpp"
#include "fsagp/simulation.hpp"

using namespace fsagp;

namespace {

CovarianceParams univariate(double phi, double tau2) {
  CovarianceParams p;
  p.lmc.R = 1;
  p.lmc.latent = {CorrelationSpec::exponential(phi)};
  p.lmc.transform = ConstantTransform{Eigen::MatrixXd::Identity(1, 1)};
  p.nugget = tau2 > 0 ? NuggetSpec::shared(1, tau2) : NuggetSpec::none();
  return p;
}

}  // namespace

TEST_CASE("full-size scenario values") {
  const auto s = SimulationScenario::paper();
  CHECK(s.n_train == 2000);
  CHECK(s.truth.lmc.latent[0].range == 10.0);
  CHECK(s.truth.lmc.latent[1].range == 20.0);
  const auto& A = std::get<ConstantTransform>(s.truth.lmc.transform).A;
  CHECK(A(0, 0) == 1.0);
  CHECK(A(1, 0) == 0.5);
  CHECK(A(1, 1) == 0.5);
  CHECK(s.truth.nugget.variances(0) == 0.01);
  CHECK(s.holes.size() == 2);
  CHECK(SimulationScenario::desk().n_train == 500);
  CHECK(SimulationScenario::desk().n_test == 100);
}

TEST_CASE("single-site marginal variance") {
  CovarianceParams p;
  p.lmc.R = 2;
  p.lmc.latent = {CorrelationSpec::exponential(3), CorrelationSpec::exponential(5)};
  p.lmc.transform = ConstantTransform{Eigen::MatrixXd::Identity(2, 2)};
  p.nugget = NuggetSpec::shared(2, 0.25);
  const LocationSet one({{4, 4}});
  auto rng = make_rng(17);
  const int reps = 10000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero(), sq = Eigen::Vector2d::Zero();
  for (int k = 0; k < reps; ++k) {
    const Eigen::MatrixXd y = simulate_responses(p, one, Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(2), {}, rng);
    sum += y.row(0).transpose();
    sq += y.row(0).transpose().cwiseAbs2();
  }
  for (int r = 0; r < 2; ++r) {
    const double var = sq(r) / reps - (sum(r) / reps) * (sum(r) / reps);
    CHECK(std::abs(var - 1.25) < 0.05 * 1.25);
  }
}

TEST_CASE("variogram at distance 30") {
  const auto p = univariate(10.0, 0.0);
  const LocationSet pair({{10, 10}, {40, 10}});
  auto rng = make_rng(18);
  const int reps = 4000;
  double g = 0.0;
  for (int k = 0; k < reps; ++k) {
    const Eigen::MatrixXd y = simulate_responses(p, pair, Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd::Zero(1), {}, rng);
    g += (y(0, 0) - y(1, 0)) * (y(0, 0) - y(1, 0));
  }
  g /= reps;
  const double expect = 2.0 * (1.0 - std::exp(-3.0));
  // Each squared increment is expect * chi2(1); four standard errors.
  CHECK(std::abs(g - expect) < 4.0 * expect * std::sqrt(2.0 / reps));
}

TEST_CASE("scenario layout") {
  auto s = SimulationScenario::desk();
  s.seed = 8;
  const auto a = simulate_lmc(s);
  const auto b = simulate_lmc(s);
  CHECK(a.train.n() == 500);
  CHECK(a.test_random.n() == 100);
  CHECK(a.test_hole.n() == 100);
  CHECK((a.train.Y - b.train.Y).cwiseAbs().maxCoeff() == 0.0);
  for (const auto& p : a.train.sites.points()) {
    for (const auto& c : s.holes) CHECK_FALSE(c.contains(p));
    CHECK(p.x >= 0.0);
    CHECK(p.x <= 100.0);
  }
  // The uniform part of the hole design may also fall in a circle; the tail is drawn inside.
  CHECK(s.hole_count() == 20);
  const auto& hole = a.test_hole.sites.points();
  std::size_t c0 = 0, c1 = 0;
  for (std::size_t i = hole.size() - s.hole_count(); i < hole.size(); ++i) {
    c0 += s.holes[0].contains(hole[i]) ? 1 : 0;
    c1 += s.holes[1].contains(hole[i]) ? 1 : 0;
  }
  CHECK(c0 == 10);
  CHECK(c1 == 10);
  s.seed = 9;
  CHECK((simulate_lmc(s).train.Y - a.train.Y).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("scenario validation") {
  auto s = SimulationScenario::desk();
  s.hole_fraction = 1.5;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = SimulationScenario::desk();
  s.n_train = 6000;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = SimulationScenario::desk();
  s.beta = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("bilinear regridding") {
  RegularGrid src{{0, 1, 2, 3}, {0, 1, 2, 3}, false};
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(4, 4, 2.5);
  const RegularGrid dst{{0.3, 1.7, 2.9}, {0.1, 2.2}, false};
  CHECK((bilinear_regrid(c, src, dst).array() == 2.5).all());

  Eigen::MatrixXd affine(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) affine(i, j) = src.x[i] + src.y[j];
  }
  const auto out = bilinear_regrid(affine, src, dst);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(out(i, j) == doctest::Approx(dst.x[i] + dst.y[j]));
  }

  auto rng = make_rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::MatrixXd f(4, 4);
  for (int k = 0; k < 16; ++k) f.data()[k] = u(rng);
  CHECK(bilinear_at(f, src, 1.5, 2.5) == doctest::Approx(0.25 * (f(1, 2) + f(2, 2) + f(1, 3) + f(2, 3))));
  CHECK_THROWS_AS(bilinear_at(f, src, 3.5, 1.0), DomainError);
  CHECK_THROWS_AS(bilinear_at(f, src, 1.0, 3.5), DomainError);

  RegularGrid periodic{{-10, 10}, {0, 90, 180, 270}, true};
  Eigen::MatrixXd g(2, 4);
  g << 0, 1, 2, 3, 0, 1, 2, 3;
  CHECK(bilinear_at(g, periodic, 0.0, 315.0) == doctest::Approx(1.5));
  CHECK(bilinear_at(g, periodic, 0.0, -45.0) == doctest::Approx(1.5));
}

TEST_CASE("globe grid") {
  const auto g = globe_grid(-42.5, 5.0, 23, -177.5, 5.0, 72);
  CHECK(g.size() == 1656);
  CHECK(g.metric() == Metric::Chordal);
  CHECK(g[0] == Point{-42.5, -177.5});
  CHECK(g[72] == Point{-37.5, -177.5});
  CHECK(g[1655] == Point{67.5, 177.5});
}

TEST_CASE("dominance counting") {
  auto row = [](SchemeKind k, double mspe, double secs) { return BenchmarkRow{SchemeConfig{k}, mspe, secs}; };
  const std::vector<BenchmarkRow> rows{
      row(SchemeKind::PredictiveProcess, 0.5, 1.0), row(SchemeKind::PredictiveProcess, 0.3, 3.0),
      row(SchemeKind::FsaBlock, 0.2, 0.5),  // no baseline within budget
      row(SchemeKind::FsaBlock, 0.4, 1.5),  // beats 0.5
      row(SchemeKind::FsaBlock, 0.35, 3.5),  // loses to 0.3
  };
  const auto d = assess_dominance(rows, SchemeKind::FsaBlock, SchemeKind::PredictiveProcess);
  CHECK(d.comparable == 2);
  CHECK(d.wins == 1);
}

TEST_CASE("benchmark sweep emits one row per configuration") {
  auto s = SimulationScenario::desk();
  s.n_train = 150;
  s.n_test = 30;
  std::size_t seen = 0;
  const auto rows = benchmark_mspe_time(s, {SchemeConfig{SchemeKind::FsaBlock, 20, 2}},
                                        [&](const BenchmarkRow&) { ++seen; });
  CHECK(rows.size() == 1);
  CHECK(seen == 1);
  CHECK(rows[0].mspe > 0.0);
  CHECK(rows[0].seconds > 0.0);
}

TEST_CASE("MSPE does not grow with more knots at fixed blocks") {
  auto s = SimulationScenario::desk();
  s.seed = 21;
  const auto data = simulate_lmc(s);
  double prev = 1e300;
  for (std::size_t m : {16u, 64u, 256u}) {
    const auto rows = benchmark_mspe_time(s, data, {SchemeConfig{SchemeKind::FsaBlock, m, 4}});
    CHECK(rows[0].mspe <= prev * 1.05);
    prev = rows[0].mspe;
  }
}

TEST_CASE("default sweep covers all three families") {
  const auto sw = default_sweep();
  std::size_t pp = 0, fb = 0, ft = 0;
  for (const auto& c : sw) {
    pp += c.kind == SchemeKind::PredictiveProcess;
    fb += c.kind == SchemeKind::FsaBlock;
    ft += c.kind == SchemeKind::FsaTaper;
  }
  CHECK(pp >= 5);
  CHECK(fb >= 5);
  CHECK(ft >= 3);
}

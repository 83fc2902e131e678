#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <random>

#include "../support/instances.hpp"
#include "../support/oracles.hpp"
#include "fsagp/approximation.hpp"
#include "fsagp/dataset.hpp"
#include "fsagp/error.hpp"
#include "fsagp/random.hpp"
#include "fsagp/simulation.hpp"

using namespace fsagp;
using instances::Instance;

namespace {

Eigen::VectorXd random_vec(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = z(rng);
  return v;
}

double max_abs(const Eigen::MatrixXd& M) { return M.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("factored quad_form, logdet and solve match the dense oracle") {
  std::mt19937_64 rng(2024);
  for (auto kind : instances::kAllKinds) {
    for (std::size_t R : {1u, 2u, 3u}) {
      for (bool varying : {false, true}) {
        CAPTURE(to_string(kind));
        CAPTURE(R);
        CAPTURE(varying);
        const Instance I = instances::make(kind, 24, R, rng, varying, 6, 2, 3.0);
        const auto dense = I.dense();
        LikelihoodWorkspace ws(instances::layout(I), I.params);
        const Eigen::VectorXd v = random_vec(static_cast<Eigen::Index>(24 * R), rng);
        CHECK(oracle::close(ws.quad_form(v), oracle::dense_quad(dense.sigma_y, v), 1e-8, 1e-6));
        CHECK(oracle::close(ws.logdet(), oracle::dense_logdet(dense.sigma_y), 1e-8, 1e-6));
        CHECK(max_abs(ws.solve(v) - dense.sigma_y.llt().solve(v)) < 1e-8 * (1 + max_abs(v)) * 100);
        CHECK(max_abs(ws.reconstruct_dense() - dense.sigma_y) < 1e-10);
        CHECK(ws.quad_form(Eigen::VectorXd::Zero(v.size())) == 0.0);
      }
    }
  }
}

TEST_CASE("predictive process covariance") {
  std::mt19937_64 rng(11);
  SUBCASE("knots equal sites interpolate exactly") {
    const auto pts = instances::uniform_points(10, 10.0, rng);
    Instance I = instances::make(SchemeKind::PredictiveProcess, 10, 2, rng);
    const LocationSet s(pts);
    const auto pp = predictive_process_cov(I.params.lmc, s, s);
    const auto full = assemble_sigma_w(I.params.lmc, s);
    CHECK(max_abs(pp - full) < 1e-9);
  }
  SUBCASE("n=5, m=2 against the dense triple product") {
    Instance I = instances::make(SchemeKind::PredictiveProcess, 5, 2, rng, false, 2);
    const auto pp = predictive_process_cov(I.params.lmc, I.sites, LocationSet(I.knot_pts));
    const auto C = oracle::cross_cov(I.pts, I.A_sites, I.knot_pts, I.A_knots, I.phi);
    const auto Cs = oracle::cross_cov(I.knot_pts, I.A_knots, I.knot_pts, I.A_knots, I.phi);
    CHECK(max_abs(pp - C * Cs.inverse() * C.transpose()) < 1e-12);
  }
  SUBCASE("variance domination with equality at knots") {
    Instance I = instances::make(SchemeKind::PredictiveProcess, 20, 3, rng, true, 5);
    std::vector<Point> pts = I.pts;
    pts.insert(pts.end(), I.knot_pts.begin(), I.knot_pts.end());
    Eigen::MatrixXd xa(I.xa_sites.rows() + I.xa_knots.rows(), 2);
    xa << I.xa_sites, I.xa_knots;
    const LocationSet all(pts);
    const auto pp = predictive_process_cov(I.params.lmc, all, LocationSet(I.knot_pts), xa, I.xa_knots);
    const auto full = assemble_sigma_w(I.params.lmc, all, xa);
    const Eigen::VectorXd diff = pp.diagonal() - full.diagonal();
    CHECK(diff.maxCoeff() <= 1e-10);
    CHECK(diff.tail(5 * 3).cwiseAbs().maxCoeff() <= 1e-10);
    // Knot-site diagonal blocks are exact, not just their diagonals.
    for (std::size_t k = 0; k < 5; ++k) {
      const Eigen::Index o = static_cast<Eigen::Index>((20 + k) * 3);
      CHECK(max_abs(pp.block(o, o, 3, 3) - full.block(o, o, 3, 3)) < 1e-10);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(full - pp);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * full.diagonal().maxCoeff());
  }
}

TEST_CASE("residual covariance structure") {
  std::mt19937_64 rng(12);
  SUBCASE("singleton blocks give a diagonal residual") {
    Instance I = instances::make(SchemeKind::FsaBlock, 9, 2, rng, false, 3);
    I.scheme.partition = singleton_partition(I.sites);
    const Eigen::MatrixXd res = residual_cov(I.scheme, I.params.lmc, I.sites);
    const auto d = I.dense();
    const Eigen::MatrixXd ref = d.sigma_w - d.sigma_wt;
    for (Eigen::Index a = 0; a < res.rows(); ++a) {
      for (Eigen::Index b = 0; b < res.cols(); ++b) {
        const bool same_site = a / 2 == b / 2;
        CHECK(res(a, b) == doctest::Approx(same_site ? ref(a, b) : 0.0).epsilon(1e-10).scale(1.0));
      }
    }
  }
  SUBCASE("n=6, K=2 masking") {
    Instance I = instances::make(SchemeKind::FsaBlock, 6, 2, rng, false, 2);
    Partition p;
    p.K = 2;
    p.assignment = {0, 1, 0, 1, 1, 0};
    I.scheme.partition = p;
    const Eigen::MatrixXd res = residual_cov(I.scheme, I.params.lmc, I.sites);
    const auto d = I.dense();
    const Eigen::MatrixXd ref = d.sigma_w - d.sigma_wt;
    for (Eigen::Index a = 0; a < 12; ++a) {
      for (Eigen::Index b = 0; b < 12; ++b) {
        const bool same = p.assignment[a / 2] == p.assignment[b / 2];
        CHECK(std::abs(res(a, b) - (same ? ref(a, b) : 0.0)) < 1e-12);
      }
    }
  }
  SUBCASE("far-apart taper sites give a diagonal residual") {
    Instance I = instances::make(SchemeKind::FsaTaper, 6, 2, rng, false, 2, 1, 0.01);
    const Eigen::MatrixXd res = residual_cov(I.scheme, I.params.lmc, I.sites);
    CHECK(max_abs(res - Eigen::MatrixXd(res.diagonal().asDiagonal())) == 0.0);
  }
  SUBCASE("taper zeros every cross-variable and out-of-range entry") {
    Instance I = instances::make(SchemeKind::FsaTaper, 30, 3, rng, false, 5, 1, 2.5);
    const Eigen::SparseMatrix<double> res = residual_cov(I.scheme, I.params.lmc, I.sites);
    for (int k = 0; k < res.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(res, k); it; ++it) {
        if (it.value() == 0.0) continue;
        CHECK(it.row() % 3 == it.col() % 3);
        CHECK(oracle::planar(I.pts[it.row() / 3], I.pts[it.col() / 3]) < 2.5);
      }
    }
  }
}

TEST_CASE("data covariance special cases") {
  std::mt19937_64 rng(13);
  SUBCASE("one-block FsaBlock equals Full") {
    Instance I = instances::make(SchemeKind::FsaBlock, 30, 2, rng, false, 6, 1);
    Instance F = I;
    F.scheme = Scheme::full();
    LikelihoodWorkspace a(instances::layout(I), I.params), b(instances::layout(F), F.params);
    CHECK(max_abs(a.reconstruct_dense() - b.reconstruct_dense()) < 1e-10);
    CHECK(a.logdet() == doctest::Approx(b.logdet()).epsilon(1e-10));
    const Eigen::VectorXd v = random_vec(60, rng);
    CHECK(a.quad_form(v) == doctest::Approx(b.quad_form(v)).epsilon(1e-9));
    Eigen::MatrixXd X = design_matrix(Eigen::MatrixXd::Ones(30, 1), 2);
    Eigen::VectorXd beta(2);
    beta << 0.3, -0.1;
    CHECK(std::abs(loglik(a, beta, v, X) - loglik(b, beta, v, X)) < 1e-6);
  }
  SUBCASE("predictive process adds the nugget on the diagonal only") {
    Instance I = instances::make(SchemeKind::PredictiveProcess, 12, 2, rng, false, 4);
    I.params.nugget = NuggetSpec::shared(2, 0.01);
    LikelihoodWorkspace ws(instances::layout(I), I.params);
    const auto pp = predictive_process_cov(I.params.lmc, I.sites, LocationSet(I.knot_pts));
    CHECK(max_abs(ws.reconstruct_dense() - pp - 0.01 * Eigen::MatrixXd::Identity(24, 24)) < 1e-12);
  }
  SUBCASE("singleton FsaBlock differs from the predictive process only on the diagonal") {
    Instance I = instances::make(SchemeKind::FsaBlock, 15, 2, rng, false, 4);
    I.scheme.partition = singleton_partition(I.sites);
    Instance P = I;
    P.scheme = Scheme::predictive_process(LocationSet(I.knot_pts));
    const Eigen::MatrixXd diff = LikelihoodWorkspace(instances::layout(I), I.params).reconstruct_dense() -
                                 LikelihoodWorkspace(instances::layout(P), P.params).reconstruct_dense();
    for (Eigen::Index a = 0; a < 30; ++a) {
      for (Eigen::Index b = 0; b < 30; ++b) {
        if (a / 2 != b / 2) CHECK(std::abs(diff(a, b)) < 1e-12);
      }
    }
  }
  SUBCASE("within-block exactness of the reconstructed covariance") {
    Instance I = instances::make(SchemeKind::FsaBlock, 40, 2, rng, true, 6, 3);
    LikelihoodWorkspace ws(instances::layout(I), I.params);
    Eigen::MatrixXd G = ws.reconstruct_dense();
    for (Eigen::Index k = 0; k < G.rows(); ++k) G(k, k) -= I.params.nugget.variances(k % 2);
    const auto d = I.dense();
    const auto& asg = I.scheme.partition.assignment;
    for (Eigen::Index a = 0; a < G.rows(); ++a) {
      for (Eigen::Index b = 0; b < G.cols(); ++b) {
        const bool same = asg[a / 2] == asg[b / 2];
        CHECK(std::abs(G(a, b) - (same ? d.sigma_w(a, b) : d.sigma_wt(a, b))) < 1e-10);
      }
    }
  }
  SUBCASE("nugget-only limit") {
    LmcSpec lmc;
    lmc.R = 2;
    lmc.latent = {CorrelationSpec::exponential(1.0), CorrelationSpec::exponential(1.0)};
    lmc.transform = ConstantTransform{1e-9 * Eigen::MatrixXd::Identity(2, 2)};
    const CovarianceParams params{lmc, NuggetSpec::shared(2, 0.3)};
    const LocationSet sites(instances::uniform_points(10, 10.0, rng));
    LikelihoodWorkspace ws = data_cov(Scheme::full(), params, sites);
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(20);
    e1(0) = 1.0;
    CHECK(ws.quad_form(e1) == doctest::Approx(1.0 / 0.3).epsilon(1e-9));
    CHECK(ws.logdet() == doctest::Approx(20.0 * std::log(0.3)).epsilon(1e-9));
    const Eigen::MatrixXd X = design_matrix(Eigen::MatrixXd::Ones(10, 1), 2);
    Eigen::VectorXd beta(2);
    beta << 1.0, 2.0;
    const Eigen::VectorXd y = X * beta;
    CHECK(loglik(ws, beta, y, X) ==
          doctest::Approx(-0.5 * (20.0 * std::log(2.0 * std::numbers::pi) + ws.logdet())));
  }
}

TEST_CASE("factored schemes never hold an nR x nR factor") {
  std::mt19937_64 rng(14);
  for (auto kind : {SchemeKind::PredictiveProcess, SchemeKind::IndependentBlocks, SchemeKind::FsaBlock,
                    SchemeKind::FsaTaper}) {
    const Instance I = instances::make(kind, 60, 2, rng, false, 8, 3);
    LikelihoodWorkspace ws(instances::layout(I), I.params);
    CHECK(ws.max_dense_factor_dim() < 120);
  }
}

TEST_CASE("stale workspace") {
  std::mt19937_64 rng(15);
  Instance I = instances::make(SchemeKind::FsaBlock, 20, 2, rng);
  LikelihoodWorkspace ws(instances::layout(I), I.params);
  CHECK_NOTHROW(ws.require_current(I.params));
  CovarianceParams other = I.params;
  other.lmc.latent[0].range *= 1.01;
  CHECK_THROWS_AS(ws.require_current(other), StaleWorkspaceError);
  CHECK(hash_params(other) != ws.param_hash());
}

TEST_CASE("non-PD factors are reported by name") {
  LmcSpec lmc;
  lmc.R = 1;
  lmc.latent = {CorrelationSpec::exponential(1e6)};
  lmc.transform = ConstantTransform{Eigen::MatrixXd::Identity(1, 1)};
  const CovarianceParams params{lmc, NuggetSpec::none()};
  const std::vector<Point> pts(20, Point{1, 1});
  try {
    data_cov(Scheme::full(), params, LocationSet(pts), {}, {}, FactorOptions{0.0, 0.0});
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(!e.factor().empty());
  }
}

TEST_CASE("scheme names round-trip") {
  for (auto kind : instances::kAllKinds) CHECK(scheme_kind_from_string(to_string(kind)) == kind);
  CHECK(scheme_kind_from_string("FSA-Block") == SchemeKind::FsaBlock);
  CHECK_THROWS_AS(scheme_kind_from_string("nope"), DomainError);
}

TEST_CASE("reference loglik gap between FsaBlock and Full") {
  auto s = SimulationScenario::desk();
  s.seed = 99;
  const SimulatedData data = simulate_lmc(s);
  std::vector<std::size_t> idx(200);
  for (std::size_t i = 0; i < 200; ++i) idx[i] = i;
  const SpatialDataset sub = data.train.subset(idx);
  const Scheme fsa = build_scheme(SchemeConfig{SchemeKind::FsaBlock, 225, 6}, data.train.sites, s.seed,
                                  BoundingBox{0, 100, 0, 100});
  Partition part = grid_partition(sub.sites, 6, BoundingBox{0, 100, 0, 100});
  const Scheme fsa_sub = Scheme::fsa_block(fsa.knots, part);
  const Eigen::VectorXd y = stack_responses(sub.Y);
  const Eigen::MatrixXd X = design_matrix(sub.X, 2);
  const double a = loglik(data_cov(fsa_sub, s.truth, sub.sites), s.beta, y, X);
  const double b = loglik(data_cov(Scheme::full(), s.truth, sub.sites), s.beta, y, X);
  CHECK(a - b == doctest::Approx(-1.1877004197477277).epsilon(1e-6));
}

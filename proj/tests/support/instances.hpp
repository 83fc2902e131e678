#pragma once

#include <random>
#include <vector>

#include "fsagp/approximation.hpp"
#include "fsagp/covariance.hpp"
#include "fsagp/geometry.hpp"
#include "oracles.hpp"

namespace instances {

using namespace fsagp;

/// A random planar LMC problem with every piece the dense oracle needs.
struct Instance {
  std::vector<Point> pts;
  std::vector<Point> knot_pts;
  LocationSet sites;
  CovarianceParams params;
  std::vector<double> phi;
  std::vector<Eigen::MatrixXd> A_sites;
  std::vector<Eigen::MatrixXd> A_knots;
  Eigen::MatrixXd xa_sites;
  Eigen::MatrixXd xa_knots;
  Scheme scheme;

  oracle::Dense dense() const {
    return oracle::assemble(scheme, pts, A_sites, knot_pts, A_knots, phi, params.nugget.variances);
  }
};

inline std::vector<Point> uniform_points(std::size_t n, double side, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, side);
  std::vector<Point> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng)};
  return pts;
}

/// Knots drawn on a jittered lattice so they never nearly coincide.
inline std::vector<Point> spread_knots(std::size_t m, double side, std::mt19937_64& rng) {
  const auto k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))));
  const double cell = side / static_cast<double>(k);
  std::uniform_real_distribution<double> u(0.2 * cell, 0.8 * cell);
  std::vector<Point> out;
  for (std::size_t a = 0; a < k && out.size() < m; ++a) {
    for (std::size_t b = 0; b < k && out.size() < m; ++b) {
      out.push_back({a * cell + u(rng), b * cell + u(rng)});
    }
  }
  return out;
}

inline Instance make(SchemeKind kind, std::size_t n, std::size_t R, std::mt19937_64& rng,
                     bool varying = false, std::size_t m = 0, std::size_t k_per_axis = 2,
                     double gamma = 3.0) {
  constexpr double side = 10.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Instance I;
  I.pts = uniform_points(n, side, rng);
  I.sites = LocationSet(I.pts);
  const std::size_t Q = R;
  I.params.lmc.R = R;
  for (std::size_t q = 0; q < Q; ++q) {
    I.phi.push_back(0.5 + 4.0 * u(rng));
    I.params.lmc.latent.push_back(CorrelationSpec::exponential(I.phi.back()));
  }
  I.params.nugget.variances = Eigen::VectorXd(R);
  for (std::size_t r = 0; r < R; ++r) I.params.nugget.variances(r) = 0.05 + 0.45 * u(rng);

  if (m == 0) m = std::max<std::size_t>(2, n / 4);
  if (kind != SchemeKind::Full && kind != SchemeKind::IndependentBlocks) {
    I.knot_pts = spread_knots(m, side, rng);
  }

  auto xa_of = [](Point p) {
    Eigen::VectorXd v(2);
    v << 1.0, p.x / 10.0;
    return v;
  };
  if (varying) {
    VaryingTransform vt;
    vt.covariates.terms = {CovariateTerm::intercept(), CovariateTerm::custom("xs")};
    for (std::size_t e = 0; e < lower_entries(R, Q).size(); ++e) {
      Eigen::VectorXd eta(2);
      eta << 0.5 + u(rng), u(rng) - 0.5;
      vt.eta.push_back(eta);
    }
    I.xa_sites.resize(n, 2);
    for (std::size_t i = 0; i < n; ++i) I.xa_sites.row(i) = xa_of(I.pts[i]).transpose();
    I.xa_knots.resize(I.knot_pts.size(), 2);
    for (std::size_t k = 0; k < I.knot_pts.size(); ++k) I.xa_knots.row(k) = xa_of(I.knot_pts[k]).transpose();
    for (std::size_t i = 0; i < n; ++i) I.A_sites.push_back(oracle::varying_A(R, Q, vt.eta, xa_of(I.pts[i])));
    for (const auto& p : I.knot_pts) I.A_knots.push_back(oracle::varying_A(R, Q, vt.eta, xa_of(p)));
    I.params.lmc.transform = std::move(vt);
  } else {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(R, Q);
    for (std::size_t i = 0; i < R; ++i) {
      for (std::size_t j = 0; j <= i; ++j) A(i, j) = i == j ? 0.5 + u(rng) : u(rng) - 0.5;
    }
    I.params.lmc.transform = ConstantTransform{A};
    I.A_sites.assign(n, A);
    I.A_knots.assign(I.knot_pts.size(), A);
  }

  const LocationSet knots(I.knot_pts);
  switch (kind) {
    case SchemeKind::Full: I.scheme = Scheme::full(); break;
    case SchemeKind::PredictiveProcess: I.scheme = Scheme::predictive_process(knots); break;
    case SchemeKind::IndependentBlocks:
      I.scheme = Scheme::independent_blocks(grid_partition(I.sites, k_per_axis, BoundingBox{0, side, 0, side}));
      break;
    case SchemeKind::FsaBlock:
      I.scheme = Scheme::fsa_block(knots, grid_partition(I.sites, k_per_axis, BoundingBox{0, side, 0, side}));
      break;
    case SchemeKind::FsaTaper: I.scheme = Scheme::fsa_taper(knots, TaperSpec{{gamma}}); break;
  }
  return I;
}

inline std::shared_ptr<const ApproxLayout> layout(const Instance& I) {
  return std::make_shared<const ApproxLayout>(I.scheme, I.sites, I.params.lmc.R, I.xa_sites, I.xa_knots);
}

inline constexpr SchemeKind kAllKinds[] = {SchemeKind::Full, SchemeKind::PredictiveProcess,
                                           SchemeKind::IndependentBlocks, SchemeKind::FsaBlock,
                                           SchemeKind::FsaTaper};

}  // namespace instances

#include "fsagp/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "fsagp/error.hpp"

namespace fsagp {

namespace {

constexpr std::uint64_t kStreamSites = 1;
constexpr std::uint64_t kStreamField = 2;
constexpr std::uint64_t kStreamKnots = 3;

SpatialDataset planar_dataset(std::vector<Point> pts, std::size_t R) {
  SpatialDataset d;
  d.sites = LocationSet(std::move(pts), Metric::Euclidean);
  d.X = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(d.sites.size()), 1);
  d.Y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.sites.size()),
                              static_cast<Eigen::Index>(R));
  return d;
}

}  // namespace

SimulationScenario SimulationScenario::paper() {
  SimulationScenario s;
  s.n_train = 2000;
  s.n_test = 200;
  s.truth.lmc.R = 2;
  s.truth.lmc.latent = {CorrelationSpec::exponential(10.0), CorrelationSpec::exponential(20.0)};
  Eigen::MatrixXd A(2, 2);
  A << 1.0, 0.0, 0.5, 0.5;
  s.truth.lmc.transform = ConstantTransform{A};
  s.truth.nugget = NuggetSpec::shared(2, 0.01);
  s.beta = Eigen::VectorXd::Zero(2);
  s.holes = {Circle{0.0, 90.0, 30.0}, Circle{50.0, 50.0, 35.0}};
  return s;
}

SimulationScenario SimulationScenario::desk() {
  SimulationScenario s = paper();
  s.n_train = 500;
  s.n_test = 100;
  return s;
}

std::size_t SimulationScenario::hole_count() const {
  if (holes.empty()) return 0;
  return static_cast<std::size_t>(std::llround(hole_fraction * static_cast<double>(n_test)));
}

void SimulationScenario::validate() const {
  if (n_train == 0) throw ConfigError("n_train", "must be positive");
  if (!(domain > 0.0)) throw ConfigError("domain", "must be positive");
  if (!(hole_fraction >= 0.0 && hole_fraction <= 1.0)) {
    throw ConfigError("hole_fraction", "must lie in [0, 1]");
  }
  try {
    truth.lmc.validate();
  } catch (const DomainError& e) {
    throw ConfigError("truth", e.what());
  }
  if (truth.lmc.varying()) throw ConfigError("truth.A", "planar scenarios need a constant A");
  if (static_cast<std::size_t>(beta.size()) != truth.lmc.R) {
    throw ConfigError("beta", "needs one intercept per response");
  }
  if (truth.nugget.present() &&
      static_cast<std::size_t>(truth.nugget.variances.size()) != truth.lmc.R) {
    throw ConfigError("truth.nugget", "needs one variance per response");
  }
  for (const auto& c : holes) {
    if (!(c.r2 > 0.0)) throw ConfigError("holes", "squared radius must be positive");
    if (c.cx < 0.0 || c.cx > domain || c.cy < 0.0 || c.cy > domain) {
      throw ConfigError("holes", "circle centers must lie within the domain");
    }
  }
  if (n_train + 2 * n_test > dense_cap) {
    throw ConfigError("n_train", "joint site count " + std::to_string(n_train + 2 * n_test) +
                                     " exceeds the dense simulation cap " +
                                     std::to_string(dense_cap) +
                                     "; lower n_train/n_test or raise dense_cap");
  }
}

std::vector<Point> uniform_sites(std::size_t n, double domain, Rng& rng,
                                 const std::vector<Circle>& exclude) {
  std::uniform_real_distribution<double> u(0.0, domain);
  std::vector<Point> out;
  out.reserve(n);
  while (out.size() < n) {
    Point p{u(rng), u(rng)};
    bool inside = false;
    for (const auto& c : exclude) inside = inside || c.contains(p);
    if (!inside) out.push_back(p);
  }
  return out;
}

std::vector<Point> sites_in_circle(std::size_t n, const Circle& c, double domain, Rng& rng) {
  const double r = std::sqrt(c.r2);
  const double x0 = std::max(0.0, c.cx - r), x1 = std::min(domain, c.cx + r);
  const double y0 = std::max(0.0, c.cy - r), y1 = std::min(domain, c.cy + r);
  if (!(x0 < x1 && y0 < y1)) throw DomainError("sites_in_circle: circle misses the domain");
  std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);
  std::vector<Point> out;
  out.reserve(n);
  while (out.size() < n) {
    Point p{ux(rng), uy(rng)};
    if (c.contains(p)) out.push_back(p);
  }
  return out;
}

Eigen::MatrixXd simulate_responses(const CovarianceParams& params, const LocationSet& sites,
                                   const Eigen::MatrixXd& X, const Eigen::VectorXd& beta,
                                   const Eigen::MatrixXd& XA, Rng& rng, std::size_t dense_cap) {
  const std::size_t n = sites.size();
  if (n > dense_cap) {
    throw DomainError("simulate: " + std::to_string(n) + " sites exceed the dense cap of " +
                      std::to_string(dense_cap) + "; simulate fewer sites or raise the cap");
  }
  const auto& lmc = params.lmc;
  lmc.validate();
  const auto N = static_cast<Eigen::Index>(n);
  const auto R = static_cast<Eigen::Index>(lmc.R);
  const auto Q = static_cast<Eigen::Index>(lmc.Q());
  if (X.rows() != N || beta.size() != R * X.cols()) {
    throw DomainError("simulate: design and beta dimensions disagree");
  }

  const Eigen::MatrixXd D = distance_matrix(sites);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd U(N, Q);
  for (Eigen::Index q = 0; q < Q; ++q) {
    Eigen::MatrixXd C(N, N);
    for (Eigen::Index j = 0; j < N; ++j) {
      for (Eigen::Index i = j; i < N; ++i) {
        C(i, j) = correlation(lmc.latent[static_cast<std::size_t>(q)], D(i, j));
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() != Eigen::Success) {
      C.diagonal().array() += 1e-10;
      llt.compute(C);
      if (llt.info() != Eigen::Success) {
        throw NumericalError("latent correlation", "dense simulation factor failed");
      }
    }
    Eigen::VectorXd z(N);
    for (Eigen::Index i = 0; i < N; ++i) z(i) = normal(rng);
    U.col(q) = llt.matrixL() * z;
  }

  const auto A = transforms_at_sites(lmc, XA, n);
  const Eigen::Index p0 = X.cols();
  Eigen::MatrixXd Y(N, R);
  for (Eigen::Index i = 0; i < N; ++i) {
    Eigen::VectorXd y = A[static_cast<std::size_t>(i)] * U.row(i).transpose();
    for (Eigen::Index r = 0; r < R; ++r) {
      y(r) += X.row(i).dot(beta.segment(r * p0, p0));
      if (params.nugget.present()) y(r) += std::sqrt(params.nugget.variances(r)) * normal(rng);
    }
    Y.row(i) = y.transpose();
  }
  return Y;
}

SimulatedData simulate_lmc(const SimulationScenario& sc) {
  sc.validate();
  Rng site_rng = make_rng(sc.seed, kStreamSites);
  const std::size_t R = sc.truth.lmc.R;

  std::vector<Point> train = uniform_sites(
      sc.n_train, sc.domain, site_rng,
      sc.exclude_holes_from_training ? sc.holes : std::vector<Circle>{});
  std::vector<Point> test_random = uniform_sites(sc.n_test, sc.domain, site_rng);
  const std::size_t n_hole = sc.hole_count();
  std::vector<Point> test_hole = uniform_sites(sc.n_test - n_hole, sc.domain, site_rng);
  for (std::size_t c = 0; c < sc.holes.size(); ++c) {
    const std::size_t share = n_hole / sc.holes.size() + (c < n_hole % sc.holes.size() ? 1 : 0);
    auto pts = sites_in_circle(share, sc.holes[c], sc.domain, site_rng);
    test_hole.insert(test_hole.end(), pts.begin(), pts.end());
  }

  std::vector<Point> all = train;
  all.insert(all.end(), test_random.begin(), test_random.end());
  all.insert(all.end(), test_hole.begin(), test_hole.end());
  SpatialDataset joint = planar_dataset(all, R);

  Rng field_rng = make_rng(sc.seed, kStreamField);
  joint.Y = simulate_responses(sc.truth, joint.sites, joint.X, sc.beta, {}, field_rng,
                               sc.dense_cap);

  auto range = [](std::size_t a, std::size_t b) {
    std::vector<std::size_t> idx(b - a);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = a + i;
    return idx;
  };
  SimulatedData out;
  const std::size_t n1 = train.size(), n2 = n1 + test_random.size();
  out.train = joint.subset(range(0, n1));
  out.test_random = joint.subset(range(n1, n2));
  out.test_hole = joint.subset(range(n2, all.size()));
  return out;
}

std::string SchemeConfig::label() const {
  std::ostringstream os;
  os << to_string(kind);
  switch (kind) {
    case SchemeKind::Full: break;
    case SchemeKind::PredictiveProcess: os << "(m=" << m << ")"; break;
    case SchemeKind::IndependentBlocks: os << "(K=" << k_per_axis * k_per_axis << ")"; break;
    case SchemeKind::FsaBlock: os << "(m=" << m << ",K=" << k_per_axis * k_per_axis << ")"; break;
    case SchemeKind::FsaTaper: os << "(m=" << m << ",gamma=" << gamma << ")"; break;
  }
  return os.str();
}

Scheme build_scheme(const SchemeConfig& cfg, const LocationSet& sites, std::uint64_t seed,
                    std::optional<BoundingBox> box, std::size_t voronoi_blocks) {
  auto knots = [&] { return kmeans_knots(sites, cfg.m, derive_seed(seed, kStreamKnots)).knots; };
  auto blocks = [&] {
    if (voronoi_blocks > 0) {
      const auto centers = kmeans(sites, voronoi_blocks, derive_seed(seed, kStreamKnots + 1)).centers;
      return voronoi_partition(sites, centers);
    }
    return grid_partition(sites, cfg.k_per_axis, box);
  };
  switch (cfg.kind) {
    case SchemeKind::Full: return Scheme::full();
    case SchemeKind::PredictiveProcess: return Scheme::predictive_process(knots());
    case SchemeKind::IndependentBlocks: return Scheme::independent_blocks(blocks());
    case SchemeKind::FsaBlock: return Scheme::fsa_block(knots(), blocks());
    case SchemeKind::FsaTaper: return Scheme::fsa_taper(knots(), TaperSpec{{cfg.gamma}});
  }
  throw DomainError("build_scheme: unknown scheme");
}

double max_pairwise_distance(const LocationSet& sites) {
  double best = 0.0;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    for (std::size_t j = i + 1; j < sites.size(); ++j) best = std::max(best, sites.distance(i, j));
  }
  return best;
}

PriorSpec default_priors(const LocationSet& sites, std::size_t Q) {
  PriorSpec p;
  const double hi = max_pairwise_distance(sites) / 3.0;
  if (!(hi > 1.0)) throw DomainError("default_priors: sites too close for Unif(1, d_max/3)");
  p.ranges.assign(Q, ScalarPrior::uniform(1.0, hi));
  return p;
}

const SchemeReport& ExperimentReport::find(SchemeKind kind) const {
  for (const auto& s : schemes) {
    if (s.config.kind == kind) return s;
  }
  throw DomainError("experiment report has no " + to_string(kind) + " entry");
}

std::vector<SchemeConfig> paper_schemes() {
  return {
      {SchemeKind::Full, 0, 1, 0.0},
      {SchemeKind::PredictiveProcess, 225, 1, 0.0},
      {SchemeKind::IndependentBlocks, 0, 6, 0.0},
      {SchemeKind::FsaBlock, 225, 6, 0.0},
      {SchemeKind::FsaTaper, 225, 1, 10.0},
  };
}

ExperimentReport run_experiment(const SimulationScenario& scenario,
                                const std::vector<SchemeConfig>& schemes,
                                const ExperimentOptions& options) {
  return run_experiment(scenario, simulate_lmc(scenario), schemes, options);
}

ExperimentReport run_experiment(const SimulationScenario& scenario, const SimulatedData& data,
                                const std::vector<SchemeConfig>& schemes,
                                const ExperimentOptions& options) {
  ExperimentReport report;
  report.scenario = scenario;
  const BoundingBox box{0.0, scenario.domain, 0.0, scenario.domain};
  const PriorSpec priors = default_priors(data.train.sites, scenario.truth.lmc.Q());

  LmcSpec shape = scenario.truth.lmc;
  const NuggetMode mode =
      scenario.truth.nugget.present() ? NuggetMode::Shared : NuggetMode::None;

  for (const auto& cfg : schemes) {
    SchemeReport rep;
    rep.config = cfg;
    const Scheme scheme = build_scheme(cfg, data.train.sites, scenario.seed, box);
    const FitProblem problem = FitProblem::make(data.train, scheme);
    const ModelState init = initial_state(data.train, shape, mode, priors);
    const ParameterMap map(init.cov.lmc, mode, priors);

    McmcConfig mc = options.mcmc;
    for (const auto& [k, v] : options.proposal_scales) mc.proposal_scales.emplace(k, v);
    const auto t0 = std::chrono::steady_clock::now();
    rep.chain = run_mcmc(problem, map, priors, init, mc);
    rep.dic = dic(rep.chain, problem, map, init, mc.factor);
    const auto t1 = std::chrono::steady_clock::now();
    rep.fit_seconds = std::chrono::duration<double>(t1 - t0).count();

    for (const auto& name : rep.chain.names) {
      rep.posterior_mean[name] = rep.chain.mean(name);
      rep.posterior_sd[name] = rep.chain.sd(name);
    }

    rep.predictions_random =
        posterior_predict(rep.chain, problem, map, init,
                          prediction_sites(data.test_random.sites, data.test_random.X),
                          options.prediction_samples, mc.factor);
    rep.predictions_hole =
        posterior_predict(rep.chain, problem, map, init,
                          prediction_sites(data.test_hole.sites, data.test_hole.X),
                          options.prediction_samples, mc.factor);
    rep.mspe_random = mspe(rep.predictions_random, data.test_random.Y);
    rep.mspe_hole = mspe(rep.predictions_hole, data.test_hole.Y);
    rep.predict_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();

    if (options.on_scheme) options.on_scheme(rep);
    report.schemes.push_back(std::move(rep));
  }
  return report;
}

std::vector<BenchmarkRow> benchmark_mspe_time(
    const SimulationScenario& scenario, const std::vector<SchemeConfig>& sweep,
    const std::function<void(const BenchmarkRow&)>& on_row) {
  return benchmark_mspe_time(scenario, simulate_lmc(scenario), sweep, on_row);
}

std::vector<BenchmarkRow> benchmark_mspe_time(
    const SimulationScenario& scenario, const SimulatedData& data,
    const std::vector<SchemeConfig>& sweep,
    const std::function<void(const BenchmarkRow&)>& on_row) {
  const BoundingBox box{0.0, scenario.domain, 0.0, scenario.domain};
  std::vector<BenchmarkRow> rows;
  for (const auto& cfg : sweep) {
    const Scheme scheme = build_scheme(cfg, data.train.sites, scenario.seed, box);
    const PluginBlupResult res =
        plugin_blup_mspe(scenario.truth, scenario.beta, data.train, data.test_hole, scheme);
    BenchmarkRow row{cfg, res.mspe, res.seconds};
    if (on_row) on_row(row);
    rows.push_back(row);
  }
  return rows;
}

std::vector<SchemeConfig> default_sweep() {
  std::vector<SchemeConfig> s;
  for (std::size_t m : {25, 50, 100, 150, 200, 300, 400}) {
    s.push_back({SchemeKind::PredictiveProcess, m, 1, 0.0});
  }
  for (auto [m, k] : std::vector<std::pair<std::size_t, std::size_t>>{
           {25, 4}, {25, 6}, {50, 6}, {50, 8}, {100, 8}, {100, 10}, {150, 10}}) {
    s.push_back({SchemeKind::FsaBlock, m, k, 0.0});
  }
  for (auto [m, g] : std::vector<std::pair<std::size_t, double>>{
           {25, 5.0}, {50, 5.0}, {50, 10.0}, {100, 10.0}}) {
    s.push_back({SchemeKind::FsaTaper, m, 1, g});
  }
  return s;
}

DominanceSummary assess_dominance(const std::vector<BenchmarkRow>& rows, SchemeKind challenger,
                                  SchemeKind baseline) {
  DominanceSummary out;
  for (const auto& c : rows) {
    if (c.config.kind != challenger) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : rows) {
      if (b.config.kind == baseline && b.seconds <= c.seconds) best = std::min(best, b.mspe);
    }
    if (!std::isfinite(best)) continue;
    ++out.comparable;
    if (c.mspe < best) ++out.wins;
  }
  return out;
}

namespace {

std::size_t bracket(const std::vector<double>& axis, double v) {
  auto it = std::upper_bound(axis.begin(), axis.end(), v);
  std::size_t i = it == axis.begin() ? 0 : static_cast<std::size_t>(it - axis.begin()) - 1;
  return std::min(i, axis.size() - 2);
}

}  // namespace

double bilinear_at(const Eigen::MatrixXd& field, const RegularGrid& src, double x, double y) {
  const std::size_t nx = src.x.size(), ny = src.y.size();
  if (nx < 2 || ny < 2) throw DomainError("bilinear: source grid needs two nodes per axis");
  if (field.rows() != static_cast<Eigen::Index>(nx) || field.cols() != static_cast<Eigen::Index>(ny)) {
    throw DomainError("bilinear: field shape does not match the source grid");
  }
  if (x < src.x.front() || x > src.x.back()) {
    throw DomainError("bilinear: x = " + std::to_string(x) + " outside source coverage");
  }
  const std::size_t i = bracket(src.x, x);
  const double tx = (x - src.x[i]) / (src.x[i + 1] - src.x[i]);

  std::size_t j0 = 0, j1 = 0;
  double ty = 0.0;
  if (src.periodic_y) {
    const double base = src.y.front();
    double yw = std::fmod(y - base, 360.0);
    if (yw < 0.0) yw += 360.0;
    yw += base;
    if (yw <= src.y.back()) {
      j0 = bracket(src.y, yw);
      j1 = j0 + 1;
      ty = (yw - src.y[j0]) / (src.y[j1] - src.y[j0]);
    } else {
      j0 = ny - 1;
      j1 = 0;
      ty = (yw - src.y.back()) / (base + 360.0 - src.y.back());
    }
  } else {
    if (y < src.y.front() || y > src.y.back()) {
      throw DomainError("bilinear: y = " + std::to_string(y) + " outside source coverage");
    }
    j0 = bracket(src.y, y);
    j1 = j0 + 1;
    ty = (y - src.y[j0]) / (src.y[j1] - src.y[j0]);
  }
  const auto I0 = static_cast<Eigen::Index>(i), I1 = I0 + 1;
  const auto J0 = static_cast<Eigen::Index>(j0), J1 = static_cast<Eigen::Index>(j1);
  return (1 - tx) * (1 - ty) * field(I0, J0) + (1 - tx) * ty * field(I0, J1) +
         tx * (1 - ty) * field(I1, J0) + tx * ty * field(I1, J1);
}

Eigen::MatrixXd bilinear_regrid(const Eigen::MatrixXd& field, const RegularGrid& src,
                                const RegularGrid& dst) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(dst.x.size()),
                      static_cast<Eigen::Index>(dst.y.size()));
  for (std::size_t a = 0; a < dst.x.size(); ++a) {
    for (std::size_t b = 0; b < dst.y.size(); ++b) {
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          bilinear_at(field, src, dst.x[a], dst.y[b]);
    }
  }
  return out;
}

LocationSet globe_grid(double lat0, double dlat, std::size_t nlat, double lon0, double dlon,
                       std::size_t nlon) {
  std::vector<Point> pts;
  pts.reserve(nlat * nlon);
  for (std::size_t a = 0; a < nlat; ++a) {
    for (std::size_t b = 0; b < nlon; ++b) {
      pts.push_back({lat0 + dlat * static_cast<double>(a), lon0 + dlon * static_cast<double>(b)});
    }
  }
  return LocationSet(std::move(pts), Metric::Chordal);
}

Eigen::MatrixXd knot_covariates(const CovariateSpec& spec, const LocationSet& knots,
                                const LocationSet& sites, const SiteAux& aux) {
  if (sites.empty()) throw DomainError("knot_covariates: no data sites");
  std::vector<std::size_t> nearest(knots.size());
  for (std::size_t k = 0; k < knots.size(); ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sites.size(); ++i) {
      const double d = sites.distance(knots[k], sites[i]);
      if (d < best) {
        best = d;
        nearest[k] = i;
      }
    }
  }
  return build_covariates(spec, knots, aux.subset(nearest));
}

}  // namespace fsagp

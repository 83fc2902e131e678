#include "fsagp/covariance.hpp"

#include <cmath>
#include <string>

#include "fsagp/error.hpp"

namespace fsagp {

double correlation(const CorrelationSpec& spec, double d) {
  if (!(d >= 0.0)) throw DomainError("correlation: negative distance " + std::to_string(d));
  if (!(spec.range > 0.0)) throw DomainError("correlation: range must be positive");
  const double t = d / spec.range;
  if (spec.family == CorrelationFamily::Exponential || spec.smoothness == 0.5) {
    return std::exp(-t);
  }
  const double nu = spec.smoothness;
  if (!(nu > 0.0)) throw DomainError("correlation: smoothness must be positive");
  if (t == 0.0) return 1.0;
  if (nu == 1.5) return (1.0 + t) * std::exp(-t);
  if (nu == 2.5) return (1.0 + t + t * t / 3.0) * std::exp(-t);
  const double scale = std::pow(2.0, 1.0 - nu) / std::tgamma(nu);
  return scale * std::pow(t, nu) * std::cyl_bessel_k(nu, t);
}

double TaperSpec::range_for(std::size_t response) const {
  if (ranges.empty()) throw DomainError("TaperSpec: no taper range");
  return ranges.size() == 1 ? ranges.front() : ranges.at(response);
}

double taper(double gamma, double d) {
  if (!(d >= 0.0)) throw DomainError("taper: negative distance " + std::to_string(d));
  if (!(gamma > 0.0)) throw DomainError("taper: range must be positive");
  if (d >= gamma) return 0.0;
  const double u = 1.0 - d / gamma;
  return u * u * (1.0 + 0.5 * d / gamma);
}

double taper(const TaperSpec& spec, std::size_t response, double d) {
  return taper(spec.range_for(response), d);
}

SiteAux SiteAux::subset(const std::vector<std::size_t>& idx) const {
  SiteAux out;
  auto pick = [&](const std::vector<double>& v) {
    std::vector<double> r;
    if (v.empty()) return r;
    r.reserve(idx.size());
    for (auto i : idx) r.push_back(v.at(i));
    return r;
  };
  out.land = pick(land);
  out.altitude = pick(altitude);
  for (const auto& [k, v] : custom) out.custom[k] = pick(v);
  return out;
}

double legendre(int order, double x) {
  if (order < 0) throw DomainError("legendre: negative order");
  if (order == 0) return 1.0;
  double p_prev = 1.0;
  double p = x;
  for (int k = 1; k < order; ++k) {
    const double next = ((2.0 * k + 1.0) * x * p - k * p_prev) / (k + 1.0);
    p_prev = p;
    p = next;
  }
  return p;
}

Eigen::MatrixXd build_covariates(const CovariateSpec& spec, const LocationSet& sites,
                                 const SiteAux& aux) {
  const auto n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(spec.p()));
  auto need = [&](const std::vector<double>& col, const char* name) -> const std::vector<double>& {
    if (col.size() != sites.size()) {
      throw DomainError(std::string("build_covariates: missing aux column '") + name + "'");
    }
    return col;
  };
  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    const auto& term = spec.terms[t];
    const auto c = static_cast<Eigen::Index>(t);
    using Kind = CovariateTerm::Kind;
    switch (term.kind) {
      case Kind::Intercept:
        X.col(c).setOnes();
        break;
      case Kind::LegendreLatitude:
        if (sites.metric() != Metric::Chordal) {
          throw DomainError("build_covariates: latitude terms need lat/lon sites");
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          X(i, c) = legendre(term.order, std::sin(sites[i].x * M_PI / 180.0));
        }
        break;
      case Kind::LandOcean: {
        const auto& col = need(aux.land, "land");
        for (Eigen::Index i = 0; i < n; ++i) X(i, c) = col[i];
        break;
      }
      case Kind::Longitude:
        for (Eigen::Index i = 0; i < n; ++i) X(i, c) = sites[i].y;
        break;
      case Kind::AltitudeScaled: {
        const auto& col = need(aux.altitude, "altitude");
        for (Eigen::Index i = 0; i < n; ++i) X(i, c) = col[i] / 1000.0;
        break;
      }
      case Kind::Custom: {
        auto it = aux.custom.find(term.column);
        if (it == aux.custom.end()) {
          throw DomainError("build_covariates: missing aux column '" + term.column + "'");
        }
        const auto& col = need(it->second, term.column.c_str());
        for (Eigen::Index i = 0; i < n; ++i) X(i, c) = col[i];
        break;
      }
    }
  }
  return X;
}

std::vector<std::pair<std::size_t, std::size_t>> lower_entries(std::size_t R, std::size_t Q) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j <= i && j < Q; ++j) out.emplace_back(i, j);
  }
  return out;
}

std::size_t LmcSpec::transform_dim() const {
  if (const auto* v = std::get_if<VaryingTransform>(&transform)) return v->covariates.p();
  return 0;
}

void LmcSpec::validate() const {
  if (R < 1) throw DomainError("LmcSpec: R must be at least 1");
  if (latent.empty() || latent.size() > R) throw DomainError("LmcSpec: need 1 <= Q <= R");
  for (const auto& c : latent) {
    if (!(c.range > 0.0)) throw DomainError("LmcSpec: latent range must be positive");
    if (!(c.smoothness > 0.0)) throw DomainError("LmcSpec: smoothness must be positive");
  }
  if (const auto* c = std::get_if<ConstantTransform>(&transform)) {
    if (static_cast<std::size_t>(c->A.rows()) != R ||
        static_cast<std::size_t>(c->A.cols()) != Q()) {
      throw DomainError("LmcSpec: A must be R x Q");
    }
    for (std::size_t i = 0; i < R; ++i) {
      for (std::size_t j = i + 1; j < Q(); ++j) {
        if (c->A(i, j) != 0.0) throw DomainError("LmcSpec: A must be lower triangular");
      }
    }
    for (std::size_t i = 0; i < Q(); ++i) {
      if (!(c->A(i, i) > 0.0)) throw DomainError("LmcSpec: A diagonal must be positive");
    }
  } else {
    const auto& v = std::get<VaryingTransform>(transform);
    if (v.eta.size() != lower_entries(R, Q()).size()) {
      throw DomainError("LmcSpec: wrong number of eta vectors");
    }
    for (const auto& e : v.eta) {
      if (static_cast<std::size_t>(e.size()) != v.covariates.p()) {
        throw DomainError("LmcSpec: eta length does not match covariate count");
      }
    }
  }
}

Eigen::MatrixXd transform_at(const LmcSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& xa) {
  if (const auto* c = std::get_if<ConstantTransform>(&spec.transform)) return c->A;
  const auto& v = std::get<VaryingTransform>(spec.transform);
  if (static_cast<std::size_t>(xa.size()) != v.covariates.p()) {
    throw DomainError("transform_at: covariate length " + std::to_string(xa.size()) +
                      " does not match eta dimension " + std::to_string(v.covariates.p()));
  }
  const auto entries = lower_entries(spec.R, spec.Q());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(spec.R),
                                            static_cast<Eigen::Index>(spec.Q()));
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto [i, j] = entries[e];
    const double value = xa.dot(v.eta[e]);
    A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        i == j ? std::abs(value) : value;
  }
  return A;
}

std::vector<Eigen::MatrixXd> transforms_at_sites(const LmcSpec& spec, const Eigen::MatrixXd& xa,
                                                 std::size_t n) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(n);
  if (!spec.varying()) {
    const auto& A = std::get<ConstantTransform>(spec.transform).A;
    out.assign(n, A);
    return out;
  }
  if (static_cast<std::size_t>(xa.rows()) != n) {
    throw DomainError("transforms_at_sites: covariate rows do not match site count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(transform_at(spec, xa.row(static_cast<Eigen::Index>(i)).transpose()));
  }
  return out;
}

namespace {

void check_block_dims(const LmcSpec& spec, const Eigen::MatrixXd& A_s, const Eigen::MatrixXd& A_t) {
  const auto R = static_cast<Eigen::Index>(spec.R);
  const auto Q = static_cast<Eigen::Index>(spec.Q());
  if (A_s.rows() != R || A_s.cols() != Q || A_t.rows() != R || A_t.cols() != Q) {
    throw DomainError("cross_cov_block: transform must be R x Q");
  }
}

// Correlations for every latent process at distance d.
inline void latent_correlations(const LmcSpec& spec, double d, double* rho) {
  for (std::size_t q = 0; q < spec.latent.size(); ++q) rho[q] = correlation(spec.latent[q], d);
}

bool all_exponential(const LmcSpec& spec) {
  for (const auto& c : spec.latent) {
    if (c.family != CorrelationFamily::Exponential && c.smoothness != 0.5) return false;
  }
  return true;
}

}  // namespace

void add_cross_cov_block(const LmcSpec& spec, const Eigen::MatrixXd& A_s,
                         const Eigen::MatrixXd& A_t, double d, Eigen::Ref<Eigen::MatrixXd> out) {
  const std::size_t Q = spec.Q();
  double rho[16];
  if (Q > 16) throw DomainError("at most 16 latent processes are supported");
  latent_correlations(spec, d, rho);
  for (Eigen::Index r = 0; r < A_s.rows(); ++r) {
    for (Eigen::Index c = 0; c < A_t.rows(); ++c) {
      double acc = 0.0;
      for (std::size_t q = 0; q < Q; ++q) {
        acc += A_s(r, static_cast<Eigen::Index>(q)) * rho[q] * A_t(c, static_cast<Eigen::Index>(q));
      }
      out(r, c) += acc;
    }
  }
}

Eigen::MatrixXd cross_cov_block(const LmcSpec& spec, const Eigen::MatrixXd& A_s,
                                const Eigen::MatrixXd& A_t, double d) {
  check_block_dims(spec, A_s, A_t);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(A_s.rows(), A_t.rows());
  add_cross_cov_block(spec, A_s, A_t, d, out);
  return out;
}

namespace {

// Shared kernel: fills out (na R x nb R). When `symmetric`, only j >= i is computed and
// mirrored.
void fill_cov(const LmcSpec& spec, const std::vector<Eigen::MatrixXd>& A_a,
              const std::vector<Eigen::MatrixXd>& A_b, const Eigen::MatrixXd& dist,
              bool symmetric, Eigen::MatrixXd& out) {
  const std::size_t R = spec.R;
  const std::size_t Q = spec.Q();
  const auto na = static_cast<std::size_t>(dist.rows());
  const auto nb = static_cast<std::size_t>(dist.cols());
  if (A_a.size() != na || A_b.size() != nb) {
    throw DomainError("cross_cov_matrix: transform count does not match distances");
  }
  out.resize(static_cast<Eigen::Index>(na * R), static_cast<Eigen::Index>(nb * R));
  if (Q > 16) throw DomainError("at most 16 latent processes are supported");

  const bool fast_exp = all_exponential(spec);
  double inv_range[16];
  for (std::size_t q = 0; q < Q; ++q) inv_range[q] = 1.0 / spec.latent[q].range;

  // Constant transform: block = sum_q rho_q * P_q with P_q = a_q a_q^T.
  const bool constant = !spec.varying();
  std::vector<Eigen::MatrixXd> outer;
  if (constant && na > 0) {
    for (std::size_t q = 0; q < Q; ++q) {
      const auto col = A_a[0].col(static_cast<Eigen::Index>(q));
      outer.push_back(col * col.transpose());
    }
  }

  double rho[16];
  for (std::size_t i = 0; i < na; ++i) {
    const std::size_t j0 = symmetric ? i : 0;
    for (std::size_t j = j0; j < nb; ++j) {
      const double d = dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (fast_exp) {
        for (std::size_t q = 0; q < Q; ++q) rho[q] = std::exp(-d * inv_range[q]);
      } else {
        latent_correlations(spec, d, rho);
      }
      const auto ri = static_cast<Eigen::Index>(i * R);
      const auto cj = static_cast<Eigen::Index>(j * R);
      for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < R; ++c) {
          if (symmetric && j == i && c < r) continue;
          double acc = 0.0;
          if (constant) {
            for (std::size_t q = 0; q < Q; ++q) {
              acc += rho[q] * outer[q](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            }
          } else {
            const auto& As = A_a[i];
            const auto& At = A_b[j];
            for (std::size_t q = 0; q < Q; ++q) {
              acc += As(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q)) * rho[q] *
                     At(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(q));
            }
          }
          out(ri + static_cast<Eigen::Index>(r), cj + static_cast<Eigen::Index>(c)) = acc;
          if (symmetric) {
            out(cj + static_cast<Eigen::Index>(c), ri + static_cast<Eigen::Index>(r)) = acc;
          }
        }
      }
    }
  }
}

}  // namespace

Eigen::MatrixXd cross_cov_matrix(const LmcSpec& spec, const std::vector<Eigen::MatrixXd>& A_a,
                                 const std::vector<Eigen::MatrixXd>& A_b,
                                 const Eigen::MatrixXd& dist) {
  Eigen::MatrixXd out;
  fill_cov(spec, A_a, A_b, dist, false, out);
  return out;
}

Eigen::MatrixXd cov_matrix(const LmcSpec& spec, const std::vector<Eigen::MatrixXd>& A,
                           const Eigen::MatrixXd& dist) {
  Eigen::MatrixXd out;
  fill_cov(spec, A, A, dist, true, out);
  return out;
}

Eigen::MatrixXd distance_matrix(const LocationSet& a, const LocationSet& b) {
  if (a.metric() != b.metric()) throw DomainError("distance_matrix: metric mismatch");
  Eigen::MatrixXd D(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a.distance(a[i], b[j]);
    }
  }
  return D;
}

Eigen::MatrixXd distance_matrix(const LocationSet& a) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      D(i, j) = D(j, i) = a.distance(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  return D;
}

Eigen::MatrixXd assemble_sigma_w(const LmcSpec& spec, const LocationSet& sites,
                                 const Eigen::MatrixXd& covariates_A) {
  spec.validate();
  const auto A = transforms_at_sites(spec, covariates_A, sites.size());
  return cov_matrix(spec, A, distance_matrix(sites));
}

}  // namespace fsagp

#pragma once

// Dense reference constructions written directly from the model definitions, sharing no
// assembly code with the library.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "fsagp/approximation.hpp"
#include "fsagp/covariance.hpp"
#include "fsagp/geometry.hpp"

namespace oracle {

using fsagp::Point;

inline double exp_corr(double phi, double d) { return std::exp(-d / phi); }

inline double spherical_taper(double gamma, double d) {
  if (d >= gamma) return 0.0;
  const double t = 1.0 - d / gamma;
  return t * t * (1.0 + d / (2.0 * gamma));
}

inline double planar(Point a, Point b) { return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y)); }

/// a_ij(s) = xa^T eta_ij on i >= j, |.| on the diagonal.
inline Eigen::MatrixXd varying_A(std::size_t R, std::size_t Q, const std::vector<Eigen::VectorXd>& eta,
                                 const Eigen::VectorXd& xa) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(R, Q);
  std::size_t e = 0;
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j <= i && j < Q; ++j, ++e) {
      const double v = xa.dot(eta[e]);
      A(i, j) = i == j ? std::abs(v) : v;
    }
  }
  return A;
}

/// Sum over latent processes of a_q(s) a_q(t)^T rho_q(d), one triple loop per entry.
inline Eigen::MatrixXd cross_cov(const std::vector<Point>& a, const std::vector<Eigen::MatrixXd>& Aa,
                                 const std::vector<Point>& b, const std::vector<Eigen::MatrixXd>& Ab,
                                 const std::vector<double>& phi) {
  const Eigen::Index R = Aa.front().rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.size() * R, b.size() * R);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = planar(a[i], b[j]);
      for (Eigen::Index r = 0; r < R; ++r) {
        for (Eigen::Index s = 0; s < R; ++s) {
          double v = 0.0;
          for (std::size_t q = 0; q < phi.size(); ++q) {
            v += Aa[i](r, q) * Ab[j](s, q) * exp_corr(phi[q], d);
          }
          out(i * R + r, j * R + s) = v;
        }
      }
    }
  }
  return out;
}

inline Eigen::MatrixXd predictive_process(const Eigen::MatrixXd& C, const Eigen::MatrixXd& Cstar) {
  return C * Cstar.ldlt().solve(C.transpose());
}

struct Dense {
  Eigen::MatrixXd sigma_w;
  Eigen::MatrixXd sigma_wt;  // predictive-process part (zero when absent)
  Eigen::MatrixXd sigma_y;
};

/// Explicit Sigma_Y for any scheme over planar sites with exponential correlations.
inline Dense assemble(const fsagp::Scheme& scheme, const std::vector<Point>& pts,
                      const std::vector<Eigen::MatrixXd>& A_sites, const std::vector<Point>& knots,
                      const std::vector<Eigen::MatrixXd>& A_knots, const std::vector<double>& phi,
                      const Eigen::VectorXd& nugget) {
  using K = fsagp::SchemeKind;
  const std::size_t n = pts.size();
  const Eigen::Index R = A_sites.front().rows();
  Dense out;
  out.sigma_w = cross_cov(pts, A_sites, pts, A_sites, phi);
  out.sigma_wt = Eigen::MatrixXd::Zero(n * R, n * R);
  if (scheme.kind != K::Full && scheme.kind != K::IndependentBlocks) {
    const Eigen::MatrixXd C = cross_cov(pts, A_sites, knots, A_knots, phi);
    const Eigen::MatrixXd Cs = cross_cov(knots, A_knots, knots, A_knots, phi);
    out.sigma_wt = predictive_process(C, Cs);
  }
  const Eigen::MatrixXd resid = out.sigma_w - out.sigma_wt;
  Eigen::MatrixXd S = out.sigma_wt;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (Eigen::Index r = 0; r < R; ++r) {
        for (Eigen::Index s = 0; s < R; ++s) {
          const Eigen::Index a = i * R + r, b = j * R + s;
          switch (scheme.kind) {
            case K::Full: S(a, b) = out.sigma_w(a, b); break;
            case K::PredictiveProcess: break;
            case K::IndependentBlocks:
            case K::FsaBlock:
              if (scheme.partition.assignment[i] == scheme.partition.assignment[j]) S(a, b) += resid(a, b);
              break;
            case K::FsaTaper:
              if (r == s) {
                S(a, b) += resid(a, b) * spherical_taper(scheme.taper.range_for(r), planar(pts[i], pts[j]));
              }
              break;
          }
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index r = 0; r < R; ++r) {
      if (nugget.size() > 0) S(i * R + r, i * R + r) += nugget(r);
    }
  }
  out.sigma_y = S;
  return out;
}

inline double dense_logdet(const Eigen::MatrixXd& M) {
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

inline double dense_quad(const Eigen::MatrixXd& M, const Eigen::VectorXd& v) {
  return v.dot(M.llt().solve(v));
}

inline bool close(double a, double b, double rtol, double atol) {
  return std::abs(a - b) <= atol + rtol * std::abs(b);
}

}  // namespace oracle

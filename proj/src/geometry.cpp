#include "fsagp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fsagp/error.hpp"
#include "fsagp/random.hpp"

namespace fsagp {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

void check_lat_lon(Point p) {
  if (!(p.x >= -90.0 && p.x <= 90.0) || !(p.y >= -180.0 && p.y <= 180.0)) {
    throw DomainError("latitude/longitude out of range: (" + std::to_string(p.x) + ", " +
                      std::to_string(p.y) + ")");
  }
}

double squared_planar(Point a, Point b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

}  // namespace

double chordal_distance(Point p, Point q, double earth_radius) {
  check_lat_lon(p);
  check_lat_lon(q);
  const double lat1 = p.x * kDegToRad;
  const double lat2 = q.x * kDegToRad;
  const double s_lat = std::sin(0.5 * (lat1 - lat2));
  const double s_lon = std::sin(0.5 * (p.y - q.y) * kDegToRad);
  const double h = s_lat * s_lat + std::cos(lat1) * std::cos(lat2) * s_lon * s_lon;
  return 2.0 * earth_radius * std::sqrt(std::clamp(h, 0.0, 1.0));
}

double euclidean_distance(Point p, Point q) noexcept { return std::sqrt(squared_planar(p, q)); }

double euclidean_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw DomainError("euclidean_distance: dimension mismatch " + std::to_string(p.size()) +
                      " vs " + std::to_string(q.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - q[i];
    s += d * d;
  }
  return std::sqrt(s);
}

LocationSet::LocationSet(std::vector<Point> points, Metric metric, double earth_radius)
    : points_(std::move(points)), metric_(metric), earth_radius_(earth_radius) {
  if (metric_ == Metric::Chordal) {
    for (const auto& p : points_) check_lat_lon(p);
  }
}

double LocationSet::distance(Point a, Point b) const {
  if (metric_ == Metric::Chordal) return chordal_distance(a, b, earth_radius_);
  return euclidean_distance(a, b);
}

LocationSet LocationSet::subset(std::span<const std::size_t> indices) const {
  std::vector<Point> pts;
  pts.reserve(indices.size());
  for (auto i : indices) pts.push_back(points_.at(i));
  return with_points(std::move(pts));
}

LocationSet LocationSet::with_points(std::vector<Point> points) const {
  return LocationSet(std::move(points), metric_, earth_radius_);
}

KmeansResult kmeans(const LocationSet& sites, std::size_t m, std::uint64_t seed,
                    KmeansOptions options) {
  const std::size_t n = sites.size();
  if (m < 1) throw DomainError("kmeans: m must be at least 1");
  if (m > n) {
    throw DomainError("kmeans: m = " + std::to_string(m) + " exceeds site count " +
                      std::to_string(n));
  }
  auto pts = sites.points();

  // m distinct sites via a partial Fisher-Yates shuffle.
  Rng rng = make_rng(seed, 0x6b6d);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<Point> centers(m);
  for (std::size_t c = 0; c < m; ++c) centers[c] = pts[order[c]];

  KmeansResult result;
  std::vector<std::size_t> assign(n, std::numeric_limits<std::size_t>::max());
  std::vector<std::size_t> previous;
  std::vector<double> dist2(n);
  std::vector<std::size_t> counts(m);

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    previous = assign;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t c = 0; c < m; ++c) {
        const double d = squared_planar(pts[i], centers[c]);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      assign[i] = arg;
      dist2[i] = best;
    }

    std::fill(counts.begin(), counts.end(), 0);
    for (auto a : assign) ++counts[a];
    for (std::size_t c = 0; c < m; ++c) {
      if (counts[c] != 0) continue;
      // Reseed with the point farthest from its center, never emptying another cluster.
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assign[i]] > 1 && dist2[i] > far_d) {
          far_d = dist2[i];
          far = i;
        }
      }
      if (far == n) break;
      --counts[assign[far]];
      assign[far] = c;
      counts[c] = 1;
      dist2[far] = 0.0;
      centers[c] = pts[far];
    }

    std::vector<Point> sums(m, Point{0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
      sums[assign[i]].x += pts[i].x;
      sums[assign[i]].y += pts[i].y;
    }
    for (std::size_t c = 0; c < m; ++c) {
      if (counts[c] == 0) continue;
      centers[c] = {sums[c].x / static_cast<double>(counts[c]),
                    sums[c].y / static_cast<double>(counts[c])};
    }

    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) objective += squared_planar(pts[i], centers[assign[i]]);
    result.objective_trace.push_back(objective);
    result.iterations = iter + 1;

    if (assign == previous) {
      result.converged = true;
      break;
    }
  }

  if (sites.metric() == Metric::Chordal) {
    for (auto& c : centers) {
      c.x = std::clamp(c.x, -90.0, 90.0);
      c.y = std::clamp(c.y, -180.0, 180.0);
    }
  }
  result.centers = sites.with_points(std::move(centers));
  result.assignment = std::move(assign);
  return result;
}

KnotSet kmeans_knots(const LocationSet& sites, std::size_t m, std::uint64_t seed,
                     KmeansOptions options) {
  return KnotSet{kmeans(sites, m, seed, options).centers};
}

BoundingBox bounding_box(const LocationSet& sites) {
  if (sites.empty()) throw DomainError("bounding_box: empty site set");
  BoundingBox b{sites[0].x, sites[0].x, sites[0].y, sites[0].y};
  for (const auto& p : sites.points()) {
    b.xmin = std::min(b.xmin, p.x);
    b.xmax = std::max(b.xmax, p.x);
    b.ymin = std::min(b.ymin, p.y);
    b.ymax = std::max(b.ymax, p.y);
  }
  return b;
}

std::vector<std::vector<std::size_t>> Partition::members() const {
  std::vector<std::vector<std::size_t>> out(K);
  for (std::size_t i = 0; i < assignment.size(); ++i) out[assignment[i]].push_back(i);
  return out;
}

std::size_t Partition::block_of(Point p) const {
  if (!centers || centers->empty()) throw DomainError("Partition::block_of: no centers");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers->size(); ++c) {
    const double d = centers->distance(p, (*centers)[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

namespace {

// Cell index along one axis; points exactly on an interior edge fall to the lower cell.
std::size_t axis_cell(double v, double lo, double hi, std::size_t k) {
  if (hi <= lo) return 0;
  const double t = (v - lo) / (hi - lo) * static_cast<double>(k);
  const double c = std::ceil(t) - 1.0;
  if (c < 0.0) return 0;
  return std::min(static_cast<std::size_t>(c), k - 1);
}

}  // namespace

Partition grid_partition(const LocationSet& sites, std::size_t k_per_axis,
                         std::optional<BoundingBox> box) {
  if (sites.empty()) throw DomainError("grid_partition: empty site set");
  if (k_per_axis < 1) throw DomainError("grid_partition: k_per_axis must be at least 1");
  const BoundingBox b = box ? *box : bounding_box(sites);
  const std::size_t k = k_per_axis;

  Partition part;
  part.K = k * k;
  part.assignment.resize(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const std::size_t col = axis_cell(sites[i].x, b.xmin, b.xmax, k);
    const std::size_t row = axis_cell(sites[i].y, b.ymin, b.ymax, k);
    part.assignment[i] = row * k + col;
  }
  std::vector<Point> centers;
  centers.reserve(part.K);
  const double wx = (b.xmax - b.xmin) / static_cast<double>(k);
  const double wy = (b.ymax - b.ymin) / static_cast<double>(k);
  for (std::size_t row = 0; row < k; ++row) {
    for (std::size_t col = 0; col < k; ++col) {
      centers.push_back({b.xmin + (static_cast<double>(col) + 0.5) * wx,
                         b.ymin + (static_cast<double>(row) + 0.5) * wy});
    }
  }
  part.centers = sites.with_points(std::move(centers));
  return part;
}

Partition voronoi_partition(const LocationSet& sites, const LocationSet& centers) {
  if (centers.empty()) throw DomainError("voronoi_partition: no centers");
  if (sites.metric() != centers.metric()) {
    throw DomainError("voronoi_partition: sites and centers use different metrics");
  }
  Partition part;
  part.K = centers.size();
  part.centers = centers;
  part.assignment.resize(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d = sites.distance(sites[i], centers[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    part.assignment[i] = best;
  }
  return part;
}

Partition singleton_partition(const LocationSet& sites) {
  Partition part;
  part.K = sites.size();
  part.assignment.resize(sites.size());
  std::iota(part.assignment.begin(), part.assignment.end(), 0);
  part.centers = sites;
  return part;
}

}  // namespace fsagp

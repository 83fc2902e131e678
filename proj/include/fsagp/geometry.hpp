#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace fsagp {

/// A site in the plane (x, y) or on the globe (x = latitude, y = longitude, degrees).
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

enum class Metric { Euclidean, Chordal };

inline constexpr double kEarthRadiusKm = 6371.0;

/// Straight-line distance through the sphere between two lat/lon points (degrees), in the
/// units of `earth_radius`. Throws DomainError for lat outside [-90, 90] or lon outside
/// [-180, 180].
double chordal_distance(Point p, Point q, double earth_radius = kEarthRadiusKm);

double euclidean_distance(Point p, Point q) noexcept;

/// L2 distance between arbitrary-dimension points; DomainError on length mismatch.
double euclidean_distance(std::span<const double> p, std::span<const double> q);

/// Ordered spatial sites tagged with the metric used to measure distances between them.
class LocationSet {
 public:
  LocationSet() = default;
  explicit LocationSet(std::vector<Point> points, Metric metric = Metric::Euclidean,
                       double earth_radius = kEarthRadiusKm);

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  Metric metric() const noexcept { return metric_; }
  double earth_radius() const noexcept { return earth_radius_; }

  const Point& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Point> points() const noexcept { return points_; }

  double distance(Point a, Point b) const;
  double distance(std::size_t i, std::size_t j) const { return distance(points_[i], points_[j]); }

  LocationSet subset(std::span<const std::size_t> indices) const;
  LocationSet with_points(std::vector<Point> points) const;

 private:
  std::vector<Point> points_;
  Metric metric_ = Metric::Euclidean;
  double earth_radius_ = kEarthRadiusKm;
};

struct KnotSet {
  LocationSet knots;
  std::size_t size() const noexcept { return knots.size(); }
};

struct KmeansOptions {
  std::size_t max_iterations = 100;
};

struct KmeansResult {
  LocationSet centers;
  std::vector<std::size_t> assignment;
  /// Sum of squared distances to the assigned center after each Lloyd iteration.
  std::vector<double> objective_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Lloyd's algorithm on the raw coordinates (planar even for lat/lon sets), initialized
/// from `m` distinct sites drawn with `seed`. Empty clusters are reseeded with the point
/// farthest from its current center, so exactly `m` centers come back.
KmeansResult kmeans(const LocationSet& sites, std::size_t m, std::uint64_t seed,
                    KmeansOptions options = {});

KnotSet kmeans_knots(const LocationSet& sites, std::size_t m, std::uint64_t seed,
                     KmeansOptions options = {});

struct BoundingBox {
  double xmin = 0.0;
  double xmax = 0.0;
  double ymin = 0.0;
  double ymax = 0.0;
};

BoundingBox bounding_box(const LocationSet& sites);

/// Disjoint blocks covering every site.
struct Partition {
  std::vector<std::size_t> assignment;
  std::size_t K = 0;
  std::optional<LocationSet> centers;

  /// Site indices per block, in increasing site order. Empty blocks stay empty.
  std::vector<std::vector<std::size_t>> members() const;

  /// Block for an arbitrary point: nearest center, ties to the lowest index.
  std::size_t block_of(Point p) const;
};

/// k x k equal cells over `box` (defaults to the sites' bounding box). A site on an
/// interior cell edge goes to the lower-index cell.
Partition grid_partition(const LocationSet& sites, std::size_t k_per_axis,
                         std::optional<BoundingBox> box = std::nullopt);

/// Nearest-center assignment under the sites' metric; ties go to the lowest center index.
Partition voronoi_partition(const LocationSet& sites, const LocationSet& centers);

/// One block per site.
Partition singleton_partition(const LocationSet& sites);

}  // namespace fsagp

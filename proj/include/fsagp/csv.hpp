#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fsagp/dataset.hpp"
#include "fsagp/geometry.hpp"
#include "fsagp/inference.hpp"
#include "fsagp/prediction.hpp"
#include "fsagp/simulation.hpp"

namespace fsagp {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; -1 when absent.
  long find(const std::string& name) const;
  std::vector<double> numeric_column(std::size_t c) const;
};

/// RFC-4180 reader: quoted fields, doubled quotes, CRLF or LF line ends. Header required.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

std::string csv_escape(const std::string& field);
/// Shortest round-trip decimal form.
std::string format_double(double v);

/// Row-at-a-time writer; every row is flushed so an interrupted run leaves a valid file.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
  std::size_t width_;
};

/// Coordinates (x,y or lat,lon), responses Y1..YR, then land / altitude / custom columns.
void write_dataset(const std::filesystem::path& path, const SpatialDataset& data);
/// Inverse of write_dataset; X and XA are left empty for the caller to build. A file without
/// Y columns gives an n x 0 response matrix.
SpatialDataset read_dataset(const std::filesystem::path& path, double earth_radius = kEarthRadiusKm);

void write_locations(const std::filesystem::path& path, const LocationSet& sites);
LocationSet read_locations(const std::filesystem::path& path, double earth_radius = kEarthRadiusKm);
void write_partition(const std::filesystem::path& path, const Partition& partition);

/// One row per stored sample: parameter columns then loglik.
void write_chain(const std::filesystem::path& path, const PosteriorChain& chain);
PosteriorChain read_chain(const std::filesystem::path& path);

/// Coordinates, mean_r, sd_r, and corr_rs for r < s.
void write_predictions(const std::filesystem::path& path, const std::vector<PredictionResult>& preds,
                       Metric metric);

std::vector<std::string> benchmark_header();
std::vector<std::string> benchmark_fields(const BenchmarkRow& row);

}  // namespace fsagp

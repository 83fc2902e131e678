#include "fsagp/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "fsagp/error.hpp"

namespace fsagp {

long CsvTable::find(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<long>(it - header.begin());
}

std::vector<double> CsvTable::numeric_column(std::size_t c) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string& s = rows[r].at(c);
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) {
      throw ConfigError(header.at(c), "row " + std::to_string(r + 1) + ": '" + s + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (ch == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      record.push_back(std::move(field));
      field.clear();
      field_started = false;
      if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
      record.clear();
    } else {
      field += ch;
      field_started = true;
    }
  }
  if (quoted) throw ConfigError("csv", "unterminated quoted field");
  if (field_started || !record.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  if (records.empty()) throw ConfigError("csv", "missing header row");
  CsvTable t;
  t.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size()) {
      throw ConfigError("csv", "row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                                   " fields, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_csv(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string(), e.what());
  }
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc), width_(header.size()) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw DomainError("csv writer: row width does not match header");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << csv_escape(fields[i]);
  }
  out_ << '\n';
  out_.flush();
}

namespace {

std::pair<std::string, std::string> coord_names(Metric m) {
  return m == Metric::Chordal ? std::pair<std::string, std::string>{"lat", "lon"}
                              : std::pair<std::string, std::string>{"x", "y"};
}

LocationSet locations_from(const CsvTable& t, double earth_radius) {
  Metric metric = Metric::Euclidean;
  long cx = t.find("x"), cy = t.find("y");
  if (cx < 0 || cy < 0) {
    cx = t.find("lat");
    cy = t.find("lon");
    metric = Metric::Chordal;
  }
  if (cx < 0 || cy < 0) throw ConfigError("csv", "needs coordinate columns x,y or lat,lon");
  const auto xs = t.numeric_column(static_cast<std::size_t>(cx));
  const auto ys = t.numeric_column(static_cast<std::size_t>(cy));
  std::vector<Point> pts(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) pts[i] = {xs[i], ys[i]};
  try {
    return LocationSet(std::move(pts), metric, earth_radius);
  } catch (const DomainError& e) {
    throw ConfigError(metric == Metric::Chordal ? "lat,lon" : "x,y", e.what());
  }
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const SpatialDataset& data) {
  data.validate();
  const auto [xn, yn] = coord_names(data.sites.metric());
  std::vector<std::string> header{xn, yn};
  for (std::size_t r = 0; r < data.R(); ++r) header.push_back("Y" + std::to_string(r + 1));
  const bool land = data.aux.land.size() == data.n();
  const bool alt = data.aux.altitude.size() == data.n();
  if (land) header.push_back("land");
  if (alt) header.push_back("altitude");
  for (const auto& [name, col] : data.aux.custom) header.push_back(name);

  CsvWriter w(path, header);
  for (std::size_t i = 0; i < data.n(); ++i) {
    std::vector<std::string> f{format_double(data.sites[i].x), format_double(data.sites[i].y)};
    for (Eigen::Index r = 0; r < data.Y.cols(); ++r) {
      f.push_back(format_double(data.Y(static_cast<Eigen::Index>(i), r)));
    }
    if (land) f.push_back(format_double(data.aux.land[i]));
    if (alt) f.push_back(format_double(data.aux.altitude[i]));
    for (const auto& [name, col] : data.aux.custom) f.push_back(format_double(col.at(i)));
    w.row(f);
  }
}

SpatialDataset read_dataset(const std::filesystem::path& path, double earth_radius) {
  const CsvTable t = read_csv(path);
  SpatialDataset d;
  try {
    d.sites = locations_from(t, earth_radius);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ":" + e.field(), e.what());
  }
  std::map<int, std::size_t> ycols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    const std::string& h = t.header[c];
    if (h.size() > 1 && h[0] == 'Y' &&
        std::all_of(h.begin() + 1, h.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
      ycols[std::stoi(h.substr(1))] = c;
    }
  }
  int expect = 1;
  for (const auto& [k, c] : ycols) {
    if (k != expect++) throw ConfigError(path.string(), "response columns must be Y1..YR without gaps");
  }
  d.Y.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(ycols.size()));
  Eigen::Index r = 0;
  for (const auto& [k, c] : ycols) {
    const auto col = t.numeric_column(c);
    for (std::size_t i = 0; i < col.size(); ++i) d.Y(static_cast<Eigen::Index>(i), r) = col[i];
    ++r;
  }
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    const std::string& h = t.header[c];
    if (h == "x" || h == "y" || h == "lat" || h == "lon") continue;
    if (std::any_of(ycols.begin(), ycols.end(), [&](const auto& kv) { return kv.second == c; })) continue;
    if (h == "land") {
      d.aux.land = t.numeric_column(c);
    } else if (h == "altitude") {
      d.aux.altitude = t.numeric_column(c);
    } else {
      d.aux.custom[h] = t.numeric_column(c);
    }
  }
  return d;
}

void write_locations(const std::filesystem::path& path, const LocationSet& sites) {
  const auto [xn, yn] = coord_names(sites.metric());
  CsvWriter w(path, {xn, yn});
  for (const auto& p : sites.points()) w.row({format_double(p.x), format_double(p.y)});
}

LocationSet read_locations(const std::filesystem::path& path, double earth_radius) {
  const CsvTable t = read_csv(path);
  try {
    return locations_from(t, earth_radius);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ":" + e.field(), e.what());
  }
}

void write_partition(const std::filesystem::path& path, const Partition& partition) {
  CsvWriter w(path, {"site", "block"});
  for (std::size_t i = 0; i < partition.assignment.size(); ++i) {
    w.row({std::to_string(i), std::to_string(partition.assignment[i])});
  }
}

void write_chain(const std::filesystem::path& path, const PosteriorChain& chain) {
  std::vector<std::string> header = chain.names;
  header.push_back("loglik");
  CsvWriter w(path, header);
  for (Eigen::Index r = 0; r < chain.samples.rows(); ++r) {
    std::vector<std::string> f;
    f.reserve(header.size());
    for (Eigen::Index c = 0; c < chain.samples.cols(); ++c) f.push_back(format_double(chain.samples(r, c)));
    f.push_back(format_double(chain.loglik_trace.at(static_cast<std::size_t>(r))));
    w.row(f);
  }
}

PosteriorChain read_chain(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const long ll = t.find("loglik");
  if (ll < 0) throw ConfigError(path.string(), "chain file has no loglik column");
  PosteriorChain chain;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (static_cast<long>(c) == ll) continue;
    chain.names.push_back(t.header[c]);
    cols.push_back(c);
  }
  chain.samples.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto col = t.numeric_column(cols[k]);
    for (std::size_t i = 0; i < col.size(); ++i) {
      chain.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = col[i];
    }
  }
  chain.loglik_trace = t.numeric_column(static_cast<std::size_t>(ll));
  return chain;
}

void write_predictions(const std::filesystem::path& path, const std::vector<PredictionResult>& preds,
                       Metric metric) {
  const auto [xn, yn] = coord_names(metric);
  const Eigen::Index R = preds.empty() ? 0 : preds.front().mean.size();
  std::vector<std::string> header{xn, yn};
  for (Eigen::Index r = 0; r < R; ++r) header.push_back("mean_" + std::to_string(r + 1));
  for (Eigen::Index r = 0; r < R; ++r) header.push_back("sd_" + std::to_string(r + 1));
  for (Eigen::Index r = 0; r < R; ++r) {
    for (Eigen::Index s = r + 1; s < R; ++s) {
      header.push_back("corr_" + std::to_string(r + 1) + std::to_string(s + 1));
    }
  }
  CsvWriter w(path, header);
  for (const auto& p : preds) {
    std::vector<std::string> f{format_double(p.site.x), format_double(p.site.y)};
    for (Eigen::Index r = 0; r < R; ++r) f.push_back(format_double(p.mean(r)));
    const bool cov = p.cov.rows() == R;
    for (Eigen::Index r = 0; r < R; ++r) {
      f.push_back(cov ? format_double(std::sqrt(std::max(0.0, p.cov(r, r)))) : "");
    }
    for (Eigen::Index r = 0; r < R; ++r) {
      for (Eigen::Index s = r + 1; s < R; ++s) {
        if (!cov) {
          f.push_back("");
          continue;
        }
        const double den = std::sqrt(std::max(0.0, p.cov(r, r)) * std::max(0.0, p.cov(s, s)));
        f.push_back(den > 0.0 ? format_double(p.cov(r, s) / den) : "0");
      }
    }
    w.row(f);
  }
}

std::vector<std::string> benchmark_header() {
  return {"scheme", "m", "K", "gamma", "mspe", "seconds"};
}

std::vector<std::string> benchmark_fields(const BenchmarkRow& row) {
  const auto& c = row.config;
  const bool knots = c.kind == SchemeKind::PredictiveProcess || c.kind == SchemeKind::FsaBlock ||
                     c.kind == SchemeKind::FsaTaper;
  const bool blocks = c.kind == SchemeKind::IndependentBlocks || c.kind == SchemeKind::FsaBlock;
  return {to_string(c.kind),
          knots ? std::to_string(c.m) : "",
          blocks ? std::to_string(c.k_per_axis * c.k_per_axis) : "",
          c.kind == SchemeKind::FsaTaper ? format_double(c.gamma) : "",
          format_double(row.mspe),
          format_double(row.seconds)};
}

}  // namespace fsagp

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "softsurv/errors.hpp"

namespace softsurv {

enum class CensorKind { Uncensored, Right, Left, Interval };

inline const char* to_string(CensorKind k) {
  switch (k) {
    case CensorKind::Uncensored: return "uncensored";
    case CensorKind::Right: return "right";
    case CensorKind::Left: return "left";
    case CensorKind::Interval: return "interval";
  }
  return "?";
}

/// One observation: the event time lies in (left, right]. left == right means
/// the time was observed exactly; right == inf means right-censored at left.
struct SubjectRecord {
  std::int64_t cluster = 0;
  double left = 0.0;
  double right = std::numeric_limits<double>::infinity();
  std::vector<double> x;

  CensorKind kind() const {
    if (std::isinf(right)) return CensorKind::Right;
    if (left == right) return CensorKind::Uncensored;
    if (left == 0.0) return CensorKind::Left;
    return CensorKind::Interval;
  }

  bool has_event_interval() const {
    const CensorKind k = kind();
    return k == CensorKind::Left || k == CensorKind::Interval;
  }

  void validate() const {
    if (!(left >= 0.0) || std::isnan(right) || !(left <= right) || !std::isfinite(left)) {
      throw ParseError("invalid censoring interval (" + std::to_string(left) + ", " + std::to_string(right) + "]");
    }
    if (kind() == CensorKind::Uncensored && !(left > 0.0)) {
      throw ParseError("observed event times must be positive");
    }
    for (double v : x) {
      if (!std::isfinite(v)) throw ParseError("covariates must be finite");
    }
  }
};

using Dataset = std::vector<SubjectRecord>;

/// Contiguous 0..N-1 relabeling of cluster ids (ascending by id).
struct ClusterIndex {
  std::vector<std::int64_t> labels;
  std::map<std::int64_t, std::size_t> index;

  static ClusterIndex build(const Dataset& data) {
    ClusterIndex ci;
    for (const auto& r : data) ci.index.emplace(r.cluster, 0);
    std::size_t k = 0;
    for (auto& [label, idx] : ci.index) {
      idx = k++;
      ci.labels.push_back(label);
    }
    return ci;
  }

  std::size_t size() const { return labels.size(); }

  /// Position of `label`, or size() when unseen.
  std::size_t find(std::int64_t label) const {
    auto it = index.find(label);
    return it == index.end() ? labels.size() : it->second;
  }
};

inline std::size_t covariate_count(const Dataset& data) {
  if (data.empty()) throw ConfigError("dataset is empty");
  const std::size_t p = data.front().x.size();
  for (const auto& r : data) {
    if (r.x.size() != p) throw ParseError("covariate vectors differ in length");
  }
  return p;
}

inline void validate_dataset(const Dataset& data) {
  covariate_count(data);
  for (const auto& r : data) r.validate();
}

/// Largest finite interval endpoint.
inline double max_finite_time(const Dataset& data) {
  double m = 0.0;
  for (const auto& r : data) {
    m = std::max(m, r.left);
    if (std::isfinite(r.right)) m = std::max(m, r.right);
  }
  return m;
}

/// Mean of finite-endpoint midpoints ((A + B) / 2, or A when B = inf).
inline double mean_midpoint(const Dataset& data) {
  double s = 0.0;
  for (const auto& r : data) s += std::isfinite(r.right) ? 0.5 * (r.left + r.right) : r.left;
  return s / static_cast<double>(data.size());
}

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line, char delim = ',') {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delim)) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s, std::size_t line_no) {
  if (s == "inf" || s == "Inf" || s == "INF") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  }
  if (used != s.size()) throw ParseError("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  return v;
}

inline bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace detail

/// Read `cluster,left,right,x1..xp`. An empty or `inf` right endpoint means
/// right-censored.
inline Dataset read_dataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line) || line.front() == '#') continue;
    header = detail::split_fields(line);
    break;
  }
  if (header.size() < 3 || header[0] != "cluster" || header[1] != "left" || header[2] != "right") {
    throw ParseError("data header must start with cluster,left,right");
  }
  const std::size_t p = header.size() - 3;
  Dataset data;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line) || line.front() == '#') continue;
    const auto f = detail::split_fields(line);
    if (f.size() != header.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(f.size()));
    }
    SubjectRecord r;
    const double cluster = detail::parse_number(f[0], line_no);
    if (cluster != std::floor(cluster) || !std::isfinite(cluster)) {
      throw ParseError("line " + std::to_string(line_no) + ": cluster must be an integer");
    }
    r.cluster = static_cast<std::int64_t>(cluster);
    r.left = detail::parse_number(f[1], line_no);
    r.right = f[2].empty() ? std::numeric_limits<double>::infinity() : detail::parse_number(f[2], line_no);
    r.x.resize(p);
    for (std::size_t j = 0; j < p; ++j) r.x[j] = detail::parse_number(f[3 + j], line_no);
    try {
      r.validate();
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    data.push_back(std::move(r));
  }
  if (data.empty()) throw ParseError("data file has no records");
  return data;
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open data file '" + path + "'");
  return read_dataset(in);
}

inline void write_dataset(std::ostream& out, const Dataset& data) {
  const std::size_t p = data.empty() ? 0 : data.front().x.size();
  out << "cluster,left,right";
  for (std::size_t j = 0; j < p; ++j) out << ",x" << (j + 1);
  out << '\n' << std::setprecision(17);
  for (const auto& r : data) {
    out << r.cluster << ',' << r.left << ',';
    if (std::isinf(r.right)) {
      out << "inf";
    } else {
      out << r.right;
    }
    for (double v : r.x) out << ',' << v;
    out << '\n';
  }
}

/// Covariate rows for prediction: a header line then p numbers per row. A
/// leading `cluster,left,right` block is skipped if present.
inline std::vector<std::vector<double>> read_covariates(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line) || line.front() == '#') continue;
    header = detail::split_fields(line);
    break;
  }
  if (header.empty()) throw ParseError("covariate file is empty");
  std::size_t skip = 0;
  if (header.size() >= 3 && header[0] == "cluster" && header[1] == "left" && header[2] == "right") skip = 3;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line) || line.front() == '#') continue;
    const auto f = detail::split_fields(line);
    if (f.size() != header.size()) throw ParseError("line " + std::to_string(line_no) + ": wrong field count");
    std::vector<double> row;
    for (std::size_t j = skip; j < f.size(); ++j) row.push_back(detail::parse_number(f[j], line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<std::vector<double>> read_covariates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open covariate file '" + path + "'");
  return read_covariates(in);
}

}  // namespace softsurv

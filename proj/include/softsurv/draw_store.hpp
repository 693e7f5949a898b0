#pragma once

// Draw store: a self-describing binary container for posterior draws.
//
// Layout (little-endian host order, no padding):
//
//   "SOFTSURV"            8-byte magic
//   u32 version           currently 1
//   u64 header length
//   header                UTF-8 JSON: config entries, seed, stream,
//                         iterations, scaler, forest and baseline priors,
//                         cluster labels, covariate count
//   record*               until end of file, each:
//     "DRAW"              4-byte tag
//     u8  family          0 exponential, 1 weibull
//     f64 rate, f64 shape
//     f64 eta             NaN without frailties
//     u64 count, f64[count] frailties
//     u64 trees
//     per tree: f64 bandwidth, u64 nodes,
//               per node (preorder): i32 left, i32 right, i32 parent,
//                                    i32 coord, f64 cutpoint, f64 mu
//
// Identical (data, config, seed) give identical bytes within a build.

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "softsurv/config.hpp"
#include "softsurv/errors.hpp"
#include "softsurv/sampler.hpp"

namespace softsurv {

inline constexpr std::array<char, 8> kStoreMagic{'S', 'O', 'F', 'T', 'S', 'U', 'R', 'V'};
inline constexpr std::array<char, 4> kDrawTag{'D', 'R', 'A', 'W'};
inline constexpr std::uint32_t kStoreVersion = 1;

namespace detail {

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError("draw store: truncated record");
  return v;
}

inline nlohmann::ordered_json store_header(const PosteriorDraws& d) {
  nlohmann::ordered_json h;
  h["format"] = "softsurv-draws";
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config_entries(d.config)) cfg[k] = v;
  h["config"] = cfg;
  h["seed"] = d.config.seed;
  h["stream"] = d.stream;
  h["iterations"] = d.iterations;
  h["covariates"] = d.covariates;
  h["time_scale"] = format_double(d.scaler.time_scale);
  nlohmann::ordered_json cols = nlohmann::ordered_json::array();
  for (const auto& c : d.scaler.columns) {
    cols.push_back({{"min", format_double(c.min)}, {"max", format_double(c.max)}, {"binary", c.binary}});
  }
  h["columns"] = cols;
  h["leaf_scale"] = format_double(d.hyper.leaf_scale);
  h["rate_prior"] = {format_double(d.baseline_prior.rate.shape), format_double(d.baseline_prior.rate.rate)};
  h["cluster_labels"] = d.cluster_labels;
  return h;
}

inline double header_double(const nlohmann::ordered_json& j) {
  return config_double("header", j.get<std::string>());
}

}  // namespace detail

inline void write_draw(std::ostream& out, const Draw& d) {
  using detail::put;
  out.write(kDrawTag.data(), kDrawTag.size());
  put<std::uint8_t>(out, d.baseline.family == BaselineFamily::Exponential ? 0 : 1);
  put<double>(out, d.baseline.rate);
  put<double>(out, d.baseline.shape);
  put<double>(out, d.eta);
  put<std::uint64_t>(out, d.frailty.size());
  for (double w : d.frailty) put<double>(out, w);
  put<std::uint64_t>(out, d.trees.size());
  for (const SoftTree& t : d.trees) {
    put<double>(out, t.bandwidth);
    put<std::uint64_t>(out, t.nodes.size());
    for (const TreeNode& n : t.nodes) {
      put<std::int32_t>(out, n.left);
      put<std::int32_t>(out, n.right);
      put<std::int32_t>(out, n.parent);
      put<std::int32_t>(out, n.coord);
      put<double>(out, n.cutpoint);
      put<double>(out, n.mu);
    }
  }
}

inline void write_draw_store(std::ostream& out, const PosteriorDraws& d) {
  out.write(kStoreMagic.data(), kStoreMagic.size());
  detail::put<std::uint32_t>(out, kStoreVersion);
  const std::string header = detail::store_header(d).dump();
  detail::put<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const Draw& draw : d.draws) write_draw(out, draw);
}

inline void write_draw_store(const std::string& path, const PosteriorDraws& d) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  write_draw_store(out, d);
  if (!out) throw NumericalFailure("failed writing draw store '" + path + "'");
}

inline PosteriorDraws read_draw_store(std::istream& in) {
  using detail::get;
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kStoreMagic) throw ParseError("draw store: bad magic");
  if (get<std::uint32_t>(in) != kStoreVersion) throw ParseError("draw store: unsupported version");
  const auto len = get<std::uint64_t>(in);
  if (len > (1ULL << 32)) throw ParseError("draw store: header too large");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw ParseError("draw store: truncated header");

  PosteriorDraws d;
  try {
    const auto h = nlohmann::ordered_json::parse(text);
    for (const auto& [k, v] : h.at("config").items()) apply_config(d.config, k, v.get<std::string>());
    d.stream = h.at("stream").get<std::uint64_t>();
    d.iterations = h.at("iterations").get<std::size_t>();
    d.covariates = h.at("covariates").get<std::size_t>();
    d.scaler.time_scale = detail::header_double(h.at("time_scale"));
    for (const auto& c : h.at("columns")) {
      d.scaler.columns.push_back(
          {detail::header_double(c.at("min")), detail::header_double(c.at("max")), c.at("binary").get<bool>()});
    }
    d.hyper = d.config.forest_hyper();
    d.hyper.leaf_scale = detail::header_double(h.at("leaf_scale"));
    d.baseline_prior.rate = {detail::header_double(h.at("rate_prior").at(0)),
                             detail::header_double(h.at("rate_prior").at(1))};
    d.baseline_prior.weibull_shape = d.config.weibull_shape_prior;
    d.cluster_labels = h.at("cluster_labels").get<std::vector<std::int64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("draw store header: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("draw store header: ") + e.what());
  }
  if (d.scaler.columns.size() != d.covariates) throw ParseError("draw store: covariate count mismatch");

  const int max_coord = static_cast<int>(d.covariates);
  while (true) {
    std::array<char, 4> tag{};
    in.read(tag.data(), tag.size());
    if (in.gcount() == 0 && in.eof()) break;
    if (!in || tag != kDrawTag) throw ParseError("draw store: bad record tag");
    Draw draw;
    const auto family = get<std::uint8_t>(in);
    if (family > 1) throw ParseError("draw store: bad baseline family");
    draw.baseline.family = family == 0 ? BaselineFamily::Exponential : BaselineFamily::Weibull;
    draw.baseline.rate = get<double>(in);
    draw.baseline.shape = get<double>(in);
    draw.eta = get<double>(in);
    const auto nw = get<std::uint64_t>(in);
    if (nw != 0 && nw != d.cluster_labels.size()) throw ParseError("draw store: frailty count mismatch");
    draw.frailty.resize(nw);
    for (double& w : draw.frailty) w = get<double>(in);
    const auto nt = get<std::uint64_t>(in);
    if (nt != d.config.trees) throw ParseError("draw store: tree count mismatch");
    draw.trees.resize(nt);
    for (SoftTree& t : draw.trees) {
      t.bandwidth = get<double>(in);
      const auto nn = get<std::uint64_t>(in);
      if (nn == 0 || nn > (1ULL << 24)) throw ParseError("draw store: bad node count");
      t.nodes.clear();
      for (std::uint64_t k = 0; k < nn; ++k) {
        TreeNode& n = t.nodes.emplace_back();
        n.left = get<std::int32_t>(in);
        n.right = get<std::int32_t>(in);
        n.parent = get<std::int32_t>(in);
        n.coord = get<std::int32_t>(in);
        n.cutpoint = get<double>(in);
        n.mu = get<double>(in);
        if (n.coord < 0 || n.coord > max_coord) throw ParseError("draw store: split coordinate out of range");
      }
      if (!t.is_valid()) throw ParseError("draw store: malformed tree");
      t.normalize();
    }
    d.draws.push_back(std::move(draw));
  }
  return d;
}

inline PosteriorDraws read_draw_store(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open draw store '" + path + "'");
  return read_draw_store(in);
}

}  // namespace softsurv

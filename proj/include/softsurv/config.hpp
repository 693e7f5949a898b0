#pragma once

// Flat key = value configuration for FitConfig.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "softsurv/errors.hpp"
#include "softsurv/sampler.hpp"

namespace softsurv {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double config_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + key + "': not a number: '" + value + "'");
  }
  return v;
}

inline std::uint64_t config_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + key + "': not a nonnegative integer: '" + value + "'");
  }
  return v;
}

inline bool config_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + value + "'");
}

}  // namespace detail

/// Set one FitConfig field from its textual key and value.
inline void apply_config(FitConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "trees") cfg.trees = config_uint(key, value);
  else if (key == "burn_in") cfg.burn_in = config_uint(key, value);
  else if (key == "samples") cfg.samples = config_uint(key, value);
  else if (key == "thin") cfg.thin = config_uint(key, value);
  else if (key == "seed") cfg.seed = config_uint(key, value);
  else if (key == "baseline") cfg.family = parse_baseline_family(value);
  else if (key == "rate_shape") {
    if (!cfg.rate_prior) cfg.rate_prior = GammaPrior{1.0, 1.0};
    cfg.rate_prior->shape = config_double(key, value);
  } else if (key == "rate_rate") {
    if (!cfg.rate_prior) cfg.rate_prior = GammaPrior{1.0, 1.0};
    cfg.rate_prior->rate = config_double(key, value);
  } else if (key == "weibull_shape_shape") cfg.weibull_shape_prior.shape = config_double(key, value);
  else if (key == "weibull_shape_rate") cfg.weibull_shape_prior.rate = config_double(key, value);
  else if (key == "eta_shape") cfg.eta_prior.shape = config_double(key, value);
  else if (key == "eta_rate") cfg.eta_prior.rate = config_double(key, value);
  else if (key == "frailty") cfg.frailty = config_bool(key, value);
  else if (key == "quadrature_points") cfg.quadrature_points = config_uint(key, value);
  else if (key == "threads") cfg.threads = config_uint(key, value);
  else if (key == "time_scale") cfg.time_scale = config_double(key, value);
  else if (key == "leaf_scale_k") cfg.leaf_scale_k = config_double(key, value);
  else if (key == "branch_gamma") cfg.branch_gamma = config_double(key, value);
  else if (key == "branch_beta") cfg.branch_beta = config_double(key, value);
  else if (key == "bandwidth_rate") cfg.bandwidth_rate = config_double(key, value);
  else if (key == "ignore_likelihood") cfg.ignore_likelihood = config_bool(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Every field that affects the chain, in a fixed order. Thread count is
/// excluded: it does not change the output.
inline std::vector<std::pair<std::string, std::string>> config_entries(const FitConfig& cfg) {
  using detail::format_double;
  std::vector<std::pair<std::string, std::string>> out{
      {"trees", std::to_string(cfg.trees)},
      {"burn_in", std::to_string(cfg.burn_in)},
      {"samples", std::to_string(cfg.samples)},
      {"thin", std::to_string(cfg.thin)},
      {"seed", std::to_string(cfg.seed)},
      {"baseline", std::string(to_string(cfg.family))},
  };
  if (cfg.rate_prior) {
    out.emplace_back("rate_shape", format_double(cfg.rate_prior->shape));
    out.emplace_back("rate_rate", format_double(cfg.rate_prior->rate));
  }
  out.emplace_back("weibull_shape_shape", format_double(cfg.weibull_shape_prior.shape));
  out.emplace_back("weibull_shape_rate", format_double(cfg.weibull_shape_prior.rate));
  out.emplace_back("eta_shape", format_double(cfg.eta_prior.shape));
  out.emplace_back("eta_rate", format_double(cfg.eta_prior.rate));
  out.emplace_back("frailty", cfg.frailty ? "true" : "false");
  out.emplace_back("quadrature_points", std::to_string(cfg.quadrature_points));
  if (cfg.time_scale) out.emplace_back("time_scale", format_double(*cfg.time_scale));
  out.emplace_back("leaf_scale_k", format_double(cfg.leaf_scale_k));
  out.emplace_back("branch_gamma", format_double(cfg.branch_gamma));
  out.emplace_back("branch_beta", format_double(cfg.branch_beta));
  out.emplace_back("bandwidth_rate", format_double(cfg.bandwidth_rate));
  out.emplace_back("ignore_likelihood", cfg.ignore_likelihood ? "true" : "false");
  return out;
}

/// Parse `key = value` lines; `#` starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_config_entries(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    out.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return out;
}

inline void apply_config_file(FitConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  for (const auto& [k, v] : read_config_entries(in)) apply_config(cfg, k, v);
}

}  // namespace softsurv

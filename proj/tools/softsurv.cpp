// softsurv command-line tool: simulate, fit, predict, rmst, lpml, benchmark.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "softsurv/config.hpp"
#include "softsurv/data.hpp"
#include "softsurv/draw_store.hpp"
#include "softsurv/errors.hpp"
#include "softsurv/predict.hpp"
#include "softsurv/sampler.hpp"
#include "softsurv/sim.hpp"

namespace {

using namespace softsurv;

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kConfig = 3,
  kParse = 4,
  kNumerical = 5,
  kInput = 6,
};

int fail(const char* kind, const std::string& message, int code) {
  std::string line = message;
  for (char& c : line) {
    if (c == '\n') c = ' ';
  }
  std::cerr << "error[" << kind << "]: " << line << '\n';
  return code;
}

/// Fit options shared by `fit` and `benchmark`. Flags left unset keep the
/// value from --config (or the default).
struct FitFlags {
  std::string config_file;
  std::optional<std::size_t> trees, burn_in, samples, thin, quadrature, threads;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> baseline;
  std::optional<double> eta_shape, eta_rate, rate_shape, rate_rate;
  bool no_frailty = false;

  void add(CLI::App& app) {
    app.add_option("--config", config_file, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--trees", trees, "number of trees");
    app.add_option("--burn-in", burn_in, "burn-in iterations");
    app.add_option("--samples", samples, "sampling iterations");
    app.add_option("--thin", thin, "thinning factor");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--baseline", baseline, "baseline family: exponential or weibull");
    app.add_option("--eta-shape", eta_shape, "frailty-shape prior shape");
    app.add_option("--eta-rate", eta_rate, "frailty-shape prior rate");
    app.add_option("--rate-shape", rate_shape, "baseline-rate prior shape");
    app.add_option("--rate-rate", rate_rate, "baseline-rate prior rate");
    app.add_option("--quadrature", quadrature, "prediction grid size");
    app.add_option("--threads", threads, "worker threads");
    app.add_flag("--no-frailty", no_frailty, "hold all frailties at 1");
  }

  FitConfig resolve() const {
    FitConfig cfg;
    if (!config_file.empty()) apply_config_file(cfg, config_file);
    if (trees) cfg.trees = *trees;
    if (burn_in) cfg.burn_in = *burn_in;
    if (samples) cfg.samples = *samples;
    if (thin) cfg.thin = *thin;
    if (seed) cfg.seed = *seed;
    if (baseline) cfg.family = parse_baseline_family(*baseline);
    if (eta_shape) cfg.eta_prior.shape = *eta_shape;
    if (eta_rate) cfg.eta_prior.rate = *eta_rate;
    if (rate_shape || rate_rate) {
      if (!cfg.rate_prior) cfg.rate_prior = GammaPrior{1.0, 1.0};
      if (rate_shape) cfg.rate_prior->shape = *rate_shape;
      if (rate_rate) cfg.rate_prior->rate = *rate_rate;
    }
    if (quadrature) cfg.quadrature_points = *quadrature;
    if (threads) cfg.threads = *threads;
    if (no_frailty) cfg.frailty = false;
    cfg.validate();
    return cfg;
  }
};

void log_config(const std::string& command, const FitConfig& cfg) {
  std::cerr << "# softsurv " << command << '\n';
  for (const auto& [k, v] : config_entries(cfg)) std::cerr << "# " << k << " = " << v << '\n';
  std::cerr << "# threads = " << cfg.threads << '\n';
}

std::vector<double> parse_times(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = detail::trim(item);
    if (item.empty()) continue;
    out.push_back(detail::config_double("times", item));
  }
  if (out.empty()) throw ConfigError("--times needs at least one value");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] >= 0.0)) throw ConfigError("--times values must be nonnegative");
    if (i > 0 && !(out[i] > out[i - 1])) throw ConfigError("--times must be strictly ascending");
  }
  return out;
}

/// Output stream: the named file, or stdout for "" or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw ConfigError("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& get() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

int run_simulate(const std::string& setting, std::uint64_t seed, std::size_t replicate, const std::string& out,
                 const std::string& test_out) {
  SimConfig sim;
  sim.setting = parse_setting(setting);
  sim.seed = seed;
  std::cerr << "# softsurv simulate\n# setting = " << to_char(sim.setting) << "\n# seed = " << seed
            << "\n# replicate = " << replicate << '\n';
  RngStream rng = RngStream(seed, replicate + 1).derive(0);
  const SimReplicate rep = generate(sim, rng);
  {
    Output o(out);
    write_dataset(o.get(), rep.train);
  }
  if (!test_out.empty()) {
    Output o(test_out);
    auto& s = o.get();
    s << "cluster,event_time,shape";
    for (std::size_t j = 0; j < kSimCovariates; ++j) s << ",x" << (j + 1);
    s << '\n' << std::setprecision(17);
    for (const SimSubject& t : rep.test) {
      s << t.cluster << ',' << t.event_time << ',' << t.shape;
      for (double v : t.x) s << ',' << v;
      s << '\n';
    }
  }
  return kOk;
}

int run_fit(const std::string& data_path, const std::string& out, const FitFlags& flags) {
  const FitConfig cfg = flags.resolve();
  log_config("fit", cfg);
  const Dataset data = read_dataset(data_path);
  const PosteriorDraws draws = fit(data, cfg, RngStream(cfg.seed));
  write_draw_store(out, draws);
  std::cerr << "# wrote " << draws.draws.size() << " draws to " << out << '\n';
  return kOk;
}

void write_curves(std::ostream& out, const std::vector<std::vector<double>>& rows, const PosteriorDraws& draws,
                  const std::vector<double>& times, FrailtyMode mode) {
  out << "subject,time,mean,lower,upper\n" << std::setprecision(10);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SurvivalCurve c = predict_survival(draws, rows[i], times, mode);
    for (std::size_t k = 0; k < times.size(); ++k) {
      out << i << ',' << times[k] << ',' << c.mean[k] << ',' << c.lower[k] << ',' << c.upper[k] << '\n';
    }
  }
}

int run_predict(const std::string& draws_path, const std::string& at, const std::string& times_text,
                const std::string& frailty, const std::string& out) {
  const FrailtyMode mode = parse_frailty_mode(frailty);
  const std::vector<double> times = parse_times(times_text);
  const PosteriorDraws draws = read_draw_store(draws_path);
  const auto rows = read_covariates(at);
  std::cerr << "# softsurv predict\n# draws = " << draws.draws.size() << "\n# frailty = " << frailty << '\n';
  Output o(out);
  write_curves(o.get(), rows, draws, times, mode);
  return kOk;
}

int run_rmst(const std::string& draws_path, const std::string& at, double tau, std::size_t grid,
             const std::string& frailty, const std::string& out) {
  const FrailtyMode mode = parse_frailty_mode(frailty);
  if (!(tau > 0.0)) throw ConfigError("--tau must be positive");
  if (grid < 2) throw ConfigError("--grid must be at least 2");
  const PosteriorDraws draws = read_draw_store(draws_path);
  const auto rows = read_covariates(at);
  std::vector<double> times(grid);
  for (std::size_t k = 0; k < grid; ++k) times[k] = tau * static_cast<double>(k) / static_cast<double>(grid - 1);
  std::cerr << "# softsurv rmst\n# tau = " << tau << "\n# grid = " << grid << "\n# frailty = " << frailty << '\n';
  Output o(out);
  auto& s = o.get();
  s << "subject,tau,rmst,lower,upper\n" << std::setprecision(10);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const RmstSummary r = rmst(predict_survival(draws, rows[i], times, mode), tau);
    s << i << ',' << tau << ',' << r.mean << ',' << r.lower << ',' << r.upper << '\n';
  }
  return kOk;
}

int run_lpml(const std::string& data_path, const std::string& draws_path, const std::string& cpo_out) {
  const Dataset data = read_dataset(data_path);
  const PosteriorDraws draws = read_draw_store(draws_path);
  const LpmlResult r = lpml(data, draws);
  std::cout << std::setprecision(10) << "lpml," << r.lpml << '\n';
  if (!cpo_out.empty()) {
    Output o(cpo_out);
    o.get() << "subject,log_cpo\n" << std::setprecision(10);
    for (std::size_t i = 0; i < r.log_cpo.size(); ++i) o.get() << i << ',' << r.log_cpo[i] << '\n';
  }
  return kOk;
}

int run_bench(const std::string& setting, std::size_t replicates, std::size_t replicate_threads,
              const std::string& out, const FitFlags& flags) {
  BenchConfig cfg;
  cfg.fit = flags.resolve();
  cfg.sim.setting = parse_setting(setting);
  cfg.sim.replicates = replicates;
  cfg.sim.seed = cfg.fit.seed;
  cfg.replicate_threads = replicate_threads;
  log_config("benchmark", cfg.fit);
  std::cerr << "# setting = " << to_char(cfg.sim.setting) << "\n# replicates = " << replicates << '\n';
  const BenchReport r = run_benchmark(cfg);
  Output o(out);
  auto& s = o.get();
  s << "setting,replicate,rmse\n" << std::setprecision(6) << std::fixed;
  for (std::size_t i = 0; i < r.rmse.size(); ++i) s << to_char(r.setting) << ',' << i << ',' << r.rmse[i] << '\n';
  std::cout << std::setprecision(4) << std::fixed;
  std::cout << "# setting " << to_char(r.setting) << ": mean RMSE " << r.mean << " (SE " << r.standard_error
            << ", " << r.rmse.size() << " replicates); published " << r.reference << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft-tree frailty survival model"};
  app.require_subcommand(1);

  std::string setting = "A", out, test_out, data_path, draws_path, at, times_text, frailty = "unit", cpo_out;
  std::uint64_t sim_seed = 1;
  std::size_t replicate = 0, replicates = 20, replicate_threads = 1, grid = 200;
  double tau = 0.0;
  FitFlags fit_flags, bench_flags;

  auto* sim = app.add_subcommand("simulate", "write one simulated training set");
  sim->add_option("--setting", setting, "A, B, C or D")->required();
  sim->add_option("--seed", sim_seed, "random seed");
  sim->add_option("--replicate", replicate, "replicate index");
  sim->add_option("--out", out, "training CSV (default stdout)");
  sim->add_option("--test-out", test_out, "test subjects CSV");

  auto* fit_cmd = app.add_subcommand("fit", "fit the model and write a draw store");
  fit_cmd->add_option("--data", data_path, "data CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--out", out, "draw store path")->required();
  fit_flags.add(*fit_cmd);

  auto* pred = app.add_subcommand("predict", "posterior survival curves");
  pred->add_option("--draws", draws_path, "draw store")->required()->check(CLI::ExistingFile);
  pred->add_option("--at", at, "covariate CSV")->required()->check(CLI::ExistingFile);
  pred->add_option("--times", times_text, "comma-separated ascending times")->required();
  pred->add_option("--frailty", frailty, "unit or marginal");
  pred->add_option("--out", out, "output CSV (default stdout)");

  auto* rm = app.add_subcommand("rmst", "restricted mean survival time");
  rm->add_option("--draws", draws_path, "draw store")->required()->check(CLI::ExistingFile);
  rm->add_option("--at", at, "covariate CSV")->required()->check(CLI::ExistingFile);
  rm->add_option("--tau", tau, "restriction time")->required();
  rm->add_option("--grid", grid, "curve grid points on [0, tau]");
  rm->add_option("--frailty", frailty, "unit or marginal");
  rm->add_option("--out", out, "output CSV (default stdout)");

  auto* lp = app.add_subcommand("lpml", "log pseudo-marginal likelihood");
  lp->add_option("--data", data_path, "data CSV")->required()->check(CLI::ExistingFile);
  lp->add_option("--draws", draws_path, "draw store")->required()->check(CLI::ExistingFile);
  lp->add_option("--cpo-out", cpo_out, "per-subject log CPO CSV");

  auto* bench = app.add_subcommand("benchmark", "simulation RMSE benchmark");
  bench->add_option("--setting", setting, "A, B, C or D")->required();
  bench->add_option("--replicates", replicates, "number of replicates");
  bench->add_option("--replicate-threads", replicate_threads, "replicates run in parallel");
  bench->add_option("--out", out, "per-replicate CSV (default stdout)");
  bench_flags.add(*bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kUsage);
  }

  try {
    if (*sim) return run_simulate(setting, sim_seed, replicate, out, test_out);
    if (*fit_cmd) return run_fit(data_path, out, fit_flags);
    if (*pred) return run_predict(draws_path, at, times_text, frailty, out);
    if (*rm) return run_rmst(draws_path, at, tau, grid, frailty, out);
    if (*lp) return run_lpml(data_path, draws_path, cpo_out);
    if (*bench) return run_bench(setting, replicates, replicate_threads, out, bench_flags);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), kConfig);
  } catch (const ParseError& e) {
    return fail("parse", e.what(), kParse);
  } catch (const NumericalFailure& e) {
    return fail("numerical", e.what(), kNumerical);
  } catch (const std::invalid_argument& e) {
    return fail("input", e.what(), kInput);
  } catch (const std::domain_error& e) {
    return fail("input", e.what(), kInput);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kInternal);
  }
  return kInternal;
}

#pragma once

// MCMC for the hazard model lambda(t | W, x) = lambda0(t) W Phi(l(t, x)).
//
// Each sweep:
//   1. impute event times of left/interval-censored subjects,
//   2. draw rejected points and probit latents for every subject,
//   3. update the baseline hazard,
//   4. backfit the soft-tree ensemble on the pooled latents,
//   5. update the frailty shape eta,
//   6. update the cluster frailties.
//
// Cost per sweep is dominated by step 4: O(N_aug * T) leaf-weight
// evaluations, where N_aug counts events plus rejected points.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "softsurv/augment.hpp"
#include "softsurv/backfit.hpp"
#include "softsurv/data.hpp"
#include "softsurv/errors.hpp"
#include "softsurv/frailty.hpp"
#include "softsurv/hazard.hpp"
#include "softsurv/input_scaler.hpp"
#include "softsurv/parallel.hpp"
#include "softsurv/rng.hpp"
#include "softsurv/soft_tree.hpp"

namespace softsurv {

struct FitConfig {
  std::size_t trees = 50;
  std::size_t burn_in = 2500;
  std::size_t samples = 2500;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  BaselineFamily family = BaselineFamily::Exponential;
  std::optional<GammaPrior> rate_prior;  // default: Gamma(1, mean endpoint midpoint)
  GammaPrior weibull_shape_prior{2.0, 2.0};
  GammaPrior eta_prior{4.0, 0.01};
  bool frailty = true;
  std::size_t quadrature_points = 200;
  std::size_t threads = 1;
  std::optional<double> time_scale;  // default: 1.5 x largest finite endpoint
  double leaf_scale_k = 2.0;
  double branch_gamma = 0.95;
  double branch_beta = 2.0;
  double bandwidth_rate = 10.0;
  bool ignore_likelihood = false;  // sample the prior (diagnostics)

  void validate() const {
    if (trees == 0) throw ConfigError("trees must be positive");
    if (samples == 0) throw ConfigError("samples must be positive");
    if (thin == 0) throw ConfigError("thin must be positive");
    if (quadrature_points < 2) throw ConfigError("quadrature grid needs at least two points");
    if (threads == 0) throw ConfigError("threads must be positive");
    if (rate_prior) rate_prior->validate("baseline rate");
    weibull_shape_prior.validate("weibull shape");
    eta_prior.validate("eta");
    if (time_scale && !(*time_scale > 0.0)) throw ConfigError("time scale must be positive");
    forest_hyper().validate();
    if (branch_gamma >= 1.0) throw ConfigError("branch gamma must be below 1");
  }

  ForestHyper forest_hyper() const {
    ForestHyper h = ForestHyper::defaults(trees, leaf_scale_k);
    h.branch_gamma = branch_gamma;
    h.branch_beta = branch_beta;
    h.bandwidth_rate = bandwidth_rate;
    return h;
  }

  std::size_t draw_count() const { return samples / thin; }
};

struct ModelState {
  BaselineHazard baseline;
  FrailtyState frailty;
  Forest forest;
  std::vector<AugmentedSubject> augmented;
  InputScaler scaler;
};

/// Retained snapshot of the parameters needed for prediction.
struct Draw {
  BaselineHazard baseline;
  double eta = std::numeric_limits<double>::quiet_NaN();  // NaN without frailties
  std::vector<double> frailty;                             // empty without frailties
  std::vector<SoftTree> trees;
};

struct PosteriorDraws {
  FitConfig config;
  InputScaler scaler;
  ForestHyper hyper;
  BaselinePrior baseline_prior;
  std::vector<std::int64_t> cluster_labels;
  std::size_t covariates = 0;
  std::uint64_t stream = 0;
  std::size_t iterations = 0;
  std::vector<Draw> draws;

  bool has_frailty() const { return config.frailty; }

  Forest forest(const Draw& d) const {
    Forest f;
    f.hyper = hyper;
    f.dim = covariates + 1;
    f.trees = d.trees;
    return f;
  }

  /// Frailty of `cluster_label` in draw `d`; 1 for unseen clusters or
  /// frailty-free fits.
  double frailty_of(const Draw& d, std::int64_t cluster_label) const {
    if (d.frailty.empty()) return 1.0;
    for (std::size_t i = 0; i < cluster_labels.size(); ++i) {
      if (cluster_labels[i] == cluster_label) return d.frailty[i];
    }
    return 1.0;
  }
};

struct IterationStats {
  std::size_t augmented_size = 0;  // events + rejected points fed to the trees
  std::size_t rejected_points = 0;
  std::uint64_t weight_evaluations = 0;
  std::uint64_t link_evaluations = 0;
};

class Sampler {
 public:
  Sampler(Dataset data, FitConfig config, RngStream rng)
      : data_(std::move(data)), config_(std::move(config)), rng_(rng) {
    config_.validate();
    validate_dataset(data_);
    clusters_ = ClusterIndex::build(data_);
    subject_cluster_.resize(data_.size());
    for (std::size_t s = 0; s < data_.size(); ++s) subject_cluster_[s] = clusters_.find(data_[s].cluster);

    const std::size_t p = covariate_count(data_);
    std::vector<std::vector<double>> covariates;
    covariates.reserve(data_.size());
    for (const auto& r : data_) covariates.push_back(r.x);
    const double horizon = max_finite_time(data_);
    state_.scaler = InputScaler::fit(covariates, horizon);
    if (config_.time_scale) state_.scaler.time_scale = *config_.time_scale;

    prior_.rate = config_.rate_prior ? *config_.rate_prior : GammaPrior{1.0, mean_midpoint(data_)};
    prior_.weibull_shape = config_.weibull_shape_prior;
    prior_.rate.validate("baseline rate");

    state_.baseline = config_.family == BaselineFamily::Exponential
                          ? BaselineHazard::exponential(prior_.rate.mean())
                          : BaselineHazard::weibull(1.0, prior_.rate.mean());
    state_.frailty.eta = config_.eta_prior.mean();
    state_.frailty.frailty.assign(clusters_.size(), 1.0);
    const ForestHyper hyper = config_.forest_hyper();
    state_.forest = Forest::stumps(hyper, p + 1, 1.0 / hyper.bandwidth_rate);
    state_.augmented.resize(data_.size());
  }

  const ModelState& state() const { return state_; }
  ModelState& mutable_state() { return state_; }
  const Dataset& data() const { return data_; }
  const FitConfig& config() const { return config_; }
  const BaselinePrior& baseline_prior() const { return prior_; }
  const ClusterIndex& clusters() const { return clusters_; }
  std::size_t iteration() const { return iteration_; }
  const IterationStats& last_stats() const { return stats_; }

  /// Swap in new interval data for the same subjects (same clusters and
  /// covariate dimension). Used by joint-distribution tests.
  void replace_data(Dataset data) {
    if (data.size() != data_.size()) throw ConfigError("replace_data: subject count changed");
    for (std::size_t s = 0; s < data.size(); ++s) {
      if (data[s].cluster != data_[s].cluster) throw ConfigError("replace_data: cluster layout changed");
      data[s].validate();
    }
    data_ = std::move(data);
  }

  void step() {
    const std::uint64_t iter = iteration_++;
    stats_ = IterationStats{};
    const bool use_frailty = config_.frailty;
    const auto frailty_of = [&](std::size_t s) {
      return use_frailty ? state_.frailty.frailty[subject_cluster_[s]] : 1.0;
    };

    // 1-2. Per-subject augmentation on a fixed parameter snapshot.
    std::vector<std::uint64_t> link_counts(data_.size(), 0);
    if (!config_.ignore_likelihood) {
      parallel_for(data_.size(), config_.threads, [&](std::size_t s) {
        RngStream rng = rng_.derive(iter, s + 1);
        const SubjectRecord& rec = data_[s];
        AugmentedSubject aug;
        const double w = frailty_of(s);
        SubjectLink link(state_.forest, state_.scaler, rec.x);
        try {
          if (rec.has_event_interval()) {
            aug.event_time = impute_interval_time(rec.left, rec.right, w, link, state_.baseline, rng);
          } else if (rec.kind() == CensorKind::Uncensored) {
            aug.event_time = rec.left;
          }
          const double horizon = aug.event_time ? *aug.event_time : rec.left;
          if (horizon > 0.0) aug.rejected = sample_rejected_points(horizon, w, link, state_.baseline, rng);
          aug.latents = sample_probit_latents(aug, link, rng);
        } catch (const NumericalFailure& e) {
          throw NumericalFailure("subject " + std::to_string(s) + ": " + e.what());
        }
        link_counts[s] = link.evaluations();
        state_.augmented[s] = std::move(aug);
      });
    } else {
      for (auto& a : state_.augmented) a = AugmentedSubject{};
    }

    // Pool the latents and the baseline statistics.
    std::size_t rows = 0;
    for (const auto& a : state_.augmented) rows += a.latents.size();
    InputMatrix inputs(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(state_.scaler.dim()));
    Eigen::VectorXd z(static_cast<Eigen::Index>(rows));
    BaselineSuffStats base;
    Eigen::Index row = 0;
    for (std::size_t s = 0; s < data_.size(); ++s) {
      const AugmentedSubject& a = state_.augmented[s];
      stats_.link_evaluations += link_counts[s];
      if (config_.ignore_likelihood) continue;
      const SubjectRecord& rec = data_[s];
      std::vector<double> scaled(state_.scaler.dim());
      state_.scaler.scale_covariates(rec.x, scaled);
      auto put = [&](double t, double latent) {
        scaled[0] = state_.scaler.scale_time(t);
        for (std::size_t j = 0; j < scaled.size(); ++j) inputs(row, static_cast<Eigen::Index>(j)) = scaled[j];
        z(row) = latent;
        ++row;
      };
      for (std::size_t k = 0; k < a.rejected.size(); ++k) put(a.rejected[k], a.latents[k]);
      if (a.event_time) put(*a.event_time, a.latents.back());
      base.add_points(a.rejected);
      if (a.event_time) base.add_point(*a.event_time);
      base.add_exposure(frailty_of(s), a.event_time ? *a.event_time : rec.left);
      stats_.rejected_points += a.rejected.size();
    }
    stats_.augmented_size = rows;

    RngStream rng = rng_.derive(iter, 0);
    // 3. Baseline.
    state_.baseline = update_baseline(state_.baseline, base, prior_, rng);
    // 4. Trees.
    const SweepStats sweep = backfit_sweep(state_.forest, inputs, z, rng);
    stats_.weight_evaluations = sweep.weight_evaluations;
    // 5-6. Frailty shape, then frailties.
    if (use_frailty) {
      state_.frailty.eta = update_eta(state_.frailty.eta, state_.frailty.frailty, config_.eta_prior, rng);
      std::vector<ClusterTotals> totals(clusters_.size());
      if (!config_.ignore_likelihood) {
        for (std::size_t s = 0; s < data_.size(); ++s) {
          const AugmentedSubject& a = state_.augmented[s];
          ClusterTotals& c = totals[subject_cluster_[s]];
          c.events += a.event_time ? 1.0 : 0.0;
          c.rejected += static_cast<double>(a.rejected.size());
          c.cumulative_hazard += cumulative_hazard(state_.baseline, a.event_time ? *a.event_time : data_[s].left);
        }
      }
      state_.frailty.frailty = update_frailties(totals, state_.frailty.eta, rng);
    }
  }

  Draw snapshot() const {
    Draw d;
    d.baseline = state_.baseline;
    if (config_.frailty) {
      d.eta = state_.frailty.eta;
      d.frailty = state_.frailty.frailty;
    }
    d.trees = state_.forest.trees;
    return d;
  }

  PosteriorDraws make_store() const {
    PosteriorDraws out;
    out.config = config_;
    out.scaler = state_.scaler;
    out.hyper = state_.forest.hyper;
    out.baseline_prior = prior_;
    out.cluster_labels = clusters_.labels;
    out.covariates = state_.scaler.num_covariates();
    out.stream = rng_.stream();
    return out;
  }

 private:
  Dataset data_;
  FitConfig config_;
  RngStream rng_;
  ClusterIndex clusters_;
  std::vector<std::size_t> subject_cluster_;
  BaselinePrior prior_;
  ModelState state_;
  std::size_t iteration_ = 0;
  IterationStats stats_;
};

/// Run burn-in plus sampling and keep every `thin`-th post-burn-in state.
inline PosteriorDraws fit(const Dataset& data, const FitConfig& config, RngStream rng) {
  Sampler sampler(data, config, rng);
  PosteriorDraws out = sampler.make_store();
  out.draws.reserve(config.draw_count());
  const std::size_t total = config.burn_in + config.samples;
  for (std::size_t it = 0; it < total; ++it) {
    sampler.step();
    if (it >= config.burn_in && (it - config.burn_in + 1) % config.thin == 0) {
      out.draws.push_back(sampler.snapshot());
    }
  }
  out.iterations = total;
  return out;
}

/// As `fit` with every frailty held at 1 and eta not sampled.
inline PosteriorDraws fit_no_frailty(const Dataset& data, FitConfig config, RngStream rng) {
  config.frailty = false;
  return fit(data, config, rng);
}

}  // namespace softsurv

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "floodcast/series.hpp"

namespace floodcast {

/// One threshold exceedance: covariate time t in [0, 1] and magnitude (m3/s).
struct ExceedanceEvent {
    double t = 0.0;
    double magnitude = 0.0;
};

/**
 * Peaks-over-threshold data: declustered exceedances of a high threshold plus
 * per-year exceedance counts. The record is partitioned into whole 365-day
 * blocks; the time covariate is normalized to [0, 1] across the used span.
 */
struct ExceedanceSet {
    double threshold = 0.0;            // m3/s
    double span_years = 0.0;           // whole 365-day blocks used
    std::vector<ExceedanceEvent> events;
    std::vector<int> annual_counts;    // per block
    std::vector<double> annual_t;      // block-midpoint covariate, parallel to counts

    void validate() const;
};

/**
 * Regression parameters of the nonstationary Poisson-GPD model:
 * lambda(t) = lambda0 + lambda1 t,  sigma(t) = exp(sigma0 + sigma1 t),
 * xi(t) = xi0 + xi1 t.
 */
struct GpdParams {
    double lambda0 = 0.0, lambda1 = 0.0;
    double sigma0 = 0.0, sigma1 = 0.0;
    double xi0 = 0.0, xi1 = 0.0;

    double lambda(double t) const { return lambda0 + lambda1 * t; }
    double sigma(double t) const;
    double xi(double t) const { return xi0 + xi1 * t; }

    double& component(int i);
    double component(int i) const;
    static const std::array<std::string, 6>& names();
};

/// Independent normal priors per component; sd == 0 pins a component at its mean.
struct PriorSpec {
    std::array<double, 6> mean{};
    std::array<double, 6> sd{};

    /// Weakly informative defaults derived from the data (rate and excess spread).
    static PriorSpec defaults_for(const ExceedanceSet& data);
};

struct McmcConfig {
    int iterations = 100000;
    int burn_in = 25000;
    std::uint64_t seed = 0;
    std::array<double, 6> proposal_scale{0.5, 0.5, 0.1, 0.1, 0.05, 0.05};
    int adapt_interval = 100;      // burn-in adaptation window
    double target_accept_lo = 0.2;
    double target_accept_hi = 0.4;
    bool allow_few_events = false; // required to fit fewer than 20 events
};

struct PosteriorSample {
    std::vector<GpdParams> draws;  // retained (post burn-in)
    int iterations = 0;
    int burn_in = 0;
    std::uint64_t seed = 0;
    double acceptance_rate = 0.0;  // post burn-in, over proposed components
};

/**
 * Select declustered peaks over the empirical percentile threshold.
 *
 * The threshold is the linear-interpolation order statistic of all daily
 * values. Runs of exceedances closer than min_separation_days collapse to
 * their cluster maximum.
 */
ExceedanceSet select_exceedances(const DailySeries& series, double percentile = 95.0,
                                 int min_separation_days = 3);

/// Same declustering with a caller-supplied threshold instead of a percentile.
ExceedanceSet select_exceedances_at(const DailySeries& series, double threshold,
                                    int min_separation_days = 3);

/**
 * Log posterior density: GPD log density of the excesses with sigma(t), xi(t),
 * Poisson log likelihood of the annual counts with rate lambda(t) (dt = 1 yr),
 * plus the log prior. Returns -infinity outside the support.
 */
double log_posterior(const GpdParams& params, const ExceedanceSet& data,
                     const PriorSpec& priors);

/// Component-wise random-walk Metropolis chain; deterministic for a fixed seed.
PosteriorSample fit_mcmc(const ExceedanceSet& data, const PriorSpec& priors,
                         const McmcConfig& config);

/**
 * T-year return level at covariate t_eval for the Poisson-GPD point process:
 *   z_T = mu + sigma(t)/xi(t) [(lambda(t) T)^xi(t) - 1],
 * with the xi->0 limit mu + sigma ln(lambda T). Requires lambda(t) T > 1.
 */
double return_level(const GpdParams& params, double threshold, double T_years,
                    double t_eval);

struct MemberReturnLevel {
    std::string member;
    bool ok = false;
    std::string error;
    double mean = 0.0, q05 = 0.0, q95 = 0.0, min = 0.0, max = 0.0;  // over posterior draws
};

struct EnsembleReturnLevels {
    std::vector<MemberReturnLevel> members;
    double mean = 0.0, min = 0.0, max = 0.0;  // over member means
    bool complete = true;                     // false when any member failed
};

/**
 * Fit one Poisson-GPD model per ensemble member series and evaluate the
 * T-year return level at t_eval; per-member posterior statistics and the
 * across-member spread. Member fit failures are reported, not fatal.
 */
EnsembleReturnLevels ensemble_return_levels(
    const std::vector<std::pair<std::string, DailySeries>>& members, double percentile,
    int min_separation_days, const McmcConfig& config, double T_years, double t_eval);

/// Posterior draws as CSV (one row per retained draw).
void write_posterior_csv(const PosteriorSample& sample, const std::string& path);
void write_return_level_summary_csv(const EnsembleReturnLevels& ens, const std::string& path);

}  // namespace floodcast

#include "floodcast/extremes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "floodcast/rng.hpp"
#include "floodcast/stats.hpp"

namespace floodcast {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kXiZeroTol = 1e-8;
constexpr int kDaysPerBlock = 365;
}  // namespace

void ExceedanceSet::validate() const {
    for (const auto& e : events) {
        if (e.magnitude <= threshold)
            throw std::invalid_argument("exceedance not above threshold");
        if (e.t < 0.0 || e.t > 1.0)
            throw std::invalid_argument("event time outside record span");
    }
    if (annual_counts.size() != annual_t.size())
        throw std::invalid_argument("annual counts/times mismatch");
    int total = 0;
    for (int c : annual_counts) total += c;
    if (total != static_cast<int>(events.size()))
        throw std::invalid_argument("annual counts inconsistent with event list");
}

double GpdParams::sigma(double t) const { return std::exp(sigma0 + sigma1 * t); }

double& GpdParams::component(int i) {
    switch (i) {
        case 0: return lambda0;
        case 1: return lambda1;
        case 2: return sigma0;
        case 3: return sigma1;
        case 4: return xi0;
        default: return xi1;
    }
}

double GpdParams::component(int i) const {
    return const_cast<GpdParams*>(this)->component(i);
}

const std::array<std::string, 6>& GpdParams::names() {
    static const std::array<std::string, 6> n = {"lambda0", "lambda1", "sigma0",
                                                 "sigma1",  "xi0",     "xi1"};
    return n;
}

PriorSpec PriorSpec::defaults_for(const ExceedanceSet& data) {
    PriorSpec p;
    double mean_count = data.span_years > 0.0
                            ? static_cast<double>(data.events.size()) / data.span_years
                            : 1.0;
    std::vector<double> excess;
    excess.reserve(data.events.size());
    for (const auto& e : data.events) excess.push_back(e.magnitude - data.threshold);
    double log_sd = 0.0;
    if (excess.size() >= 2) {
        double sd = sample_sd(excess);
        if (sd > 0.0) log_sd = std::log(sd);
    }
    p.mean = {mean_count, 0.0, log_sd, 0.0, 0.0, 0.0};
    p.sd = {std::max(10.0, 3.0 * mean_count), 1.0, 1.0, 1.0, 0.5, 1.0};
    return p;
}

ExceedanceSet select_exceedances(const DailySeries& series, double percentile,
                                 int min_separation_days) {
    double vmin = series.values.empty() ? 0.0 : series.values[0];
    double vmax = vmin;
    for (double v : series.values) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    if (!series.values.empty() && vmin == vmax)
        throw std::invalid_argument("select_exceedances: constant series (degenerate threshold)");
    double threshold = quantile_linear(series.values, percentile / 100.0);
    return select_exceedances_at(series, threshold, min_separation_days);
}

ExceedanceSet select_exceedances_at(const DailySeries& series, double threshold,
                                    int min_separation_days) {
    const size_t n_total = series.values.size();
    if (n_total < 365)
        throw std::invalid_argument("select_exceedances: record shorter than one year");
    for (double v : series.values)
        if (!std::isfinite(v))
            throw std::invalid_argument("select_exceedances: non-finite value");

    // whole 365-day blocks; the trailing partial block is dropped
    const size_t n_blocks = n_total / kDaysPerBlock;
    const size_t n_used = n_blocks * kDaysPerBlock;

    ExceedanceSet set;
    set.threshold = threshold;
    set.span_years = static_cast<double>(n_blocks);

    // exceedance indices within the used span
    std::vector<size_t> idx;
    for (size_t i = 0; i < n_used; ++i)
        if (series.values[i] > set.threshold) idx.push_back(i);

    // runs declustering: gaps below min_separation_days merge into one cluster
    auto norm_t = [&](size_t i) { return (static_cast<double>(i) + 0.5) / n_used; };
    size_t k = 0;
    while (k < idx.size()) {
        size_t best = idx[k];
        size_t j = k;
        while (j + 1 < idx.size() &&
               idx[j + 1] - idx[j] < static_cast<size_t>(std::max(min_separation_days, 1))) {
            ++j;
            if (series.values[idx[j]] > series.values[best]) best = idx[j];
        }
        set.events.push_back({norm_t(best), series.values[best]});
        k = j + 1;
    }

    set.annual_counts.assign(n_blocks, 0);
    set.annual_t.resize(n_blocks);
    for (size_t b = 0; b < n_blocks; ++b)
        set.annual_t[b] = (static_cast<double>(b) + 0.5) / n_blocks;
    for (const auto& e : set.events) {
        size_t b = std::min(static_cast<size_t>(e.t * n_blocks), n_blocks - 1);
        ++set.annual_counts[b];
    }
    set.validate();
    return set;
}

double log_posterior(const GpdParams& p, const ExceedanceSet& data, const PriorSpec& priors) {
    if (data.events.empty()) throw std::invalid_argument("log_posterior: empty data");

    // occurrence-rate support over the whole fit span (linear => endpoints)
    if (p.lambda(0.0) <= 0.0 || p.lambda(1.0) <= 0.0) return kNegInf;

    double lp = 0.0;
    for (const auto& e : data.events) {
        double sigma = p.sigma(e.t);
        double xi = p.xi(e.t);
        double y = e.magnitude - data.threshold;
        if (std::abs(xi) < kXiZeroTol) {
            lp += -std::log(sigma) - y / sigma;
        } else {
            double arg = 1.0 + xi * y / sigma;
            if (arg <= 0.0) return kNegInf;
            lp += -std::log(sigma) - (1.0 / xi + 1.0) * std::log(arg);
        }
    }
    // annual Poisson counts, dt = 1 year
    for (size_t b = 0; b < data.annual_counts.size(); ++b) {
        double lam = p.lambda(data.annual_t[b]);
        if (lam <= 0.0) return kNegInf;
        int n = data.annual_counts[b];
        lp += n * std::log(lam) - lam - std::lgamma(n + 1.0);
    }
    for (int i = 0; i < 6; ++i) {
        if (priors.sd[i] == 0.0) continue;  // pinned component
        double z = (p.component(i) - priors.mean[i]) / priors.sd[i];
        lp += -0.5 * z * z - std::log(priors.sd[i]);
    }
    return lp;
}

PosteriorSample fit_mcmc(const ExceedanceSet& data, const PriorSpec& priors,
                         const McmcConfig& config) {
    data.validate();
    if (static_cast<int>(data.events.size()) < 20 && !config.allow_few_events)
        throw std::invalid_argument(
            "fit_mcmc: fewer than 20 events; set allow_few_events to proceed");
    if (config.burn_in < 0 || config.burn_in >= config.iterations)
        throw std::invalid_argument("fit_mcmc: burn_in must be in [0, iterations)");

    GpdParams cur;
    for (int i = 0; i < 6; ++i) cur.component(i) = priors.mean[i];
    double lp_cur = log_posterior(cur, data, priors);
    if (!std::isfinite(lp_cur))
        throw std::runtime_error("fit_mcmc: prior means outside model support");

    Rng rng(config.seed);
    auto scales = config.proposal_scale;
    std::array<int, 6> win_prop{}, win_acc{};
    long long post_prop = 0, post_acc = 0;

    PosteriorSample out;
    out.iterations = config.iterations;
    out.burn_in = config.burn_in;
    out.seed = config.seed;
    out.draws.reserve(config.iterations - config.burn_in);

    for (int it = 0; it < config.iterations; ++it) {
        const bool in_burn = it < config.burn_in;
        for (int i = 0; i < 6; ++i) {
            if (priors.sd[i] == 0.0) continue;  // pinned: never proposed
            GpdParams cand = cur;
            cand.component(i) += scales[i] * rng.normal();
            double lp_cand = log_posterior(cand, data, priors);
            bool accept = std::log(rng.uniform_pos()) < lp_cand - lp_cur;
            if (in_burn) {
                ++win_prop[i];
                if (accept) ++win_acc[i];
            } else {
                ++post_prop;
                if (accept) ++post_acc;
            }
            if (accept) {
                cur = cand;
                lp_cur = lp_cand;
            }
        }
        if (in_burn && (it + 1) % config.adapt_interval == 0) {
            for (int i = 0; i < 6; ++i) {
                if (win_prop[i] == 0) continue;
                double rate = static_cast<double>(win_acc[i]) / win_prop[i];
                if (rate > config.target_accept_hi) scales[i] *= 1.3;
                else if (rate < config.target_accept_lo) scales[i] /= 1.3;
                win_prop[i] = win_acc[i] = 0;
            }
        }
        if (!in_burn) out.draws.push_back(cur);

        // chain stuck after the adaptation phase: abort with diagnostics
        if (!in_burn && post_prop >= 6LL * 5000 && post_acc == 0) {
            char msg[160];
            std::snprintf(msg, sizeof(msg),
                          "fit_mcmc: zero acceptance over %lld post-burn-in proposals "
                          "(seed %llu); proposal scales likely too large",
                          post_prop, static_cast<unsigned long long>(config.seed));
            throw std::runtime_error(msg);
        }
    }

    out.acceptance_rate = post_prop > 0 ? static_cast<double>(post_acc) / post_prop : 0.0;
    return out;
}

double return_level(const GpdParams& p, double threshold, double T_years, double t_eval) {
    double lam = p.lambda(t_eval);
    if (lam <= 0.0) throw std::invalid_argument("return_level: lambda(t) <= 0");
    double lt = lam * T_years;
    if (lt <= 1.0)
        throw std::invalid_argument(
            "return_level: lambda*T <= 1, level not above threshold " +
            std::to_string(threshold));
    double sigma = p.sigma(t_eval);
    double xi = p.xi(t_eval);
    if (std::abs(xi) < kXiZeroTol) return threshold + sigma * std::log(lt);
    return threshold + sigma / xi * std::expm1(xi * std::log(lt));
}

EnsembleReturnLevels ensemble_return_levels(
    const std::vector<std::pair<std::string, DailySeries>>& members, double percentile,
    int min_separation_days, const McmcConfig& config, double T_years, double t_eval) {
    if (members.empty())
        throw std::invalid_argument("ensemble_return_levels: no members");

    EnsembleReturnLevels ens;
    bool first = true;
    for (size_t m = 0; m < members.size(); ++m) {
        MemberReturnLevel r;
        r.member = members[m].first;
        try {
            ExceedanceSet set =
                select_exceedances(members[m].second, percentile, min_separation_days);
            McmcConfig cfg = config;
            cfg.seed = config.seed + m;  // distinct, reproducible member chains
            PosteriorSample post = fit_mcmc(set, PriorSpec::defaults_for(set), cfg);
            std::vector<double> levels;
            levels.reserve(post.draws.size());
            for (const auto& d : post.draws) {
                try {
                    levels.push_back(return_level(d, set.threshold, T_years, t_eval));
                } catch (const std::invalid_argument&) {
                    // draw below threshold support; skip
                }
            }
            if (levels.empty()) throw std::runtime_error("no valid return-level draws");
            r.mean = mean(levels);
            r.min = *std::min_element(levels.begin(), levels.end());
            r.max = *std::max_element(levels.begin(), levels.end());
            r.q05 = quantile_linear(levels, 0.05);
            r.q95 = quantile_linear(levels, 0.95);
            r.ok = true;
        } catch (const std::exception& e) {
            r.error = e.what();
            ens.complete = false;
        }
        ens.members.push_back(std::move(r));
    }

    for (const auto& r : ens.members) {
        if (!r.ok) continue;
        if (first) {
            ens.mean = ens.min = ens.max = r.mean;
            first = false;
        } else {
            ens.min = std::min(ens.min, r.mean);
            ens.max = std::max(ens.max, r.mean);
        }
    }
    if (first) throw std::runtime_error("ensemble_return_levels: every member failed");
    double s = 0.0;
    int k = 0;
    for (const auto& r : ens.members)
        if (r.ok) {
            s += r.mean;
            ++k;
        }
    ens.mean = s / k;
    return ens;
}

void write_posterior_csv(const PosteriorSample& sample, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write posterior: " + path);
    std::fprintf(f, "lambda0,lambda1,sigma0,sigma1,xi0,xi1\n");
    for (const auto& d : sample.draws) {
        std::fprintf(f, "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", d.lambda0, d.lambda1,
                     d.sigma0, d.sigma1, d.xi0, d.xi1);
    }
    std::fclose(f);
}

void write_return_level_summary_csv(const EnsembleReturnLevels& ens, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write summary: " + path);
    std::fprintf(f, "member,mean,q05,q95,min,max\n");
    for (const auto& r : ens.members) {
        if (r.ok)
            std::fprintf(f, "%s,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.member.c_str(), r.mean,
                         r.q05, r.q95, r.min, r.max);
        else
            std::fprintf(f, "%s,failed:%s,,,,\n", r.member.c_str(), r.error.c_str());
    }
    std::fclose(f);
}

}  // namespace floodcast

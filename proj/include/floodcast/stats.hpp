#pragma once

#include <span>
#include <vector>

namespace floodcast {

double mean(std::span<const double> xs);

/// Sample standard deviation (n-1 denominator).
double sample_sd(std::span<const double> xs);

/// Pearson correlation coefficient. Throws if either series has zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// Spearman rank correlation: Pearson on mid-ranks (ties averaged).
double spearman_rank(std::span<const double> xs, std::span<const double> ys);

/// Nash-Sutcliffe Efficiency (Nash & Sutcliffe 1970). Throws on constant obs.
double nse(std::span<const double> obs, std::span<const double> sim);

/**
 * Modified correlation coefficient (McCuen & Snyder 1975): Pearson r weighted
 * by the ratio of the smaller to the larger standard deviation.
 */
double modified_correlation(std::span<const double> obs, std::span<const double> sim);

/// Empirical quantile with linear interpolation between order statistics
/// (the h = (n-1)p + 1 convention). p in [0, 1].
double quantile_linear(std::vector<double> values, double p);

/// Mid-ranks of xs (average rank for ties), 1-based.
std::vector<double> midranks(std::span<const double> xs);

}  // namespace floodcast

#include "floodcast/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace floodcast {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty input");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs) {
    if (xs.size() < 2) throw std::invalid_argument("sample_sd: need at least 2 values");
    double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

namespace {

void check_pair(std::span<const double> xs, std::span<const double> ys, size_t min_len) {
    if (xs.size() != ys.size()) throw std::invalid_argument("series length mismatch");
    if (xs.size() < min_len) throw std::invalid_argument("series too short");
}

}  // namespace

double pearson(std::span<const double> xs, std::span<const double> ys) {
    check_pair(xs, ys, 2);
    double mx = mean(xs), my = mean(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("pearson: zero variance");
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> midranks(std::span<const double> xs) {
    size_t n = xs.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        double r = 0.5 * static_cast<double>(i + j) + 1.0;  // average of 1-based ranks i+1..j+1
        for (size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double spearman_rank(std::span<const double> xs, std::span<const double> ys) {
    check_pair(xs, ys, 3);
    auto rx = midranks(xs);
    auto ry = midranks(ys);
    return pearson(rx, ry);
}

double nse(std::span<const double> obs, std::span<const double> sim) {
    check_pair(obs, sim, 2);
    double m = mean(obs);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < obs.size(); ++i) {
        num += (obs[i] - sim[i]) * (obs[i] - sim[i]);
        den += (obs[i] - m) * (obs[i] - m);
    }
    if (den == 0.0) throw std::invalid_argument("nse: constant observations");
    return 1.0 - num / den;
}

double modified_correlation(std::span<const double> obs, std::span<const double> sim) {
    check_pair(obs, sim, 2);
    double so = sample_sd(obs), ss = sample_sd(sim);
    if (so == 0.0 || ss == 0.0)
        throw std::invalid_argument("modified_correlation: zero variance");
    double r = pearson(obs, sim);
    return r * std::min(so, ss) / std::max(so, ss);
}

double quantile_linear(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile: empty input");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile: p outside [0,1]");
    std::sort(values.begin(), values.end());
    double h = (static_cast<double>(values.size()) - 1.0) * p;
    size_t lo = static_cast<size_t>(std::floor(h));
    size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace floodcast

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace floodcast {

/**
 * Deterministic random source for all stochastic components.
 *
 * Wraps mt19937_64 with hand-rolled transforms (Box-Muller normal, Knuth
 * Poisson, inverse-CDF GPD) so that a fixed seed yields bit-identical draw
 * sequences independent of the standard library's distribution internals.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1] (safe for logs).
    double uniform_pos() { return 1.0 - uniform(); }

    /// Standard normal via Box-Muller (cosine branch only; two uniforms per draw).
    double normal() {
        double u1 = uniform_pos();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Poisson count; Knuth's product method, normal approximation for large mean.
    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean > 60.0) {
            double v = mean + std::sqrt(mean) * normal();
            return v < 0.0 ? 0 : static_cast<int>(std::lround(v));
        }
        const double limit = std::exp(-mean);
        double prod = uniform_pos();
        int k = 0;
        while (prod > limit) {
            prod *= uniform_pos();
            ++k;
        }
        return k;
    }

    /// Generalized Pareto excess (above zero) with scale sigma, shape xi; inverse CDF.
    double gpd_excess(double sigma, double xi) {
        double u = uniform_pos();
        if (std::abs(xi) < 1e-12) return -sigma * std::log(u);
        return sigma / xi * (std::pow(u, -xi) - 1.0);
    }

    std::uint64_t next_raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace floodcast

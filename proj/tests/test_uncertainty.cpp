#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "floodcast/rng.hpp"
#include "floodcast/uncertainty.hpp"
#include "testutil.hpp"

using namespace floodcast;

namespace {

/// Additive 2x2x2 tensor P = a + b + e with per-stage increments.
ProjectionTensor additive_tensor(double da = 10.0, double db = 4.0, double de = 1.0,
                                 double base = 0.0) {
    ProjectionTensor t;
    t.stage_names = {"climate", "hydrology", "hydraulic"};
    t.labels = {{"a0", "a1"}, {"b0", "b1"}, {"e0", "e1"}};
    for (double a : {0.0, da})
        for (double b : {0.0, db})
            for (double e : {0.0, de}) t.values.push_back(base + a + b + e);
    return t;
}

ProjectionTensor random_tensor(Rng& rng, size_t n1, size_t n2, size_t n3) {
    ProjectionTensor t;
    t.stage_names = {"s1", "s2", "s3"};
    t.labels.resize(3);
    for (size_t i = 0; i < n1; ++i) t.labels[0].push_back("a" + std::to_string(i));
    for (size_t i = 0; i < n2; ++i) t.labels[1].push_back("b" + std::to_string(i));
    for (size_t i = 0; i < n3; ++i) t.labels[2].push_back("c" + std::to_string(i));
    for (size_t i = 0; i < n1 * n2 * n3; ++i) t.values.push_back(5.0 * rng.normal());
    return t;
}

// Independent re-implementation of the cumulative decomposition used as the
// oracle: plain nested loops, separate measure code.
namespace brute {

double range_of(const std::vector<double>& v) {
    double lo = v[0], hi = v[0];
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    return hi - lo;
}

double std_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    double m = s / v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / v.size());
}

double measure(Measure me, const std::vector<double>& v) {
    return me == Measure::Range ? range_of(v) : std_of(v);
}

// marginal cumulative uncertainty up to stage k for a 3-stage tensor
double marginal(const ProjectionTensor& t, int k, Measure me) {
    size_t n1 = t.labels[0].size(), n2 = t.labels[1].size(), n3 = t.labels[2].size();
    auto value = [&](size_t i, size_t j, size_t l) {
        return t.values[(i * n2 + j) * n3 + l];
    };
    double sum = 0.0;
    size_t count = 0;
    if (k == 1) {
        for (size_t j = 0; j < n2; ++j)
            for (size_t l = 0; l < n3; ++l) {
                std::vector<double> q;
                for (size_t i = 0; i < n1; ++i) q.push_back(value(i, j, l));
                sum += measure(me, q);
                ++count;
            }
    } else if (k == 2) {
        for (size_t l = 0; l < n3; ++l) {
            std::vector<double> q;
            for (size_t i = 0; i < n1; ++i)
                for (size_t j = 0; j < n2; ++j) q.push_back(value(i, j, l));
            sum += measure(me, q);
            ++count;
        }
    } else {
        std::vector<double> q = t.values;
        sum += measure(me, q);
        ++count;
    }
    return sum / count;
}

}  // namespace brute

}  // namespace

TEST_SUITE("uncertainty") {

TEST_CASE("spread measures match the direct evaluations") {
    std::vector<double> single{5.0};
    CHECK(measure_range(single) == doctest::Approx(0.0));
    CHECK(measure_std(single) == doctest::Approx(0.0));

    std::vector<double> pair{0.0, 10.0};
    CHECK(measure_range(pair) == doctest::Approx(10.0));
    CHECK(measure_std(pair) == doctest::Approx(5.0));

    std::vector<double> four{1, 2, 3, 4};
    CHECK(measure_range(four) == doctest::Approx(3.0));
    CHECK(measure_std(four) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-12));
    CHECK(measure_std(four) == doctest::Approx(1.1180).epsilon(1e-4));

    CHECK_THROWS_AS(measure_range({}), std::invalid_argument);
}

TEST_CASE("conditional cumulative uncertainty on the additive tensor") {
    ProjectionTensor t = additive_tensor();

    // k = 1: range over the climate axis is 10 for every suffix
    for (const std::string& b : {"b0", "b1"})
        for (const std::string& e : {"e0", "e1"}) {
            std::vector<std::string> suffix{b, e};
            CHECK(conditional_cumulative(t, 1, suffix, Measure::Range) ==
                  doctest::Approx(10.0));
        }

    // k = K: empty suffix, measure over the whole tensor
    CHECK(conditional_cumulative(t, 3, {}, Measure::Range) == doctest::Approx(15.0));

    ProjectionTensor flat = additive_tensor(0.0, 0.0, 0.0, 2.5);
    for (int k = 1; k <= 3; ++k)
        CHECK(marginal_cumulative(flat, k, Measure::Range) == doctest::Approx(0.0));

    std::vector<std::string> bad{"nope", "e0"};
    CHECK_THROWS_AS(conditional_cumulative(t, 1, bad, Measure::Range),
                    std::invalid_argument);
}

TEST_CASE("marginal cumulative and stage uncertainties on the additive tensor") {
    ProjectionTensor t = additive_tensor();
    CHECK(marginal_cumulative(t, 1, Measure::Range) == doctest::Approx(10.0));
    CHECK(marginal_cumulative(t, 2, Measure::Range) == doctest::Approx(14.0));
    CHECK(marginal_cumulative(t, 3, Measure::Range) == doctest::Approx(15.0));

    CHECK(stage_uncertainty(t, 1, Measure::Range) == doctest::Approx(10.0));
    CHECK(stage_uncertainty(t, 2, Measure::Range) == doctest::Approx(4.0));
    CHECK(stage_uncertainty(t, 3, Measure::Range) == doctest::Approx(1.0));

    DecompositionReport rep = decompose(t, Measure::Range);
    CHECK(rep.total == doctest::Approx(15.0));
    CHECK(rep.stage[0] + rep.stage[1] + rep.stage[2] == doctest::Approx(rep.total));
}

TEST_CASE("single-stage tensor reduces to the plain measure") {
    ProjectionTensor t;
    t.stage_names = {"only"};
    t.labels = {{"x", "y", "z"}};
    t.values = {1.0, 5.0, 2.0};
    CHECK(marginal_cumulative(t, 1, Measure::Range) == doctest::Approx(4.0));
    DecompositionReport rep = decompose(t, Measure::StdDev);
    CHECK(rep.total == doctest::Approx(measure_std(t.values)));
}

TEST_CASE("random tensors match the independent oracle") {
    Rng rng(99);
    for (int rep = 0; rep < 20; ++rep) {
        size_t n1 = 2 + rng.next_raw() % 3;
        size_t n2 = 2 + rng.next_raw() % 4;
        size_t n3 = 2 + rng.next_raw() % 2;
        ProjectionTensor t = random_tensor(rng, n1, n2, n3);
        for (Measure me : {Measure::Range, Measure::StdDev}) {
            for (int k = 1; k <= 3; ++k) {
                CHECK(marginal_cumulative(t, k, me) ==
                      doctest::Approx(brute::marginal(t, k, me)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("telescoping and monotonicity hold on random tensors") {
    Rng rng(123);
    for (int rep = 0; rep < 50; ++rep) {
        ProjectionTensor t = random_tensor(rng, 1 + rng.next_raw() % 5,
                                           1 + rng.next_raw() % 5,
                                           1 + rng.next_raw() % 5);
        for (Measure me : {Measure::Range, Measure::StdDev}) {
            DecompositionReport rep2 = decompose(t, me);
            double sum = rep2.stage[0] + rep2.stage[1] + rep2.stage[2];
            CHECK(sum == doctest::Approx(rep2.total).epsilon(1e-12));
            CHECK(rep2.cumulative[0] <= rep2.cumulative[1] + 1e-12);
            CHECK(rep2.cumulative[1] <= rep2.cumulative[2] + 1e-12);
        }
    }
}

TEST_CASE("translation leaves outputs unchanged; scaling scales them") {
    Rng rng(7);
    ProjectionTensor t = random_tensor(rng, 3, 2, 4);
    ProjectionTensor shifted = t, scaled = t;
    for (double& v : shifted.values) v += 123.456;
    for (double& v : scaled.values) v *= 3.5;
    for (Measure me : {Measure::Range, Measure::StdDev}) {
        for (int k = 1; k <= 3; ++k) {
            double base = marginal_cumulative(t, k, me);
            CHECK(marginal_cumulative(shifted, k, me) ==
                  doctest::Approx(base).epsilon(1e-10));
            CHECK(marginal_cumulative(scaled, k, me) ==
                  doctest::Approx(3.5 * base).epsilon(1e-10));
        }
    }
}

TEST_CASE("permuting scenario labels within a stage changes nothing") {
    Rng rng(31);
    ProjectionTensor t = random_tensor(rng, 3, 3, 2);
    // swap labels a0 and a2 along stage 1 (and the corresponding slabs)
    ProjectionTensor p = t;
    std::swap(p.labels[0][0], p.labels[0][2]);
    size_t slab = t.labels[1].size() * t.labels[2].size();
    for (size_t j = 0; j < slab; ++j) std::swap(p.values[j], p.values[2 * slab + j]);
    for (Measure me : {Measure::Range, Measure::StdDev})
        for (int k = 1; k <= 3; ++k)
            CHECK(marginal_cumulative(p, k, me) ==
                  doctest::Approx(marginal_cumulative(t, k, me)).epsilon(1e-12));
}

TEST_CASE("fig-8-style anchor: engineered cumulative ranges decompose to shares") {
    // cumulative ranges (0.23, 0.33, 0.37) -> stages (0.23, 0.10, 0.04)
    ProjectionTensor t = additive_tensor(0.23, 0.10, 0.04, 2.33);
    DecompositionReport rep = decompose(t, Measure::Range);
    CHECK(rep.cumulative[0] == doctest::Approx(0.23).epsilon(1e-12));
    CHECK(rep.cumulative[1] == doctest::Approx(0.33).epsilon(1e-12));
    CHECK(rep.cumulative[2] == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(rep.stage[0] == doctest::Approx(0.23).epsilon(1e-12));
    CHECK(rep.stage[1] == doctest::Approx(0.10).epsilon(1e-12));
    CHECK(rep.stage[2] == doctest::Approx(0.04).epsilon(1e-10));
    CHECK(100.0 * rep.stage_fraction[0] == doctest::Approx(62.2).epsilon(0.005));
    CHECK(100.0 * rep.stage_fraction[1] == doctest::Approx(27.0).epsilon(0.005));
    CHECK(100.0 * rep.stage_fraction[2] == doctest::Approx(10.8).epsilon(0.005));
}

TEST_CASE("tensor csv round trip and incomplete factorial rejection") {
    fctest::TempDir tmp;
    ProjectionTensor t = additive_tensor();
    std::string path = tmp / "tensor.csv";
    write_tensor_csv(t, path);
    ProjectionTensor back = read_tensor_csv(path);
    CHECK(back.stage_names == t.stage_names);
    CHECK(back.labels == t.labels);
    CHECK(back.values == t.values);

    // drop one row: no longer a complete factorial
    {
        std::string all = fctest::read_file(path);
        size_t last_line = all.rfind('\n', all.size() - 2);
        std::ofstream out(tmp / "partial.csv", std::ios::binary);
        out << all.substr(0, last_line + 1);
    }
    CHECK_THROWS(read_tensor_csv(tmp / "partial.csv"));
}

TEST_CASE("report table carries bracketed percentage shares") {
    ProjectionTensor t = additive_tensor(0.23, 0.10, 0.04, 2.33);
    DecompositionReport rep = decompose(t, Measure::Range);
    std::string table = format_decomposition_table(rep);
    CHECK(table.find("62.2%") != std::string::npos);
    CHECK(table.find("climate") != std::string::npos);
    CHECK(table.find("total") != std::string::npos);
}

}  // TEST_SUITE

#include <doctest.h>

#include <cmath>
#include <memory>
#include <stdexcept>

#include "floodcast/hydraulics.hpp"
#include "floodcast/rng.hpp"

using namespace floodcast;

namespace {

/// Plane sloping down toward the south edge.
Raster plane_dem(int rows, int cols, double cellsize, double slope) {
    Raster dem(rows, cols, cellsize, 0.0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) dem.at(r, c) = (rows - 1 - r) * slope * cellsize;
    return dem;
}

/// Small bumpy DEM with reproducible noise.
Raster noisy_dem(int rows, int cols, double cellsize, std::uint64_t seed,
                 double relief = 2.0) {
    Rng rng(seed);
    Raster dem(rows, cols, cellsize, 0.0);
    for (double& z : dem.data) z = relief * rng.uniform();
    return dem;
}

SolverConfig quiet_config() {
    SolverConfig cfg;
    cfg.convergence_window = 500;
    cfg.max_sim_time = 6.0 * 86400.0;
    return cfg;
}

double manning_normal_depth(double q_unit, double n, double slope) {
    return std::pow(q_unit * n / std::sqrt(slope), 3.0 / 5.0);
}

/// Steady plane-slope run with unit-width inflow q along the top row.
InundationMap run_plane(int rows, int cols, double cellsize, double slope, double n,
                        double q_unit) {
    Raster dem = plane_dem(rows, cols, cellsize, slope);
    SolverConfig cfg = quiet_config();
    cfg.manning_n = n;
    cfg.open_edges = {Edge::South};
    FlowSolver solver(dem, {}, cfg);
    std::vector<Inflow> inflows;
    for (int c = 0; c < cols; ++c) inflows.push_back({0, c, q_unit * cellsize});
    return solver.run_to_steady(inflows);
}

}  // namespace

TEST_SUITE("hydraulics.bathymetry") {

TEST_CASE("hydraulic-geometry power laws evaluate directly") {
    // one 10 km x 10 km cell has a drainage area of exactly 100 km2
    Raster fd(1, 1, 10000.0, 0.0);
    ChannelNetwork net = build_network(fd);
    Raster dem(1, 1, 10000.0, 50.0);
    HydraulicGeometryCoeffs coeffs{1.0, 0.5, 0.27, 0.3};
    ChannelGeometry geom = estimate_bathymetry(net, dem, 50.0, coeffs);
    REQUIRE(geom.cells.size() == 1);
    CHECK(geom.cells[0].width == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(geom.cells[0].bed_elev ==
          doctest::Approx(50.0 - 0.27 * std::pow(100.0, 0.3)).epsilon(1e-12));
}

TEST_CASE("width and depth grow monotonically downstream") {
    Raster fd(1, 40, 2000.0, 1.0);
    fd.at(0, 39) = 0.0;
    ChannelNetwork net = build_network(fd);
    Raster dem(1, 40, 2000.0, 100.0);
    ChannelGeometry geom = estimate_bathymetry(net, dem, 10.0, {});
    REQUIRE(geom.cells.size() > 3);
    for (size_t i = 1; i < geom.cells.size(); ++i) {
        CHECK(geom.cells[i].width >= geom.cells[i - 1].width);
        CHECK(geom.cells[i].bankfull_depth >= geom.cells[i - 1].bankfull_depth);
    }
}

TEST_CASE("default coefficients sit within the regional bankfull-curve span") {
    // Pennsylvania regional curves (Chaplin 2005, non-urban):
    //   W_bf = 14.3 DA^0.41 [ft, mi2],  D_bf = 1.16 DA^0.26 [ft, mi2]
    const double ft = 0.3048, mi2 = 2.58999;
    auto curve_w = [&](double a_km2) { return 14.3 * std::pow(a_km2 / mi2, 0.41) * ft; };
    auto curve_d = [&](double a_km2) { return 1.16 * std::pow(a_km2 / mi2, 0.26) * ft; };
    HydraulicGeometryCoeffs def;
    for (double a : {10.0, 100.0, 1000.0, 10000.0}) {
        double w = def.a_w * std::pow(a, def.b_w);
        double d = def.a_d * std::pow(a, def.b_d);
        CHECK(w / curve_w(a) > 0.5);
        CHECK(w / curve_w(a) < 2.0);
        CHECK(d / curve_d(a) > 0.5);
        CHECK(d / curve_d(a) < 2.0);
    }
}

TEST_CASE("non-positive coefficients are rejected") {
    Raster fd(1, 1, 1000.0, 0.0);
    ChannelNetwork net = build_network(fd);
    Raster dem(1, 1, 1000.0, 10.0);
    HydraulicGeometryCoeffs bad;
    bad.a_w = -1.0;
    CHECK_THROWS_AS(estimate_bathymetry(net, dem, 0.5, bad), std::invalid_argument);
}

}  // TEST_SUITE

TEST_SUITE("hydraulics.timestep") {

TEST_CASE("stable step follows the gravity-wave CFL formula") {
    Raster dem(4, 4, 30.0, 0.0);
    SolverConfig cfg;
    cfg.cfl = 0.7;
    cfg.max_dt = 60.0;
    FlowSolver solver(dem, {}, cfg);
    solver.set_volume(1, 1, 2.5 * 30.0 * 30.0);  // depth 2.5 m
    double dt = solver.adaptive_timestep();
    CHECK(dt == doctest::Approx(0.7 * 30.0 / std::sqrt(9.81 * 2.5)).epsilon(1e-12));
    CHECK(dt == doctest::Approx(4.241).epsilon(1e-3));
}

TEST_CASE("dry domain returns the configured maximum step") {
    Raster dem(4, 4, 30.0, 0.0);
    SolverConfig cfg;
    cfg.max_dt = 12.5;
    FlowSolver solver(dem, {}, cfg);
    CHECK(solver.adaptive_timestep() == doctest::Approx(12.5));
}

TEST_CASE("halving the cellsize halves the step") {
    SolverConfig cfg;
    cfg.max_dt = 1e9;
    Raster coarse(3, 3, 30.0, 0.0), fine(3, 3, 15.0, 0.0);
    FlowSolver a(coarse, {}, cfg), b(fine, {}, cfg);
    a.set_volume(1, 1, 2.0 * 30.0 * 30.0);
    b.set_volume(1, 1, 2.0 * 15.0 * 15.0);
    CHECK(b.adaptive_timestep() == doctest::Approx(0.5 * a.adaptive_timestep()));
}

}  // TEST_SUITE

TEST_SUITE("hydraulics.solver") {

TEST_CASE("a level lake over a dyadic bumpy bed is an exact fixed point") {
    // dyadic elevations, widths and cellsize make the stage-storage round trip
    // exact, so the rest state must not move at all
    Raster dem(8, 8, 32.0, 0.0);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) dem.at(r, c) = 0.25 * ((r * 13 + c * 7) % 8);

    ChannelGeometry chan;
    chan.cells.push_back({4, 4, 8.0, 0.5, dem.at(4, 4) - 0.5});
    chan.cells.push_back({4, 5, 8.0, 0.5, dem.at(4, 5) - 0.5});

    FlowSolver solver(dem, chan, SolverConfig{});
    solver.fill_to_surface(4.0);
    Raster before = solver.depth_raster();
    for (int i = 0; i < 2000; ++i) solver.step(solver.adaptive_timestep());
    Raster after = solver.depth_raster();
    for (size_t i = 0; i < before.size(); ++i) CHECK(after.data[i] == before.data[i]);
}

TEST_CASE("a level lake over an arbitrary bed stays put to 1e-12") {
    Raster dem = noisy_dem(10, 9, 25.0, 77, 2.5);
    FlowSolver solver(dem, {}, SolverConfig{});
    solver.fill_to_surface(3.7);
    Raster before = solver.depth_raster();
    for (int i = 0; i < 2000; ++i) solver.step(solver.adaptive_timestep());
    Raster after = solver.depth_raster();
    for (size_t i = 0; i < before.size(); ++i)
        CHECK(std::abs(after.data[i] - before.data[i]) <= 1e-12);
}

TEST_CASE("an entirely dry domain does not change") {
    Raster dem = noisy_dem(6, 6, 30.0, 5);
    FlowSolver solver(dem, {}, SolverConfig{});
    for (int i = 0; i < 100; ++i) solver.step(solver.adaptive_timestep());
    CHECK(solver.total_volume() == 0.0);
    CHECK(solver.wet_area_km2() == 0.0);
}

TEST_CASE("closed domains conserve volume to roundoff") {
    Raster dem = noisy_dem(12, 12, 20.0, 31, 1.5);
    FlowSolver solver(dem, {}, SolverConfig{});  // all edges closed
    solver.fill_to_surface(1.2);
    solver.set_volume(2, 3, 500.0);  // plus unbalanced mounds
    solver.set_volume(9, 8, 350.0);
    double v0 = solver.total_volume();
    REQUIRE(v0 > 0.0);
    for (int i = 0; i < 2000; ++i) solver.step(solver.adaptive_timestep());
    CHECK(std::abs(solver.total_volume() - v0) / v0 <= 1e-12);
}

TEST_CASE("plane-slope steady flow reaches the Manning normal depth") {
    const double slope = 0.001, n = 0.045, q_unit = 1.0;
    InundationMap map = run_plane(40, 24, 30.0, slope, n, q_unit);
    REQUIRE(map.converged);
    CHECK(std::abs(map.ledger.error()) <= 1e-3);

    double expected = manning_normal_depth(q_unit, n, slope);
    CHECK(expected == doctest::Approx(1.236).epsilon(2e-3));
    // interior samples away from the inflow row and the outfall
    for (int r = 15; r <= 25; ++r) {
        double depth = map.depth.at(r, 12);
        CHECK(std::abs(depth - expected) / expected < 0.02);
    }
}

TEST_CASE("rougher beds hold deeper steady flow, pointwise") {
    InundationMap smooth = run_plane(30, 16, 30.0, 0.001, 0.03, 1.0);
    InundationMap rough = run_plane(30, 16, 30.0, 0.001, 0.06, 1.0);
    REQUIRE(smooth.converged);
    REQUIRE(rough.converged);
    for (int r = 0; r < 29; ++r)  // upstream of the outfall control
        for (int c = 0; c < 16; ++c)
            CHECK(rough.depth.at(r, c) >= smooth.depth.at(r, c) * (1.0 - 1e-9));
}

TEST_CASE("mirrored terrain and inflow produce bitwise mirrored depths") {
    const int rows = 18, cols = 23;
    Raster dem = noisy_dem(rows, cols, 15.0, 123, 1.0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) dem.at(r, c) += (rows - 1 - r) * 0.02 * 15.0;
    Raster mirrored = dem.like(0.0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) mirrored.at(r, c) = dem.at(r, cols - 1 - c);

    ChannelGeometry chan, chan_m;
    for (int r = 4; r < 14; ++r) {
        chan.cells.push_back({r, 6, 5.0, 0.5, dem.at(r, 6) - 0.5});
        chan_m.cells.push_back({r, cols - 1 - 6, 5.0, 0.5, dem.at(r, 6) - 0.5});
    }

    SolverConfig cfg;
    cfg.open_edges = {Edge::South};
    FlowSolver a(dem, chan, cfg), b(mirrored, chan_m, cfg);

    InundationMap ma = a.run_to_steady({{4, 6, 40.0}});
    InundationMap mb = b.run_to_steady({{4, cols - 1 - 6, 40.0}});
    CHECK(ma.steps == mb.steps);
    CHECK(ma.area_km2 == mb.area_km2);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            CHECK(ma.depth.at(r, c) == mb.depth.at(r, cols - 1 - c));
}

TEST_CASE("doubling the peak never shrinks the inundated area") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        Raster dem = noisy_dem(16, 16, 20.0, seed, 0.8);
        for (int r = 0; r < 16; ++r)
            for (int c = 0; c < 16; ++c) dem.at(r, c) += (15 - r) * 0.01 * 20.0;
        SolverConfig cfg = quiet_config();
        cfg.convergence_window = 300;
        cfg.open_edges = {Edge::South};

        double area_small = 0.0;
        {
            FlowSolver solver(dem, {}, cfg);
            InundationMap map = solver.run_to_steady({{2, 8, 5.0}});
            REQUIRE(map.converged);
            area_small = map.area_km2;
        }
        FlowSolver solver(dem, {}, cfg);
        InundationMap map = solver.run_to_steady({{2, 8, 10.0}});
        REQUIRE(map.converged);
        CHECK(map.area_km2 >= area_small - 1e-12);
    }
}

TEST_CASE("v-shaped valley matches the 1d normal-depth wetted width") {
    const int rows = 40, cols = 41;
    const double dx = 10.0, down = 0.002, cross = 0.02, n = 0.045, q_in = 40.0;
    Raster dem(rows, cols, dx, 0.0);
    int mid = cols / 2;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            dem.at(r, c) = (rows - 1 - r) * down * dx + std::abs(c - mid) * cross * dx;

    SolverConfig cfg = quiet_config();
    cfg.manning_n = n;
    cfg.open_edges = {Edge::South};
    FlowSolver solver(dem, {}, cfg);
    InundationMap map = solver.run_to_steady({{2, mid, q_in}});
    REQUIRE(map.converged);
    CHECK(std::abs(map.ledger.error()) <= 1e-3);

    // independent 1d oracle: Manning normal depth in a V channel by bisection
    const double m_side = 1.0 / cross;  // horizontal run per unit rise
    auto discharge_at = [&](double h) {
        double area = m_side * h * h;
        double perimeter = 2.0 * h * std::sqrt(1.0 + m_side * m_side);
        double radius = area / perimeter;
        return area * std::pow(radius, 2.0 / 3.0) * std::sqrt(down) / n;
    };
    double lo = 1e-3, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        double h = 0.5 * (lo + hi);
        (discharge_at(h) < q_in ? lo : hi) = h;
    }
    double h_normal = 0.5 * (lo + hi);
    int predicted = 2 * static_cast<int>(h_normal / (cross * dx)) + 1;

    int row = rows / 2;
    int wet = 0;
    for (int c = 0; c < cols; ++c)
        if (map.wet_mask.at(row, c) > 0.0) ++wet;
    INFO("normal depth ", h_normal, ", predicted cells ", predicted, ", wet ", wet);
    CHECK(std::abs(wet - predicted) <= 2);  // one cell per bank
}

TEST_CASE("zero inflow leaves the wet mask empty") {
    Raster dem = plane_dem(12, 10, 30.0, 0.002);
    SolverConfig cfg = quiet_config();
    cfg.convergence_window = 100;
    cfg.open_edges = {Edge::South};
    FlowSolver solver(dem, {}, cfg);
    InundationMap map = solver.run_to_steady({});
    CHECK(map.area_km2 == 0.0);
    CHECK(map.converged);
}

TEST_CASE("inflow nodes must sit on the channel when channels exist") {
    Raster dem = plane_dem(10, 10, 30.0, 0.002);
    ChannelGeometry chan;
    chan.cells.push_back({5, 5, 10.0, 1.0, dem.at(5, 5) - 1.0});
    FlowSolver solver(dem, chan, quiet_config());
    CHECK_THROWS_AS(solver.run_to_steady({{0, 0, 5.0}}), std::invalid_argument);
    CHECK_THROWS_AS(solver.run_to_steady({{5, 5, -1.0}}), std::invalid_argument);
}

TEST_CASE("subgrid channel conveys water below bankfull without flooding") {
    // channel along the center column on a gentle plain: moderate inflow stays
    // in the channel and the floodplain stays dry
    const int rows = 20, cols = 11;
    Raster dem(rows, cols, 30.0, 0.0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) dem.at(r, c) = (rows - 1 - r) * 0.03;

    ChannelGeometry chan;
    for (int r = 0; r < rows; ++r)
        chan.cells.push_back({r, 5, 8.0, 2.0, dem.at(r, 5) - 2.0});

    SolverConfig cfg = quiet_config();
    cfg.convergence_window = 300;
    cfg.open_edges = {Edge::South};
    FlowSolver solver(dem, chan, cfg);
    InundationMap map = solver.run_to_steady({{1, 5, 2.0}});
    REQUIRE(map.converged);
    CHECK(map.area_km2 == 0.0);  // everything below bankfull
    CHECK(solver.total_volume() > 0.0);
    CHECK(std::abs(map.ledger.error()) <= 1e-3);
}

}  // TEST_SUITE

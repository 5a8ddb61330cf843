#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "floodcast/pipeline.hpp"
#include "testutil.hpp"

using namespace floodcast;
using fctest::TempDir;

TEST_SUITE("pipeline.config") {

TEST_CASE("ini parsing handles sections, comments and whitespace") {
    TempDir tmp;
    {
        std::ofstream f(tmp / "a.ini");
        f << "# comment\n[alpha]\nkey = value with spaces  \nnum=42\n\n"
          << "; another comment\n[beta]\nz = 1,2,3\n";
    }
    IniFile ini = parse_ini(tmp / "a.ini");
    CHECK(ini.get("alpha", "key") == "value with spaces");
    CHECK(ini.get("alpha", "num") == "42");
    CHECK(ini.get("beta", "z") == "1,2,3");
    CHECK(ini.get("beta", "missing", "fb") == "fb");
    CHECK_THROWS_AS(ini.require("beta", "missing"), std::invalid_argument);

    {
        std::ofstream f(tmp / "bad.ini");
        f << "[s]\nnot a kv line\n";
    }
    CHECK_THROWS_AS(parse_ini(tmp / "bad.ini"), std::invalid_argument);
}

TEST_CASE("config hash is stable under key reordering") {
    PipelineConfig a, b;
    a.flat = {{"x.k1", "1"}, {"x.k2", "2"}, {"y.k3", "3"}};
    b.flat = {{"y.k3", "3"}, {"x.k1", "1"}, {"x.k2", "2"}};
    CHECK(config_hash(a) == config_hash(b));
    b.flat[0].second = "4";
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("missing inputs make the config invalid") {
    TempDir tmp;
    {
        std::ofstream f(tmp / "cfg.ini");
        f << "[climate]\nforcing_dir = nowhere\nmembers = a\n"
          << "forcing_start = 2020-01-01\nforcing_end = 2020-12-31\n"
          << "[hydromodel]\nparams_dir = p\nflowdir = f.asc\ngages = g.csv\n"
          << "[extremes]\neval_years = 2020\n"
          << "[hydraulics]\ndem = d.asc\ninflow_nodes = n.csv\ndem_resolutions = 10\n";
    }
    CHECK_THROWS_AS(load_pipeline_config(tmp / "cfg.ini"), std::invalid_argument);
}

}  // TEST_SUITE

TEST_SUITE("pipeline.terrain") {

TEST_CASE("steepest-descent flow directions drain a tilted plane") {
    Raster dem(5, 5, 100.0, 0.0);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) dem.at(r, c) = (4 - r) * 1.0 + 0.01 * c;
    Raster fd = d8_from_dem(dem);
    ChannelNetwork net = build_network(fd);
    // the lowest corner collects the whole grid
    int outlet = net.index(4, 0);
    CHECK(net.downstream[outlet] == -1);
    CHECK(net.area_km2[outlet] == doctest::Approx(25 * 0.01));
}

TEST_CASE("valley DEM concentrates drainage along the center column") {
    Raster dem = fctest::make_valley_dem(20, 100.0);
    ChannelNetwork net = build_network(d8_from_dem(dem));
    int mid = 10;
    double area_channel = net.area_km2[net.index(18, mid)];
    double area_flank = net.area_km2[net.index(18, 2)];
    CHECK(area_channel > 10.0 * area_flank);
}

TEST_CASE("forcing regrid matches congruent passthrough") {
    ForcingGrid f;
    f.geom = Raster(4, 4, 3000.0);
    f.precip.push_back(std::vector<double>(16, 2.0));
    f.temp.push_back(std::vector<double>(16, 10.0));
    Raster target(5, 5, 2000.0);
    ForcingGrid out = regrid_forcing(f, target);
    CHECK(out.precip[0].size() == 25);
    for (double v : out.precip[0]) CHECK(v == doctest::Approx(2.0));

    ForcingGrid same = regrid_forcing(f, f.geom);
    CHECK(same.precip[0] == f.precip[0]);
}

}  // TEST_SUITE

TEST_SUITE("pipeline.run") {

TEST_CASE("single-scenario pipeline yields a 1x1x1 tensor with zero uncertainty") {
    TempDir tmp;
    auto paths = fctest::write_synthetic_basin(tmp / "basin", {"m0"}, 1, 50, "200", 6, 7);
    PipelineConfig cfg = load_pipeline_config(paths.config);
    RunManifest man = run_pipeline(cfg);

    REQUIRE(man.epochs.size() == 1);
    CHECK(man.complete());
    REQUIRE(man.epochs[0].runs.size() == 1);
    CHECK(man.epochs[0].runs[0].ok);
    CHECK(man.epochs[0].runs[0].extent_km2 > 0.0);
    CHECK(std::abs(man.epochs[0].runs[0].mass_error) <= 1e-3);

    ProjectionTensor tensor = read_tensor_csv(paths.output_dir + "/tensor_2025.csv");
    DecompositionReport rep = decompose(tensor, Measure::Range);
    CHECK(rep.total == doctest::Approx(0.0));
    for (double s : rep.stage) CHECK(s == doctest::Approx(0.0));

    // risk outputs exist and percentages are sane
    auto risk = read_risk_csv(paths.output_dir + "/risk_2025.csv");
    REQUIRE(risk.size() == 3);
    for (const auto& r : risk) {
        CHECK(r.hazard_pct >= 0.0);
        CHECK(r.hazard_pct <= 100.0);
        CHECK(r.exposure_pct >= 0.0);
        CHECK(r.exposure_pct <= 100.0);
    }
}

TEST_CASE("same seed and config give byte-identical outputs") {
    TempDir tmp;
    auto run_once = [&](const std::string& name) {
        auto paths =
            fctest::write_synthetic_basin(tmp / name, {"m0"}, 1, 40, "250", 5, 99);
        PipelineConfig cfg = load_pipeline_config(paths.config);
        run_pipeline(cfg);
        return paths.output_dir;
    };
    std::string a = run_once("one");
    std::string b = run_once("two");

    namespace fs = std::filesystem;
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(a))
        names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    REQUIRE(names.size() > 4);
    for (const auto& n : names) {
        INFO("file ", n);
        CHECK(fctest::read_file(a + "/" + n) == fctest::read_file(b + "/" + n));
        CHECK(fs::exists(fs::path(b) / n));
    }
}

TEST_CASE("re-emitting reports from the same manifest is idempotent") {
    TempDir tmp;
    auto paths = fctest::write_synthetic_basin(tmp / "basin", {"m0"}, 1, 40, "250", 5, 3);
    PipelineConfig cfg = load_pipeline_config(paths.config);
    RunManifest man = run_pipeline(cfg);

    std::string tensor_before = fctest::read_file(paths.output_dir + "/tensor_2024.csv");
    std::string risk_before = fctest::read_file(paths.output_dir + "/risk_2024.csv");
    emit_reports(man, cfg);
    CHECK(fctest::read_file(paths.output_dir + "/tensor_2024.csv") == tensor_before);
    CHECK(fctest::read_file(paths.output_dir + "/risk_2024.csv") == risk_before);
}

TEST_CASE("pipeline without a seed is rejected") {
    TempDir tmp;
    auto paths = fctest::write_synthetic_basin(tmp / "basin", {"m0"}, 1, 40, "250", 5, 1);
    PipelineConfig cfg = load_pipeline_config(paths.config);
    cfg.seed_set = false;
    CHECK_THROWS_AS(run_pipeline(cfg), std::invalid_argument);
}

}  // TEST_SUITE

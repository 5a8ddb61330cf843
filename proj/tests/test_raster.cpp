#include <doctest.h>

#include <cmath>

#include "floodcast/raster.hpp"
#include "floodcast/series.hpp"
#include "testutil.hpp"

using namespace floodcast;

TEST_SUITE("raster") {

TEST_CASE("ascii grid round trip preserves geometry and values") {
    fctest::TempDir tmp;
    Raster r(3, 4, 30.0);
    r.xll = 100.0;
    r.yll = 250.0;
    r.nodata = -1.0;
    for (size_t i = 0; i < r.size(); ++i) r.data[i] = 0.125 * static_cast<double>(i) - 1.5;
    r.at(1, 2) = r.nodata;

    std::string path = tmp / "grid.asc";
    write_ascii_grid(r, path, 17);
    Raster back = read_ascii_grid(path);

    CHECK(back.congruent(r));
    CHECK(back.nodata == r.nodata);
    for (size_t i = 0; i < r.size(); ++i) CHECK(back.data[i] == r.data[i]);
}

TEST_CASE("read rejects truncated and missing files") {
    fctest::TempDir tmp;
    std::string path = tmp / "bad.asc";
    {
        std::ofstream f(path);
        f << "NCOLS 3\nNROWS 2\nXLLCORNER 0\nYLLCORNER 0\nCELLSIZE 1\n1 2 3\n4 5\n";
    }
    CHECK_THROWS(read_ascii_grid(path));
    CHECK_THROWS(read_ascii_grid(tmp / "missing.asc"));
}

TEST_CASE("regrid to identical geometry is the identity") {
    Raster r(5, 7, 10.0);
    for (size_t i = 0; i < r.size(); ++i) r.data[i] = std::sin(0.3 * i);
    Raster out = regrid_bilinear(r, r);
    for (size_t i = 0; i < r.size(); ++i) CHECK(out.data[i] == r.data[i]);
}

TEST_CASE("regrid of a constant field is constant") {
    Raster src(6, 6, 10.0, 3.25);
    Raster target(9, 9, 20.0 / 3.0);
    target.xll = 0.0;
    target.yll = 0.0;
    Raster out = regrid_bilinear(src, target);
    for (double v : out.data) CHECK(v == doctest::Approx(3.25).epsilon(1e-14));
}

TEST_CASE("regrid reproduces a bilinear ramp exactly") {
    // f(x, y) = x + 2y is in the bilinear span
    Raster src(20, 20, 5.0);
    for (int r = 0; r < src.rows; ++r)
        for (int c = 0; c < src.cols; ++c)
            src.at(r, c) = src.center_x(c) + 2.0 * src.center_y(r);

    SUBCASE("coarser target, same extent") {
        Raster target(5, 5, 20.0);
        Raster out = regrid_bilinear(src, target);
        for (int r = 0; r < out.rows; ++r)
            for (int c = 0; c < out.cols; ++c)
                CHECK(out.at(r, c) ==
                      doctest::Approx(out.center_x(c) + 2.0 * out.center_y(r))
                          .epsilon(1e-12));
    }
    SUBCASE("finer inset target") {
        Raster target(30, 30, 2.0);
        target.xll = 10.0;
        target.yll = 10.0;
        Raster out = regrid_bilinear(src, target);
        for (int r = 0; r < out.rows; ++r)
            for (int c = 0; c < out.cols; ++c)
                CHECK(out.at(r, c) ==
                      doctest::Approx(out.center_x(c) + 2.0 * out.center_y(r))
                          .epsilon(1e-12));
    }
}

TEST_CASE("regrid rejects a target outside the source extent") {
    Raster src(4, 4, 10.0);
    Raster target(4, 4, 10.0);
    target.xll = 20.0;  // extends past the source
    CHECK_THROWS_AS(regrid_bilinear(src, target), std::invalid_argument);
}

TEST_CASE("coarsen block-averages and keeps the extent") {
    Raster src(4, 6, 10.0);
    for (size_t i = 0; i < src.size(); ++i) src.data[i] = static_cast<double>(i);
    Raster out = coarsen(src, 2);
    CHECK(out.rows == 2);
    CHECK(out.cols == 3);
    CHECK(out.cellsize == 20.0);
    CHECK(out.at(0, 0) == doctest::Approx(0.25 * (0 + 1 + 6 + 7)));
    CHECK(out.at(1, 2) == doctest::Approx(0.25 * (16 + 17 + 22 + 23)));
    CHECK_THROWS(coarsen(src, 5));
}

TEST_CASE("coarsen skips nodata cells in the block mean") {
    Raster src(2, 2, 10.0, 4.0);
    src.at(0, 0) = src.nodata;
    Raster out = coarsen(src, 2);
    CHECK(out.at(0, 0) == doctest::Approx(4.0));
}

}  // TEST_SUITE

TEST_SUITE("series") {

TEST_CASE("civil date conversions round trip") {
    CHECK(days_from_date({1970, 1, 1}) == 0);
    CHECK(days_from_date({2020, 3, 1}) - days_from_date({2020, 2, 28}) == 2);  // leap
    for (std::int64_t d : {-100000LL, -1LL, 0LL, 1LL, 18262LL, 40000LL}) {
        Date dt = date_from_days(d);
        CHECK(days_from_date(dt) == d);
    }
    CHECK(format_date(parse_date("2021-07-09")) == "2021-07-09");
    CHECK(format_date_compact(parse_date("20210709")) == "20210709");
    CHECK_THROWS(parse_date("07/09/2021"));
}

TEST_CASE("series csv round trip and daily-spacing check") {
    fctest::TempDir tmp;
    DailySeries s;
    s.start_day = days_from_date({2001, 12, 30});
    s.values = {1.5, 2.25, 0.0, 10.0};
    std::string path = tmp / "flow.csv";
    write_series_csv(s, path);
    DailySeries back = read_series_csv(path);
    CHECK(back.start_day == s.start_day);
    CHECK(back.values == s.values);

    {
        std::ofstream f(tmp / "gap.csv");
        f << "date,discharge_m3s\n2001-01-01,1\n2001-01-03,2\n";
    }
    CHECK_THROWS(read_series_csv(tmp / "gap.csv"));
}

}  // TEST_SUITE

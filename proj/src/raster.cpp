#include "floodcast/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace floodcast {

Raster::Raster(int rows_, int cols_, double cellsize_, double fill)
    : rows(rows_), cols(cols_), cellsize(cellsize_),
      data(static_cast<size_t>(rows_) * cols_, fill) {
    if (rows_ <= 0 || cols_ <= 0 || cellsize_ <= 0.0)
        throw std::invalid_argument("Raster: rows, cols and cellsize must be positive");
}

bool Raster::congruent(const Raster& other) const {
    const double tol = 1e-9 * std::max(1.0, std::abs(cellsize));
    return rows == other.rows && cols == other.cols &&
           std::abs(cellsize - other.cellsize) <= tol &&
           std::abs(xll - other.xll) <= tol && std::abs(yll - other.yll) <= tol;
}

Raster Raster::like(double fill) const {
    Raster out(rows, cols, cellsize, fill);
    out.xll = xll;
    out.yll = yll;
    out.nodata = nodata;
    return out;
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

Raster read_ascii_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open raster: " + path);

    Raster r;
    r.rows = r.cols = -1;
    bool have_nodata = false;

    // Header: key/value lines until the first purely numeric token.
    std::string key;
    while (in >> key) {
        std::string k = lower(key);
        if (k == "ncols" || k == "nrows" || k == "xllcorner" || k == "yllcorner" ||
            k == "cellsize" || k == "nodata_value") {
            double v;
            if (!(in >> v)) throw std::runtime_error("bad header value in " + path);
            if (k == "ncols") r.cols = static_cast<int>(v);
            else if (k == "nrows") r.rows = static_cast<int>(v);
            else if (k == "xllcorner") r.xll = v;
            else if (k == "yllcorner") r.yll = v;
            else if (k == "cellsize") r.cellsize = v;
            else { r.nodata = v; have_nodata = true; }
        } else {
            break;  // first data token
        }
    }
    if (r.rows <= 0 || r.cols <= 0 || r.cellsize <= 0.0)
        throw std::runtime_error("invalid or incomplete ASCII grid header: " + path);
    if (!have_nodata) r.nodata = -9999.0;

    r.data.resize(static_cast<size_t>(r.rows) * r.cols);
    size_t n = r.data.size();
    // `key` holds the first data token already.
    size_t i = 0;
    {
        std::istringstream first(key);
        if (!(first >> r.data[0])) throw std::runtime_error("bad data value in " + path);
        i = 1;
    }
    for (; i < n; ++i) {
        if (!(in >> r.data[i]))
            throw std::runtime_error("truncated ASCII grid: " + path);
    }
    return r;
}

void write_ascii_grid(const Raster& r, const std::string& path, int precision) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write raster: " + path);
    std::fprintf(f, "NCOLS %d\n", r.cols);
    std::fprintf(f, "NROWS %d\n", r.rows);
    std::fprintf(f, "XLLCORNER %.*g\n", precision, r.xll);
    std::fprintf(f, "YLLCORNER %.*g\n", precision, r.yll);
    std::fprintf(f, "CELLSIZE %.*g\n", precision, r.cellsize);
    std::fprintf(f, "NODATA_VALUE %.*g\n", precision, r.nodata);
    for (int i = 0; i < r.rows; ++i) {
        for (int j = 0; j < r.cols; ++j) {
            std::fprintf(f, j + 1 == r.cols ? "%.*g\n" : "%.*g ", precision, r.at(i, j));
        }
    }
    std::fclose(f);
}

Raster regrid_bilinear(const Raster& src, const Raster& target_geom) {
    Raster out = target_geom.like(0.0);
    out.nodata = src.nodata;

    const double sx0 = src.xll, sy0 = src.yll;
    const double sx1 = src.xll + src.cols * src.cellsize;
    const double sy1 = src.yll + src.rows * src.cellsize;
    const double tx0 = target_geom.xll, ty0 = target_geom.yll;
    const double tx1 = target_geom.xll + target_geom.cols * target_geom.cellsize;
    const double ty1 = target_geom.yll + target_geom.rows * target_geom.cellsize;
    const double tol = 1e-9 * src.cellsize;
    if (tx0 < sx0 - tol || tx1 > sx1 + tol || ty0 < sy0 - tol || ty1 > sy1 + tol)
        throw std::invalid_argument("regrid_bilinear: target extent not covered by source");

    for (int r = 0; r < out.rows; ++r) {
        double y = out.center_y(r);
        // fractional row in source cell-center space, measured from the top row
        double fr = (sy1 - y) / src.cellsize - 0.5;
        fr = std::clamp(fr, 0.0, static_cast<double>(src.rows - 1));
        int r0 = static_cast<int>(std::floor(fr));
        int r1 = std::min(r0 + 1, src.rows - 1);
        double wr = fr - r0;
        for (int c = 0; c < out.cols; ++c) {
            double x = out.center_x(c);
            double fc = (x - sx0) / src.cellsize - 0.5;
            fc = std::clamp(fc, 0.0, static_cast<double>(src.cols - 1));
            int c0 = static_cast<int>(std::floor(fc));
            int c1 = std::min(c0 + 1, src.cols - 1);
            double wc = fc - c0;

            double v00 = src.at(r0, c0), v01 = src.at(r0, c1);
            double v10 = src.at(r1, c0), v11 = src.at(r1, c1);
            if (v00 == src.nodata || v01 == src.nodata || v10 == src.nodata ||
                v11 == src.nodata) {
                out.at(r, c) = out.nodata;
                continue;
            }
            double top = v00 + wc * (v01 - v00);
            double bot = v10 + wc * (v11 - v10);
            out.at(r, c) = top + wr * (bot - top);
        }
    }
    return out;
}

Raster coarsen(const Raster& src, int factor) {
    if (factor <= 0) throw std::invalid_argument("coarsen: factor must be positive");
    if (factor == 1) return src;
    if (src.rows % factor != 0 || src.cols % factor != 0)
        throw std::invalid_argument("coarsen: grid dimensions not divisible by factor");
    Raster out(src.rows / factor, src.cols / factor, src.cellsize * factor);
    out.xll = src.xll;
    out.yll = src.yll;
    out.nodata = src.nodata;
    for (int r = 0; r < out.rows; ++r) {
        for (int c = 0; c < out.cols; ++c) {
            double sum = 0.0;
            int count = 0;
            for (int i = 0; i < factor; ++i) {
                for (int j = 0; j < factor; ++j) {
                    double v = src.at(r * factor + i, c * factor + j);
                    if (v != src.nodata) {
                        sum += v;
                        ++count;
                    }
                }
            }
            out.at(r, c) = count > 0 ? sum / count : out.nodata;
        }
    }
    return out;
}

}  // namespace floodcast

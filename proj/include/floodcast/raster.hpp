#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace floodcast {

/**
 * Georeferenced rectangular grid of cell values.
 *
 * Row 0 is the northernmost row (ESRI ASCII file order); (xll, yll) is the
 * lower-left corner of the grid extent. Values are stored row-major.
 */
struct Raster {
    int rows = 0;
    int cols = 0;
    double xll = 0.0;
    double yll = 0.0;
    double cellsize = 1.0;
    double nodata = -9999.0;
    std::vector<double> data;

    Raster() = default;
    Raster(int rows_, int cols_, double cellsize_, double fill = 0.0);

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    size_t size() const { return data.size(); }
    bool in_bounds(int r, int c) const { return r >= 0 && r < rows && c >= 0 && c < cols; }
    bool is_nodata(int r, int c) const { return at(r, c) == nodata; }

    /// Same shape, cellsize and origin (within a relative tolerance on geometry).
    bool congruent(const Raster& other) const;

    /// x coordinate of the center of column c.
    double center_x(int c) const { return xll + (c + 0.5) * cellsize; }
    /// y coordinate of the center of row r (row 0 on top).
    double center_y(int r) const { return yll + (rows - r - 0.5) * cellsize; }

    /// Raster with identical geometry, filled with `fill`.
    Raster like(double fill = 0.0) const;
};

/// Read an ESRI ASCII grid (.asc). Header keys are matched case-insensitively.
Raster read_ascii_grid(const std::string& path);

/// Write an ESRI ASCII grid with NCOLS/NROWS/XLLCORNER/YLLCORNER/CELLSIZE/NODATA_VALUE header.
void write_ascii_grid(const Raster& r, const std::string& path, int precision = 8);

/**
 * Bilinear resampling of `src` onto the geometry of `target_geom`.
 *
 * Interpolation is between cell centers; target centers falling in the outer
 * half-cell ring of the source get clamped (constant) extrapolation. Throws
 * if the target extent is not covered by the source extent. Cells with a
 * nodata corner become nodata.
 */
Raster regrid_bilinear(const Raster& src, const Raster& target_geom);

/// Block-average coarsening by an integer factor. rows and cols must divide evenly.
Raster coarsen(const Raster& src, int factor);

}  // namespace floodcast

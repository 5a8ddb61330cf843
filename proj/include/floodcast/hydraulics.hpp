#pragma once

#include <string>
#include <vector>

#include "floodcast/hydromodel.hpp"
#include "floodcast/raster.hpp"

namespace floodcast {

/// Hydraulic-geometry coefficients: w = a_w A^b_w, d = a_d A^b_d (A in km2,
/// w and d in meters). Defaults sit within the span of the Pennsylvania
/// regional bankfull curves (Cinotto 2003; Chaplin 2005).
struct HydraulicGeometryCoeffs {
    double a_w = 2.3;
    double b_w = 0.5;
    double a_d = 0.27;
    double b_d = 0.3;
};

/// Subgrid channel description for one cell.
struct ChannelCell {
    int row = 0, col = 0;
    double width = 0.0;          // m, <= cellsize
    double bankfull_depth = 0.0; // m
    double bed_elev = 0.0;       // m, dem - bankfull_depth
};

struct ChannelGeometry {
    std::vector<ChannelCell> cells;
};

/**
 * Estimate bankfull channel geometry from drainage area. Cells of `network`
 * with area >= channel_threshold_km2 become channel cells; width is capped
 * at the cell size (the channel is a subgrid feature).
 */
ChannelGeometry estimate_bathymetry(const ChannelNetwork& network, const Raster& dem,
                                    double channel_threshold_km2,
                                    const HydraulicGeometryCoeffs& coeffs = {});

enum class Edge : int { North = 0, East = 1, South = 2, West = 3 };

struct SolverConfig {
    double manning_n = 0.045;
    double gravity = 9.81;
    double cfl = 0.7;
    double h_dry = 0.01;            // m, wet/dry threshold
    double max_dt = 10.0;           // s, cap when the domain is (nearly) dry
    int convergence_window = 1000;  // steps
    double convergence_tol = 1e-3;  // relative area (and volume) change
    double max_sim_time = 48.0 * 3600.0;  // s
    std::vector<Edge> open_edges;   // free-outfall boundaries
    double outfall_min_slope = 1e-4;

    void validate() const;
};

/// Point inflow on the DEM grid.
struct Inflow {
    int row = 0, col = 0;
    double q_m3s = 0.0;
};

std::vector<Inflow> read_inflows_csv(const std::string& path);
void write_inflows_csv(const std::vector<Inflow>& inflows, const std::string& path);

/// Volume accounting over a hydraulic run (m3).
struct MassLedger {
    double inflow = 0.0;
    double outflow = 0.0;
    double storage_initial = 0.0;
    double storage_final = 0.0;

    double error() const;  // (in - out - dS) / in
};

struct InundationMap {
    Raster depth;     // water depth above ground (m)
    Raster wet_mask;  // 1 where depth > h_dry
    double area_km2 = 0.0;
    bool converged = false;
    long steps = 0;
    double sim_time = 0.0;  // s
    MassLedger ledger;
};

/**
 * Raster flood solver: local-inertial shallow-water update on a staggered
 * grid (Bates et al. 2010) with subgrid channels (after Neal et al. 2012).
 *
 * Cell state is stored as water volume; the free surface follows each cell's
 * stage-storage curve (in-channel below bankfull, spread across the cell
 * above). Face updates use the semi-implicit friction form
 *   q' = (q - g h_f dt S) / (1 + g dt n^2 |q| / h_f^(7/3)).
 */
class FlowSolver {
public:
    FlowSolver(const Raster& dem, const ChannelGeometry& channels, SolverConfig config);

    /// Stable step length: cfl * cellsize / sqrt(g h_max); max_dt when dry.
    double adaptive_timestep() const;

    /// Advance one explicit step of length dt (seconds).
    void step(double dt);

    /// Iterate to a steady state under constant point inflows.
    InundationMap run_to_steady(const std::vector<Inflow>& inflows);

    /// Depth above ground (m) for the current state.
    Raster depth_raster() const;
    Raster wet_mask() const;
    double wet_area_km2() const;
    double total_volume() const;

    /// Water surface elevation of a cell (stage-storage inverse).
    double surface_elevation(int r, int c) const;

    void set_volume(int r, int c, double v_m3);
    /// Fill to a target water-surface elevation (no-op where eta <= bed).
    void fill_to_surface(double eta);

    const SolverConfig& config() const { return config_; }
    const Raster& dem() const { return dem_; }
    double time() const { return time_; }

private:
    Raster dem_;
    SolverConfig config_;
    int rows_ = 0, cols_ = 0;
    double dx_ = 1.0;

    // subgrid channel fields (zero width marks plain floodplain cells)
    std::vector<double> chan_width_, chan_bed_, chan_bankfull_volume_;
    std::vector<char> is_channel_;

    std::vector<double> volume_;  // per-cell water volume, m3
    std::vector<double> eta_;     // per-cell water surface, recomputed each step
    // floodplain and channel unit discharges on x faces (rows x (cols-1))
    // and y faces ((rows-1) x cols), m2/s
    std::vector<double> qx_, qy_, qcx_, qcy_;
    // per-step scratch: face volume fluxes, boundary flux, limiter
    std::vector<double> fx_, fcx_, fy_, fcy_, bnd_, limiter_;
    double time_ = 0.0;
    double boundary_outflow_ = 0.0;  // accumulated m3

    size_t idx(int r, int c) const { return static_cast<size_t>(r) * cols_ + c; }
    size_t xface(int r, int c) const { return static_cast<size_t>(r) * (cols_ - 1) + c; }
    size_t yface(int r, int c) const { return static_cast<size_t>(r) * cols_ + c; }

    void compute_surfaces();
    void update_faces(double dt);
    void apply_fluxes(double dt);
    double cell_depth(size_t i) const;  // above channel bed where present
    friend class FlowSolverProbe;
};

}  // namespace floodcast

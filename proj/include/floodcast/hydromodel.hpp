#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "floodcast/raster.hpp"
#include "floodcast/series.hpp"

namespace floodcast {

/**
 * Gridded daily forcing: precipitation (mm/day) and near-surface air
 * temperature (degC) sharing one grid geometry. Per-day fields are stored
 * flattened row-major on that geometry.
 */
struct ForcingGrid {
    Raster geom;               // geometry template (data unused)
    std::int64_t start_day = 0;
    std::vector<std::vector<double>> precip;  // [day][cell], mm/day
    std::vector<std::vector<double>> temp;    // [day][cell], degC

    size_t days() const { return precip.size(); }
    void validate() const;
};

/// Raster forcing loader: reads `<var>_<YYYYMMDD>.asc` files (vars pr, tas)
/// for a contiguous date range from one directory.
ForcingGrid read_forcing_dir(const std::string& dir, const Date& first, const Date& last);

/// Index of the six calibrable a-priori parameter fields.
enum class ParamField : int {
    Capacity = 0,      // storage capacity (mm)
    Drainage,          // linear-reservoir drainage coefficient (1/day)
    MeltFactor,        // degree-day snowmelt factor (mm/degC/day)
    SnowTemp,          // snow/rain threshold temperature (degC)
    EvapCoeff,         // evaporation coefficient (mm/degC/day)
    Roughness,         // channel routing conveyance coefficient (-)
};
inline constexpr int kNumParamFields = 6;
extern const std::array<std::string, kNumParamFields> kParamFieldNames;

/// Per-cell a-priori parameter fields, all congruent.
struct CellParams {
    Raster capacity, drainage, melt_factor, snow_temp, evap_coeff, roughness;

    const Raster& field(ParamField f) const;
    void validate() const;
};

/// Read the six fields from `<dir>/<name>.asc` (capacity.asc, drainage.asc, ...).
CellParams read_params_dir(const std::string& dir);

/// One positive multiplier per calibrated parameter field (the vector being
/// optimized in the calibration objective).
struct MultiplierVector {
    std::array<double, kNumParamFields> factors{1, 1, 1, 1, 1, 1};
    double lo = 0.1;
    double hi = 10.0;

    void validate() const;
    double operator[](ParamField f) const { return factors[static_cast<int>(f)]; }
};

/**
 * D8 flow topology on a grid, with per-node upstream drainage area.
 * Built from an ESRI-coded flow-direction raster (1=E, 2=SE, 4=S, 8=SW,
 * 16=W, 32=NW, 64=N, 128=NE; 0 or nodata = outlet).
 */
struct ChannelNetwork {
    int rows = 0, cols = 0;
    double cellsize = 1.0;            // meters
    std::vector<int> downstream;      // flat cell index of receiver, -1 at outlets
    std::vector<int> topo_order;      // upstream-to-downstream ordering
    std::vector<double> area_km2;     // inclusive upstream drainage area

    int index(int r, int c) const { return r * cols + c; }
    size_t cells() const { return downstream.size(); }
    double cell_area_km2() const { return cellsize * cellsize * 1e-6; }
};

ChannelNetwork build_network(const Raster& flowdir);

struct Gage {
    std::string id;
    int row = 0, col = 0;
};

/// Read gage list CSV `gage_id,row,col`.
std::vector<Gage> read_gages_csv(const std::string& path);

/// Volume accounting for one simulation run (all in m3).
struct WaterBalance {
    double input = 0.0;           // precipitation volume
    double outlet_outflow = 0.0;  // volume leaving through outlets
    double evaporation = 0.0;
    double storage_initial = 0.0;
    double storage_final = 0.0;   // soil + snowpack + channel

    double closure_error() const;  // relative to total input
};

/// Simulated discharge per gage plus run accounting.
struct SimulatedFlow {
    std::vector<Gage> gages;
    std::vector<DailySeries> discharge;  // parallel to gages, m3/s daily means
    WaterBalance balance;
};

/**
 * Run the gridded conceptual rainfall-runoff model.
 *
 * Per cell and day: degree-day snow partition and melt, capacity-excess quick
 * runoff, linear-reservoir baseflow, temperature-scaled evaporation; runoff is
 * routed downstream with the nonlinear kinematic wave scheme.
 */
SimulatedFlow simulate_runoff(const ForcingGrid& forcing, const CellParams& params,
                              const MultiplierVector& factors, const ChannelNetwork& network,
                              const std::vector<Gage>& gages);

/**
 * Nonlinear kinematic-wave routing of per-cell lateral inflow series.
 *
 * Each cell is a reach of length `cellsize` with power-law rating
 * Q = k A_xs^(5/3); explicit sweep with adaptive internal substepping under
 * the kinematic CFL condition. Returns per-node daily mean discharge [day][cell].
 */
std::vector<std::vector<double>> route_kinematic(
    const std::vector<std::vector<double>>& lateral_inflow_m3s,
    const ChannelNetwork& network, const std::vector<double>& roughness);

/// Calibration objective: root of the sum of squared daily residuals (m3/s).
double objective_function(const DailySeries& obs, const DailySeries& sim);

struct SlsConfig {
    MultiplierVector seed;
    std::vector<double> step_schedule{1.5, 1.2, 1.05};
    int max_passes_per_step = 50;
    double improvement_tol = 1e-6;  // relative OF decrease counted as progress
    int spin_up_days = 0;           // leading days excluded from the objective
    int window_days = 0;            // 0 = use the rest of the record
};

struct SlsResult {
    MultiplierVector factors;
    double objective = 0.0;
    double seed_objective = 0.0;
    bool improved = false;  // false: no improving move found at the coarsest step
    int passes = 0;
};

/**
 * Stepwise line search (Kuzmin et al. 2008): coordinate-wise multiplicative
 * moves with a shrinking step schedule, terminating when a full pass yields
 * no relative improvement above tolerance. Factors stay clamped to bounds.
 */
SlsResult sls_minimize(const std::function<double(const MultiplierVector&)>& objective,
                       const SlsConfig& config);

/// SLS driven by the model: objective is the root total sum of squared daily
/// residuals across the calibration gages.
SlsResult calibrate_sls(const ForcingGrid& forcing, const CellParams& params,
                        const ChannelNetwork& network, const std::vector<Gage>& gages,
                        const std::vector<DailySeries>& obs, const SlsConfig& config);

}  // namespace floodcast

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "floodcast/extremes.hpp"
#include "floodcast/hydraulics.hpp"
#include "floodcast/hydromodel.hpp"
#include "floodcast/regionalize.hpp"
#include "floodcast/riskmetrics.hpp"
#include "floodcast/uncertainty.hpp"

namespace floodcast {

/// Flat INI content: section -> key -> value, insertion order preserved
/// separately for hashing.
struct IniFile {
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool has(const std::string& sec, const std::string& key) const;
    std::string get(const std::string& sec, const std::string& key,
                    const std::string& fallback = "") const;
    std::string require(const std::string& sec, const std::string& key) const;
};

IniFile parse_ini(const std::string& path);

struct PipelineConfig {
    // pipeline
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;  // 0: hardware concurrency

    // climate
    std::string forcing_dir;
    std::vector<std::string> climate_members;
    Date forcing_start, forcing_end;

    // hydromodel
    std::string params_dir, flowdir_path, gages_path;
    MultiplierVector factors;

    // extremes
    double percentile = 95.0;
    int min_separation_days = 3;
    int mcmc_iterations = 100000;
    int mcmc_burn_in = 25000;
    double return_period = 100.0;
    std::vector<int> eval_years;
    int posterior_quantiles = 10;

    // hydraulics
    std::string dem_path, inflow_nodes_path;
    std::vector<double> dem_resolutions;  // meters, multiples of the base DEM
    double channel_threshold_km2 = 1.0;
    HydraulicGeometryCoeffs hg_coeffs;
    SolverConfig solver;

    // risk (optional)
    std::string admin_raster_path, admin_attrs_path, landcover_path;
    double hazard_threshold_pct = 60.0;

    // canonical key/value view for hashing
    std::vector<std::pair<std::string, std::string>> flat;
};

/// Parse + validate; throws std::invalid_argument on an invalid config.
PipelineConfig load_pipeline_config(const std::string& path);

/// FNV-1a over the sorted section.key=value lines: stable under reordering.
std::uint64_t config_hash(const PipelineConfig& cfg);

/// Inflow node on the base DEM grid with its drainage area.
struct InflowNode {
    int row = 0, col = 0;
    double area_km2 = 0.0;
};
std::vector<InflowNode> read_inflow_nodes_csv(const std::string& path);

struct ScenarioRun {
    std::string epoch, climate, hydro, dem;
    bool ok = false;
    std::string error;
    double extent_km2 = 0.0;
    double qp_total_m3s = 0.0;  // summed inflow peaks
    bool converged = false;
    double mass_error = 0.0;
    std::string depth_path, inflow_path;
};

struct EpochOutputs {
    std::string epoch;
    bool tensor_complete = false;
    std::vector<ScenarioRun> runs;
    std::vector<MemberReturnLevel> return_levels;        // per member x gage
    std::vector<std::string> return_level_gages;         // parallel gage ids
    std::vector<ScalingFit> scaling_fits;                // per member x quantile
    std::vector<RiskRecord> risk;                        // empty without risk inputs
};

struct RunManifest {
    std::uint64_t cfg_hash = 0;
    std::uint64_t seed = 0;
    std::string output_dir;
    std::vector<std::string> climate_labels, hydro_labels, dem_labels;
    std::vector<EpochOutputs> epochs;
    std::vector<std::string> notes;  // per-stage failures, skipped reports

    bool complete() const;
};

/**
 * Execute the full projection chain for every scenario combination:
 * forcing -> runoff -> peaks-over-threshold -> MCMC -> return levels ->
 * area scaling -> inundation -> hazard/exposure -> uncertainty tensor.
 * Stage failures are recorded per combination and do not abort the run.
 */
RunManifest run_pipeline(const PipelineConfig& cfg);

/// Write every report CSV/table derivable from the manifest (idempotent).
void emit_reports(const RunManifest& manifest, const PipelineConfig& cfg);

void write_manifest(const RunManifest& manifest, const std::string& path);

/// Derive a flow-direction raster by steepest descent (flats become outlets).
Raster d8_from_dem(const Raster& dem);

/// Resample a forcing stack onto a target grid with bilinear weights.
ForcingGrid regrid_forcing(const ForcingGrid& src, const Raster& target_geom);

}  // namespace floodcast

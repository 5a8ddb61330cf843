#pragma once

#include <map>
#include <string>
#include <vector>

#include "floodcast/raster.hpp"

namespace floodcast {

struct InundationMap;  // hydraulics.hpp

/// Administrative unit (city or borough) with a cell mask on the model grid.
struct AdminUnit {
    int id = 0;
    std::string klass;  // "city" | "borough"
    std::string name;
    double population = 0.0;
    std::vector<size_t> cells;  // flat indices into the congruent grid
};

/// Development-intensity classes of the land-cover raster (cell values 0..4).
enum class DevClass : int { None = 0, Open = 1, Low = 2, Medium = 3, High = 4 };

/// Default dasymetric weights per development intensity.
std::map<DevClass, double> default_dev_weights();

struct RiskRecord {
    int unit_id = 0;
    std::string klass;
    double hazard_pct = 0.0;
    double exposure_pct = 0.0;
    std::string epoch;
};

/**
 * Build units from an integer-id mask raster plus an attribute CSV
 * `unit_id,class,name,population`. Cells whose raster value is 0 or nodata
 * belong to no unit.
 */
std::vector<AdminUnit> load_admin_units(const Raster& id_raster, const std::string& attrs_csv);

/// Percent of the unit's cells inside the wet mask.
double hazard_percent(const Raster& wet_mask, const AdminUnit& unit);

/**
 * Dasymetric disaggregation of the unit total onto its developed cells,
 * proportional to the class weights; falls back to a uniform split when the
 * unit has no developed cells. Cell populations sum to the unit total exactly.
 */
Raster disaggregate_population(const AdminUnit& unit, const Raster& landcover,
                               const std::map<DevClass, double>& weights,
                               Raster* accumulate_into = nullptr);

/// Percent of the unit's population on wet cells.
double exposure_percent(const Raster& wet_mask, const AdminUnit& unit,
                        const Raster& population);

/// Number of records per epoch with the chosen metric above the threshold.
std::map<std::string, int> exceedance_counts(const std::vector<RiskRecord>& records,
                                             double threshold_pct, bool use_exposure = false);

void write_risk_csv(const std::vector<RiskRecord>& records, const std::string& path);
std::vector<RiskRecord> read_risk_csv(const std::string& path);

}  // namespace floodcast

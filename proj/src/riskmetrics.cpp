#include "floodcast/riskmetrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "floodcast/series.hpp"

namespace floodcast {

std::map<DevClass, double> default_dev_weights() {
    return {{DevClass::Open, 0.1},
            {DevClass::Low, 0.35},
            {DevClass::Medium, 0.65},
            {DevClass::High, 1.0}};
}

std::vector<AdminUnit> load_admin_units(const Raster& id_raster,
                                        const std::string& attrs_csv) {
    std::ifstream in(attrs_csv);
    if (!in) throw std::runtime_error("cannot open admin attributes: " + attrs_csv);
    std::string line;
    std::getline(in, line);  // header: unit_id,class,name,population

    std::map<int, AdminUnit> units;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        auto f = split_csv_line(line);
        if (f.size() < 4) throw std::runtime_error("bad admin row: " + line);
        AdminUnit u;
        u.id = std::stoi(f[0]);
        u.klass = f[1];
        u.name = f[2];
        u.population = std::stod(f[3]);
        if (u.population < 0.0)
            throw std::runtime_error("negative population for unit " + f[0]);
        units[u.id] = std::move(u);
    }

    for (size_t i = 0; i < id_raster.size(); ++i) {
        double v = id_raster.data[i];
        if (v == id_raster.nodata || v == 0.0) continue;
        int id = static_cast<int>(v);
        auto it = units.find(id);
        if (it == units.end())
            throw std::runtime_error("mask id " + std::to_string(id) + " missing from attributes");
        it->second.cells.push_back(i);
    }

    std::vector<AdminUnit> out;
    out.reserve(units.size());
    for (auto& [id, u] : units) out.push_back(std::move(u));  // sorted by id
    return out;
}

double hazard_percent(const Raster& wet_mask, const AdminUnit& unit) {
    if (unit.cells.empty())
        throw std::invalid_argument("hazard_percent: unit has an empty mask");
    size_t wet = 0;
    for (size_t i : unit.cells)
        if (wet_mask.data[i] > 0.0) ++wet;
    return 100.0 * static_cast<double>(wet) / static_cast<double>(unit.cells.size());
}

Raster disaggregate_population(const AdminUnit& unit, const Raster& landcover,
                               const std::map<DevClass, double>& weights,
                               Raster* accumulate_into) {
    Raster local = landcover.like(0.0);
    Raster& out = accumulate_into ? *accumulate_into : local;
    if (!out.congruent(landcover))
        throw std::invalid_argument("disaggregate_population: raster geometry mismatch");
    if (unit.cells.empty())
        throw std::invalid_argument("disaggregate_population: unit has an empty mask");

    std::vector<std::pair<size_t, double>> cell_weights;
    double total_w = 0.0;
    for (size_t i : unit.cells) {
        int cls = static_cast<int>(landcover.data[i]);
        if (cls <= static_cast<int>(DevClass::None) || cls > static_cast<int>(DevClass::High))
            continue;
        auto it = weights.find(static_cast<DevClass>(cls));
        double w = it != weights.end() ? it->second : 0.0;
        if (w > 0.0) {
            cell_weights.push_back({i, w});
            total_w += w;
        }
    }
    if (cell_weights.empty()) {
        // no developed cells: uniform fallback over the whole unit
        for (size_t i : unit.cells) cell_weights.push_back({i, 1.0});
        total_w = static_cast<double>(unit.cells.size());
    }
    if (total_w <= 0.0) throw std::invalid_argument("disaggregate_population: zero weights");

    // proportional split; the final cell absorbs the rounding residual so a
    // straight sum over the unit's cells lands exactly on the total
    const size_t n = cell_weights.size();
    double assigned = 0.0;
    for (size_t k = 0; k + 1 < n; ++k) {
        double share = unit.population * cell_weights[k].second / total_w;
        out.data[cell_weights[k].first] += share;
        assigned += share;
    }
    double last = unit.population - assigned;
    for (int it = 0; it < 64 && assigned + last != unit.population; ++it)
        last += unit.population - (assigned + last);
    if (last < 0.0) last = 0.0;
    out.data[cell_weights[n - 1].first] += last;
    return out;
}

double exposure_percent(const Raster& wet_mask, const AdminUnit& unit,
                        const Raster& population) {
    if (!wet_mask.congruent(population))
        throw std::invalid_argument("exposure_percent: raster geometry mismatch");
    if (unit.population <= 0.0)
        throw std::invalid_argument("exposure_percent: unit has zero population");
    double exposed = 0.0;
    for (size_t i : unit.cells)
        if (wet_mask.data[i] > 0.0) exposed += population.data[i];
    return 100.0 * exposed / unit.population;
}

std::map<std::string, int> exceedance_counts(const std::vector<RiskRecord>& records,
                                             double threshold_pct, bool use_exposure) {
    std::map<std::string, int> counts;
    for (const auto& r : records) {
        double metric = use_exposure ? r.exposure_pct : r.hazard_pct;
        if (!counts.count(r.epoch)) counts[r.epoch] = 0;
        if (metric > threshold_pct) ++counts[r.epoch];
    }
    return counts;
}

void write_risk_csv(const std::vector<RiskRecord>& records, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write risk records: " + path);
    std::fprintf(f, "unit_id,class,hazard_pct,exposure_pct,epoch\n");
    for (const auto& r : records)
        std::fprintf(f, "%d,%s,%.10g,%.10g,%s\n", r.unit_id, r.klass.c_str(), r.hazard_pct,
                     r.exposure_pct, r.epoch.c_str());
    std::fclose(f);
}

std::vector<RiskRecord> read_risk_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open risk records: " + path);
    std::string line;
    std::getline(in, line);
    std::vector<RiskRecord> out;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        auto f = split_csv_line(line);
        if (f.size() < 5) throw std::runtime_error("bad risk row: " + line);
        out.push_back({std::stoi(f[0]), f[1], std::stod(f[2]), std::stod(f[3]), f[4]});
    }
    return out;
}

}  // namespace floodcast

#include "floodcast/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "floodcast/stats.hpp"

namespace fs = std::filesystem;

namespace floodcast {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    for (const auto& f : split_csv_line(s))
        if (!f.empty()) out.push_back(f);
    return out;
}

}  // namespace

bool IniFile::has(const std::string& sec, const std::string& key) const {
    auto it = sections.find(sec);
    return it != sections.end() && it->second.count(key) > 0;
}

std::string IniFile::get(const std::string& sec, const std::string& key,
                         const std::string& fallback) const {
    auto it = sections.find(sec);
    if (it == sections.end()) return fallback;
    auto kt = it->second.find(key);
    return kt == it->second.end() ? fallback : kt->second;
}

std::string IniFile::require(const std::string& sec, const std::string& key) const {
    if (!has(sec, key))
        throw std::invalid_argument("config missing [" + sec + "] " + key);
    return get(sec, key);
}

IniFile parse_ini(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config: " + path);
    IniFile ini;
    std::string line, section;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            ini.sections[section];
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("bad config line: " + line);
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("bad config line: " + line);
        ini.sections[section][key] = value;
    }
    return ini;
}

std::vector<InflowNode> read_inflow_nodes_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open inflow nodes: " + path);
    std::string line;
    std::getline(in, line);  // header: node_row,node_col,area_km2
    std::vector<InflowNode> out;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() < 3) throw std::runtime_error("bad inflow node row: " + line);
        out.push_back({std::stoi(f[0]), std::stoi(f[1]), std::stod(f[2])});
    }
    if (out.empty()) throw std::runtime_error("no inflow nodes in " + path);
    return out;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    IniFile ini = parse_ini(path);
    PipelineConfig cfg;

    const fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        fs::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    cfg.output_dir = resolve(ini.get("pipeline", "output_dir", "out"));
    if (ini.has("pipeline", "seed")) {
        cfg.seed = std::stoull(ini.require("pipeline", "seed"));
        cfg.seed_set = true;
    }
    cfg.threads = std::stoi(ini.get("pipeline", "threads", "0"));

    cfg.forcing_dir = resolve(ini.require("climate", "forcing_dir"));
    cfg.climate_members = split_list(ini.require("climate", "members"));
    cfg.forcing_start = parse_date(ini.require("climate", "forcing_start"));
    cfg.forcing_end = parse_date(ini.require("climate", "forcing_end"));
    if (cfg.climate_members.empty())
        throw std::invalid_argument("config: no climate members");

    cfg.params_dir = resolve(ini.require("hydromodel", "params_dir"));
    cfg.flowdir_path = resolve(ini.require("hydromodel", "flowdir"));
    cfg.gages_path = resolve(ini.require("hydromodel", "gages"));
    if (ini.has("hydromodel", "factors")) {
        auto f = split_list(ini.get("hydromodel", "factors"));
        if (f.size() != kNumParamFields)
            throw std::invalid_argument("config: factors needs 6 values");
        for (int i = 0; i < kNumParamFields; ++i)
            cfg.factors.factors[i] = std::stod(f[i]);
    }
    cfg.factors.lo = std::stod(ini.get("hydromodel", "factor_lo", "0.1"));
    cfg.factors.hi = std::stod(ini.get("hydromodel", "factor_hi", "10"));

    cfg.percentile = std::stod(ini.get("extremes", "percentile", "95"));
    cfg.min_separation_days = std::stoi(ini.get("extremes", "min_separation_days", "3"));
    cfg.mcmc_iterations = std::stoi(ini.get("extremes", "iterations", "100000"));
    cfg.mcmc_burn_in = std::stoi(ini.get("extremes", "burn_in", "25000"));
    cfg.return_period = std::stod(ini.get("extremes", "return_period", "100"));
    for (const auto& y : split_list(ini.require("extremes", "eval_years")))
        cfg.eval_years.push_back(std::stoi(y));
    if (cfg.eval_years.empty()) throw std::invalid_argument("config: no eval years");
    cfg.posterior_quantiles = std::stoi(ini.get("extremes", "posterior_quantiles", "10"));
    if (cfg.posterior_quantiles < 1)
        throw std::invalid_argument("config: posterior_quantiles must be >= 1");

    cfg.dem_path = resolve(ini.require("hydraulics", "dem"));
    cfg.inflow_nodes_path = resolve(ini.require("hydraulics", "inflow_nodes"));
    for (const auto& r : split_list(ini.require("hydraulics", "dem_resolutions")))
        cfg.dem_resolutions.push_back(std::stod(r));
    if (cfg.dem_resolutions.empty())
        throw std::invalid_argument("config: no DEM resolutions");
    cfg.channel_threshold_km2 =
        std::stod(ini.get("hydraulics", "channel_threshold_km2", "1.0"));
    cfg.hg_coeffs.a_w = std::stod(ini.get("hydraulics", "width_coeff", "2.3"));
    cfg.hg_coeffs.b_w = std::stod(ini.get("hydraulics", "width_exp", "0.5"));
    cfg.hg_coeffs.a_d = std::stod(ini.get("hydraulics", "depth_coeff", "0.27"));
    cfg.hg_coeffs.b_d = std::stod(ini.get("hydraulics", "depth_exp", "0.3"));
    cfg.solver.manning_n = std::stod(ini.get("hydraulics", "manning_n", "0.045"));
    cfg.solver.cfl = std::stod(ini.get("hydraulics", "cfl", "0.7"));
    cfg.solver.h_dry = std::stod(ini.get("hydraulics", "h_dry", "0.01"));
    cfg.solver.max_dt = std::stod(ini.get("hydraulics", "max_dt", "10"));
    cfg.solver.convergence_window =
        std::stoi(ini.get("hydraulics", "convergence_window", "1000"));
    cfg.solver.convergence_tol =
        std::stod(ini.get("hydraulics", "convergence_tol", "0.001"));
    cfg.solver.max_sim_time =
        std::stod(ini.get("hydraulics", "max_sim_time", "172800"));
    for (const auto& e : split_list(ini.get("hydraulics", "open_edges", "south"))) {
        if (e == "north") cfg.solver.open_edges.push_back(Edge::North);
        else if (e == "east") cfg.solver.open_edges.push_back(Edge::East);
        else if (e == "south") cfg.solver.open_edges.push_back(Edge::South);
        else if (e == "west") cfg.solver.open_edges.push_back(Edge::West);
        else throw std::invalid_argument("config: unknown edge " + e);
    }

    cfg.admin_raster_path = ini.has("risk", "admin_raster")
                                ? resolve(ini.get("risk", "admin_raster")) : "";
    cfg.admin_attrs_path = ini.has("risk", "admin_attrs")
                               ? resolve(ini.get("risk", "admin_attrs")) : "";
    cfg.landcover_path = ini.has("risk", "landcover")
                             ? resolve(ini.get("risk", "landcover")) : "";
    cfg.hazard_threshold_pct = std::stod(ini.get("risk", "hazard_threshold_pct", "60"));

    for (const auto& [sec, kv] : ini.sections)
        for (const auto& [k, v] : kv) cfg.flat.push_back({sec + "." + k, v});

    // referenced inputs must exist
    for (const std::string& p :
         {cfg.forcing_dir, cfg.params_dir, cfg.flowdir_path, cfg.gages_path, cfg.dem_path,
          cfg.inflow_nodes_path}) {
        if (!fs::exists(p))
            throw std::invalid_argument("config: missing input " + p);
    }
    for (const std::string& p :
         {cfg.admin_raster_path, cfg.admin_attrs_path, cfg.landcover_path}) {
        if (!p.empty() && !fs::exists(p))
            throw std::invalid_argument("config: missing input " + p);
    }
    for (const auto& m : cfg.climate_members)
        if (!fs::exists(fs::path(cfg.forcing_dir) / m))
            throw std::invalid_argument("config: missing forcing member dir " + m);
    return cfg;
}

std::uint64_t config_hash(const PipelineConfig& cfg) {
    std::vector<std::string> lines;
    lines.reserve(cfg.flat.size());
    for (const auto& [k, v] : cfg.flat) lines.push_back(k + "=" + v);
    std::sort(lines.begin(), lines.end());
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (const auto& l : lines) {
        for (char c : l) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        h ^= '\n';
        h *= 1099511628211ull;
    }
    return h;
}

Raster d8_from_dem(const Raster& dem) {
    static const int dr[8] = {0, 1, 1, 1, 0, -1, -1, -1};
    static const int dc[8] = {1, 1, 0, -1, -1, -1, 0, 1};
    static const int code[8] = {1, 2, 4, 8, 16, 32, 64, 128};

    Raster fd = dem.like(0.0);
    for (int r = 0; r < dem.rows; ++r) {
        for (int c = 0; c < dem.cols; ++c) {
            if (dem.is_nodata(r, c)) {
                fd.at(r, c) = fd.nodata;
                continue;
            }
            double z = dem.at(r, c);
            double best = 0.0;
            int best_code = 0;
            for (int k = 0; k < 8; ++k) {
                int rr = r + dr[k], cc = c + dc[k];
                if (!dem.in_bounds(rr, cc) || dem.is_nodata(rr, cc)) continue;
                double dist = (dr[k] != 0 && dc[k] != 0) ? M_SQRT2 : 1.0;
                double drop = (z - dem.at(rr, cc)) / dist;
                if (drop > best) {
                    best = drop;
                    best_code = code[k];
                }
            }
            fd.at(r, c) = best_code;  // 0: no lower neighbor, treated as outlet
        }
    }
    return fd;
}

ForcingGrid regrid_forcing(const ForcingGrid& src, const Raster& target_geom) {
    if (src.geom.congruent(target_geom)) return src;
    ForcingGrid out;
    out.geom = target_geom.like(0.0);
    out.start_day = src.start_day;
    Raster tmp = src.geom.like(0.0);
    for (size_t d = 0; d < src.days(); ++d) {
        tmp.data = src.precip[d];
        out.precip.push_back(regrid_bilinear(tmp, target_geom).data);
        tmp.data = src.temp[d];
        out.temp.push_back(regrid_bilinear(tmp, target_geom).data);
    }
    return out;
}

bool RunManifest::complete() const {
    for (const auto& ep : epochs)
        if (!ep.tensor_complete) return false;
    return true;
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string dem_label(double res) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%gm", res);
    return buf;
}

std::string hydro_label(double p) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "q%g", 100.0 * p);
    return buf;
}

/// Per-gage posterior fit for one climate member.
struct GageFit {
    bool ok = false;
    std::string error;
    double threshold = 0.0;
    double area_km2 = 0.0;
    std::vector<GpdParams> draws;
};

/// DEM variant shared across scenario combinations at one resolution.
struct DemVariant {
    double resolution = 0.0;
    int factor = 1;
    Raster dem;
    ChannelGeometry channels;
};

void run_parallel(std::vector<std::function<void()>>& jobs, int threads) {
    if (jobs.empty()) return;
    unsigned n = threads > 0 ? static_cast<unsigned>(threads)
                             : std::max(1u, std::thread::hardware_concurrency());
    n = std::min<unsigned>(n, jobs.size());
    if (n <= 1) {
        for (auto& j : jobs) j();
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n; ++w) {
        pool.emplace_back([&] {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= jobs.size()) break;
                jobs[i]();
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

RunManifest run_pipeline(const PipelineConfig& cfg) {
    if (!cfg.seed_set)
        throw std::invalid_argument("pipeline: seed is required (config [pipeline] seed)");
    fs::create_directories(cfg.output_dir);

    RunManifest man;
    man.cfg_hash = config_hash(cfg);
    man.seed = cfg.seed;
    man.output_dir = cfg.output_dir;
    man.climate_labels = cfg.climate_members;

    const int nq = cfg.posterior_quantiles;
    std::vector<double> plevels(nq);
    for (int j = 0; j < nq; ++j) plevels[j] = (j + 0.5) / nq;
    for (double p : plevels) man.hydro_labels.push_back(hydro_label(p));
    for (double r : cfg.dem_resolutions) man.dem_labels.push_back(dem_label(r));

    // ---- static inputs ----
    Raster flowdir = read_ascii_grid(cfg.flowdir_path);
    ChannelNetwork hyd_net = build_network(flowdir);
    CellParams params = read_params_dir(cfg.params_dir);
    std::vector<Gage> gages = read_gages_csv(cfg.gages_path);
    if (gages.empty()) throw std::invalid_argument("pipeline: no gages");
    Raster base_dem = read_ascii_grid(cfg.dem_path);
    std::vector<InflowNode> inflow_nodes = read_inflow_nodes_csv(cfg.inflow_nodes_path);

    // DEM variants per resolution (coarsened from the base surface)
    const double base_res = base_dem.cellsize;
    std::vector<DemVariant> variants;
    for (double res : cfg.dem_resolutions) {
        double f = res / base_res;
        int factor = static_cast<int>(std::lround(f));
        if (factor < 1 || std::abs(f - factor) > 1e-9)
            throw std::invalid_argument("pipeline: resolution " + dem_label(res) +
                                        " is not an integer multiple of the base DEM");
        DemVariant v;
        v.resolution = res;
        v.factor = factor;
        v.dem = coarsen(base_dem, factor);
        ChannelNetwork net = build_network(d8_from_dem(v.dem));
        v.channels = estimate_bathymetry(net, v.dem, cfg.channel_threshold_km2, cfg.hg_coeffs);
        variants.push_back(std::move(v));
    }
    size_t finest = 0;
    for (size_t i = 1; i < variants.size(); ++i)
        if (variants[i].resolution < variants[finest].resolution) finest = i;

    // optional risk inputs (on the base DEM grid)
    const bool have_risk = !cfg.admin_raster_path.empty() && !cfg.admin_attrs_path.empty() &&
                           !cfg.landcover_path.empty();
    std::vector<AdminUnit> units;
    Raster population;
    if (have_risk) {
        Raster admin = read_ascii_grid(cfg.admin_raster_path);
        Raster landcover = read_ascii_grid(cfg.landcover_path);
        if (!admin.congruent(base_dem) || !landcover.congruent(base_dem))
            throw std::invalid_argument("pipeline: risk rasters not congruent with DEM");
        units = load_admin_units(admin, cfg.admin_attrs_path);
        population = landcover.like(0.0);
        auto weights = default_dev_weights();
        for (const auto& u : units)
            disaggregate_population(u, landcover, weights, &population);
    }

    // ---- hydrology: per member simulation + per gage MCMC ----
    const size_t nm = cfg.climate_members.size();
    const size_t ng = gages.size();
    std::vector<std::vector<GageFit>> fits(nm, std::vector<GageFit>(ng));

    for (size_t m = 0; m < nm; ++m) {
        const std::string& member = cfg.climate_members[m];
        SimulatedFlow flow;
        bool member_ok = true;
        try {
            ForcingGrid forcing = read_forcing_dir(
                (fs::path(cfg.forcing_dir) / member).string(), cfg.forcing_start,
                cfg.forcing_end);
            forcing = regrid_forcing(forcing, params.capacity);
            flow = simulate_runoff(forcing, params, cfg.factors, hyd_net, gages);
        } catch (const std::exception& e) {
            member_ok = false;
            man.notes.push_back("member " + member + " simulation failed: " + e.what());
            for (size_t g = 0; g < ng; ++g) fits[m][g].error = e.what();
        }
        if (!member_ok) continue;
        for (size_t g = 0; g < ng; ++g) {
            GageFit& fit = fits[m][g];
            try {
                ExceedanceSet set = select_exceedances(flow.discharge[g], cfg.percentile,
                                                       cfg.min_separation_days);
                if (set.events.size() < 20)
                    man.notes.push_back("member " + member + " gage " + gages[g].id +
                                        ": only " + std::to_string(set.events.size()) +
                                        " events, proceeding");
                McmcConfig mc;
                mc.iterations = cfg.mcmc_iterations;
                mc.burn_in = cfg.mcmc_burn_in;
                mc.seed = cfg.seed + m * 1000 + g;
                mc.allow_few_events = true;
                PosteriorSample post = fit_mcmc(set, PriorSpec::defaults_for(set), mc);
                fit.threshold = set.threshold;
                fit.area_km2 = hyd_net.area_km2[hyd_net.index(gages[g].row, gages[g].col)];
                fit.draws = std::move(post.draws);
                fit.ok = true;
            } catch (const std::exception& e) {
                fit.error = e.what();
                man.notes.push_back("member " + member + " gage " + gages[g].id +
                                    " fit failed: " + e.what());
            }
        }
    }

    const int y0 = cfg.forcing_start.year;
    const int y1 = cfg.forcing_end.year;

    // ---- per epoch: return levels, scaling, inundation, risk ----
    for (int year : cfg.eval_years) {
        EpochOutputs ep;
        ep.epoch = std::to_string(year);
        const double t_eval = (year - y0) / std::max(1.0, static_cast<double>(y1 - y0));

        // per member x gage return-level posterior
        // member quantile peaks: qp[m][j][g]
        std::vector<std::vector<std::vector<double>>> qp(
            nm, std::vector<std::vector<double>>(nq, std::vector<double>(ng, 0.0)));
        std::vector<std::vector<char>> fit_ok(nm, std::vector<char>(ng, 0));
        std::vector<std::vector<double>> mean_level(nm, std::vector<double>(ng, 0.0));

        for (size_t m = 0; m < nm; ++m) {
            for (size_t g = 0; g < ng; ++g) {
                MemberReturnLevel rl;
                rl.member = cfg.climate_members[m];
                ep.return_level_gages.push_back(gages[g].id);
                const GageFit& fit = fits[m][g];
                if (!fit.ok) {
                    rl.error = fit.error;
                    ep.return_levels.push_back(rl);
                    continue;
                }
                std::vector<double> levels;
                levels.reserve(fit.draws.size());
                for (const auto& d : fit.draws) {
                    try {
                        levels.push_back(
                            return_level(d, fit.threshold, cfg.return_period, t_eval));
                    } catch (const std::invalid_argument&) {
                    }
                }
                if (levels.empty()) {
                    rl.error = "no valid return-level draws";
                    ep.return_levels.push_back(rl);
                    continue;
                }
                rl.ok = true;
                rl.mean = mean(levels);
                rl.min = *std::min_element(levels.begin(), levels.end());
                rl.max = *std::max_element(levels.begin(), levels.end());
                rl.q05 = quantile_linear(levels, 0.05);
                rl.q95 = quantile_linear(levels, 0.95);
                ep.return_levels.push_back(rl);
                fit_ok[m][g] = 1;
                mean_level[m][g] = rl.mean;
                for (int j = 0; j < nq; ++j)
                    qp[m][j][g] = quantile_linear(levels, plevels[j]);
            }
        }

        // scaling fit per (member, quantile)
        std::vector<std::vector<ScalingFit>> sfits(nm, std::vector<ScalingFit>(nq));
        std::vector<std::vector<char>> sfit_ok(nm, std::vector<char>(nq, 0));
        for (size_t m = 0; m < nm; ++m) {
            bool all = true;
            for (size_t g = 0; g < ng; ++g)
                if (!fit_ok[m][g]) all = false;
            for (int j = 0; j < nq; ++j) {
                if (!all) continue;
                std::vector<GagePeak> pts;
                for (size_t g = 0; g < ng; ++g)
                    pts.push_back({gages[g].id, fits[m][g].area_km2, qp[m][j][g], ep.epoch});
                try {
                    sfits[m][j] = fit_scaling(pts);
                    sfits[m][j].epoch = ep.epoch + "/" + cfg.climate_members[m] + "/" +
                                        man.hydro_labels[j];
                    sfit_ok[m][j] = 1;
                    ep.scaling_fits.push_back(sfits[m][j]);
                } catch (const std::exception& e) {
                    man.notes.push_back("scaling fit failed (" + ep.epoch + "," +
                                        cfg.climate_members[m] + "," + man.hydro_labels[j] +
                                        "): " + e.what());
                }
            }
        }

        // hydraulic scenario runs
        ep.runs.resize(nm * nq * variants.size());
        std::vector<std::function<void()>> jobs;
        for (size_t m = 0; m < nm; ++m) {
            for (int j = 0; j < nq; ++j) {
                // per-combination inflow file (shared across DEM resolutions)
                std::string inflow_path;
                std::vector<Inflow> base_inflows;
                if (sfit_ok[m][j]) {
                    for (const auto& node : inflow_nodes)
                        base_inflows.push_back(
                            {node.row, node.col,
                             predict_peak(sfits[m][j], node.area_km2)});
                    inflow_path = cfg.output_dir + "/inflows_" + ep.epoch + "_" +
                                  cfg.climate_members[m] + "_" + man.hydro_labels[j] + ".csv";
                    write_inflows_csv(base_inflows, inflow_path);
                }
                for (size_t r = 0; r < variants.size(); ++r) {
                    size_t slot = (m * nq + j) * variants.size() + r;
                    ScenarioRun& run = ep.runs[slot];
                    run.epoch = ep.epoch;
                    run.climate = cfg.climate_members[m];
                    run.hydro = man.hydro_labels[j];
                    run.dem = man.dem_labels[r];
                    run.inflow_path = inflow_path;
                    if (!sfit_ok[m][j]) {
                        run.error = "upstream stage failed";
                        continue;
                    }
                    const DemVariant* v = &variants[r];
                    std::vector<Inflow> inflows;
                    double qp_total = 0.0;
                    for (const auto& bi : base_inflows) {
                        inflows.push_back(
                            {bi.row / v->factor, bi.col / v->factor, bi.q_m3s});
                        qp_total += bi.q_m3s;
                    }
                    run.qp_total_m3s = qp_total;
                    std::string depth_path = cfg.output_dir + "/depth_" + ep.epoch + "_" +
                                             run.climate + "_" + run.hydro + "_" + run.dem +
                                             ".asc";
                    jobs.push_back([&run, v, inflows = std::move(inflows), depth_path,
                                    &cfg]() {
                        try {
                            FlowSolver solver(v->dem, v->channels, cfg.solver);
                            InundationMap map = solver.run_to_steady(inflows);
                            write_ascii_grid(map.depth, depth_path);
                            run.extent_km2 = map.area_km2;
                            run.converged = map.converged;
                            run.mass_error = map.ledger.error();
                            run.depth_path = depth_path;
                            run.ok = true;
                        } catch (const std::exception& e) {
                            run.error = e.what();
                        }
                    });
                }
            }
        }
        run_parallel(jobs, cfg.threads);

        ep.tensor_complete = std::all_of(ep.runs.begin(), ep.runs.end(),
                                         [](const ScenarioRun& r) { return r.ok; });
        if (!ep.tensor_complete)
            man.notes.push_back("epoch " + ep.epoch +
                                ": tensor incomplete, uncertainty stage skipped");

        // risk reference: ensemble-mean peaks at the base resolution
        if (have_risk) {
            bool all_fit = true;
            for (size_t m = 0; m < nm; ++m)
                for (size_t g = 0; g < ng; ++g)
                    if (!fit_ok[m][g]) all_fit = false;
            if (all_fit) {
                try {
                    std::vector<GagePeak> pts;
                    for (size_t g = 0; g < ng; ++g) {
                        double s = 0.0;
                        for (size_t m = 0; m < nm; ++m) s += mean_level[m][g];
                        pts.push_back({gages[g].id, fits[0][g].area_km2,
                                       s / static_cast<double>(nm), ep.epoch});
                    }
                    ScalingFit ref_fit = fit_scaling(pts);
                    ref_fit.epoch = ep.epoch + "/reference";
                    ep.scaling_fits.push_back(ref_fit);

                    std::vector<Inflow> inflows;
                    for (const auto& node : inflow_nodes)
                        inflows.push_back(
                            {node.row, node.col, predict_peak(ref_fit, node.area_km2)});
                    const DemVariant& v = variants[finest];
                    std::vector<Inflow> mapped;
                    for (const auto& bi : inflows)
                        mapped.push_back({bi.row / v.factor, bi.col / v.factor, bi.q_m3s});
                    FlowSolver solver(v.dem, v.channels, cfg.solver);
                    InundationMap map = solver.run_to_steady(mapped);
                    std::string ref_depth =
                        cfg.output_dir + "/depth_" + ep.epoch + "_reference.asc";
                    write_ascii_grid(map.depth, ref_depth);
                    // risk metrics on the base grid (finest must be the base for masks)
                    Raster wet = map.wet_mask;
                    if (!wet.congruent(base_dem))
                        throw std::runtime_error(
                            "risk masks require the base DEM resolution in dem_resolutions");
                    for (const auto& u : units) {
                        RiskRecord rec;
                        rec.unit_id = u.id;
                        rec.klass = u.klass;
                        rec.epoch = ep.epoch;
                        rec.hazard_pct = hazard_percent(wet, u);
                        rec.exposure_pct =
                            u.population > 0.0 ? exposure_percent(wet, u, population) : 0.0;
                        ep.risk.push_back(rec);
                    }
                } catch (const std::exception& e) {
                    man.notes.push_back("epoch " + ep.epoch +
                                        " risk stage failed: " + e.what());
                }
            } else {
                man.notes.push_back("epoch " + ep.epoch +
                                    " risk stage skipped: member fits incomplete");
            }
        }

        man.epochs.push_back(std::move(ep));
    }

    emit_reports(man, cfg);
    write_manifest(man, cfg.output_dir + "/manifest.txt");
    return man;
}

namespace {

ProjectionTensor tensor_from_runs(const RunManifest& man, const EpochOutputs& ep) {
    ProjectionTensor t;
    t.stage_names = {"climate", "hydrology", "hydraulic"};
    t.labels = {man.climate_labels, man.hydro_labels, man.dem_labels};
    t.values.reserve(ep.runs.size());
    for (const auto& r : ep.runs) t.values.push_back(r.extent_km2);
    t.validate();
    return t;
}

}  // namespace

void emit_reports(const RunManifest& man, const PipelineConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    const std::string out = cfg.output_dir;

    std::vector<RiskRecord> all_risk;
    for (const auto& ep : man.epochs) {
        // return levels
        {
            std::FILE* f =
                std::fopen((out + "/return_levels_" + ep.epoch + ".csv").c_str(), "w");
            if (!f) throw std::runtime_error("cannot write return levels");
            std::fprintf(f, "member,gage,mean,q05,q95,min,max\n");
            for (size_t i = 0; i < ep.return_levels.size(); ++i) {
                const auto& r = ep.return_levels[i];
                const std::string& gage =
                    i < ep.return_level_gages.size() ? ep.return_level_gages[i] : "";
                if (r.ok)
                    std::fprintf(f, "%s,%s,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                                 r.member.c_str(), gage.c_str(), r.mean, r.q05, r.q95,
                                 r.min, r.max);
                else
                    std::fprintf(f, "%s,%s,failed:%s,,,,\n", r.member.c_str(), gage.c_str(),
                                 r.error.c_str());
            }
            std::fclose(f);
        }
        write_scaling_fits_csv(ep.scaling_fits, out + "/scaling_fits_" + ep.epoch + ".csv");

        if (ep.tensor_complete) {
            ProjectionTensor tensor = tensor_from_runs(man, ep);
            write_tensor_csv(tensor, out + "/tensor_" + ep.epoch + ".csv");
            for (Measure m : {Measure::Range, Measure::StdDev}) {
                DecompositionReport rep = decompose(tensor, m);
                std::string stem =
                    out + "/decomposition_" + ep.epoch + "_" + measure_name(m);
                write_decomposition_csv(rep, stem + ".csv");
                std::ofstream txt(stem + ".txt");
                txt << format_decomposition_table(rep);
            }
        }
        if (!ep.risk.empty()) {
            write_risk_csv(ep.risk, out + "/risk_" + ep.epoch + ".csv");
            all_risk.insert(all_risk.end(), ep.risk.begin(), ep.risk.end());
        }
    }

    // threshold exceedance counts per epoch
    {
        std::FILE* f = std::fopen((out + "/threshold_counts.csv").c_str(), "w");
        if (!f) throw std::runtime_error("cannot write threshold counts");
        std::fprintf(f, "epoch,threshold_pct,hazard_count,exposure_count\n");
        auto hc = exceedance_counts(all_risk, cfg.hazard_threshold_pct, false);
        auto ec = exceedance_counts(all_risk, cfg.hazard_threshold_pct, true);
        for (const auto& [epoch, n] : hc)
            std::fprintf(f, "%s,%.10g,%d,%d\n", epoch.c_str(), cfg.hazard_threshold_pct, n,
                         ec[epoch]);
        std::fclose(f);
    }

    // hazard-vs-exposure long format
    {
        std::FILE* f = std::fopen((out + "/plot_hazard_exposure.csv").c_str(), "w");
        if (!f) throw std::runtime_error("cannot write hazard/exposure plot data");
        std::fprintf(f, "epoch,unit_id,class,hazard_pct,exposure_pct\n");
        for (const auto& r : all_risk)
            std::fprintf(f, "%s,%d,%s,%.10g,%.10g\n", r.epoch.c_str(), r.unit_id,
                         r.klass.c_str(), r.hazard_pct, r.exposure_pct);
        std::fclose(f);
    }

    // epoch-pair rank scatter data
    {
        std::FILE* f = std::fopen((out + "/plot_rank_scatter.csv").c_str(), "w");
        if (!f) throw std::runtime_error("cannot write rank scatter data");
        std::fprintf(f, "unit_id,class,metric,epoch_a,value_a,epoch_b,value_b\n");
        for (size_t e = 0; e + 1 < man.epochs.size(); ++e) {
            const auto& a = man.epochs[e].risk;
            const auto& b = man.epochs[e + 1].risk;
            for (const auto& ra : a) {
                for (const auto& rb : b) {
                    if (ra.unit_id != rb.unit_id) continue;
                    std::fprintf(f, "%d,%s,hazard,%s,%.10g,%s,%.10g\n", ra.unit_id,
                                 ra.klass.c_str(), ra.epoch.c_str(), ra.hazard_pct,
                                 rb.epoch.c_str(), rb.hazard_pct);
                    std::fprintf(f, "%d,%s,exposure,%s,%.10g,%s,%.10g\n", ra.unit_id,
                                 ra.klass.c_str(), ra.epoch.c_str(), ra.exposure_pct,
                                 rb.epoch.c_str(), rb.exposure_pct);
                }
            }
        }
        std::fclose(f);
    }
}

void write_manifest(const RunManifest& man, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write manifest: " + path);
    std::fprintf(f, "floodcast pipeline manifest\n");
    std::fprintf(f, "config_hash %016llx\n",
                 static_cast<unsigned long long>(man.cfg_hash));
    std::fprintf(f, "seed %llu\n", static_cast<unsigned long long>(man.seed));
    std::fprintf(f, "stages climate,hydrology,hydraulic\n");
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
        return s;
    };
    std::fprintf(f, "climate_members %s\n", join(man.climate_labels).c_str());
    std::fprintf(f, "hydro_scenarios %s\n", join(man.hydro_labels).c_str());
    std::fprintf(f, "dem_resolutions %s\n", join(man.dem_labels).c_str());
    std::fprintf(f, "status %s\n", man.complete() ? "complete" : "partial");
    for (const auto& ep : man.epochs) {
        for (const auto& r : ep.runs) {
            if (r.ok)
                std::fprintf(f,
                             "run epoch=%s climate=%s hydro=%s dem=%s status=ok "
                             "extent_km2=%s qp_total_m3s=%s converged=%d mass_error=%s "
                             "depth=%s\n",
                             r.epoch.c_str(), r.climate.c_str(), r.hydro.c_str(),
                             r.dem.c_str(), format_double(r.extent_km2).c_str(),
                             format_double(r.qp_total_m3s).c_str(), r.converged ? 1 : 0,
                             format_double(r.mass_error).c_str(),
                             fs::path(r.depth_path).filename().string().c_str());
            else
                std::fprintf(f, "run epoch=%s climate=%s hydro=%s dem=%s status=failed "
                                "error=%s\n",
                             r.epoch.c_str(), r.climate.c_str(), r.hydro.c_str(),
                             r.dem.c_str(), r.error.c_str());
        }
        std::fprintf(f, "epoch %s tensor=%s risk_units=%zu\n", ep.epoch.c_str(),
                     ep.tensor_complete ? "complete" : "incomplete", ep.risk.size());
    }
    for (const auto& n : man.notes) std::fprintf(f, "note %s\n", n.c_str());
    std::fclose(f);
}

}  // namespace floodcast

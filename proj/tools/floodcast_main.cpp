#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "floodcast/pipeline.hpp"
#include "floodcast/stats.hpp"

namespace fs = std::filesystem;
using namespace floodcast;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitPartial = 2;

std::vector<double> parse_factors(const std::string& s) {
    std::vector<double> out;
    for (const auto& f : split_csv_line(s)) out.push_back(std::stod(f));
    if (out.size() != kNumParamFields)
        throw CLI::ValidationError("factors", "expected 6 comma-separated values");
    return out;
}

std::vector<Edge> parse_edges(const std::string& s) {
    std::vector<Edge> out;
    static const std::map<std::string, Edge> names = {{"north", Edge::North},
                                                      {"east", Edge::East},
                                                      {"south", Edge::South},
                                                      {"west", Edge::West}};
    for (const auto& e : split_csv_line(s)) {
        auto it = names.find(e);
        if (it == names.end()) throw CLI::ValidationError("open", "unknown edge " + e);
        out.push_back(it->second);
    }
    return out;
}

int cmd_simulate(const std::string& forcings, const std::string& start,
                 const std::string& end, const std::string& params_dir,
                 const std::string& flowdir_path, const std::string& gages_path,
                 const std::string& out_dir, const std::string& factors_str,
                 const std::string& obs_dir, bool calibrate, int spin_up, int window,
                 double lo, double hi) {
    ForcingGrid forcing = read_forcing_dir(forcings, parse_date(start), parse_date(end));
    CellParams params = read_params_dir(params_dir);
    ChannelNetwork net = build_network(read_ascii_grid(flowdir_path));
    std::vector<Gage> gages = read_gages_csv(gages_path);
    forcing = regrid_forcing(forcing, params.capacity);

    MultiplierVector factors;
    factors.lo = lo;
    factors.hi = hi;
    if (!factors_str.empty()) {
        auto f = parse_factors(factors_str);
        for (int i = 0; i < kNumParamFields; ++i) factors.factors[i] = f[i];
    }

    fs::create_directories(out_dir);

    std::vector<DailySeries> obs;
    if (!obs_dir.empty()) {
        for (const auto& g : gages)
            obs.push_back(read_series_csv(obs_dir + "/" + g.id + ".csv"));
    }

    if (calibrate) {
        if (obs.empty())
            throw std::invalid_argument("--calibrate requires --obs-dir");
        SlsConfig cfg;
        cfg.seed = factors;
        cfg.spin_up_days = spin_up;
        cfg.window_days = window;
        SlsResult res = calibrate_sls(forcing, params, net, gages, obs, cfg);
        factors = res.factors;
        std::printf("calibration: OF %.6g -> %.6g (%s, %d passes)\n", res.seed_objective,
                    res.objective, res.improved ? "improved" : "no improving move",
                    res.passes);
    }

    SimulatedFlow flow = simulate_runoff(forcing, params, factors, net, gages);
    for (size_t g = 0; g < gages.size(); ++g)
        write_series_csv(flow.discharge[g], out_dir + "/sim_" + gages[g].id + ".csv");
    std::printf("water balance closure error: %.3g\n", flow.balance.closure_error());

    if (!obs.empty()) {
        std::string report = out_dir + "/calibration_report.csv";
        std::FILE* f = std::fopen(report.c_str(), "w");
        if (!f) throw std::runtime_error("cannot write " + report);
        std::fprintf(f, "gage_id");
        for (const auto& n : kParamFieldNames) std::fprintf(f, ",f_%s", n.c_str());
        std::fprintf(f, ",of,nse,rm\n");
        for (size_t g = 0; g < gages.size(); ++g) {
            std::fprintf(f, "%s", gages[g].id.c_str());
            for (double v : factors.factors) std::fprintf(f, ",%.10g", v);
            double of = objective_function(obs[g], flow.discharge[g]);
            double skill_nse = nse(obs[g].values, flow.discharge[g].values);
            double rm = modified_correlation(obs[g].values, flow.discharge[g].values);
            std::fprintf(f, ",%.10g,%.10g,%.10g\n", of, skill_nse, rm);
        }
        std::fclose(f);
    }
    return kExitOk;
}

int cmd_extremes(const std::string& input, std::uint64_t seed, const std::string& out_dir,
                 double percentile, int min_sep, int iterations, int burn_in,
                 double return_period, double t_eval, bool allow_few) {
    DailySeries series = read_series_csv(input);
    ExceedanceSet set = select_exceedances(series, percentile, min_sep);
    McmcConfig cfg;
    cfg.iterations = iterations;
    cfg.burn_in = burn_in;
    cfg.seed = seed;
    cfg.allow_few_events = allow_few;
    PosteriorSample post = fit_mcmc(set, PriorSpec::defaults_for(set), cfg);

    fs::create_directories(out_dir);
    write_posterior_csv(post, out_dir + "/posterior_draws.csv");

    EnsembleReturnLevels ens = ensemble_return_levels({{fs::path(input).stem().string(),
                                                        series}},
                                                      percentile, min_sep, cfg,
                                                      return_period, t_eval);
    write_return_level_summary_csv(ens, out_dir + "/return_level_summary.csv");

    std::printf("threshold %.6g m3/s, %zu events over %.0f years\n", set.threshold,
                set.events.size(), set.span_years);
    std::printf("acceptance rate %.3f, retained draws %zu\n", post.acceptance_rate,
                post.draws.size());
    std::printf("%g-yr return level at t=%.3g: mean %.6g m3/s [%.6g, %.6g]\n",
                return_period, t_eval, ens.members[0].mean, ens.members[0].q05,
                ens.members[0].q95);
    return kExitOk;
}

int cmd_scaling(const std::string& input, const std::string& output) {
    std::vector<GagePeak> points = read_gage_peaks_csv(input);
    std::map<std::string, std::vector<GagePeak>> by_epoch;
    for (const auto& p : points) by_epoch[p.epoch].push_back(p);
    std::vector<ScalingFit> fits;
    for (const auto& [epoch, pts] : by_epoch) {
        ScalingFit fit = fit_scaling(pts);
        fit.epoch = epoch;
        fits.push_back(fit);
        std::printf("%s: Qp = %.6g A^%.6g (R = %.4f, n = %zu)\n", epoch.c_str(), fit.beta,
                    fit.alpha, fit.r, pts.size());
    }
    if (fits.size() == 2) {
        PeakRatio ratio = peak_ratio(fits[1], fits[0]);
        std::printf("ratio %s/%s: %.6g A^%.6g\n", fits[1].epoch.c_str(),
                    fits[0].epoch.c_str(), ratio.beta_ratio, ratio.alpha_diff);
    }
    write_scaling_fits_csv(fits, output);
    return kExitOk;
}

int cmd_inundate(const std::string& dem_path, const std::string& inflows_path,
                 const std::string& out_dir, const std::string& flowdir_path,
                 bool derive_channels, double channel_threshold,
                 const HydraulicGeometryCoeffs& hg, SolverConfig solver_cfg) {
    Raster dem = read_ascii_grid(dem_path);
    ChannelGeometry channels;
    if (!flowdir_path.empty() || derive_channels) {
        Raster fd = flowdir_path.empty() ? d8_from_dem(dem) : read_ascii_grid(flowdir_path);
        ChannelNetwork net = build_network(fd);
        channels = estimate_bathymetry(net, dem, channel_threshold, hg);
    }
    std::vector<Inflow> inflows = read_inflows_csv(inflows_path);

    FlowSolver solver(dem, channels, solver_cfg);
    InundationMap map = solver.run_to_steady(inflows);

    fs::create_directories(out_dir);
    write_ascii_grid(map.depth, out_dir + "/depth.asc");
    write_ascii_grid(map.wet_mask, out_dir + "/wet_mask.asc");

    std::ofstream log(out_dir + "/run_log.txt");
    log << "inundated_area_km2 " << map.area_km2 << "\n"
        << "converged " << (map.converged ? 1 : 0) << "\n"
        << "steps " << map.steps << "\n"
        << "sim_time_s " << map.sim_time << "\n"
        << "inflow_m3 " << map.ledger.inflow << "\n"
        << "outflow_m3 " << map.ledger.outflow << "\n"
        << "storage_initial_m3 " << map.ledger.storage_initial << "\n"
        << "storage_final_m3 " << map.ledger.storage_final << "\n"
        << "mass_balance_error " << map.ledger.error() << "\n";

    std::printf("inundated area %.6g km2 (%s after %ld steps), mass error %.3g\n",
                map.area_km2, map.converged ? "converged" : "NOT converged", map.steps,
                map.ledger.error());
    return map.converged ? kExitOk : kExitPartial;
}

int cmd_risk(const std::string& depth_path, const std::string& admin_path,
             const std::string& attrs_path, const std::string& landcover_path,
             const std::string& out_dir, const std::string& epoch, double h_dry,
             double threshold) {
    Raster depth = read_ascii_grid(depth_path);
    Raster admin = read_ascii_grid(admin_path);
    Raster landcover = read_ascii_grid(landcover_path);
    if (!admin.congruent(depth) || !landcover.congruent(depth))
        throw std::invalid_argument("risk rasters not congruent with depth raster");

    Raster wet = depth.like(0.0);
    for (size_t i = 0; i < depth.size(); ++i)
        wet.data[i] = (depth.data[i] != depth.nodata && depth.data[i] > h_dry) ? 1.0 : 0.0;

    std::vector<AdminUnit> units = load_admin_units(admin, attrs_path);
    Raster population = landcover.like(0.0);
    auto weights = default_dev_weights();
    for (const auto& u : units) disaggregate_population(u, landcover, weights, &population);

    std::vector<RiskRecord> records;
    for (const auto& u : units) {
        RiskRecord r;
        r.unit_id = u.id;
        r.klass = u.klass;
        r.epoch = epoch;
        r.hazard_pct = hazard_percent(wet, u);
        r.exposure_pct = u.population > 0.0 ? exposure_percent(wet, u, population) : 0.0;
        records.push_back(r);
    }
    fs::create_directories(out_dir);
    write_risk_csv(records, out_dir + "/risk_" + epoch + ".csv");

    auto hc = exceedance_counts(records, threshold, false);
    auto ec = exceedance_counts(records, threshold, true);
    std::printf("%zu units; hazard > %.0f%%: %d, exposure > %.0f%%: %d\n", units.size(),
                threshold, hc[epoch], threshold, ec[epoch]);
    return kExitOk;
}

int cmd_uncertainty(const std::string& input, const std::string& out_dir,
                    const std::string& measure) {
    ProjectionTensor tensor = read_tensor_csv(input);
    fs::create_directories(out_dir);
    std::vector<Measure> measures;
    if (measure == "range") measures = {Measure::Range};
    else if (measure == "std") measures = {Measure::StdDev};
    else measures = {Measure::Range, Measure::StdDev};
    for (Measure m : measures) {
        DecompositionReport rep = decompose(tensor, m);
        std::string stem = out_dir + "/decomposition_" + measure_name(m);
        write_decomposition_csv(rep, stem + ".csv");
        std::ofstream txt(stem + ".txt");
        txt << format_decomposition_table(rep);
        std::cout << format_decomposition_table(rep);
    }
    return kExitOk;
}

int cmd_pipeline(const std::string& config_path, std::uint64_t seed, bool seed_given,
                 int threads) {
    PipelineConfig cfg = load_pipeline_config(config_path);
    if (seed_given) {
        cfg.seed = seed;
        cfg.seed_set = true;
    }
    if (!cfg.seed_set)
        throw std::invalid_argument("pipeline requires --seed or [pipeline] seed");
    if (threads > 0) cfg.threads = threads;

    RunManifest man = run_pipeline(cfg);
    size_t ok = 0, total = 0;
    for (const auto& ep : man.epochs) {
        total += ep.runs.size();
        for (const auto& r : ep.runs)
            if (r.ok) ++ok;
    }
    std::printf("pipeline: %zu/%zu scenario runs ok, %s; outputs in %s\n", ok, total,
                man.complete() ? "tensor complete" : "tensor INCOMPLETE",
                man.output_dir.c_str());
    return man.complete() ? kExitOk : kExitPartial;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"floodcast: riverine flood-risk projection toolkit"};
    app.require_subcommand(1);

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "run the rainfall-runoff model");
    std::string forcings, start, end, params_dir, flowdir, gages, out_dir = "out";
    std::string factors_str, obs_dir;
    bool calibrate = false;
    int spin_up = 365, window = 0;
    double lo = 0.1, hi = 10.0;
    sim->add_option("--forcings", forcings, "forcing raster directory")->required();
    sim->add_option("--start", start, "first forcing date (YYYY-MM-DD)")->required();
    sim->add_option("--end", end, "last forcing date")->required();
    sim->add_option("--params", params_dir, "a-priori parameter raster directory")->required();
    sim->add_option("--flowdir", flowdir, "D8 flow-direction raster")->required();
    sim->add_option("--gages", gages, "gage list CSV")->required();
    sim->add_option("--out", out_dir, "output directory");
    sim->add_option("--factors", factors_str, "six multiplier factors");
    sim->add_option("--obs-dir", obs_dir, "observed series per gage (<gage>.csv)");
    sim->add_flag("--calibrate", calibrate, "run stepwise line search");
    sim->add_option("--spin-up", spin_up, "spin-up days excluded from the objective");
    sim->add_option("--window", window, "calibration window length in days (0 = rest)");
    sim->add_option("--lo", lo, "lower multiplier bound");
    sim->add_option("--hi", hi, "upper multiplier bound");

    // ---- extremes ----
    auto* ext = app.add_subcommand("extremes", "peaks-over-threshold GPD fit via MCMC");
    std::string ext_input, ext_out = "out";
    std::uint64_t ext_seed = 0;
    double percentile = 95.0, return_period = 100.0, t_eval = 1.0;
    int min_sep = 3, iterations = 100000, burn_in = 25000;
    bool allow_few = false;
    ext->add_option("--input", ext_input, "daily series CSV")->required();
    ext->add_option("--seed", ext_seed, "RNG seed")->required();
    ext->add_option("--out", ext_out, "output directory");
    ext->add_option("--percentile", percentile, "threshold percentile");
    ext->add_option("--min-separation", min_sep, "declustering separation, days");
    ext->add_option("--iterations", iterations, "MCMC iterations");
    ext->add_option("--burn-in", burn_in, "burn-in iterations");
    ext->add_option("--return-period", return_period, "return period, years");
    ext->add_option("--t-eval", t_eval, "evaluation covariate in [0,1]");
    ext->add_flag("--allow-few", allow_few, "proceed with fewer than 20 events");

    // ---- scaling ----
    auto* sca = app.add_subcommand("scaling", "drainage-area scaling of flood peaks");
    std::string sca_input, sca_output = "scaling_fits.csv";
    sca->add_option("--input", sca_input, "gage peaks CSV")->required();
    sca->add_option("--out", sca_output, "fit report CSV");

    // ---- inundate ----
    auto* inu = app.add_subcommand("inundate", "steady-state flood inundation map");
    std::string dem_path, inflows_path, inu_out = "out", inu_flowdir, open_edges = "south";
    bool derive_channels = false;
    double channel_threshold = 1.0;
    HydraulicGeometryCoeffs hg;
    SolverConfig scfg;
    inu->add_option("--dem", dem_path, "DEM raster (.asc)")->required();
    inu->add_option("--inflows", inflows_path, "inflow CSV node_row,node_col,q_m3s")
        ->required();
    inu->add_option("--out", inu_out, "output directory");
    inu->add_option("--flowdir", inu_flowdir, "D8 raster for channel placement");
    inu->add_flag("--derive-channels", derive_channels,
                  "derive channels from the DEM by steepest descent");
    inu->add_option("--channel-threshold", channel_threshold,
                    "drainage area defining channels, km2");
    inu->add_option("--width-coeff", hg.a_w, "bankfull width coefficient");
    inu->add_option("--width-exp", hg.b_w, "bankfull width exponent");
    inu->add_option("--depth-coeff", hg.a_d, "bankfull depth coefficient");
    inu->add_option("--depth-exp", hg.b_d, "bankfull depth exponent");
    inu->add_option("--manning", scfg.manning_n, "Manning roughness");
    inu->add_option("--cfl", scfg.cfl, "CFL factor");
    inu->add_option("--h-dry", scfg.h_dry, "wet/dry threshold, m");
    inu->add_option("--max-dt", scfg.max_dt, "timestep cap, s");
    inu->add_option("--window", scfg.convergence_window, "convergence window, steps");
    inu->add_option("--tol", scfg.convergence_tol, "convergence tolerance");
    inu->add_option("--max-time", scfg.max_sim_time, "maximum simulated time, s");
    inu->add_option("--open", open_edges, "open boundary edges (north,east,south,west)");

    // ---- risk ----
    auto* rsk = app.add_subcommand("risk", "hazard and exposure per administrative unit");
    std::string depth_path, admin_path, attrs_path, landcover_path, rsk_out = "out";
    std::string epoch = "current";
    double rsk_h_dry = 0.01, threshold = 60.0;
    rsk->add_option("--depth", depth_path, "depth raster (.asc)")->required();
    rsk->add_option("--admin", admin_path, "admin unit id raster")->required();
    rsk->add_option("--attrs", attrs_path, "unit attribute CSV")->required();
    rsk->add_option("--landcover", landcover_path, "development intensity raster")
        ->required();
    rsk->add_option("--out", rsk_out, "output directory");
    rsk->add_option("--epoch", epoch, "epoch label");
    rsk->add_option("--h-dry", rsk_h_dry, "wet threshold on depth, m");
    rsk->add_option("--threshold", threshold, "exceedance-count threshold, percent");

    // ---- uncertainty ----
    auto* unc = app.add_subcommand("uncertainty", "cumulative uncertainty decomposition");
    std::string unc_input, unc_out = "out", measure = "both";
    unc->add_option("--input", unc_input, "projection tensor CSV")->required();
    unc->add_option("--out", unc_out, "output directory");
    unc->add_option("--measure", measure, "range | std | both");

    // ---- pipeline ----
    auto* pip = app.add_subcommand("pipeline", "full projection chain from a config file");
    std::string config_path;
    std::uint64_t pip_seed = 0;
    int threads = 0;
    pip->add_option("--config", config_path, "INI config file")->required();
    auto* seed_opt = pip->add_option("--seed", pip_seed, "RNG seed (overrides config)");
    pip->add_option("--threads", threads, "worker pool size");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim)
            return cmd_simulate(forcings, start, end, params_dir, flowdir, gages, out_dir,
                                factors_str, obs_dir, calibrate, spin_up, window, lo, hi);
        if (*ext)
            return cmd_extremes(ext_input, ext_seed, ext_out, percentile, min_sep,
                                iterations, burn_in, return_period, t_eval, allow_few);
        if (*sca) return cmd_scaling(sca_input, sca_output);
        if (*inu) {
            scfg.open_edges = parse_edges(open_edges);
            return cmd_inundate(dem_path, inflows_path, inu_out, inu_flowdir,
                                derive_channels, channel_threshold, hg, scfg);
        }
        if (*rsk)
            return cmd_risk(depth_path, admin_path, attrs_path, landcover_path, rsk_out,
                            epoch, rsk_h_dry, threshold);
        if (*unc) return cmd_uncertainty(unc_input, unc_out, measure);
        if (*pip) return cmd_pipeline(config_path, pip_seed, seed_opt->count() > 0, threads);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalid;
    }
    return kExitOk;
}

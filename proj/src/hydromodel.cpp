#include "floodcast/hydromodel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <stdexcept>

namespace floodcast {

const std::array<std::string, kNumParamFields> kParamFieldNames = {
    "capacity", "drainage", "melt_factor", "snow_temp", "evap_coeff", "roughness"};

void ForcingGrid::validate() const {
    if (precip.size() != temp.size())
        throw std::invalid_argument("forcing: precip/temp day counts differ");
    const size_t n = static_cast<size_t>(geom.rows) * geom.cols;
    for (size_t d = 0; d < precip.size(); ++d) {
        if (precip[d].size() != n || temp[d].size() != n)
            throw std::invalid_argument("forcing: field size does not match geometry");
        for (double p : precip[d])
            if (p < 0.0) throw std::invalid_argument("forcing: negative precipitation");
    }
}

ForcingGrid read_forcing_dir(const std::string& dir, const Date& first, const Date& last) {
    std::int64_t d0 = days_from_date(first);
    std::int64_t d1 = days_from_date(last);
    if (d1 < d0) throw std::invalid_argument("read_forcing_dir: last date before first");

    ForcingGrid f;
    f.start_day = d0;
    for (std::int64_t d = d0; d <= d1; ++d) {
        std::string stamp = format_date_compact(date_from_days(d));
        Raster pr = read_ascii_grid(dir + "/pr_" + stamp + ".asc");
        Raster tas = read_ascii_grid(dir + "/tas_" + stamp + ".asc");
        if (d == d0) f.geom = pr.like(0.0);
        if (!pr.congruent(f.geom) || !tas.congruent(f.geom))
            throw std::invalid_argument("forcing rasters not congruent at " + stamp);
        f.precip.push_back(std::move(pr.data));
        f.temp.push_back(std::move(tas.data));
    }
    f.validate();
    return f;
}

const Raster& CellParams::field(ParamField f) const {
    switch (f) {
        case ParamField::Capacity: return capacity;
        case ParamField::Drainage: return drainage;
        case ParamField::MeltFactor: return melt_factor;
        case ParamField::SnowTemp: return snow_temp;
        case ParamField::EvapCoeff: return evap_coeff;
        case ParamField::Roughness: return roughness;
    }
    throw std::logic_error("unknown parameter field");
}

void CellParams::validate() const {
    for (int i = 1; i < kNumParamFields; ++i) {
        if (!field(static_cast<ParamField>(i)).congruent(capacity))
            throw std::invalid_argument("parameter fields not congruent");
    }
    for (double v : capacity.data)
        if (v <= 0.0) throw std::invalid_argument("capacity must be positive");
    for (const Raster* r : {&drainage, &melt_factor, &evap_coeff, &roughness})
        for (double v : r->data)
            if (v < 0.0) throw std::invalid_argument("parameter coefficients must be >= 0");
}

CellParams read_params_dir(const std::string& dir) {
    CellParams p;
    p.capacity = read_ascii_grid(dir + "/capacity.asc");
    p.drainage = read_ascii_grid(dir + "/drainage.asc");
    p.melt_factor = read_ascii_grid(dir + "/melt_factor.asc");
    p.snow_temp = read_ascii_grid(dir + "/snow_temp.asc");
    p.evap_coeff = read_ascii_grid(dir + "/evap_coeff.asc");
    p.roughness = read_ascii_grid(dir + "/roughness.asc");
    p.validate();
    return p;
}

void MultiplierVector::validate() const {
    if (!(lo > 0.0) || !(hi >= lo))
        throw std::invalid_argument("multiplier bounds invalid");
    for (double f : factors)
        if (f < lo || f > hi)
            throw std::invalid_argument("multiplier factor out of bounds");
}

namespace {

// ESRI D8 codes to (dr, dc).
bool d8_offset(int code, int& dr, int& dc) {
    switch (code) {
        case 1:   dr = 0;  dc = 1;  return true;
        case 2:   dr = 1;  dc = 1;  return true;
        case 4:   dr = 1;  dc = 0;  return true;
        case 8:   dr = 1;  dc = -1; return true;
        case 16:  dr = 0;  dc = -1; return true;
        case 32:  dr = -1; dc = -1; return true;
        case 64:  dr = -1; dc = 0;  return true;
        case 128: dr = -1; dc = 1;  return true;
        default:  return false;
    }
}

}  // namespace

ChannelNetwork build_network(const Raster& flowdir) {
    ChannelNetwork net;
    net.rows = flowdir.rows;
    net.cols = flowdir.cols;
    net.cellsize = flowdir.cellsize;
    const size_t n = flowdir.size();
    net.downstream.assign(n, -1);

    for (int r = 0; r < net.rows; ++r) {
        for (int c = 0; c < net.cols; ++c) {
            double v = flowdir.at(r, c);
            if (v == flowdir.nodata || v == 0.0) continue;  // outlet
            int dr, dc;
            if (!d8_offset(static_cast<int>(v), dr, dc))
                throw std::invalid_argument("invalid D8 code " + std::to_string(v));
            int rr = r + dr, cc = c + dc;
            if (flowdir.in_bounds(rr, cc))
                net.downstream[net.index(r, c)] = net.index(rr, cc);
            // off-grid receivers leave the cell as an outlet
        }
    }

    // Kahn topological sort; leftover cells indicate a cycle.
    std::vector<int> indeg(n, 0);
    for (int d : net.downstream)
        if (d >= 0) ++indeg[d];
    std::deque<int> queue;
    for (size_t i = 0; i < n; ++i)
        if (indeg[i] == 0) queue.push_back(static_cast<int>(i));
    net.topo_order.reserve(n);
    while (!queue.empty()) {
        int c = queue.front();
        queue.pop_front();
        net.topo_order.push_back(c);
        int d = net.downstream[c];
        if (d >= 0 && --indeg[d] == 0) queue.push_back(d);
    }
    if (net.topo_order.size() != n)
        throw std::invalid_argument("flow network contains a cycle");

    net.area_km2.assign(n, net.cell_area_km2());
    for (int c : net.topo_order) {
        int d = net.downstream[c];
        if (d >= 0) net.area_km2[d] += net.area_km2[c];
    }
    return net;
}

std::vector<Gage> read_gages_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open gage list: " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<Gage> gages;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        auto f = split_csv_line(line);
        if (f.size() < 3) throw std::runtime_error("bad gage row: " + line);
        gages.push_back({f[0], std::stoi(f[1]), std::stoi(f[2])});
    }
    return gages;
}

double WaterBalance::closure_error() const {
    double in = input + storage_initial;
    double out = outlet_outflow + evaporation + storage_final;
    return std::abs(in - out) / std::max(in, 1e-30);
}

namespace {

struct RouteOutput {
    std::vector<std::vector<double>> daily_mean;  // [day][cell], m3/s
    std::vector<double> storage;                  // final per-cell channel volume, m3
    double outlet_volume = 0.0;                   // m3
};

constexpr double kSecondsPerDay = 86400.0;
constexpr double kRouteCfl = 0.9;
constexpr int kMaxSubsteps = 2'000'000;

/*
 * Explicit kinematic cascade. Each cell holds channel volume V; outflow
 * follows Q = k (V/dx)^(5/3). Substep length obeys the kinematic CFL
 * c = dQ/dA = (5/3) k A^(2/3) <= dx/dt, and outflow is additionally capped
 * at V/dt so volumes stay non-negative.
 */
RouteOutput route_core(const std::vector<std::vector<double>>& lateral,
                       const ChannelNetwork& net, const std::vector<double>& k,
                       std::vector<double> storage) {
    const size_t n = net.cells();
    const double dx = net.cellsize;
    if (k.size() != n) throw std::invalid_argument("routing: roughness size mismatch");
    for (double kk : k)
        if (kk < 0.0) throw std::invalid_argument("routing: negative conveyance");
    if (storage.empty()) storage.assign(n, 0.0);

    RouteOutput out;
    out.daily_mean.assign(lateral.size(), std::vector<double>(n, 0.0));
    std::vector<double> outflow(n, 0.0);

    for (size_t day = 0; day < lateral.size(); ++day) {
        const auto& lat = lateral[day];
        if (lat.size() != n) throw std::invalid_argument("routing: lateral size mismatch");
        for (double q : lat)
            if (q < 0.0) throw std::invalid_argument("routing: negative lateral inflow");

        double remaining = kSecondsPerDay;
        int substeps = 0;
        auto& mean = out.daily_mean[day];
        while (remaining > 0.0) {
            if (++substeps > kMaxSubsteps)
                throw std::runtime_error("routing: substep limit exceeded (unstable step)");
            // kinematic celerity limit
            double cmax = 0.0;
            for (size_t i = 0; i < n; ++i) {
                double a = storage[i] / dx;
                if (a > 0.0 && k[i] > 0.0) {
                    double c = (5.0 / 3.0) * k[i] * std::pow(a, 2.0 / 3.0);
                    cmax = std::max(cmax, c);
                }
            }
            double dt = cmax > 0.0 ? kRouteCfl * dx / cmax : remaining;
            dt = std::min(dt, remaining);

            for (size_t i = 0; i < n; ++i) {
                double a = storage[i] / dx;
                double q = k[i] > 0.0 && a > 0.0 ? k[i] * std::pow(a, 5.0 / 3.0) : 0.0;
                q = std::min(q, storage[i] / dt);
                outflow[i] = q;
                mean[i] += q * dt;
            }
            for (size_t i = 0; i < n; ++i) {
                double inflow = lat[i];
                storage[i] += dt * (inflow - outflow[i]);
            }
            for (size_t i = 0; i < n; ++i) {
                int d = net.downstream[i];
                if (d >= 0)
                    storage[d] += dt * outflow[i];
                else
                    out.outlet_volume += dt * outflow[i];
            }
            remaining -= dt;
        }
        for (size_t i = 0; i < n; ++i) mean[i] /= kSecondsPerDay;
    }
    out.storage = std::move(storage);
    return out;
}

}  // namespace

std::vector<std::vector<double>> route_kinematic(
    const std::vector<std::vector<double>>& lateral_inflow_m3s,
    const ChannelNetwork& network, const std::vector<double>& roughness) {
    return route_core(lateral_inflow_m3s, network, roughness, {}).daily_mean;
}

SimulatedFlow simulate_runoff(const ForcingGrid& forcing, const CellParams& params,
                              const MultiplierVector& factors, const ChannelNetwork& network,
                              const std::vector<Gage>& gages) {
    forcing.validate();
    params.validate();
    factors.validate();
    if (!forcing.geom.congruent(params.capacity))
        throw std::invalid_argument("forcing and parameter grids not congruent");
    if (params.capacity.rows != network.rows || params.capacity.cols != network.cols)
        throw std::invalid_argument("network does not match parameter grid");

    const size_t n = network.cells();
    const size_t days = forcing.days();
    const double cell_area_m2 = network.cellsize * network.cellsize;
    const double mm_to_m3 = 1e-3 * cell_area_m2;

    // effective (multiplied) parameter fields
    std::vector<double> cap(n), kd(n), mf(n), ts(n), ke(n), kr(n);
    for (size_t i = 0; i < n; ++i) {
        cap[i] = params.capacity.data[i] * factors[ParamField::Capacity];
        kd[i] = std::min(1.0, params.drainage.data[i] * factors[ParamField::Drainage]);
        mf[i] = params.melt_factor.data[i] * factors[ParamField::MeltFactor];
        ts[i] = params.snow_temp.data[i] * factors[ParamField::SnowTemp];
        ke[i] = params.evap_coeff.data[i] * factors[ParamField::EvapCoeff];
        kr[i] = params.roughness.data[i] * factors[ParamField::Roughness];
    }

    std::vector<double> swe(n, 0.0), soil(n, 0.0);
    std::vector<std::vector<double>> lateral(days, std::vector<double>(n, 0.0));

    WaterBalance wb;
    double evap_mm_vol = 0.0;

    for (size_t d = 0; d < days; ++d) {
        const auto& pr = forcing.precip[d];
        const auto& ta = forcing.temp[d];
        auto& lat = lateral[d];
        for (size_t i = 0; i < n; ++i) {
            double p = pr[i], t = ta[i];
            wb.input += p * mm_to_m3;

            double rain = 0.0, snowfall = 0.0;
            if (t < ts[i]) snowfall = p; else rain = p;
            swe[i] += snowfall;
            double melt = std::min(swe[i], mf[i] * std::max(t - ts[i], 0.0));
            swe[i] -= melt;

            soil[i] += rain + melt;
            double quick = std::max(soil[i] - cap[i], 0.0);
            soil[i] -= quick;
            double base = kd[i] * soil[i];
            soil[i] -= base;
            double et = std::min(soil[i], ke[i] * std::max(t, 0.0));
            soil[i] -= et;
            evap_mm_vol += et * mm_to_m3;

            lat[i] = (quick + base) * mm_to_m3 / kSecondsPerDay;
        }
    }

    RouteOutput routed = route_core(lateral, network, kr, {});

    wb.evaporation = evap_mm_vol;
    wb.outlet_outflow = routed.outlet_volume;
    wb.storage_initial = 0.0;
    for (size_t i = 0; i < n; ++i)
        wb.storage_final += (swe[i] + soil[i]) * mm_to_m3 + routed.storage[i];

    SimulatedFlow flow;
    flow.gages = gages;
    flow.balance = wb;
    for (const Gage& g : gages) {
        if (g.row < 0 || g.row >= network.rows || g.col < 0 || g.col >= network.cols)
            throw std::invalid_argument("gage off grid: " + g.id);
        int idx = network.index(g.row, g.col);
        DailySeries s;
        s.start_day = forcing.start_day;
        s.values.resize(days);
        for (size_t d = 0; d < days; ++d) s.values[d] = routed.daily_mean[d][idx];
        flow.discharge.push_back(std::move(s));
    }
    return flow;
}

double objective_function(const DailySeries& obs, const DailySeries& sim) {
    if (obs.values.empty()) throw std::invalid_argument("objective: empty series");
    if (obs.values.size() != sim.values.size() || obs.start_day != sim.start_day)
        throw std::invalid_argument("objective: series not aligned");
    double ss = 0.0;
    for (size_t i = 0; i < obs.values.size(); ++i) {
        double r = obs.values[i] - sim.values[i];
        ss += r * r;
    }
    return std::sqrt(ss);
}

namespace {

DailySeries slice_series(const DailySeries& s, int from, int len) {
    if (from < 0 || static_cast<size_t>(from) >= s.values.size())
        throw std::invalid_argument("calibration window outside record");
    size_t end = len > 0 ? std::min(s.values.size(), static_cast<size_t>(from + len))
                         : s.values.size();
    DailySeries out;
    out.start_day = s.start_day + from;
    out.values.assign(s.values.begin() + from, s.values.begin() + end);
    return out;
}

double multi_gage_objective(const SimulatedFlow& sim, const std::vector<DailySeries>& obs,
                            int spin_up, int window) {
    if (obs.size() != sim.discharge.size())
        throw std::invalid_argument("calibration: gage/observation count mismatch");
    double ss = 0.0;
    for (size_t g = 0; g < obs.size(); ++g) {
        double of = objective_function(slice_series(obs[g], spin_up, window),
                                       slice_series(sim.discharge[g], spin_up, window));
        ss += of * of;
    }
    double of = std::sqrt(ss);
    if (!std::isfinite(of)) throw std::runtime_error("calibration: non-finite objective");
    return of;
}

}  // namespace

SlsResult sls_minimize(const std::function<double(const MultiplierVector&)>& objective,
                       const SlsConfig& config) {
    MultiplierVector cur = config.seed;
    for (double& f : cur.factors) f = std::clamp(f, cur.lo, cur.hi);
    cur.validate();
    const MultiplierVector seed = cur;

    auto evaluate = [&](const MultiplierVector& m) {
        double of = objective(m);
        if (!std::isfinite(of)) throw std::runtime_error("sls: non-finite objective");
        return of;
    };

    SlsResult res;
    res.seed_objective = evaluate(cur);
    double f_cur = res.seed_objective;
    bool any_move = false;

    for (double step : config.step_schedule) {
        for (int pass = 0; pass < config.max_passes_per_step; ++pass) {
            ++res.passes;
            bool pass_improved = false;
            for (int i = 0; i < kNumParamFields; ++i) {
                // pick the improving direction, then line-search along it
                for (double mult : {step, 1.0 / step}) {
                    while (true) {
                        MultiplierVector cand = cur;
                        cand.factors[i] = std::clamp(cand.factors[i] * mult, cur.lo, cur.hi);
                        if (cand.factors[i] == cur.factors[i]) break;
                        double f_cand = evaluate(cand);
                        if (f_cur - f_cand > config.improvement_tol * std::max(f_cur, 1e-30)) {
                            cur = cand;
                            f_cur = f_cand;
                            pass_improved = true;
                            any_move = true;
                        } else {
                            break;
                        }
                    }
                }
            }
            if (!pass_improved) break;
        }
    }

    res.improved = any_move;
    res.factors = any_move ? cur : seed;
    res.objective = any_move ? f_cur : res.seed_objective;
    return res;
}

SlsResult calibrate_sls(const ForcingGrid& forcing, const CellParams& params,
                        const ChannelNetwork& network, const std::vector<Gage>& gages,
                        const std::vector<DailySeries>& obs, const SlsConfig& config) {
    if (gages.empty()) throw std::invalid_argument("calibration: no gages");
    return sls_minimize(
        [&](const MultiplierVector& m) {
            return multi_gage_objective(simulate_runoff(forcing, params, m, network, gages),
                                        obs, config.spin_up_days, config.window_days);
        },
        config);
}

}  // namespace floodcast

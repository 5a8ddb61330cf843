#include "floodcast/hydraulics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <stdexcept>

#include "floodcast/series.hpp"

namespace floodcast {

void SolverConfig::validate() const {
    if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("cfl must be in (0,1]");
    if (!(manning_n > 0.0)) throw std::invalid_argument("manning_n must be positive");
    if (!(h_dry > 0.0)) throw std::invalid_argument("h_dry must be positive");
    if (!(max_dt > 0.0)) throw std::invalid_argument("max_dt must be positive");
    if (convergence_window < 1) throw std::invalid_argument("convergence window < 1");
}

ChannelGeometry estimate_bathymetry(const ChannelNetwork& network, const Raster& dem,
                                    double channel_threshold_km2,
                                    const HydraulicGeometryCoeffs& coeffs) {
    if (network.rows != dem.rows || network.cols != dem.cols)
        throw std::invalid_argument("estimate_bathymetry: network/DEM mismatch");
    if (coeffs.a_w <= 0.0 || coeffs.a_d <= 0.0)
        throw std::invalid_argument("estimate_bathymetry: non-positive coefficients");

    ChannelGeometry geom;
    for (int r = 0; r < dem.rows; ++r) {
        for (int c = 0; c < dem.cols; ++c) {
            size_t i = static_cast<size_t>(network.index(r, c));
            double area = network.area_km2[i];
            if (area < channel_threshold_km2) continue;
            if (area <= 0.0)
                throw std::invalid_argument("estimate_bathymetry: non-positive drainage area");
            if (dem.is_nodata(r, c)) continue;
            ChannelCell cell;
            cell.row = r;
            cell.col = c;
            cell.width = std::min(coeffs.a_w * std::pow(area, coeffs.b_w), dem.cellsize);
            cell.bankfull_depth = coeffs.a_d * std::pow(area, coeffs.b_d);
            cell.bed_elev = dem.at(r, c) - cell.bankfull_depth;
            geom.cells.push_back(cell);
        }
    }
    return geom;
}

std::vector<Inflow> read_inflows_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open inflows: " + path);
    std::string line;
    std::getline(in, line);  // header: node_row,node_col,q_m3s
    std::vector<Inflow> out;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        auto f = split_csv_line(line);
        if (f.size() < 3) throw std::runtime_error("bad inflow row: " + line);
        out.push_back({std::stoi(f[0]), std::stoi(f[1]), std::stod(f[2])});
    }
    return out;
}

void write_inflows_csv(const std::vector<Inflow>& inflows, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write inflows: " + path);
    std::fprintf(f, "node_row,node_col,q_m3s\n");
    for (const auto& n : inflows)
        std::fprintf(f, "%d,%d,%.10g\n", n.row, n.col, n.q_m3s);
    std::fclose(f);
}

double MassLedger::error() const {
    if (inflow <= 0.0) return 0.0;
    return (inflow - outflow - (storage_final - storage_initial)) / inflow;
}

FlowSolver::FlowSolver(const Raster& dem, const ChannelGeometry& channels,
                       SolverConfig config)
    : dem_(dem), config_(std::move(config)), rows_(dem.rows), cols_(dem.cols),
      dx_(dem.cellsize) {
    config_.validate();
    if (rows_ < 1 || cols_ < 1) throw std::invalid_argument("empty DEM");

    const size_t n = dem_.size();
    chan_width_.assign(n, 0.0);
    chan_bed_.assign(n, 0.0);
    chan_bankfull_volume_.assign(n, 0.0);
    is_channel_.assign(n, 0);
    for (const auto& c : channels.cells) {
        if (!dem_.in_bounds(c.row, c.col))
            throw std::invalid_argument("channel cell off grid");
        if (c.width <= 0.0 || c.width > dx_ || c.bankfull_depth <= 0.0)
            throw std::invalid_argument("invalid channel geometry");
        size_t i = idx(c.row, c.col);
        chan_width_[i] = c.width;
        chan_bed_[i] = c.bed_elev;
        chan_bankfull_volume_[i] = c.width * dx_ * c.bankfull_depth;
        is_channel_[i] = 1;
    }

    volume_.assign(n, 0.0);
    eta_.assign(n, 0.0);
    qx_.assign(static_cast<size_t>(rows_) * std::max(cols_ - 1, 0), 0.0);
    qy_.assign(static_cast<size_t>(std::max(rows_ - 1, 0)) * cols_, 0.0);
    qcx_.assign(qx_.size(), 0.0);
    qcy_.assign(qy_.size(), 0.0);
    fx_.assign(qx_.size(), 0.0);
    fcx_.assign(qx_.size(), 0.0);
    fy_.assign(qy_.size(), 0.0);
    fcy_.assign(qy_.size(), 0.0);
    bnd_.assign(n, 0.0);
    limiter_.assign(n, 1.0);
    compute_surfaces();
}

double FlowSolver::surface_elevation(int r, int c) const {
    size_t i = idx(r, c);
    double v = volume_[i];
    if (is_channel_[i]) {
        if (v <= chan_bankfull_volume_[i])
            return chan_bed_[i] + v / (chan_width_[i] * dx_);
        return dem_.data[i] + (v - chan_bankfull_volume_[i]) / (dx_ * dx_);
    }
    return dem_.data[i] + v / (dx_ * dx_);
}

double FlowSolver::cell_depth(size_t i) const {
    double base = is_channel_[i] ? chan_bed_[i] : dem_.data[i];
    return eta_[i] - base;
}

void FlowSolver::compute_surfaces() {
    for (int r = 0; r < rows_; ++r)
        for (int c = 0; c < cols_; ++c) eta_[idx(r, c)] = surface_elevation(r, c);
}

void FlowSolver::set_volume(int r, int c, double v_m3) {
    if (v_m3 < 0.0) throw std::invalid_argument("negative volume");
    volume_[idx(r, c)] = v_m3;
    eta_[idx(r, c)] = surface_elevation(r, c);
}

void FlowSolver::fill_to_surface(double eta) {
    for (int r = 0; r < rows_; ++r) {
        for (int c = 0; c < cols_; ++c) {
            size_t i = idx(r, c);
            if (dem_.is_nodata(r, c)) continue;
            double v = 0.0;
            if (is_channel_[i]) {
                if (eta > dem_.data[i])
                    v = chan_bankfull_volume_[i] + (eta - dem_.data[i]) * dx_ * dx_;
                else if (eta > chan_bed_[i])
                    v = (eta - chan_bed_[i]) * chan_width_[i] * dx_;
            } else if (eta > dem_.data[i]) {
                v = (eta - dem_.data[i]) * dx_ * dx_;
            }
            volume_[i] = v;
        }
    }
    compute_surfaces();
}

double FlowSolver::adaptive_timestep() const {
    double h_max = 0.0;
    for (int r = 0; r < rows_; ++r) {
        for (int c = 0; c < cols_; ++c) {
            if (dem_.is_nodata(r, c)) continue;
            h_max = std::max(h_max, cell_depth(idx(r, c)));
        }
    }
    if (h_max <= 0.0) return config_.max_dt;
    double dt = config_.cfl * dx_ / std::sqrt(config_.gravity * h_max);
    return std::min(dt, config_.max_dt);
}

namespace {

/// Local-inertial face update with semi-implicit Manning friction.
inline double inertial_update(double q, double h_f, double slope, double g, double n,
                              double dt) {
    double num = q - g * h_f * dt * slope;
    double den = 1.0 + g * dt * n * n * std::abs(q) / std::pow(h_f, 7.0 / 3.0);
    return num / den;
}

}  // namespace

void FlowSolver::update_faces(double dt) {
    const double g = config_.gravity;
    const double n = config_.manning_n;
    const double h_dry = config_.h_dry;

    // x faces: between (r,c) and (r,c+1); positive q flows east
    for (int r = 0; r < rows_; ++r) {
        for (int c = 0; c < cols_ - 1; ++c) {
            size_t L = idx(r, c), R = idx(r, c + 1);
            size_t f = xface(r, c);
            if (dem_.is_nodata(r, c) || dem_.is_nodata(r, c + 1)) {
                qx_[f] = qcx_[f] = 0.0;
                continue;
            }
            double eta_max = std::max(eta_[L], eta_[R]);
            double slope = (eta_[R] - eta_[L]) / dx_;

            double hf = eta_max - std::max(dem_.data[L], dem_.data[R]);
            qx_[f] = hf < h_dry ? 0.0 : inertial_update(qx_[f], hf, slope, g, n, dt);

            if (is_channel_[L] && is_channel_[R]) {
                double hc = eta_max - std::max(chan_bed_[L], chan_bed_[R]);
                qcx_[f] = hc < h_dry ? 0.0 : inertial_update(qcx_[f], hc, slope, g, n, dt);
            } else {
                qcx_[f] = 0.0;
            }
        }
    }
    // y faces: between (r,c) and (r+1,c); positive q flows south
    for (int r = 0; r < rows_ - 1; ++r) {
        for (int c = 0; c < cols_; ++c) {
            size_t T = idx(r, c), B = idx(r + 1, c);
            size_t f = yface(r, c);
            if (dem_.is_nodata(r, c) || dem_.is_nodata(r + 1, c)) {
                qy_[f] = qcy_[f] = 0.0;
                continue;
            }
            double eta_max = std::max(eta_[T], eta_[B]);
            double slope = (eta_[B] - eta_[T]) / dx_;

            double hf = eta_max - std::max(dem_.data[T], dem_.data[B]);
            qy_[f] = hf < h_dry ? 0.0 : inertial_update(qy_[f], hf, slope, g, n, dt);

            if (is_channel_[T] && is_channel_[B]) {
                double hc = eta_max - std::max(chan_bed_[T], chan_bed_[B]);
                qcy_[f] = hc < h_dry ? 0.0 : inertial_update(qcy_[f], hc, slope, g, n, dt);
            } else {
                qcy_[f] = 0.0;
            }
        }
    }
}

void FlowSolver::apply_fluxes(double dt) {
    const double h_dry = config_.h_dry;
    const double n = config_.manning_n;

    // volume flux per face and path (m3/s)
    auto face_widths = [&](size_t a, size_t b, double& w_fp, double& w_ch) {
        if (is_channel_[a] && is_channel_[b]) {
            w_ch = std::min(chan_width_[a], chan_width_[b]);
            w_fp = std::max(dx_ - w_ch, 0.0);
        } else {
            w_ch = 0.0;
            w_fp = dx_;
        }
    };

    std::vector<double>&Fx = fx_, &Fcx = fcx_, &Fy = fy_, &Fcy = fcy_;
    for (int r = 0; r < rows_; ++r) {
        for (int c = 0; c < cols_ - 1; ++c) {
            size_t f = xface(r, c);
            double w_fp, w_ch;
            face_widths(idx(r, c), idx(r, c + 1), w_fp, w_ch);
            Fx[f] = qx_[f] * w_fp;
            Fcx[f] = qcx_[f] * w_ch;
        }
    }
    for (int r = 0; r < rows_ - 1; ++r) {
        for (int c = 0; c < cols_; ++c) {
            size_t f = yface(r, c);
            double w_fp, w_ch;
            face_widths(idx(r, c), idx(r + 1, c), w_fp, w_ch);
            Fy[f] = qy_[f] * w_fp;
            Fcy[f] = qcy_[f] * w_ch;
        }
    }

    // free-outfall boundary flux per open-edge cell (always outward)
    std::vector<double>& bnd = bnd_;
    std::fill(bnd.begin(), bnd.end(), 0.0);
    auto edge_open = [&](Edge e) {
        return std::find(config_.open_edges.begin(), config_.open_edges.end(), e) !=
               config_.open_edges.end();
    };
    auto outfall = [&](int r, int c, int r_in, int c_in) {
        size_t i = idx(r, c);
        if (dem_.is_nodata(r, c)) return;
        double s_ground = config_.outfall_min_slope;
        if (dem_.in_bounds(r_in, c_in) && !dem_.is_nodata(r_in, c_in))
            s_ground = std::max(s_ground,
                                (dem_.at(r_in, c_in) - dem_.data[i]) / dx_);
        double flux = 0.0;
        double h_fp = eta_[i] - dem_.data[i];
        double w_ch = is_channel_[i] ? chan_width_[i] : 0.0;
        if (h_fp > h_dry)
            flux += std::pow(h_fp, 5.0 / 3.0) * std::sqrt(s_ground) / n * (dx_ - w_ch);
        if (is_channel_[i]) {
            double h_ch = eta_[i] - chan_bed_[i];
            if (h_ch > h_dry)
                flux += std::pow(h_ch, 5.0 / 3.0) * std::sqrt(s_ground) / n * w_ch;
        }
        bnd[i] += flux;
    };
    if (edge_open(Edge::North))
        for (int c = 0; c < cols_; ++c) outfall(0, c, 1, c);
    if (edge_open(Edge::South))
        for (int c = 0; c < cols_; ++c) outfall(rows_ - 1, c, rows_ - 2, c);
    if (edge_open(Edge::West))
        for (int r = 0; r < rows_; ++r) outfall(r, 0, r, 1);
    if (edge_open(Edge::East))
        for (int r = 0; r < rows_; ++r) outfall(r, cols_ - 1, r, cols_ - 2);

    // donor-side limiting keeps volumes non-negative
    std::vector<double>& limiter = limiter_;
    std::fill(limiter.begin(), limiter.end(), 1.0);
    for (int r = 0; r < rows_; ++r) {
        for (int c = 0; c < cols_; ++c) {
            size_t i = idx(r, c);
            double out_w = 0.0, out_e = 0.0, out_n = 0.0, out_s = 0.0;
            if (c > 0) {
                size_t f = xface(r, c - 1);
                out_w = std::max(-Fx[f], 0.0) + std::max(-Fcx[f], 0.0);
            }
            if (c < cols_ - 1) {
                size_t f = xface(r, c);
                out_e = std::max(Fx[f], 0.0) + std::max(Fcx[f], 0.0);
            }
            if (r > 0) {
                size_t f = yface(r - 1, c);
                out_n = std::max(-Fy[f], 0.0) + std::max(-Fcy[f], 0.0);
            }
            if (r < rows_ - 1) {
                size_t f = yface(r, c);
                out_s = std::max(Fy[f], 0.0) + std::max(Fcy[f], 0.0);
            }
            double out = (out_w + out_e) + (out_n + out_s) + bnd[i];
            if (out * dt > volume_[i])
                limiter[i] = volume_[i] / (out * dt);
        }
    }

    auto scale_face = [&](std::vector<double>& F, std::vector<double>& q, size_t f,
                          size_t donor_pos, size_t donor_neg) {
        double lam = F[f] > 0.0 ? limiter[donor_pos] : limiter[donor_neg];
        if (lam < 1.0) {
            F[f] *= lam;
            q[f] *= lam;
        }
    };
    for (int r = 0; r < rows_; ++r) {
        for (int c = 0; c < cols_ - 1; ++c) {
            size_t f = xface(r, c);
            scale_face(Fx, qx_, f, idx(r, c), idx(r, c + 1));
            scale_face(Fcx, qcx_, f, idx(r, c), idx(r, c + 1));
        }
    }
    for (int r = 0; r < rows_ - 1; ++r) {
        for (int c = 0; c < cols_; ++c) {
            size_t f = yface(r, c);
            scale_face(Fy, qy_, f, idx(r, c), idx(r + 1, c));
            scale_face(Fcy, qcy_, f, idx(r, c), idx(r + 1, c));
        }
    }

    // mass update
    for (int r = 0; r < rows_; ++r) {
        for (int c = 0; c < cols_; ++c) {
            size_t i = idx(r, c);
            double in_w = 0.0, in_e = 0.0, in_n = 0.0, in_s = 0.0;
            if (c > 0) {
                size_t f = xface(r, c - 1);
                in_w = Fx[f] + Fcx[f];
            }
            if (c < cols_ - 1) {
                size_t f = xface(r, c);
                in_e = -(Fx[f] + Fcx[f]);
            }
            if (r > 0) {
                size_t f = yface(r - 1, c);
                in_n = Fy[f] + Fcy[f];
            }
            if (r < rows_ - 1) {
                size_t f = yface(r, c);
                in_s = -(Fy[f] + Fcy[f]);
            }
            double out_b = limiter[i] < 1.0 ? bnd[i] * limiter[i] : bnd[i];
            double net = (in_w + in_e) + (in_n + in_s) - out_b;
            volume_[i] += net * dt;
            if (volume_[i] < 0.0) volume_[i] = 0.0;  // roundoff guard
            boundary_outflow_ += out_b * dt;
        }
    }
}

void FlowSolver::step(double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
    update_faces(dt);
    apply_fluxes(dt);
    compute_surfaces();
    for (double v : volume_)
        if (!std::isfinite(v))
            throw std::runtime_error("non-finite state at t=" + std::to_string(time_));
    time_ += dt;
}

Raster FlowSolver::depth_raster() const {
    Raster d = dem_.like(0.0);
    for (int r = 0; r < rows_; ++r) {
        for (int c = 0; c < cols_; ++c) {
            size_t i = idx(r, c);
            if (dem_.is_nodata(r, c)) {
                d.data[i] = d.nodata;
                continue;
            }
            d.data[i] = std::max(eta_[i] - dem_.data[i], 0.0);
        }
    }
    return d;
}

Raster FlowSolver::wet_mask() const {
    Raster m = dem_.like(0.0);
    for (int r = 0; r < rows_; ++r) {
        for (int c = 0; c < cols_; ++c) {
            size_t i = idx(r, c);
            if (dem_.is_nodata(r, c)) continue;
            m.data[i] = (eta_[i] - dem_.data[i] > config_.h_dry) ? 1.0 : 0.0;
        }
    }
    return m;
}

double FlowSolver::wet_area_km2() const {
    long wet = 0;
    for (int r = 0; r < rows_; ++r)
        for (int c = 0; c < cols_; ++c) {
            size_t i = idx(r, c);
            if (!dem_.is_nodata(r, c) && eta_[i] - dem_.data[i] > config_.h_dry) ++wet;
        }
    return static_cast<double>(wet) * dx_ * dx_ * 1e-6;
}

double FlowSolver::total_volume() const {
    double v = 0.0;
    for (double x : volume_) v += x;
    return v;
}

InundationMap FlowSolver::run_to_steady(const std::vector<Inflow>& inflows) {
    const bool has_channels =
        std::any_of(is_channel_.begin(), is_channel_.end(), [](char c) { return c != 0; });
    for (const auto& n : inflows) {
        if (!dem_.in_bounds(n.row, n.col))
            throw std::invalid_argument("inflow node off grid");
        if (n.q_m3s < 0.0) throw std::invalid_argument("negative inflow");
        if (has_channels && !is_channel_[idx(n.row, n.col)])
            throw std::invalid_argument("inflow node off channel");
    }

    MassLedger ledger;
    ledger.storage_initial = total_volume();
    boundary_outflow_ = 0.0;

    const int window = config_.convergence_window;
    std::deque<double> area_hist, vol_hist;
    bool converged = false;
    long steps = 0;
    double t0 = time_;

    while (time_ - t0 < config_.max_sim_time) {
        double dt = adaptive_timestep();
        step(dt);
        for (const auto& n : inflows) {
            size_t i = idx(n.row, n.col);
            volume_[i] += n.q_m3s * dt;
            eta_[i] = surface_elevation(n.row, n.col);
            ledger.inflow += n.q_m3s * dt;
        }
        ++steps;

        double area = wet_area_km2();
        double vol = total_volume();
        area_hist.push_back(area);
        vol_hist.push_back(vol);
        if (static_cast<int>(area_hist.size()) > window) {
            area_hist.pop_front();
            vol_hist.pop_front();
            double da = std::abs(area - area_hist.front()) / std::max(area, 1e-12);
            double dv = std::abs(vol - vol_hist.front()) / std::max(vol, 1e-12);
            if (da < config_.convergence_tol && dv < config_.convergence_tol) {
                converged = true;
                break;
            }
        }
    }

    ledger.outflow = boundary_outflow_;
    ledger.storage_final = total_volume();

    InundationMap map;
    map.depth = depth_raster();
    map.wet_mask = wet_mask();
    map.area_km2 = wet_area_km2();
    map.converged = converged;
    map.steps = steps;
    map.sim_time = time_ - t0;
    map.ledger = ledger;
    return map;
}

}  // namespace floodcast

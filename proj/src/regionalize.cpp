#include "floodcast/regionalize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "floodcast/series.hpp"
#include "floodcast/stats.hpp"

namespace floodcast {

double PeakRatio::at(double area_km2) const {
    return beta_ratio * std::pow(area_km2, alpha_diff);
}

ScalingFit fit_scaling(const std::vector<GagePeak>& points) {
    if (points.size() < 2)
        throw std::invalid_argument("fit_scaling: need at least 2 points");

    std::vector<double> lx, ly;
    lx.reserve(points.size());
    ly.reserve(points.size());
    for (const auto& p : points) {
        if (p.area_km2 <= 0.0 || p.qp_m3s <= 0.0)
            throw std::invalid_argument("fit_scaling: non-positive area or peak");
        lx.push_back(std::log(p.area_km2));
        ly.push_back(std::log(p.qp_m3s));
    }
    double mx = mean(lx), my = mean(ly);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx == 0.0)
        throw std::invalid_argument("fit_scaling: all drainage areas identical");

    ScalingFit fit;
    fit.alpha = sxy / sxx;
    fit.beta = std::exp(my - fit.alpha * mx);
    fit.r = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 1.0;  // flat data fits exactly
    fit.epoch = points.front().epoch;
    return fit;
}

double predict_peak(const ScalingFit& fit, double area_km2) {
    if (area_km2 <= 0.0) throw std::invalid_argument("predict_peak: non-positive area");
    return fit.beta * std::pow(area_km2, fit.alpha);
}

PeakRatio peak_ratio(const ScalingFit& fit_future, const ScalingFit& fit_base) {
    return {fit_future.beta / fit_base.beta, fit_future.alpha - fit_base.alpha};
}

std::vector<GagePeak> read_gage_peaks_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open gage peaks: " + path);
    std::string line;
    std::getline(in, line);  // header: gage_id,area_km2,qp_m3s,epoch
    std::vector<GagePeak> out;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        auto f = split_csv_line(line);
        if (f.size() < 4) throw std::runtime_error("bad gage peak row: " + line);
        out.push_back({f[0], std::stod(f[1]), std::stod(f[2]), f[3]});
    }
    return out;
}

void write_gage_peaks_csv(const std::vector<GagePeak>& points, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write gage peaks: " + path);
    std::fprintf(f, "gage_id,area_km2,qp_m3s,epoch\n");
    for (const auto& p : points)
        std::fprintf(f, "%s,%.10g,%.10g,%s\n", p.gage_id.c_str(), p.area_km2, p.qp_m3s,
                     p.epoch.c_str());
    std::fclose(f);
}

void write_scaling_fits_csv(const std::vector<ScalingFit>& fits, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write scaling fits: " + path);
    std::fprintf(f, "epoch,beta,alpha,r\n");
    for (const auto& s : fits)
        std::fprintf(f, "%s,%.10g,%.10g,%.10g\n", s.epoch.c_str(), s.beta, s.alpha, s.r);
    std::fclose(f);
}

}  // namespace floodcast

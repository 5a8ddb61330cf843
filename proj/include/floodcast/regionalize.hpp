#pragma once

#include <string>
#include <vector>

namespace floodcast {

/// 100-yr peak at a gaged location with its drainage area.
struct GagePeak {
    std::string gage_id;
    double area_km2 = 0.0;
    double qp_m3s = 0.0;
    std::string epoch;
};

/// Drainage-area scaling law Q_p = beta A^alpha fitted in log-log space.
struct ScalingFit {
    double beta = 0.0;   // m3/s per km^(2 alpha)
    double alpha = 0.0;
    double r = 0.0;      // Pearson correlation of (ln A, ln Qp)
    std::string epoch;
};

/// Epoch-ratio power law Q_f/Q_b = beta_ratio A^alpha_diff.
struct PeakRatio {
    double beta_ratio = 0.0;
    double alpha_diff = 0.0;

    double at(double area_km2) const;
};

/// Ordinary least squares on (ln A, ln Qp). Needs >= 2 distinct areas.
ScalingFit fit_scaling(const std::vector<GagePeak>& points);

/// Evaluate the fitted law at drainage area A (km2).
double predict_peak(const ScalingFit& fit, double area_km2);

/// Ratio law between two epoch fits.
PeakRatio peak_ratio(const ScalingFit& fit_future, const ScalingFit& fit_base);

std::vector<GagePeak> read_gage_peaks_csv(const std::string& path);
void write_gage_peaks_csv(const std::vector<GagePeak>& points, const std::string& path);
void write_scaling_fits_csv(const std::vector<ScalingFit>& fits, const std::string& path);

}  // namespace floodcast

#pragma once

#include <optional>
#include <span>
#include <vector>

namespace mcfsim {

inline constexpr double kSnrCapDb = 60.0;

// 10 log10(E[d^2] / E[(y - d)^2]) using decided levels d. Zero error power
// returns the 60 dB cap.
double estimate_snr(std::span<const double> y, std::span<const double> d);

struct GaussianFit {
    double amplitude;
    double mean;
    double sigma;
    double r2;
};

// Fits A exp(-(x-m)^2 / (2 s^2)) to a 64-bin histogram of the pooled
// residuals y - d over mean +/- 4 std and reports the coefficient of
// determination on the bin counts. Empty when the residuals are degenerate.
std::optional<GaussianFit> fit_gaussian_residuals(std::span<const double> residuals);
std::optional<double> gaussian_fit_r2(std::span<const double> y, std::span<const double> d);

struct SweepPoint {
    double xt_db;
    double snr_db;
};

struct AcceptableXt {
    double xt_db;
    bool crossed;  // false: no penalty crossing inside the sweep; xt_db is a boundary
};

// Largest XT at which the piecewise-linear SNR(xt) still meets
// baseline - penalty. Points must be sorted by ascending xt.
AcceptableXt max_acceptable_xt(std::span<const SweepPoint> sweep, double baseline_snr_db,
                               double penalty_db = 0.1);

struct XtStatistics {
    double mean_db;
    double std_db;
    double p05_db;
    double p95_db;
};

// dB-domain statistics of realized XT. Needs at least 30 values.
XtStatistics xt_statistics(std::span<const double> realized_xt_db);

// Shared helpers (sample standard deviation, linear-interpolated quantile).
double mean_of(std::span<const double> v);
double stddev_of(std::span<const double> v);
double quantile_of(std::vector<double> v, double q);

}  // namespace mcfsim

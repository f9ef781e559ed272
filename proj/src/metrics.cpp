#include "mcfsim/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace mcfsim {

double mean_of(std::span<const double> v) {
    if (v.empty()) return std::nan("");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

double quantile_of(std::vector<double> v, double q) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double estimate_snr(std::span<const double> y, std::span<const double> d) {
    if (y.size() != d.size() || y.empty()) throw std::invalid_argument("estimate_snr: size mismatch");
    double sig = 0.0, err = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        sig += d[k] * d[k];
        err += (y[k] - d[k]) * (y[k] - d[k]);
    }
    if (err <= 0.0) return kSnrCapDb;
    return std::min(kSnrCapDb, 10.0 * std::log10(sig / err));
}

namespace {

constexpr int kBins = 64;

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

bool solve3(Mat3 a, Vec3 b, Vec3& x) {
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (std::abs(a[piv][c]) < 1e-300) return false;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (int r = c + 1; r < 3; ++r) {
            const double f = a[r][c] / a[c][c];
            for (int k = c; k < 3; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    for (int r = 2; r >= 0; --r) {
        double s = b[r];
        for (int k = r + 1; k < 3; ++k) s -= a[r][k] * x[k];
        x[r] = s / a[r][r];
    }
    return true;
}

double sse(const std::vector<double>& xs, const std::vector<double>& ys, const Vec3& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double z = (xs[i] - p[1]) / p[2];
        const double r = ys[i] - p[0] * std::exp(-0.5 * z * z);
        s += r * r;
    }
    return s;
}

}  // namespace

std::optional<GaussianFit> fit_gaussian_residuals(std::span<const double> r) {
    if (r.size() < 2) return std::nullopt;
    const double m0 = mean_of(r);
    const double s0 = stddev_of(r);
    if (!(s0 > 0.0) || !std::isfinite(s0)) return std::nullopt;

    const double lo = m0 - 4.0 * s0;
    const double width = 8.0 * s0 / kBins;
    std::vector<double> counts(kBins, 0.0), centres(kBins);
    for (int b = 0; b < kBins; ++b) centres[static_cast<std::size_t>(b)] = lo + (b + 0.5) * width;
    for (double v : r) {
        const auto b = static_cast<long>(std::floor((v - lo) / width));
        if (b >= 0 && b < kBins) counts[static_cast<std::size_t>(b)] += 1.0;
    }

    // Levenberg-Marquardt from the moment estimate.
    Vec3 p{static_cast<double>(r.size()) * width / (s0 * std::sqrt(2.0 * std::numbers::pi)), m0, s0};
    double lambda = 1e-3;
    double cost = sse(centres, counts, p);
    for (int it = 0; it < 200; ++it) {
        Mat3 jtj{};
        Vec3 jtr{};
        for (int i = 0; i < kBins; ++i) {
            const double x = centres[static_cast<std::size_t>(i)];
            const double z = (x - p[1]) / p[2];
            const double g = std::exp(-0.5 * z * z);
            const Vec3 j{g, p[0] * g * z / p[2], p[0] * g * z * z / p[2]};
            const double res = counts[static_cast<std::size_t>(i)] - p[0] * g;
            for (int a = 0; a < 3; ++a) {
                jtr[a] += j[a] * res;
                for (int b = 0; b < 3; ++b) jtj[a][b] += j[a] * j[b];
            }
        }
        bool improved = false;
        for (int tries = 0; tries < 20 && !improved; ++tries) {
            Mat3 a = jtj;
            for (int d = 0; d < 3; ++d) a[d][d] *= 1.0 + lambda;
            Vec3 step{};
            if (!solve3(a, jtr, step)) {
                lambda *= 10.0;
                continue;
            }
            Vec3 trial{p[0] + step[0], p[1] + step[1], p[2] + step[2]};
            if (trial[2] <= 0.0) {
                lambda *= 10.0;
                continue;
            }
            const double c = sse(centres, counts, trial);
            if (c < cost) {
                const double rel = (cost - c) / std::max(cost, 1e-300);
                p = trial;
                cost = c;
                lambda = std::max(lambda / 10.0, 1e-12);
                improved = true;
                if (rel < 1e-12) it = 200;
            } else {
                lambda *= 10.0;
            }
        }
        if (!improved) break;
    }

    const double mean_count = mean_of(counts);
    double ss_tot = 0.0;
    for (double c : counts) ss_tot += (c - mean_count) * (c - mean_count);
    if (!(ss_tot > 0.0)) return std::nullopt;
    return GaussianFit{p[0], p[1], std::abs(p[2]), 1.0 - cost / ss_tot};
}

std::optional<double> gaussian_fit_r2(std::span<const double> y, std::span<const double> d) {
    if (y.size() != d.size()) throw std::invalid_argument("gaussian_fit_r2: size mismatch");
    std::vector<double> r(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) r[k] = y[k] - d[k];
    const auto fit = fit_gaussian_residuals(r);
    if (!fit) return std::nullopt;
    return fit->r2;
}

AcceptableXt max_acceptable_xt(std::span<const SweepPoint> sweep, double baseline_snr_db,
                               double penalty_db) {
    if (sweep.empty()) throw std::invalid_argument("max_acceptable_xt: empty sweep");
    for (std::size_t k = 1; k < sweep.size(); ++k)
        if (!(sweep[k].xt_db > sweep[k - 1].xt_db))
            throw std::invalid_argument("max_acceptable_xt: xt values must ascend");

    const double thr = baseline_snr_db - penalty_db;
    if (sweep.back().snr_db >= thr) return {sweep.back().xt_db, false};

    // Supremum of {x : snr(x) >= thr}: scan down from the top for the last
    // segment that starts at or above the threshold.
    for (std::size_t k = sweep.size() - 1; k > 0; --k) {
        const auto& a = sweep[k - 1];
        const auto& b = sweep[k];
        if (a.snr_db >= thr) {
            const double t = (a.snr_db - thr) / (a.snr_db - b.snr_db);
            return {a.xt_db + t * (b.xt_db - a.xt_db), true};
        }
    }
    return {sweep.front().xt_db, false};
}

XtStatistics xt_statistics(std::span<const double> v) {
    if (v.size() < 30) throw std::invalid_argument("xt_statistics: need at least 30 trials");
    std::vector<double> copy(v.begin(), v.end());
    return {mean_of(v), stddev_of(v), quantile_of(copy, 0.05), quantile_of(copy, 0.95)};
}

}  // namespace mcfsim

#include "mcfsim/rx.hpp"

#include "mcfsim/tx.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mcfsim {

void RxConfig::validate() const {
    if (ff_taps < 1 || ff_taps % 2 == 0) throw std::invalid_argument("RxConfig: ff_taps must be odd");
    if (fb_taps < 0) throw std::invalid_argument("RxConfig: fb_taps must be >= 0");
    if (!(lms_mu >= 0.0)) throw std::invalid_argument("RxConfig: lms_mu must be >= 0");
    if (!(lpf_bw_fraction > 0.0)) throw std::invalid_argument("RxConfig: lpf bandwidth must be positive");
    if (sps_eq != 2) throw std::invalid_argument("RxConfig: only T/2 equalization is supported");
}

RealSignal photodetect(const Waveform& field, double responsivity) {
    RealSignal out{std::vector<double>(field.size()), field.sample_rate()};
    for (std::size_t n = 0; n < field.size(); ++n)
        out.samples[n] = responsivity * std::norm(field.samples()[n]) * 1e-3;
    return out;
}

namespace {

// 945 / (s^5 + 15 s^4 + 105 s^3 + 420 s^2 + 945 s + 945), unit group delay.
double bessel5_normalized(double w) {
    const cplx s(0.0, w);
    const cplx den = ((((s + 15.0) * s + 105.0) * s + 420.0) * s + 945.0) * s + 945.0;
    return 945.0 / std::abs(den);
}

double bessel5_corner() {
    static const double corner = [] {
        double lo = 0.5, hi = 10.0;
        const double target = 1.0 / std::sqrt(2.0);
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (bessel5_normalized(mid) > target ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }();
    return corner;
}

}  // namespace

double bessel5_magnitude(double f, double bw) {
    return bessel5_normalized(bessel5_corner() * f / bw);
}

RealSignal lowpass(const RealSignal& in, double bw) {
    if (!(bw > 0.0) || bw >= in.sample_rate / 2.0)
        throw std::invalid_argument("lowpass: bandwidth must be in (0, rate/2)");
    std::vector<cplx> spec(in.samples.begin(), in.samples.end());
    fft_forward(spec, spec);
    const auto f = freq_axis(spec.size(), in.sample_rate);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= bessel5_magnitude(f[k], bw);
    fft_inverse(spec, spec);
    RealSignal out{std::vector<double>(spec.size()), in.sample_rate};
    for (std::size_t k = 0; k < spec.size(); ++k) out.samples[k] = spec[k].real();
    return out;
}

RealSignal matched_filter(const RealSignal& in, double rolloff, int span_symbols, int sps) {
    const auto taps = rrc_taps(rolloff, span_symbols, sps);
    const std::size_t n = in.samples.size();
    std::vector<cplx> kernel(n, cplx{});
    const auto mid = static_cast<std::ptrdiff_t>(taps.size() / 2);
    const auto nn = static_cast<std::ptrdiff_t>(n);
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(taps.size()); ++k) {
        const std::ptrdiff_t idx = ((k - mid) % nn + nn) % nn;
        kernel[static_cast<std::size_t>(idx)] += taps[static_cast<std::size_t>(k)];
    }
    std::vector<cplx> spec(in.samples.begin(), in.samples.end());
    fft_forward(spec, spec);
    fft_forward(kernel, kernel);
    for (std::size_t k = 0; k < n; ++k) spec[k] *= kernel[k];
    fft_inverse(spec, spec);
    RealSignal out{std::vector<double>(n), in.sample_rate};
    for (std::size_t k = 0; k < n; ++k) out.samples[k] = spec[k].real();
    return out;
}

TimingResult timing_recover_maxvar(std::span<const double> in, int sps_in, int sps_out) {
    if (sps_in <= 0 || sps_out <= 0 || sps_in % sps_out != 0)
        throw std::invalid_argument("timing_recover_maxvar: sps_in must be a multiple of sps_out");
    const auto n = in.size();
    const auto step_sym = static_cast<std::size_t>(sps_in);
    const auto step_out = static_cast<std::size_t>(sps_in / sps_out);
    const std::size_t n_sym = n / step_sym;
    if (n_sym < 2) throw std::invalid_argument("timing_recover_maxvar: input too short");

    std::size_t best = 0;
    double best_var = -1.0;
    for (std::size_t p = 0; p < step_sym; ++p) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t m = 0; m < n_sym; ++m) {
            const double v = in[(p + m * step_sym) % n];
            s += v;
            s2 += v * v;
        }
        const double mean = s / static_cast<double>(n_sym);
        const double var = s2 / static_cast<double>(n_sym) - mean * mean;
        if (var > best_var * (1.0 + 1e-12) + 1e-300) {
            best_var = var;
            best = p;
        }
    }

    TimingResult out{std::vector<double>(n_sym * static_cast<std::size_t>(sps_out)), best};
    for (std::size_t k = 0; k < out.samples.size(); ++k) out.samples[k] = in[(best + k * step_out) % n];
    return out;
}

std::vector<double> normalize(std::span<const double> x) {
    if (x.empty()) return {};
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = (x[k] - mean) * inv;
    return out;
}

std::vector<double> normalized_levels(int pam_order) {
    if (pam_order == 2) return {-1.0, 1.0};
    if (pam_order == 4) {
        const double s = 1.0 / std::sqrt(5.0);
        return {-3.0 * s, -s, s, 3.0 * s};
    }
    throw std::invalid_argument("normalized_levels: order must be 2 or 4");
}

std::size_t nearest_level(double y, std::span<const double> levels) {
    // Levels ascend; walk up while strictly past the midpoint.
    std::size_t idx = 0;
    while (idx + 1 < levels.size() && y > 0.5 * (levels[idx] + levels[idx + 1])) ++idx;
    return idx;
}

EqualizerOutput ddlms_equalize(std::span<const double> x, std::span<const double> levels,
                               const RxConfig& cfg, std::span<const std::size_t> truth) {
    cfg.validate();
    if (levels.size() < 2) throw std::invalid_argument("ddlms_equalize: need at least two levels");
    if (x.size() < 2) throw std::invalid_argument("ddlms_equalize: input too short");
    const std::size_t n_sym = x.size() / 2;
    if (cfg.train_with_truth && truth.size() < n_sym)
        throw std::invalid_argument("ddlms_equalize: truth sequence too short");

    const auto nff = static_cast<std::size_t>(cfg.ff_taps);
    const auto nfb = static_cast<std::size_t>(cfg.fb_taps);
    const auto centre = static_cast<std::ptrdiff_t>(nff / 2);
    const auto nx = static_cast<std::ptrdiff_t>(x.size());

    EqualizerOutput out;
    auto& ff = out.state.ff_weights;
    auto& fb = out.state.fb_weights;
    ff.assign(nff, 0.0);
    ff[nff / 2] = 1.0;
    fb.assign(nfb, 0.0);
    out.y.resize(n_sym);
    out.decisions.resize(n_sym);

    std::vector<double> window(nff);
    std::vector<double> history(nfb, 0.0);  // history[0] = d(n-1)
    const double mu = cfg.lms_mu;
    double err_acc = 0.0;
    std::size_t err_count = 0;

    for (std::size_t n = 0; n < n_sym; ++n) {
        const auto base = static_cast<std::ptrdiff_t>(2 * n) - centre;
        double y = 0.0;
        for (std::size_t k = 0; k < nff; ++k) {
            const std::ptrdiff_t idx = ((base + static_cast<std::ptrdiff_t>(k)) % nx + nx) % nx;
            window[k] = x[static_cast<std::size_t>(idx)];
            y += ff[k] * window[k];
        }
        for (std::size_t k = 0; k < nfb; ++k) y -= fb[k] * history[k];
        y += out.state.bias;

        const std::size_t dec = nearest_level(y, levels);
        const std::size_t ref = cfg.train_with_truth ? truth[n] : dec;
        const double d = levels[ref];
        const double e = d - y;

        for (std::size_t k = 0; k < nff; ++k) ff[k] += mu * e * window[k];
        for (std::size_t k = 0; k < nfb; ++k) fb[k] -= mu * e * history[k];
        out.state.bias += mu * e;

        out.y[n] = y;
        out.decisions[n] = dec;
        if (n >= cfg.train_symbols || cfg.train_symbols >= n_sym) {
            err_acc += e * e;
            ++err_count;
        }
        if (nfb > 0) {
            std::rotate(history.rbegin(), history.rbegin() + 1, history.rend());
            history[0] = d;
        }
    }

    out.state.final_mse = err_count > 0 ? err_acc / static_cast<double>(err_count) : 0.0;
    const auto finite = [](double v) { return std::isfinite(v); };
    out.state.converged = std::isfinite(out.state.final_mse) && out.state.final_mse <= 1.0 &&
                          std::isfinite(out.state.bias) &&
                          std::all_of(ff.begin(), ff.end(), finite) &&
                          std::all_of(fb.begin(), fb.end(), finite);
    return out;
}

std::vector<std::uint8_t> demap_levels(std::span<const std::size_t> idx, int pam_order) {
    if (pam_order == 2) {
        std::vector<std::uint8_t> bits(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) bits[k] = idx[k] ? 1 : 0;
        return bits;
    }
    if (pam_order != 4) throw std::invalid_argument("demap_levels: order must be 2 or 4");
    // Level index -> Gray code: 0 -> 00, 1 -> 01, 2 -> 11, 3 -> 10.
    static constexpr std::uint8_t kLevelToGray[4] = {0b00, 0b01, 0b11, 0b10};
    std::vector<std::uint8_t> bits(2 * idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto g = kLevelToGray[idx[k] & 3u];
        bits[2 * k] = (g >> 1) & 1u;
        bits[2 * k + 1] = g & 1u;
    }
    return bits;
}

std::vector<std::uint8_t> decide(std::span<const double> y, std::span<const double> levels) {
    if (levels.size() != 2 && levels.size() != 4)
        throw std::invalid_argument("decide: expected 2 or 4 levels");
    std::vector<std::size_t> idx(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) idx[k] = nearest_level(y[k], levels);
    return demap_levels(idx, static_cast<int>(levels.size()));
}

}  // namespace mcfsim

#include "mcfsim/tx.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mcfsim {

void TxConfig::validate() const {
    if (pam_order != 2 && pam_order != 4)
        throw std::invalid_argument("TxConfig: pam_order must be 2 or 4");
    if (!(rolloff > 0.0 && rolloff < 1.0))
        throw std::invalid_argument("TxConfig: rolloff must be in (0, 1)");
    if (sps < 2) throw std::invalid_argument("TxConfig: sps must be >= 2");
    if (!(baud > 0.0)) throw std::invalid_argument("TxConfig: baud must be positive");
    if (prbs_seed == 0 || prbs_seed > 0x7fff)
        throw std::invalid_argument("TxConfig: prbs_seed must be a nonzero 15-bit value");
    if (n_symbols == 0 || n_symbols > kPrbs15Period)
        throw std::invalid_argument("TxConfig: n_symbols must be in [1, 32767]");
    if (!(linewidth >= 0.0)) throw std::invalid_argument("TxConfig: linewidth must be >= 0");
    if (std::abs(laser_offset) >= sample_rate() / 2.0)
        throw std::invalid_argument("TxConfig: laser offset aliases");
    if (rrc_span_symbols < 8 || rrc_span_symbols % 2 != 0)
        throw std::invalid_argument("TxConfig: rrc span must be even and >= 8");
    if (!(extinction_db > 0.0)) throw std::invalid_argument("TxConfig: extinction must be > 0 dB");
}

std::vector<std::uint8_t> prbs15(std::uint32_t seed, std::size_t n) {
    if ((seed & 0x7fff) == 0) throw std::invalid_argument("prbs15: seed must be nonzero");
    std::uint32_t state = seed & 0x7fff;
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) {
        const std::uint32_t fb = ((state >> 14) ^ (state >> 13)) & 1u;
        state = ((state << 1) | fb) & 0x7fff;
        b = static_cast<std::uint8_t>(fb);
    }
    return bits;
}

std::vector<double> pam_levels(int pam_order) {
    if (pam_order == 2) return {0.0, 1.0};
    if (pam_order == 4) return {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
    throw std::invalid_argument("pam_levels: order must be 2 or 4");
}

std::vector<double> map_pam(std::span<const std::uint8_t> bits, int pam_order) {
    if (pam_order == 2) {
        std::vector<double> out(bits.size());
        std::transform(bits.begin(), bits.end(), out.begin(),
                       [](std::uint8_t b) { return b ? 1.0 : 0.0; });
        return out;
    }
    if (pam_order != 4) throw std::invalid_argument("map_pam: order must be 2 or 4");
    if (bits.size() % 2 != 0) throw std::invalid_argument("map_pam: PAM-4 needs an even bit count");

    // Gray index: 00 -> 0, 01 -> 1, 11 -> 2, 10 -> 3.
    static constexpr int kGrayToLevel[4] = {0, 1, 3, 2};
    std::vector<double> out(bits.size() / 2);
    for (std::size_t k = 0; k < out.size(); ++k) {
        const int code = (bits[2 * k] ? 2 : 0) | (bits[2 * k + 1] ? 1 : 0);
        out[k] = kGrayToLevel[code] / 3.0;
    }
    return out;
}

std::vector<double> rrc_taps(double rolloff, int span_symbols, int sps) {
    if (span_symbols < 8 || span_symbols % 2 != 0)
        throw std::invalid_argument("rrc_taps: span must be even and >= 8");
    if (!(rolloff > 0.0 && rolloff < 1.0)) throw std::invalid_argument("rrc_taps: rolloff in (0,1)");
    if (sps < 1) throw std::invalid_argument("rrc_taps: sps must be positive");

    using std::numbers::pi;
    const double b = rolloff;
    const int len = span_symbols * sps + 1;
    const int mid = span_symbols * sps / 2;
    std::vector<double> h(static_cast<std::size_t>(len));
    for (int k = 0; k < len; ++k) {
        const double t = static_cast<double>(k - mid) / sps;  // in symbol periods
        double v;
        if (k == mid) {
            v = 1.0 - b + 4.0 * b / pi;
        } else if (std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-12) {
            v = b / std::numbers::sqrt2 *
                ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * b)) +
                 (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * b)));
        } else {
            const double x = 4.0 * b * t;
            v = (std::sin(pi * t * (1.0 - b)) + 4.0 * b * t * std::cos(pi * t * (1.0 + b))) /
                (pi * t * (1.0 - x * x));
        }
        h[static_cast<std::size_t>(k)] = v;
    }
    double energy = 0.0;
    for (double v : h) energy += v * v;
    const double norm = 1.0 / std::sqrt(energy);
    for (double& v : h) v *= norm;
    return h;
}

Waveform shape(std::span<const double> symbols, const TxConfig& cfg) {
    if (symbols.empty()) throw std::invalid_argument("shape: no symbols");
    const auto sps = static_cast<std::size_t>(cfg.sps);
    const std::size_t n = symbols.size() * sps;

    std::vector<cplx> up(n, cplx{});
    for (std::size_t k = 0; k < symbols.size(); ++k) up[k * sps] = symbols[k];

    // Circularly wrapped, zero-centred tap vector with DC gain sps.
    const auto taps = rrc_taps(cfg.rolloff, cfg.rrc_span_symbols, cfg.sps);
    double sum = 0.0;
    for (double v : taps) sum += v;
    const double gain = static_cast<double>(sps) / sum;
    std::vector<cplx> kernel(n, cplx{});
    const auto mid = static_cast<std::ptrdiff_t>(taps.size() / 2);
    const auto nn = static_cast<std::ptrdiff_t>(n);
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(taps.size()); ++k) {
        const std::ptrdiff_t idx = ((k - mid) % nn + nn) % nn;
        kernel[static_cast<std::size_t>(idx)] += taps[static_cast<std::size_t>(k)] * gain;
    }

    auto spec = fft(up);
    const auto kspec = fft(kernel);
    for (std::size_t k = 0; k < n; ++k) spec[k] *= kspec[k];
    fft_inverse(spec, spec);
    for (auto& v : spec) v = cplx(v.real(), 0.0);
    return Waveform(std::move(spec), cfg.sample_rate());
}

Waveform normalize_drive(const Waveform& drive) {
    double lo = drive.samples().front().real();
    double hi = lo;
    for (const auto& v : drive.samples()) {
        lo = std::min(lo, v.real());
        hi = std::max(hi, v.real());
    }
    std::vector<cplx> out(drive.size());
    if (hi - lo <= 0.0) {
        std::fill(out.begin(), out.end(), cplx(std::clamp(lo, 0.0, 1.0), 0.0));
    } else {
        const double scale = 1.0 / (hi - lo);
        for (std::size_t k = 0; k < out.size(); ++k)
            out[k] = cplx((drive.samples()[k].real() - lo) * scale, 0.0);
    }
    return Waveform(std::move(out), drive.sample_rate(), drive.carrier_offset());
}

Waveform laser(const TxConfig& cfg, std::size_t n_samples, Rng& rng) {
    if (!(cfg.linewidth >= 0.0)) throw std::invalid_argument("laser: linewidth must be >= 0");
    if (n_samples == 0) throw std::invalid_argument("laser: no samples");
    const double rate = cfg.sample_rate();
    const double two_pi = 2.0 * std::numbers::pi;
    const double sigma = std::sqrt(two_pi * cfg.linewidth / rate);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<cplx> out(n_samples);
    double phi = 0.0;
    for (std::size_t n = 0; n < n_samples; ++n) {
        if (n > 0 && sigma > 0.0) phi += sigma * gauss(rng);
        const double t = static_cast<double>(n) / rate;
        out[n] = std::polar(1.0, std::fmod(two_pi * cfg.laser_offset * t, two_pi) + phi);
    }
    return Waveform(std::move(out), rate, cfg.laser_offset);
}

std::vector<double> mzm_power_transfer(const Waveform& drive, double extinction_db) {
    if (!(extinction_db > 0.0)) throw std::invalid_argument("mzm: extinction must be > 0 dB");
    const double p_max = 1.0;
    const double p_min = std::isinf(extinction_db) ? 0.0 : p_max / std::pow(10.0, extinction_db / 10.0);
    std::vector<double> p(drive.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        const cplx d = drive.samples()[k];
        if (std::abs(d.imag()) > 1e-9 || d.real() < -1e-9 || d.real() > 1.0 + 1e-9)
            throw std::invalid_argument("mzm: drive must be real-valued in [0, 1]");
        p[k] = p_min + (p_max - p_min) * std::clamp(d.real(), 0.0, 1.0);
    }
    return p;
}

Waveform mzm_modulate(const Waveform& drive, const Waveform& carrier, double extinction_db,
                      double launch_power_dbm) {
    if (drive.size() != carrier.size() || drive.sample_rate() != carrier.sample_rate())
        throw std::invalid_argument("mzm_modulate: drive and carrier lengths/rates differ");
    const auto p = mzm_power_transfer(drive, extinction_db);
    std::vector<cplx> out(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) out[k] = carrier.samples()[k] * std::sqrt(p[k]);

    const double mean = mean_power_mw(out);
    if (mean > 0.0) {
        const double scale = std::sqrt(std::pow(10.0, launch_power_dbm / 10.0) / mean);
        for (auto& v : out) v *= scale;
    }
    return Waveform(std::move(out), carrier.sample_rate(), carrier.carrier_offset());
}

Waveform load_noise(const Waveform& w, double sigma2, Rng& rng) {
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("load_noise: sigma2 must be >= 0");
    if (sigma2 == 0.0) return w;
    std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2 / 2.0));
    std::vector<cplx> out(w.samples());
    for (auto& v : out) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        v += cplx(re, im);
    }
    return Waveform(std::move(out), w.sample_rate(), w.carrier_offset());
}

TxOutput transmit(const TxConfig& cfg, double noise_sigma2, Rng& laser_rng, Rng& noise_rng) {
    cfg.validate();
    auto bits = prbs15(cfg.prbs_seed, cfg.n_symbols * static_cast<std::size_t>(cfg.bits_per_symbol()));
    auto symbols = map_pam(bits, cfg.pam_order);
    const Waveform drive = normalize_drive(shape(symbols, cfg));
    const Waveform carrier = laser(cfg, drive.size(), laser_rng);
    Waveform field = mzm_modulate(drive, carrier, cfg.extinction_db, cfg.launch_power_dbm);
    field = load_noise(field, noise_sigma2, noise_rng);
    return TxOutput{std::move(bits), std::move(symbols), std::move(field)};
}

}  // namespace mcfsim

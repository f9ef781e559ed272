#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mcfsim/rng.hpp"
#include "mcfsim/waveform.hpp"

namespace mcfsim {

inline constexpr std::uint32_t kPrbs15Period = 32767;

struct TxConfig {
    double baud = 28e9;
    int sps = 16;
    int pam_order = 4;
    double rolloff = 0.18;
    int rrc_span_symbols = 32;
    std::uint32_t prbs_seed = 1;
    std::size_t n_symbols = kPrbs15Period;
    double laser_offset = 0.0;  // Hz from nominal carrier
    double linewidth = 50e3;    // Hz, Lorentzian FWHM
    double launch_power_dbm = 0.0;
    double extinction_db = std::numeric_limits<double>::infinity();
    std::uint64_t rng_seed = 0;

    double sample_rate() const { return baud * sps; }
    int bits_per_symbol() const { return pam_order == 4 ? 2 : 1; }
    void validate() const;
};

// Fibonacci LFSR x^15 + x^14 + 1. Period 2^15 - 1 for any nonzero seed.
std::vector<std::uint8_t> prbs15(std::uint32_t seed, std::size_t n);

// Intensity drive levels in [0, 1]. PAM-4 is Gray coded:
// 00 -> 0, 01 -> 1/3, 11 -> 2/3, 10 -> 1 (first bit of each pair is the MSB).
std::vector<double> map_pam(std::span<const std::uint8_t> bits, int pam_order);

// Drive levels of the constellation, ascending.
std::vector<double> pam_levels(int pam_order);

// Root-raised-cosine impulse response over span_symbols*sps + 1 taps,
// normalized to unit energy.
std::vector<double> rrc_taps(double rolloff, int span_symbols, int sps);

// Zero-insertion upsampling followed by circular RRC filtering. Taps are
// scaled to a DC gain of sps, so a constant symbol stream maps to the same
// constant level.
Waveform shape(std::span<const double> symbols, const TxConfig& cfg);

// Affine map of a real drive waveform onto [0, 1]. RRC overshoot would
// otherwise push the modulator outside its transfer range.
Waveform normalize_drive(const Waveform& drive);

// Unit-amplitude laser field with frequency offset and Wiener phase noise
// (increment variance 2*pi*linewidth/rate per sample).
Waveform laser(const TxConfig& cfg, std::size_t n_samples, Rng& rng);
inline Waveform laser(const TxConfig& cfg, std::size_t n_samples) {
    Rng rng(cfg.rng_seed);
    return laser(cfg, n_samples, rng);
}

// Ideal chirp-free intensity modulator: P = Pmin + (Pmax - Pmin)*drive with
// Pmax/Pmin = 10^(extinction_db/10), then rescaled to the launch power.
// `drive` must be real-valued in [0, 1].
std::vector<double> mzm_power_transfer(const Waveform& drive, double extinction_db);
Waveform mzm_modulate(const Waveform& drive, const Waveform& carrier, double extinction_db,
                      double launch_power_dbm = 0.0);

// Adds circular complex Gaussian noise of total variance sigma2 (mW).
Waveform load_noise(const Waveform& w, double sigma2, Rng& rng);

struct TxOutput {
    std::vector<std::uint8_t> bits;
    std::vector<double> symbols;
    Waveform field;
};

// Full transmitter: PRBS -> PAM -> RRC -> laser + MZM -> noise loading.
TxOutput transmit(const TxConfig& cfg, double noise_sigma2, Rng& laser_rng, Rng& noise_rng);

}  // namespace mcfsim

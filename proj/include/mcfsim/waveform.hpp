#pragma once

#include <complex>
#include <filesystem>
#include <span>
#include <vector>

#include "mcfsim/fft.hpp"

namespace mcfsim {

// Nominal optical carrier all baseband waveforms are referenced to.
inline constexpr double kNominalCarrierHz = 193.12e12;

// Uniformly sampled complex field envelope. Amplitudes are in sqrt(mW), so
// |a|^2 is instantaneous power in mW and 0 dBm means mean |a|^2 == 1.
//
// Samples are always expressed in the nominal-carrier frame. carrier_offset
// records where the laser line sits relative to that frame; it does not
// change how samples are interpreted, so fields in this frame can be added.
class Waveform {
public:
    Waveform(std::vector<cplx> samples, double sample_rate, double carrier_offset = 0.0);

    const std::vector<cplx>& samples() const { return samples_; }
    double sample_rate() const { return sample_rate_; }
    double carrier_offset() const { return carrier_offset_; }
    std::size_t size() const { return samples_.size(); }
    double duration() const { return static_cast<double>(samples_.size()) / sample_rate_; }

    // Rvalue access for pipelines that consume the waveform.
    std::vector<cplx> take_samples() && { return std::move(samples_); }

private:
    std::vector<cplx> samples_;
    double sample_rate_;
    double carrier_offset_;
};

double mean_power_mw(std::span<const cplx> samples);
inline double mean_power_mw(const Waveform& w) { return mean_power_mw(w.samples()); }

// FFT-ordered two-sided frequency grid: k*rate/N for k <= (N-1)/2, then
// negative frequencies.
std::vector<double> freq_axis(std::size_t n, double sample_rate);
inline std::vector<double> freq_axis(const Waveform& w) {
    return freq_axis(w.size(), w.sample_rate());
}

// Circular linear filtering: output spectrum = input spectrum * h.
Waveform apply_frequency_response(const Waveform& w, std::span<const cplx> h);

// Multiplies by exp(j*2*pi*df*t); |df| must stay below rate/2.
Waveform shift_carrier(const Waveform& w, double df);

// Linear-phase (circular) delay by tau seconds; |tau| < duration/4.
Waveform fractional_delay(const Waveform& w, double tau);

// Debug dump: "MCFW", u32 version, f64 sample_rate, f64 carrier_offset, then
// interleaved little-endian f64 (re, im).
void write_waveform(const std::filesystem::path& path, const Waveform& w);
Waveform read_waveform(const std::filesystem::path& path);

}  // namespace mcfsim

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mcfsim/waveform.hpp"

namespace mcfsim {

struct RxConfig {
    double pd_responsivity = 1.0;    // A/W
    double lpf_bw_fraction = 0.75;   // -3 dB bandwidth as a fraction of the baud rate
    int ff_taps = 21;
    int fb_taps = 22;
    double lms_mu = 1e-3;
    std::size_t train_symbols = 4000;
    int sps_eq = 2;
    // Receiver-side RRC matched to the transmitter's pulse shape.
    bool matched_filter = true;
    // Debug only: adapt against the transmitted symbols instead of decisions.
    bool train_with_truth = false;

    void validate() const;
};

// Real-valued sample stream (photocurrent and everything after it).
struct RealSignal {
    std::vector<double> samples;
    double sample_rate;
};

struct EqualizerState {
    std::vector<double> ff_weights;
    std::vector<double> fb_weights;
    double bias = 0.0;
    bool converged = false;
    double final_mse = 0.0;
};

// Square-law detection: i = R * |a|^2 * 1e-3 (A).
RealSignal photodetect(const Waveform& field, double responsivity);

// |H(f)| of a 5th-order Bessel low-pass scaled so |H(bw)| = 1/sqrt(2).
double bessel5_magnitude(double f, double bw);

// Zero-phase low-pass: Bessel magnitude applied in the frequency domain.
RealSignal lowpass(const RealSignal& in, double bw);

// Circular convolution with the unit-energy RRC taps used at the transmitter.
RealSignal matched_filter(const RealSignal& in, double rolloff, int span_symbols, int sps);

struct TimingResult {
    std::vector<double> samples;  // T/sps_out spaced
    std::size_t phase;            // winning offset into the input, in input samples
};

// Exhaustive sampling-phase search over one symbol period: the phase whose
// symbol-rate substream has maximum variance wins (ties -> smallest phase).
TimingResult timing_recover_maxvar(std::span<const double> in, int sps_in, int sps_out);

// Zero mean, unit variance.
std::vector<double> normalize(std::span<const double> x);

// Levels mapped to zero mean / unit variance with equiprobable symbols.
std::vector<double> normalized_levels(int pam_order);

struct EqualizerOutput {
    std::vector<double> y;          // soft outputs, one per symbol
    std::vector<std::size_t> decisions;  // level index per symbol
    EqualizerState state;
};

// T/2 fractionally spaced FFE with decision feedback and a bias tap, adapted
// by decision-directed LMS from a centre-spike start.
//   y(n) = ff . x[2n - c .. 2n + c] - fb . d[n-1 .. n-M] + b
// The error statistics cover outputs after the first train_symbols.
// `truth` is only consulted when cfg.train_with_truth is set.
EqualizerOutput ddlms_equalize(std::span<const double> x, std::span<const double> levels,
                               const RxConfig& cfg,
                               std::span<const std::size_t> truth = {});

// Index of the nearest level; exact midpoints go to the lower level.
std::size_t nearest_level(double y, std::span<const double> levels);

// Nearest-level decisions Gray-demapped to bits (inverse of map_pam).
std::vector<std::uint8_t> decide(std::span<const double> y, std::span<const double> levels);

// Gray demap of level indices for the given order.
std::vector<std::uint8_t> demap_levels(std::span<const std::size_t> idx, int pam_order);

}  // namespace mcfsim

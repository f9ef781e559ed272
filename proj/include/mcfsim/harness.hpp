#pragma once

#include <cstdint>
#include <filesystem>
#include <cmath>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcfsim/channel.hpp"
#include "mcfsim/rx.hpp"
#include "mcfsim/tx.hpp"

namespace mcfsim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LaserSpec {
    double offset_hz = 0.0;
    double linewidth_hz = 50e3;
};

enum class TrialMode {
    full,      // complete link with PAM aggressor
    xt_probe,  // channel only; aggressor is a flat band-limited probe
};

struct LinkConfig {
    TxConfig tx;  // shared transmitter settings; seeds/lasers are filled per core
    LaserSpec victim_laser;
    LaserSpec aggressor_laser;
    FiberParams fiber;
    double target_xt_db = -25.0;
    RxConfig rx;
    double snr_level_db = 45.0;
    std::size_t repeats = 1;
    std::uint64_t master_seed = 1;
    TrialMode mode = TrialMode::full;

    void validate() const;
};

// Flat "key = value" text, '#' comments. Unknown keys are a ConfigError.
LinkConfig parse_config(std::istream& in, LinkConfig base = {});
LinkConfig load_config(const std::filesystem::path& path, LinkConfig base = {});
void apply_config_value(LinkConfig& cfg, const std::string& key, const std::string& value);
std::vector<std::string> config_keys();

enum class SweepAxis { xt_db, walkoff, freq_offset, linewidth, snr_level };

SweepAxis parse_axis(const std::string& name);
std::string axis_name(SweepAxis axis);
void apply_axis(LinkConfig& cfg, SweepAxis axis, double value);

struct SweepSpec {
    std::string label;
    SweepAxis axis = SweepAxis::xt_db;
    std::vector<double> values;
    LinkConfig base;

    void validate() const;
};

// Same format as parse_config, plus sweep.axis, sweep.values (comma list)
// and sweep.label.
SweepSpec parse_sweep_config(std::istream& in);

struct TrialResult {
    double axis_value = 0.0;
    std::size_t trial = 0;
    double snr_db = std::nan("");
    double ber = std::nan("");
    double r2_gauss = std::nan("");
    double realized_xt_db = -std::numeric_limits<double>::infinity();
    bool converged = false;
    EqualizerState equalizer;
    std::uint32_t prbs_seed_victim = 0;
    std::uint32_t prbs_seed_aggressor = 0;
};

// Optional per-trial byproducts for debugging and figure data.
struct TrialArtifacts {
    std::vector<double> equalized;       // post-settling equalizer outputs
    std::vector<double> decided_levels;  // matching decided levels
    std::optional<RealSignal> photocurrent;
    std::optional<Waveform> victim_in;
    std::optional<Waveform> victim_out;
    std::optional<Waveform> leak_out;
};

// Noise variance per complex sample that puts the back-to-back
// post-equalization SNR (XT off, ideal lasers, mean of 3 seeds) on the
// configured SNR level.
class Calibrator {
public:
    explicit Calibrator(std::optional<std::filesystem::path> cache_dir = std::nullopt)
        : cache_dir_(std::move(cache_dir)) {}

    double sigma2(const LinkConfig& cfg);
    double measure_b2b_snr(const LinkConfig& cfg, double sigma2, std::size_t seeds = 3,
                           std::uint64_t first_seed_index = kCalibrationTrialBase) const;

    static std::string cache_key(const LinkConfig& cfg);
    static constexpr std::uint64_t kCalibrationTrialBase = 1ULL << 40;
    static constexpr double kToleranceDb = 0.05;
    static constexpr int kMaxIterations = 30;

private:
    std::optional<std::filesystem::path> cache_dir_;
    std::map<std::string, double> memo_;
};

// One Monte-Carlo realization. All random streams derive from
// (master_seed, trial_index, stream).
TrialResult run_trial(const LinkConfig& cfg, std::size_t trial_index, double noise_sigma2,
                      TrialArtifacts* artifacts = nullptr);

struct AggregateRow {
    double axis_value;
    std::size_t n_valid;
    double snr_mean_db, snr_std_db, snr_min_db, snr_max_db;
    double r2_mean;
    double xt_mean_db, xt_std_db;
};

struct SweepResult {
    std::string label;
    SweepAxis axis;
    std::vector<TrialResult> trials;
    std::vector<AggregateRow> aggregates;
};

AggregateRow aggregate(double axis_value, const std::vector<TrialResult>& trials);

struct SweepOptions {
    bool quick = false;
    bool dump_symbols = false;
    bool dump_waveforms = false;
    std::optional<std::filesystem::path> out_dir;
    bool progress = false;
};

// Trial index r replays the same random draws at every axis value, so
// comparisons along the axis are paired.
SweepResult run_sweep(const SweepSpec& spec, Calibrator& cal, const SweepOptions& opts = {});

// Desk-scale reduction: 8192 symbols, repeats / 4.
LinkConfig quick_config(LinkConfig cfg);
inline constexpr std::size_t kQuickSymbols = 8192;

struct Preset {
    std::string name;
    std::vector<SweepSpec> series;
};

std::vector<std::string> preset_names();
Preset preset(const std::string& name);

// Flat, carrier-free complex Gaussian field over |f| <= bandwidth/2, scaled to
// the launch power. Used to measure crosstalk independent of the PAM spectrum.
Waveform probe_field(std::size_t n, double sample_rate, double bandwidth, double launch_power_dbm,
                     Rng& rng);

void write_trials_csv(std::ostream& os, const SweepResult& r);
void write_aggregate_csv(std::ostream& os, const SweepResult& r);
std::string format_float(double v);

}  // namespace mcfsim

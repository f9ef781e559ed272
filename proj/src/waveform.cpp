#include "mcfsim/waveform.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mcfsim {

Waveform::Waveform(std::vector<cplx> samples, double sample_rate, double carrier_offset)
    : samples_(std::move(samples)), sample_rate_(sample_rate), carrier_offset_(carrier_offset) {
    if (samples_.empty()) throw std::invalid_argument("Waveform: no samples");
    if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_))
        throw std::invalid_argument("Waveform: sample_rate must be positive");
    if (!std::isfinite(carrier_offset_)) throw std::invalid_argument("Waveform: carrier_offset must be finite");
}

double mean_power_mw(std::span<const cplx> samples) {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& a : samples) acc += std::norm(a);
    return acc / static_cast<double>(samples.size());
}

std::vector<double> freq_axis(std::size_t n, double sample_rate) {
    std::vector<double> f(n);
    const double df = sample_rate / static_cast<double>(n);
    const std::size_t n_pos = (n + 1) / 2;
    for (std::size_t k = 0; k < n; ++k) {
        const auto kk = static_cast<double>(k);
        f[k] = (k < n_pos) ? kk * df : (kk - static_cast<double>(n)) * df;
    }
    return f;
}

Waveform apply_frequency_response(const Waveform& w, std::span<const cplx> h) {
    if (h.size() != w.size())
        throw std::invalid_argument("apply_frequency_response: response length " +
                                    std::to_string(h.size()) + " != " +
                                    std::to_string(w.size()));
    std::vector<cplx> spec = fft(w.samples());
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= h[k];
    fft_inverse(spec, spec);
    return Waveform(std::move(spec), w.sample_rate(), w.carrier_offset());
}

Waveform shift_carrier(const Waveform& w, double df) {
    if (std::abs(df) >= w.sample_rate() / 2.0)
        throw std::invalid_argument("shift_carrier: |df| must be below rate/2 (aliasing)");
    if (df == 0.0) return w;
    std::vector<cplx> out(w.samples());
    const double step = 2.0 * std::numbers::pi * df / w.sample_rate();
    for (std::size_t n = 0; n < out.size(); ++n) {
        // Phase from the sample index directly; no accumulated rounding.
        out[n] *= std::polar(1.0, step * static_cast<double>(n));
    }
    return Waveform(std::move(out), w.sample_rate(), w.carrier_offset() + df);
}

Waveform fractional_delay(const Waveform& w, double tau) {
    if (std::abs(tau) >= w.duration() / 4.0)
        throw std::invalid_argument("fractional_delay: |tau| must be below duration/4");
    if (tau == 0.0) return w;
    const auto f = freq_axis(w);
    std::vector<cplx> h(f.size());
    for (std::size_t k = 0; k < f.size(); ++k)
        h[k] = std::polar(1.0, -2.0 * std::numbers::pi * f[k] * tau);
    return apply_frequency_response(w, h);
}

namespace {

constexpr char kMagic[4] = {'M', 'C', 'F', 'W'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "waveform dump assumes a little-endian host");

template <typename T>
void put(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("read_waveform: truncated file");
    return v;
}

}  // namespace

void write_waveform(const std::filesystem::path& path, const Waveform& w) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_waveform: cannot open " + path.string());
    os.write(kMagic, 4);
    put(os, kVersion);
    put(os, w.sample_rate());
    put(os, w.carrier_offset());
    for (const auto& a : w.samples()) {
        put(os, a.real());
        put(os, a.imag());
    }
    if (!os) throw std::runtime_error("write_waveform: write failed for " + path.string());
}

Waveform read_waveform(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_waveform: cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("read_waveform: bad magic");
    if (get<std::uint32_t>(is) != kVersion)
        throw std::runtime_error("read_waveform: unsupported version");
    const double rate = get<double>(is);
    const double offset = get<double>(is);
    std::vector<cplx> samples;
    double re = 0.0;
    while (is.read(reinterpret_cast<char*>(&re), sizeof(double))) {
        samples.emplace_back(re, get<double>(is));
    }
    return Waveform(std::move(samples), rate, offset);
}

}  // namespace mcfsim

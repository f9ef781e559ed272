#include "mcfsim/channel.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "mcfsim/rng.hpp"

namespace mcfsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// exp(j*theta) with a short series for the tiny per-step Kerr phases.
inline cplx cis(double theta) {
    if (std::abs(theta) < 0.05) {
        const double t2 = theta * theta;
        const double c = 1.0 - t2 / 2.0 * (1.0 - t2 / 12.0 * (1.0 - t2 / 30.0));
        const double s = theta * (1.0 - t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0)));
        return {c, s};
    }
    return std::polar(1.0, theta);
}

double alpha_np_per_m(const FiberParams& p) {
    return p.alpha_db_km * std::log(10.0) / 10.0 / 1e3;
}

void multiply(std::span<cplx> x, std::span<const cplx> h) {
    for (std::size_t k = 0; k < x.size(); ++k) x[k] *= h[k];
}

}  // namespace

std::size_t FiberParams::n_steps() const {
    const double ratio = length_m / step_m;
    const double rounded = std::round(ratio);
    if (!(ratio >= 1.0) || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
        throw std::invalid_argument("FiberParams: length_m / step_m must be a positive integer");
    return static_cast<std::size_t>(rounded);
}

void FiberParams::validate() const {
    if (!(length_m > 0.0)) throw std::invalid_argument("FiberParams: length_m must be positive");
    if (!(step_m > 0.0 && step_m <= length_m))
        throw std::invalid_argument("FiberParams: step_m must be in (0, length_m]");
    if (!(alpha_db_km >= 0.0)) throw std::invalid_argument("FiberParams: alpha_db_km must be >= 0");
    (void)n_steps();
}

double XtConfig::coupling_per_step(std::size_t n_steps) const {
    if (std::isinf(target_xt_db) && target_xt_db < 0) return 0.0;
    return std::sqrt(std::pow(10.0, target_xt_db / 10.0) / static_cast<double>(n_steps));
}

void XtConfig::validate() const {
    if (std::isnan(target_xt_db)) throw std::invalid_argument("XtConfig: target_xt_db is NaN");
    if (target_xt_db > kMaxTargetXtDb)
        throw std::invalid_argument("XtConfig: target XT above -15 dB is outside the weak-coupling model");
}

std::vector<cplx> linear_response(const FiberParams& p, std::span<const double> freqs, CoreRole role,
                                  double length_m) {
    const double a = alpha_np_per_m(p);
    const double db1 = role == CoreRole::aggressor ? p.walkoff_s_per_m : 0.0;
    std::vector<cplx> h(freqs.size());
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        const double w = kTwoPi * freqs[k];
        const double phase = -(p.beta2 / 2.0 * w * w + p.beta3 / 6.0 * w * w * w + db1 * w) * length_m;
        h[k] = std::polar(std::exp(-a / 2.0 * length_m), phase);
    }
    return h;
}

Waveform nonlinear_step(const Waveform& w, const FiberParams& p) {
    if (p.gamma_nl == 0.0) return w;
    std::vector<cplx> out(w.samples());
    const double k = p.gamma_nl * 1e-3 * p.step_m;
    for (auto& a : out) a *= cis(k * std::norm(a));
    return Waveform(std::move(out), w.sample_rate(), w.carrier_offset());
}

CoupledFields coupling_step(const Waveform& victim, const Waveform& aggressor, const Waveform& leak,
                            double kappa, double phi) {
    if (victim.size() != aggressor.size() || victim.size() != leak.size())
        throw std::invalid_argument("coupling_step: length mismatch");
    std::vector<cplx> v(victim.samples());
    std::vector<cplx> l(leak.samples());
    if (kappa != 0.0) {
        const cplx c = std::polar(kappa, phi);
        for (std::size_t n = 0; n < v.size(); ++n) {
            const cplx add = c * aggressor.samples()[n];
            v[n] += add;
            l[n] += add;
        }
    }
    return {Waveform(std::move(v), victim.sample_rate(), victim.carrier_offset()),
            Waveform(std::move(l), leak.sample_rate(), leak.carrier_offset())};
}

PropagationResult propagate(const Waveform& victim, const Waveform& aggressor, const FiberParams& p,
                            const XtConfig& x, bool keep_aggressor) {
    p.validate();
    x.validate();
    if (victim.size() != aggressor.size() || victim.sample_rate() != aggressor.sample_rate())
        throw std::invalid_argument("propagate: victim and aggressor must share length and rate");

    const std::size_t n_steps = p.n_steps();
    const double kappa = x.coupling_per_step(n_steps);
    const auto freqs = freq_axis(victim);
    const bool kerr = p.gamma_nl != 0.0;
    const bool run_aggressor = keep_aggressor || kappa != 0.0;

    // Without the Kerr step the two half steps collapse into one full step.
    const double lin_len = kerr ? p.step_m / 2.0 : p.step_m;
    const auto hv = linear_response(p, freqs, CoreRole::victim, lin_len);
    const auto ha = linear_response(p, freqs, CoreRole::aggressor, lin_len);

    std::vector<cplx> vf = fft(victim.samples());
    std::vector<cplx> af = run_aggressor ? fft(aggressor.samples()) : std::vector<cplx>{};
    std::vector<cplx> lf(vf.size(), cplx{});
    bool leak_active = false;

    std::vector<cplx> tv(vf.size()), ta(vf.size()), tl(vf.size()), rot(vf.size());
    const double kerr_scale = p.gamma_nl * 1e-3 * p.step_m;

    Rng rng(x.phase_seed);
    std::uniform_real_distribution<double> uniform_phase(0.0, kTwoPi);

    XtRecord record;
    record.events.reserve(n_steps);

    for (std::size_t i = 0; i < n_steps; ++i) {
        multiply(vf, hv);
        if (run_aggressor) multiply(af, ha);
        if (leak_active) multiply(lf, hv);

        if (kerr) {
            fft_inverse(vf, tv);
            for (std::size_t n = 0; n < tv.size(); ++n) {
                rot[n] = cis(kerr_scale * std::norm(tv[n]));
                tv[n] *= rot[n];
            }
            fft_forward(tv, vf);

            if (run_aggressor) {
                fft_inverse(af, ta);
                for (auto& a : ta) a *= cis(kerr_scale * std::norm(a));
                fft_forward(ta, af);
            }

            // The leak lives inside the victim core and sees the victim's Kerr phase.
            if (leak_active) {
                fft_inverse(lf, tl);
                for (std::size_t n = 0; n < tl.size(); ++n) tl[n] *= rot[n];
                fft_forward(tl, lf);
            }

            multiply(vf, hv);
            if (run_aggressor) multiply(af, ha);
            if (leak_active) multiply(lf, hv);
        }

        double phi = uniform_phase(rng);
        if (phi >= kTwoPi) phi = 0.0;
        record.events.push_back({static_cast<double>(i + 1) * p.step_m, kappa, phi});
        if (kappa != 0.0) {
            const cplx c = std::polar(kappa, phi);
            for (std::size_t k = 0; k < vf.size(); ++k) {
                const cplx add = c * af[k];
                vf[k] += add;
                lf[k] += add;
            }
            leak_active = true;
        }
    }

    fft_inverse(vf, vf);
    fft_inverse(lf, lf);
    std::optional<Waveform> aggressor_out;
    if (run_aggressor) {
        fft_inverse(af, af);
        aggressor_out.emplace(std::move(af), aggressor.sample_rate(), aggressor.carrier_offset());
    }

    const double leak_power = mean_power_mw(lf);
    double signal_power = 0.0;
    for (std::size_t n = 0; n < vf.size(); ++n) signal_power += std::norm(vf[n] - lf[n]);
    signal_power /= static_cast<double>(vf.size());
    record.realized_xt_db = (leak_power > 0.0 && signal_power > 0.0)
                                ? 10.0 * std::log10(leak_power / signal_power)
                                : -std::numeric_limits<double>::infinity();

    return PropagationResult{
        Waveform(std::move(vf), victim.sample_rate(), victim.carrier_offset()),
        Waveform(std::move(lf), victim.sample_rate(), aggressor.carrier_offset()),
        std::move(aggressor_out), std::move(record)};
}

std::vector<cplx> xt_transfer_function(const XtRecord& record, const FiberParams& p,
                                       std::span<const double> freqs) {
    std::vector<cplx> h(freqs.size(), cplx{});
    for (const auto& ev : record.events) {
        if (ev.kappa == 0.0) continue;
        const double delay = p.walkoff_s_per_m * (p.length_m - ev.z_m);
        for (std::size_t k = 0; k < freqs.size(); ++k)
            h[k] += std::polar(ev.kappa, ev.phi + kTwoPi * freqs[k] * delay);
    }
    return h;
}

}  // namespace mcfsim

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "mcfsim/waveform.hpp"

namespace mcfsim {

// Per-core fiber constants. The aggressor core differs from the victim only
// by its group-delay slope (walk-off); the common group delay is dropped.
struct FiberParams {
    double alpha_db_km = 0.2;
    double beta2 = -2.17e-26;    // s^2/m  (D = 17 ps/nm/km at 1552 nm)
    double beta3 = 1.3e-40;      // s^3/m
    double gamma_nl = 1.3e-3;    // 1/(W m)
    double length_m = 3000.0;
    double step_m = 10.0;
    double walkoff_s_per_m = 1e-13;

    std::size_t n_steps() const;
    void validate() const;
};

// Weakest coupling the additive, undepleted-aggressor model accepts.
inline constexpr double kMaxTargetXtDb = -15.0;

struct XtConfig {
    // Ensemble-mean leaked/through power ratio over the full length, dB.
    // -inf disables coupling.
    double target_xt_db = -std::numeric_limits<double>::infinity();
    std::uint64_t phase_seed = 0;

    // Uniform per-step coupling amplitude sqrt(10^(xt/10) / n_steps).
    double coupling_per_step(std::size_t n_steps) const;
    void validate() const;
};

struct CouplingEvent {
    double z_m;
    double kappa;
    double phi;  // [0, 2*pi)
};

struct XtRecord {
    std::vector<CouplingEvent> events;
    double realized_xt_db = -std::numeric_limits<double>::infinity();
};

enum class CoreRole { victim, aggressor };

// Linear transfer over `length_m` for one core:
// exp[(-a/2 - j b2/2 w^2 - j b3/6 w^3 - j db1 w) * length].
std::vector<cplx> linear_response(const FiberParams& p, std::span<const double> freqs,
                                  CoreRole role, double length_m);
inline std::vector<cplx> linear_step_response(const FiberParams& p, std::span<const double> freqs,
                                              CoreRole role) {
    return linear_response(p, freqs, role, p.step_m);
}

// Kerr phase exp(j*gamma*|a|^2*1e-3*length) over one step (amplitudes in sqrt(mW)).
Waveform nonlinear_step(const Waveform& w, const FiberParams& p);

struct CoupledFields {
    Waveform victim;
    Waveform leak;
};

// Weak additive coupling with an undepleted aggressor. The same leaked term is
// added to the leak accumulator so leaked power can be separated exactly.
CoupledFields coupling_step(const Waveform& victim, const Waveform& aggressor, const Waveform& leak,
                            double kappa, double phi);

struct PropagationResult {
    Waveform victim;     // total field at the victim output (signal + leak)
    Waveform leak;       // leaked contribution only, propagated with victim dynamics
    std::optional<Waveform> aggressor;  // aggressor core output (see keep_aggressor)
    XtRecord record;
};

// Symmetric split-step propagation of both cores over the full length. Each
// step is: half linear, Kerr phase, half linear, then one random-phase
// coupling event at the step boundary. Phases are drawn from phase_seed.
// With coupling disabled and keep_aggressor false the aggressor core is not
// propagated at all, since nothing downstream can observe it.
PropagationResult propagate(const Waveform& victim, const Waveform& aggressor, const FiberParams& p,
                            const XtConfig& x, bool keep_aggressor = true);

// Leak transfer relative to the aggressor output under linear propagation:
// leak_out(f) = H_xt(f) * aggressor_out(f), with
// H_xt(f) = sum_i kappa e^{j phi_i} e^{+j 2 pi f db1 (L - z_i)} (FFTW sign convention).
std::vector<cplx> xt_transfer_function(const XtRecord& record, const FiberParams& p,
                                       std::span<const double> freqs);

}  // namespace mcfsim

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mcfsim/channel.hpp"
#include "mcfsim/harness.hpp"
#include "mcfsim/metrics.hpp"
#include "mcfsim/tx.hpp"

using namespace mcfsim;

namespace {

FiberParams linear_only() {
    FiberParams p;
    p.alpha_db_km = 0.0;
    p.beta2 = 0.0;
    p.beta3 = 0.0;
    p.gamma_nl = 0.0;
    p.walkoff_s_per_m = 0.0;
    return p;
}

Waveform cw(std::size_t n, double rate, double power_mw = 1.0) {
    return Waveform(std::vector<cplx>(n, std::sqrt(power_mw)), rate);
}

Waveform pam_field(std::size_t n_symbols, std::uint32_t seed) {
    TxConfig cfg;
    cfg.n_symbols = n_symbols;
    cfg.prbs_seed = seed;
    cfg.linewidth = 0.0;
    Rng l(seed), n(seed + 1);
    return transmit(cfg, 0.0, l, n).field;
}

// Second central moment of |a|^2 in time.
double rms_width(const Waveform& w) {
    double m0 = 0, m1 = 0, m2 = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double t = double(k) / w.sample_rate();
        const double p = std::norm(w.samples()[k]);
        m0 += p;
        m1 += p * t;
        m2 += p * t * t;
    }
    m1 /= m0;
    return std::sqrt(m2 / m0 - m1 * m1);
}

}  // namespace

TEST(FiberParams, Validation) {
    FiberParams p;
    EXPECT_EQ(p.n_steps(), 300u);
    p.step_m = 7.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    XtConfig x{-10.0, 0};
    EXPECT_THROW(x.validate(), std::invalid_argument);
    const double kappa = XtConfig{-25.0, 0}.coupling_per_step(300);
    EXPECT_DOUBLE_EQ(kappa, std::sqrt(std::pow(10.0, -2.5) / 300));
    EXPECT_EQ(XtConfig{}.coupling_per_step(300), 0.0);
}

TEST(LinearResponse, IdentityAndAttenuation) {
    const auto f = freq_axis(64, 448e9);
    for (auto h : linear_response(linear_only(), f, CoreRole::aggressor, 10.0)) EXPECT_EQ(h, cplx(1.0, 0.0));

    FiberParams p;
    const double want = std::pow(10.0, -0.002 / 20.0);
    for (auto h : linear_step_response(p, f, CoreRole::victim)) EXPECT_NEAR(std::abs(h), want, 1e-15);
}

TEST(LinearResponse, WalkoffDelaysAggressor) {
    FiberParams p;
    p.gamma_nl = 0.0;
    const double rate = 448e9;
    const std::size_t n = 4096;
    std::vector<cplx> g(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = (double(k) - 1000.0) / rate;
        g[k] = std::exp(-t * t / (2 * 20e-12 * 20e-12));
    }
    const Waveform pulse(g, rate);
    const auto out = propagate(pulse, pulse, p, XtConfig{}, true);

    // Oracle: circular cross-correlation of output intensities, parabolic peak.
    std::vector<double> iv(n), ia(n);
    for (std::size_t k = 0; k < n; ++k) {
        iv[k] = std::norm(out.victim.samples()[k]);
        ia[k] = std::norm(out.aggressor->samples()[k]);
    }
    std::vector<double> xc(n, 0.0);
    for (std::size_t lag = 0; lag < n; ++lag)
        for (std::size_t k = 0; k < n; ++k) xc[lag] += ia[(k + lag) % n] * iv[k];
    const auto pk = std::size_t(std::max_element(xc.begin(), xc.end()) - xc.begin());
    const double ym = xc[pk - 1], y0 = xc[pk], yp = xc[pk + 1];
    const double delay = (double(pk) + 0.5 * (ym - yp) / (ym - 2 * y0 + yp)) / rate;
    EXPECT_NEAR(delay, 0.3e-9, 0.5 / rate);
}

TEST(NonlinearStep, KerrPhase) {
    FiberParams p;
    const auto w = cw(16, 1e9);
    const auto out = nonlinear_step(w, p);
    for (const auto& v : out.samples()) EXPECT_NEAR(std::arg(v), 1.3e-5, 1e-15);

    p.gamma_nl = 0.0;
    EXPECT_EQ(nonlinear_step(w, p).samples(), w.samples());

    FiberParams strong;
    strong.gamma_nl = 10.0;
    const auto f = pam_field(64, 3);
    EXPECT_NEAR(mean_power_mw(nonlinear_step(f, strong)), mean_power_mw(f), 1e-12 * mean_power_mw(f));
}

TEST(CouplingStep, WeakAdditiveCoupling) {
    const auto zero = Waveform(std::vector<cplx>(8), 1e9);
    const auto agg = cw(8, 1e9);
    const auto v = cw(8, 1e9, 2.0);
    EXPECT_EQ(coupling_step(v, agg, zero, 0.0, 1.0).victim.samples(), v.samples());

    const auto c = coupling_step(zero, agg, zero, 0.1, 0.7);
    EXPECT_NEAR(10 * std::log10(mean_power_mw(c.victim)), -20.0, 1e-12);
    EXPECT_EQ(c.victim.samples(), c.leak.samples());
}

TEST(Propagate, GaussianBroadening) {
    FiberParams p = linear_only();
    p.beta2 = -2.17e-26;
    const double rate = 448e9, t0 = 10e-12;
    const std::size_t n = 1 << 14;
    std::vector<cplx> g(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = (double(k) - n / 2.0) / rate;
        g[k] = std::exp(-t * t / (2 * t0 * t0));
    }
    const Waveform in(g, rate);
    const auto out = propagate(in, in, p, XtConfig{}, false);
    const double z = p.beta2 * p.length_m / (t0 * t0);
    const double want = std::sqrt(1 + z * z);
    EXPECT_NEAR(rms_width(out.victim) / rms_width(in), want, 1e-6 * want);
}

TEST(Propagate, LosslessPowerConservation) {
    FiberParams p;
    p.alpha_db_km = 0.0;
    p.gamma_nl = 1.3;  // exaggerated so the Kerr step matters
    const auto f = pam_field(1024, 9);
    const auto out = propagate(f, f, p, XtConfig{}, false);
    EXPECT_NEAR(mean_power_mw(out.victim), mean_power_mw(f), 1e-10 * mean_power_mw(f));
    EXPECT_FALSE(out.aggressor.has_value());
}

TEST(Propagate, StepHalvingConverges) {
    FiberParams coarse;
    coarse.gamma_nl = 1.3e-1;
    FiberParams fine = coarse;
    fine.step_m = 5.0;
    const auto f = pam_field(512, 11);
    const auto a = propagate(f, f, coarse, XtConfig{}, false).victim.samples();
    const auto b = propagate(f, f, fine, XtConfig{}, false).victim.samples();
    double num = 0, den = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        num += std::norm(a[k] - b[k]);
        den += std::norm(b[k]);
    }
    EXPECT_LT(std::sqrt(num / den), 1e-4);
}

TEST(Propagate, CwPhasorSumIsExponential) {
    // No walk-off, CW fields: realized XT = |sum kappa e^{j phi_i}|^2.
    const FiberParams p = linear_only();
    const auto v = cw(8, 1e9), a = cw(8, 1e9);
    const double target = -30.0;
    const std::size_t draws = 2000;
    std::vector<double> sim, oracle;
    Rng orng(777);
    std::uniform_real_distribution<double> u(0.0, 2 * std::numbers::pi);
    const double kappa = XtConfig{target, 0}.coupling_per_step(p.n_steps());
    for (std::size_t s = 0; s < draws; ++s) {
        const auto r = propagate(v, a, p, XtConfig{target, 1000 + s}, false);
        sim.push_back(std::pow(10.0, r.record.realized_xt_db / 10.0));
        cplx acc{};
        for (std::size_t i = 0; i < p.n_steps(); ++i) acc += std::polar(kappa, u(orng));
        oracle.push_back(std::norm(acc));
    }
    const double mean_target = std::pow(10.0, target / 10.0);
    // Exponential: std of the sample mean equals mean / sqrt(n).
    EXPECT_NEAR(mean_of(sim), mean_target, 4.0 * mean_target / std::sqrt(double(draws)));

    // Two-sample Kolmogorov-Smirnov against the phasor oracle, alpha = 0.001.
    std::sort(sim.begin(), sim.end());
    std::sort(oracle.begin(), oracle.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < draws && j < draws) {
        if (sim[i] <= oracle[j]) ++i; else ++j;
        d = std::max(d, std::abs(double(i) - double(j)) / double(draws));
    }
    EXPECT_LT(d, 1.95 * std::sqrt(2.0 / double(draws)));

    // And against Exp(mean) directly.
    double dexp = 0.0;
    for (std::size_t k = 0; k < draws; ++k) {
        const double cdf = 1.0 - std::exp(-sim[k] / mean_target);
        dexp = std::max({dexp, std::abs(cdf - double(k) / draws), std::abs(cdf - double(k + 1) / draws)});
    }
    EXPECT_LT(dexp, 1.95 / std::sqrt(double(draws)));
}

TEST(Propagate, BandAveragedMeanAtLargeWalkoff) {
    FiberParams p = linear_only();
    p.walkoff_s_per_m = 1e-12;
    const double rate = 112e9;
    const std::size_t n = 4096;
    std::vector<double> xt;
    for (std::uint64_t s = 0; s < 300; ++s) {
        Rng r1(2 * s + 1), r2(2 * s + 2);
        const auto v = probe_field(n, rate, 33.04e9, 0.0, r1);
        const auto a = probe_field(n, rate, 33.04e9, 0.0, r2);
        xt.push_back(propagate(v, a, p, XtConfig{-25.0, 5000 + s}, false).record.realized_xt_db);
    }
    EXPECT_NEAR(mean_of(xt), -25.0, 0.3);
    EXPECT_LT(stddev_of(xt), 1.0);
}

TEST(Propagate, LeakMatchesTransferFunction) {
    FiberParams p;
    p.gamma_nl = 0.0;
    p.walkoff_s_per_m = 1e-13;
    const auto v = pam_field(256, 21);
    Rng r(4);
    const auto a = probe_field(v.size(), v.sample_rate(), 33e9, 0.0, r);
    const auto out = propagate(v, a, p, XtConfig{-25.0, 99}, true);
    const auto f = freq_axis(out.leak);
    const auto h = xt_transfer_function(out.record, p, f);
    const auto want = apply_frequency_response(*out.aggressor, h);
    double num = 0, den = 0;
    for (std::size_t k = 0; k < want.size(); ++k) {
        num += std::norm(want.samples()[k] - out.leak.samples()[k]);
        den += std::norm(want.samples()[k]);
    }
    EXPECT_LT(std::sqrt(num / den), 1e-9);
}

TEST(XtTransferFunction, FlatCases) {
    const FiberParams p;
    const auto f = freq_axis(256, 448e9);
    XtRecord one{{{1500.0, 0.1, 0.3}}, 0.0};
    for (auto h : xt_transfer_function(one, p, f)) EXPECT_NEAR(std::abs(h), 0.1, 1e-15);

    FiberParams still = p;
    still.walkoff_s_per_m = 0.0;
    XtRecord many;
    Rng rng(1);
    std::uniform_real_distribution<double> u(0, 6.28);
    for (int i = 0; i < 300; ++i) many.events.push_back({10.0 * (i + 1), 0.01, u(rng)});
    const auto h = xt_transfer_function(many, still, f);
    for (auto v : h) EXPECT_NEAR(std::abs(v), std::abs(h[0]), 1e-12);
}

TEST(XtTransferFunction, DecorrelationBandwidth) {
    // delta beta1 * L = 3 ns. Coupling delays are uniform on [0, 3 ns], so the
    // normalized autocovariance of |H|^2 is sinc^2(df * 3 ns): half at
    // ~148 MHz, first null at 333 MHz.
    FiberParams p;
    p.walkoff_s_per_m = 1e-12;
    const double df = 5e6;
    const std::size_t nf = 4000, max_lag = 100;
    std::vector<double> f(nf);
    for (std::size_t k = 0; k < nf; ++k) f[k] = double(k) * df - 10e9;

    std::vector<double> acov(max_lag + 1, 0.0);
    for (std::uint64_t s = 0; s < 100; ++s) {
        Rng rng(s + 1);
        std::uniform_real_distribution<double> u(0, 2 * std::numbers::pi);
        XtRecord rec;
        for (std::size_t i = 0; i < p.n_steps(); ++i) rec.events.push_back({10.0 * (i + 1), 0.01, u(rng)});
        const auto h = xt_transfer_function(rec, p, f);
        std::vector<double> pw(nf);
        for (std::size_t k = 0; k < nf; ++k) pw[k] = std::norm(h[k]);
        const double m = mean_of(pw);
        for (std::size_t lag = 0; lag <= max_lag; ++lag) {
            double acc = 0;
            for (std::size_t k = 0; k + lag < nf; ++k) acc += (pw[k] - m) * (pw[k + lag] - m);
            acov[lag] += acc / double(nf - lag);
        }
    }
    std::size_t half = 0;
    while (half <= max_lag && acov[half] / acov[0] >= 0.5) ++half;
    const double f_half = double(half) * df;
    const double sinc_half = 0.4429 / 3e-9;
    EXPECT_NEAR(f_half, sinc_half, 0.2 * sinc_half);
    EXPECT_LT(std::abs(acov[std::size_t(std::lround(333.3e6 / df))] / acov[0]), 0.05);
}

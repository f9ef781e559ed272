#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "mcfsim/tx.hpp"

using namespace mcfsim;

TEST(Prbs15, PeriodAndBalance) {
    const auto b = prbs15(1, 2 * kPrbs15Period + 10);
    for (std::size_t k = 0; k + kPrbs15Period < b.size(); ++k) ASSERT_EQ(b[k], b[k + kPrbs15Period]);

    std::size_t ones = 0;
    for (std::size_t k = 0; k < kPrbs15Period; ++k) ones += b[k];
    EXPECT_EQ(ones, 16384u);

    // Maximal length: every nonzero 15-bit window appears exactly once.
    std::set<std::uint32_t> windows;
    for (std::size_t k = 0; k < kPrbs15Period; ++k) {
        std::uint32_t w = 0;
        for (std::size_t j = 0; j < 15; ++j) w = (w << 1) | b[k + j];
        windows.insert(w);
    }
    EXPECT_EQ(windows.size(), kPrbs15Period);
    EXPECT_EQ(windows.count(0), 0u);
}

TEST(Prbs15, RecurrenceAndSeeds) {
    // Oracle: b[n] = b[n-15] xor b[n-14] for the x^15 + x^14 + 1 polynomial.
    const auto b = prbs15(0x1234, 500);
    for (std::size_t n = 15; n < b.size(); ++n) ASSERT_EQ(b[n], b[n - 15] ^ b[n - 14]) << n;
    EXPECT_THROW(prbs15(0, 10), std::invalid_argument);
    EXPECT_NE(prbs15(1, 64), prbs15(2, 64));
}

TEST(MapPam, GrayLevels) {
    const std::vector<std::uint8_t> p2{0, 1, 1, 0};
    EXPECT_EQ(map_pam(p2, 2), (std::vector<double>{0, 1, 1, 0}));
    const std::vector<std::uint8_t> ends{0, 0, 1, 0};
    EXPECT_EQ(map_pam(ends, 4), (std::vector<double>{0, 1}));
    const std::vector<std::uint8_t> mid{0, 1, 1, 1};
    const auto m = map_pam(mid, 4);
    EXPECT_DOUBLE_EQ(m[0], 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(m[1], 2.0 / 3.0);
    const std::vector<std::uint8_t> odd{0, 1, 1};
    EXPECT_THROW(map_pam(odd, 4), std::invalid_argument);
    EXPECT_THROW(map_pam(p2, 8), std::invalid_argument);
}

TEST(RrcTaps, EnergyNyquistAndStopband) {
    const int sps = 16;
    const auto h = rrc_taps(0.18, 32, sps);
    ASSERT_EQ(h.size(), 32u * sps + 1);
    double e = 0.0;
    for (double v : h) e += v * v;
    EXPECT_NEAR(e, 1.0, 1e-9);

    // RRC * RRC sampled at symbol centres.
    std::vector<double> rc(2 * h.size() - 1, 0.0);
    for (std::size_t i = 0; i < h.size(); ++i)
        for (std::size_t j = 0; j < h.size(); ++j) rc[i + j] += h[i] * h[j];
    const std::size_t c = h.size() - 1;
    for (std::size_t k = sps; k <= c; k += sps) {
        EXPECT_LT(std::abs(rc[c + k]), 1e-3 * rc[c]) << k;
        EXPECT_LT(std::abs(rc[c - k]), 1e-3 * rc[c]) << k;
    }

    // Response at the band edge (1 + rolloff)/2 * baud, by direct DTFT.
    auto mag = [&](double f_over_baud) {
        cplx acc{};
        for (std::size_t k = 0; k < h.size(); ++k)
            acc += h[k] * std::polar(1.0, -2.0 * std::numbers::pi * f_over_baud * double(k) / sps);
        return std::abs(acc);
    };
    // The ideal response is zero here; what remains is leakage from cutting
    // the tails at +/-16 symbols (about -31 dB for these parameters).
    const double edge_db = 20.0 * std::log10(mag(0.59) / mag(0.0));
    EXPECT_LT(edge_db, -30.0);
    for (double f = 0.65; f < 8.0; f += 0.05) EXPECT_LT(20.0 * std::log10(mag(f) / mag(0.0)), -30.0) << f;
}

TEST(Shape, SampleRateAndDc) {
    TxConfig cfg;
    EXPECT_DOUBLE_EQ(cfg.sample_rate(), 448e9);
    const std::vector<double> flat(64, 0.7);
    const auto w = shape(flat, cfg);
    ASSERT_EQ(w.size(), 64u * 16u);
    double mean = 0.0;
    for (const auto& v : w.samples()) mean += v.real() / double(w.size());
    EXPECT_NEAR(mean, 0.7, 1e-6);

    // Sample-level oracle: phase p of the output is 0.7 times the polyphase
    // tap sum, scaled to DC gain sps. The ripple across phases is the
    // truncated filter's residual response at multiples of the baud rate.
    const auto h = rrc_taps(cfg.rolloff, cfg.rrc_span_symbols, cfg.sps);
    double g = 0.0;
    for (double v : h) g += v;
    const std::size_t mid = h.size() / 2;
    for (std::size_t p = 0; p < 16; ++p) {
        double poly = 0.0;
        for (std::size_t k = 0; k < h.size(); ++k)
            if ((k + 16 - mid % 16) % 16 == p) poly += h[k];
        const double want = 0.7 * poly * 16.0 / g;
        EXPECT_NEAR(w.samples()[p].real(), want, 1e-12) << p;
        EXPECT_NEAR(w.samples()[p].real(), 0.7, 3e-3) << p;
    }
}

TEST(Shape, MatchedFilterRecoversSymbols) {
    TxConfig cfg;
    cfg.pam_order = 2;
    const auto sym = map_pam(prbs15(7, 512), 2);
    const auto w = shape(sym, cfg);

    // Matched RRC with the same DC normalization, then symbol-centre samples.
    const auto h = rrc_taps(cfg.rolloff, cfg.rrc_span_symbols, cfg.sps);
    double g = 0.0;
    for (double v : h) g += v;
    const auto n = static_cast<long>(w.size());
    const long mid = static_cast<long>(h.size() / 2);
    double se = 0.0, worst = 0.0;
    for (std::size_t k = 0; k < sym.size(); ++k) {
        double acc = 0.0;
        for (long t = 0; t < static_cast<long>(h.size()); ++t) {
            const long idx = ((static_cast<long>(k) * cfg.sps - (t - mid)) % n + n) % n;
            acc += w.samples()[static_cast<std::size_t>(idx)].real() * h[static_cast<std::size_t>(t)];
        }
        // Peak of the unit-energy RC is 1; shaping gain was sps / g.
        const double e = acc * g / cfg.sps - sym[k];
        se += e * e;
        worst = std::max(worst, std::abs(e));
    }
    // Residual ISI of the truncated RC: below 1e-3 rms, a few 1e-3 worst case.
    EXPECT_LT(std::sqrt(se / double(sym.size())), 1e-3);
    EXPECT_LT(worst, 3e-3);
}

TEST(Laser, IdealAndOffset) {
    TxConfig cfg;
    cfg.linewidth = 0.0;
    const auto w = laser(cfg, 256);
    for (const auto& v : w.samples()) EXPECT_EQ(v, cplx(1.0, 0.0));

    cfg.baud = 1e9;
    cfg.sps = 1;
    cfg.laser_offset = 5e6;
    const auto s = fft(laser(cfg, 1000).samples());  // 1 MHz bins
    std::size_t arg = 0;
    for (std::size_t k = 1; k < s.size(); ++k)
        if (std::abs(s[k]) > std::abs(s[arg])) arg = k;
    EXPECT_EQ(arg, 5u);
}

TEST(Laser, WienerIncrementVariance) {
    TxConfig cfg;
    cfg.baud = 1e9;
    cfg.sps = 1;
    cfg.linewidth = 50e3;
    const std::size_t lag = 1000;  // 1 us
    std::vector<double> d;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        Rng rng(1000 + s);
        const auto w = laser(cfg, lag + 1, rng);
        d.push_back(std::arg(w.samples()[lag] * std::conj(w.samples()[0])));
    }
    double m2 = 0.0;
    for (double x : d) m2 += x * x;
    m2 /= double(d.size());
    const double want = 2.0 * std::numbers::pi * 50e3 * 1e-6;
    EXPECT_NEAR(m2, want, 0.1 * want);
}

TEST(Mzm, LevelsAndLaunchPower) {
    const double rate = 1e9;
    const Waveform carrier(std::vector<cplx>(8, 1.0), rate);
    EXPECT_NEAR(mean_power_mw(mzm_modulate(Waveform(std::vector<cplx>(8, 1.0), rate), carrier,
                                           INFINITY, 3.0)),
                std::pow(10.0, 0.3), 1e-12);

    const auto half = mzm_power_transfer(Waveform(std::vector<cplx>(4, 0.5), rate), INFINITY);
    const auto full = mzm_power_transfer(Waveform(std::vector<cplx>(4, 1.0), rate), INFINITY);
    EXPECT_DOUBLE_EQ(half[0], 0.5 * full[0]);

    // Extinction 20 dB: P_k = Pmin + k/3 (Pmax - Pmin).
    const auto lv = pam_levels(4);
    std::vector<cplx> drive(lv.begin(), lv.end());
    const auto p = mzm_power_transfer(Waveform(drive, rate), 20.0);
    const double pmax = 1.0, pmin = 0.01;
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(p[k] / p[3], (pmin + k / 3.0 * (pmax - pmin)) / pmax, 1e-12);

    EXPECT_THROW(mzm_power_transfer(Waveform(std::vector<cplx>(2, 1.5), rate), 20.0),
                 std::invalid_argument);
}

TEST(LoadNoise, IdentityAndPower) {
    const Waveform w(std::vector<cplx>(1 << 16, cplx(1.0, 0.0)), 1e9);
    Rng rng(3);
    EXPECT_EQ(load_noise(w, 0.0, rng).samples(), w.samples());
    const double s2 = 0.2;
    const auto out = load_noise(w, s2, rng);
    // Estimator std of mean |1 + n|^2: sqrt((2 s2 + s2^2) / N).
    const double tol = 3.0 * std::sqrt((2 * s2 + s2 * s2) / double(w.size()));
    EXPECT_NEAR(mean_power_mw(out), 1.0 + s2, tol);
}

TEST(Transmit, LaunchPowerAndShapes) {
    TxConfig cfg;
    cfg.n_symbols = 1024;
    Rng l(1), n(2);
    const auto out = transmit(cfg, 0.0, l, n);
    EXPECT_EQ(out.bits.size(), 2048u);
    EXPECT_EQ(out.symbols.size(), 1024u);
    EXPECT_EQ(out.field.size(), 1024u * 16u);
    EXPECT_NEAR(mean_power_mw(out.field), 1.0, 1e-12);
    cfg.pam_order = 3;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

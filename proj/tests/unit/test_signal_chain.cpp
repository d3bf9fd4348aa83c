#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qrng/errors.hpp"
#include "qrng/signal_chain.hpp"

using namespace qrng;
using namespace qrng::chain;
using std::numbers::pi;

namespace {

optics::DeviceParams symmetric() {
    optics::DeviceParams p;
    p.eta_ab1_db = p.eta_ab2_db = p.eta_c1d1_db = p.eta_c1d2_db = p.eta_c2d1_db =
        p.eta_c2d2_db = 3.7;
    p.g_pd1 = p.g_pd2 = 5.5e4;
    return p;
}

ChainParams quiet() {
    ChainParams c;
    c.sigma_vac = 0.0;
    c.sigma_e = 0.0;
    c.drift_rate_std = 0.0;
    return c;
}

double variance(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / (v.size() - 1);
}

}  // namespace

TEST_CASE("dac_to_phase") {
    const DacSpec dac;
    CHECK(dac_to_phase(0, dac, 1.240) == 0.0);
    CHECK(dac_to_phase(8192, dac, 1.240) == doctest::Approx(pi).epsilon(1e-15));
    CHECK(dac_to_phase(12288, dac, 1.240) == doctest::Approx(1.5 * pi).epsilon(1e-15));
    CHECK(dac_to_phase(16383, dac, 1.240) < 2 * pi);
    CHECK_THROWS_AS(dac_to_phase(-1, dac, 1.240), ParameterError);
    CHECK_THROWS_AS(dac_to_phase(16384, dac, 1.240), ParameterError);
}

TEST_CASE("adc_quantize") {
    const AdcSpec adc;
    const double lsb = adc.lsb();
    CHECK(adc_quantize(0.0, adc) == 2048);
    CHECK(adc_quantize(1.0, adc) == 4095);
    CHECK(adc_quantize(-1.0, adc) == 0);
    CHECK(adc_quantize(-0.5 + 3.4 * lsb, adc) == 3);
    CHECK(adc_quantize(1e300, adc) == 4095);
    CHECK(adc_quantize(-1e300, adc) == 0);

    std::uint32_t prev = 0;
    for (double v = -0.6; v <= 0.6; v += lsb / 7.3) {
        const auto code = adc_quantize(v, adc);
        CHECK(code >= prev);
        prev = code;
        if (v > -0.5 + lsb && v < 0.5 - lsb) {
            const double back = (static_cast<double>(code) - adc.mid_code()) * lsb;
            CHECK(std::abs(back - v) <= lsb / 2 + 1e-15);
        }
    }
}

TEST_CASE("spec validation") {
    AdcSpec adc;
    adc.bits = 3;
    CHECK_THROWS_AS(adc.validate(), ParameterError);
    adc.bits = 12;
    adc.v_range = 0.0;
    CHECK_THROWS_AS(adc.validate(), ParameterError);
    ChainParams c;
    c.sigma_e = -1.0;
    CHECK_THROWS_AS(SignalChainState(c, 1), ParameterError);
}

TEST_CASE("noise-free symmetric chain outputs exactly zero / mid-code") {
    SignalChainState state(quiet(), 3);
    const auto p = symmetric();
    for (int k = 0; k < 100; ++k) CHECK(detector_sample(p, state, 0.1 * k) == 0.0);

    std::vector<std::uint16_t> codes(1000);
    CHECK(sample_block(p, state, 1.234, AdcSpec{}, codes) == 0);
    for (auto c : codes) CHECK(c == 2048);
}

TEST_CASE("detector variance at the balanced phase") {
    const optics::DeviceParams p;
    const double phase = *optics::balance_phase(p);

    ChainParams c = quiet();
    c.sigma_vac = 0.01;
    SignalChainState state(c, 99);
    std::vector<double> v(1'000'000);
    for (auto& x : v) x = detector_sample(p, state, phase);
    CHECK(variance(v) == doctest::Approx(1e-4).epsilon(0.03));

    c.sigma_e = 0.005;
    SignalChainState both(c, 100);
    for (auto& x : v) x = detector_sample(p, both, phase);
    CHECK(variance(v) == doctest::Approx(1e-4 + 2.5e-5).epsilon(0.05));

    // Quantum variance follows LO power linearly.
    optics::DeviceParams half = p;
    half.p_lo = 2.5;
    CHECK(both.quantum_variance(half.p_lo) == doctest::Approx(0.5e-4));
}

TEST_CASE("equal seeds give identical streams") {
    const optics::DeviceParams p;
    SignalChainState a(ChainParams{}, 42), b(ChainParams{}, 42), c(ChainParams{}, 43);
    bool differs = false;
    for (int k = 0; k < 1000; ++k) {
        const double x = detector_sample(p, a, 2.0);
        CHECK(x == detector_sample(p, b, 2.0));
        differs = differs || x != detector_sample(p, c, 2.0);
    }
    CHECK(differs);
}

TEST_CASE("sample_block matches per-sample draws") {
    const optics::DeviceParams p;
    const AdcSpec adc;
    SignalChainState a(ChainParams{}, 8), b(ChainParams{}, 8);
    std::vector<std::uint16_t> codes(500);
    sample_block(p, a, 1.99, adc, codes);
    for (auto code : codes) CHECK(code == adc_quantize(detector_sample(p, b, 1.99), adc));
}

TEST_CASE("advance_drift") {
    SUBCASE("zero rate leaves the phase alone") {
        ChainParams c = quiet();
        c.delta_phi_ambient = 1.25;
        SignalChainState s(c, 1);
        advance_drift(s, 1.0);
        CHECK(s.delta_phi_ambient() == 1.25);
    }
    SUBCASE("increment spread is rate * sqrt(dt)") {
        ChainParams c = quiet();
        c.drift_rate_std = 1.0;
        c.delta_phi_ambient = 3.0;
        SignalChainState s(c, 17);
        std::vector<double> inc(100'000);
        for (auto& d : inc) {
            const double before = s.delta_phi_ambient();
            advance_drift(s, 1e-3);
            d = std::remainder(s.delta_phi_ambient() - before, 2 * pi);
        }
        CHECK(std::sqrt(variance(inc)) == doctest::Approx(std::sqrt(1e-3)).epsilon(0.03));
    }
    SUBCASE("wraps into [0, 2 pi)") {
        ChainParams c = quiet();
        c.drift_rate_std = 50.0;
        c.delta_phi_ambient = 2 * pi - 1e-9;
        SignalChainState s(c, 5);
        for (int k = 0; k < 1000; ++k) {
            advance_drift(s, 1e-2);
            CHECK(s.delta_phi_ambient() >= 0.0);
            CHECK(s.delta_phi_ambient() < 2 * pi);
        }
        CHECK(wrap_phase(2 * pi + 0.5) == doctest::Approx(0.5));
        CHECK(wrap_phase(-1e-18) < 2 * pi);
    }
    SignalChainState s(quiet(), 1);
    CHECK_THROWS_AS(advance_drift(s, 0.0), ParameterError);
}

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "qrng/errors.hpp"
#include "qrng/feedback_controller.hpp"

using namespace qrng;
using namespace qrng::control;
using std::numbers::pi;

namespace {

// Literal transcription of the rule, with +c wrapping once it would leave [0, 2^n).
std::int64_t reference_next(std::int64_t sum, std::int64_t dac, const ControllerConfig& cfg) {
    const std::int64_t top = std::int64_t{1} << cfg.dac_bits_n;
    if (sum >= cfg.interval_a && sum <= cfg.interval_b) return dac;
    bool down = sum < cfg.interval_a;
    if (cfg.invert_loop) down = !down;
    if (down) {
        if (dac < cfg.step_c) return top - cfg.step_c;
        return dac - cfg.step_c;
    }
    if (dac + cfg.step_c >= top) return cfg.step_c;
    return dac + cfg.step_c;
}

chain::ChainParams quiet_chain(double ambient = 0.0) {
    chain::ChainParams c;
    c.delta_phi_ambient = ambient;
    c.sigma_vac = 0.0;
    c.sigma_e = 0.0;
    c.drift_rate_std = 0.0;
    return c;
}

double lock_fraction(const ClosedLoopRun& run, std::size_t skip) {
    std::size_t locked = 0;
    for (std::size_t i = skip; i < run.trace.size(); ++i) locked += run.trace[i].locked;
    return static_cast<double>(locked) / static_cast<double>(run.trace.size() - skip);
}

}  // namespace

TEST_CASE("config validation") {
    ControllerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    auto bad = cfg;
    bad.interval_a = bad.interval_b + 1;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = cfg;
    bad.step_c = 0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = cfg;
    bad.dac_init = 16384;
    CHECK_THROWS_AS(ControllerState::initial(bad), ParameterError);
    bad = cfg;
    bad.block_size_n = 0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    CHECK(ControllerState::initial(cfg).dac_data == 8092);
}

TEST_CASE("decide at the boundary lattice") {
    ControllerConfig cfg;
    const std::int64_t top = cfg.modulus();
    const std::vector<std::int64_t> sums{cfg.interval_a - 1, cfg.interval_a, cfg.interval_a + 1,
                                         cfg.interval_b - 1, cfg.interval_b, cfg.interval_b + 1};
    const std::vector<std::int64_t> dacs{0, 1, 4, 5, 6, 8092, top - 7, top - 6, top - 5,
                                         top - 2, top - 1};
    for (bool invert : {false, true}) {
        cfg.invert_loop = invert;
        for (auto s : sums)
            for (auto d : dacs) {
                ControllerState st{d, 7, 0, false};
                const auto next = decide(s, cfg, st);
                CAPTURE(s);
                CAPTURE(d);
                CHECK(next.dac_data == reference_next(s, d, cfg));
                CHECK(next.dac_data >= 0);
                CHECK(next.dac_data < top);
                CHECK(next.locked == (s >= cfg.interval_a && s <= cfg.interval_b));
                CHECK(next.blocks_processed == 8);
                CHECK(next.last_sum == s);
            }
    }
    cfg.invert_loop = false;
    CHECK(decide(cfg.interval_a - 1, cfg, {3, 0, 0, false}).dac_data == top - 5);
    CHECK(decide(cfg.interval_b + 1, cfg, {top - 5, 0, 0, false}).dac_data == 5);
    CHECK(decide(cfg.interval_b + 1, cfg, {top - 6, 0, 0, false}).dac_data == top - 1);
}

TEST_CASE("decide matches the reference over random states") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100'000; ++trial) {
        ControllerConfig cfg;
        cfg.dac_bits_n = 1 + static_cast<int>(rng() % 16);
        cfg.step_c = 1 + static_cast<std::int64_t>(rng() % (cfg.modulus() - 1));
        cfg.interval_a = static_cast<std::int64_t>(rng() % 4'000'000);
        cfg.interval_b = cfg.interval_a + static_cast<std::int64_t>(rng() % 20'000);
        cfg.dac_init = 0;
        cfg.invert_loop = rng() & 1;
        const std::int64_t dac = static_cast<std::int64_t>(rng() % cfg.modulus());
        const std::int64_t sum = static_cast<std::int64_t>(rng() % 4'100'000);
        const auto next = decide(sum, cfg, {dac, 0, 0, false});
        REQUIRE(next.dac_data == reference_next(sum, dac, cfg));
        REQUIRE(next.dac_data >= 0);
        REQUIRE(next.dac_data < cfg.modulus());
    }
}

TEST_CASE("process_block sums and centers") {
    ControllerConfig cfg;
    cfg.block_size_n = 4;
    cfg.interval_a = 8190;
    cfg.interval_b = 8194;
    const std::vector<std::uint16_t> codes{2047, 2048, 2048, 2050};  // sum 8193, mean 2048.25
    auto [block, next] = process_block(codes, cfg, ControllerState::initial(cfg));
    CHECK(block.sum == 8193);
    CHECK(next.locked);
    // round(2 * 2048.25) = 4097
    CHECK(block.centered == std::vector<std::int16_t>{-3, -1, -1, 3});

    const std::vector<std::uint16_t> half{1, 2, 2, 2};  // mean 1.75, doubled 3.5 -> 4
    CHECK(process_block(half, cfg, ControllerState::initial(cfg)).first.centered ==
          std::vector<std::int16_t>{-2, 0, 0, 0});

    const std::vector<std::uint16_t> shorter{1, 2, 3};
    CHECK_THROWS_AS(process_block(shorter, cfg, ControllerState::initial(cfg)), ParameterError);

    // Centered values have mean within half an LSB (one unit) of zero.
    std::mt19937 rng(4);
    ControllerConfig big;
    std::vector<std::uint16_t> rnd(1000);
    for (int t = 0; t < 200; ++t) {
        for (auto& c : rnd) c = static_cast<std::uint16_t>(rng() % 4096);
        auto [b, s] = process_block(rnd, big, ControllerState::initial(big));
        double m = 0.0;
        for (auto v : b.centered) m += v;
        CHECK(std::abs(m / 1000.0) <= 1.0 / 1000.0 * 500 + 1e-12);
    }
}

TEST_CASE("expected_sum is at the window centre near the balance phase") {
    const optics::DeviceParams p;
    const ControllerConfig cfg;
    const chain::AdcSpec adc;
    const double phi = *optics::balance_phase(p);
    CHECK(expected_sum(p, phi, cfg, adc) == doctest::Approx(2048000.0));
    CHECK(phase_per_step(cfg, chain::DacSpec{}, p.v_pi) ==
          doctest::Approx(2 * pi * 5 / 16384).epsilon(1e-12));
    const auto stable = stable_balance_phase(p, cfg);
    REQUIRE(stable);
    CHECK(*stable == doctest::Approx(phi));
    ControllerConfig inv = cfg;
    inv.invert_loop = true;
    CHECK(*stable_balance_phase(p, inv) == doctest::Approx(2 * pi - phi));
}

TEST_CASE("noise-free step response converges to the balance phase") {
    const optics::DeviceParams p;
    const ControllerConfig cfg;
    const chain::DacSpec dac;
    const double target = *stable_balance_phase(p, cfg);
    auto run = run_closed_loop(p, chain::SignalChainState(quiet_chain(), 1), cfg,
                               chain::AdcSpec{}, dac, 3000);
    CHECK(run.warnings.empty());

    std::size_t first_lock = run.trace.size();
    for (const auto& r : run.trace)
        if (r.locked) {
            first_lock = r.index;
            break;
        }
    // ~1.11 rad from the initial code at 1.92e-3 rad per step.
    CHECK(first_lock > 500);
    CHECK(first_lock < 650);

    const double step = phase_per_step(cfg, dac, p.v_pi);
    for (std::size_t i = 1000; i < run.trace.size(); ++i) {
        const double phase = chain::dac_to_phase(run.trace[i].dac_after, dac, p.v_pi);
        REQUIRE(std::abs(phase - target) <= 2 * step);
    }
    CHECK(lock_fraction(run, 1000) > 0.9);
}

TEST_CASE("loop follows an ambient phase offset from either side") {
    const optics::DeviceParams p;
    ControllerConfig cfg;
    cfg.step_c = 2;
    cfg.interval_a = 2045000;
    cfg.interval_b = 2051000;
    const chain::DacSpec dac;
    const double target = *stable_balance_phase(p, cfg);
    for (double ambient : {0.0, 0.7, 2.0, 4.5}) {
        CAPTURE(ambient);
        auto run = run_closed_loop(p, chain::SignalChainState(quiet_chain(ambient), 3), cfg,
                                   chain::AdcSpec{}, dac, 12000);
        const double total = chain::wrap_phase(
            ambient + chain::dac_to_phase(run.trace.back().dac_after, dac, p.v_pi));
        CHECK(std::abs(std::remainder(total - target, 2 * pi)) < 0.01);
        CHECK(run.trace.back().locked);
    }
}

TEST_CASE("inverted loop settles on the mirrored branch") {
    const optics::DeviceParams p;
    ControllerConfig cfg;
    cfg.invert_loop = true;
    const chain::DacSpec dac;
    const double target = *stable_balance_phase(p, cfg);
    auto run = run_closed_loop(p, chain::SignalChainState(quiet_chain(), 1), cfg,
                               chain::AdcSpec{}, dac, 6000);
    const double phase = chain::dac_to_phase(run.trace.back().dac_after, dac, p.v_pi);
    CHECK(std::abs(phase - target) < 0.01);
}

TEST_CASE("low-noise loop with drift holds lock") {
    const optics::DeviceParams p;
    ControllerConfig cfg;
    cfg.step_c = 2;
    chain::ChainParams c;
    c.sigma_vac = 0.001;
    c.sigma_e = 0.0005;
    auto run = run_closed_loop(p, chain::SignalChainState(c, 11), cfg, chain::AdcSpec{},
                               chain::DacSpec{}, 4000);
    CHECK(lock_fraction(run, 2000) > 0.8);
    std::size_t clipped = 0;
    for (std::size_t i = 2000; i < run.trace.size(); ++i) clipped += run.trace[i].clipped;
    CHECK(clipped == 0);
}

TEST_CASE("drift faster than the step raises a warning") {
    const optics::DeviceParams p;
    ControllerConfig cfg;
    cfg.step_c = 1;
    auto run = run_closed_loop(p, chain::SignalChainState(chain::ChainParams{}, 1), cfg,
                               chain::AdcSpec{}, chain::DacSpec{}, 2);
    CHECK(run.warnings.size() == 1);
}

TEST_CASE("closed loop bookkeeping") {
    const optics::DeviceParams p;
    const ControllerConfig cfg;
    ClosedLoop loop(p, chain::SignalChainState(chain::ChainParams{}, 5), cfg, chain::AdcSpec{},
                    chain::DacSpec{});
    CHECK(loop.period() == doctest::Approx(12.5e-6));
    auto [b0, r0] = loop.step();
    CHECK(r0.index == 0);
    CHECK(r0.dac_before == 8092);
    CHECK(r0.dac_after == loop.state().dac_data);
    CHECK(b0.codes.size() == 1000);
    loop.freeze(true);
    const auto held = loop.state().dac_data;
    for (int k = 0; k < 50; ++k) {
        auto [b, r] = loop.step();
        CHECK(r.dac_after == held);
        CHECK(r.index == static_cast<std::uint64_t>(k + 1));
    }

    ControllerConfig mismatch = cfg;
    mismatch.dac_bits_n = 12;
    CHECK_THROWS_AS(ClosedLoop(p, chain::SignalChainState(chain::ChainParams{}, 5), mismatch,
                               chain::AdcSpec{}, chain::DacSpec{}),
                    ParameterError);
    chain::AdcSpec wide;
    wide.bits = 16;
    CHECK_THROWS_AS(ClosedLoop(p, chain::SignalChainState(chain::ChainParams{}, 5), cfg, wide,
                               chain::DacSpec{}),
                    ParameterError);
}

#include <doctest.h>

#include "ddp/intensity.hpp"
#include "support.hpp"

#include <cmath>

using namespace ddp;

TEST_SUITE_BEGIN("intensity");

namespace {

constexpr double kLn2 = 0.6931471805599453;

// A model whose readout is saturated so every influence factor is exactly 1.
ModelParams ddp_with_unit_factors(int K, int F, uint64_t seed) {
    ModelParams m = test::random_model(ModelKind::kDdp, K, F, seed);
    m.neural.readout_w.assign(m.neural.readout_w.size(), 0.0);
    m.neural.readout_b = 1000.0;  // sigmoid saturates to exactly 1.0
    return m;
}

}  // namespace

TEST_CASE("kernel_eval analytic points") {
    CHECK(kernel_eval(1.0, 0.0) == 1.0);
    CHECK(kernel_eval(2.0, 0.0) == 2.0);
    CHECK(kernel_eval(1.0, kLn2) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(kernel_eval(1.0, -0.1), Error);
    CHECK_THROWS_AS(kernel_eval(0.0, 1.0), Error);
}

TEST_CASE("kernel_integral analytic points and normalization") {
    CHECK(kernel_integral(1.0, 0.0, 1e9) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(kernel_integral(1.0, 0.0, 0.0) == 0.0);
    CHECK(kernel_integral(1.0, 0.0, kLn2) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(kernel_integral(1.0, 2.0, 1.0), Error);

    // Monotone nondecreasing mass as the upper end grows.
    double prev = 0.0;
    for (double T = 0.5; T < 20.0; T += 0.5) {
        const double mass = kernel_integral(0.7, 0.0, T);
        CHECK(mass >= prev);
        prev = mass;
    }
}

TEST_CASE("background_rate softplus values") {
    BackgroundParams bg;
    bg.theta = Matrix(1, 0);
    bg.bias = {0.0};
    CHECK(background_rate(bg, 0, {}) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    bg.bias = {-30.0};
    const double tiny = background_rate(bg, 0, {});
    CHECK(tiny > 0.0);
    CHECK(tiny < 1e-12);

    BackgroundParams bg1;
    bg1.theta = Matrix(1, 1);
    bg1.theta(0, 0) = 1.0;
    bg1.bias = {0.0};
    const std::vector<double> f = {1.0};
    CHECK(background_rate(bg1, 0, f) == doctest::Approx(softplus(1.0)).epsilon(1e-14));
    CHECK_THROWS_AS(background_rate(bg1, 0, {}), Error);
}

TEST_CASE("intensity with empty history is the background") {
    const ModelParams m = test::random_model(ModelKind::kDdp, 3, 2, 1);
    EventSequence seq;
    seq.horizon_T = 10.0;
    seq.context = {0.3, -0.2};
    const InfluenceTrace trace = make_trace(m, seq);
    for (int v = 0; v < 3; ++v)
        CHECK(intensity(m, v, 4.0, seq, &trace) ==
              doctest::Approx(background_rate(m.background, v, m.context_view(seq))).epsilon(1e-14));
}

TEST_CASE("single excitation jump: alpha * beta * w at t_i+") {
    ModelParams m = ddp_with_unit_factors(2, 0, 2);
    m.context_dim = 0;
    m.background.theta = Matrix(2, 0);
    m.excitation.raw = Matrix(2, 2, softplus_inv(0.5));
    m.kernel.raw = Matrix(2, 2, softplus_inv(1.0 - kBetaFloor));

    EventSequence seq;
    seq.horizon_T = 10.0;
    seq.events = {{2.0, 0}};
    const InfluenceTrace trace = make_trace(m, seq);

    const double mu = background_rate(m.background, 1, {});
    // Right limit at the event: gamma(0) = beta = 1, so the jump is 0.5.
    CHECK(intensity_right(m, 1, 2.0, seq, &trace) == doctest::Approx(mu + 0.5).epsilon(1e-12));
    CHECK(intensity(m, 1, 2.0, seq, &trace) == doctest::Approx(mu).epsilon(1e-12));
    // Decayed by exp(-ln 2) = 1/2 after ln 2 days.
    CHECK(intensity(m, 1, 2.0 + kLn2, seq, &trace) == doctest::Approx(mu + 0.25).epsilon(1e-12));

    CHECK_THROWS_AS(intensity(m, 1, 3.0, seq, nullptr), Error);  // missing trace
}

TEST_CASE("ddp with unit factors equals chawkes at random probes") {
    const ModelParams ddp = ddp_with_unit_factors(3, 2, 4);
    ModelParams ch = ddp;
    ch.kind = ModelKind::kCHawkes;
    ch.neural = NeuralParams{};

    Rng rng(404);
    const auto seq = test::random_sequence(3, 2, 7, 30.0, 4);
    const InfluenceTrace trace = make_trace(ddp, seq);
    for (int probe = 0; probe < 20; ++probe) {
        const double t = rng.uniform(0.0, 30.0);
        const int v = rng.uniform_int(3);
        CHECK(intensity(ddp, v, t, seq, &trace) == intensity(ch, v, t, seq, nullptr));
    }
}

TEST_CASE("total_intensity sums the types") {
    ModelParams m = make_model(ModelKind::kPoisson, test::toy_catalog(2), 0, 1.0, 0, 0, 0, 0, 0);
    m.background.bias = {softplus_inv(1.0), softplus_inv(2.0)};
    EventSequence seq;
    seq.horizon_T = 5.0;
    CHECK(total_intensity(m, 1.0, seq, nullptr) == doctest::Approx(3.0).epsilon(1e-12));

    const ModelParams d = test::random_model(ModelKind::kDdp, 4, 1, 5);
    const auto rseq = test::random_sequence(4, 1, 6, 20.0, 5);
    const InfluenceTrace trace = make_trace(d, rseq);
    CHECK(total_intensity(d, 0.0, rseq, &trace) ==
          doctest::Approx(total_intensity_right(d, 0.0, rseq, &trace)).epsilon(1e-12));
    Rng rng(55);
    for (int probe = 0; probe < 10; ++probe) {
        const double t = rng.uniform(0.0, 20.0);
        double sum = 0.0;
        for (int v = 0; v < 4; ++v) sum += intensity(d, v, t, rseq, &trace);
        CHECK(total_intensity(d, t, rseq, &trace) == doctest::Approx(sum).epsilon(1e-12));
    }
}

TEST_CASE("compensator analytic cases") {
    ModelParams poisson = make_model(ModelKind::kPoisson, test::toy_catalog(1), 0, 1.0, 0, 0, 0, 0, 0);
    EventSequence empty;
    empty.horizon_T = 10.0;
    CHECK(compensator(poisson, 0, 0.0, 1.0, empty, nullptr) == doctest::Approx(1.0).epsilon(1e-12));

    // One source event at 0 with alpha = 0.5, beta = 1, w = 1: over [0, ln 2]
    // the triggered mass is 0.5 * (1 - 1/2) = 0.25 on top of mu * ln 2.
    ModelParams m = ddp_with_unit_factors(1, 0, 6);
    m.context_dim = 0;
    m.background.theta = Matrix(1, 0);
    m.excitation.raw = Matrix(1, 1, softplus_inv(0.5));
    m.kernel.raw = Matrix(1, 1, softplus_inv(1.0 - kBetaFloor));
    EventSequence seq;
    seq.horizon_T = 10.0;
    seq.events = {{0.0, 0}};
    const InfluenceTrace trace = make_trace(m, seq);
    const double mu = background_rate(m.background, 0, {});
    CHECK(compensator(m, 0, 0.0, kLn2, seq, &trace) == doctest::Approx(mu * kLn2 + 0.25).epsilon(1e-12));

    // Events strictly inside the interval are rejected.
    EventSequence mid;
    mid.horizon_T = 10.0;
    mid.events = {{1.0, 0}};
    const InfluenceTrace mid_trace = make_trace(m, mid);
    CHECK_THROWS_AS(compensator(m, 0, 0.5, 2.0, mid, &mid_trace), Error);
}

TEST_CASE("compensator matches trapezoid quadrature") {
    for (uint64_t seed = 0; seed < 3; ++seed) {
        const ModelParams m = test::random_model(ModelKind::kDdp, 3, 2, 100 + seed);
        auto seq = test::random_sequence(3, 2, 5, 20.0, 100 + seed);
        const InfluenceTrace trace = make_trace(m, seq);
        // Interval after the last event, no events inside.
        const double t0 = seq.events.back().t, t1 = seq.horizon_T;
        double closed = 0.0;
        for (int v = 0; v < 3; ++v) closed += compensator(m, v, t0, t1, seq, &trace);
        const double quad = test::trapezoid_total_intensity(m, seq, &trace, t0, t1, 100000);
        CHECK(test::rel_err(closed, quad) < 1e-4);
    }
}

TEST_CASE("compensator additivity over adjacent intervals") {
    const ModelParams m = test::random_model(ModelKind::kCHawkes, 3, 1, 7);
    auto seq = test::random_sequence(3, 1, 4, 20.0, 7);
    const double a = seq.events.back().t + 0.5, b = a + 1.0, c = b + 2.5;
    for (int v = 0; v < 3; ++v) {
        const double two = compensator(m, v, a, b, seq, nullptr) + compensator(m, v, b, c, seq, nullptr);
        CHECK(two == doctest::Approx(compensator(m, v, a, c, seq, nullptr)).epsilon(1e-12));
    }
}

TEST_CASE("model-family collapse chain") {
    // ddp with w == 1 equals chawkes; chawkes with F = 0 equals hawkes;
    // hawkes with alpha = 0 equals poisson. Pointwise at 100 probes each.
    const int K = 3;
    const auto seq0 = test::random_sequence(K, 0, 8, 40.0, 8);

    ModelParams ddp = ddp_with_unit_factors(K, 0, 8);
    ddp.context_dim = 0;
    ddp.background.theta = Matrix(K, 0);
    ModelParams ch = ddp;
    ch.kind = ModelKind::kCHawkes;
    ch.neural = NeuralParams{};
    ModelParams hk = ch;
    hk.kind = ModelKind::kHawkes;
    ModelParams hk0 = hk;
    hk0.excitation.raw = Matrix(K, K, -1e9);  // softplus(-1e9) == 0 exactly
    ModelParams po = hk0;
    po.kind = ModelKind::kPoisson;
    po.excitation = ExcitationMatrix{};
    po.kernel = KernelParams{};

    const InfluenceTrace trace = make_trace(ddp, seq0);
    Rng rng(808);
    for (int probe = 0; probe < 100; ++probe) {
        const double t = rng.uniform(0.0, 40.0);
        const int v = rng.uniform_int(K);
        const double l_ddp = intensity(ddp, v, t, seq0, &trace);
        const double l_ch = intensity(ch, v, t, seq0, nullptr);
        const double l_hk = intensity(hk, v, t, seq0, nullptr);
        const double l_hk0 = intensity(hk0, v, t, seq0, nullptr);
        const double l_po = intensity(po, v, t, seq0, nullptr);
        CHECK(std::abs(l_ddp - l_ch) < 1e-12);
        CHECK(std::abs(l_ch - l_hk) < 1e-12);  // same background, F = 0
        CHECK(std::abs(l_hk0 - l_po) < 1e-12);
    }
}

TEST_CASE("nonnegativity: intensity never drops below the background") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        const ModelParams m = test::random_model(ModelKind::kDdp, 3, 2, 200 + seed);
        const auto seq = test::random_sequence(3, 2, 8, 30.0, 200 + seed);
        const InfluenceTrace trace = make_trace(m, seq);
        Rng rng(seed);
        for (int probe = 0; probe < 20; ++probe) {
            const double t = rng.uniform(0.0, 30.0);
            const int v = rng.uniform_int(3);
            const double mu = background_rate(m.background, v, m.context_view(seq));
            CHECK(intensity(m, v, t, seq, &trace) >= mu);
            CHECK(mu > 0.0);
        }
    }
}

TEST_CASE("right-continuity: jump at an event is alpha * beta * w") {
    const ModelParams m = test::random_model(ModelKind::kDdp, 3, 1, 9);
    const auto seq = test::random_sequence(3, 1, 5, 20.0, 9);
    const InfluenceTrace trace = make_trace(m, seq);
    for (size_t i = 0; i < seq.events.size(); ++i) {
        const auto& e = seq.events[i];
        for (int v = 0; v < 3; ++v) {
            const double jump = intensity_right(m, v, e.t, seq, &trace) - intensity(m, v, e.t, seq, &trace);
            const double expect = m.excitation.alpha(e.type_idx, v) * m.kernel.beta(e.type_idx, v) *
                                  trace.factors[i];
            CHECK(jump == doctest::Approx(expect).epsilon(1e-10));
        }
    }
}

TEST_SUITE_END();

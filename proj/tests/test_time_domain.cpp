#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "optospring/analysis.hpp"
#include "optospring/config.hpp"
#include "optospring/errors.hpp"
#include "optospring/time_domain.hpp"

using namespace optospring;

namespace {

constexpr double kPi = std::numbers::pi;

const RunConfig& cfg() {
    static const RunConfig c = default_config();
    return c;
}

double rel(Complex a, Complex b) { return std::abs(a - b) / std::abs(b); }

// Real part of the growing pair of the spring-only closed loop.
double spring_growth_oracle(const Plant& p) {
    double best = -1e300;
    for (Complex r : poly_roots(g_cl(p).den())) best = std::max(best, r.real());
    return best;
}

SimulationTrace synthetic(double rate, double f, double duration, double dt) {
    SimulationTrace t;
    for (double s = 0.0; s < duration; s += dt) {
        t.time_s.push_back(s);
        t.displacement_m.push_back(std::exp(rate * s) * std::sin(2.0 * kPi * f * s));
        t.cavity_power_w.push_back(0.0);
        t.actuator_drive_w.push_back(0.0);
    }
    return t;
}

}  // namespace

TEST_CASE("realize: first-order lag") {
    const StateSpace ss = realize(RationalTF(Polynomial{1.0}, Polynomial{3.0, 1.0}));
    REQUIRE(ss.order() == 1);
    CHECK(ss.a(0, 0) == doctest::Approx(-3.0));
    CHECK(ss.d == 0.0);
}

TEST_CASE("realize: pure gain") {
    const StateSpace ss = realize(RationalTF(Polynomial{2.5}, Polynomial{1.0}));
    CHECK(ss.order() == 0);
    CHECK(ss.d == 2.5);
    CHECK(rel(ss.response(1e3), 2.5) < 1e-15);
}

TEST_CASE("realize: spring closed loop keeps its poles") {
    const RationalTF cl = g_cl(cfg().plant());
    const StateSpace ss = realize(cl, "cl");
    REQUIRE(ss.order() == 2);
    const Eigen::VectorXcd eig = ss.a.eigenvalues();
    for (Complex r : poly_roots(cl.den())) {
        double best = 1e300;
        for (Eigen::Index i = 0; i < eig.size(); ++i) best = std::min(best, std::abs(eig(i) - r));
        CHECK(best < 1e-8 * std::abs(r));
    }
    for (double f : FrequencyGrid::log_spaced(10.0, 1e6, 4).points()) CHECK(rel(ss.response(f), tf_eval(cl, f)) < 1e-8);
}

TEST_CASE("realize: chain blocks and their series connection") {
    const FeedbackChain& ch = cfg().chain;
    FeedbackChain nd = ch;
    nd.am.delay_s = 0.0;
    const RationalTF e = electronics_tf(nd);
    const StateSpace ss = series(series(series(realize(pd_tf(ch.pd)), realize(hpf_tf(ch.hpf))), realize(pi_tf(ch.servo))),
                                 realize(am_tf(nd.am)));
    CHECK(ss.order() == static_cast<std::size_t>(e.den().degree()));
    const StateSpace direct = realize(e);
    for (double f : FrequencyGrid::log_spaced(10.0, 1e7, 3).points()) {
        CHECK(rel(ss.response(f), tf_eval(e, f)) < 1e-8);
        CHECK(rel(direct.response(f), tf_eval(e, f)) < 1e-8);
    }
}

TEST_CASE("realize: rejects improper or delayed input") {
    CHECK_THROWS_AS(realize(RationalTF(Polynomial{0.0, 0.0, 1.0}, Polynomial{1.0, 1.0})), ImproperSystemError);
    CHECK_THROWS_AS(realize(RationalTF(Polynomial{1.0}, Polynomial{1.0, 1.0}, 1e-6)), DelayNotAlgebraicError);
}

TEST_CASE("simulate: nothing in, nothing out") {
    SimConfig s;
    s.duration_s = 1e-4;
    const SimulationTrace t = simulate(cfg().plant(), cfg().chain, s);
    CHECK(t.size() == 25001);
    CHECK(std::all_of(t.displacement_m.begin(), t.displacement_m.end(), [](double v) { return v == 0.0; }));
    CHECK(std::all_of(t.actuator_drive_w.begin(), t.actuator_drive_w.end(), [](double v) { return v == 0.0; }));
    CHECK_FALSE(t.divergence_index);
}

TEST_CASE("simulate: anti-damped growth without feedback") {
    const Plant p = cfg().plant();
    SimConfig s;
    s.feedback_on = false;
    s.duration_s = 2e-3;
    s.initial_displacement_m = 1e-12;
    const SimulationTrace t = simulate(p, cfg().chain, s);
    REQUIRE(t.divergence_index.has_value());
    CHECK(t.size() == *t.divergence_index + 1);

    const OpticalSpring os = optical_spring_params(p.cavity, p.fundamental());
    const double expected = (os.gamma_os_rad_s - p.fundamental().gamma_m()) / 2.0;
    CHECK(spring_growth_oracle(p) == doctest::Approx(expected).epsilon(1e-9));
    const double rate = growth_rate(t);
    CHECK(rate == doctest::Approx(expected).epsilon(0.05));

    // halving the step barely moves the fit
    SimConfig fine = s;
    fine.dt_s = s.dt_s / 2.0;
    const double rate_fine = growth_rate(simulate(p, cfg().chain, fine));
    CHECK(std::abs(rate_fine / rate - 1.0) < 1e-3);
}

TEST_CASE("simulate: feedback holds the loop") {
    const Plant p = cfg().plant();
    SimConfig s;
    s.duration_s = 3e-3;
    s.initial_displacement_m = 1e-12;
    const SimulationTrace t = simulate(p, cfg().chain, s);
    CHECK_FALSE(t.divergence_index);
    CHECK(t.pade_order == 1);
    double late = 0.0;
    for (std::size_t i = t.size() / 2; i < t.size(); ++i) late = std::max(late, std::abs(t.displacement_m[i]));
    CHECK(late < 1e-12);
    CHECK(growth_rate(t) < 0.0);
}

TEST_CASE("simulate: step response rings at the dominant closed-loop pair") {
    const Plant p = cfg().plant();
    SimConfig s;
    s.duration_s = 3e-4;
    s.injection = {InjectionKind::ForceStep, 1e-12, 0.0};
    const SimulationTrace t = simulate(p, cfg().chain, s);
    CHECK_FALSE(t.divergence_index);

    // least-damped complex pair of 1 + G_os + G_f with the same Pade section
    const auto roots = poly_roots(characteristic_polynomial(p, with_pade_delay(g_f(cfg().chain, p.cavity), s.pade_order)));
    Complex dominant{-1e300, 0.0};
    for (Complex r : roots) {
        if (std::abs(r.imag()) > 1.0 && r.real() > dominant.real()) dominant = r;
    }
    CHECK(ring_frequency(t, 1e-5) == doctest::Approx(std::abs(dominant.imag()) / (2.0 * kPi)).epsilon(0.02));
}

TEST_CASE("simulate: forced response matches the frequency domain") {
    const Plant p = cfg().plant();
    for (double f : {1e3, 10e3, 60e3, 90e3}) {
        SimConfig s;
        s.duration_s = 5e-3;
        s.record_stride = 10;
        s.injection = {InjectionKind::ForceSine, 1e-12, f};
        const SimulationTrace t = simulate(p, cfg().chain, s);
        const double amp = sine_amplitude(t, f, 2.5e-3);
        CHECK(amp == doctest::Approx(std::abs(force_response(p, cfg().chain, f)) * 1e-12).epsilon(0.02));
    }
}

TEST_CASE("simulate: laser-frequency injection reaches the cavity through the loop") {
    const Plant p = cfg().plant();
    for (double f : {10e3, 100e3}) {
        SimConfig s;
        s.duration_s = 3e-3;
        s.record_stride = 5;
        s.injection = {InjectionKind::FreqNoiseSine, 1e-15, f};
        SimulationTrace t = simulate(p, cfg().chain, s);
        t.displacement_m = t.cavity_power_w;
        const double expect = std::abs(cavity_slope(p.cavity, f) / characteristic(p, cfg().chain, f)) * 1e-15;
        CHECK(sine_amplitude(t, f, 1.5e-3) == doctest::Approx(expect).epsilon(0.02));
    }
}

TEST_CASE("simulate: free oscillator decays at half the mechanical width") {
    Plant p = cfg().plant();
    p.cavity.p_cav_w = 0.0;
    SimConfig s;
    s.feedback_on = false;
    s.dt_s = 2e-6;
    s.duration_s = 0.2;
    s.initial_displacement_m = 1e-12;
    const double rate = growth_rate(simulate(p, cfg().chain, s));
    CHECK(rate == doctest::Approx(-p.fundamental().gamma_m() / 2.0).epsilon(0.02));
}

TEST_CASE("simulate: step bound and arguments") {
    SimConfig s;
    s.dt_s = 1e-7;
    CHECK_THROWS_AS(simulate(cfg().plant(), cfg().chain, s), ConfigError);
    s = {};
    s.duration_s = -1.0;
    CHECK_THROWS_AS(simulate(cfg().plant(), cfg().chain, s), ConfigError);
    // a fast injection tightens the bound
    s = {};
    s.injection = {InjectionKind::ForceSine, 1e-12, 50e6};
    CHECK_THROWS_AS(simulate(cfg().plant(), cfg().chain, s), ConfigError);
    // without feedback the fast electronics poles are gone and a coarse step is fine
    s = {};
    s.feedback_on = false;
    s.dt_s = 1e-7;
    s.duration_s = 1e-5;
    CHECK_NOTHROW(simulate(cfg().plant(), cfg().chain, s));
}

TEST_CASE("simulate: deterministic") {
    SimConfig s;
    s.duration_s = 2e-4;
    s.injection = {InjectionKind::ForceSine, 1e-12, 30e3};
    const SimulationTrace a = simulate(cfg().plant(), cfg().chain, s);
    const SimulationTrace b = simulate(cfg().plant(), cfg().chain, s);
    CHECK(a.displacement_m == b.displacement_m);
    CHECK(a.cavity_power_w == b.cavity_power_w);
}

TEST_CASE("growth rate of constructed signals") {
    CHECK(growth_rate(synthetic(0.01, 1000.0, 20.0, 2e-5)) == doctest::Approx(0.01).epsilon(0.01));
    CHECK(std::abs(growth_rate(synthetic(0.0, 1000.0, 1.0, 2e-6))) < 1e-4);
    CHECK_THROWS_AS(growth_rate(synthetic(0.0, 1000.0, 2.5e-3, 1e-6)), InsufficientDataError);
}

TEST_CASE("trace CSV") {
    SimConfig s;
    s.duration_s = 8e-9;
    s.initial_displacement_m = 1e-12;
    std::ostringstream os;
    write_trace_csv(os, simulate(cfg().plant(), cfg().chain, s));
    const std::string text = os.str();
    CHECK(text.rfind("t_s,x_m,p_cav_w,drive_w\n", 0) == 0);
    CHECK(text.find("0.00000000e+00,1.00000000e-12,") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

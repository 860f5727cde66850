#include "optospring/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "optospring/errors.hpp"

namespace optospring {

namespace {

// Bisection on a scalar function of log-frequency; `lo`/`hi` bracket a sign change.
template <typename F>
double bisect_log(F&& fn, double lo, double hi) {
    double a = std::log(lo);
    double b = std::log(hi);
    double fa = fn(lo);
    for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        const double fm = fn(std::exp(m));
        if (fm == 0.0) return std::exp(m);
        if ((fm > 0.0) == (fa > 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return std::exp(0.5 * (a + b));
}

// Arg change of fn(t) from t0 to t1, subdividing until each step is below max_step (rad).
template <typename F>
double arg_change(F&& fn, double t0, double t1, double max_step, int depth = 0) {
    const Complex z0 = fn(t0);
    const Complex z1 = fn(t1);
    const double d = std::arg(z1 / z0);
    if (std::abs(d) <= max_step || depth > 48) return d;
    const double tm = 0.5 * (t0 + t1);
    return arg_change(fn, t0, tm, max_step, depth + 1) + arg_change(fn, tm, t1, max_step, depth + 1);
}

int to_winding(double total_arg_change) {
    const double turns = -total_arg_change / (2.0 * std::numbers::pi);
    const double n = std::round(turns);
    if (std::abs(turns - n) > 0.05) {
        std::ostringstream os;
        os << "Nyquist contour did not close: " << turns << " turns";
        throw ContourResolutionError(os.str());
    }
    return static_cast<int>(n);
}

}  // namespace

std::vector<double> StabilityReport::phase_margins_deg() const {
    std::vector<double> out;
    out.reserve(crossings.size());
    for (const auto& c : crossings) out.push_back(c.phase_margin_deg);
    return out;
}

StabilityReport loop_margins(const LoopResponse& loop, const FrequencyGrid& grid) {
    StabilityReport r;
    const auto& f = grid.points();
    std::vector<Complex> v(f.size());
    std::transform(f.begin(), f.end(), v.begin(), [&](double x) { return loop(x); });

    auto log_mag = [&](double x) { return std::log(std::abs(loop(x))); };
    auto imag_part = [&](double x) { return loop(x).imag(); };

    for (std::size_t i = 0; i + 1 < f.size(); ++i) {
        const double g0 = std::log(std::abs(v[i]));
        const double g1 = std::log(std::abs(v[i + 1]));
        if (g0 == 0.0 || (g0 < 0.0) != (g1 < 0.0)) {
            const double fc = (g0 == 0.0) ? f[i] : bisect_log(log_mag, f[i], f[i + 1]);
            const Complex lc = loop(fc);
            const double ph = phase_deg(lc);
            r.crossings.push_back({fc, ph, 180.0 - std::abs(ph)});
        }
        const double h0 = v[i].imag();
        const double h1 = v[i + 1].imag();
        if (v[i].real() < 0.0 && v[i + 1].real() < 0.0 && (h0 == 0.0 || (h0 < 0.0) != (h1 < 0.0))) {
            const double fp = (h0 == 0.0) ? f[i] : bisect_log(imag_part, f[i], f[i + 1]);
            const Complex lp = loop(fp);
            if (lp.real() < 0.0) {
                r.phase_crossovers.push_back({fp, std::abs(lp), -magnitude_db(lp)});
            }
        }
    }

    for (const auto& pc : r.phase_crossovers) {
        if (pc.magnitude < 1.0 && (!r.gain_margin_db || pc.gain_margin_db < *r.gain_margin_db)) {
            r.gain_margin_db = pc.gain_margin_db;
            r.gain_margin_freq_hz = pc.f_hz;
        }
    }
    return r;
}

NyquistResult nyquist_stable(const ComplexResponse& loop, int open_loop_rhp) {
    const auto& vals = loop.values;
    if (vals.size() < 2) throw ContourResolutionError("nyquist: need at least two samples");
    if (std::abs(vals.front()) >= 1.0 || std::abs(vals.back()) >= 1.0) {
        throw ContourResolutionError("nyquist: |L| must be below 1 at both ends of the sampled range to close the contour");
    }
    constexpr double kMaxStep = std::numbers::pi / 2.0;
    double along = 0.0;
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        const double d = std::arg((1.0 + vals[i + 1]) / (1.0 + vals[i]));
        if (std::abs(d) >= kMaxStep) {
            std::ostringstream os;
            os << "nyquist: phase of 1+L jumps " << d * 180.0 / std::numbers::pi << " deg between "
               << loop.grid[i] << " and " << loop.grid[i + 1] << " Hz; refine the grid";
            throw ContourResolutionError(os.str());
        }
        along += d;
    }
    const double total = 2.0 * along + 2.0 * std::arg(1.0 + vals.front()) - 2.0 * std::arg(1.0 + vals.back());
    NyquistResult res;
    res.winding_cw = to_winding(total);
    res.closed_loop_rhp = res.winding_cw + open_loop_rhp;
    return res;
}

NyquistResult nyquist_stable(const LoopFunction& loop, int open_loop_rhp, const NyquistOptions& opts) {
    const double max_step = opts.max_step_deg * std::numbers::pi / 180.0;
    auto one_plus = [&](Complex s) { return 1.0 + loop(s); };

    // Indentation to the right of the origin, from -i eps through eps to +i eps.
    const double eps = kTwoPi * opts.f_lo_hz;
    auto on_indent = [&](double theta) { return one_plus(eps * std::exp(Complex{0.0, theta})); };
    const double half_pi = std::numbers::pi / 2.0;
    double indent = 0.0;
    constexpr int kIndentSteps = 64;
    for (int k = 0; k < kIndentSteps; ++k) {
        const double t0 = -half_pi + std::numbers::pi * k / kIndentSteps;
        const double t1 = -half_pi + std::numbers::pi * (k + 1) / kIndentSteps;
        indent += arg_change(on_indent, t0, t1, max_step);
    }

    // Positive imaginary axis, a decade at a time, until |L| stays below 1/2
    // for three decades past the cap on structure.
    auto on_axis = [&](double log_w) { return one_plus(Complex{0.0, std::exp(log_w)}); };
    constexpr int kPerDecade = 200;
    const double step = std::log(10.0) / kPerDecade;
    const double span = std::log(kTwoPi * opts.f_span_hz);
    double along = 0.0;
    double lw = std::log(eps);
    int quiet_decades = 0;
    const double cap = std::log(kTwoPi * opts.f_cap_hz);
    while (quiet_decades < 3) {
        bool quiet = true;
        for (int k = 0; k < kPerDecade; ++k) {
            along += arg_change(on_axis, lw, lw + step, max_step);
            lw += step;
            if (std::abs(loop(Complex{0.0, std::exp(lw)})) >= 0.5) quiet = false;
        }
        quiet_decades = (quiet && lw >= span) ? quiet_decades + 1 : 0;
        if (lw > cap) throw ContourResolutionError("nyquist: |L| does not fall below 1/2 at high frequency");
    }
    const Complex top = one_plus(Complex{0.0, std::exp(lw)});
    const double total = 2.0 * along + indent - 2.0 * std::arg(top);

    NyquistResult res;
    res.winding_cw = to_winding(total);
    res.closed_loop_rhp = res.winding_cw + open_loop_rhp;
    return res;
}

NyquistResult nyquist_stable(const RationalTF& loop, int open_loop_rhp) {
    NyquistOptions opts;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    auto scan = [&](const Polynomial& p) {
        if (p.degree() == 0) return;
        for (const Complex& r : poly_roots(p)) {
            if (std::abs(r) > 0.0) lo = std::min(lo, std::abs(r));
            hi = std::max(hi, std::abs(r));
        }
    };
    scan(loop.num());
    scan(loop.den());
    if (std::isfinite(lo)) opts.f_lo_hz = 1e-4 * lo / kTwoPi;
    opts.f_span_hz = hi > 0.0 ? 100.0 * hi / kTwoPi : 1.0;
    return nyquist_stable([&](Complex s) { return loop.at(s); }, open_loop_rhp, opts);
}

Complex open_loop_gain(const Plant& plant, const FeedbackChain& chain, double f_hz) {
    return tf_eval(g_f(chain, plant.cavity), f_hz) / (1.0 + g_os(plant, f_hz));
}

Complex characteristic(const Plant& plant, const FeedbackChain& chain, double f_hz) {
    return 1.0 + g_os(plant, f_hz) + tf_eval(g_f(chain, plant.cavity), f_hz);
}

Polynomial characteristic_polynomial(const Plant& plant, const RationalTF& gf) {
    if (gf.has_delay()) throw DelayNotAlgebraicError("characteristic_polynomial: G_f carries a pure delay");
    const RationalTF gos = g_os_rational(plant);
    return gos.den() * gf.den() + gos.num() * gf.den() + gf.num() * gos.den();
}

int open_loop_rhp_poles(const Plant& plant, const RationalTF& gf) {
    const RationalTF gos = g_os_rational(plant);
    std::size_t n = 0;
    const Polynomial one_plus = gos.den() + gos.num();
    if (one_plus.degree() > 0) n += count_rhp_roots(poly_roots(one_plus));
    if (gf.den().degree() > 0) n += count_rhp_roots(poly_roots(gf.den()));
    return static_cast<int>(n);
}

StabilityReport margins(const Plant& plant, const FeedbackChain& chain, const FrequencyGrid& grid) {
    plant.validate();
    chain.validate();
    if (grid.size() < 2 || grid.front() > 100.0 * (1.0 + 1e-9) || grid.back() < 1e6 * (1.0 - 1e-9)) {
        throw ConfigError("margins: grid must span at least [100 Hz, 1 MHz]");
    }
    const double ppd = static_cast<double>(grid.size() - 1) / std::log10(grid.back() / grid.front());
    if (ppd < 200.0 - 1e-6) throw ConfigError("margins: grid needs at least 200 points per decade");

    const RationalTF gf = g_f(chain, plant.cavity);
    const RationalTF gos = g_os_rational(plant);
    StabilityReport r = loop_margins([&](double f) { return open_loop_gain(plant, chain, f); }, grid);
    r.open_loop_rhp_poles = open_loop_rhp_poles(plant, gf);

    if (!gf.has_delay()) {
        r.method = "poly_roots";
        r.rhp_poles_closed_loop = static_cast<int>(count_rhp_roots(poly_roots(characteristic_polynomial(plant, gf))));
    } else {
        r.method = "nyquist";
        const Polynomial one_plus = gos.den() + gos.num();
        const LoopFunction loop = [&](Complex s) { return gf.at(s) * gos.den()(s) / one_plus(s); };
        NyquistOptions opts;
        double top = 0.0;
        for (const Complex& p : poly_roots(gf.den())) top = std::max(top, std::abs(p));
        opts.f_lo_hz = 1e-3;
        opts.f_span_hz = 100.0 * top / kTwoPi;
        opts.f_cap_hz = std::max(1e12, 1e4 * top / kTwoPi);
        r.rhp_poles_closed_loop = nyquist_stable(loop, r.open_loop_rhp_poles, opts).closed_loop_rhp;
    }

    if (beyond_adiabatic(plant.cavity, grid.back())) {
        std::ostringstream os;
        os << "grid extends beyond the adiabatic limit (" << adiabatic_limit_hz(plant.cavity)
           << " Hz); optical-spring response there is extrapolated";
        r.warnings.push_back(os.str());
    }
    return r;
}

Complex laser_frequency_scan(const Plant& plant, const FeedbackChain& chain, double f_hz, double lp_over_f0) {
    const LoopBlocks b = loop_blocks(plant.cavity);
    const Complex pd = tf_eval(pd_tf(chain.pd), f_hz);
    return -lp_over_f0 * b.g_out * b.c_slope(f_hz) * pd / characteristic(plant, chain, f_hz);
}

Complex force_response(const Plant& plant, const FeedbackChain& chain, double f_hz) {
    const Complex gf = tf_eval(g_f(chain, plant.cavity), f_hz);
    return mech_susceptibility(plant.modes, f_hz) * (1.0 + gf) / characteristic(plant, chain, f_hz);
}

SuppressionReport suppression_ratio(const Plant& plant, const FeedbackChain& chain, double f_ref_hz, double f_probe_hz) {
    const OpticalSpring s = blue_spring(plant.cavity, plant.fundamental());
    if (!(f_probe_hz > 0.0 && f_probe_hz < s.f_os_hz() && s.f_os_hz() < f_ref_hz)) {
        std::ostringstream os;
        os << "suppression_ratio: need f_probe < f_os < f_ref (got " << f_probe_hz << ", " << s.f_os_hz() << ", "
           << f_ref_hz << " Hz)";
        throw ConfigError(os.str());
    }
    SuppressionReport r;
    r.f_ref_hz = f_ref_hz;
    r.f_probe_hz = f_probe_hz;
    r.ratio = std::abs(laser_frequency_scan(plant, chain, f_ref_hz, 1.0)) /
              std::abs(laser_frequency_scan(plant, chain, f_probe_hz, 1.0));
    r.eq4_value = suppression_factor(plant, f_probe_hz);
    return r;
}

}  // namespace optospring

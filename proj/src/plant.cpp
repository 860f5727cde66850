#include "optospring/plant.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "optospring/errors.hpp"

namespace optospring {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

// (32 pi P / (c lambda T)) * delta / (1 + delta^2)
double spring_constant(const CavityParams& cav) {
    const double d = cav.detuning_norm;
    return 32.0 * std::numbers::pi * cav.p_cav_w / (kSpeedOfLight * cav.wavelength_m * cav.t_total) * d / (1.0 + d * d);
}

Complex response_bracket(const CavityParams& cav, double f_hz) {
    return {1.0, -kTwoPi * f_hz * cav.response_time_s()};
}

}  // namespace

void MechanicalMode::validate() const {
    if (!positive_finite(mass_kg)) throw ConfigError("mechanical mode: mass_kg must be finite and > 0");
    if (!positive_finite(f_m_hz)) throw ConfigError("mechanical mode: f_m_hz must be finite and > 0");
    if (!positive_finite(q_factor)) throw ConfigError("mechanical mode: q_factor must be finite and > 0");
}

double CavityParams::response_time_s() const {
    return 2.0 / (gamma_rad_s * (1.0 + detuning_norm * detuning_norm));
}

void CavityParams::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("cavity: " + what); };
    if (!positive_finite(wavelength_m)) fail("wavelength_m must be finite and > 0");
    if (!std::isfinite(p_cav_w) || p_cav_w < 0.0) fail("p_cav_w must be finite and >= 0");
    if (!positive_finite(t_total) || t_total > 1.0) fail("t_total must be in (0, 1]");
    if (!positive_finite(t_in) || t_in > 1.0) fail("t_in must be in (0, 1]");
    if (!positive_finite(t_out) || t_out > 1.0) fail("t_out must be in (0, 1]");
    if (t_in + t_out > t_total * (1.0 + 1e-12)) fail("t_in + t_out must not exceed t_total");
    if (!positive_finite(gamma_rad_s)) fail("gamma_rad_s must be finite and > 0");
    if (!std::isfinite(detuning_norm) || std::abs(detuning_norm) >= 10.0) fail("|detuning_norm| must be < 10");
    if (!positive_finite(length_m)) fail("length_m must be finite and > 0");
}

const MechanicalMode& Plant::fundamental() const {
    if (modes.empty()) throw ConfigError("plant: at least one mechanical mode is required");
    return modes.front();
}

void Plant::validate() const {
    if (modes.empty()) throw ConfigError("plant: at least one mechanical mode is required");
    for (const auto& m : modes) m.validate();
    cavity.validate();
}

double OpticalSpring::f_os_hz() const { return omega_os_sq > 0.0 ? std::sqrt(omega_os_sq) / kTwoPi : 0.0; }

Complex LoopBlocks::c_slope(double f_hz) const { return c_dc_w_per_m * Complex{1.0, -kTwoPi * f_hz * response_time_s}; }

Complex mech_susceptibility(std::span<const MechanicalMode> modes, double f_hz) {
    if (modes.empty()) throw ConfigError("mech_susceptibility: mode list is empty");
    if (!(f_hz > 0.0)) throw ConfigError("mech_susceptibility: frequency must be > 0 Hz");
    const double w = kTwoPi * f_hz;
    Complex chi = 0.0;
    for (const auto& m : modes) {
        const double wm = m.omega_m();
        chi += 1.0 / (m.mass_kg * Complex{wm * wm - w * w, w * m.gamma_m()});
    }
    return chi;
}

OpticalSpring optical_spring_params(const CavityParams& cav, const MechanicalMode& mode) {
    OpticalSpring s;
    s.k0_n_per_m = spring_constant(cav);
    s.omega_os_sq = s.k0_n_per_m / mode.mass_kg;
    s.gamma_os_rad_s = s.omega_os_sq * cav.response_time_s();
    return s;
}

OpticalSpring blue_spring(const CavityParams& cav, const MechanicalMode& mode) {
    OpticalSpring s = optical_spring_params(cav, mode);
    if (!s.is_blue()) {
        std::ostringstream os;
        os << "optical spring constant K0 = " << s.k0_n_per_m
           << " N/m is not positive; spring frequency undefined (detuning_norm = " << cav.detuning_norm << ")";
        throw RedDetunedError(os.str());
    }
    return s;
}

Complex g_os(const Plant& plant, double f_hz) {
    const OpticalSpring s = optical_spring_params(plant.cavity, plant.fundamental());
    return mech_susceptibility(plant.modes, f_hz) * s.k0_n_per_m * response_bracket(plant.cavity, f_hz);
}

Complex g_os_form(const CavityParams& cav, const MechanicalMode& mode, double f_hz, GosForm form) {
    const MechanicalMode one[] = {mode};
    const Complex chi = mech_susceptibility(one, f_hz);
    const OpticalSpring s = optical_spring_params(cav, mode);
    const double w = kTwoPi * f_hz;
    switch (form) {
        case GosForm::PowerAndDetuning: {
            const double d = cav.detuning_norm;
            const double pre = 32.0 * std::numbers::pi * cav.p_cav_w / (kSpeedOfLight * cav.wavelength_m * cav.t_total);
            return pre * chi * (d / (1.0 + d * d)) *
                   Complex{1.0, -2.0 * w / (cav.gamma_rad_s * (1.0 + d * d))};
        }
        case GosForm::SpringConstant:
            return chi * s.k0_n_per_m * response_bracket(cav, f_hz);
        case GosForm::SpringFrequency:
            return mode.mass_kg * chi * Complex{s.omega_os_sq, -s.gamma_os_rad_s * w};
        case GosForm::Normalized: {
            const double wm = mode.omega_m();
            return Complex{s.omega_os_sq, -s.gamma_os_rad_s * w} / Complex{wm * wm - w * w, w * mode.gamma_m()};
        }
    }
    return {};
}

RationalTF g_os_rational(const Plant& plant) {
    const MechanicalMode& m0 = plant.fundamental();
    const OpticalSpring s = optical_spring_params(plant.cavity, m0);
    RationalTF total;
    bool first = true;
    for (const auto& m : plant.modes) {
        const double r = m0.mass_kg / m.mass_kg;
        const double wm = m.omega_m();
        RationalTF term{Polynomial{s.omega_os_sq * r, -s.gamma_os_rad_s * r}, Polynomial{wm * wm, m.gamma_m(), 1.0}};
        total = first ? term : tf_parallel(total, term);
        first = false;
    }
    return total;
}

Complex chi_os(const Plant& plant, double f_hz) {
    return mech_susceptibility(plant.modes, f_hz) / (1.0 + g_os(plant, f_hz));
}

Complex chi_os_approx(const Plant& plant, double f_hz) {
    const MechanicalMode& m0 = plant.fundamental();
    const OpticalSpring s = optical_spring_params(plant.cavity, m0);
    const double w = kTwoPi * f_hz;
    return (1.0 / m0.mass_kg) / Complex{s.omega_os_sq - w * w, -s.gamma_os_rad_s * w};
}

double suppression_factor(const Plant& plant, double f_hz) {
    const MechanicalMode& m0 = plant.fundamental();
    const OpticalSpring s = optical_spring_params(plant.cavity, m0);
    const double w = kTwoPi * f_hz;
    const double wm = m0.omega_m();
    return std::abs(s.omega_os_sq / Complex{wm * wm - w * w, w * m0.gamma_m()});
}

RationalTF g_cl(const Plant& plant) { return tf_feedback(g_os_rational(plant)); }

Complex cavity_slope(const CavityParams& cav, double f_hz) { return loop_blocks(cav).c_slope(f_hz); }

LoopBlocks loop_blocks(const CavityParams& cav) {
    const double d = cav.detuning_norm;
    LoopBlocks b;
    b.c_dc_w_per_m = -16.0 * std::numbers::pi * cav.p_cav_w / (cav.wavelength_m * cav.t_total) * d / (1.0 + d * d);
    b.response_time_s = cav.response_time_s();
    b.g_in = 4.0 * cav.t_in / (cav.t_total * cav.t_total) / (1.0 + d * d);
    b.g_out = cav.t_out;
    return b;
}

bool beyond_adiabatic(const CavityParams& cav, double f_hz) { return kTwoPi * f_hz > cav.gamma_rad_s / 3.0; }

double adiabatic_limit_hz(const CavityParams& cav) { return cav.gamma_rad_s / 3.0 / kTwoPi; }

CavityParams calibrate_t_total(const CavityParams& cav, const MechanicalMode& mode, double target_f_os_hz) {
    mode.validate();
    if (!positive_finite(target_f_os_hz)) throw CalibrationError("calibrate_t_total: target frequency must be > 0");
    if (!positive_finite(cav.t_total)) throw CalibrationError("calibrate_t_total: template t_total must be > 0");

    auto f_os_at = [&](double t) {
        CavityParams c = cav;
        c.t_total = t;
        return optical_spring_params(c, mode).f_os_hz();
    };
    constexpr double t_lo = 1e-6;
    constexpr double t_hi = 1.0;
    const double f_max = f_os_at(t_lo);
    const double f_min = f_os_at(t_hi);
    if (!(target_f_os_hz <= f_max && target_f_os_hz >= f_min) || f_max == 0.0) {
        std::ostringstream os;
        os << "calibrate_t_total: target " << target_f_os_hz << " Hz unreachable; t_total in [" << t_lo << ", " << t_hi
           << "] spans f_os in [" << f_min << ", " << f_max << "] Hz";
        throw CalibrationError(os.str());
    }

    // f_os decreases monotonically with t_total.
    double lo = std::log(t_lo);
    double hi = std::log(t_hi);
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f_os_at(std::exp(mid)) > target_f_os_hz) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    CavityParams out = cav;
    out.t_total = std::exp(0.5 * (lo + hi));
    const double scale = out.t_total / cav.t_total;
    out.t_in = cav.t_in * scale;
    out.t_out = cav.t_out * scale;
    return out;
}

CavityParams calibrate_linewidth(const CavityParams& cav, const MechanicalMode& mode, double target_gamma_os_rad_s) {
    if (!positive_finite(target_gamma_os_rad_s)) {
        throw CalibrationError("calibrate_linewidth: target Gamma_os must be > 0");
    }
    const OpticalSpring s = optical_spring_params(cav, mode);
    if (!s.is_blue()) throw CalibrationError("calibrate_linewidth: spring is not blue detuned");
    const double d = cav.detuning_norm;
    CavityParams out = cav;
    out.gamma_rad_s = 2.0 * s.omega_os_sq / (target_gamma_os_rad_s * (1.0 + d * d));
    return out;
}

}  // namespace optospring

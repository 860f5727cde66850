#pragma once

#include <span>
#include <vector>

#include "optospring/transfer_function.hpp"

namespace optospring {

constexpr double kSpeedOfLight = 299792458.0;

/// One mechanical resonance.
struct MechanicalMode {
    double mass_kg = 0.0;
    double f_m_hz = 0.0;
    double q_factor = 0.0;

    [[nodiscard]] double omega_m() const { return kTwoPi * f_m_hz; }
    /// Energy damping rate Omega_m / Q_m in rad/s.
    [[nodiscard]] double gamma_m() const { return omega_m() / q_factor; }
    void validate() const;
};

/// Optical cavity and coupling constants.
///
/// `t_total` is the total fractional power loss per round trip (mirror
/// transmissions plus scatter and absorption); `t_in`/`t_out` are the input
/// and output mirror transmissions. `gamma_rad_s` is the optical HWHM and
/// `detuning_norm` the detuning in units of it. Positive detuning stiffens.
struct CavityParams {
    double wavelength_m = 0.0;
    double p_cav_w = 0.0;
    double t_total = 0.0;
    double t_in = 0.0;
    double t_out = 0.0;
    double gamma_rad_s = 0.0;
    double detuning_norm = 0.0;
    double length_m = 0.0;

    /// 2 / (gamma (1 + delta^2)): first-order response time of the intracavity power.
    [[nodiscard]] double response_time_s() const;
    void validate() const;
};

struct Plant {
    std::vector<MechanicalMode> modes;  // front() is the fundamental
    CavityParams cavity;

    [[nodiscard]] const MechanicalMode& fundamental() const;
    void validate() const;
};

/// K0 = m Omega_os^2 and Gamma_os = 2 Omega_os^2 / (gamma (1 + delta^2)).
/// For red detuning K0 < 0 and `omega_os_sq` is negative; f_os_hz() is then 0.
struct OpticalSpring {
    double k0_n_per_m = 0.0;
    double omega_os_sq = 0.0;
    double gamma_os_rad_s = 0.0;

    [[nodiscard]] bool is_blue() const { return k0_n_per_m > 0.0; }
    [[nodiscard]] double f_os_hz() const;
};

/// Blocks of the radiation-pressure loop: displacement -> intracavity
/// power (C) -> force (2/c) -> displacement (chi_m), and the power
/// couplings bracketing the electronic feedback.
struct LoopBlocks {
    double c_dc_w_per_m = 0.0;   // C at zero frequency
    double response_time_s = 0.0;
    double g_in = 0.0;           // input power -> intracavity power
    double g_out = 0.0;          // intracavity power -> transmitted power
    double rp_coupling_n_per_w = 2.0 / kSpeedOfLight;

    [[nodiscard]] Complex c_slope(double f_hz) const;
};

/// Sum over modes of 1/(m (Omega_m^2 - Omega^2 + i Omega Gamma_m)), m/N.
Complex mech_susceptibility(std::span<const MechanicalMode> modes, double f_hz);

OpticalSpring optical_spring_params(const CavityParams& cav, const MechanicalMode& mode);
/// As optical_spring_params, but throws RedDetunedError unless K0 > 0.
OpticalSpring blue_spring(const CavityParams& cav, const MechanicalMode& mode);

/// Open-loop gain of the optical spring in the 1/(1+G) convention.
Complex g_os(const Plant& plant, double f_hz);

/// The four algebraically equivalent ways of writing the single-mode
/// optical-spring gain. Kept separate so they can be checked against each other.
enum class GosForm { PowerAndDetuning, SpringConstant, SpringFrequency, Normalized };
Complex g_os_form(const CavityParams& cav, const MechanicalMode& mode, double f_hz, GosForm form);

/// G_os as a rational function of s. Multiple modes are combined over a
/// common denominator.
RationalTF g_os_rational(const Plant& plant);

/// chi_m / (1 + G_os)
Complex chi_os(const Plant& plant, double f_hz);
/// (1/m) / (Omega_os^2 - Omega^2 - i Gamma_os Omega), valid for Omega_os >> Omega_m.
Complex chi_os_approx(const Plant& plant, double f_hz);

/// |Omega_os^2 / (Omega_m^2 - Omega^2 + i Omega Gamma_m)|
double suppression_factor(const Plant& plant, double f_hz);

/// 1 / (1 + G_os) with denominator s^2 + (Gamma_m - Gamma_os) s + Omega_m^2 + Omega_os^2.
RationalTF g_cl(const Plant& plant);

/// Intracavity power change per unit displacement, W/m.
Complex cavity_slope(const CavityParams& cav, double f_hz);
LoopBlocks loop_blocks(const CavityParams& cav);

/// True where 2 pi f > gamma / 3, i.e. outside the adiabatic regime the
/// first-order cavity response assumes.
bool beyond_adiabatic(const CavityParams& cav, double f_hz);
double adiabatic_limit_hz(const CavityParams& cav);

/// Solve t_total (bisection on log T in (1e-6, 1)) so the spring frequency
/// hits the target. t_in and t_out keep their ratio to t_total.
CavityParams calibrate_t_total(const CavityParams& cav, const MechanicalMode& mode, double target_f_os_hz);

/// Solve gamma_rad_s so that Gamma_os equals the target (closed form).
CavityParams calibrate_linewidth(const CavityParams& cav, const MechanicalMode& mode, double target_gamma_os_rad_s);

}  // namespace optospring

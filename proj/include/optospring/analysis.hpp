#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "optospring/plant.hpp"
#include "optospring/servo_chain.hpp"
#include "optospring/transfer_function.hpp"

namespace optospring {

/// Frequency response evaluated at a frequency in Hz.
using LoopResponse = std::function<Complex(double f_hz)>;
/// Loop evaluated at a complex Laplace variable (rad/s).
using LoopFunction = std::function<Complex(Complex s)>;

struct UnityCrossing {
    double f_hz = 0.0;
    double phase_deg = 0.0;
    double phase_margin_deg = 0.0;  // 180 - |phase|
};

struct PhaseCrossover {
    double f_hz = 0.0;
    double magnitude = 0.0;
    double gain_margin_db = 0.0;  // -20 log10 |L|
};

struct StabilityReport {
    std::vector<UnityCrossing> crossings;
    std::vector<PhaseCrossover> phase_crossovers;
    /// Smallest positive gain margin among the -180 degree crossings; absent if none.
    std::optional<double> gain_margin_db;
    std::optional<double> gain_margin_freq_hz;
    int open_loop_rhp_poles = 0;
    int rhp_poles_closed_loop = 0;
    /// "poly_roots" for delay-free loops, "nyquist" otherwise.
    std::string method;
    std::vector<std::string> warnings;

    [[nodiscard]] bool stable() const { return rhp_poles_closed_loop == 0; }
    [[nodiscard]] std::vector<double> phase_margins_deg() const;
};

/// Unity-gain crossings and phase crossovers of an arbitrary loop, seeded on
/// `grid` and refined by bisection. Does not judge closed-loop stability.
StabilityReport loop_margins(const LoopResponse& loop, const FrequencyGrid& grid);

struct NyquistResult {
    int winding_cw = 0;  // clockwise encirclements of the origin by 1 + L
    int closed_loop_rhp = 0;
    [[nodiscard]] bool stable() const { return closed_loop_rhp == 0; }
};

/// Sampled contour on positive frequencies. |L| must be below 1 at both ends
/// of the grid and successive phase steps of 1 + L below 90 degrees;
/// otherwise ContourResolutionError.
NyquistResult nyquist_stable(const ComplexResponse& loop, int open_loop_rhp);

struct NyquistOptions {
    double f_lo_hz = 1e-3;    // radius of the indentation around s = 0
    double max_step_deg = 15.0;
    double f_span_hz = 1e9;   // sample at least up to here before looking for the quiet tail
    double f_cap_hz = 1e12;
};

/// Full contour for a loop evaluated in the s-plane, sampled adaptively.
NyquistResult nyquist_stable(const LoopFunction& loop, int open_loop_rhp, const NyquistOptions& opts = {});
NyquistResult nyquist_stable(const RationalTF& loop, int open_loop_rhp);

/// G_f / (1 + G_os), the loop seen by a signal injected before H.
Complex open_loop_gain(const Plant& plant, const FeedbackChain& chain, double f_hz);
/// 1 + G_os + G_f, shared by the laser-scan and force responses.
Complex characteristic(const Plant& plant, const FeedbackChain& chain, double f_hz);

/// Numerator of 1 + G_os + G_f over a common denominator. Delay-free chains only.
Polynomial characteristic_polynomial(const Plant& plant, const RationalTF& gf);
/// Open-loop RHP poles of G_f / (1 + G_os): zeros of 1 + G_os plus poles of G_f.
int open_loop_rhp_poles(const Plant& plant, const RationalTF& gf);

StabilityReport margins(const Plant& plant, const FeedbackChain& chain, const FrequencyGrid& grid);

/// -(lp_over_f0) * G_out * C * PD / (1 + G_f + G_os)
Complex laser_frequency_scan(const Plant& plant, const FeedbackChain& chain, double f_hz, double lp_over_f0);
/// chi_m (1 + G_f) / (1 + G_os + G_f), m/N.
Complex force_response(const Plant& plant, const FeedbackChain& chain, double f_hz);

struct SuppressionReport {
    double f_ref_hz = 100e3;
    double f_probe_hz = 500.0;
    double ratio = 0.0;
    /// |Omega_os^2 / (Omega_m^2 - Omega^2 + i Omega Gamma_m)| at f_probe.
    double eq4_value = 0.0;
};

SuppressionReport suppression_ratio(const Plant& plant, const FeedbackChain& chain, double f_ref_hz = 100e3,
                                    double f_probe_hz = 500.0);

}  // namespace optospring

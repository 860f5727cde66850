#pragma once

#include <vector>

#include "optospring/plant.hpp"
#include "optospring/transfer_function.hpp"

namespace optospring {

struct HighPassFilter {
    double corner_hz = 800.0;
    int order = 1;
};

/// Gain-limited P-I realized as a lag network:
/// K (s + w_pi) / (s + w_pi / 10^(L/20)).
struct PIController {
    double prop_gain = 1.0;
    double pi_corner_hz = 100e3;
    double lf_gain_limit_db = 20.0;
};

struct AmplitudeModulator {
    double gain_w_per_v = 1.0;
    double bandwidth_hz = 1e6;
    double delay_s = 0.0;
};

struct Photodetector {
    double responsivity_v_per_w = 1.0;
    double bandwidth_hz = 10e6;
};

/// PD -> H (HPF, P-I) -> AM, the electronic part of G_f.
struct FeedbackChain {
    Photodetector pd;
    HighPassFilter hpf;
    PIController servo;
    AmplitudeModulator am;

    void validate() const;
};

RationalTF hpf_tf(const HighPassFilter& h);
RationalTF pi_tf(const PIController& p);
RationalTF pd_tf(const Photodetector& pd);
/// Single pole plus pure delay.
RationalTF am_tf(const AmplitudeModulator& am);

/// PD * HPF * PI * AM, without the cavity brackets.
RationalTF electronics_tf(const FeedbackChain& chain);

/// G_out * PD * H * beta * G_in
RationalTF g_f(const FeedbackChain& chain, const CavityParams& cav);

struct GfAnchor {
    double f_hz = 75e3;
    double magnitude = 0.53;
    double phase_deg = -80.0;
};

/// Fit the loop-gain scale (prop_gain) to the magnitude anchor and the AM
/// delay to the phase anchor. Only the first anchor is solved for; any further
/// anchors are checked against the result (1 % magnitude, 1 degree phase).
/// Throws CalibrationError if the phase anchor needs a negative delay.
FeedbackChain calibrate_chain(const FeedbackChain& chain, const CavityParams& cav, const std::vector<GfAnchor>& anchors);

}  // namespace optospring

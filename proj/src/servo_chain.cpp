#include "optospring/servo_chain.hpp"

#include <cmath>
#include <sstream>

#include "optospring/errors.hpp"

namespace optospring {

namespace {

RationalTF single_pole(double gain, double bandwidth_hz) {
    const double wp = kTwoPi * bandwidth_hz;
    return {Polynomial{gain}, Polynomial{1.0, 1.0 / wp}};
}

double wrap_deg(double d) {
    d = std::fmod(d + 180.0, 360.0);
    if (d < 0.0) d += 360.0;
    return d - 180.0;
}

}  // namespace

void FeedbackChain::validate() const {
    auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!pos(pd.responsivity_v_per_w) || !pos(pd.bandwidth_hz)) throw ConfigError("chain.pd: responsivity and bandwidth must be > 0");
    if (!pos(hpf.corner_hz) || hpf.order < 1) throw ConfigError("chain.hpf: corner_hz must be > 0 and order >= 1");
    if (!pos(servo.prop_gain) || !pos(servo.pi_corner_hz)) throw ConfigError("chain.servo: prop_gain and pi_corner_hz must be > 0");
    if (!std::isfinite(servo.lf_gain_limit_db) || servo.lf_gain_limit_db < 0.0) throw ConfigError("chain.servo: lf_gain_limit_db must be >= 0");
    if (!std::isfinite(am.gain_w_per_v) || am.gain_w_per_v == 0.0 || !pos(am.bandwidth_hz)) throw ConfigError("chain.am: gain must be nonzero and bandwidth > 0");
    if (!std::isfinite(am.delay_s) || am.delay_s < 0.0) throw ConfigError("chain.am: delay_s must be >= 0");
}

RationalTF hpf_tf(const HighPassFilter& h) {
    const double wc = kTwoPi * h.corner_hz;
    RationalTF one{Polynomial{0.0, 1.0}, Polynomial{wc, 1.0}};
    RationalTF out = one;
    for (int i = 1; i < h.order; ++i) out = tf_series(out, one);
    return out;
}

RationalTF pi_tf(const PIController& p) {
    const double w = kTwoPi * p.pi_corner_hz;
    const double limit = std::pow(10.0, p.lf_gain_limit_db / 20.0);
    return {Polynomial{p.prop_gain * w, p.prop_gain}, Polynomial{w / limit, 1.0}};
}

RationalTF pd_tf(const Photodetector& pd) { return single_pole(pd.responsivity_v_per_w, pd.bandwidth_hz); }

RationalTF am_tf(const AmplitudeModulator& am) {
    const RationalTF p = single_pole(am.gain_w_per_v, am.bandwidth_hz);
    return {p.num(), p.den(), am.delay_s};
}

RationalTF electronics_tf(const FeedbackChain& chain) {
    return tf_series(tf_series(tf_series(pd_tf(chain.pd), hpf_tf(chain.hpf)), pi_tf(chain.servo)), am_tf(chain.am));
}

RationalTF g_f(const FeedbackChain& chain, const CavityParams& cav) {
    const LoopBlocks b = loop_blocks(cav);
    return tf_scale(electronics_tf(chain), b.g_out * b.g_in);
}

FeedbackChain calibrate_chain(const FeedbackChain& chain, const CavityParams& cav, const std::vector<GfAnchor>& anchors) {
    if (anchors.empty()) throw ConfigError("calibrate_chain: no anchors given");
    chain.validate();
    const GfAnchor& a = anchors.front();
    if (!(a.f_hz > 0.0) || !(a.magnitude > 0.0)) throw CalibrationError("calibrate_chain: anchor needs f_hz > 0 and magnitude > 0");

    FeedbackChain out = chain;
    out.am.delay_s = 0.0;
    const Complex bare = tf_eval(g_f(out, cav), a.f_hz);

    // Extra lag required beyond the delay-free chain, in degrees.
    const double lag = wrap_deg(phase_deg(bare) - a.phase_deg);
    if (lag < -1e-9) {
        std::ostringstream os;
        os << "calibrate_chain: anchor phase " << a.phase_deg << " deg at " << a.f_hz
           << " Hz leads the delay-free chain (" << phase_deg(bare) << " deg); a negative delay would be required";
        throw CalibrationError(os.str());
    }
    out.am.delay_s = std::max(lag, 0.0) / (360.0 * a.f_hz);
    out.servo.prop_gain = chain.servo.prop_gain * a.magnitude / std::abs(bare);

    const RationalTF gf = g_f(out, cav);
    for (const GfAnchor& check : anchors) {
        const Complex v = tf_eval(gf, check.f_hz);
        const double mag_err = std::abs(std::abs(v) / check.magnitude - 1.0);
        const double ph_err = std::abs(wrap_deg(phase_deg(v) - check.phase_deg));
        if (mag_err > 0.01 || ph_err > 1.0) {
            std::ostringstream os;
            os << "calibrate_chain: anchor at " << check.f_hz << " Hz misfit by " << mag_err * 100.0 << " % / " << ph_err
               << " deg";
            throw CalibrationError(os.str());
        }
    }
    return out;
}

}  // namespace optospring

#include "optospring/time_domain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "optospring/errors.hpp"
#include "optospring/format.hpp"

namespace optospring {

Complex StateSpace::response(double f_hz) const {
    const Eigen::Index n = a.rows();
    if (n == 0) return d;
    const Complex s{0.0, kTwoPi * f_hz};
    Eigen::MatrixXcd m = -a.cast<Complex>();
    m.diagonal().array() += s;
    const Eigen::VectorXcd x = m.partialPivLu().solve(b.cast<Complex>());
    return (c.cast<Complex>() * x)(0) + d;
}

StateSpace realize(const RationalTF& tf, const std::string& label) {
    if (tf.has_delay()) throw DelayNotAlgebraicError("realize: convert the pure delay with pade() first");
    if (!tf.is_proper()) throw ImproperSystemError("realize: numerator degree exceeds denominator degree");
    const Polynomial& den = tf.den();
    const std::size_t n = den.degree();
    const double lead = den.leading();

    StateSpace ss;
    ss.d = tf.num()[n] / lead;
    ss.a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    ss.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    ss.c = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        if (i + 1 < n) ss.a(k, k + 1) = 1.0;
        ss.a(static_cast<Eigen::Index>(n - 1), k) = -den[i] / lead;
        ss.c(k) = tf.num()[i] / lead - den[i] / lead * ss.d;
        ss.state_labels.push_back(label + "_" + std::to_string(i));
    }
    if (n > 0) ss.b(static_cast<Eigen::Index>(n - 1)) = 1.0;
    return ss;
}

StateSpace series(const StateSpace& first, const StateSpace& second) {
    const Eigen::Index n1 = first.a.rows();
    const Eigen::Index n2 = second.a.rows();
    StateSpace out;
    out.a = Eigen::MatrixXd::Zero(n1 + n2, n1 + n2);
    out.a.topLeftCorner(n1, n1) = first.a;
    out.a.bottomRightCorner(n2, n2) = second.a;
    out.a.bottomLeftCorner(n2, n1) = second.b * first.c;
    out.b = Eigen::VectorXd(n1 + n2);
    out.b << first.b, second.b * first.d;
    out.c = Eigen::RowVectorXd(n1 + n2);
    out.c << second.d * first.c, second.c;
    out.d = second.d * first.d;
    out.state_labels = first.state_labels;
    out.state_labels.insert(out.state_labels.end(), second.state_labels.begin(), second.state_labels.end());
    return out;
}

LoopStateSpace loop_state_space(const Plant& plant, const FeedbackChain& chain, bool feedback_on, int pade_order) {
    plant.validate();
    const LoopBlocks blocks = loop_blocks(plant.cavity);
    const double tau = blocks.response_time_s;
    const double c0 = blocks.c_dc_w_per_m;

    StateSpace elec;
    if (feedback_on) {
        chain.validate();
        FeedbackChain no_delay = chain;
        no_delay.am.delay_s = 0.0;
        elec = series(realize(pd_tf(chain.pd), "pd"), realize(hpf_tf(chain.hpf), "hpf"));
        elec = series(elec, realize(pi_tf(chain.servo), "pi"));
        elec = series(elec, realize(am_tf(no_delay.am), "am"));
        if (chain.am.delay_s > 0.0) elec = series(elec, realize(pade(chain.am.delay_s, pade_order), "pade"));
    }

    const auto modes = static_cast<Eigen::Index>(plant.modes.size());
    const Eigen::Index ne = elec.a.rows();
    const Eigen::Index n = 2 * modes + ne;

    LoopStateSpace sys;
    sys.a = Eigen::MatrixXd::Zero(n, n);
    sys.b_force = Eigen::VectorXd::Zero(n);
    sys.b_length = Eigen::VectorXd::Zero(n);
    sys.x_row = Eigen::RowVectorXd::Zero(n);
    Eigen::RowVectorXd v_row = Eigen::RowVectorXd::Zero(n);
    for (Eigen::Index i = 0; i < modes; ++i) {
        sys.x_row(2 * i) = 1.0;
        v_row(2 * i + 1) = 1.0;
        sys.state_labels.push_back("x_" + std::to_string(i));
        sys.state_labels.push_back("v_" + std::to_string(i));
    }
    sys.state_labels.insert(sys.state_labels.end(), elec.state_labels.begin(), elec.state_labels.end());

    // P = k [c0 (x - tau v) - G_in C_e z] + k c0 xi,  xi = x_ext - tau dx_ext/dt
    // u = -(C_e z + D_e G_out P)
    const double de = feedback_on ? elec.d : 0.0;
    const double k = 1.0 / (1.0 + blocks.g_in * de * blocks.g_out);
    sys.power_row = k * c0 * (sys.x_row - tau * v_row);
    if (ne > 0) sys.power_row.tail(ne) = -k * blocks.g_in * elec.c;
    sys.power_length_gain = k * c0;

    sys.drive_row = Eigen::RowVectorXd::Zero(n);
    if (ne > 0) sys.drive_row.tail(ne) = -elec.c;
    sys.drive_row -= de * blocks.g_out * sys.power_row;
    sys.drive_length_gain = -de * blocks.g_out * sys.power_length_gain;

    for (Eigen::Index i = 0; i < modes; ++i) {
        const MechanicalMode& m = plant.modes[static_cast<std::size_t>(i)];
        const double wm = m.omega_m();
        sys.a(2 * i, 2 * i + 1) = 1.0;
        sys.a(2 * i + 1, 2 * i) = -wm * wm;
        sys.a(2 * i + 1, 2 * i + 1) = -m.gamma_m();
        // F = (2/c) P + F_ext
        sys.a.row(2 * i + 1) += blocks.rp_coupling_n_per_w / m.mass_kg * sys.power_row;
        sys.b_force(2 * i + 1) = 1.0 / m.mass_kg;
        sys.b_length(2 * i + 1) = blocks.rp_coupling_n_per_w / m.mass_kg * sys.power_length_gain;
    }
    if (ne > 0) {
        const Eigen::Index o = 2 * modes;
        sys.a.block(o, o, ne, ne) += elec.a;
        sys.a.middleRows(o, ne) += blocks.g_out * elec.b * sys.power_row;
        sys.b_length.segment(o, ne) = blocks.g_out * sys.power_length_gain * elec.b;
    }
    return sys;
}

namespace {

struct Drive {
    double force = 0.0;
    double length = 0.0;  // x_ext - tau * dx_ext/dt
};

Drive drive_at(const Injection& inj, double tau, double t) {
    const double w = kTwoPi * inj.f_hz;
    switch (inj.kind) {
        case InjectionKind::None:
            return {};
        case InjectionKind::ForceStep:
            return {inj.amplitude, 0.0};
        case InjectionKind::ForceSine:
            return {inj.amplitude * std::sin(w * t), 0.0};
        case InjectionKind::FreqNoiseSine:
            return {0.0, inj.amplitude * (std::sin(w * t) - tau * w * std::cos(w * t))};
    }
    return {};
}

}  // namespace

SimulationTrace simulate(const Plant& plant, const FeedbackChain& chain, const SimConfig& cfg) {
    if (!(cfg.dt_s > 0.0) || !(cfg.duration_s > 0.0)) throw ConfigError("simulate: dt_s and duration_s must be > 0");
    if (cfg.pade_order < 1) throw ConfigError("simulate: pade_order must be >= 1");
    if (cfg.record_stride < 1) throw ConfigError("simulate: record_stride must be >= 1");
    const bool sine = cfg.injection.kind == InjectionKind::ForceSine || cfg.injection.kind == InjectionKind::FreqNoiseSine;
    if (sine && !(cfg.injection.f_hz > 0.0)) throw ConfigError("simulate: sine injection needs f_hz > 0");

    const LoopStateSpace sys = loop_state_space(plant, chain, cfg.feedback_on, cfg.pade_order);
    const double tau = plant.cavity.response_time_s();

    double f_max = sine ? cfg.injection.f_hz : 0.0;
    if (sys.a.rows() > 0) {
        const Eigen::VectorXcd ev = sys.a.eigenvalues();
        for (Eigen::Index i = 0; i < ev.size(); ++i) f_max = std::max(f_max, std::abs(ev(i)) / kTwoPi);
    }
    if (f_max > 0.0 && cfg.dt_s > (1.0 + 1e-9) / (20.0 * f_max)) {
        std::ostringstream os;
        os << "simulate: dt_s = " << cfg.dt_s << " exceeds 1/(20 f_max) = " << 1.0 / (20.0 * f_max)
           << " s (f_max = " << f_max << " Hz)";
        throw ConfigError(os.str());
    }

    // Divergence threshold on displacement, relative to the initial excitation scale.
    const MechanicalMode& m0 = plant.fundamental();
    double scale = std::abs(cfg.initial_displacement_m);
    if (cfg.injection.kind == InjectionKind::ForceStep || cfg.injection.kind == InjectionKind::ForceSine) {
        scale = std::max(scale, std::abs(cfg.injection.amplitude) / (m0.mass_kg * m0.omega_m() * m0.omega_m()));
    } else if (cfg.injection.kind == InjectionKind::FreqNoiseSine) {
        scale = std::max(scale, std::abs(cfg.injection.amplitude));
    }
    const double limit = 1e6 * scale;

    const auto steps = static_cast<std::size_t>(std::llround(cfg.duration_s / cfg.dt_s));
    Eigen::VectorXd q = Eigen::VectorXd::Zero(sys.a.rows());
    for (std::size_t i = 0; i < plant.modes.size(); ++i) {
        // Initial displacement shared in proportion to static compliance.
        double total = 0.0;
        for (const auto& m : plant.modes) total += 1.0 / (m.mass_kg * m.omega_m() * m.omega_m());
        const auto& m = plant.modes[i];
        q(static_cast<Eigen::Index>(2 * i)) =
            cfg.initial_displacement_m / (m.mass_kg * m.omega_m() * m.omega_m()) / total;
    }

    SimulationTrace tr;
    tr.pade_order = (cfg.feedback_on && chain.am.delay_s > 0.0) ? cfg.pade_order : 0;
    tr.dt_s = cfg.dt_s;
    const std::size_t expected = steps / cfg.record_stride + 1;
    tr.time_s.reserve(expected);
    tr.displacement_m.reserve(expected);
    tr.cavity_power_w.reserve(expected);
    tr.actuator_drive_w.reserve(expected);

    auto deriv = [&](const Eigen::VectorXd& state, double t) {
        const Drive d = drive_at(cfg.injection, tau, t);
        Eigen::VectorXd out = sys.a * state;
        if (d.force != 0.0) out += d.force * sys.b_force;
        if (d.length != 0.0) out += d.length * sys.b_length;
        return out;
    };
    auto record = [&](double t) {
        const Drive d = drive_at(cfg.injection, tau, t);
        const double x = sys.x_row.dot(q);
        tr.time_s.push_back(t);
        tr.displacement_m.push_back(x);
        tr.cavity_power_w.push_back(sys.power_row.dot(q) + sys.power_length_gain * d.length);
        tr.actuator_drive_w.push_back(sys.drive_row.dot(q) + sys.drive_length_gain * d.length);
        return x;
    };

    record(0.0);
    const double h = cfg.dt_s;
    for (std::size_t step = 1; step <= steps; ++step) {
        const double t = static_cast<double>(step - 1) * h;
        const Eigen::VectorXd k1 = deriv(q, t);
        const Eigen::VectorXd k2 = deriv(q + 0.5 * h * k1, t + 0.5 * h);
        const Eigen::VectorXd k3 = deriv(q + 0.5 * h * k2, t + 0.5 * h);
        const Eigen::VectorXd k4 = deriv(q + h * k3, t + h);
        q += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        const double x = sys.x_row.dot(q);
        const bool diverged = scale > 0.0 && (!std::isfinite(x) || std::abs(x) > limit);
        if (step % cfg.record_stride == 0 || diverged) record(static_cast<double>(step) * h);
        if (diverged) {
            tr.divergence_index = tr.size() - 1;
            break;
        }
    }
    return tr;
}

namespace {

struct Peak {
    double t;
    double y;
};

std::vector<Peak> positive_peaks(const std::vector<double>& t, const std::vector<double>& y, std::size_t begin,
                                 std::size_t end, double offset) {
    std::vector<Peak> peaks;
    for (std::size_t i = std::max<std::size_t>(begin, 1); i + 1 < end; ++i) {
        const double a = y[i - 1] - offset;
        const double b = y[i] - offset;
        const double c = y[i + 1] - offset;
        if (b > 0.0 && b > a && b >= c) {
            const double den = a - 2.0 * b + c;
            const double delta = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
            const double dt = t[i + 1] - t[i];
            peaks.push_back({t[i] + delta * dt, b - 0.25 * (a - c) * delta});
        }
    }
    return peaks;
}

}  // namespace

double growth_rate(const SimulationTrace& trace) {
    const std::size_t end = trace.divergence_index ? *trace.divergence_index : trace.size();
    const auto peaks = positive_peaks(trace.time_s, trace.displacement_m, 0, end, 0.0);
    if (peaks.size() < 4) throw InsufficientDataError("growth_rate: fewer than four peaks in the trace");
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    for (const auto& p : peaks) {
        const double ly = std::log(p.y);
        st += p.t;
        sy += ly;
        stt += p.t * p.t;
        sty += p.t * ly;
    }
    const double n = static_cast<double>(peaks.size());
    return (n * sty - st * sy) / (n * stt - st * st);
}

double ring_frequency(const SimulationTrace& trace, double t_start_s) {
    // Prony fit: min-norm linear prediction on a decimated window, modes from
    // the prediction polynomial, then the oscillatory mode with the largest
    // fitted amplitude. Insensitive to non-oscillatory baselines.
    constexpr int kOrder = 10;
    constexpr std::size_t kTargetSamples = 1500;
    const std::size_t end = trace.divergence_index ? *trace.divergence_index : trace.size();
    const auto first = std::lower_bound(trace.time_s.begin(), trace.time_s.begin() + static_cast<std::ptrdiff_t>(end), t_start_s);
    const auto begin = static_cast<std::size_t>(first - trace.time_s.begin());
    if (end <= begin + 4 * kOrder) throw InsufficientDataError("ring_frequency: not enough samples after t_start");
    const std::size_t step = std::max<std::size_t>(1, (end - begin) / kTargetSamples);
    std::vector<double> y;
    for (std::size_t i = begin; i < end; i += step) y.push_back(trace.displacement_m[i]);
    const double h = trace.time_s[begin + step] - trace.time_s[begin];
    const auto n = static_cast<Eigen::Index>(y.size());
    if (n < 4 * kOrder) throw InsufficientDataError("ring_frequency: not enough samples after t_start");
    double scale = 0.0;
    for (double v : y) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) throw InsufficientDataError("ring_frequency: trace is identically zero");

    const Eigen::Index rows = n - kOrder;
    Eigen::MatrixXd m(rows, kOrder);
    Eigen::VectorXd rhs(rows);
    for (Eigen::Index k = 0; k < rows; ++k) {
        for (int j = 0; j < kOrder; ++j) m(k, j) = y[static_cast<std::size_t>(k + kOrder - 1 - j)] / scale;
        rhs(k) = y[static_cast<std::size_t>(k + kOrder)] / scale;
    }
    const Eigen::VectorXd a = m.completeOrthogonalDecomposition().solve(rhs);
    // z^p - a1 z^(p-1) - ... - ap
    std::vector<double> c(kOrder + 1);
    c[kOrder] = 1.0;
    for (int j = 0; j < kOrder; ++j) c[static_cast<std::size_t>(kOrder - 1 - j)] = -a(j);
    const std::vector<Complex> z = poly_roots(Polynomial(c));

    const auto nz = static_cast<Eigen::Index>(z.size());
    Eigen::MatrixXcd v(n, nz);
    for (Eigen::Index i = 0; i < nz; ++i) {
        Complex zk(1.0, 0.0);
        for (Eigen::Index k = 0; k < n; ++k) {
            v(k, i) = zk;
            zk *= z[static_cast<std::size_t>(i)];
        }
    }
    Eigen::VectorXcd yc(n);
    for (Eigen::Index k = 0; k < n; ++k) yc(k) = y[static_cast<std::size_t>(k)] / scale;
    const Eigen::VectorXcd amp = v.completeOrthogonalDecomposition().solve(yc);

    double best_amp = 0.0;
    double best_f = 0.0;
    for (Eigen::Index i = 0; i < nz; ++i) {
        const Complex zi = z[static_cast<std::size_t>(i)];
        if (std::abs(zi) == 0.0) continue;
        const Complex s = std::log(zi) / h;
        const double f = std::abs(s.imag()) / kTwoPi;
        if (f * h < 1e-3 || f * h > 0.45) continue;
        // energy of the mode over the window
        const double r = std::abs(zi);
        const double weight = r == 1.0 ? static_cast<double>(n) : (1.0 - std::pow(r, 2.0 * static_cast<double>(n))) / (1.0 - r * r);
        const double e = std::abs(amp(i)) * std::sqrt(std::max(weight, 0.0));
        if (e > best_amp) {
            best_amp = e;
            best_f = f;
        }
    }
    if (best_f == 0.0) throw InsufficientDataError("ring_frequency: no oscillatory mode in the window");
    return best_f;
}

double sine_amplitude(const SimulationTrace& trace, double f_hz, double t_start_s) {
    const std::size_t end = trace.divergence_index ? *trace.divergence_index : trace.size();
    const auto first = std::lower_bound(trace.time_s.begin(), trace.time_s.begin() + static_cast<std::ptrdiff_t>(end), t_start_s);
    const auto begin = static_cast<std::size_t>(first - trace.time_s.begin());
    if (end <= begin + 3) throw InsufficientDataError("sine_amplitude: not enough samples after t_start");
    const double span = trace.time_s[end - 1] - trace.time_s[begin];
    const double periods = std::floor(span * f_hz);
    if (periods < 1.0) throw InsufficientDataError("sine_amplitude: less than one period after t_start");
    const double t_stop = trace.time_s[begin] + periods / f_hz;

    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d aty = Eigen::Vector3d::Zero();
    const double w = kTwoPi * f_hz;
    for (std::size_t i = begin; i < end && trace.time_s[i] <= t_stop; ++i) {
        const Eigen::Vector3d row(std::sin(w * trace.time_s[i]), std::cos(w * trace.time_s[i]), 1.0);
        ata += row * row.transpose();
        aty += row * trace.displacement_m[i];
    }
    const Eigen::Vector3d coef = ata.ldlt().solve(aty);
    return std::hypot(coef(0), coef(1));
}

void write_trace_csv(std::ostream& os, const SimulationTrace& trace) {
    os << "t_s,x_m,p_cav_w,drive_w\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        os << sci9(trace.time_s[i]) << ',' << sci9(trace.displacement_m[i]) << ',' << sci9(trace.cavity_power_w[i])
           << ',' << sci9(trace.actuator_drive_w[i]) << '\n';
    }
}

}  // namespace optospring

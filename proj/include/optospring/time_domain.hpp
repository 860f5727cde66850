#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "optospring/plant.hpp"
#include "optospring/servo_chain.hpp"
#include "optospring/transfer_function.hpp"

namespace optospring {

/// SISO state-space model dx/dt = A x + B u, y = C x + D u (time in seconds).
struct StateSpace {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    Eigen::RowVectorXd c;
    double d = 0.0;
    std::vector<std::string> state_labels;

    [[nodiscard]] std::size_t order() const { return static_cast<std::size_t>(a.rows()); }
    [[nodiscard]] Complex response(double f_hz) const;
};

/// Controllable canonical form. Throws ImproperSystemError for deg num > deg den
/// and DelayNotAlgebraicError for delayed transfer functions.
StateSpace realize(const RationalTF& tf, const std::string& label = "z");

/// `second` driven by the output of `first`.
StateSpace series(const StateSpace& first, const StateSpace& second);

enum class InjectionKind { None, ForceStep, ForceSine, FreqNoiseSine };

/// Force injections are in newtons; a laser-frequency injection is expressed
/// as the equivalent cavity-length disturbance in metres.
struct Injection {
    InjectionKind kind = InjectionKind::None;
    double amplitude = 0.0;
    double f_hz = 0.0;
};

struct SimConfig {
    double dt_s = 4e-9;
    double duration_s = 1e-3;
    Injection injection;
    bool feedback_on = true;
    double initial_displacement_m = 0.0;
    int pade_order = 1;
    std::size_t record_stride = 1;
};

/// Sampled trace. `cavity_power_w` is the intracavity power change about the
/// operating point; `actuator_drive_w` the input-power modulation from the AM.
struct SimulationTrace {
    std::vector<double> time_s;
    std::vector<double> displacement_m;
    std::vector<double> cavity_power_w;
    std::vector<double> actuator_drive_w;
    /// First recorded sample past the divergence threshold; the run stops there.
    std::optional<std::size_t> divergence_index;
    int pade_order = 0;
    double dt_s = 0.0;

    [[nodiscard]] std::size_t size() const { return time_s.size(); }
};

/// The complete linear loop: mechanical modes with the optical spring
/// written as restoring plus anti-damping force, and (when enabled) the
/// electronic chain with its delay replaced by a Pade section.
struct LoopStateSpace {
    Eigen::MatrixXd a;
    Eigen::VectorXd b_force;  // external force, N
    Eigen::VectorXd b_length; // length disturbance combination (x_ext - tau * dx_ext/dt), m
    Eigen::RowVectorXd x_row;
    Eigen::RowVectorXd power_row;
    double power_length_gain = 0.0;
    Eigen::RowVectorXd drive_row;
    double drive_length_gain = 0.0;
    std::vector<std::string> state_labels;
};

LoopStateSpace loop_state_space(const Plant& plant, const FeedbackChain& chain, bool feedback_on, int pade_order);

/// Fixed-step classical RK4 integration.
SimulationTrace simulate(const Plant& plant, const FeedbackChain& chain, const SimConfig& cfg);

/// Least-squares slope of log peak height versus time (1/s, positive = growth).
/// Throws InsufficientDataError with fewer than four positive peaks.
double growth_rate(const SimulationTrace& trace);

/// Damped frequency of the strongest oscillatory mode in x after t_start_s,
/// from a Prony fit. Hz.
double ring_frequency(const SimulationTrace& trace, double t_start_s);

/// Amplitude of the f_hz component of the displacement after t_start_s,
/// fitted over a whole number of periods (with offset).
double sine_amplitude(const SimulationTrace& trace, double f_hz, double t_start_s);

/// CSV with header `t_s,x_m,p_cav_w,drive_w`, 9 significant digits.
void write_trace_csv(std::ostream& os, const SimulationTrace& trace);

}  // namespace optospring

#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "optospring/polynomial.hpp"

namespace optospring {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// num(s)/den(s) * exp(-s * delay_s). No implicit pole/zero cancellation.
///
/// A nonzero delay is only meaningful for pointwise evaluation; every
/// algebraic operation that needs poles rejects it with
/// DelayNotAlgebraicError. Use pade() to convert a delay explicitly.
class RationalTF {
public:
    RationalTF() : num_(Polynomial::constant(1.0)), den_(Polynomial::constant(1.0)) {}
    RationalTF(Polynomial num, Polynomial den, double delay_s = 0.0);

    static RationalTF gain(double k) { return {Polynomial::constant(k), Polynomial::constant(1.0)}; }

    [[nodiscard]] const Polynomial& num() const { return num_; }
    [[nodiscard]] const Polynomial& den() const { return den_; }
    [[nodiscard]] double delay_s() const { return delay_s_; }
    [[nodiscard]] bool has_delay() const { return delay_s_ != 0.0; }
    [[nodiscard]] bool is_proper() const { return num_.is_zero() || num_.degree() <= den_.degree(); }

    /// Value at a complex s (rad/s). Throws PoleEvaluationError on a pole.
    [[nodiscard]] Complex at(Complex s) const;

    /// Poles/zeros of the rational part. Throw DelayNotAlgebraicError when delayed.
    [[nodiscard]] std::vector<Complex> poles() const;
    [[nodiscard]] std::vector<Complex> zeros() const;

private:
    Polynomial num_;
    Polynomial den_;
    double delay_s_ = 0.0;
};

/// Response at s = i*2*pi*f_hz; the only place Hz becomes rad/s.
Complex tf_eval(const RationalTF& g, double f_hz);

/// a*b with delays added.
RationalTF tf_series(const RationalTF& a, const RationalTF& b);
/// a+b. Both must be delay-free unless their delays are equal.
RationalTF tf_parallel(const RationalTF& a, const RationalTF& b);
/// 1/(1+g) as (den, den+num).
RationalTF tf_feedback(const RationalTF& g);
/// k*g
RationalTF tf_scale(const RationalTF& g, double k);
/// Pade approximant of exp(-s*delay) of the given order.
RationalTF pade(double delay_s, int order);
/// Replace the pure delay of g by its Pade approximant.
RationalTF with_pade_delay(const RationalTF& g, int order);

/// Strictly increasing positive frequencies in Hz.
class FrequencyGrid {
public:
    FrequencyGrid() = default;
    explicit FrequencyGrid(std::vector<double> points_hz);

    /// f_min * 10^(k/ppd), k = 0, 1, ... up to f_max (inclusive within 1e-9).
    static FrequencyGrid log_spaced(double f_min_hz, double f_max_hz, int points_per_decade);
    static FrequencyGrid linear(double f_min_hz, double f_max_hz, std::size_t n);

    [[nodiscard]] const std::vector<double>& points() const& { return points_; }
    // by value on temporaries, so `for (f : log_spaced(...).points())` is safe
    [[nodiscard]] std::vector<double> points() && { return std::move(points_); }
    [[nodiscard]] std::size_t size() const { return points_.size(); }
    [[nodiscard]] double front() const { return points_.front(); }
    [[nodiscard]] double back() const { return points_.back(); }
    [[nodiscard]] double operator[](std::size_t i) const { return points_[i]; }

private:
    std::vector<double> points_;
};

struct ComplexResponse {
    FrequencyGrid grid;
    std::vector<Complex> values;

    ComplexResponse() = default;
    ComplexResponse(FrequencyGrid g, std::vector<Complex> v);
};

ComplexResponse sample(const RationalTF& g, const FrequencyGrid& grid);

double phase_deg(Complex z);
double magnitude_db(Complex z);

}  // namespace optospring

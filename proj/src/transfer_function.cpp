#include "optospring/transfer_function.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "optospring/errors.hpp"

namespace optospring {

RationalTF::RationalTF(Polynomial num, Polynomial den, double delay_s)
    : num_(std::move(num)), den_(std::move(den)), delay_s_(delay_s) {
    if (den_.is_zero()) throw ConfigError("RationalTF: denominator is identically zero");
    if (!(delay_s_ >= 0.0) || !std::isfinite(delay_s_)) throw ConfigError("RationalTF: delay must be finite and >= 0");
}

Complex RationalTF::at(Complex s) const {
    const Complex d = den_(s);
    if (std::abs(d) <= 1e-14 * den_.magnitude_bound(s)) {
        throw PoleEvaluationError("transfer function evaluated at a pole");
    }
    Complex v = num_(s) / d;
    if (delay_s_ != 0.0) v *= std::exp(-s * delay_s_);
    return v;
}

std::vector<Complex> RationalTF::poles() const {
    if (has_delay()) throw DelayNotAlgebraicError("poles(): transfer function carries a pure delay");
    if (den_.degree() == 0) return {};
    return poly_roots(den_);
}

std::vector<Complex> RationalTF::zeros() const {
    if (has_delay()) throw DelayNotAlgebraicError("zeros(): transfer function carries a pure delay");
    if (num_.degree() == 0) return {};
    return poly_roots(num_);
}

Complex tf_eval(const RationalTF& g, double f_hz) {
    if (!(f_hz > 0.0)) throw ConfigError("tf_eval: frequency must be > 0 Hz");
    return g.at(Complex{0.0, kTwoPi * f_hz});
}

RationalTF tf_series(const RationalTF& a, const RationalTF& b) {
    return {a.num() * b.num(), a.den() * b.den(), a.delay_s() + b.delay_s()};
}

RationalTF tf_parallel(const RationalTF& a, const RationalTF& b) {
    if (a.delay_s() != b.delay_s()) {
        throw DelayNotAlgebraicError("tf_parallel: operands carry different pure delays");
    }
    return {a.num() * b.den() + b.num() * a.den(), a.den() * b.den(), a.delay_s()};
}

RationalTF tf_feedback(const RationalTF& g) {
    if (g.has_delay()) throw DelayNotAlgebraicError("tf_feedback: loop carries a pure delay; apply pade() first");
    return {g.den(), g.den() + g.num()};
}

RationalTF tf_scale(const RationalTF& g, double k) { return {k * g.num(), g.den(), g.delay_s()}; }

RationalTF pade(double delay_s, int order) {
    if (order < 1) throw ConfigError("pade: order must be >= 1");
    if (delay_s == 0.0) return RationalTF{};
    // c_k = (2n-k)! n! / ((2n)! k! (n-k)!)
    std::vector<double> num(static_cast<std::size_t>(order) + 1), den(num.size());
    double c = 1.0;
    double tk = 1.0;
    for (int k = 0; k <= order; ++k) {
        if (k > 0) {
            c *= static_cast<double>(order - k + 1) / (static_cast<double>(k) * static_cast<double>(2 * order - k + 1));
            tk *= delay_s;
        }
        den[static_cast<std::size_t>(k)] = c * tk;
        num[static_cast<std::size_t>(k)] = (k % 2 ? -1.0 : 1.0) * c * tk;
    }
    return {Polynomial(std::move(num)), Polynomial(std::move(den))};
}

RationalTF with_pade_delay(const RationalTF& g, int order) {
    if (!g.has_delay()) return g;
    return tf_series(RationalTF{g.num(), g.den()}, pade(g.delay_s(), order));
}

FrequencyGrid::FrequencyGrid(std::vector<double> points_hz) : points_(std::move(points_hz)) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!(points_[i] > 0.0) || !std::isfinite(points_[i])) {
            throw ConfigError("FrequencyGrid: points must be finite and > 0");
        }
        if (i > 0 && !(points_[i] > points_[i - 1])) throw ConfigError("FrequencyGrid: points must be strictly increasing");
    }
}

FrequencyGrid FrequencyGrid::log_spaced(double f_min_hz, double f_max_hz, int points_per_decade) {
    if (!(f_min_hz > 0.0) || !(f_max_hz > f_min_hz)) {
        throw ConfigError("frequency grid: need 0 < f_min_hz < f_max_hz");
    }
    if (points_per_decade < 1) throw ConfigError("frequency grid: points_per_decade must be >= 1");
    const double decades = std::log10(f_max_hz / f_min_hz);
    const auto n = static_cast<std::size_t>(std::floor(decades * points_per_decade + 1e-9));
    std::vector<double> pts;
    pts.reserve(n + 2);
    for (std::size_t k = 0; k <= n; ++k) {
        pts.push_back(f_min_hz * std::pow(10.0, static_cast<double>(k) / points_per_decade));
    }
    if (pts.back() < f_max_hz * (1.0 - 1e-9)) pts.push_back(f_max_hz);
    return FrequencyGrid(std::move(pts));
}

FrequencyGrid FrequencyGrid::linear(double f_min_hz, double f_max_hz, std::size_t n) {
    if (n < 2 || !(f_min_hz > 0.0) || !(f_max_hz > f_min_hz)) throw ConfigError("linear grid: bad range");
    std::vector<double> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        pts[i] = f_min_hz + (f_max_hz - f_min_hz) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return FrequencyGrid(std::move(pts));
}

ComplexResponse::ComplexResponse(FrequencyGrid g, std::vector<Complex> v) : grid(std::move(g)), values(std::move(v)) {
    if (grid.size() != values.size()) throw ConfigError("ComplexResponse: grid and values differ in length");
}

ComplexResponse sample(const RationalTF& g, const FrequencyGrid& grid) {
    std::vector<Complex> v;
    v.reserve(grid.size());
    for (double f : grid.points()) v.push_back(tf_eval(g, f));
    return {grid, std::move(v)};
}

double phase_deg(Complex z) { return std::arg(z) * 180.0 / std::numbers::pi; }

double magnitude_db(Complex z) { return 20.0 * std::log10(std::abs(z)); }

}  // namespace optospring

#include "optospring/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>
#include <unsupported/Eigen/Polynomials>

#include "optospring/errors.hpp"

namespace optospring {

Polynomial::Polynomial(std::initializer_list<double> coeffs) : coeffs_(coeffs) { trim(); }

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) { trim(); }

void Polynomial::trim() {
    while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
    if (coeffs_.empty()) coeffs_.push_back(0.0);
}

Polynomial Polynomial::from_roots(std::span<const Complex> roots) {
    std::vector<Complex> c{1.0};
    for (const Complex& r : roots) {
        std::vector<Complex> next(c.size() + 1, 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            next[i + 1] += c[i];
            next[i] -= r * c[i];
        }
        c = std::move(next);
    }
    std::vector<double> real(c.size());
    std::transform(c.begin(), c.end(), real.begin(), [](Complex z) { return z.real(); });
    return Polynomial(std::move(real));
}

Complex Polynomial::operator()(Complex s) const {
    Complex acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * s + *it;
    return acc;
}

double Polynomial::operator()(double s) const {
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * s + *it;
    return acc;
}

double Polynomial::magnitude_bound(Complex s) const {
    const double r = std::abs(s);
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * r + std::abs(*it);
    return acc;
}

Polynomial Polynomial::derivative() const {
    if (coeffs_.size() == 1) return Polynomial{};
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t i = 1; i < coeffs_.size(); ++i) d[i - 1] = static_cast<double>(i) * coeffs_[i];
    return Polynomial(std::move(d));
}

Polynomial Polynomial::scaled_argument(double sigma) const {
    std::vector<double> c(coeffs_);
    double w = 1.0;
    for (double& ci : c) {
        ci *= w;
        w *= sigma;
    }
    return Polynomial(std::move(c));
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<double> c(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a[i] + b[i];
    return Polynomial(std::move(c));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-1.0) * b; }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
        for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return Polynomial(std::move(c));
}

Polynomial operator*(double k, const Polynomial& p) {
    std::vector<double> c(p.coeffs_);
    for (double& ci : c) ci *= k;
    return Polynomial(std::move(c));
}

namespace {

// Splits off exact roots at the origin and returns the remaining factor.
Polynomial strip_origin_roots(const Polynomial& p, std::size_t& zero_roots) {
    const auto& c = p.coeffs();
    std::size_t k = 0;
    while (k + 1 < c.size() && c[k] == 0.0) ++k;
    zero_roots = k;
    return Polynomial(std::vector<double>(c.begin() + static_cast<std::ptrdiff_t>(k), c.end()));
}

// Geometric root scale |c0/cn|^(1/n); maps the roots to roughly unit size.
double root_scale(const Polynomial& p) {
    const double n = static_cast<double>(p.degree());
    const double s = std::pow(std::abs(p[0] / p.leading()), 1.0 / n);
    return (std::isfinite(s) && s > 0.0) ? s : 1.0;
}

Complex newton_polish(const Polynomial& p, const Polynomial& dp, Complex r) {
    double best = std::abs(p(r)) / p.magnitude_bound(r);
    for (int it = 0; it < 8 && best > 0.0; ++it) {
        const Complex d = dp(r);
        if (d == 0.0) break;
        const Complex cand = r - p(r) / d;
        const double res = std::abs(p(cand)) / p.magnitude_bound(cand);
        if (!(res < best)) break;
        best = res;
        r = cand;
    }
    return r;
}

}  // namespace

std::vector<Complex> poly_roots(const Polynomial& p) {
    if (p.degree() < 1) throw DegreeError("poly_roots: polynomial must have degree >= 1");

    std::size_t zero_roots = 0;
    const Polynomial q = strip_origin_roots(p, zero_roots);
    std::vector<Complex> roots(zero_roots, Complex{0.0, 0.0});
    if (q.degree() == 0) return roots;

    const double sigma = root_scale(q);
    const Polynomial z = q.scaled_argument(sigma);
    const double lead = z.leading();

    if (z.degree() == 1) {
        roots.emplace_back(-z[0] / lead * sigma, 0.0);
        return roots;
    }

    Eigen::VectorXd c(static_cast<Eigen::Index>(z.coeffs().size()));
    for (std::size_t i = 0; i < z.coeffs().size(); ++i) c[static_cast<Eigen::Index>(i)] = z[i] / lead;

    Eigen::PolynomialSolver<double, Eigen::Dynamic> solver;
    solver.compute(c);
    const Polynomial dq = q.derivative();
    for (Eigen::Index i = 0; i < solver.roots().size(); ++i) {
        roots.push_back(newton_polish(q, dq, solver.roots()[i] * sigma));
    }
    return roots;
}

std::size_t count_rhp_roots(std::span<const Complex> roots, double rel_tol) {
    double scale = 0.0;
    for (const Complex& r : roots) scale = std::max(scale, std::abs(r));
    return static_cast<std::size_t>(std::count_if(
        roots.begin(), roots.end(), [&](const Complex& r) { return r.real() > rel_tol * scale; }));
}

RouthResult routh_rhp_count(const Polynomial& p) {
    if (p.degree() < 1) throw DegreeError("routh_rhp_count: polynomial must have degree >= 1");

    std::size_t zero_roots = 0;
    Polynomial q = strip_origin_roots(p, zero_roots);
    RouthResult out;
    out.degenerate = zero_roots > 0;
    if (q.degree() == 0) return out;
    q = q.scaled_argument(root_scale(q));

    const std::size_t n = q.degree();
    const std::size_t width = n / 2 + 1;
    std::vector<std::vector<double>> rows(n + 1, std::vector<double>(width, 0.0));
    for (std::size_t k = 0; k <= n; ++k) {
        // descending powers: s^n, s^(n-1), ...
        rows[k % 2][k / 2] = q[n - k];
    }

    double max_coeff = 0.0;
    for (double c : q.coeffs()) max_coeff = std::max(max_coeff, std::abs(c));
    const double eps = 1e-9 * max_coeff;

    auto row_max = [](const std::vector<double>& r) {
        double m = 0.0;
        for (double v : r) m = std::max(m, std::abs(v));
        return m;
    };

    for (std::size_t i = 1; i <= n; ++i) {
        if (i >= 2) {
            const auto& a = rows[i - 2];
            const auto& b = rows[i - 1];
            const double tol = 1e-10 * std::max(row_max(a), row_max(b));
            for (std::size_t j = 0; j + 1 < width; ++j) {
                double v = (b[0] * a[j + 1] - a[0] * b[j + 1]) / b[0];
                if (std::abs(v) <= tol) v = 0.0;
                rows[i][j] = v;
            }
        }
        auto& row = rows[i];
        if (row_max(row) == 0.0) {
            // Whole row vanished: differentiate the auxiliary polynomial of the row above.
            const auto& above = rows[i - 1];
            const double order = static_cast<double>(n - (i - 1));
            for (std::size_t j = 0; j < width; ++j) row[j] = above[j] * (order - 2.0 * static_cast<double>(j));
            out.degenerate = true;
        }
        if (row[0] == 0.0) {
            row[0] = eps;
            out.degenerate = true;
        }
    }

    for (std::size_t i = 1; i <= n; ++i) {
        if ((rows[i][0] > 0.0) != (rows[i - 1][0] > 0.0)) ++out.rhp_count;
    }
    return out;
}

}  // namespace optospring

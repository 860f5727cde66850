#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace optospring {

using Complex = std::complex<double>;

/// Real polynomial in s, coefficients stored in ascending powers.
///
/// Trailing (highest-power) exact zeros are trimmed on construction, so the
/// leading coefficient is nonzero unless the polynomial is identically zero,
/// which is stored as the single coefficient {0}.
class Polynomial {
public:
    Polynomial() : coeffs_{0.0} {}
    Polynomial(std::initializer_list<double> coeffs);
    explicit Polynomial(std::vector<double> coeffs);

    static Polynomial constant(double c) { return Polynomial({c}); }
    /// Monic polynomial prod(s - r). Roots must come in conjugate pairs;
    /// residual imaginary parts of the expansion are dropped.
    static Polynomial from_roots(std::span<const Complex> roots);

    [[nodiscard]] std::size_t degree() const { return coeffs_.size() - 1; }
    [[nodiscard]] bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }
    [[nodiscard]] const std::vector<double>& coeffs() const { return coeffs_; }
    [[nodiscard]] double operator[](std::size_t i) const { return i < coeffs_.size() ? coeffs_[i] : 0.0; }
    [[nodiscard]] double leading() const { return coeffs_.back(); }

    /// Horner evaluation.
    [[nodiscard]] Complex operator()(Complex s) const;
    [[nodiscard]] double operator()(double s) const;
    /// sum |c_i| |s|^i, the natural scale for judging a residual at s.
    [[nodiscard]] double magnitude_bound(Complex s) const;

    [[nodiscard]] Polynomial derivative() const;
    /// p(sigma * z) as a polynomial in z.
    [[nodiscard]] Polynomial scaled_argument(double sigma) const;

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(double k, const Polynomial& p);
    friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
    void trim();
    std::vector<double> coeffs_;
};

/// All roots with multiplicity. Companion-matrix eigenvalues followed by a
/// guarded Newton polish on the original coefficients.
/// Throws DegreeError for constant polynomials.
std::vector<Complex> poly_roots(const Polynomial& p);

struct RouthResult {
    std::size_t rhp_count = 0;
    /// A zero appeared in the first column or a whole row vanished.
    bool degenerate = false;
};

/// Number of roots in the open right half plane from the Routh array.
/// Zero pivots are replaced by a small epsilon; vanishing rows use the
/// auxiliary-polynomial derivative. Either case sets `degenerate`.
RouthResult routh_rhp_count(const Polynomial& p);

/// Count of roots with Re(r) > rel_tol * max|r|.
std::size_t count_rhp_roots(std::span<const Complex> roots, double rel_tol = 1e-9);

}  // namespace optospring

#ifndef ORBEX_SCALAR_HPP
#define ORBEX_SCALAR_HPP

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include <gmpxx.h>

#include "orbex/error.hpp"

namespace orbex {

using Integer = mpz_class;

// Three-valued answer for comparisons and membership questions that may be
// undecidable on enclosures.
enum class Tri { False, True, Unknown };

std::string_view to_string(Tri t) noexcept;

// Exact rational in canonical form (gcd 1, positive denominator).
class Rational {
public:
    Rational() = default;
    Rational(long v) : v_(v) {} // NOLINT(google-explicit-constructor)
    Rational(const Integer& n); // NOLINT(google-explicit-constructor)
    Rational(const Integer& num, const Integer& den);
    explicit Rational(mpq_class v);

    // Accepts "p", "-p", "p/q".
    static Rational parse(std::string_view text);

    const mpq_class& raw() const noexcept { return v_; }
    Integer num() const { return v_.get_num(); }
    Integer den() const { return v_.get_den(); }

    int sign() const noexcept { return sgn(v_); }
    bool is_zero() const noexcept { return sign() == 0; }
    bool is_integer() const { return v_.get_den() == 1; }

    Integer floor() const;
    Integer ceil() const;
    Rational abs() const { return Rational(mpq_class(::abs(v_))); }
    Rational inverse() const;

    // Lower bound on floor(log2 |q|); q must be nonzero.
    long floor_log2_lower() const;

    std::string to_string() const;

    friend Rational operator+(const Rational& a, const Rational& b) { return Rational(mpq_class(a.v_ + b.v_)); }
    friend Rational operator-(const Rational& a, const Rational& b) { return Rational(mpq_class(a.v_ - b.v_)); }
    friend Rational operator*(const Rational& a, const Rational& b) { return Rational(mpq_class(a.v_ * b.v_)); }
    friend Rational operator/(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a) { return Rational(mpq_class(-a.v_)); }
    Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
    Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
    Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.v_ == b.v_; }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b)
    {
        const int c = cmp(a.v_, b.v_);
        return c < 0 ? std::strong_ordering::less : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
    }

private:
    mpq_class v_;
};

Rational pow(const Rational& base, unsigned long exponent);

// mantissa * 2^exponent, normalized so the mantissa is odd (or the value is 0
// with exponent 0).
class Dyadic {
public:
    Dyadic() = default;
    Dyadic(Integer mantissa, long exponent);

    static Dyadic round_down(const Rational& q, unsigned precision);
    static Dyadic round_up(const Rational& q, unsigned precision);
    // Exact conversion; q must have a power-of-two denominator.
    static Dyadic from_rational(const Rational& q);

    const Integer& mantissa() const noexcept { return mantissa_; }
    long exponent() const noexcept { return exponent_; }
    Rational to_rational() const;

    friend bool operator==(const Dyadic& a, const Dyadic& b)
    {
        return a.mantissa_ == b.mantissa_ && a.exponent_ == b.exponent_;
    }
    friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b)
    {
        return a.to_rational() <=> b.to_rational();
    }

private:
    Integer mantissa_ = 0;
    long exponent_ = 0;
};

// Closed interval with dyadic endpoints; every operation rounds outward.
class Enclosure {
public:
    Enclosure() = default;
    Enclosure(Dyadic lo, Dyadic hi, unsigned precision);

    // Smallest dyadic enclosure of [lo, hi] at the given precision.
    static Enclosure outward(const Rational& lo, const Rational& hi, unsigned precision);
    static Enclosure point(const Rational& q, unsigned precision) { return outward(q, q, precision); }

    const Dyadic& lo() const noexcept { return lo_; }
    const Dyadic& hi() const noexcept { return hi_; }
    Rational lower() const { return lo_.to_rational(); }
    Rational upper() const { return hi_.to_rational(); }
    unsigned precision() const noexcept { return precision_; }

    bool is_degenerate() const { return lo_ == hi_; }
    bool contains(const Rational& q) const { return lower() <= q && q <= upper(); }
    bool contains_zero() const { return lo_.mantissa() <= 0 && hi_.mantissa() >= 0; }
    Rational width() const { return upper() - lower(); }

    Enclosure operator-() const;
    friend Enclosure operator+(const Enclosure& a, const Enclosure& b);
    friend Enclosure operator-(const Enclosure& a, const Enclosure& b);
    friend Enclosure operator*(const Enclosure& a, const Enclosure& b);
    // Throws PossiblyZeroDivisor when b contains 0.
    friend Enclosure operator/(const Enclosure& a, const Enclosure& b);
    Enclosure abs() const;

    std::string to_string() const;

    friend bool operator==(const Enclosure& a, const Enclosure& b) = default;

private:
    Dyadic lo_;
    Dyadic hi_;
    unsigned precision_ = 64;
};

// a + b*sqrt(2) with rational a, b.
class QSqrt2 {
public:
    QSqrt2() = default;
    QSqrt2(Rational a) : a_(std::move(a)) {} // NOLINT(google-explicit-constructor)
    QSqrt2(long a) : a_(a) {}                // NOLINT(google-explicit-constructor)
    QSqrt2(Rational a, Rational b) : a_(std::move(a)), b_(std::move(b)) {}

    static QSqrt2 sqrt2() { return QSqrt2(Rational(0), Rational(1)); }
    // Accepts "a", "p/q", "a + b*sqrt2", "b*sqrt2", "sqrt2".
    static QSqrt2 parse(std::string_view text);

    const Rational& rational_part() const noexcept { return a_; }
    const Rational& sqrt2_part() const noexcept { return b_; }

    bool is_rational() const noexcept { return b_.is_zero(); }
    bool is_zero() const noexcept { return a_.is_zero() && b_.is_zero(); }
    int sign() const;
    Integer floor() const;
    Integer ceil() const;
    QSqrt2 abs() const { return sign() < 0 ? -*this : *this; }
    QSqrt2 inverse() const;
    // Galois conjugate a - b*sqrt2.
    QSqrt2 conjugate() const { return QSqrt2(a_, -b_); }
    // Representative of the value modulo 1 in [0, 1).
    QSqrt2 frac() const { return *this - QSqrt2(Rational(floor())); }

    Enclosure enclose(unsigned precision) const;
    // Rational bounds lo <= value <= hi, each within 2^-bits of the value.
    std::pair<Rational, Rational> rational_bounds(unsigned bits) const;

    std::string to_string() const;

    QSqrt2 operator-() const { return QSqrt2(-a_, -b_); }
    friend QSqrt2 operator+(const QSqrt2& x, const QSqrt2& y) { return QSqrt2(x.a_ + y.a_, x.b_ + y.b_); }
    friend QSqrt2 operator-(const QSqrt2& x, const QSqrt2& y) { return QSqrt2(x.a_ - y.a_, x.b_ - y.b_); }
    friend QSqrt2 operator*(const QSqrt2& x, const QSqrt2& y)
    {
        return QSqrt2(x.a_ * y.a_ + Rational(2) * x.b_ * y.b_, x.a_ * y.b_ + x.b_ * y.a_);
    }
    friend QSqrt2 operator/(const QSqrt2& x, const QSqrt2& y);

    friend bool operator==(const QSqrt2& x, const QSqrt2& y) { return x.a_ == y.a_ && x.b_ == y.b_; }
    friend std::strong_ordering operator<=>(const QSqrt2& x, const QSqrt2& y)
    {
        const int s = (x - y).sign();
        return s < 0 ? std::strong_ordering::less : (s > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
    }

private:
    Rational a_;
    Rational b_;
};

Enclosure sqrt2_enclosure(unsigned precision);

// Interval containing base^(1/n), width <= 2^(2 - precision) * value.
Enclosure root_enclosure(const Rational& base, unsigned long n, unsigned precision);

// Exact n-th root of q when it is rational.
std::optional<Rational> exact_root(const Rational& q, unsigned long n);

inline constexpr unsigned default_precision = 128;

// Either an exact element of Q(sqrt2) or a sound enclosure.
class Scalar {
public:
    Scalar() : v_(QSqrt2()) {}
    Scalar(QSqrt2 v) : v_(std::move(v)) {}         // NOLINT(google-explicit-constructor)
    Scalar(Rational v) : v_(QSqrt2(std::move(v))) {} // NOLINT(google-explicit-constructor)
    Scalar(long v) : v_(QSqrt2(v)) {}                // NOLINT(google-explicit-constructor)
    Scalar(Enclosure v) : v_(std::move(v)) {}       // NOLINT(google-explicit-constructor)

    // Exact forms via QSqrt2::parse, enclosures as "[lo, hi]@p".
    static Scalar parse(std::string_view text);

    bool is_exact() const noexcept { return std::holds_alternative<QSqrt2>(v_); }
    const QSqrt2& exact() const;
    const QSqrt2* exact_if() const noexcept { return std::get_if<QSqrt2>(&v_); }
    const Enclosure* interval_if() const noexcept { return std::get_if<Enclosure>(&v_); }

    // Precision of the enclosure, or 0 for exact values.
    unsigned precision() const noexcept;
    Enclosure enclose(unsigned precision) const;
    Rational lower_bound(unsigned precision = default_precision) const;
    Rational upper_bound(unsigned precision = default_precision) const;

    Tri is_rational() const;
    // Certified sign if decidable.
    std::optional<int> sign() const;

    std::string to_string() const;

    friend bool operator==(const Scalar& a, const Scalar& b) = default;

private:
    std::variant<QSqrt2, Enclosure> v_;
};

Scalar operator+(const Scalar& a, const Scalar& b);
Scalar operator-(const Scalar& a, const Scalar& b);
Scalar operator*(const Scalar& a, const Scalar& b);
// DivisionByZero for exact zero, PossiblyZeroDivisor for enclosures containing 0.
Scalar operator/(const Scalar& a, const Scalar& b);
Scalar operator-(const Scalar& a);
Scalar abs(const Scalar& a);
Scalar max(const Scalar& a, const Scalar& b);
Scalar min(const Scalar& a, const Scalar& b);
Scalar pow(const Scalar& base, unsigned long exponent);

// Certified a > b. True/False only when decided; Unknown on overlap.
Tri cmp_gt(const Scalar& a, const Scalar& b);
// Certified a >= b.
Tri cmp_ge(const Scalar& a, const Scalar& b);

// Real cube root; exact when the input is a rational cube.
Scalar cube_root(const Scalar& v, unsigned precision = default_precision);

// Decimal string rounded down (or up) to the given number of digits after
// the point.
std::string to_decimal(const Rational& q, int digits, bool round_up);

} // namespace orbex

#endif

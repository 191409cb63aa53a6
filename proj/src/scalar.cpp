#include "orbex/scalar.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>

namespace orbex {

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::DivisionByZero: return "DivisionByZero";
    case ErrorKind::PossiblyZeroDivisor: return "PossiblyZeroDivisor";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::Unsupported: return "Unsupported";
    case ErrorKind::NotInvariant: return "NotInvariant";
    case ErrorKind::RationalityUndecidable: return "RationalityUndecidable";
    case ErrorKind::NotInverse: return "NotInverse";
    case ErrorKind::UnsupportedSystemKind: return "UnsupportedSystemKind";
    case ErrorKind::NotAWitness: return "NotAWitness";
    case ErrorKind::ModulusViolated: return "ModulusViolated";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::UnknownEntry: return "UnknownEntry";
    case ErrorKind::UnknownLaw: return "UnknownLaw";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ParseError: return "ParseError";
    }
    return "Error";
}

std::string_view to_string(Tri t) noexcept
{
    switch (t) {
    case Tri::True: return "true";
    case Tri::False: return "false";
    case Tri::Unknown: return "unknown";
    }
    return "unknown";
}

namespace {

std::string strip(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            out.push_back(c);
        }
    }
    return out;
}

Integer parse_integer(const std::string& digits, std::string_view context)
{
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        throw Error(ErrorKind::ParseError, "malformed number '" + std::string(context) + "'");
    }
    return Integer(digits, 10);
}

Integer pow2(unsigned long k)
{
    Integer r;
    mpz_ui_pow_ui(r.get_mpz_t(), 2, k);
    return r;
}

Integer shift_left(const Integer& v, long k)
{
    Integer r;
    if (k >= 0) {
        mpz_mul_2exp(r.get_mpz_t(), v.get_mpz_t(), static_cast<mp_bitcnt_t>(k));
    } else {
        mpz_fdiv_q_2exp(r.get_mpz_t(), v.get_mpz_t(), static_cast<mp_bitcnt_t>(-k));
    }
    return r;
}

// floor(q * 2^k) and whether the product is an integer.
std::pair<Integer, bool> floor_scaled(const Rational& q, long k)
{
    Integer num = q.num();
    Integer den = q.den();
    if (k >= 0) {
        mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), static_cast<mp_bitcnt_t>(k));
    } else {
        mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), static_cast<mp_bitcnt_t>(-k));
    }
    Integer quot;
    Integer rem;
    mpz_fdiv_qr(quot.get_mpz_t(), rem.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    return {quot, rem == 0};
}

// (floor, exact?) of q^(1/n) * 2^k for q >= 0.
std::pair<Integer, bool> root_scaled(const Rational& q, unsigned long n, long k)
{
    const auto [t, t_exact] = floor_scaled(q, k * static_cast<long>(n));
    Integer r;
    const int exact = mpz_root(r.get_mpz_t(), t.get_mpz_t(), n);
    return {r, t_exact && exact != 0};
}

} // namespace

// ---------------------------------------------------------------- Rational

Rational::Rational(const Integer& n) : v_(n) {}

Rational::Rational(const Integer& num, const Integer& den)
{
    if (den == 0) {
        throw Error(ErrorKind::DivisionByZero, "rational with zero denominator");
    }
    v_ = mpq_class(num, den);
    v_.canonicalize();
}

Rational::Rational(mpq_class v) : v_(std::move(v)) { v_.canonicalize(); }

Rational Rational::parse(std::string_view text)
{
    std::string s = strip(text);
    if (s.empty()) {
        throw Error(ErrorKind::ParseError, "empty rational");
    }
    bool negative = false;
    std::size_t pos = 0;
    if (s[0] == '+' || s[0] == '-') {
        negative = s[0] == '-';
        pos = 1;
    }
    std::string body = s.substr(pos);
    Rational value;
    if (auto slash = body.find('/'); slash != std::string::npos) {
        Integer num = parse_integer(body.substr(0, slash), text);
        Integer den = parse_integer(body.substr(slash + 1), text);
        value = Rational(num, den);
    } else if (auto dot = body.find('.'); dot != std::string::npos) {
        std::string whole = body.substr(0, dot);
        std::string fraction = body.substr(dot + 1);
        Integer w = whole.empty() ? Integer(0) : parse_integer(whole, text);
        Integer f = fraction.empty() ? Integer(0) : parse_integer(fraction, text);
        Integer scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, fraction.size());
        value = Rational(Integer(w * scale + f), scale);
    } else {
        value = Rational(parse_integer(body, text));
    }
    return negative ? -value : value;
}

Integer Rational::floor() const
{
    Integer r;
    mpz_fdiv_q(r.get_mpz_t(), v_.get_num_mpz_t(), v_.get_den_mpz_t());
    return r;
}

Integer Rational::ceil() const
{
    Integer r;
    mpz_cdiv_q(r.get_mpz_t(), v_.get_num_mpz_t(), v_.get_den_mpz_t());
    return r;
}

Rational Rational::inverse() const
{
    if (is_zero()) {
        throw Error(ErrorKind::DivisionByZero, "inverse of 0");
    }
    return Rational(mpq_class(1 / v_));
}

long Rational::floor_log2_lower() const
{
    const auto nbits = static_cast<long>(mpz_sizeinbase(v_.get_num_mpz_t(), 2));
    const auto dbits = static_cast<long>(mpz_sizeinbase(v_.get_den_mpz_t(), 2));
    return nbits - 1 - dbits;
}

std::string Rational::to_string() const
{
    if (is_integer()) {
        return v_.get_num().get_str();
    }
    return v_.get_num().get_str() + "/" + v_.get_den().get_str();
}

Rational operator/(const Rational& a, const Rational& b)
{
    if (b.is_zero()) {
        throw Error(ErrorKind::DivisionByZero, "rational division by 0");
    }
    return Rational(mpq_class(a.v_ / b.v_));
}

Rational pow(const Rational& base, unsigned long exponent)
{
    Integer num;
    Integer den;
    mpz_pow_ui(num.get_mpz_t(), base.raw().get_num_mpz_t(), exponent);
    mpz_pow_ui(den.get_mpz_t(), base.raw().get_den_mpz_t(), exponent);
    return Rational(num, den);
}

// ---------------------------------------------------------------- Dyadic

Dyadic::Dyadic(Integer mantissa, long exponent) : mantissa_(std::move(mantissa)), exponent_(exponent)
{
    if (mantissa_ == 0) {
        exponent_ = 0;
        return;
    }
    const auto tz = static_cast<long>(mpz_scan1(mantissa_.get_mpz_t(), 0));
    if (tz > 0) {
        mpz_tdiv_q_2exp(mantissa_.get_mpz_t(), mantissa_.get_mpz_t(), static_cast<mp_bitcnt_t>(tz));
        exponent_ += tz;
    }
}

Dyadic Dyadic::round_down(const Rational& q, unsigned precision)
{
    if (q.is_zero()) {
        return {};
    }
    const long k = static_cast<long>(precision) - q.abs().floor_log2_lower();
    return Dyadic(floor_scaled(q, k).first, -k);
}

Dyadic Dyadic::round_up(const Rational& q, unsigned precision)
{
    return Dyadic(-round_down(-q, precision).mantissa(), round_down(-q, precision).exponent());
}

Dyadic Dyadic::from_rational(const Rational& q)
{
    const Integer den = q.den();
    const auto shift = static_cast<long>(mpz_scan1(den.get_mpz_t(), 0));
    if (den != pow2(static_cast<unsigned long>(shift))) {
        throw Error(ErrorKind::InvalidArgument, "not a dyadic rational: " + q.to_string());
    }
    return Dyadic(q.num(), -shift);
}

Rational Dyadic::to_rational() const
{
    if (exponent_ >= 0) {
        return Rational(shift_left(mantissa_, exponent_));
    }
    return Rational(mantissa_, pow2(static_cast<unsigned long>(-exponent_)));
}

// ---------------------------------------------------------------- Enclosure

Enclosure::Enclosure(Dyadic lo, Dyadic hi, unsigned precision)
    : lo_(std::move(lo)), hi_(std::move(hi)), precision_(precision)
{
    if (hi_ < lo_) {
        throw Error(ErrorKind::InvalidArgument, "enclosure with lo > hi");
    }
}

Enclosure Enclosure::outward(const Rational& lo, const Rational& hi, unsigned precision)
{
    return Enclosure(Dyadic::round_down(lo, precision), Dyadic::round_up(hi, precision), precision);
}

Enclosure Enclosure::operator-() const
{
    return Enclosure(Dyadic(-hi_.mantissa(), hi_.exponent()), Dyadic(-lo_.mantissa(), lo_.exponent()), precision_);
}

Enclosure operator+(const Enclosure& a, const Enclosure& b)
{
    return Enclosure::outward(a.lower() + b.lower(), a.upper() + b.upper(), std::max(a.precision(), b.precision()));
}

Enclosure operator-(const Enclosure& a, const Enclosure& b) { return a + (-b); }

Enclosure operator*(const Enclosure& a, const Enclosure& b)
{
    const std::array<Rational, 4> products{a.lower() * b.lower(), a.lower() * b.upper(), a.upper() * b.lower(),
                                           a.upper() * b.upper()};
    const auto [lo, hi] = std::minmax_element(products.begin(), products.end());
    return Enclosure::outward(*lo, *hi, std::max(a.precision(), b.precision()));
}

Enclosure operator/(const Enclosure& a, const Enclosure& b)
{
    if (b.contains_zero()) {
        throw Error(ErrorKind::PossiblyZeroDivisor, "divisor " + b.to_string() + " contains 0");
    }
    const Rational blo = b.lower();
    const Rational bhi = b.upper();
    const std::array<Rational, 4> quotients{a.lower() / blo, a.lower() / bhi, a.upper() / blo, a.upper() / bhi};
    const auto [lo, hi] = std::minmax_element(quotients.begin(), quotients.end());
    return Enclosure::outward(*lo, *hi, std::max(a.precision(), b.precision()));
}

Enclosure Enclosure::abs() const
{
    if (lo_.mantissa() >= 0) {
        return *this;
    }
    if (hi_.mantissa() <= 0) {
        return -*this;
    }
    const Rational m = std::max(-lower(), upper());
    return Enclosure(Dyadic(), Dyadic::from_rational(m), precision_);
}

std::string Enclosure::to_string() const
{
    return "[" + lower().to_string() + ", " + upper().to_string() + "]@" + std::to_string(precision_);
}

// ---------------------------------------------------------------- QSqrt2

Enclosure sqrt2_enclosure(unsigned precision)
{
    const unsigned long k = precision + 2;
    Integer s;
    const Integer radicand = shift_left(Integer(2), static_cast<long>(2 * k));
    mpz_sqrt(s.get_mpz_t(), radicand.get_mpz_t());
    return Enclosure(Dyadic(s, -static_cast<long>(k)), Dyadic(Integer(s + 1), -static_cast<long>(k)), precision);
}

QSqrt2 QSqrt2::parse(std::string_view text)
{
    const std::string s = strip(text);
    const auto root = s.find("sqrt2");
    if (root == std::string::npos) {
        return QSqrt2(Rational::parse(s));
    }
    if (root + 5 != s.size()) {
        throw Error(ErrorKind::ParseError, "trailing text after sqrt2 in '" + std::string(text) + "'");
    }
    // Split at the last sign that starts the sqrt2 term.
    std::size_t split = 0;
    for (std::size_t i = 1; i < root; ++i) {
        if ((s[i] == '+' || s[i] == '-') && s[i - 1] != '+' && s[i - 1] != '-' && s[i - 1] != '*' && s[i - 1] != '/') {
            split = i;
        }
    }
    Rational a;
    std::string term = s.substr(0, root);
    if (split > 0) {
        a = Rational::parse(s.substr(0, split));
        term = s.substr(split, root - split);
    }
    if (!term.empty() && term.back() == '*') {
        term.pop_back();
    }
    bool negative = false;
    while (!term.empty() && (term[0] == '+' || term[0] == '-')) {
        negative ^= term[0] == '-';
        term.erase(0, 1);
    }
    Rational b = term.empty() ? Rational(1) : Rational::parse(term);
    return QSqrt2(a, negative ? -b : b);
}

int QSqrt2::sign() const
{
    const int sa = a_.sign();
    const int sb = b_.sign();
    if (sb == 0) {
        return sa;
    }
    if (sa == 0 || sa == sb) {
        return sb;
    }
    // Opposite signs: |a| vs |b|*sqrt2, decided by a^2 vs 2 b^2 (never equal).
    const Rational lhs = a_ * a_;
    const Rational rhs = Rational(2) * b_ * b_;
    return lhs > rhs ? sa : sb;
}

std::pair<Rational, Rational> QSqrt2::rational_bounds(unsigned bits) const
{
    if (b_.is_zero()) {
        return {a_, a_};
    }
    const auto extra = static_cast<unsigned>(mpz_sizeinbase(b_.raw().get_num_mpz_t(), 2));
    const Enclosure root = sqrt2_enclosure(bits + extra);
    Rational lo = b_ * root.lower();
    Rational hi = b_ * root.upper();
    if (lo > hi) {
        std::swap(lo, hi);
    }
    return {a_ + lo, a_ + hi};
}

Enclosure QSqrt2::enclose(unsigned precision) const
{
    const auto [lo, hi] = rational_bounds(precision + 16);
    return Enclosure::outward(lo, hi, precision);
}

Integer QSqrt2::floor() const
{
    if (b_.is_zero()) {
        return a_.floor();
    }
    for (unsigned bits = 64;; bits *= 2) {
        const auto [lo, hi] = rational_bounds(bits);
        Integer f = lo.floor();
        if (f == hi.floor()) {
            return f;
        }
    }
}

Integer QSqrt2::ceil() const
{
    return Integer(-(-*this).floor());
}

QSqrt2 QSqrt2::inverse() const
{
    if (is_zero()) {
        throw Error(ErrorKind::DivisionByZero, "inverse of 0");
    }
    const Rational norm = a_ * a_ - Rational(2) * b_ * b_;
    return QSqrt2(a_ / norm, -b_ / norm);
}

QSqrt2 operator/(const QSqrt2& x, const QSqrt2& y)
{
    if (y.is_zero()) {
        throw Error(ErrorKind::DivisionByZero, "division by exact 0");
    }
    return x * y.inverse();
}

std::string QSqrt2::to_string() const
{
    if (b_.is_zero()) {
        return a_.to_string();
    }
    if (a_.is_zero()) {
        return b_.to_string() + "*sqrt2";
    }
    return a_.to_string() + " + " + b_.to_string() + "*sqrt2";
}

std::optional<Rational> exact_root(const Rational& q, unsigned long n)
{
    if (n == 0) {
        throw Error(ErrorKind::InvalidArgument, "zeroth root");
    }
    if (q.sign() < 0) {
        if (n % 2 == 0) {
            return std::nullopt;
        }
        auto r = exact_root(-q, n);
        if (r) {
            return -*r;
        }
        return std::nullopt;
    }
    Integer num;
    Integer den;
    if (mpz_root(num.get_mpz_t(), q.raw().get_num_mpz_t(), n) == 0 ||
        mpz_root(den.get_mpz_t(), q.raw().get_den_mpz_t(), n) == 0) {
        return std::nullopt;
    }
    return Rational(num, den);
}

Enclosure root_enclosure(const Rational& base, unsigned long n, unsigned precision)
{
    if (n == 0) {
        throw Error(ErrorKind::InvalidArgument, "root_enclosure needs n >= 1");
    }
    if (base.sign() <= 0) {
        throw Error(ErrorKind::InvalidArgument, "root_enclosure needs a positive base");
    }
    // floor(log2 base)/n rounded down bounds floor(log2 of the root) from below.
    const long fl = base.floor_log2_lower();
    const long nl = static_cast<long>(n);
    const long e = fl >= 0 ? fl / nl : -((-fl + nl - 1) / nl);
    const long k = static_cast<long>(precision) - e;
    const auto [r, exact] = root_scaled(base, n, k);
    Integer upper = exact ? r : Integer(r + 1);
    return Enclosure(Dyadic(r, -k), Dyadic(upper, -k), precision);
}

// ---------------------------------------------------------------- Scalar

Scalar Scalar::parse(std::string_view text)
{
    const std::string s = strip(text);
    if (!s.empty() && s[0] == '[') {
        const auto comma = s.find(',');
        const auto close = s.find(']');
        const auto at = s.find('@');
        if (comma == std::string::npos || close == std::string::npos || at == std::string::npos || !(comma < close && close < at)) {
            throw Error(ErrorKind::ParseError, "malformed enclosure '" + std::string(text) + "'");
        }
        const Rational lo = Rational::parse(s.substr(1, comma - 1));
        const Rational hi = Rational::parse(s.substr(comma + 1, close - comma - 1));
        const auto precision = static_cast<unsigned>(std::stoul(s.substr(at + 1)));
        return Scalar(Enclosure(Dyadic::from_rational(lo), Dyadic::from_rational(hi), precision));
    }
    return Scalar(QSqrt2::parse(s));
}

const QSqrt2& Scalar::exact() const
{
    if (const auto* e = exact_if()) {
        return *e;
    }
    throw Error(ErrorKind::InvalidArgument, "expected an exact value, got " + to_string());
}

unsigned Scalar::precision() const noexcept
{
    if (const auto* i = interval_if()) {
        return i->precision();
    }
    return 0;
}

Enclosure Scalar::enclose(unsigned precision) const
{
    if (const auto* e = exact_if()) {
        return e->enclose(precision);
    }
    return std::get<Enclosure>(v_);
}

Rational Scalar::lower_bound(unsigned precision) const
{
    if (const auto* e = exact_if(); e != nullptr && e->is_rational()) {
        return e->rational_part();
    }
    return enclose(precision).lower();
}

Rational Scalar::upper_bound(unsigned precision) const
{
    if (const auto* e = exact_if(); e != nullptr && e->is_rational()) {
        return e->rational_part();
    }
    return enclose(precision).upper();
}

Tri Scalar::is_rational() const
{
    if (const auto* e = exact_if()) {
        return e->is_rational() ? Tri::True : Tri::False;
    }
    return std::get<Enclosure>(v_).is_degenerate() ? Tri::True : Tri::Unknown;
}

std::optional<int> Scalar::sign() const
{
    if (const auto* e = exact_if()) {
        return e->sign();
    }
    const auto& i = std::get<Enclosure>(v_);
    if (i.lo().mantissa() > 0) {
        return 1;
    }
    if (i.hi().mantissa() < 0) {
        return -1;
    }
    if (i.lo().mantissa() == 0 && i.hi().mantissa() == 0) {
        return 0;
    }
    return std::nullopt;
}

std::string Scalar::to_string() const
{
    if (const auto* e = exact_if()) {
        return e->to_string();
    }
    return std::get<Enclosure>(v_).to_string();
}

namespace {

unsigned working_precision(const Scalar& a, const Scalar& b)
{
    const unsigned p = std::max(a.precision(), b.precision());
    return p == 0 ? default_precision : p;
}

template <class ExactOp, class IntervalOp>
Scalar binary(const Scalar& a, const Scalar& b, ExactOp exact_op, IntervalOp interval_op)
{
    if (a.is_exact() && b.is_exact()) {
        return Scalar(exact_op(a.exact(), b.exact()));
    }
    const unsigned p = working_precision(a, b);
    return Scalar(interval_op(a.enclose(p), b.enclose(p)));
}

} // namespace

Scalar operator+(const Scalar& a, const Scalar& b)
{
    return binary(a, b, std::plus<>(), std::plus<>());
}

Scalar operator-(const Scalar& a, const Scalar& b)
{
    return binary(a, b, std::minus<>(), std::minus<>());
}

Scalar operator*(const Scalar& a, const Scalar& b)
{
    return binary(a, b, std::multiplies<>(), std::multiplies<>());
}

Scalar operator/(const Scalar& a, const Scalar& b)
{
    if (const auto* e = b.exact_if(); e != nullptr && e->is_zero()) {
        throw Error(ErrorKind::DivisionByZero, "division by exact 0");
    }
    return binary(a, b, std::divides<>(), std::divides<>());
}

Scalar operator-(const Scalar& a)
{
    if (const auto* e = a.exact_if()) {
        return Scalar(-*e);
    }
    return Scalar(-*a.interval_if());
}

Scalar abs(const Scalar& a)
{
    if (const auto* e = a.exact_if()) {
        return Scalar(e->abs());
    }
    return Scalar(a.interval_if()->abs());
}

Scalar max(const Scalar& a, const Scalar& b)
{
    if (a.is_exact() && b.is_exact()) {
        return a.exact() < b.exact() ? b : a;
    }
    const unsigned p = working_precision(a, b);
    const Enclosure ea = a.enclose(p);
    const Enclosure eb = b.enclose(p);
    return Scalar(Enclosure(std::max(ea.lo(), eb.lo()), std::max(ea.hi(), eb.hi()), p));
}

Scalar min(const Scalar& a, const Scalar& b)
{
    return -max(-a, -b);
}

Scalar pow(const Scalar& base, unsigned long exponent)
{
    Scalar result(1);
    Scalar factor = base;
    while (exponent > 0) {
        if (exponent & 1UL) {
            result = result * factor;
        }
        exponent >>= 1U;
        if (exponent > 0) {
            factor = factor * factor;
        }
    }
    return result;
}

Tri cmp_gt(const Scalar& a, const Scalar& b)
{
    if (a.is_exact() && b.is_exact()) {
        return (a.exact() - b.exact()).sign() > 0 ? Tri::True : Tri::False;
    }
    const unsigned p = working_precision(a, b);
    const Enclosure ea = a.enclose(p);
    const Enclosure eb = b.enclose(p);
    if (ea.lo() > eb.hi()) {
        return Tri::True;
    }
    if (ea.hi() <= eb.lo()) {
        return Tri::False;
    }
    return Tri::Unknown;
}

Tri cmp_ge(const Scalar& a, const Scalar& b)
{
    switch (cmp_gt(b, a)) {
    case Tri::True: return Tri::False;
    case Tri::False: return Tri::True;
    case Tri::Unknown: return Tri::Unknown;
    }
    return Tri::Unknown;
}

namespace {

std::pair<Rational, Rational> cbrt_bounds(const Rational& q, unsigned precision)
{
    if (q.sign() < 0) {
        auto [lo, hi] = cbrt_bounds(-q, precision);
        return {-hi, -lo};
    }
    const long k = static_cast<long>(precision) + 4;
    const auto [r, exact] = root_scaled(q, 3, k);
    const Integer scale = pow2(static_cast<unsigned long>(k));
    return {Rational(r, scale), Rational(exact ? r : Integer(r + 1), scale)};
}

} // namespace

Scalar cube_root(const Scalar& v, unsigned precision)
{
    if (const auto* e = v.exact_if(); e != nullptr && e->is_rational()) {
        if (auto r = exact_root(e->rational_part(), 3)) {
            return Scalar(*r);
        }
    }
    const Enclosure enc = v.enclose(precision + 8);
    const Rational lo = cbrt_bounds(enc.lower(), precision).first;
    const Rational hi = cbrt_bounds(enc.upper(), precision).second;
    return Scalar(Enclosure::outward(lo, hi, precision));
}

std::string to_decimal(const Rational& q, int digits, bool round_up)
{
    Integer scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(digits));
    const Rational scaled = q * Rational(scale);
    Integer n = round_up ? scaled.ceil() : scaled.floor();
    const bool negative = n < 0;
    if (negative) {
        n = -n;
    }
    std::string s = n.get_str();
    if (digits > 0) {
        if (s.size() <= static_cast<std::size_t>(digits)) {
            s.insert(0, static_cast<std::size_t>(digits) + 1 - s.size(), '0');
        }
        s.insert(s.size() - static_cast<std::size_t>(digits), ".");
    }
    return negative ? "-" + s : s;
}

} // namespace orbex

#include "doctest.h"

#include <functional>
#include <random>

#include "orbex/scalar.hpp"

using namespace orbex;

namespace {

// Independent oracle: rational bisection on t^n = target over [lo, hi].
std::pair<Rational, Rational> bisect_root(const Rational& target, unsigned n, Rational lo, Rational hi, int steps)
{
    for (int i = 0; i < steps; ++i) {
        const Rational mid = (lo + hi) / Rational(2);
        if (pow(mid, n) > target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return {lo, hi};
}

bool contains(const Enclosure& e, const QSqrt2& v)
{
    return QSqrt2(e.lower()) <= v && v <= QSqrt2(e.upper());
}

Rational random_rational(std::mt19937_64& rng, long range = 20)
{
    std::uniform_int_distribution<long> num(-range, range);
    std::uniform_int_distribution<long> den(1, range);
    return Rational(Integer(num(rng)), Integer(den(rng)));
}

QSqrt2 random_qsqrt2(std::mt19937_64& rng)
{
    return QSqrt2(random_rational(rng), random_rational(rng));
}

} // namespace

TEST_CASE("conjugate identity and usual metric")
{
    const QSqrt2 s = QSqrt2::sqrt2();
    CHECK(Scalar(QSqrt2(1) + s) * Scalar(QSqrt2(1) - s) == Scalar(-1));
    CHECK(abs(Scalar(0) - Scalar(Rational(3, 2))) == Scalar(Rational(3, 2)));
}

TEST_CASE("sign of 3 - 2 sqrt2 agrees with a bisection enclosure")
{
    const auto [lo, hi] = bisect_root(Rational(2), 2, Rational(1), Rational(2), 30);
    REQUIRE(hi - lo < Rational(1, 1000000));
    // 2*hi < 3 certifies 3 - 2*sqrt2 > 0 independently of the exact routine.
    REQUIRE(Rational(2) * hi < Rational(3));
    const Scalar diff = Scalar(3) - Scalar(QSqrt2(0, 2));
    REQUIRE(diff.sign().has_value());
    CHECK(*diff.sign() == 1);
    CHECK(cmp_gt(diff, Scalar(0)) == Tri::True);
}

TEST_CASE("cmp_gt certifies or abstains")
{
    CHECK(cmp_gt(Scalar(QSqrt2::sqrt2()), Scalar(1)) == Tri::True);
    CHECK(cmp_gt(Scalar(1), Scalar(QSqrt2::sqrt2())) == Tri::False);
    const Scalar a = Enclosure::outward(Rational(140, 100), Rational(142, 100), 64);
    const Scalar b = Enclosure::outward(Rational(141, 100), Rational(143, 100), 64);
    CHECK(cmp_gt(a, b) == Tri::Unknown);
    CHECK(cmp_gt(b, a) == Tri::Unknown);
    const Scalar c = Enclosure::outward(Rational(2), Rational(3), 64);
    CHECK(cmp_gt(c, a) == Tri::True);
    CHECK(cmp_gt(a, c) == Tri::False);
    CHECK(cmp_gt(Scalar(QSqrt2(3, -2)), Scalar(0)) == Tri::True);
}

TEST_CASE("root_enclosure against bisection")
{
    const Enclosure one = root_enclosure(Rational(2), 1, 40);
    CHECK(one.lower() == Rational(2));
    CHECK(one.upper() == Rational(2));

    const Enclosure r2 = root_enclosure(Rational(2), 2, 20);
    const auto [lo2, hi2] = bisect_root(Rational(2), 2, Rational(1), Rational(2), 60);
    CHECK(r2.lower() <= lo2);
    CHECK(hi2 <= r2.upper());
    CHECK(r2.width() < Rational(1, 100000));
    CHECK(r2.contains(Rational(14142135, 10000000)));

    const Enclosure r10 = root_enclosure(Rational(2), 10, 20);
    const auto [lo10, hi10] = bisect_root(Rational(2), 10, Rational(1), Rational(2), 60);
    CHECK(r10.lower() <= lo10);
    CHECK(hi10 <= r10.upper());
    CHECK(r10.width() < Rational(1, 100000));
    CHECK(r10.contains(Rational(10717734, 10000000)));

    CHECK_THROWS_AS(root_enclosure(Rational(2), 0, 20), Error);
}

TEST_CASE("root_enclosure refinement never widens")
{
    for (const Rational& base : {Rational(2), Rational(3, 7), Rational(1000), Rational(1, 1024)}) {
        for (unsigned long n : {1UL, 2UL, 3UL, 7UL, 64UL}) {
            Enclosure prev = root_enclosure(base, n, 8);
            for (unsigned p = 9; p <= 200; p += 7) {
                const Enclosure next = root_enclosure(base, n, p);
                CHECK(prev.lower() <= next.lower());
                CHECK(next.upper() <= prev.upper());
                // width bound 2^(2-p) * value, value >= lower endpoint
                CHECK(next.width() <= pow(Rational(1, 2), p - 2) * next.upper());
                prev = next;
            }
        }
    }
}

TEST_CASE("division errors")
{
    CHECK_THROWS_AS(Scalar(1) / Scalar(0), Error);
    try {
        (void)(Scalar(1) / Scalar(0));
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DivisionByZero);
    }
    try {
        (void)(Scalar(1) / Scalar(Enclosure::outward(Rational(-1), Rational(1), 32)));
        FAIL("expected PossiblyZeroDivisor");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::PossiblyZeroDivisor);
    }
    CHECK(Scalar(1) / Scalar(QSqrt2::sqrt2()) == Scalar(QSqrt2(0, Rational(1, 2))));
}

TEST_CASE("enclosure soundness on random exact expressions")
{
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<int> op_pick(0, 5);
    const std::array<unsigned, 4> precisions{16, 40, 64, 128};
    int checked = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const unsigned p = precisions[static_cast<std::size_t>(trial) % precisions.size()];
        QSqrt2 exact = random_qsqrt2(rng);
        Scalar interval = exact.enclose(p);
        for (int depth = 0; depth < 3; ++depth) {
            const QSqrt2 rhs = random_qsqrt2(rng);
            const Scalar rhs_i = rhs.enclose(p);
            switch (op_pick(rng)) {
            case 0: exact = exact + rhs; interval = interval + rhs_i; break;
            case 1: exact = exact - rhs; interval = interval - rhs_i; break;
            case 2: exact = exact * rhs; interval = interval * rhs_i; break;
            case 3:
                if (rhs_i.interval_if()->contains_zero()) {
                    continue;
                }
                exact = exact / rhs;
                interval = interval / rhs_i;
                break;
            case 4: exact = -exact; interval = -interval; break;
            default: exact = exact.abs(); interval = abs(interval); break;
            }
        }
        REQUIRE(interval.interval_if() != nullptr);
        CHECK(contains(*interval.interval_if(), exact));
        ++checked;
    }
    CHECK(checked == 10000);
}

TEST_CASE("trichotomy and rationality on exact values")
{
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        const QSqrt2 a = random_qsqrt2(rng);
        const QSqrt2 b = i % 5 == 0 ? a : random_qsqrt2(rng);
        const bool gt = cmp_gt(a, b) == Tri::True;
        const bool lt = cmp_gt(b, a) == Tri::True;
        const bool eq = a == b;
        CHECK(int(gt) + int(lt) + int(eq) == 1);
        CHECK((Scalar(a).is_rational() == Tri::True) == a.sqrt2_part().is_zero());
    }
    CHECK(Scalar(Enclosure::outward(Rational(1), Rational(2), 32)).is_rational() == Tri::Unknown);
}

TEST_CASE("floor and fractional part of irrational values")
{
    CHECK(QSqrt2::sqrt2().floor() == 1);
    CHECK(QSqrt2(0, -1).floor() == -2);
    CHECK(QSqrt2(Rational(0), Rational(1000000)).floor() == 1414213);
    CHECK(QSqrt2(Rational(7, 2)).floor() == 3);
    CHECK(QSqrt2(Rational(-7, 2)).floor() == -4);
    const QSqrt2 f = QSqrt2(Rational(5), Rational(3)).frac();
    CHECK(f.sign() >= 0);
    CHECK(f < QSqrt2(1));
}

TEST_CASE("text round trip")
{
    std::mt19937_64 rng(99);
    for (int i = 0; i < 500; ++i) {
        const QSqrt2 v = random_qsqrt2(rng);
        CHECK(QSqrt2::parse(v.to_string()) == v);
        const Scalar enc = v.enclose(48);
        CHECK(Scalar::parse(enc.to_string()) == enc);
    }
    CHECK(QSqrt2(Rational(1, 2), Rational(-3, 4)).to_string() == "1/2 + -3/4*sqrt2");
    CHECK(QSqrt2::parse("sqrt2") == QSqrt2::sqrt2());
    CHECK(QSqrt2::parse("-sqrt2") == QSqrt2(0, -1));
    CHECK(QSqrt2::parse("1 - 2*sqrt2") == QSqrt2(1, -2));
    CHECK(Rational::parse("0.25") == Rational(1, 4));
    CHECK_THROWS_AS(Rational::parse("1/x"), Error);
}

TEST_CASE("cube roots")
{
    CHECK(cube_root(Scalar(8)) == Scalar(2));
    CHECK(cube_root(Scalar(Rational(-27, 64))) == Scalar(Rational(-3, 4)));
    const Scalar c = cube_root(Scalar(2));
    REQUIRE(c.interval_if() != nullptr);
    const Enclosure cubed = *c.interval_if() * *c.interval_if() * *c.interval_if();
    CHECK(cubed.contains(Rational(2)));
    const Scalar d = cube_root(Scalar(QSqrt2::sqrt2()));
    CHECK(cmp_gt(d, Scalar(Rational(112, 100))) == Tri::True);
    CHECK(cmp_gt(Scalar(Rational(113, 100)), d) == Tri::True);
}

TEST_CASE("decimal rendering rounds in the requested direction")
{
    CHECK(to_decimal(Rational(1, 3), 4, false) == "0.3333");
    CHECK(to_decimal(Rational(1, 3), 4, true) == "0.3334");
    CHECK(to_decimal(Rational(-1, 3), 2, false) == "-0.34");
    CHECK(to_decimal(Rational(128, 100), 2, false) == "1.28");
}

#include "doctest.h"

#include <random>

#include "orbex/analysis.hpp"

using namespace orbex;

namespace {

OrbitSystem doubling() { return OrbitSystem::iterated(MapExpr::scaling(Scalar(2))); }
OrbitSystem identity() { return OrbitSystem::iterated(MapExpr::identity()); }
OrbitSystem contraction() { return OrbitSystem::iterated(MapExpr::scaling(Scalar(Rational(1, 2)))); }
OrbitSystem example_3_2()
{
    return OrbitSystem::iterated(
        MapExpr::rationality_branch(MapExpr::constant(Scalar(2)), MapExpr::scaling(Scalar(2))));
}
OrbitSystem example_4_1() { return OrbitSystem::root_scaling(Rational(2)); }
OrbitSystem example_5_1() { return OrbitSystem::time_varying(Family{FamilyKind::FactorialBranch, {}}); }

MetricSpace line() { return MetricSpace::real_line(); }

ScaleBudget budget(unsigned workers = 1)
{
    ScaleBudget b;
    b.eps_max = QSqrt2(Rational(1, 2));
    b.ratio = Rational(1, 2);
    b.levels = 8;
    b.horizon = 64;
    b.samples = 32;
    b.seed = 7;
    b.workers = workers;
    return b;
}

Rational q(long p, long r = 1) { return Rational(Integer(p), Integer(r)); }

// Brute-force separation time for lambda*x on exact rationals.
std::optional<unsigned long> linear_oracle(const Rational& lambda, const Rational& x, const Rational& y,
                                           const Rational& d, unsigned long horizon)
{
    Rational diff = (x - y).abs();
    for (unsigned long n = 1; n <= horizon; ++n) {
        diff = diff * lambda.abs();
        if (diff > d)
            return n;
    }
    return std::nullopt;
}

void require_kind(ErrorKind k, auto&& f)
{
    try {
        f();
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == k);
    }
}

StructuredSet harmonic_plus() { return StructuredSet::harmonic(1); }
StructuredSet harmonic_minus() { return StructuredSet::harmonic(-1); }

} // namespace

TEST_CASE("separation_time examples")
{
    CHECK(separation_time(doubling(), line(), Point(0), Point(q(1, 100)), Scalar(1), 64) == 7ul);
    CHECK_FALSE(separation_time(identity(), line(), Point(0), Point(q(1, 3)), Scalar(q(1, 2)), 64).has_value());
    CHECK(separation_time(example_5_1(), line(), Point(1), Point(QSqrt2::sqrt2()), Scalar(10), 64) == 3ul);
    require_kind(ErrorKind::DegenerateInput,
                 [] { (void)separation_time(doubling(), line(), Point(1), Point(1), Scalar(1), 8); });
}

TEST_CASE("separation_time agrees with a brute-force oracle")
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<long> num(-200, 200);
    std::uniform_int_distribution<long> den(1, 300);
    std::uniform_int_distribution<int> lam(0, 3);
    const Rational lambdas[] = {q(2), q(3), q(-2), q(3, 2)};
    for (int i = 0; i < 500; ++i) {
        const Rational x = q(num(rng), den(rng));
        const Rational y = q(num(rng), den(rng));
        if (x == y)
            continue;
        const Rational l = lambdas[lam(rng)];
        const Rational d = q(1, static_cast<long>(den(rng)));
        const auto sys = OrbitSystem::iterated(MapExpr::scaling(Scalar(l)));
        CHECK(separation_time(sys, line(), Point(x), Point(y), Scalar(d), 40) == linear_oracle(l, x, y, d, 40));
    }
}

TEST_CASE("oe point verdict examples")
{
    const Verdict v = oe_point_verdict(doubling(), line(), Point(2), Scalar(1), budget());
    CHECK(v.status == Status::Supported);
    CHECK(v.witnesses.size() == 8);

    const Verdict id = oe_point_verdict(identity(), line(), Point(0), Scalar(q(1, 1000)), budget());
    REQUIRE(id.status == Status::Refuted);
    CHECK(id.certificate->kind == CertificateKind::UniformBound);
    CHECK(*id.certificate->bound == Scalar(1));

    const Verdict r = oe_point_verdict(example_4_1(), line(), Point(1), Scalar(1), budget());
    REQUIRE(r.status == Status::Refuted);
    CHECK(r.certificate->kind == CertificateKind::UniformBound);
    CHECK(r.certificate->level == Scalar(q(1, 4)));
    CHECK(*r.certificate->bound == Scalar(2));
}

TEST_CASE("oe point of set examples")
{
    const Verdict a = oe_point_of_set_verdict(doubling(), line(), Point(2), StructuredSet::closed(0, 1), Scalar(1),
                                              budget());
    REQUIRE(a.status == Status::Refuted);
    CHECK(a.certificate->kind == CertificateKind::EmptyBall);
    CHECK(a.certificate->level == Scalar(q(1, 2)));

    const Verdict h = oe_point_of_set_verdict(doubling(), line(), Point(0), harmonic_plus(), Scalar(1), budget());
    REQUIRE(h.status == Status::Supported);
    for (const auto& w : h.witnesses) {
        // Each witness is some 1/m inside the level.
        const QSqrt2& y = w.y.line_value();
        CHECK(y.is_rational());
        CHECK(y.rational_part().num() == 1);
        CHECK(cmp_gt(w.level, Scalar(y)) == Tri::True);
    }

    ScaleBudget fine = budget();
    fine.eps_max = QSqrt2(q(1, 10));
    const Verdict e = oe_point_of_set_verdict(doubling(), line(), Point(q(1, 5)), harmonic_plus(), Scalar(1), fine);
    REQUIRE(e.status == Status::Refuted);
    CHECK(e.certificate->kind == CertificateKind::EmptyBall);
    CHECK(e.certificate->level == Scalar(q(1, 40)));
}

TEST_CASE("empty ball is found below a coarse grid")
{
    ScaleBudget coarse = budget();
    coarse.levels = 2;
    const Verdict e =
        oe_point_of_set_verdict(doubling(), line(), Point(q(1, 5)), harmonic_plus(), Scalar(1), coarse);
    REQUIRE(e.status == Status::Refuted);
    CHECK_FALSE(e.certificate->on_grid);
    CHECK(verify_verdict(doubling(), line(), e));
}

TEST_CASE("roe verdict examples")
{
    const Verdict r = roe_point_verdict(example_4_1(), line(), Point(1), budget());
    CHECK(r.status == Status::Supported);
    for (const auto& w : r.witnesses)
        CHECK(w.threshold == w.level);

    const Verdict id = roe_point_verdict(identity(), line(), Point(0), budget());
    REQUIRE(id.status == Status::Refuted);
    CHECK(id.certificate->kind == CertificateKind::UniformBound);

    CHECK(roe_point_verdict(doubling(), line(), Point(0), budget()).status == Status::Supported);
}

TEST_CASE("roe of set examples")
{
    CHECK(roe_point_of_set_verdict(doubling(), line(), Point(0), harmonic_plus(), budget()).status ==
          Status::Supported);
    for (const auto& sys : {doubling(), identity(), example_3_2(), example_4_1()}) {
        const Verdict v = roe_point_of_set_verdict(sys, line(), Point(2), StructuredSet::closed(0, 1), budget());
        REQUIRE(v.status == Status::Refuted);
        CHECK(v.certificate->kind == CertificateKind::EmptyBall);
    }
    const Verdict id =
        roe_point_of_set_verdict(identity(), line(), Point(q(1, 2)), StructuredSet::closed(0, 1), budget());
    REQUIRE(id.status == Status::Refuted);
    CHECK(id.certificate->kind == CertificateKind::UniformBound);
}

TEST_CASE("expansive verdict examples")
{
    const Verdict c = expansive_verdict(example_3_2(), line(), {Point(q(1, 2)), Point(q(1, 3))}, Scalar(q(1, 2)), 64);
    REQUIRE(c.status == Status::Refuted);
    CHECK(c.certificate->kind == CertificateKind::CollapsedOrbit);
    CHECK(c.certificate->n0 == 1);

    const Verdict s = expansive_verdict(doubling(), line(), {Point(0), Point(q(1, 10)), Point(q(1, 7))}, Scalar(1), 32);
    REQUIRE(s.status == Status::Supported);
    REQUIRE(s.witnesses.size() == 3);
    // Pair (0, 1/10) separates at 4, (0, 1/7) at 3, (1/10, 1/7) at 5.
    CHECK(s.witnesses[0].n == *linear_oracle(q(2), q(0), q(1, 10), q(1), 32));
    CHECK(s.witnesses[1].n == *linear_oracle(q(2), q(0), q(1, 7), q(1), 32));
    CHECK(s.witnesses[2].n == *linear_oracle(q(2), q(1, 10), q(1, 7), q(1), 32));

    require_kind(ErrorKind::DegenerateInput, [] { (void)expansive_verdict(doubling(), line(), {Point(5)}, Scalar(1), 8); });
    require_kind(ErrorKind::DegenerateInput,
                 [] { (void)expansive_verdict(doubling(), line(), {Point(5), Point(5)}, Scalar(1), 8); });

    const Verdict rational = expansive_verdict(example_5_1(), line(), {Point(1), Point(q(1, 2))}, Scalar(1), 16);
    REQUIRE(rational.status == Status::Refuted);
    CHECK(rational.certificate->kind == CertificateKind::CollapsedOrbit);

    const Verdict id = expansive_verdict(identity(), line(), {Point(0), Point(q(1, 4))}, Scalar(q(1, 2)), 16);
    REQUIRE(id.status == Status::Refuted);
    CHECK(id.certificate->kind == CertificateKind::UniformBound);
}

TEST_CASE("cw expansive examples")
{
    const Verdict d = cw_expansive_verdict(doubling(), line(), StructuredSet::closed(0, QSqrt2(q(1, 10))), Scalar(1),
                                           budget());
    REQUIRE(d.status == Status::Supported);
    CHECK(d.witnesses[0].n == 4);
    CHECK(d.witnesses[0].separation == Scalar(q(16, 10)));

    const Verdict c = cw_expansive_verdict(contraction(), line(), StructuredSet::closed(0, 1), Scalar(2), budget());
    CHECK(c.status == Status::Refuted);

    const Verdict id = cw_expansive_verdict(identity(), line(), StructuredSet::closed(0, 1), Scalar(q(1, 2)), budget());
    REQUIRE(id.status == Status::Supported);
    CHECK(id.witnesses[0].n == 1);

    const Verdict b = cw_expansive_verdict(example_3_2(), line(), StructuredSet::closed(0, 1), Scalar(q(1, 2)), budget());
    bool noted = false;
    for (const auto& s : b.diagnostics)
        noted = noted || s.rfind("definition-domain", 0) == 0;
    CHECK(noted);

    require_kind(ErrorKind::DegenerateInput, [] {
        (void)cw_expansive_verdict(doubling(), line(), StructuredSet::closed(1, 1), Scalar(1), budget());
    });
}

TEST_CASE("oe set map examples")
{
    const std::vector<Point> cands = {Point(0), Point(q(1, 2)), Point(q(-1, 3)), Point(q(1, 4)), Point(1)};
    const auto empty = StructuredSet::set_intersection({harmonic_plus(), harmonic_minus()});
    for (const auto& e : oe_set_map(doubling(), line(), empty, cands, Scalar(1), budget())) {
        REQUIRE(e.verdict.status == Status::Refuted);
        CHECK(e.verdict.certificate->kind == CertificateKind::EmptyBall);
    }

    std::vector<StructuredSet> family;
    for (long i = 1; i <= 6; ++i) {
        family.push_back(StructuredSet::finite({QSqrt2(q(-1, i)), QSqrt2(q(1, i))}));
        const Verdict v = oe_point_of_set_verdict(doubling(), line(), Point(0), family.back(), Scalar(1), budget());
        REQUIRE(v.status == Status::Refuted);
        CHECK(v.certificate->kind == CertificateKind::EmptyBall);
        CHECK(cmp_ge(Scalar(q(1, i)), v.certificate->level) == Tri::True); // open ball excludes +-1/i
    }
    const auto all = StructuredSet::set_union({harmonic_plus(), harmonic_minus()});
    CHECK(oe_point_of_set_verdict(doubling(), line(), Point(0), all, Scalar(1), budget()).status == Status::Supported);

    const auto a = harmonic_plus();
    const auto b = StructuredSet::set_union({a, StructuredSet::finite({QSqrt2(0)})});
    const auto ma = oe_set_map(doubling(), line(), a, cands, Scalar(1), budget());
    const auto mb = oe_set_map(doubling(), line(), b, cands, Scalar(1), budget());
    for (std::size_t i = 0; i < cands.size(); ++i)
        if (ma[i].verdict.status == Status::Supported)
            CHECK(mb[i].verdict.status == Status::Supported);
}

TEST_CASE("halving transform examples")
{
    const auto w = halving_transform(doubling(), line(), Point(0), Point(q(1, 10)), Point(q(-1, 10)), 3, Scalar(1));
    CHECK(w.separation == Scalar(q(8, 10)));
    CHECK(w.threshold == Scalar(q(1, 2)));
    require_kind(ErrorKind::NotAWitness, [] {
        (void)halving_transform(doubling(), line(), Point(0), Point(q(1, 10)), Point(q(1, 10)), 3, Scalar(1));
    });

    // Irrational pair under the rationality-branch map.
    const QSqrt2 r2 = QSqrt2::sqrt2();
    const Point x(QSqrt2(q(0), q(1, 2)));
    const Point y(r2), z(QSqrt2(q(0), q(1, 4)));
    const auto n = separation_time(example_3_2(), line(), y, z, Scalar(1), 64);
    REQUIRE(n.has_value());
    const auto h = halving_transform(example_3_2(), line(), x, y, z, *n, Scalar(1));
    CHECK(cmp_gt(h.separation, Scalar(q(1, 2))) == Tri::True);
}

TEST_CASE("halving lemma on random triples")
{
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<long> num(-100, 100);
    std::uniform_int_distribution<long> den(1, 50);
    int done = 0;
    while (done < 1000) {
        const Point x(q(num(rng), den(rng))), y(q(num(rng), den(rng))), z(q(num(rng), den(rng)));
        if (y == z)
            continue;
        const Scalar d_a(q(1, den(rng)));
        const auto n = separation_time(doubling(), line(), y, z, d_a, 64);
        REQUIRE(n.has_value());
        const auto w = halving_transform(doubling(), line(), x, y, z, *n, d_a);
        CHECK((w.y == y || w.y == z));
        CHECK(verify_witness(doubling(), line(), x, w, 256));
        ++done;
    }
}

TEST_CASE("transport along conjugacies")
{
    const Verdict v = oe_point_verdict(doubling(), line(), Point(q(1, 3)), Scalar(1), budget());
    REQUIRE(v.status == Status::Supported);
    const auto& w = v.witnesses[2];

    const auto shift = transport_conjugacy(w, Point(q(1, 3)), doubling(), MapExpr::affine(Scalar(1), Scalar(1)),
                                           MapExpr::affine(Scalar(1), Scalar(-1)), ModulusFn::scaled(1), line());
    CHECK(shift.separation == w.separation);
    CHECK(shift.n == w.n);

    const auto scaled = transport_conjugacy(w, Point(q(1, 3)), doubling(), MapExpr::scaling(Scalar(2)),
                                            MapExpr::scaling(Scalar(q(1, 2))), ModulusFn::scaled(2), line());
    CHECK(scaled.separation == w.separation * Scalar(2));
    CHECK(scaled.threshold == Scalar(2));

    const auto cubic = transport_conjugacy(w, Point(q(1, 3)), doubling(), MapExpr::cubic(), MapExpr::cube_root(),
                                           ModulusFn::cube_quarter(), line());
    CHECK(cmp_ge(cubic.separation, Scalar(q(1, 4))) == Tri::True);
    // |a^3 - b^3| >= |a - b|^3 / 4 for the raw separation too.
    CHECK(cmp_ge(cubic.separation, pow(w.separation, 3) * Scalar(q(1, 4))) == Tri::True);

    SeparationWitness bogus = w;
    bogus.threshold = Scalar(1000);
    require_kind(ErrorKind::ModulusViolated, [&] {
        (void)transport_conjugacy(bogus, Point(q(1, 3)), doubling(), MapExpr::scaling(Scalar(2)),
                                  MapExpr::scaling(Scalar(q(1, 2))), ModulusFn::scaled(2), line());
    });
}

TEST_CASE("product witnesses")
{
    const Verdict v = oe_point_verdict(doubling(), line(), Point(0), Scalar(1), budget());
    REQUIRE(v.status == Status::Supported);
    const auto& w = v.witnesses[0];
    const auto p = product_witness(w, Point(0), Point(q(1, 3)), doubling(), doubling(), line(), line(),
                                   GammaFn::ratio_bound());
    CHECK(cmp_ge(p.separation, Scalar(q(1, 2))) == Tri::True);
    CHECK(p.threshold == Scalar(q(1, 2)));

    const auto capped = product_witness(w, Point(0), Point(q(1, 3)), doubling(), doubling(), line(), line(),
                                        GammaFn::capped(q(1, 4)));
    CHECK(capped.separation == Scalar(q(1, 4)));

    const auto second = product_witness(w, Point(0), Point(q(1, 3)), doubling(), doubling(), line(), line(),
                                        GammaFn::ratio_bound(), true);
    CHECK(second.separation == p.separation);
    CHECK(second.y == Point::concat(Point(q(1, 3)), w.y));
}

TEST_CASE("not-OE certificates")
{
    CHECK(*not_oe_certificate(example_4_1(), Point(1))->bound == Scalar(2));
    CHECK(*not_oe_certificate(identity(), Point(0))->bound == Scalar(1));
    CHECK(*not_oe_certificate(contraction(), Point(0))->bound == Scalar(q(1, 2)));
    CHECK_FALSE(not_oe_certificate(doubling(), Point(0)).has_value());
}

TEST_CASE("witness density")
{
    CHECK(witness_density(doubling(), line(), Point(0), QSqrt2(q(1, 10)), Scalar(1), 64, 100, 3) == Rational(1));
    CHECK(witness_density(identity(), line(), Point(0), QSqrt2(q(1, 10)), Scalar(1), 64, 100, 3) == Rational(0));

    const Point x(q(1, 3));
    const auto pts = sample_ball(line(), x, QSqrt2(q(1, 10)), 40, 9);
    long irrational = 0;
    for (const auto& p : pts)
        irrational += p.line_value().is_rational() ? 0 : 1;
    REQUIRE(irrational > 0);
    CHECK(witness_density(example_3_2(), line(), x, QSqrt2(q(1, 10)), Scalar(1), 64, 40, 9) ==
          Rational(irrational) / Rational(static_cast<long>(pts.size())));
}

TEST_CASE("law checks")
{
    LawInstance in{doubling(), line(), {}, {}, Scalar(1), budget()};
    for (long i = 1; i <= 4; ++i)
        in.sets.push_back(StructuredSet::finite({QSqrt2(q(-1, i)), QSqrt2(q(1, i))}));
    in.candidates = {Point(0), Point(q(1, 2)), Point(q(-1, 2)), Point(q(1, 3)), Point(q(-1, 3))};
    const auto u = law_check("union-monotonicity", in);
    CHECK(u.holds_at_scale);
    CHECK(u.checked == 5);

    LawInstance chain{doubling(), line(), {}, {}, Scalar(1), budget()};
    for (long k = 0; k < 10; ++k)
        chain.candidates.push_back(Point(q(k, 7)));
    const auto c = law_check("implication-chain", chain);
    CHECK(c.holds_at_scale);
    CHECK(c.agreeing == 10);

    LawInstance me{doubling(), line(), {}, {}, Scalar(1), budget()};
    for (long k = 0; k < 6; ++k)
        me.candidates.push_back(Point(q(2 * k - 5, 3)));
    const auto m = law_check("metric-equivalence", me);
    CHECK(m.holds_at_scale);
    CHECK(m.agreeing == 6);

    LawInstance fu{doubling(), line(), {harmonic_plus(), harmonic_minus()}, {Point(0), Point(q(1, 5))}, Scalar(1),
                   budget()};
    CHECK(law_check("finite-union", fu).holds_at_scale);
    CHECK(law_check("intersection-monotonicity", fu).holds_at_scale);

    require_kind(ErrorKind::UnknownLaw, [&] { (void)law_check("no-such-law", in); });
    CHECK(law_ids().size() == 10);
}

TEST_CASE("verdicts re-verify")
{
    const auto b = budget();
    std::vector<std::pair<Verdict, OrbitSystem>> vs = {
        {oe_point_verdict(doubling(), line(), Point(2), Scalar(1), b), doubling()},
        {oe_point_verdict(example_4_1(), line(), Point(1), Scalar(1), b), example_4_1()},
        {roe_point_verdict(example_4_1(), line(), Point(QSqrt2::sqrt2()), b), example_4_1()},
        {oe_point_of_set_verdict(doubling(), line(), Point(0), harmonic_plus(), Scalar(1), b), doubling()},
        {expansive_verdict(example_3_2(), line(), {Point(q(1, 2)), Point(q(1, 3))}, Scalar(q(1, 2)), 64),
         example_3_2()},
        {oe_point_verdict(example_5_1(), line(), Point(QSqrt2::sqrt2()), Scalar(1), b), example_5_1()},
    };
    for (const auto& [v, sys] : vs) {
        CHECK(v.status != Status::Inconclusive);
        CHECK(verify_verdict(sys, line(), v));
    }
}

TEST_CASE("worker count does not change results")
{
    const Verdict a = oe_point_verdict(example_5_1(), line(), Point(q(1, 3)), Scalar(1), budget(1));
    const Verdict b = oe_point_verdict(example_5_1(), line(), Point(q(1, 3)), Scalar(1), budget(4));
    REQUIRE(a.witnesses.size() == b.witnesses.size());
    for (std::size_t i = 0; i < a.witnesses.size(); ++i) {
        CHECK(a.witnesses[i].y == b.witnesses[i].y);
        CHECK(a.witnesses[i].n == b.witnesses[i].n);
        CHECK(a.witnesses[i].sample_index == b.witnesses[i].sample_index);
    }
}

TEST_CASE("OE constants are monotone")
{
    for (long k = -3; k <= 3; ++k) {
        const Point x(q(k, 4));
        if (oe_point_verdict(doubling(), line(), x, Scalar(2), budget()).status == Status::Supported) {
            CHECK(oe_point_verdict(doubling(), line(), x, Scalar(1), budget()).status == Status::Supported);
            CHECK(oe_point_verdict(doubling(), line(), x, Scalar(q(1, 10)), budget()).status == Status::Supported);
        }
    }
}

TEST_CASE("budget validation")
{
    ScaleBudget b = budget();
    b.ratio = Rational(1);
    require_kind(ErrorKind::InvalidArgument, [&] { b.validate(); });
    b = budget();
    b.explicit_levels = std::vector<QSqrt2>{QSqrt2(q(1, 4)), QSqrt2(q(1, 2))};
    require_kind(ErrorKind::InvalidArgument, [&] { b.validate(); });
    b = budget();
    CHECK(b.grid().size() == 8);
    CHECK(b.level(8) == QSqrt2(q(1, 512)));
}

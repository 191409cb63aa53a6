#include "orbex/catalog.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace orbex {

namespace {

Rational q(long p, long r = 1) { return Rational(Integer(p), Integer(r)); }
QSqrt2 root2(long p, long r = 1) { return QSqrt2(Rational(0), q(p, r)); }

OrbitSystem doubling() { return OrbitSystem::iterated(MapExpr::scaling(Scalar(2))); }

ScaleBudget default_budget()
{
    ScaleBudget b;
    b.eps_max = QSqrt2(q(1, 2));
    b.ratio = q(1, 2);
    b.levels = 8;
    b.horizon = 64;
    b.samples = 32;
    b.seed = 0;
    return b;
}

ExpectedRow row(std::string label, QueryKind kind, std::vector<Point> points, std::optional<StructuredSet> set,
                std::optional<Scalar> threshold, Status expected, Provenance prov)
{
    ExpectedRow r;
    r.label = std::move(label);
    r.query.kind = kind;
    r.query.points = std::move(points);
    r.query.set = std::move(set);
    r.query.threshold = std::move(threshold);
    r.expected = expected;
    r.provenance = prov;
    r.each_point = (kind == QueryKind::Oe || kind == QueryKind::Roe || kind == QueryKind::OeOfSet ||
                    kind == QueryKind::RoeOfSet) &&
                   r.query.points.size() > 1;
    return r;
}

ExpectedRow refuted(ExpectedRow r, CertificateKind k)
{
    r.certificate = k;
    return r;
}

std::vector<Point> torus_grid()
{
    std::vector<Point> pts;
    for (long i = 0; i < 5; ++i)
        for (long j = 0; j < 5; ++j)
            pts.push_back(Point{Scalar(q(i, 5)), Scalar(q(j, 5))});
    return pts;
}

std::vector<CatalogEntry> build()
{
    using P = Provenance;
    using K = QueryKind;
    const auto line = MetricSpace::real_line();
    std::vector<CatalogEntry> out;

    {
        CatalogEntry e{"example-3.1", doubling(), line, {}, {}, "f(x) = 2x on the line; A = [0, 1]",
                       default_budget()};
        const auto a = StructuredSet::closed(0, 1);
        e.subsets = {{"A", a}};
        e.expected.push_back(row("x=2 is an OE point of the line", K::Oe, {Point(2)}, std::nullopt, Scalar(1),
                                 Status::Supported, P::Published));
        auto r = refuted(row("x=2 is not an OE point of A", K::OeOfSet, {Point(2)}, a, Scalar(1), Status::Refuted,
                             P::Published),
                         CertificateKind::EmptyBall);
        r.level = Scalar(q(1, 2));
        e.expected.push_back(std::move(r));
        out.push_back(std::move(e));
    }
    {
        const auto sys = OrbitSystem::iterated(
            MapExpr::rationality_branch(MapExpr::constant(Scalar(2)), MapExpr::scaling(Scalar(2))));
        CatalogEntry e{"example-3.2", sys, line, {}, {},
                       "f = 2 on rationals, 2x on irrationals; not a homeomorphism", default_budget()};
        auto r = refuted(row("rational pair collapses", K::Expansive, {Point(q(1, 2)), Point(q(1, 3))}, std::nullopt,
                             Scalar(q(1, 2)), Status::Refuted, P::Published),
                         CertificateKind::CollapsedOrbit);
        r.n0 = 1;
        e.expected.push_back(std::move(r));
        std::vector<Point> grid;
        for (long k = -5; k < 5; ++k) {
            grid.emplace_back(q(k, 3));
            grid.emplace_back(QSqrt2(q(k, 3)) + root2(1, 7));
        }
        e.expected.push_back(
            row("OE at 20 grid points", K::Oe, grid, std::nullopt, Scalar(1), Status::Supported, P::Published));
        e.expected.push_back(row("ROE at rational and irrational points", K::Roe, {Point(1), Point(root2(1))},
                                 std::nullopt, std::nullopt, Status::Supported, P::Published));
        out.push_back(std::move(e));
    }
    {
        auto b = default_budget();
        b.eps_max = QSqrt2(q(1, 10));
        CatalogEntry e{"example-3.3", doubling(), line, {}, {}, "A = {1/n}, B = {-1/n}, A and B disjoint", b};
        const auto a = StructuredSet::harmonic(1);
        const auto bb = StructuredSet::harmonic(-1);
        const auto ab = StructuredSet::set_intersection({a, bb});
        e.subsets = {{"A", a}, {"B", bb}, {"A&B", ab}};
        e.expected.push_back(refuted(row("OE(A&B) is empty", K::OeOfSet,
                                         {Point(0), Point(q(1, 2)), Point(q(-1, 2)), Point(q(1, 5)), Point(1)}, ab,
                                         Scalar(1), Status::Refuted, P::Published),
                                     CertificateKind::EmptyBall));
        e.expected.push_back(
            row("0 is an OE point of A", K::OeOfSet, {Point(0)}, a, Scalar(1), Status::Supported, P::Published));
        e.expected.push_back(
            row("0 is an OE point of B", K::OeOfSet, {Point(0)}, bb, Scalar(1), Status::Supported, P::Published));
        auto r = refuted(row("1/5 is isolated in A", K::OeOfSet, {Point(q(1, 5))}, a, Scalar(1), Status::Refuted,
                             P::Derived),
                         CertificateKind::EmptyBall);
        r.level = Scalar(q(1, 40));
        e.expected.push_back(std::move(r));
        out.push_back(std::move(e));
    }
    {
        CatalogEntry e{"union-family", doubling(), line, {}, {}, "A_i = {-1/i, 1/i}; the union has 0 as a limit point",
                       default_budget()};
        for (long i = 1; i <= 5; ++i) {
            const auto ai = StructuredSet::finite({QSqrt2(q(-1, i)), QSqrt2(q(1, i))});
            e.subsets.push_back({"A_" + std::to_string(i), ai});
            e.expected.push_back(refuted(row("0 is not an OE point of A_" + std::to_string(i), K::OeOfSet, {Point(0)},
                                             ai, Scalar(1), Status::Refuted, P::Published),
                                         CertificateKind::EmptyBall));
        }
        const auto all = StructuredSet::set_union({StructuredSet::harmonic(1), StructuredSet::harmonic(-1)});
        e.subsets.push_back({"union", all});
        e.expected.push_back(
            row("0 is an OE point of the union", K::OeOfSet, {Point(0)}, all, Scalar(1), Status::Supported, P::Published));
        out.push_back(std::move(e));
    }
    {
        CatalogEntry e{"example-4.1", OrbitSystem::root_scaling(q(2)), line, {}, {}, "O_n(x) = 2^(1/n) x",
                       default_budget()};
        e.expected.push_back(row("ROE at 1, sqrt2, -3", K::Roe, {Point(1), Point(root2(1)), Point(-3)}, std::nullopt,
                                 std::nullopt, Status::Supported, P::Published));
        auto r = refuted(row("not OE at 1", K::Oe, {Point(1)}, std::nullopt, Scalar(1), Status::Refuted, P::Published),
                         CertificateKind::UniformBound);
        r.bound = Scalar(2);
        r.level = Scalar(q(1, 4));
        e.expected.push_back(std::move(r));
        out.push_back(std::move(e));
    }
    {
        CatalogEntry e{"example-5.1", OrbitSystem::time_varying(Family{FamilyKind::FactorialBranch, {}}), line, {}, {},
                       "f_n = n+1 on rationals, (n+1)x on irrationals; F_n = f_n o ... o f_0", default_budget()};
        ExpectedRow t = row("separation time of 1 and sqrt2 at d=10", K::Oe, {Point(1), Point(root2(1))}, std::nullopt,
                            Scalar(10), Status::Supported, P::Derived);
        t.kind = RowKind::SeparationTime;
        t.each_point = false;
        t.time = 3;
        e.expected.push_back(std::move(t));
        e.expected.push_back(refuted(row("rational pairs collapse", K::Expansive, {Point(1), Point(q(1, 2))},
                                         std::nullopt, Scalar(1), Status::Refuted, P::Published),
                                     CertificateKind::CollapsedOrbit));
        std::vector<Point> pts;
        for (long k = 1; k <= 5; ++k) {
            pts.emplace_back(q(k, 2));
            pts.emplace_back(root2(k, 3));
        }
        e.expected.push_back(
            row("OE at 10 points", K::Oe, pts, std::nullopt, Scalar(1), Status::Supported, P::Published));
        out.push_back(std::move(e));
    }
    {
        CatalogEntry e{"doubling-line", doubling(), line, {}, {}, "f(x) = 2x", default_budget()};
        const std::vector<Point> pts = {Point(0), Point(q(1, 3)), Point(root2(1))};
        e.expected.push_back(row("OE", K::Oe, pts, std::nullopt, Scalar(1), Status::Supported, P::Derived));
        e.expected.push_back(row("ROE", K::Roe, pts, std::nullopt, std::nullopt, Status::Supported, P::Derived));
        e.expected.push_back(row("expansive on three points", K::Expansive, {Point(0), Point(q(1, 10)), Point(q(1, 7))},
                                 std::nullopt, Scalar(1), Status::Supported, P::Derived));
        e.expected.push_back(row("CW on [0, 1/10]", K::CwExpansive, {}, StructuredSet::closed(0, QSqrt2(q(1, 10))),
                                 Scalar(1), Status::Supported, P::Derived));
        out.push_back(std::move(e));
    }
    {
        // Arc distances never exceed 1/2, so ROE levels start below that.
        auto b = default_budget();
        b.eps_max = QSqrt2(q(1, 4));
        CatalogEntry e{"doubling-circle", OrbitSystem::iterated(MapExpr::circle_linear(2)), MetricSpace::circle(), {},
                       {}, "x -> 2x mod 1", b};
        const std::vector<Point> pts = {Point(0), Point(q(1, 3)), Point(root2(1) - QSqrt2(1))};
        e.expected.push_back(row("OE", K::Oe, pts, std::nullopt, Scalar(q(1, 5)), Status::Supported, P::Derived));
        e.expected.push_back(row("ROE", K::Roe, pts, std::nullopt, std::nullopt, Status::Supported, P::Derived));
        e.expected.push_back(row("expansive on three points", K::Expansive, {Point(0), Point(q(1, 5)), Point(q(1, 3))},
                                 std::nullopt, Scalar(q(1, 5)), Status::Supported, P::Derived));
        out.push_back(std::move(e));
    }
    {
        auto b = default_budget();
        b.horizon = 30;
        CatalogEntry e{"cat-map-torus", OrbitSystem::iterated(MapExpr::torus_linear({{{2, 1}, {1, 1}}})),
                       MetricSpace::torus2(), {}, {}, "[[2,1],[1,1]] on the torus", b};
        e.expected.push_back(row("expansive on the 5x5 grid", K::Expansive, torus_grid(), std::nullopt,
                                 Scalar(q(1, 10)), Status::Supported, P::Derived));
        e.expected.push_back(row("OE", K::Oe, {Point{Scalar(0), Scalar(0)}, Point{Scalar(q(1, 3)), Scalar(root2(1, 3))}},
                                 std::nullopt, Scalar(q(1, 10)), Status::Supported, P::Derived));
        out.push_back(std::move(e));
    }
    {
        CatalogEntry e{"contraction-half", OrbitSystem::iterated(MapExpr::scaling(Scalar(q(1, 2)))), line, {}, {},
                       "f(x) = x/2", default_budget()};
        auto oe = refuted(row("not OE", K::Oe, {Point(0)}, std::nullopt, Scalar(1), Status::Refuted, P::Derived),
                          CertificateKind::UniformBound);
        oe.bound = Scalar(q(1, 2));
        e.expected.push_back(std::move(oe));
        e.expected.push_back(refuted(row("not ROE", K::Roe, {Point(0)}, std::nullopt, std::nullopt, Status::Refuted,
                                         P::Trivial),
                                     CertificateKind::UniformBound));
        e.expected.push_back(refuted(row("not expansive", K::Expansive, {Point(0), Point(q(1, 4))}, std::nullopt,
                                         Scalar(q(1, 2)), Status::Refuted, P::Trivial),
                                     CertificateKind::UniformBound));
        e.expected.push_back(refuted(row("not CW on [0, 1] at c=2", K::CwExpansive, {}, StructuredSet::closed(0, 1),
                                         Scalar(2), Status::Refuted, P::Trivial),
                                     CertificateKind::UniformBound));
        out.push_back(std::move(e));
    }
    {
        CatalogEntry e{"identity", OrbitSystem::iterated(MapExpr::identity()), line, {}, {}, "f(x) = x",
                       default_budget()};
        auto oe = refuted(row("not OE", K::Oe, {Point(0)}, std::nullopt, Scalar(1), Status::Refuted, P::Trivial),
                          CertificateKind::UniformBound);
        oe.bound = Scalar(1);
        e.expected.push_back(std::move(oe));
        e.expected.push_back(refuted(row("not ROE", K::Roe, {Point(0)}, std::nullopt, std::nullopt, Status::Refuted,
                                         P::Trivial),
                                     CertificateKind::UniformBound));
        e.expected.push_back(refuted(row("not expansive", K::Expansive, {Point(0), Point(q(1, 4))}, std::nullopt,
                                         Scalar(q(1, 2)), Status::Refuted, P::Trivial),
                                     CertificateKind::UniformBound));
        out.push_back(std::move(e));
    }
    return out;
}

const std::vector<CatalogEntry>& registry()
{
    static const std::vector<CatalogEntry> entries = build();
    return entries;
}

std::string describe(const Verdict& v)
{
    std::string s(to_string(v.status));
    if (v.certificate)
        s += "(" + std::string(to_string(v.certificate->kind)) + ")";
    return s;
}

bool row_matches(const ExpectedRow& row, const Verdict& v)
{
    if (v.status != row.expected)
        return false;
    if (row.certificate && (!v.certificate || v.certificate->kind != *row.certificate))
        return false;
    if (row.bound && (!v.certificate || !v.certificate->bound || !(*v.certificate->bound == *row.bound)))
        return false;
    if (row.level && (!v.certificate || !(v.certificate->level == *row.level)))
        return false;
    if (row.n0 && (!v.certificate || v.certificate->n0 != *row.n0))
        return false;
    return true;
}

} // namespace

std::string_view to_string(Provenance p) noexcept
{
    switch (p) {
    case Provenance::Published: return "published";
    case Provenance::Trivial: return "trivial";
    case Provenance::Derived: return "derived";
    }
    return "?";
}

const std::vector<std::string>& catalog_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& e : registry())
            n.push_back(e.name);
        return n;
    }();
    return names;
}

const CatalogEntry& catalog_get(const std::string& name)
{
    for (const auto& e : registry())
        if (e.name == name)
            return e;
    throw Error(ErrorKind::UnknownEntry, "no catalog entry named '" + name + "'");
}

RowResult run_row(const CatalogEntry& entry, const ExpectedRow& row, const ScaleBudget& budget)
{
    RowResult r;
    if (row.kind == RowKind::SeparationTime) {
        r.time = separation_time(entry.system, entry.space, row.query.points.at(0), row.query.points.at(1),
                                 *row.query.threshold, budget.horizon, budget.precision);
        r.matches = r.time == row.time;
        r.observed = r.time ? std::to_string(*r.time) : "none";
        return r;
    }
    std::vector<Query> queries;
    if (row.each_point) {
        for (const auto& p : row.query.points) {
            Query q = row.query;
            q.points = {p};
            queries.push_back(std::move(q));
        }
    } else {
        queries.push_back(row.query);
    }
    r.matches = true;
    std::map<std::string, int> counts;
    for (const auto& q : queries) {
        r.verdicts.push_back(run_query(entry.system, entry.space, q, budget));
        r.matches = r.matches && row_matches(row, r.verdicts.back());
        ++counts[describe(r.verdicts.back())];
    }
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, n] : counts) {
        os << (first ? "" : ", ") << k;
        if (queries.size() > 1)
            os << " x" << n;
        first = false;
    }
    r.observed = os.str();
    return r;
}

const std::vector<NamedLaw>& law_suite()
{
    static const std::vector<NamedLaw> suite = [] {
        std::vector<NamedLaw> s;
        const auto line = MetricSpace::real_line();
        ScaleBudget b = default_budget();
        b.levels = 6;

        auto base = [&](OrbitSystem sys, MetricSpace sp, Scalar d) {
            return LawInstance{std::move(sys), std::move(sp), {},           {},           std::move(d), b, 2,
                               GammaFn::ratio_bound(), std::nullopt, std::nullopt, std::nullopt, ModulusFn{}};
        };

        LawInstance um = base(doubling(), line, Scalar(1));
        for (long i = 1; i <= 4; ++i)
            um.sets.push_back(StructuredSet::finite({QSqrt2(q(-1, i)), QSqrt2(q(1, i))}));
        um.candidates = {Point(0), Point(q(1, 2)), Point(q(-1, 2)), Point(q(1, 3)), Point(q(-1, 3))};
        s.push_back({"union-monotonicity", "union-family", um});

        LawInstance im = base(doubling(), line, Scalar(1));
        im.sets = {StructuredSet::harmonic(1), StructuredSet::harmonic(-1)};
        im.candidates = {Point(0), Point(q(1, 2)), Point(q(-1, 2)), Point(q(1, 5))};
        s.push_back({"intersection-monotonicity", "example-3.3", im});
        s.push_back({"finite-union", "example-3.3", im});

        LawInstance su = base(doubling(), line, Scalar(1));
        su.sets = {StructuredSet::open(0, 1), StructuredSet::open(1, 2)};
        su.candidates = {Point(q(1, 2)), Point(q(3, 2)), Point(root2(1))};
        s.push_back({"oe-set-union", "doubling-line", su});

        LawInstance cl = base(doubling(), line, Scalar(1));
        cl.sets = {StructuredSet::open(0, 1)};
        cl.candidates = {Point(0), Point(q(1, 2)), Point(1)};
        s.push_back({"closure", "doubling-line", cl});

        LawInstance ch = base(doubling(), line, Scalar(1));
        for (long k = 0; k < 10; ++k)
            ch.candidates.emplace_back(q(k, 7));
        s.push_back({"implication-chain", "doubling-line", ch});

        LawInstance me = base(doubling(), line, Scalar(1));
        for (long k = 0; k < 10; ++k) {
            me.candidates.emplace_back(q(k - 5, 3));
            me.candidates.emplace_back(QSqrt2(q(k - 5, 3)) + root2(1, 5));
        }
        s.push_back({"metric-equivalence", "doubling-line", me});

        LawInstance pw = base(OrbitSystem::iterated(MapExpr::torus_linear({{{2, 1}, {1, 1}}})), MetricSpace::torus2(),
                              Scalar(q(1, 10)));
        pw.budget.horizon = 30;
        pw.candidates = torus_grid();
        pw.power = 2;
        s.push_back({"iterate-power", "cat-map-torus", pw});

        LawInstance rs = base(doubling(), line, Scalar(1));
        rs.carrier = StructuredSet::interval(QSqrt2(0), std::nullopt, true, false);
        for (long k = 1; k <= 10; ++k)
            rs.candidates.emplace_back(q(k, 3));
        s.push_back({"restriction", "doubling-line", rs});

        LawInstance uc = base(doubling(), line, Scalar(1));
        uc.g = MapExpr::cubic();
        uc.g_inv = MapExpr::cube_root();
        uc.modulus = ModulusFn::cube_quarter();
        uc.candidates = {Point(q(1, 2)), Point(1), Point(q(-3, 2))};
        s.push_back({"uniform-conjugacy", "doubling-line", uc});
        return s;
    }();
    return suite;
}

} // namespace orbex

// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "orbex/catalog.hpp"
#include "orbex/cli.hpp"

using namespace orbex;

namespace {

// Pinned counts and budgets.
constexpr int halving_triples = 1000;
constexpr int transport_witnesses = 500;
constexpr int product_witnesses = 500;
constexpr std::size_t torus_points = 25;
constexpr std::size_t metric_candidates = 20;
constexpr std::size_t restriction_points = 10;
constexpr int containment_checks = 10000;
constexpr unsigned chain_levels = 6;
constexpr unsigned long chain_horizon = 64;
constexpr std::size_t chain_samples = 32;
constexpr unsigned verify_precision = 256;

Rational q(long p, long r = 1) { return Rational(Integer(p), Integer(r)); }

OrbitSystem doubling() { return OrbitSystem::iterated(MapExpr::scaling(Scalar(2))); }
OrbitSystem cat_map() { return OrbitSystem::iterated(MapExpr::torus_linear({{{2, 1}, {1, 1}}})); }
MetricSpace line() { return MetricSpace::real_line(); }

struct Outcome {
    bool pass;
    std::string detail;
};

std::string frac(long a, long b) { return std::to_string(a) + "/" + std::to_string(b); }

const NamedLaw& suite_law(const std::string& id)
{
    for (const auto& nl : law_suite())
        if (nl.law == id)
            return nl;
    throw Error(ErrorKind::UnknownLaw, id);
}

// 1
Outcome catalog_rows()
{
    long rows = 0, ok = 0;
    std::string bad;
    for (const auto& name : catalog_names()) {
        const auto& e = catalog_get(name);
        for (const auto& row : e.expected) {
            ++rows;
            const RowResult r = run_row(e, row, e.budget);
            bool good = r.matches;
            for (const auto& v : r.verdicts)
                good = good && verify_verdict(e.system, e.space, v);
            if (good)
                ++ok;
            else if (bad.empty())
                bad = "; first mismatch " + name + ": " + row.label + " -> " + r.observed;
        }
    }
    return {ok == rows, frac(ok, rows) + " rows reproduce" + bad};
}

// Seeded points suited to the entry's space.
std::vector<Point> chain_points(const MetricSpace& space, std::mt19937_64& rng)
{
    std::uniform_int_distribution<long> num(0, 96);
    std::vector<Point> pts;
    const bool torus = space.kind() == SpaceKind::Torus2;
    while (pts.size() < 8) {
        Point p = torus ? Point{Scalar(q(num(rng), 97)), Scalar(q(num(rng), 97))}
                        : space.kind() == SpaceKind::Circle ? Point(q(num(rng), 97))
                                                            : Point(q(num(rng) - 48, 17));
        if (std::find(pts.begin(), pts.end(), p) == pts.end())
            pts.push_back(std::move(p));
    }
    return pts;
}

// 2
Outcome implication_chain()
{
    std::mt19937_64 rng(2);
    long systems = 0, points = 0, agreeing = 0;
    std::string bad;
    for (const auto& name : catalog_names()) {
        const auto& e = catalog_get(name);
        if (e.system.natural_space().kind() != e.space.kind())
            continue;
        LawInstance in = suite_law("implication-chain").data;
        in.system = e.system;
        in.space = e.space;
        in.candidates = chain_points(e.space, rng);
        in.d = e.space.kind() == SpaceKind::RealLine ? Scalar(1) : Scalar(q(1, 10));
        in.budget.levels = chain_levels;
        in.budget.horizon = chain_horizon;
        in.budget.samples = chain_samples;
        const LawReport r = law_check("implication-chain", in);
        if (r.checked == 0)
            continue; // antecedent not Supported here
        ++systems;
        points += static_cast<long>(r.checked);
        agreeing += static_cast<long>(r.agreeing);
        if (!r.holds_at_scale || r.agreeing != r.checked)
            bad += " " + name;
    }
    return {systems > 0 && agreeing == points && bad.empty(),
            frac(agreeing, points) + " points over " + std::to_string(systems) + " systems with expansive antecedent" +
                (bad.empty() ? "" : "; failing:" + bad)};
}

// 3
Outcome halving()
{
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<long> num(-60, 60), den(1, 40), pick(0, 3);
    const Rational thresholds[] = {q(1, 10), q(1, 5), q(1, 4), q(1, 3)};
    long ok = 0, total = 0;
    auto run = [&](const OrbitSystem& sys, const MetricSpace& space, bool torus) {
        auto draw = [&]() -> Point {
            if (torus)
                return Point{Scalar(q(num(rng) + 60, 121)), Scalar(q(num(rng) + 60, 121))};
            return Point(q(num(rng), den(rng)));
        };
        int done = 0;
        while (done < halving_triples) {
            const Point x = draw(), y = draw(), z = draw();
            const Scalar d_a(thresholds[pick(rng)]);
            if (y == z)
                continue;
            const auto n = separation_time(sys, space, y, z, d_a, 64);
            if (!n)
                continue; // no separation to halve
            ++done;
            ++total;
            const auto w = halving_transform(sys, space, x, y, z, *n, d_a);
            if ((w.y == y || w.y == z) && w.threshold == d_a * Scalar(q(1, 2)) &&
                verify_witness(sys, space, x, w, verify_precision))
                ++ok;
        }
    };
    run(doubling(), line(), false);
    run(cat_map(), MetricSpace::torus2(), true);
    return {ok == total && total == 2 * halving_triples, frac(ok, total) + " transformed witnesses certified at d_A/2"};
}

// Witnesses of doubling at d = 1 drawn from OE verdicts at seeded points.
std::vector<std::pair<Point, SeparationWitness>> doubling_witnesses(std::size_t count, std::uint64_t seed)
{
    ScaleBudget b = catalog_get("doubling-line").budget;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<long> num(-200, 200), den(1, 60);
    std::vector<std::pair<Point, SeparationWitness>> out;
    while (out.size() < count) {
        const Point x(q(num(rng), den(rng)));
        b.seed = rng();
        const Verdict v = oe_point_verdict(doubling(), line(), x, Scalar(1), b);
        if (v.status != Status::Supported)
            continue;
        for (const auto& w : v.witnesses)
            if (out.size() < count)
                out.emplace_back(x, w);
    }
    return out;
}

// 4
Outcome transport()
{
    const auto ws = doubling_witnesses(transport_witnesses, 4);
    struct Conj {
        const char* name;
        MapExpr g, g_inv;
        ModulusFn m;
    };
    const Conj conjs[] = {
        {"x+1", MapExpr::affine(Scalar(1), Scalar(1)), MapExpr::affine(Scalar(1), Scalar(-1)), ModulusFn::scaled(1)},
        {"2x", MapExpr::scaling(Scalar(2)), MapExpr::scaling(Scalar(q(1, 2))), ModulusFn::scaled(2)},
        {"x^3", MapExpr::cubic(), MapExpr::cube_root(), ModulusFn::cube_quarter()},
    };
    std::string detail;
    bool pass = true;
    for (const auto& c : conjs) {
        const OrbitSystem target = conjugate(doubling(), c.g, c.g_inv, c.m);
        long ok = 0;
        for (const auto& [x, w] : ws) {
            try {
                const auto t = transport_conjugacy(w, x, doubling(), c.g, c.g_inv, c.m, line());
                const Point gx = c.g.apply(x);
                if (t.threshold == c.m.apply(w.threshold) && verify_witness(target, line(), gx, t, verify_precision))
                    ++ok;
            } catch (const Error&) {
            }
        }
        pass = pass && ok == transport_witnesses;
        detail += std::string(detail.empty() ? "" : ", ") + c.name + " " + frac(ok, transport_witnesses);
    }
    return {pass, detail};
}

// 5
Outcome product()
{
    const auto ws = doubling_witnesses(product_witnesses, 5);
    const GammaFn gamma = GammaFn::ratio_bound();
    const OrbitSystem fg = OrbitSystem::product(doubling(), doubling(), gamma);
    const MetricSpace space = MetricSpace::product(line(), line(), gamma);
    std::mt19937_64 rng(55);
    std::uniform_int_distribution<long> num(-50, 50), den(1, 30);
    long ok = 0;
    for (const auto& [x, w] : ws) {
        const Point partner(q(num(rng), den(rng)));
        const bool first = (rng() & 1) != 0;
        const auto p = product_witness(w, x, partner, doubling(), doubling(), line(), line(), gamma, first);
        const Point base = first ? Point::concat(partner, x) : Point::concat(x, partner);
        if (cmp_ge(p.separation, gamma.apply(w.threshold)) == Tri::True && verify_witness(fg, space, base, p, verify_precision))
            ++ok;
    }
    return {ok == product_witnesses, frac(ok, product_witnesses) + " embedded separations >= gamma(delta)"};
}

// 6
Outcome iterate_power()
{
    const NamedLaw& nl = suite_law("iterate-power");
    const LawReport r = law_check(nl.law, nl.data);
    const bool shape = nl.data.candidates.size() == torus_points && nl.data.budget.horizon == 30 &&
                       nl.data.d == Scalar(q(1, 10)) && nl.data.power == 2;
    return {shape && r.holds_at_scale && r.agreeing == torus_points,
            frac(static_cast<long>(r.agreeing), static_cast<long>(r.checked)) + " torus grid points agree for F and F^2"};
}

// 7
Outcome metric_equivalence()
{
    const NamedLaw& nl = suite_law("metric-equivalence");
    const LawReport r = law_check(nl.law, nl.data);
    return {nl.data.candidates.size() == metric_candidates && r.holds_at_scale && r.agreeing == metric_candidates,
            frac(static_cast<long>(r.agreeing), static_cast<long>(r.checked)) +
                " candidates agree under the line and its bounded transform"};
}

// 8
Outcome restriction()
{
    const NamedLaw& nl = suite_law("restriction");
    const LawReport r = law_check(nl.law, nl.data);
    std::string rejected = "not rejected";
    bool threw = false;
    try {
        (void)restrict_to(doubling(), StructuredSet::closed(0, 1), 64);
    } catch (const Error& e) {
        threw = e.kind() == ErrorKind::NotInvariant;
        rejected = e.what();
    }
    const bool ok = nl.data.candidates.size() == restriction_points && r.holds_at_scale &&
                    r.agreeing == restriction_points && threw;
    return {ok, frac(static_cast<long>(r.agreeing), static_cast<long>(r.checked)) +
                    " ROE kept on [0, inf); [0, 1] rejected: " + rejected};
}

bool in_enclosure(const QSqrt2& exact, const Enclosure& e)
{
    return (exact - QSqrt2(e.lower())).sign() >= 0 && (QSqrt2(e.upper()) - exact).sign() >= 0;
}

// 9
Outcome numerics()
{
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<long> num(-1000, 1000), den(1, 997), op(0, 5), prec(8, 160);
    long ok = 0;
    auto rnd = [&] { return QSqrt2(q(num(rng), den(rng)), q(num(rng), den(rng))); };
    for (int i = 0; i < containment_checks; ++i) {
        const unsigned p = static_cast<unsigned>(prec(rng));
        const QSqrt2 a = rnd(), b = rnd();
        const Enclosure ea = Scalar(a).enclose(p), eb = Scalar(b).enclose(p);
        bool good = in_enclosure(a, ea) && in_enclosure(b, eb);
        switch (op(rng)) {
        case 0: good = good && in_enclosure(a + b, ea + eb); break;
        case 1: good = good && in_enclosure(a - b, ea - eb); break;
        case 2: good = good && in_enclosure(a * b, ea * eb); break;
        case 3:
            if (!eb.contains_zero())
                good = good && in_enclosure(a / b, ea / eb);
            break;
        case 4: good = good && in_enclosure(a.abs(), ea.abs()); break;
        default: {
            // n-th roots: lo^n <= base <= hi^n
            const Rational base = q(num(rng) + 1001, den(rng));
            const unsigned long n = 1 + rng() % 9;
            const Enclosure r = root_enclosure(base, n, p);
            Rational lo(1), hi(1);
            for (unsigned long k = 0; k < n; ++k) {
                lo = lo * r.lower();
                hi = hi * r.upper();
            }
            good = good && r.lower() >= Rational(0) && lo <= base && base <= hi;
        }
        }
        if (good)
            ++ok;
    }

    // The same catalog queries under three budgets never flip between
    // Supported and Refuted.
    std::vector<ScaleBudget> budgets;
    long queries = 0, conflicts = 0;
    std::string bad;
    for (const auto& name : catalog_names()) {
        const auto& e = catalog_get(name);
        ScaleBudget coarse = e.budget, fine = e.budget;
        coarse.levels = 3;
        coarse.horizon = std::max(8UL, e.budget.horizon / 4);
        coarse.samples = 8;
        coarse.seed = 101;
        fine.levels = e.budget.levels + 2;
        fine.horizon = e.budget.horizon + e.budget.horizon / 2;
        fine.samples = e.budget.samples + 16;
        fine.seed = 202;
        const ScaleBudget all[] = {e.budget, coarse, fine};
        for (const auto& row : e.expected) {
            if (row.kind != RowKind::Verdict)
                continue;
            std::vector<std::vector<Status>> seen;
            for (const auto& b : all) {
                const RowResult r = run_row(e, row, b);
                for (std::size_t i = 0; i < r.verdicts.size(); ++i) {
                    if (seen.size() <= i)
                        seen.emplace_back();
                    seen[i].push_back(r.verdicts[i].status);
                }
            }
            for (const auto& s : seen) {
                ++queries;
                const bool sup = std::find(s.begin(), s.end(), Status::Supported) != s.end();
                const bool ref = std::find(s.begin(), s.end(), Status::Refuted) != s.end();
                if (sup && ref) {
                    ++conflicts;
                    bad += " " + name + ":" + row.label;
                }
            }
        }
    }
    return {ok == containment_checks && conflicts == 0,
            frac(ok, containment_checks) + " containment checks; " + std::to_string(conflicts) + " conflicts over " +
                std::to_string(queries) + " queries x 3 budgets" + bad};
}

// 10
Outcome determinism()
{
    const auto dir = std::filesystem::temp_directory_path() / ("orbex-accept-" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    const auto cfg = dir / "verify.json";
    std::ofstream(cfg) << R"({"schema": "orbex-config/1", "command": "verify"})";
    auto report = [&](const std::string& workers) {
        std::ostringstream out, err;
        const int code = cli::run({"--config", cfg.string(), "--workers", workers}, out, err);
        return code == 0 ? out.str() : std::string();
    };
    const std::string a = report("1"), b = report("1"), c = report("4");
    std::filesystem::remove_all(dir);
    const bool ok = !a.empty() && a == b && a == c;
    return {ok, ok ? "verify report identical over two runs and 1 vs 4 workers (" + std::to_string(a.size()) + " bytes)"
                   : "reports differ or the run failed"};
}

} // namespace

int main()
{
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"catalog ground truth", catalog_rows},
        {"implication chain", implication_chain},
        {"halving lemma", halving},
        {"conjugacy transport", transport},
        {"product embedding", product},
        {"iterate-power on the cat map", iterate_power},
        {"metric equivalence", metric_equivalence},
        {"restriction", restriction},
        {"numerics soundness", numerics},
        {"determinism", determinism},
    };
    int failed = 0, k = 0;
    for (const auto& [name, fn] : criteria) {
        ++k;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %2d %-30s %s  %s (%.1fs)\n", k, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d/%d criteria pass\n", k - failed, k);
    return failed;
}

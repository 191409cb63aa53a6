#include "orbex/analysis.hpp"

#include <algorithm>
#include <sstream>
#include <thread>

namespace orbex {

namespace {

bool certified_gt(const Scalar& a, const Scalar& b) { return cmp_gt(a, b) == Tri::True; }
bool certified_ge(const Scalar& a, const Scalar& b) { return cmp_ge(a, b) == Tri::True; }

bool same_point(const MetricSpace& space, const Point& a, const Point& b)
{
    return a.is_exact() && b.is_exact() && space.canonical(a) == space.canonical(b);
}

const QSqrt2& exact_or_throw(const Scalar& s, const char* what)
{
    if (const QSqrt2* q = s.exact_if())
        return *q;
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be exact");
}

// Bounds are stated for the line metric; other carriers get no certificate.
std::optional<ExpansionBounds> usable_bounds(const OrbitSystem& system, const MetricSpace& space)
{
    if (space.kind() != SpaceKind::RealLine)
        return std::nullopt;
    auto b = expansion_bounds(system);
    if (!b || !b->uniform_upper)
        return std::nullopt;
    return b;
}

bool in_carrier(const OrbitSystem& system, const Point& p)
{
    if (system.kind() != SystemKind::Restricted)
        return true;
    return p.dimension() == 1 && p.is_exact() && system.carrier().contains(p.line_value());
}

std::vector<Point> filter_carrier(const OrbitSystem& system, std::vector<Point> pts)
{
    if (system.kind() != SystemKind::Restricted)
        return pts;
    std::vector<Point> out;
    for (auto& p : pts)
        if (in_carrier(system, p))
            out.push_back(std::move(p));
    return out;
}

std::vector<Point> ball_candidates(const OrbitSystem& system, const MetricSpace& space, const Point& x,
                                   const QSqrt2& eps, std::size_t m, std::uint64_t seed)
{
    return filter_carrier(system, sample_ball(space, x, eps, m, seed));
}

std::vector<Point> set_candidates(const OrbitSystem& system, const MetricSpace& space, const StructuredSet& a,
                                  const QSqrt2& x, const QSqrt2& eps, std::size_t m, std::uint64_t seed)
{
    const StructuredSet b = ball_intersect(space, a, x, eps);
    std::vector<Point> pts;
    for (auto& q : sample_set(b, x, m, seed))
        pts.emplace_back(std::move(q));
    return filter_carrier(system, std::move(pts));
}

struct Hit {
    unsigned long n = 0;
    std::size_t idx = 0;
    Scalar separation;
};

// First certified separation of each candidate from the orbit of x, reduced
// to the least (n, index). Every candidate is run to the horizon, so the
// result does not depend on how the work is split.
std::optional<Hit> first_hit(const OrbitSystem& system, const MetricSpace& space, const std::vector<Point>& orbit_x,
                             const std::vector<Point>& candidates, const Scalar& threshold, unsigned long horizon,
                             unsigned precision, unsigned workers, std::size_t& failures)
{
    const std::size_t m = candidates.size();
    std::vector<std::optional<Hit>> hits(m);
    std::vector<char> failed(m, 0);
    auto run = [&](std::size_t idx) {
        try {
            auto cur = make_cursor(system, candidates[idx], precision);
            for (unsigned long n = 1; n <= horizon; ++n) {
                cur->advance();
                Scalar sep = distance(space, orbit_x[n], cur->current());
                if (certified_gt(sep, threshold)) {
                    hits[idx] = Hit{n, idx, std::move(sep)};
                    return;
                }
            }
        } catch (const Error&) {
            failed[idx] = 1;
        }
    };
    const unsigned w = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(m)));
    if (w <= 1) {
        for (std::size_t i = 0; i < m; ++i)
            run(i);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < w; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t i = t; i < m; i += w)
                    run(i);
            });
        for (auto& th : pool)
            th.join();
    }
    std::optional<Hit> best;
    for (std::size_t i = 0; i < m; ++i) {
        failures += failed[i];
        if (hits[i] && (!best || hits[i]->n < best->n))
            best = hits[i];
    }
    return best;
}

Verdict make_verdict(Query q, const ScaleBudget& budget)
{
    Verdict v;
    v.query = std::move(q);
    v.budget = budget;
    return v;
}

// Radius at which the punctured ball misses A; continues the grid past the
// budget when x is isolated but the grid is too coarse to see it.
std::optional<RefutationCertificate> empty_ball(const MetricSpace& space, const StructuredSet& a, const QSqrt2& x,
                                                const ScaleBudget& budget)
{
    const auto grid = budget.grid();
    for (const auto& eps : grid) {
        if (punctured_empty(ball_intersect(space, a, x, eps), x)) {
            RefutationCertificate c;
            c.kind = CertificateKind::EmptyBall;
            c.level = eps;
            return c;
        }
    }
    if (is_limit_point(a, x))
        return std::nullopt;
    for (unsigned k = static_cast<unsigned>(grid.size()); k < grid.size() + 4096; ++k) {
        const QSqrt2 eps = budget.level(k);
        if (punctured_empty(ball_intersect(space, a, x, eps), x)) {
            RefutationCertificate c;
            c.kind = CertificateKind::EmptyBall;
            c.level = eps;
            c.on_grid = false;
            c.note = "below the budget grid";
            return c;
        }
    }
    return std::nullopt;
}

std::optional<RefutationCertificate> oe_uniform_bound(const OrbitSystem& system, const MetricSpace& space,
                                                      const Scalar& d, const ScaleBudget& budget)
{
    auto b = usable_bounds(system, space);
    if (!b)
        return std::nullopt;
    const Scalar& ls = *b->uniform_upper;
    RefutationCertificate c;
    c.kind = CertificateKind::UniformBound;
    c.bound = ls;
    for (const auto& eps : budget.grid()) {
        if (certified_gt(d, ls * Scalar(eps))) {
            c.level = eps;
            return c;
        }
    }
    // L* eps < d still holds for small enough eps.
    c.on_grid = false;
    c.note = "below the budget grid";
    if (ls.sign() == std::optional<int>(0)) {
        c.level = budget.grid().front();
        return c;
    }
    for (unsigned k = static_cast<unsigned>(budget.grid().size()); k < budget.grid().size() + 4096; ++k) {
        const QSqrt2 eps = budget.level(k);
        if (certified_gt(d, ls * Scalar(eps))) {
            c.level = eps;
            return c;
        }
    }
    return std::nullopt;
}

std::optional<RefutationCertificate> roe_uniform_bound(const OrbitSystem& system, const MetricSpace& space,
                                                       const ScaleBudget& budget)
{
    auto b = usable_bounds(system, space);
    if (!b || !certified_ge(Scalar(1), *b->uniform_upper))
        return std::nullopt;
    RefutationCertificate c;
    c.kind = CertificateKind::UniformBound;
    c.bound = *b->uniform_upper;
    c.level = budget.grid().front();
    c.note = "holds at every level";
    return c;
}

enum class Threshold { Fixed, Level };

// Shared level loop for the four point queries.
Verdict point_search(const OrbitSystem& system, const MetricSpace& space, const Point& x,
                     const std::optional<StructuredSet>& a, Threshold mode, const std::optional<Scalar>& d,
                     Verdict v)
{
    const ScaleBudget& budget = v.budget;
    const auto orbit_x = orbit_prefix(system, x, budget.horizon, budget.precision);
    const auto grid = budget.grid();
    bool all = true;
    std::size_t failures = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const QSqrt2& eps = grid[k];
        const std::uint64_t seed = mix_seed(budget.seed, k);
        const auto cands = a ? set_candidates(system, space, *a, x.line_value(), eps, budget.samples, seed)
                             : ball_candidates(system, space, x, eps, budget.samples, seed);
        const Scalar thr = mode == Threshold::Fixed ? *d : Scalar(eps);
        auto hit = first_hit(system, space, orbit_x, cands, thr, budget.horizon, budget.precision, budget.workers,
                             failures);
        if (!hit) {
            all = false;
            v.diagnostics.push_back("no witness at level " + eps.to_string() + " within horizon " +
                                    std::to_string(budget.horizon));
            continue;
        }
        SeparationWitness w;
        w.level = eps;
        w.y = cands[hit->idx];
        w.n = hit->n;
        w.separation = hit->separation;
        w.threshold = thr;
        w.sample_index = hit->idx;
        v.witnesses.push_back(std::move(w));
    }
    if (failures)
        v.diagnostics.push_back(std::to_string(failures) + " candidate orbits could not be evaluated");
    v.status = all ? Status::Supported : Status::Inconclusive;
    return v;
}

Query point_query(QueryKind kind, const Point& x, std::optional<StructuredSet> a, std::optional<Scalar> d)
{
    Query q;
    q.kind = kind;
    q.points = {x};
    q.set = std::move(a);
    q.threshold = std::move(d);
    return q;
}

void check_pair_witness_points(const MetricSpace& space, const std::vector<Point>& points)
{
    if (points.size() < 2)
        throw Error(ErrorKind::DegenerateInput, "need at least two points");
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            if (same_point(space, points[i], points[j]))
                throw Error(ErrorKind::DegenerateInput, "repeated point " + points[i].to_string());
}

} // namespace

// ---------------------------------------------------------------- budget

void ScaleBudget::validate() const
{
    auto bad = [](const std::string& m) { throw Error(ErrorKind::InvalidArgument, m); };
    if (eps_max.sign() <= 0)
        bad("eps_max must be positive");
    if (ratio.sign() <= 0 || ratio >= Rational(1))
        bad("ratio must lie in (0, 1)");
    if (levels == 0)
        bad("levels must be at least 1");
    if (horizon == 0)
        bad("horizon must be at least 1");
    if (samples == 0)
        bad("samples must be at least 1");
    if (precision < 16)
        bad("precision must be at least 16");
    if (workers == 0)
        bad("workers must be at least 1");
    if (explicit_levels) {
        if (explicit_levels->empty())
            bad("explicit levels must be nonempty");
        for (std::size_t i = 0; i < explicit_levels->size(); ++i) {
            if ((*explicit_levels)[i].sign() <= 0)
                bad("levels must be positive");
            if (i > 0 && !((*explicit_levels)[i] < (*explicit_levels)[i - 1]))
                bad("levels must decrease");
        }
    }
}

std::vector<QSqrt2> ScaleBudget::grid() const
{
    if (explicit_levels)
        return *explicit_levels;
    std::vector<QSqrt2> g;
    QSqrt2 e = eps_max;
    for (unsigned k = 0; k < levels; ++k) {
        g.push_back(e);
        e = e * QSqrt2(ratio);
    }
    return g;
}

QSqrt2 ScaleBudget::level(unsigned k) const
{
    const auto g = grid();
    if (k < g.size())
        return g[k];
    return g.back() * QSqrt2(pow(ratio, k - g.size() + 1));
}

// ---------------------------------------------------------------- names

std::string_view to_string(Status s) noexcept
{
    switch (s) {
    case Status::Supported: return "Supported";
    case Status::Refuted: return "Refuted";
    case Status::Inconclusive: return "Inconclusive";
    }
    return "?";
}

std::string_view to_string(CertificateKind k) noexcept
{
    switch (k) {
    case CertificateKind::EmptyBall: return "EmptyBall";
    case CertificateKind::UniformBound: return "UniformBound";
    case CertificateKind::CollapsedOrbit: return "CollapsedOrbit";
    }
    return "?";
}

std::string_view to_string(QueryKind k) noexcept
{
    switch (k) {
    case QueryKind::Oe: return "oe";
    case QueryKind::OeOfSet: return "oe-of-set";
    case QueryKind::Roe: return "roe";
    case QueryKind::RoeOfSet: return "roe-of-set";
    case QueryKind::Expansive: return "expansive";
    case QueryKind::CwExpansive: return "cw-expansive";
    }
    return "?";
}

std::string Query::to_string() const
{
    std::ostringstream os;
    os << orbex::to_string(kind);
    if (points.size() == 1) {
        os << " x=" << points[0].to_string();
    } else if (!points.empty()) {
        os << " P={";
        for (std::size_t i = 0; i < points.size(); ++i)
            os << (i ? ", " : "") << points[i].to_string();
        os << "}";
    }
    if (set)
        os << " A=" << set->to_string();
    if (threshold)
        os << (kind == QueryKind::CwExpansive ? " c=" : " d=") << threshold->to_string();
    return os.str();
}

// ---------------------------------------------------------------- queries

std::optional<unsigned long> separation_time(const OrbitSystem& system, const MetricSpace& space, const Point& x,
                                             const Point& y, const Scalar& d, unsigned long horizon,
                                             unsigned precision)
{
    if (same_point(space, x, y))
        throw Error(ErrorKind::DegenerateInput, "x and y coincide");
    auto cx = make_cursor(system, x, precision);
    auto cy = make_cursor(system, y, precision);
    for (unsigned long n = 1; n <= horizon; ++n) {
        cx->advance();
        cy->advance();
        if (certified_gt(distance(space, cx->current(), cy->current()), d))
            return n;
    }
    return std::nullopt;
}

Verdict oe_point_verdict(const OrbitSystem& system, const MetricSpace& space, const Point& x, const Scalar& d,
                         const ScaleBudget& budget)
{
    budget.validate();
    Verdict v = make_verdict(point_query(QueryKind::Oe, x, std::nullopt, d), budget);
    if (auto c = oe_uniform_bound(system, space, d, budget)) {
        v.status = Status::Refuted;
        v.certificate = std::move(c);
        return v;
    }
    return point_search(system, space, x, std::nullopt, Threshold::Fixed, d, std::move(v));
}

Verdict oe_point_of_set_verdict(const OrbitSystem& system, const MetricSpace& space, const Point& x,
                                const StructuredSet& a, const Scalar& d, const ScaleBudget& budget)
{
    budget.validate();
    if (!space.is_line_based())
        throw Error(ErrorKind::Unsupported, "set queries need a line-based space");
    Verdict v = make_verdict(point_query(QueryKind::OeOfSet, x, a, d), budget);
    const QSqrt2& xv = x.line_value();
    if (auto c = empty_ball(space, a, xv, budget)) {
        v.status = Status::Refuted;
        v.certificate = std::move(c);
        return v;
    }
    if (auto c = oe_uniform_bound(system, space, d, budget)) {
        v.status = Status::Refuted;
        v.certificate = std::move(c);
        return v;
    }
    return point_search(system, space, x, a, Threshold::Fixed, d, std::move(v));
}

Verdict roe_point_verdict(const OrbitSystem& system, const MetricSpace& space, const Point& x,
                          const ScaleBudget& budget)
{
    budget.validate();
    Verdict v = make_verdict(point_query(QueryKind::Roe, x, std::nullopt, std::nullopt), budget);
    if (auto c = roe_uniform_bound(system, space, budget)) {
        v.status = Status::Refuted;
        v.certificate = std::move(c);
        return v;
    }
    return point_search(system, space, x, std::nullopt, Threshold::Level, std::nullopt, std::move(v));
}

Verdict roe_point_of_set_verdict(const OrbitSystem& system, const MetricSpace& space, const Point& x,
                                 const StructuredSet& a, const ScaleBudget& budget)
{
    budget.validate();
    if (!space.is_line_based())
        throw Error(ErrorKind::Unsupported, "set queries need a line-based space");
    Verdict v = make_verdict(point_query(QueryKind::RoeOfSet, x, a, std::nullopt), budget);
    if (auto c = empty_ball(space, a, x.line_value(), budget)) {
        v.status = Status::Refuted;
        v.certificate = std::move(c);
        return v;
    }
    if (auto c = roe_uniform_bound(system, space, budget)) {
        v.status = Status::Refuted;
        v.certificate = std::move(c);
        return v;
    }
    return point_search(system, space, x, a, Threshold::Level, std::nullopt, std::move(v));
}

Verdict expansive_verdict(const OrbitSystem& system, const MetricSpace& space, const std::vector<Point>& points,
                          const Scalar& d, unsigned long horizon, unsigned precision)
{
    check_pair_witness_points(space, points);
    if (horizon == 0)
        throw Error(ErrorKind::InvalidArgument, "horizon must be at least 1");
    ScaleBudget budget;
    budget.horizon = horizon;
    budget.precision = precision;
    Query q;
    q.kind = QueryKind::Expansive;
    q.points = points;
    q.threshold = d;
    Verdict v = make_verdict(std::move(q), budget);

    std::vector<std::vector<Point>> orbits;
    for (const auto& p : points)
        orbits.push_back(orbit_prefix(system, p, horizon, precision));
    const auto bounds = usable_bounds(system, space);

    bool all = true;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            std::optional<unsigned long> hit;
            Scalar sep;
            for (unsigned long n = 1; n <= horizon && !hit; ++n) {
                sep = distance(space, orbits[i][n], orbits[j][n]);
                if (certified_gt(sep, d))
                    hit = n;
            }
            if (hit) {
                SeparationWitness w;
                w.level = distance(space, points[i], points[j]);
                w.base = points[i];
                w.y = points[j];
                w.n = *hit;
                w.separation = sep;
                w.threshold = d;
                w.sample_index = j;
                v.witnesses.push_back(std::move(w));
                continue;
            }
            all = false;
            if (v.certificate)
                continue;
            if (system.is_markovian()) {
                for (unsigned long n0 = 1; n0 <= horizon; ++n0) {
                    if (same_point(space, orbits[i][n0], orbits[j][n0])) {
                        bool quiet = true;
                        for (unsigned long n = 1; n < n0 && quiet; ++n)
                            quiet = cmp_gt(distance(space, orbits[i][n], orbits[j][n]), d) == Tri::False;
                        if (quiet) {
                            RefutationCertificate c;
                            c.kind = CertificateKind::CollapsedOrbit;
                            c.n0 = n0;
                            c.x = points[i];
                            c.y = points[j];
                            v.certificate = std::move(c);
                        }
                        break;
                    }
                }
            }
            if (!v.certificate && bounds) {
                const Scalar rho = distance(space, points[i], points[j]);
                if (certified_ge(d, *bounds->uniform_upper * rho)) {
                    RefutationCertificate c;
                    c.kind = CertificateKind::UniformBound;
                    c.bound = bounds->uniform_upper;
                    c.level = rho;
                    c.x = points[i];
                    c.y = points[j];
                    v.certificate = std::move(c);
                }
            }
            if (!v.certificate)
                v.diagnostics.push_back("pair " + points[i].to_string() + ", " + points[j].to_string() +
                                        " not separated within horizon " + std::to_string(horizon));
        }
    }
    if (v.certificate)
        v.status = Status::Refuted;
    else
        v.status = all ? Status::Supported : Status::Inconclusive;
    return v;
}

Verdict cw_expansive_verdict(const OrbitSystem& system, const MetricSpace& space, const StructuredSet& a,
                             const Scalar& c, const ScaleBudget& budget)
{
    budget.validate();
    if (a.kind() != SetKind::Interval || !a.interval_data().lo || !a.interval_data().hi)
        throw Error(ErrorKind::DegenerateInput, "CW queries need a bounded interval");
    const IntervalData& iv = a.interval_data();
    if (!(*iv.lo < *iv.hi))
        throw Error(ErrorKind::DegenerateInput, "interval is degenerate");
    Query q;
    q.kind = QueryKind::CwExpansive;
    q.set = a;
    q.threshold = c;
    Verdict v = make_verdict(std::move(q), budget);
    const Scalar diam = distance(space, Point(*iv.lo), Point(*iv.hi));

    if (auto b = usable_bounds(system, space); b && certified_ge(c, *b->uniform_upper * diam)) {
        RefutationCertificate cert;
        cert.kind = CertificateKind::UniformBound;
        cert.bound = b->uniform_upper;
        cert.level = diam;
        v.certificate = std::move(cert);
        v.status = Status::Refuted;
        return v;
    }

    std::vector<Point> pts;
    if (iv.closed_lo)
        pts.emplace_back(*iv.lo);
    if (iv.closed_hi)
        pts.emplace_back(*iv.hi);
    for (auto& s : sample_set(a, std::nullopt, budget.samples, mix_seed(budget.seed, 0)))
        if (std::find(pts.begin(), pts.end(), Point(s)) == pts.end())
            pts.emplace_back(std::move(s));
    pts = filter_carrier(system, std::move(pts));

    std::vector<std::vector<Point>> orbits;
    for (const auto& p : pts)
        orbits.push_back(orbit_prefix(system, p, budget.horizon, budget.precision));

    bool noted = false;
    for (std::size_t i = 0; i < pts.size() && !noted; ++i)
        for (std::size_t j = i + 1; j < pts.size() && !noted; ++j)
            if (same_point(space, orbits[i][1], orbits[j][1])) {
                v.diagnostics.push_back("definition-domain: map is not injective on the sampled points (" +
                                        pts[i].to_string() + ", " + pts[j].to_string() + ")");
                noted = true;
            }
    for (unsigned long n = 1; n <= budget.horizon; ++n) {
        for (std::size_t i = 0; i < pts.size(); ++i) {
            for (std::size_t j = i + 1; j < pts.size(); ++j) {
                Scalar sep = distance(space, orbits[i][n], orbits[j][n]);
                if (certified_gt(sep, c)) {
                    SeparationWitness w;
                    w.level = distance(space, pts[i], pts[j]);
                    w.base = pts[i];
                    w.y = pts[j];
                    w.n = n;
                    w.separation = std::move(sep);
                    w.threshold = c;
                    w.sample_index = j;
                    v.witnesses.push_back(std::move(w));
                    v.status = Status::Supported;
                    return v;
                }
            }
        }
    }
    v.diagnostics.push_back("no image of diameter above c within horizon " + std::to_string(budget.horizon));
    v.status = Status::Inconclusive;
    return v;
}

Verdict run_query(const OrbitSystem& system, const MetricSpace& space, const Query& query, const ScaleBudget& budget)
{
    auto need = [&](bool ok, const char* what) {
        if (!ok)
            throw Error(ErrorKind::InvalidArgument, std::string(orbex::to_string(query.kind)) + " query needs " + what);
    };
    switch (query.kind) {
    case QueryKind::Oe:
        need(query.points.size() == 1 && query.threshold.has_value(), "one point and d");
        return oe_point_verdict(system, space, query.points[0], *query.threshold, budget);
    case QueryKind::OeOfSet:
        need(query.points.size() == 1 && query.threshold && query.set, "one point, a set and d");
        return oe_point_of_set_verdict(system, space, query.points[0], *query.set, *query.threshold, budget);
    case QueryKind::Roe:
        need(query.points.size() == 1, "one point");
        return roe_point_verdict(system, space, query.points[0], budget);
    case QueryKind::RoeOfSet:
        need(query.points.size() == 1 && query.set, "one point and a set");
        return roe_point_of_set_verdict(system, space, query.points[0], *query.set, budget);
    case QueryKind::Expansive: {
        need(query.threshold.has_value(), "d");
        budget.validate();
        Verdict v = expansive_verdict(system, space, query.points, *query.threshold, budget.horizon, budget.precision);
        v.budget = budget;
        return v;
    }
    case QueryKind::CwExpansive:
        need(query.set && query.threshold, "an interval and c");
        return cw_expansive_verdict(system, space, *query.set, *query.threshold, budget);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown query kind");
}

std::vector<SetMapEntry> oe_set_map(const OrbitSystem& system, const MetricSpace& space, const StructuredSet& a,
                                    const std::vector<Point>& candidates, const Scalar& d, const ScaleBudget& budget)
{
    std::vector<SetMapEntry> out;
    for (const auto& c : candidates)
        out.push_back({c, oe_point_of_set_verdict(system, space, c, a, d, budget)});
    return out;
}

// ---------------------------------------------------------------- transformers

SeparationWitness halving_transform(const OrbitSystem& system, const MetricSpace& space, const Point& x,
                                    const Point& y, const Point& z, unsigned long n, const Scalar& d_a,
                                    unsigned precision)
{
    const Scalar half = d_a * Scalar(Rational(1, 2));
    for (unsigned p = precision, round = 0; round < 4; ++round, p *= 2) {
        const Point ox = iterate(system, n, x, p);
        const Point oy = iterate(system, n, y, p);
        const Point oz = iterate(system, n, z, p);
        const Tri yz = cmp_gt(distance(space, oy, oz), d_a);
        if (yz == Tri::False)
            throw Error(ErrorKind::NotAWitness, "y and z are not separated by d_A at step " + std::to_string(n));
        if (yz == Tri::Unknown)
            continue;
        for (const Point* w : {&y, &z}) {
            Scalar sep = distance(space, ox, w == &y ? oy : oz);
            if (certified_gt(sep, half)) {
                SeparationWitness out;
                out.level = distance(space, x, *w);
                out.y = *w;
                out.n = n;
                out.separation = std::move(sep);
                out.threshold = half;
                return out;
            }
        }
    }
    throw Error(ErrorKind::NotAWitness, "separation could not be certified");
}

SeparationWitness transport_conjugacy(const SeparationWitness& witness, const Point& x, const OrbitSystem& inner,
                                      const MapExpr& g, const MapExpr& g_inv, const ModulusFn& modulus,
                                      const MetricSpace& target_space, unsigned precision)
{
    const OrbitSystem conj = OrbitSystem::conjugated(g, inner, g_inv, modulus);
    const Scalar thr = modulus.apply(witness.threshold);
    for (unsigned p = precision, round = 0; round < 4; ++round, p *= 2) {
        const Point gx = g.apply(x, p);
        const Point gy = g.apply(witness.y, p);
        Scalar sep = distance(target_space, iterate(conj, witness.n, gx, p), iterate(conj, witness.n, gy, p));
        const Tri t = cmp_gt(sep, thr);
        if (t == Tri::False)
            throw Error(ErrorKind::ModulusViolated, "transported separation " + sep.to_string() + " is not above " +
                                                        thr.to_string());
        if (t == Tri::True) {
            SeparationWitness out;
            out.level = distance(target_space, gx, gy);
            out.y = gy;
            out.n = witness.n;
            out.separation = std::move(sep);
            out.threshold = thr;
            out.sample_index = witness.sample_index;
            return out;
        }
    }
    throw Error(ErrorKind::NotAWitness, "transported separation could not be certified");
}

SeparationWitness product_witness(const SeparationWitness& witness, const Point& x, const Point& partner,
                                  const OrbitSystem& f, const OrbitSystem& g, const MetricSpace& f_space,
                                  const MetricSpace& g_space, const GammaFn& gamma, bool partner_first,
                                  unsigned precision)
{
    const OrbitSystem prod = partner_first ? OrbitSystem::product(g, f, gamma) : OrbitSystem::product(f, g, gamma);
    const MetricSpace space = partner_first ? MetricSpace::product(g_space, f_space, gamma)
                                            : MetricSpace::product(f_space, g_space, gamma);
    const Point base = partner_first ? Point::concat(partner, x) : Point::concat(x, partner);
    const Point moved = partner_first ? Point::concat(partner, witness.y) : Point::concat(witness.y, partner);
    const Scalar thr = gamma.apply(witness.threshold);
    for (unsigned p = precision, round = 0; round < 4; ++round, p *= 2) {
        Scalar sep = distance(space, iterate(prod, witness.n, base, p), iterate(prod, witness.n, moved, p));
        const Tri t = cmp_ge(sep, thr);
        if (t == Tri::False)
            throw Error(ErrorKind::NotAWitness, "embedded separation fell below gamma(delta)");
        if (t == Tri::True) {
            SeparationWitness out;
            out.level = distance(space, base, moved);
            out.y = moved;
            out.n = witness.n;
            out.separation = std::move(sep);
            out.threshold = thr;
            out.strict = false;
            out.sample_index = witness.sample_index;
            return out;
        }
    }
    throw Error(ErrorKind::NotAWitness, "embedded separation could not be certified");
}

std::optional<RefutationCertificate> not_oe_certificate(const OrbitSystem& system, const Point& x)
{
    if (x.dimension() != 1)
        return std::nullopt;
    auto b = usable_bounds(system, MetricSpace::real_line());
    if (!b)
        return std::nullopt;
    RefutationCertificate c;
    c.kind = CertificateKind::UniformBound;
    c.bound = b->uniform_upper;
    c.on_grid = false;
    c.note = "every d > 0 fails once L* eps < d";
    return c;
}

Rational witness_density(const OrbitSystem& system, const MetricSpace& space, const Point& x, const QSqrt2& eps,
                         const Scalar& d, unsigned long horizon, std::size_t samples, std::uint64_t seed,
                         unsigned precision)
{
    const auto pts = sample_ball(space, x, eps, samples, seed);
    if (pts.empty())
        return Rational(0);
    long hits = 0;
    for (const auto& y : pts) {
        try {
            if (separation_time(system, space, x, y, d, horizon, precision))
                ++hits;
        } catch (const Error&) {
        }
    }
    return Rational(hits) / Rational(static_cast<long>(pts.size()));
}

// ---------------------------------------------------------------- verification

bool verify_witness(const OrbitSystem& system, const MetricSpace& space, const Point& x,
                    const SeparationWitness& witness, unsigned precision)
{
    const Point& base = witness.base ? *witness.base : x;
    if (same_point(space, base, witness.y))
        return false;
    if (!certified_ge(witness.level, distance(space, base, witness.y)))
        return false;
    const Scalar sep =
        distance(space, iterate(system, witness.n, base, precision), iterate(system, witness.n, witness.y, precision));
    return witness.strict ? certified_gt(sep, witness.threshold) : certified_ge(sep, witness.threshold);
}

bool verify_certificate(const OrbitSystem& system, const MetricSpace& space, const Query& query,
                        const RefutationCertificate& cert, unsigned precision)
{
    switch (cert.kind) {
    case CertificateKind::EmptyBall: {
        if (!query.set || query.points.size() != 1)
            return false;
        const QSqrt2& xv = query.points[0].line_value();
        return punctured_empty(ball_intersect(space, *query.set, xv, exact_or_throw(cert.level, "level")), xv);
    }
    case CertificateKind::UniformBound: {
        auto b = usable_bounds(system, space);
        if (!b || !cert.bound || !(*b->uniform_upper == *cert.bound))
            return false;
        const Scalar& ls = *b->uniform_upper;
        switch (query.kind) {
        case QueryKind::Oe:
        case QueryKind::OeOfSet:
            return query.threshold && certified_gt(*query.threshold, ls * cert.level);
        case QueryKind::Roe:
        case QueryKind::RoeOfSet:
            return certified_ge(Scalar(1), ls);
        case QueryKind::Expansive:
            return query.threshold && cert.x && cert.y &&
                   certified_ge(*query.threshold, ls * distance(space, *cert.x, *cert.y));
        case QueryKind::CwExpansive:
            return query.threshold && certified_ge(*query.threshold, ls * cert.level);
        }
        return false;
    }
    case CertificateKind::CollapsedOrbit: {
        if (!system.is_markovian() || !cert.x || !cert.y || !query.threshold || cert.n0 == 0)
            return false;
        const auto ox = orbit_prefix(system, *cert.x, cert.n0, precision);
        const auto oy = orbit_prefix(system, *cert.y, cert.n0, precision);
        if (!same_point(space, ox[cert.n0], oy[cert.n0]))
            return false;
        for (unsigned long n = 1; n < cert.n0; ++n)
            if (cmp_gt(distance(space, ox[n], oy[n]), *query.threshold) != Tri::False)
                return false;
        return true;
    }
    }
    return false;
}

bool verify_verdict(const OrbitSystem& system, const MetricSpace& space, const Verdict& verdict)
{
    const unsigned p = verdict.budget.precision * 2;
    if (verdict.status == Status::Refuted)
        return verdict.certificate && verify_certificate(system, space, verdict.query, *verdict.certificate, p);
    const Point x = verdict.query.points.empty() ? Point() : verdict.query.points[0];
    for (const auto& w : verdict.witnesses)
        if (!verify_witness(system, space, x, w, p))
            return false;
    return true;
}

// ---------------------------------------------------------------- laws

namespace {

struct Tally {
    LawReport& r;
    void violation(const std::string& what)
    {
        r.holds_at_scale = false;
        r.details.push_back("violation: " + what);
    }
};

bool any_status(const std::vector<Verdict>& vs, Status s)
{
    return std::any_of(vs.begin(), vs.end(), [&](const Verdict& v) { return v.status == s; });
}

bool all_status(const std::vector<Verdict>& vs, Status s)
{
    return std::all_of(vs.begin(), vs.end(), [&](const Verdict& v) { return v.status == s; });
}

void need_sets(const LawInstance& in, std::size_t n, const std::string& law)
{
    if (in.sets.size() < n)
        throw Error(ErrorKind::InvalidArgument, law + " needs at least " + std::to_string(n) + " sets");
}

std::vector<Verdict> per_set(const LawInstance& in, const Point& c)
{
    std::vector<Verdict> out;
    for (const auto& a : in.sets)
        out.push_back(oe_point_of_set_verdict(in.system, in.space, c, a, in.d, in.budget));
    return out;
}

// Tested members of a set: seeded samples plus candidates that belong to it.
std::vector<Point> members_of(const StructuredSet& a, const std::vector<Point>& candidates, std::uint64_t seed)
{
    std::vector<Point> out;
    for (auto& q : sample_set(a, std::nullopt, 8, seed))
        out.emplace_back(std::move(q));
    for (const auto& c : candidates)
        if (c.dimension() == 1 && c.is_exact() && a.contains(c.line_value()) &&
            std::find(out.begin(), out.end(), c) == out.end())
            out.push_back(c);
    return out;
}

void law_union_monotone(const LawInstance& in, LawReport& r)
{
    need_sets(in, 1, r.law);
    const StructuredSet u = StructuredSet::set_union(in.sets);
    Tally t{r};
    for (const auto& c : in.candidates) {
        ++r.checked;
        const Verdict vu = oe_point_of_set_verdict(in.system, in.space, c, u, in.d, in.budget);
        const auto vs = per_set(in, c);
        if (any_status(vs, Status::Supported) && vu.status == Status::Refuted)
            t.violation(c.to_string() + " is supported for a member but refuted for the union");
        else if (vu.status == Status::Inconclusive || all_status(vs, Status::Inconclusive))
            ++r.inconclusive;
        else
            ++r.agreeing;
    }
}

void law_intersection_monotone(const LawInstance& in, LawReport& r)
{
    need_sets(in, 1, r.law);
    const StructuredSet is = StructuredSet::set_intersection(in.sets);
    Tally t{r};
    for (const auto& c : in.candidates) {
        ++r.checked;
        const Verdict vi = oe_point_of_set_verdict(in.system, in.space, c, is, in.d, in.budget);
        const auto vs = per_set(in, c);
        if (vi.status == Status::Supported && any_status(vs, Status::Refuted))
            t.violation(c.to_string() + " is supported for the intersection but refuted for a member");
        else if (vi.status == Status::Inconclusive || any_status(vs, Status::Inconclusive))
            ++r.inconclusive;
        else
            ++r.agreeing;
    }
}

void law_finite_union(const LawInstance& in, LawReport& r)
{
    need_sets(in, 1, r.law);
    r.details.push_back("checked form: OE(union A_i) = union OE(A_i)");
    const StructuredSet u = StructuredSet::set_union(in.sets);
    Tally t{r};
    for (const auto& c : in.candidates) {
        ++r.checked;
        const Verdict vu = oe_point_of_set_verdict(in.system, in.space, c, u, in.d, in.budget);
        const auto vs = per_set(in, c);
        if (vu.status == Status::Supported && all_status(vs, Status::Refuted))
            t.violation(c.to_string() + " is supported for the union but refuted for every member");
        else if (vu.status == Status::Refuted && any_status(vs, Status::Supported))
            t.violation(c.to_string() + " is refuted for the union but supported for a member");
        else if (vu.status == Status::Inconclusive || any_status(vs, Status::Inconclusive))
            ++r.inconclusive;
        else
            ++r.agreeing;
    }
}

void law_oe_set_union(const LawInstance& in, LawReport& r)
{
    need_sets(in, 1, r.law);
    const StructuredSet u = StructuredSet::set_union(in.sets);
    std::vector<std::vector<Point>> members;
    for (std::size_t i = 0; i < in.sets.size(); ++i) {
        members.push_back(members_of(in.sets[i], in.candidates, mix_seed(in.budget.seed, 1000 + i)));
        for (const auto& p : members.back()) {
            const Verdict v = oe_point_of_set_verdict(in.system, in.space, p, in.sets[i], in.d, in.budget);
            if (v.status != Status::Supported) {
                r.details.push_back("antecedent fails: " + p.to_string() + " is " +
                                    std::string(to_string(v.status)) + " for member " + std::to_string(i));
                return;
            }
        }
    }
    Tally t{r};
    for (const auto& ms : members) {
        for (const auto& p : ms) {
            ++r.checked;
            const Verdict v = oe_point_of_set_verdict(in.system, in.space, p, u, in.d, in.budget);
            if (v.status == Status::Refuted)
                t.violation(p.to_string() + " is refuted for the union");
            else if (v.status == Status::Inconclusive)
                ++r.inconclusive;
            else
                ++r.agreeing;
        }
    }
}

void law_closure(const LawInstance& in, LawReport& r)
{
    need_sets(in, 1, r.law);
    const StructuredSet& a = in.sets[0];
    for (const auto& p : members_of(a, in.candidates, mix_seed(in.budget.seed, 2000))) {
        const Verdict v = oe_point_of_set_verdict(in.system, in.space, p, a, in.d, in.budget);
        if (v.status != Status::Supported) {
            r.details.push_back("antecedent fails: " + p.to_string() + " is " + std::string(to_string(v.status)));
            return;
        }
    }
    const StructuredSet cl = closure(a);
    Tally t{r};
    for (const auto& c : in.candidates) {
        if (!(c.dimension() == 1 && c.is_exact() && cl.contains(c.line_value())))
            continue;
        ++r.checked;
        const Verdict v = oe_point_of_set_verdict(in.system, in.space, c, cl, in.d, in.budget);
        if (v.status == Status::Refuted)
            t.violation(c.to_string() + " is refuted for the closure");
        else if (v.status == Status::Inconclusive)
            ++r.inconclusive;
        else
            ++r.agreeing;
    }
}

void law_implication_chain(const LawInstance& in, LawReport& r)
{
    const Verdict ve = expansive_verdict(in.system, in.space, in.candidates, in.d, in.budget.horizon,
                                         in.budget.precision);
    if (ve.status != Status::Supported) {
        r.details.push_back(std::string("antecedent is ") + std::string(to_string(ve.status)) + "; nothing to check");
        return;
    }
    // Match the scales: levels below the smallest pair distance, and ROE
    // levels no larger than d.
    QSqrt2 min_gap = exact_or_throw(distance(in.space, in.candidates[0], in.candidates[1]), "pair distance");
    for (std::size_t i = 0; i < in.candidates.size(); ++i)
        for (std::size_t j = i + 1; j < in.candidates.size(); ++j)
            min_gap = std::min(min_gap, exact_or_throw(distance(in.space, in.candidates[i], in.candidates[j]),
                                                       "pair distance"));
    ScaleBudget oe_budget = in.budget;
    oe_budget.explicit_levels.reset();
    oe_budget.eps_max = std::min(in.budget.eps_max, min_gap * QSqrt2(Rational(1, 2)));
    ScaleBudget roe_budget = oe_budget;
    roe_budget.eps_max = std::min(oe_budget.eps_max, exact_or_throw(in.d, "d"));
    Tally t{r};
    for (const auto& x : in.candidates) {
        ++r.checked;
        const Verdict vo = oe_point_verdict(in.system, in.space, x, in.d, oe_budget);
        const Verdict vr = roe_point_verdict(in.system, in.space, x, roe_budget);
        std::optional<Verdict> vc;
        if (in.space.kind() == SpaceKind::RealLine) {
            const QSqrt2& xv = x.line_value();
            const QSqrt2 e = oe_budget.eps_max;
            vc = cw_expansive_verdict(in.system, in.space, StructuredSet::closed(xv - e, xv + e), in.d, oe_budget);
        }
        if (vo.status == Status::Refuted)
            t.violation("OE refuted at " + x.to_string());
        if (vr.status == Status::Refuted)
            t.violation("ROE refuted at " + x.to_string());
        if (vc && vc->status == Status::Refuted)
            t.violation("CW refuted near " + x.to_string());
        const bool decided = vo.status == Status::Supported && vr.status == Status::Supported &&
                             (!vc || vc->status == Status::Supported);
        if (decided)
            ++r.agreeing;
        else if (vo.status != Status::Refuted && vr.status != Status::Refuted)
            ++r.inconclusive;
    }
}

void law_metric_equivalence(const LawInstance& in, LawReport& r)
{
    const MetricSpace other = MetricSpace::bounded_transform(in.space, in.gamma);
    ScaleBudget translated = in.budget;
    std::vector<QSqrt2> levels;
    for (const auto& e : in.budget.grid())
        levels.push_back(exact_or_throw(in.gamma.apply(Scalar(e)), "translated level"));
    translated.explicit_levels = levels;
    const Scalar d2 = in.gamma.apply(in.d);
    Tally t{r};
    for (const auto& c : in.candidates) {
        ++r.checked;
        const Verdict v1 = oe_point_verdict(in.system, in.space, c, in.d, in.budget);
        const Verdict v2 = oe_point_verdict(in.system, other, c, d2, translated);
        if ((v1.status == Status::Supported && v2.status == Status::Refuted) ||
            (v1.status == Status::Refuted && v2.status == Status::Supported))
            t.violation(c.to_string() + " decided differently under the two metrics");
        else if (v1.status == v2.status)
            ++r.agreeing;
        else
            ++r.inconclusive;
    }
}

void law_iterate_power(const LawInstance& in, LawReport& r)
{
    const OrbitSystem p = power(in.system, in.power);
    Tally t{r};
    for (const auto& c : in.candidates) {
        ++r.checked;
        const Verdict v1 = oe_point_verdict(in.system, in.space, c, in.d, in.budget);
        const Verdict v2 = oe_point_verdict(p, in.space, c, in.d, in.budget);
        if ((v1.status == Status::Supported && v2.status == Status::Refuted) ||
            (v1.status == Status::Refuted && v2.status == Status::Supported))
            t.violation(c.to_string() + " decided differently for the power");
        else if (v1.status == v2.status)
            ++r.agreeing;
        else
            ++r.inconclusive;
    }
}

void law_restriction(const LawInstance& in, LawReport& r)
{
    if (!in.carrier)
        throw Error(ErrorKind::InvalidArgument, "restriction needs a carrier");
    const OrbitSystem rs = restrict_to(in.system, *in.carrier, 64, in.budget.seed);
    Tally t{r};
    for (const auto& c : in.candidates) {
        if (!in_carrier(rs, c))
            continue;
        ++r.checked;
        const Verdict v1 = roe_point_verdict(in.system, in.space, c, in.budget);
        if (v1.status != Status::Supported) {
            ++r.inconclusive;
            continue;
        }
        const Verdict v2 = roe_point_verdict(rs, in.space, c, in.budget);
        if (v2.status == Status::Refuted)
            t.violation(c.to_string() + " loses ROE under restriction");
        else if (v2.status == Status::Supported)
            ++r.agreeing;
        else
            ++r.inconclusive;
    }
}

void law_uniform_conjugacy(const LawInstance& in, LawReport& r)
{
    if (!in.g || !in.g_inv)
        throw Error(ErrorKind::InvalidArgument, "uniform-conjugacy needs g and its inverse");
    const OrbitSystem conj = conjugate(in.system, *in.g, *in.g_inv, in.modulus);
    Tally t{r};
    for (const auto& c : in.candidates) {
        ++r.checked;
        const Verdict v1 = roe_point_verdict(in.system, in.space, c, in.budget);
        if (v1.status != Status::Supported) {
            ++r.inconclusive;
            continue;
        }
        const Verdict v2 = roe_point_verdict(conj, in.space, in.g->apply(c, in.budget.precision), in.budget);
        if (v2.status == Status::Refuted)
            t.violation(c.to_string() + " loses ROE under conjugacy");
        else if (v2.status == Status::Supported)
            ++r.agreeing;
        else
            ++r.inconclusive;
    }
}

} // namespace

const std::vector<std::string>& law_ids()
{
    static const std::vector<std::string> ids = {
        "union-monotonicity", "intersection-monotonicity", "finite-union", "oe-set-union", "closure",
        "implication-chain",  "metric-equivalence",        "iterate-power", "restriction", "uniform-conjugacy",
    };
    return ids;
}

LawReport law_check(const std::string& law, const LawInstance& instance)
{
    instance.budget.validate();
    LawReport r;
    r.law = law;
    if (law == "union-monotonicity")
        law_union_monotone(instance, r);
    else if (law == "intersection-monotonicity")
        law_intersection_monotone(instance, r);
    else if (law == "finite-union")
        law_finite_union(instance, r);
    else if (law == "oe-set-union")
        law_oe_set_union(instance, r);
    else if (law == "closure")
        law_closure(instance, r);
    else if (law == "implication-chain")
        law_implication_chain(instance, r);
    else if (law == "metric-equivalence")
        law_metric_equivalence(instance, r);
    else if (law == "iterate-power")
        law_iterate_power(instance, r);
    else if (law == "restriction")
        law_restriction(instance, r);
    else if (law == "uniform-conjugacy")
        law_uniform_conjugacy(instance, r);
    else
        throw Error(ErrorKind::UnknownLaw, "unknown law '" + law + "'");
    return r;
}

} // namespace orbex

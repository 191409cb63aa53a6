#include "orbex/cli.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "orbex/catalog.hpp"

namespace orbex::cli {

namespace {

using nlohmann::json;

// Anything wrong with the config itself; maps to exit 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[noreturn]] void bad(const std::string& where, const std::string& what)
{
    throw ConfigError(where + ": " + what);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!j.is_object())
        bad(where, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k))
            bad(where, "unknown field '" + k + "'");
}

const json& need(const json& j, const char* key, const std::string& where)
{
    if (!j.contains(key))
        bad(where, std::string("missing field '") + key + "'");
    return j.at(key);
}

std::string type_of(const json& j, const std::string& where)
{
    const json& t = need(j, "type", where);
    if (!t.is_string())
        bad(where, "'type' must be a string");
    return t.get<std::string>();
}

long integer(const json& j, const std::string& where)
{
    if (!j.is_number_integer())
        bad(where, "expected an integer");
    return j.get<long>();
}

bool boolean(const json& j, const std::string& where)
{
    if (!j.is_boolean())
        bad(where, "expected true or false");
    return j.get<bool>();
}

Rational rational(const json& j, const std::string& where)
{
    if (j.is_number_integer())
        return Rational(j.get<long>());
    if (!j.is_string())
        bad(where, "rationals are written as strings like \"1/3\"");
    try {
        return Rational::parse(j.get<std::string>());
    } catch (const Error& e) {
        bad(where, e.what());
    }
}

QSqrt2 exact(const json& j, const std::string& where)
{
    if (j.is_object()) {
        only_keys(j, where, {"a", "b"});
        return QSqrt2(rational(need(j, "a", where), where + ".a"), rational(need(j, "b", where), where + ".b"));
    }
    if (j.is_number_integer())
        return QSqrt2(j.get<long>());
    if (!j.is_string())
        bad(where, "exact values are strings (\"1/3\", \"sqrt2\") or {\"a\": ..., \"b\": ...}");
    try {
        return QSqrt2::parse(j.get<std::string>());
    } catch (const Error& e) {
        bad(where, e.what());
    }
}

Point point(const json& j, const std::string& where)
{
    if (j.is_array()) {
        std::vector<Scalar> cs;
        for (std::size_t i = 0; i < j.size(); ++i)
            cs.emplace_back(exact(j[i], where + "[" + std::to_string(i) + "]"));
        if (cs.empty())
            bad(where, "empty point");
        return Point(std::move(cs));
    }
    return Point(exact(j, where));
}

std::vector<Point> points(const json& j, const std::string& where)
{
    if (!j.is_array())
        bad(where, "expected a list of points");
    std::vector<Point> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(point(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

GammaFn gamma_fn(const json& j, const std::string& where)
{
    const std::string t = type_of(j, where);
    if (t == "ratio-bound") {
        only_keys(j, where, {"type"});
        return GammaFn::ratio_bound();
    }
    if (t == "capped") {
        only_keys(j, where, {"type", "cap"});
        return GammaFn::capped(rational(need(j, "cap", where), where + ".cap"));
    }
    bad(where, "unknown gamma type '" + t + "'");
}

ModulusFn modulus_fn(const json& j, const std::string& where)
{
    const std::string t = type_of(j, where);
    if (t == "scaled") {
        only_keys(j, where, {"type", "k"});
        return ModulusFn::scaled(rational(need(j, "k", where), where + ".k"));
    }
    if (t == "cube-quarter") {
        only_keys(j, where, {"type"});
        return ModulusFn::cube_quarter();
    }
    bad(where, "unknown modulus type '" + t + "'");
}

MapExpr map_expr(const json& j, const std::string& where)
{
    const std::string t = type_of(j, where);
    if (t == "affine") {
        only_keys(j, where, {"type", "lambda", "offset"});
        return MapExpr::affine(exact(need(j, "lambda", where), where + ".lambda"),
                               exact(need(j, "offset", where), where + ".offset"));
    }
    if (t == "identity") {
        only_keys(j, where, {"type"});
        return MapExpr::identity();
    }
    if (t == "scaling") {
        only_keys(j, where, {"type", "lambda"});
        return MapExpr::scaling(exact(need(j, "lambda", where), where + ".lambda"));
    }
    if (t == "rationality-branch") {
        only_keys(j, where, {"type", "rational", "irrational"});
        return MapExpr::rationality_branch(map_expr(need(j, "rational", where), where + ".rational"),
                                           map_expr(need(j, "irrational", where), where + ".irrational"));
    }
    if (t == "circle-linear") {
        only_keys(j, where, {"type", "k"});
        return MapExpr::circle_linear(integer(need(j, "k", where), where + ".k"));
    }
    if (t == "torus-linear") {
        only_keys(j, where, {"type", "matrix"});
        const json& m = need(j, "matrix", where);
        if (!m.is_array() || m.size() != 2 || !m[0].is_array() || !m[1].is_array() || m[0].size() != 2 ||
            m[1].size() != 2)
            bad(where + ".matrix", "expected [[a, b], [c, d]]");
        Matrix2 mat{};
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                mat[r][c] = integer(m[r][c], where + ".matrix");
        return MapExpr::torus_linear(mat);
    }
    if (t == "cubic") {
        only_keys(j, where, {"type"});
        return MapExpr::cubic();
    }
    if (t == "cube-root") {
        only_keys(j, where, {"type"});
        return MapExpr::cube_root();
    }
    if (t == "constant") {
        only_keys(j, where, {"type", "value"});
        return MapExpr::constant(exact(need(j, "value", where), where + ".value"));
    }
    bad(where, "unknown map type '" + t + "'");
}

StructuredSet structured_set(const json& j, const std::string& where);

std::optional<QSqrt2> bound(const json& j, const char* key, const std::string& where)
{
    if (!j.contains(key) || j.at(key).is_null())
        return std::nullopt;
    return exact(j.at(key), where + "." + key);
}

StructuredSet structured_set(const json& j, const std::string& where)
{
    const std::string t = type_of(j, where);
    auto members = [&]() {
        const json& m = need(j, "members", where);
        if (!m.is_array())
            bad(where + ".members", "expected a list");
        std::vector<StructuredSet> out;
        for (std::size_t i = 0; i < m.size(); ++i)
            out.push_back(structured_set(m[i], where + ".members[" + std::to_string(i) + "]"));
        return out;
    };
    if (t == "interval") {
        only_keys(j, where, {"type", "lo", "hi", "closed_lo", "closed_hi"});
        return StructuredSet::interval(bound(j, "lo", where), bound(j, "hi", where),
                                       j.contains("closed_lo") ? boolean(j["closed_lo"], where) : true,
                                       j.contains("closed_hi") ? boolean(j["closed_hi"], where) : true);
    }
    if (t == "closed" || t == "open") {
        only_keys(j, where, {"type", "lo", "hi"});
        const QSqrt2 lo = exact(need(j, "lo", where), where + ".lo");
        const QSqrt2 hi = exact(need(j, "hi", where), where + ".hi");
        return t == "closed" ? StructuredSet::closed(lo, hi) : StructuredSet::open(lo, hi);
    }
    if (t == "finite") {
        only_keys(j, where, {"type", "points"});
        const json& p = need(j, "points", where);
        if (!p.is_array())
            bad(where + ".points", "expected a list");
        std::vector<QSqrt2> pts;
        for (std::size_t i = 0; i < p.size(); ++i)
            pts.push_back(exact(p[i], where + ".points[" + std::to_string(i) + "]"));
        return StructuredSet::finite(std::move(pts));
    }
    if (t == "harmonic") {
        only_keys(j, where, {"type", "sign", "n_min", "n_max"});
        const long sign = j.contains("sign") ? integer(j["sign"], where + ".sign") : 1;
        if (sign != 1 && sign != -1)
            bad(where + ".sign", "must be 1 or -1");
        const Integer n_min = j.contains("n_min") ? Integer(integer(j["n_min"], where + ".n_min")) : Integer(1);
        std::optional<Integer> n_max;
        if (j.contains("n_max") && !j["n_max"].is_null())
            n_max = Integer(integer(j["n_max"], where + ".n_max"));
        return StructuredSet::harmonic(static_cast<int>(sign), n_min, n_max);
    }
    if (t == "progression") {
        only_keys(j, where, {"type", "anchor", "step", "k_lo", "k_hi"});
        return StructuredSet::progression(exact(need(j, "anchor", where), where + ".anchor"),
                                          rational(need(j, "step", where), where + ".step"),
                                          Integer(integer(need(j, "k_lo", where), where + ".k_lo")),
                                          Integer(integer(need(j, "k_hi", where), where + ".k_hi")));
    }
    if (t == "union") {
        only_keys(j, where, {"type", "members"});
        return StructuredSet::set_union(members());
    }
    if (t == "intersection") {
        only_keys(j, where, {"type", "members"});
        return StructuredSet::set_intersection(members());
    }
    if (t == "full-line") {
        only_keys(j, where, {"type"});
        return StructuredSet::full_line();
    }
    bad(where, "unknown set type '" + t + "'");
}

MetricSpace metric_space(const json& j, const std::string& where)
{
    const std::string t = type_of(j, where);
    if (t == "real-line" || t == "circle" || t == "torus2") {
        only_keys(j, where, {"type"});
        return t == "real-line" ? MetricSpace::real_line() : t == "circle" ? MetricSpace::circle() : MetricSpace::torus2();
    }
    if (t == "product") {
        only_keys(j, where, {"type", "left", "right", "gamma"});
        return MetricSpace::product(metric_space(need(j, "left", where), where + ".left"),
                                    metric_space(need(j, "right", where), where + ".right"),
                                    gamma_fn(need(j, "gamma", where), where + ".gamma"));
    }
    if (t == "bounded-transform") {
        only_keys(j, where, {"type", "inner", "gamma"});
        return MetricSpace::bounded_transform(metric_space(need(j, "inner", where), where + ".inner"),
                                              gamma_fn(need(j, "gamma", where), where + ".gamma"));
    }
    bad(where, "unknown space type '" + t + "'");
}

Family family(const json& j, const std::string& where)
{
    const std::string t = type_of(j, where);
    if (t == "factorial-branch") {
        only_keys(j, where, {"type"});
        return Family{FamilyKind::FactorialBranch, {}};
    }
    if (t == "constant") {
        only_keys(j, where, {"type", "map"});
        return Family{FamilyKind::Constant, {map_expr(need(j, "map", where), where + ".map")}};
    }
    if (t == "cycle") {
        only_keys(j, where, {"type", "maps"});
        const json& m = need(j, "maps", where);
        if (!m.is_array() || m.empty())
            bad(where + ".maps", "expected a nonempty list");
        Family f{FamilyKind::Cycle, {}};
        for (std::size_t i = 0; i < m.size(); ++i)
            f.maps.push_back(map_expr(m[i], where + ".maps[" + std::to_string(i) + "]"));
        return f;
    }
    bad(where, "unknown family type '" + t + "'");
}

OrbitSystem orbit_system(const json& j, const std::string& where)
{
    const std::string t = type_of(j, where);
    if (t == "iterated") {
        only_keys(j, where, {"type", "map"});
        return OrbitSystem::iterated(map_expr(need(j, "map", where), where + ".map"));
    }
    if (t == "time-varying") {
        only_keys(j, where, {"type", "family"});
        return OrbitSystem::time_varying(family(need(j, "family", where), where + ".family"));
    }
    if (t == "root-scaling") {
        only_keys(j, where, {"type", "base"});
        return OrbitSystem::root_scaling(rational(need(j, "base", where), where + ".base"));
    }
    if (t == "product") {
        only_keys(j, where, {"type", "first", "second", "gamma"});
        return OrbitSystem::product(orbit_system(need(j, "first", where), where + ".first"),
                                    orbit_system(need(j, "second", where), where + ".second"),
                                    gamma_fn(need(j, "gamma", where), where + ".gamma"));
    }
    if (t == "conjugated") {
        only_keys(j, where, {"type", "inner", "g", "g_inv", "modulus"});
        return conjugate(orbit_system(need(j, "inner", where), where + ".inner"),
                         map_expr(need(j, "g", where), where + ".g"), map_expr(need(j, "g_inv", where), where + ".g_inv"),
                         modulus_fn(need(j, "modulus", where), where + ".modulus"));
    }
    if (t == "power") {
        only_keys(j, where, {"type", "inner", "m"});
        const long m = integer(need(j, "m", where), where + ".m");
        if (m < 1)
            bad(where + ".m", "must be at least 1");
        return power(orbit_system(need(j, "inner", where), where + ".inner"), static_cast<unsigned long>(m));
    }
    if (t == "restricted") {
        only_keys(j, where, {"type", "inner", "carrier", "probes"});
        const long probes = j.contains("probes") ? integer(j["probes"], where + ".probes") : 64;
        return restrict_to(orbit_system(need(j, "inner", where), where + ".inner"),
                           structured_set(need(j, "carrier", where), where + ".carrier"),
                           static_cast<std::size_t>(std::max(0L, probes)));
    }
    bad(where, "unknown system type '" + t + "'");
}

// ---------------------------------------------------------------- budget

struct BudgetSpec {
    std::optional<QSqrt2> eps_max;
    std::optional<Rational> ratio;
    std::optional<long> levels;
    std::optional<long> horizon;
    std::optional<long> samples;
    std::optional<long> seed;
    std::optional<long> precision;

    bool empty() const { return !eps_max && !ratio && !levels && !horizon && !samples && !seed && !precision; }

    void apply(ScaleBudget& b) const
    {
        if (eps_max)
            b.eps_max = *eps_max;
        if (ratio)
            b.ratio = *ratio;
        if (levels)
            b.levels = static_cast<unsigned>(*levels);
        if (horizon)
            b.horizon = static_cast<unsigned long>(*horizon);
        if (samples)
            b.samples = static_cast<std::size_t>(*samples);
        if (seed)
            b.seed = static_cast<std::uint64_t>(*seed);
        if (precision)
            b.precision = static_cast<unsigned>(*precision);
    }

    json to_json() const
    {
        json j = json::object();
        if (eps_max)
            j["eps_max"] = eps_max->to_string();
        if (ratio)
            j["ratio"] = ratio->to_string();
        if (levels)
            j["levels"] = *levels;
        if (horizon)
            j["horizon"] = *horizon;
        if (samples)
            j["samples"] = *samples;
        if (seed)
            j["seed"] = *seed;
        if (precision)
            j["precision"] = *precision;
        return j;
    }
};

BudgetSpec budget_spec(const json& j)
{
    const std::string where = "budget";
    only_keys(j, where, {"eps_max", "ratio", "levels", "horizon", "samples", "seed", "precision"});
    BudgetSpec s;
    auto positive = [&](const char* key) -> std::optional<long> {
        if (!j.contains(key))
            return std::nullopt;
        const long v = integer(j[key], where + "." + key);
        if (v < 1)
            bad(where + "." + key, "must be at least 1");
        return v;
    };
    if (j.contains("eps_max"))
        s.eps_max = exact(j["eps_max"], where + ".eps_max");
    if (j.contains("ratio"))
        s.ratio = rational(j["ratio"], where + ".ratio");
    s.levels = positive("levels");
    s.horizon = positive("horizon");
    s.samples = positive("samples");
    s.precision = positive("precision");
    if (j.contains("seed")) {
        s.seed = integer(j["seed"], where + ".seed");
        if (*s.seed < 0)
            bad(where + ".seed", "must be nonnegative");
    }
    return s;
}

json budget_json(const ScaleBudget& b)
{
    return json{{"eps_max", b.eps_max.to_string()}, {"ratio", b.ratio.to_string()},
                {"levels", b.levels},               {"horizon", b.horizon},
                {"samples", b.samples},             {"seed", b.seed},
                {"precision", b.precision}};
}

// ---------------------------------------------------------------- report pieces

json point_json(const Point& p)
{
    json a = json::array();
    for (const auto& c : p.coords())
        a.push_back(c.to_string());
    return a;
}

json query_json(const Query& q)
{
    json j{{"kind", std::string(to_string(q.kind))}};
    json pts = json::array();
    for (const auto& p : q.points)
        pts.push_back(point_json(p));
    j["points"] = pts;
    if (q.set)
        j["set"] = q.set->to_string();
    if (q.threshold)
        j["threshold"] = q.threshold->to_string();
    return j;
}

json witness_json(const SeparationWitness& w)
{
    json j{{"level", w.level.to_string()},
           {"y", point_json(w.y)},
           {"n", w.n},
           {"separation", w.separation.to_string()},
           {"threshold", w.threshold.to_string()},
           {"strict", w.strict},
           {"sample_index", w.sample_index}};
    if (w.base)
        j["base"] = point_json(*w.base);
    return j;
}

json certificate_json(const RefutationCertificate& c)
{
    json j{{"kind", std::string(to_string(c.kind))}, {"level", c.level.to_string()}, {"on_grid", c.on_grid}};
    if (c.bound)
        j["bound"] = c.bound->to_string();
    if (c.kind == CertificateKind::CollapsedOrbit)
        j["n0"] = c.n0;
    if (c.x)
        j["x"] = point_json(*c.x);
    if (c.y)
        j["y"] = point_json(*c.y);
    if (!c.note.empty())
        j["note"] = c.note;
    return j;
}

json verdict_json(const Verdict& v)
{
    json j{{"query", query_json(v.query)}, {"status", std::string(to_string(v.status))}};
    if (v.certificate)
        j["certificate"] = certificate_json(*v.certificate);
    json ws = json::array();
    for (const auto& w : v.witnesses)
        ws.push_back(witness_json(w));
    j["witnesses"] = ws;
    j["diagnostics"] = v.diagnostics;
    return j;
}

void collect_warnings(const Verdict& v, std::vector<std::string>& warnings)
{
    for (const auto& d : v.diagnostics)
        if (d.rfind("definition-domain", 0) == 0)
            warnings.push_back(d);
}

// ---------------------------------------------------------------- commands

struct Context {
    json config;      // as read
    json echo;        // effective config
    std::string command;
    std::optional<std::string> catalog;
    BudgetSpec overrides;
    bool have_budget = false;
    unsigned workers = 1;
    std::vector<std::string> warnings;
};

struct Subject {
    OrbitSystem system;
    MetricSpace space;
    std::map<std::string, StructuredSet> sets;
    ScaleBudget budget;
};

Subject subject(const Context& cx)
{
    const json& c = cx.config;
    std::optional<OrbitSystem> sys;
    std::optional<MetricSpace> space;
    std::map<std::string, StructuredSet> sets;
    ScaleBudget budget;
    if (cx.catalog) {
        if (c.contains("system"))
            bad("config", "give either 'catalog' or 'system', not both");
        const CatalogEntry* e = nullptr;
        try {
            e = &catalog_get(*cx.catalog);
        } catch (const Error& err) {
            bad("catalog", err.what());
        }
        sys = e->system;
        space = e->space;
        budget = e->budget;
        for (const auto& [name, s] : e->subsets)
            sets.emplace(name, s);
    } else {
        sys = orbit_system(need(c, "system", "config"), "system");
    }
    if (c.contains("space"))
        space = metric_space(c["space"], "space");
    if (!space)
        space = sys->natural_space();
    if (c.contains("sets")) {
        if (!c["sets"].is_object())
            bad("sets", "expected an object of named sets");
        for (const auto& [name, s] : c["sets"].items())
            sets.insert_or_assign(name, structured_set(s, "sets." + name));
    }
    cx.overrides.apply(budget);
    budget.workers = cx.workers;
    try {
        budget.validate();
    } catch (const Error& e) {
        bad("budget", e.what());
    }
    return Subject{*sys, *space, std::move(sets), budget};
}

StructuredSet set_ref(const json& j, const Subject& s, const std::string& where)
{
    if (j.is_string()) {
        auto it = s.sets.find(j.get<std::string>());
        if (it == s.sets.end())
            bad(where, "no set named '" + j.get<std::string>() + "'");
        return it->second;
    }
    return structured_set(j, where);
}

Scalar threshold(const json& j, const std::string& where)
{
    const QSqrt2 d = exact(j, where);
    if (d.sign() <= 0)
        bad(where, "must be positive");
    return Scalar(d);
}

Query query(const json& j, const Subject& s, const std::string& where)
{
    only_keys(j, where, {"kind", "x", "points", "set", "d", "c"});
    const json& k = need(j, "kind", where);
    if (!k.is_string())
        bad(where + ".kind", "expected a string");
    const std::string kind = k.get<std::string>();
    Query q;
    static const std::map<std::string, QueryKind> kinds = {
        {"oe", QueryKind::Oe},   {"oe-of-set", QueryKind::OeOfSet},   {"roe", QueryKind::Roe},
        {"roe-of-set", QueryKind::RoeOfSet}, {"expansive", QueryKind::Expansive}, {"cw-expansive", QueryKind::CwExpansive},
    };
    auto it = kinds.find(kind);
    if (it == kinds.end())
        bad(where + ".kind", "unknown query kind '" + kind + "'");
    q.kind = it->second;
    const bool point_form = q.kind != QueryKind::Expansive && q.kind != QueryKind::CwExpansive;
    const bool needs_set = q.kind == QueryKind::OeOfSet || q.kind == QueryKind::RoeOfSet || q.kind == QueryKind::CwExpansive;
    const bool needs_d = q.kind == QueryKind::Oe || q.kind == QueryKind::OeOfSet || q.kind == QueryKind::Expansive;
    if (point_form)
        q.points = {point(need(j, "x", where), where + ".x")};
    else if (q.kind == QueryKind::Expansive)
        q.points = points(need(j, "points", where), where + ".points");
    if (needs_set)
        q.set = set_ref(need(j, "set", where), s, where + ".set");
    if (needs_d)
        q.threshold = threshold(need(j, "d", where), where + ".d");
    if (q.kind == QueryKind::CwExpansive)
        q.threshold = threshold(need(j, "c", where), where + ".c");
    // Reject fields the kind does not use.
    for (const auto& [key, v] : j.items()) {
        const bool used = key == "kind" || (key == "x" && point_form) ||
                          (key == "points" && q.kind == QueryKind::Expansive) || (key == "set" && needs_set) ||
                          (key == "d" && needs_d) || (key == "c" && q.kind == QueryKind::CwExpansive);
        if (!used)
            bad(where, "field '" + key + "' does not apply to " + kind);
    }
    if (q.kind == QueryKind::Expansive && q.points.size() < 2)
        bad(where + ".points", "need at least two points");
    return q;
}

void require_budget(const Context& cx)
{
    if (!cx.have_budget)
        bad("config", "command '" + cx.command + "' needs a 'budget' object");
}

json cmd_classify(Context& cx)
{
    require_budget(cx);
    const Subject s = subject(cx);
    const json& qs = need(cx.config, "queries", "config");
    if (!qs.is_array() || qs.empty())
        bad("queries", "expected a nonempty list");
    std::vector<Query> queries;
    for (std::size_t i = 0; i < qs.size(); ++i)
        queries.push_back(query(qs[i], s, "queries[" + std::to_string(i) + "]"));
    cx.echo["budget"] = budget_json(s.budget);
    json results = json::array();
    for (const auto& q : queries) {
        const Verdict v = run_query(s.system, s.space, q, s.budget);
        collect_warnings(v, cx.warnings);
        results.push_back(verdict_json(v));
    }
    return json{{"system", s.system.to_string()}, {"space", s.space.to_string()}, {"results", results}};
}

json cmd_scan(Context& cx)
{
    require_budget(cx);
    const Subject s = subject(cx);
    const auto cands = points(need(cx.config, "candidates", "config"), "candidates");
    const Scalar d = threshold(need(cx.config, "d", "config"), "d");
    std::optional<StructuredSet> a;
    if (cx.config.contains("set"))
        a = set_ref(cx.config["set"], s, "set");
    cx.echo["budget"] = budget_json(s.budget);
    json rows = json::array();
    for (const auto& c : cands) {
        const Verdict oe = a ? oe_point_of_set_verdict(s.system, s.space, c, *a, d, s.budget)
                             : oe_point_verdict(s.system, s.space, c, d, s.budget);
        const Verdict roe = a ? roe_point_of_set_verdict(s.system, s.space, c, *a, s.budget)
                              : roe_point_verdict(s.system, s.space, c, s.budget);
        rows.push_back(json{{"candidate", point_json(c)}, {"oe", verdict_json(oe)}, {"roe", verdict_json(roe)}});
    }
    return json{{"system", s.system.to_string()}, {"space", s.space.to_string()}, {"results", rows}};
}

struct ProfileRow {
    unsigned long n;
    Scalar separation;
    std::string lo;
    std::string hi;
    bool certified;
};

std::vector<ProfileRow> profile_rows(const Subject& s, const Point& x, const Point& y, const Scalar& d)
{
    std::vector<ProfileRow> rows;
    auto cx = make_cursor(s.system, x, s.budget.precision);
    auto cy = make_cursor(s.system, y, s.budget.precision);
    for (unsigned long n = 1; n <= s.budget.horizon; ++n) {
        cx->advance();
        cy->advance();
        Scalar sep = distance(s.space, cx->current(), cy->current());
        const Rational lo = sep.lower_bound(s.budget.precision);
        const Rational hi = sep.upper_bound(s.budget.precision);
        rows.push_back({n, sep, to_decimal(lo, 12, false), to_decimal(hi, 12, true), cmp_gt(sep, d) == Tri::True});
    }
    return rows;
}

json cmd_profile(Context& cx, std::vector<ProfileRow>& rows)
{
    require_budget(cx);
    const Subject s = subject(cx);
    const Point x = point(need(cx.config, "x", "config"), "x");
    const Point y = point(need(cx.config, "y", "config"), "y");
    const Scalar d = threshold(need(cx.config, "d", "config"), "d");
    cx.echo["budget"] = budget_json(s.budget);
    rows = profile_rows(s, x, y, d);
    json out = json::array();
    std::optional<unsigned long> first;
    for (const auto& r : rows) {
        if (r.certified && !first)
            first = r.n;
        out.push_back(json{{"n", r.n},
                           {"separation", r.separation.to_string()},
                           {"separation_lo", r.lo},
                           {"separation_hi", r.hi},
                           {"certified", r.certified}});
    }
    return json{{"system", s.system.to_string()},
                {"space", s.space.to_string()},
                {"separation_time", first ? json(*first) : json(nullptr)},
                {"rows", out}};
}

json cmd_verify(Context& cx)
{
    std::optional<std::set<std::string>> only;
    if (cx.config.contains("laws")) {
        const json& l = cx.config["laws"];
        if (!l.is_array())
            bad("laws", "expected a list of law ids");
        only.emplace();
        for (const auto& id : l) {
            if (!id.is_string())
                bad("laws", "law ids are strings");
            const auto& ids = law_ids();
            if (std::find(ids.begin(), ids.end(), id.get<std::string>()) == ids.end())
                bad("laws", "unknown law '" + id.get<std::string>() + "'");
            only->insert(id.get<std::string>());
        }
    }
    if (!cx.overrides.empty())
        cx.echo["budget"] = cx.overrides.to_json();
    json laws = json::array();
    bool all = true;
    for (const auto& nl : law_suite()) {
        if (only && !only->count(nl.law))
            continue;
        LawInstance in = nl.data;
        cx.overrides.apply(in.budget);
        in.budget.workers = cx.workers;
        try {
            in.budget.validate();
        } catch (const Error& e) {
            bad("budget", e.what());
        }
        const LawReport r = law_check(nl.law, in);
        all = all && r.holds_at_scale;
        for (const auto& d : r.details)
            if (d.rfind("checked form", 0) == 0)
                cx.warnings.push_back(nl.law + ": " + d);
        laws.push_back(json{{"law", r.law},
                            {"instance", nl.instance},
                            {"holds_at_scale", r.holds_at_scale},
                            {"checked", r.checked},
                            {"agreeing", r.agreeing},
                            {"inconclusive", r.inconclusive},
                            {"details", r.details}});
    }
    return json{{"laws", laws}, {"all_hold", all}};
}

json cmd_catalog(Context& cx)
{
    std::vector<std::string> names;
    if (cx.catalog) {
        try {
            (void)catalog_get(*cx.catalog);
        } catch (const Error& e) {
            bad("catalog", e.what());
        }
        names = {*cx.catalog};
    } else {
        names = catalog_names();
    }
    if (!cx.overrides.empty())
        cx.echo["budget"] = cx.overrides.to_json();
    json entries = json::array();
    bool all = true;
    for (const auto& name : names) {
        const CatalogEntry& e = catalog_get(name);
        ScaleBudget b = e.budget;
        cx.overrides.apply(b);
        b.workers = cx.workers;
        try {
            b.validate();
        } catch (const Error& err) {
            bad("budget", err.what());
        }
        json subsets = json::object();
        for (const auto& [sn, set] : e.subsets)
            subsets[sn] = set.to_string();
        json rows = json::array();
        for (const auto& row : e.expected) {
            const RowResult r = run_row(e, row, b);
            all = all && r.matches;
            json verdicts = json::array();
            for (const auto& v : r.verdicts) {
                collect_warnings(v, cx.warnings);
                verdicts.push_back(verdict_json(v));
            }
            std::string expected = row.kind == RowKind::SeparationTime ? std::to_string(*row.time)
                                                                        : std::string(to_string(row.expected));
            if (row.certificate)
                expected += "(" + std::string(to_string(*row.certificate)) + ")";
            json jr{{"label", row.label},
                    {"provenance", std::string(to_string(row.provenance))},
                    {"expected", expected},
                    {"observed", r.observed},
                    {"matches", r.matches},
                    {"verdicts", verdicts}};
            if (row.kind == RowKind::SeparationTime)
                jr["query"] = json{{"kind", "separation-time"},
                                   {"points", json::array({point_json(row.query.points[0]), point_json(row.query.points[1])})},
                                   {"threshold", row.query.threshold->to_string()}};
            else
                jr["query"] = query_json(row.query);
            rows.push_back(std::move(jr));
        }
        entries.push_back(json{{"name", e.name},
                               {"notes", e.notes},
                               {"system", e.system.to_string()},
                               {"space", e.space.to_string()},
                               {"subsets", subsets},
                               {"budget", budget_json(b)},
                               {"rows", rows}});
    }
    return json{{"entries", entries}, {"all_match", all}};
}

std::string extension_format(const std::string& path)
{
    const auto dot = path.rfind('.');
    if (dot == std::string::npos)
        return "";
    const std::string ext = path.substr(dot + 1);
    return ext == "csv" || ext == "json" ? ext : "";
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"orbex: orbit-expansivity classifications at finite scale", "orbex"};
    std::string config_path;
    std::optional<long> seed, horizon, levels, samples;
    std::optional<std::string> eps_max, out_path, format;
    unsigned workers = 1;
    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    app.add_option("--seed", seed, "override budget.seed");
    app.add_option("--horizon", horizon, "override budget.horizon");
    app.add_option("--eps-max", eps_max, "override budget.eps_max (e.g. 1/4)");
    app.add_option("--levels", levels, "override budget.levels");
    app.add_option("--samples", samples, "override budget.samples");
    app.add_option("--out", out_path, "report path (default: standard output)");
    app.add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--workers", workers, "parallel workers for witness scans")->check(CLI::Range(1u, 256u));

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return Ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return InvalidConfig;
    }

    const auto start = std::chrono::steady_clock::now();
    Context cx;
    cx.workers = workers;
    std::string fmt;
    std::string path;
    std::string body;
    try {
        std::ifstream in(config_path);
        if (!in)
            bad("config", "cannot read '" + config_path + "'");
        try {
            cx.config = json::parse(in);
        } catch (const json::parse_error& e) {
            bad("config", std::string("not valid JSON: ") + e.what());
        }
        only_keys(cx.config, "config",
                  {"schema", "command", "catalog", "system", "space", "sets", "queries", "candidates", "set", "d",
                   "x", "y", "budget", "output", "laws"});
        const json& schema = need(cx.config, "schema", "config");
        if (!schema.is_string() || schema.get<std::string>() != config_schema)
            bad("config.schema", std::string("expected \"") + config_schema + "\"");
        const json& command = need(cx.config, "command", "config");
        static const std::set<std::string> commands = {"classify", "scan", "profile", "verify", "catalog"};
        if (!command.is_string() || !commands.count(command.get<std::string>()))
            bad("config.command", "expected one of classify, scan, profile, verify, catalog");
        cx.command = command.get<std::string>();
        if (cx.config.contains("catalog")) {
            if (!cx.config["catalog"].is_string())
                bad("config.catalog", "expected an entry name");
            cx.catalog = cx.config["catalog"].get<std::string>();
        }
        if (cx.config.contains("budget")) {
            cx.have_budget = true;
            cx.overrides = budget_spec(cx.config["budget"]);
        }
        auto flag = [&](const std::optional<long>& v, std::optional<long>& slot, const char* name, long min) {
            if (!v)
                return;
            if (*v < min)
                bad(std::string("--") + name, "must be at least " + std::to_string(min));
            slot = *v;
        };
        flag(seed, cx.overrides.seed, "seed", 0);
        flag(horizon, cx.overrides.horizon, "horizon", 1);
        flag(levels, cx.overrides.levels, "levels", 1);
        flag(samples, cx.overrides.samples, "samples", 1);
        if (eps_max)
            cx.overrides.eps_max = exact(json(*eps_max), "--eps-max");

        if (cx.config.contains("output")) {
            const json& o = cx.config["output"];
            only_keys(o, "output", {"path", "format"});
            if (o.contains("path")) {
                if (!o["path"].is_string())
                    bad("output.path", "expected a string");
                path = o["path"].get<std::string>();
            }
            if (o.contains("format")) {
                if (!o["format"].is_string() || (o["format"] != "json" && o["format"] != "csv"))
                    bad("output.format", "expected json or csv");
                fmt = o["format"].get<std::string>();
            }
        }
        if (out_path)
            path = *out_path;
        if (format)
            fmt = *format;
        const std::string ext = extension_format(path);
        if (!fmt.empty() && !ext.empty() && fmt != ext)
            bad("output", "format '" + fmt + "' conflicts with the extension of '" + path + "'");
        if (fmt.empty())
            fmt = ext.empty() ? "json" : ext;
        if (fmt == "csv" && cx.command != "profile")
            bad("output", "command '" + cx.command + "' emits json only");

        cx.echo = cx.config;
        cx.echo.erase("budget");
        json output = json::object();
        if (!path.empty())
            output["path"] = path;
        output["format"] = fmt;
        cx.echo["output"] = output;

        json result;
        std::vector<ProfileRow> rows;
        try {
            if (cx.command == "classify")
                result = cmd_classify(cx);
            else if (cx.command == "scan")
                result = cmd_scan(cx);
            else if (cx.command == "profile")
                result = cmd_profile(cx, rows);
            else if (cx.command == "verify")
                result = cmd_verify(cx);
            else
                result = cmd_catalog(cx);
        } catch (const Error& e) {
            // Library errors raised while reading the config are config errors.
            if (e.kind() == ErrorKind::ParseError || e.kind() == ErrorKind::InvalidArgument ||
                e.kind() == ErrorKind::UnknownEntry || e.kind() == ErrorKind::UnknownLaw ||
                e.kind() == ErrorKind::DimensionMismatch)
                throw ConfigError(e.what());
            throw;
        }

        if (fmt == "csv") {
            std::ostringstream os;
            os << "n,separation_lo,separation_hi,certified\n";
            for (const auto& r : rows)
                os << r.n << ',' << r.lo << ',' << r.hi << ',' << (r.certified ? "true" : "false") << '\n';
            body = os.str();
        } else {
            json report{{"schema", report_schema},
                        {"tool", json{{"name", "orbex"}, {"version", tool_version}}},
                        {"command", cx.command},
                        {"config", cx.echo},
                        {"result", result},
                        {"warnings", cx.warnings}};
            body = report.dump(2) + "\n";
        }
    } catch (const ConfigError& e) {
        err << "invalid config: " << e.what() << "\n";
        return InvalidConfig;
    } catch (const Error& e) {
        err << "runtime failure: " << e.what() << "\n";
        return RuntimeFailure;
    } catch (const std::exception& e) {
        err << "runtime failure: " << e.what() << "\n";
        return RuntimeFailure;
    }

    if (path.empty()) {
        out << body;
    } else {
        std::ofstream f(path, std::ios::binary);
        if (!(f << body)) {
            err << "runtime failure: cannot write '" << path << "'\n";
            return RuntimeFailure;
        }
    }
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    err << "wall time: " << ms << " ms\n";
    return Ok;
}

} // namespace orbex::cli

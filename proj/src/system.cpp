#include "orbex/system.hpp"

#include <variant>

namespace orbex {

// ---------------------------------------------------------------- MapExpr

struct MapExpr::Node {
    MapKind kind{};
    Scalar a;                 // Affine lambda, Constant value
    Scalar b;                 // Affine offset
    long k = 0;               // CircleLinear
    Matrix2 m{};              // TorusLinear
    std::optional<MapExpr> on_rational;
    std::optional<MapExpr> on_irrational;

    static Node of(MapKind k)
    {
        Node n;
        n.kind = k;
        return n;
    }
};

MapExpr MapExpr::affine(Scalar lambda, Scalar c)
{
    Node n = Node::of(MapKind::Affine);
    n.a = std::move(lambda);
    n.b = std::move(c);
    return MapExpr(std::make_shared<const Node>(std::move(n)));
}

MapExpr MapExpr::rationality_branch(MapExpr on_rational, MapExpr on_irrational)
{
    if (on_rational.dimension() != 1 || on_irrational.dimension() != 1) {
        throw Error(ErrorKind::DimensionMismatch, "rationality branches act on the line");
    }
    Node n = Node::of(MapKind::RationalityBranch);
    n.on_rational = std::move(on_rational);
    n.on_irrational = std::move(on_irrational);
    return MapExpr(std::make_shared<const Node>(std::move(n)));
}

MapExpr MapExpr::circle_linear(long k)
{
    if (k < 2) {
        throw Error(ErrorKind::InvalidArgument, "circle multiplier must be at least 2");
    }
    Node n = Node::of(MapKind::CircleLinear);
    n.k = k;
    return MapExpr(std::make_shared<const Node>(std::move(n)));
}

MapExpr MapExpr::torus_linear(Matrix2 m)
{
    const long det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if (det != 1 && det != -1) {
        throw Error(ErrorKind::InvalidArgument, "torus matrix must have determinant +-1");
    }
    Node n = Node::of(MapKind::TorusLinear);
    n.m = m;
    return MapExpr(std::make_shared<const Node>(std::move(n)));
}

MapExpr MapExpr::cubic()
{
    return MapExpr(std::make_shared<const Node>(Node::of(MapKind::Cubic)));
}

MapExpr MapExpr::cube_root()
{
    return MapExpr(std::make_shared<const Node>(Node::of(MapKind::CubeRoot)));
}

MapExpr MapExpr::constant(Scalar v)
{
    Node n = Node::of(MapKind::Constant);
    n.a = std::move(v);
    return MapExpr(std::make_shared<const Node>(std::move(n)));
}

MapKind MapExpr::kind() const noexcept { return node_->kind; }

namespace {

[[noreturn]] void wrong_kind(const char* what, const std::string& self)
{
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " on " + self);
}

} // namespace

const Scalar& MapExpr::lambda() const
{
    if (kind() != MapKind::Affine) {
        wrong_kind("lambda()", to_string());
    }
    return node_->a;
}

const Scalar& MapExpr::offset() const
{
    if (kind() != MapKind::Affine) {
        wrong_kind("offset()", to_string());
    }
    return node_->b;
}

const MapExpr& MapExpr::on_rational() const
{
    if (kind() != MapKind::RationalityBranch) {
        wrong_kind("on_rational()", to_string());
    }
    return *node_->on_rational;
}

const MapExpr& MapExpr::on_irrational() const
{
    if (kind() != MapKind::RationalityBranch) {
        wrong_kind("on_irrational()", to_string());
    }
    return *node_->on_irrational;
}

long MapExpr::multiplier() const
{
    if (kind() != MapKind::CircleLinear) {
        wrong_kind("multiplier()", to_string());
    }
    return node_->k;
}

const Matrix2& MapExpr::matrix() const
{
    if (kind() != MapKind::TorusLinear) {
        wrong_kind("matrix()", to_string());
    }
    return node_->m;
}

const Scalar& MapExpr::value() const
{
    if (kind() != MapKind::Constant) {
        wrong_kind("value()", to_string());
    }
    return node_->a;
}

bool MapExpr::is_injective() const
{
    switch (kind()) {
    case MapKind::Affine: return lambda().sign().value_or(0) != 0;
    case MapKind::TorusLinear:
    case MapKind::Cubic:
    case MapKind::CubeRoot: return true;
    default: return false;
    }
}

namespace {

Scalar reduce_unit(const Scalar& s)
{
    return MetricSpace::circle().canonical(Point(s))[0];
}

} // namespace

Point MapExpr::apply(const Point& x, unsigned precision) const
{
    if (x.dimension() != dimension()) {
        throw Error(ErrorKind::DimensionMismatch, to_string() + " applied to " + x.to_string());
    }
    switch (kind()) {
    case MapKind::Affine: return Point(lambda() * x[0] + offset());
    case MapKind::RationalityBranch: {
        const Tri r = x[0].is_rational();
        if (r == Tri::Unknown) {
            throw Error(ErrorKind::RationalityUndecidable, to_string() + " at " + x.to_string());
        }
        return (r == Tri::True ? on_rational() : on_irrational()).apply(x, precision);
    }
    case MapKind::CircleLinear: return Point(reduce_unit(Scalar(multiplier()) * x[0]));
    case MapKind::TorusLinear: {
        const Matrix2& m = matrix();
        return Point{reduce_unit(Scalar(m[0][0]) * x[0] + Scalar(m[0][1]) * x[1]),
                     reduce_unit(Scalar(m[1][0]) * x[0] + Scalar(m[1][1]) * x[1])};
    }
    case MapKind::Cubic: return Point(x[0] * x[0] * x[0]);
    case MapKind::CubeRoot: return Point(orbex::cube_root(x[0], precision));
    case MapKind::Constant: return Point(value());
    }
    return x;
}

std::string MapExpr::to_string() const
{
    switch (kind()) {
    case MapKind::Affine: {
        if (offset() == Scalar(0)) {
            return lambda() == Scalar(1) ? "x" : lambda().to_string() + "*x";
        }
        return lambda().to_string() + "*x + " + offset().to_string();
    }
    case MapKind::RationalityBranch:
        return "branch(rational: " + on_rational().to_string() + ", irrational: " + on_irrational().to_string() + ")";
    case MapKind::CircleLinear: return std::to_string(multiplier()) + "*x mod 1";
    case MapKind::TorusLinear: {
        const Matrix2& m = matrix();
        return "[[" + std::to_string(m[0][0]) + "," + std::to_string(m[0][1]) + "],[" + std::to_string(m[1][0]) + "," +
               std::to_string(m[1][1]) + "]] mod 1";
    }
    case MapKind::Cubic: return "x^3";
    case MapKind::CubeRoot: return "x^(1/3)";
    case MapKind::Constant: return value().to_string();
    }
    return "?";
}

Matrix2 multiply(const Matrix2& a, const Matrix2& b)
{
    Matrix2 r{};
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    return r;
}

// ---------------------------------------------------------------- Family, ModulusFn

MapExpr Family::at(unsigned long n) const
{
    switch (kind) {
    case FamilyKind::FactorialBranch: {
        const Scalar m(static_cast<long>(n + 1));
        return MapExpr::rationality_branch(MapExpr::constant(m), MapExpr::scaling(m));
    }
    case FamilyKind::Constant: return maps.at(0);
    case FamilyKind::Cycle: return maps.at(n % maps.size());
    }
    return MapExpr::identity();
}

std::string Family::to_string() const
{
    switch (kind) {
    case FamilyKind::FactorialBranch: return "f_n = branch(rational: n+1, irrational: (n+1)*x)";
    case FamilyKind::Constant: return "f_n = " + maps.at(0).to_string();
    case FamilyKind::Cycle: {
        std::string s = "cycle(";
        for (std::size_t i = 0; i < maps.size(); ++i) {
            s += (i ? "; " : "") + maps[i].to_string();
        }
        return s + ")";
    }
    }
    return "?";
}

ModulusFn ModulusFn::scaled(Rational k)
{
    if (k.sign() <= 0) {
        throw Error(ErrorKind::InvalidArgument, "modulus factor must be positive");
    }
    return {ModulusKind::Scaled, std::move(k)};
}

Scalar ModulusFn::apply(const Scalar& delta) const
{
    if (kind == ModulusKind::Scaled) {
        return Scalar(k) * delta;
    }
    return delta * delta * delta / Scalar(4);
}

std::string ModulusFn::to_string() const
{
    if (kind == ModulusKind::CubeQuarter) {
        return "delta^3/4";
    }
    return k == Rational(1) ? "delta" : k.to_string() + "*delta";
}

// ---------------------------------------------------------------- OrbitSystem

struct OrbitSystem::Node {
    SystemKind kind{};
    std::optional<MapExpr> f;       // Iterated map, Conjugated g
    std::optional<MapExpr> g_inv;   // Conjugated
    Family family;
    Rational base;
    std::optional<OrbitSystem> a;   // Product first, Conjugated/Power/Restricted inner
    std::optional<OrbitSystem> b;   // Product second
    GammaFn gamma;
    ModulusFn modulus;
    unsigned long m = 1;
    std::optional<StructuredSet> carrier;

    static Node of(SystemKind k)
    {
        Node n;
        n.kind = k;
        return n;
    }
};

OrbitSystem OrbitSystem::iterated(MapExpr f)
{
    Node n = Node::of(SystemKind::Iterated);
    n.f = std::move(f);
    return OrbitSystem(std::make_shared<const Node>(std::move(n)));
}

OrbitSystem OrbitSystem::time_varying(Family family)
{
    if (family.kind != FamilyKind::FactorialBranch) {
        if (family.maps.empty() || (family.kind == FamilyKind::Constant && family.maps.size() != 1)) {
            throw Error(ErrorKind::InvalidArgument, "time-varying family needs its maps");
        }
        for (const auto& f : family.maps) {
            if (f.dimension() != family.maps.front().dimension()) {
                throw Error(ErrorKind::DimensionMismatch, "family maps disagree on dimension");
            }
        }
    }
    Node n = Node::of(SystemKind::TimeVarying);
    n.family = std::move(family);
    return OrbitSystem(std::make_shared<const Node>(std::move(n)));
}

OrbitSystem OrbitSystem::root_scaling(Rational base)
{
    if (base.sign() <= 0) {
        throw Error(ErrorKind::InvalidArgument, "root-scaling base must be positive");
    }
    Node n = Node::of(SystemKind::DirectIterate);
    n.base = std::move(base);
    return OrbitSystem(std::make_shared<const Node>(std::move(n)));
}

OrbitSystem OrbitSystem::product(OrbitSystem f, OrbitSystem g, GammaFn gamma)
{
    Node n = Node::of(SystemKind::Product);
    n.a = std::move(f);
    n.b = std::move(g);
    n.gamma = gamma;
    return OrbitSystem(std::make_shared<const Node>(std::move(n)));
}

OrbitSystem OrbitSystem::conjugated(MapExpr g, OrbitSystem inner, MapExpr g_inv, ModulusFn modulus)
{
    if (g.dimension() != inner.dimension() || g_inv.dimension() != inner.dimension()) {
        throw Error(ErrorKind::DimensionMismatch, "conjugator and inner system disagree on dimension");
    }
    Node n = Node::of(SystemKind::Conjugated);
    n.f = std::move(g);
    n.g_inv = std::move(g_inv);
    n.a = std::move(inner);
    n.modulus = std::move(modulus);
    return OrbitSystem(std::make_shared<const Node>(std::move(n)));
}

OrbitSystem OrbitSystem::power_of(OrbitSystem f, unsigned long m)
{
    if (m == 0) {
        throw Error(ErrorKind::InvalidArgument, "power exponent must be at least 1");
    }
    Node n = Node::of(SystemKind::Power);
    n.a = std::move(f);
    n.m = m;
    return OrbitSystem(std::make_shared<const Node>(std::move(n)));
}

OrbitSystem OrbitSystem::restricted(OrbitSystem f, StructuredSet carrier)
{
    if (f.dimension() != 1) {
        throw Error(ErrorKind::DimensionMismatch, "restriction carriers live on the line");
    }
    Node n = Node::of(SystemKind::Restricted);
    n.a = std::move(f);
    n.carrier = std::move(carrier);
    return OrbitSystem(std::make_shared<const Node>(std::move(n)));
}

SystemKind OrbitSystem::kind() const noexcept { return node_->kind; }

namespace {

const char* kind_name(SystemKind k)
{
    switch (k) {
    case SystemKind::Iterated: return "iterated";
    case SystemKind::TimeVarying: return "time-varying";
    case SystemKind::DirectIterate: return "direct-iterate";
    case SystemKind::Product: return "product";
    case SystemKind::Conjugated: return "conjugated";
    case SystemKind::Power: return "power";
    case SystemKind::Restricted: return "restricted";
    }
    return "?";
}

} // namespace

#define ORBEX_REQUIRE_KIND(cond, what)                                                                            \
    if (!(cond)) {                                                                                                 \
        throw Error(ErrorKind::InvalidArgument, std::string(what) + " on a " + kind_name(kind()) + " system");    \
    }

const MapExpr& OrbitSystem::map() const
{
    ORBEX_REQUIRE_KIND(kind() == SystemKind::Iterated, "map()");
    return *node_->f;
}

const Family& OrbitSystem::family() const
{
    ORBEX_REQUIRE_KIND(kind() == SystemKind::TimeVarying, "family()");
    return node_->family;
}

const Rational& OrbitSystem::base() const
{
    ORBEX_REQUIRE_KIND(kind() == SystemKind::DirectIterate, "base()");
    return node_->base;
}

const OrbitSystem& OrbitSystem::first() const
{
    ORBEX_REQUIRE_KIND(kind() == SystemKind::Product, "first()");
    return *node_->a;
}

const OrbitSystem& OrbitSystem::second() const
{
    ORBEX_REQUIRE_KIND(kind() == SystemKind::Product, "second()");
    return *node_->b;
}

const GammaFn& OrbitSystem::gamma() const
{
    ORBEX_REQUIRE_KIND(kind() == SystemKind::Product, "gamma()");
    return node_->gamma;
}

const OrbitSystem& OrbitSystem::inner() const
{
    ORBEX_REQUIRE_KIND(kind() == SystemKind::Conjugated || kind() == SystemKind::Power ||
                           kind() == SystemKind::Restricted,
                       "inner()");
    return *node_->a;
}

const MapExpr& OrbitSystem::g() const
{
    ORBEX_REQUIRE_KIND(kind() == SystemKind::Conjugated, "g()");
    return *node_->f;
}

const MapExpr& OrbitSystem::g_inv() const
{
    ORBEX_REQUIRE_KIND(kind() == SystemKind::Conjugated, "g_inv()");
    return *node_->g_inv;
}

const ModulusFn& OrbitSystem::modulus() const
{
    ORBEX_REQUIRE_KIND(kind() == SystemKind::Conjugated, "modulus()");
    return node_->modulus;
}

unsigned long OrbitSystem::exponent() const
{
    ORBEX_REQUIRE_KIND(kind() == SystemKind::Power, "exponent()");
    return node_->m;
}

const StructuredSet& OrbitSystem::carrier() const
{
    ORBEX_REQUIRE_KIND(kind() == SystemKind::Restricted, "carrier()");
    return *node_->carrier;
}

#undef ORBEX_REQUIRE_KIND

std::size_t OrbitSystem::dimension() const
{
    switch (kind()) {
    case SystemKind::Iterated: return map().dimension();
    case SystemKind::TimeVarying:
        return family().kind == FamilyKind::FactorialBranch ? 1 : family().maps.front().dimension();
    case SystemKind::DirectIterate: return 1;
    case SystemKind::Product: return first().dimension() + second().dimension();
    case SystemKind::Conjugated:
    case SystemKind::Power:
    case SystemKind::Restricted: return inner().dimension();
    }
    return 1;
}

namespace {

std::optional<MetricSpace> map_space(const MapExpr& f)
{
    switch (f.kind()) {
    case MapKind::CircleLinear: return MetricSpace::circle();
    case MapKind::TorusLinear: return MetricSpace::torus2();
    default: return std::nullopt;
    }
}

} // namespace

MetricSpace OrbitSystem::natural_space() const
{
    switch (kind()) {
    case SystemKind::Iterated: return map_space(map()).value_or(MetricSpace::real_line());
    case SystemKind::TimeVarying:
        if (family().kind != FamilyKind::FactorialBranch) {
            return map_space(family().maps.front()).value_or(MetricSpace::real_line());
        }
        return MetricSpace::real_line();
    case SystemKind::DirectIterate: return MetricSpace::real_line();
    case SystemKind::Product: return MetricSpace::product(first().natural_space(), second().natural_space(), gamma());
    case SystemKind::Conjugated:
    case SystemKind::Power:
    case SystemKind::Restricted: return inner().natural_space();
    }
    return MetricSpace::real_line();
}

bool OrbitSystem::is_markovian() const
{
    switch (kind()) {
    case SystemKind::Iterated:
    case SystemKind::TimeVarying: return true;
    case SystemKind::DirectIterate: return false;
    case SystemKind::Product: return first().is_markovian() && second().is_markovian();
    case SystemKind::Conjugated: return g().is_injective() && inner().is_markovian();
    case SystemKind::Power:
    case SystemKind::Restricted: return inner().is_markovian();
    }
    return false;
}

std::string OrbitSystem::to_string() const
{
    switch (kind()) {
    case SystemKind::Iterated: return "iterate(" + map().to_string() + ")";
    case SystemKind::TimeVarying: return "time-varying(" + family().to_string() + ")";
    case SystemKind::DirectIterate: return "direct(" + base().to_string() + "^(1/n)*x)";
    case SystemKind::Product:
        return "product(" + first().to_string() + ", " + second().to_string() + ", " + gamma().to_string() + ")";
    case SystemKind::Conjugated:
        return "conjugate(" + g().to_string() + ", " + inner().to_string() + ", " + g_inv().to_string() + ")";
    case SystemKind::Power: return "power(" + inner().to_string() + ", " + std::to_string(exponent()) + ")";
    case SystemKind::Restricted: return "restrict(" + inner().to_string() + ", " + carrier().to_string() + ")";
    }
    return "?";
}

// ---------------------------------------------------------------- orbits

namespace {

class MapCursor final : public OrbitCursor {
public:
    MapCursor(MapExpr f, Point x, unsigned p) : f_(std::move(f)), state_(std::move(x)), p_(p) {}
    const Point& current() const override { return state_; }
    void advance() override
    {
        state_ = f_.apply(state_, p_);
        ++index_;
    }

private:
    MapExpr f_;
    Point state_;
    unsigned p_;
};

class FamilyCursor final : public OrbitCursor {
public:
    FamilyCursor(Family fam, const Point& x, unsigned p) : fam_(std::move(fam)), state_(fam_.at(0).apply(x, p)), p_(p) {}
    const Point& current() const override { return state_; }
    void advance() override
    {
        ++index_;
        state_ = fam_.at(index_).apply(state_, p_);
    }

private:
    Family fam_;
    Point state_;
    unsigned p_;
};

class RootCursor final : public OrbitCursor {
public:
    RootCursor(Rational base, Point x, unsigned p) : base_(std::move(base)), x_(std::move(x)), state_(x_), p_(p) {}
    const Point& current() const override { return state_; }
    void advance() override
    {
        ++index_;
        state_ = Point(Scalar(root_enclosure(base_, index_, p_)) * x_[0]);
    }

private:
    Rational base_;
    Point x_;
    Point state_;
    unsigned p_;
};

class ProductCursor final : public OrbitCursor {
public:
    ProductCursor(std::unique_ptr<OrbitCursor> a, std::unique_ptr<OrbitCursor> b)
        : a_(std::move(a)), b_(std::move(b)), state_(Point::concat(a_->current(), b_->current()))
    {
    }
    const Point& current() const override { return state_; }
    void advance() override
    {
        a_->advance();
        b_->advance();
        ++index_;
        state_ = Point::concat(a_->current(), b_->current());
    }

private:
    std::unique_ptr<OrbitCursor> a_;
    std::unique_ptr<OrbitCursor> b_;
    Point state_;
};

class ConjugateCursor final : public OrbitCursor {
public:
    ConjugateCursor(MapExpr g, std::unique_ptr<OrbitCursor> inner, unsigned p)
        : g_(std::move(g)), inner_(std::move(inner)), p_(p), state_(g_.apply(inner_->current(), p_))
    {
    }
    const Point& current() const override { return state_; }
    void advance() override
    {
        inner_->advance();
        ++index_;
        state_ = g_.apply(inner_->current(), p_);
    }

private:
    MapExpr g_;
    std::unique_ptr<OrbitCursor> inner_;
    unsigned p_;
    Point state_;
};

class PowerCursor final : public OrbitCursor {
public:
    PowerCursor(std::unique_ptr<OrbitCursor> inner, unsigned long m) : inner_(std::move(inner)), m_(m) {}
    const Point& current() const override { return inner_->current(); }
    void advance() override
    {
        for (unsigned long i = 0; i < m_; ++i) {
            inner_->advance();
        }
        ++index_;
    }

private:
    std::unique_ptr<OrbitCursor> inner_;
    unsigned long m_;
};

class RestrictedCursor final : public OrbitCursor {
public:
    RestrictedCursor(std::unique_ptr<OrbitCursor> inner, StructuredSet carrier, Point start)
        : inner_(std::move(inner)), carrier_(std::move(carrier)), start_(std::move(start))
    {
        check();
    }
    const Point& current() const override { return inner_->current(); }
    void advance() override
    {
        inner_->advance();
        ++index_;
        check();
    }

private:
    void check() const
    {
        const Point& p = inner_->current();
        const QSqrt2* v = p[0].exact_if();
        // Enclosures cannot be certified inside; only exact escapes are reported.
        if (v != nullptr && !carrier_.contains(*v)) {
            throw NotInvariantError(start_, p,
                                    "orbit of " + start_.to_string() + " leaves " + carrier_.to_string() + " at step " +
                                        std::to_string(index_) + " (" + p.to_string() + ")");
        }
    }

    std::unique_ptr<OrbitCursor> inner_;
    StructuredSet carrier_;
    Point start_;
};

} // namespace

std::unique_ptr<OrbitCursor> make_cursor(const OrbitSystem& system, const Point& x, unsigned precision)
{
    if (x.dimension() != system.dimension()) {
        throw Error(ErrorKind::DimensionMismatch, system.to_string() + " started at " + x.to_string());
    }
    switch (system.kind()) {
    case SystemKind::Iterated: return std::make_unique<MapCursor>(system.map(), x, precision);
    case SystemKind::TimeVarying: return std::make_unique<FamilyCursor>(system.family(), x, precision);
    case SystemKind::DirectIterate: return std::make_unique<RootCursor>(system.base(), x, precision);
    case SystemKind::Product: {
        const std::size_t d1 = system.first().dimension();
        return std::make_unique<ProductCursor>(make_cursor(system.first(), x.slice(0, d1), precision),
                                               make_cursor(system.second(), x.slice(d1, system.second().dimension()),
                                                           precision));
    }
    case SystemKind::Conjugated:
        return std::make_unique<ConjugateCursor>(system.g(), make_cursor(system.inner(), system.g_inv().apply(x, precision),
                                                                          precision),
                                                 precision);
    case SystemKind::Power:
        return std::make_unique<PowerCursor>(make_cursor(system.inner(), x, precision), system.exponent());
    case SystemKind::Restricted:
        return std::make_unique<RestrictedCursor>(make_cursor(system.inner(), x, precision), system.carrier(), x);
    }
    throw Error(ErrorKind::UnsupportedSystemKind, system.to_string());
}

Point iterate(const OrbitSystem& system, unsigned long n, const Point& x, unsigned precision)
{
    if (system.kind() == SystemKind::DirectIterate) {
        if (n == 0) {
            return x;
        }
        return Point(Scalar(root_enclosure(system.base(), n, precision)) * x[0]);
    }
    auto cursor = make_cursor(system, x, precision);
    while (cursor->index() < n) {
        cursor->advance();
    }
    return cursor->current();
}

std::vector<Point> orbit_prefix(const OrbitSystem& system, const Point& x, unsigned long n_max, unsigned precision)
{
    std::vector<Point> out;
    out.reserve(n_max + 1);
    auto cursor = make_cursor(system, x, precision);
    out.push_back(cursor->current());
    while (cursor->index() < n_max) {
        cursor->advance();
        out.push_back(cursor->current());
    }
    return out;
}

// ---------------------------------------------------------------- constructors with checks

namespace {

constexpr std::size_t inverse_checks = 100;
constexpr std::uint64_t inverse_seed = 0x0C0417A7EULL;

bool agrees(const Point& got, const Point& want)
{
    for (std::size_t i = 0; i < want.dimension(); ++i) {
        const QSqrt2& w = want[i].exact();
        if (const auto* e = got[i].exact_if()) {
            if (*e != w) {
                return false;
            }
            continue;
        }
        const Enclosure& enc = *got[i].interval_if();
        const bool inside = QSqrt2(enc.lower()) <= w && w <= QSqrt2(enc.upper());
        if (!inside || enc.width() > Rational(1, 1 << 20)) {
            return false;
        }
    }
    return true;
}

} // namespace

OrbitSystem conjugate(const OrbitSystem& inner, const MapExpr& g, const MapExpr& g_inv, const ModulusFn& modulus)
{
    const MetricSpace space = inner.natural_space();
    const std::size_t dim = inner.dimension();
    const Point center = dim == 1 ? Point(0) : Point{Scalar(Rational(1, 2)), Scalar(Rational(1, 2))};
    const QSqrt2 radius = space.kind() == SpaceKind::RealLine ? QSqrt2(8) : QSqrt2(Rational(1, 2));
    for (const Point& y : sample_ball(space, center, radius, inverse_checks, inverse_seed)) {
        const Point back = g.apply(g_inv.apply(y));
        if (!agrees(space.canonical(back), space.canonical(y))) {
            throw Error(ErrorKind::NotInverse, g.to_string() + " o " + g_inv.to_string() + " moves " + y.to_string() +
                                                   " to " + back.to_string());
        }
    }
    return OrbitSystem::conjugated(g, inner, g_inv, modulus);
}

OrbitSystem power(const OrbitSystem& f, unsigned long m)
{
    if (f.kind() != SystemKind::Iterated) {
        throw Error(ErrorKind::UnsupportedSystemKind, "power needs a single iterated map, got " + f.to_string());
    }
    return OrbitSystem::power_of(f, m);
}

OrbitSystem restrict_to(const OrbitSystem& f, const StructuredSet& carrier, std::size_t probe_budget, std::uint64_t seed,
                        const std::optional<StructuredSet>& probes)
{
    const StructuredSet& probe_set = probes ? *probes : carrier;
    std::vector<QSqrt2> points;
    const auto atoms = probe_set.atoms();
    if (atoms.size() == 1 && atoms[0].kind() == SetKind::Interval) {
        const auto& d = atoms[0].interval_data();
        if (d.lo && d.hi) {
            for (long k = 0; k <= 4; ++k) {
                const QSqrt2 q = *d.lo + (*d.hi - *d.lo) * QSqrt2(Rational(k, 4));
                if (probe_set.contains(q)) {
                    points.push_back(q);
                }
            }
        } else if (d.lo || d.hi) {
            const QSqrt2 anchor = d.lo ? *d.lo : *d.hi;
            const QSqrt2 dir(d.lo ? 1 : -1);
            for (long k = 0; k <= 4; ++k) {
                const QSqrt2 q = anchor + dir * QSqrt2(Rational(k, 4));
                if (probe_set.contains(q)) {
                    points.push_back(q);
                }
            }
        }
    }
    for (auto& q : sample_set(probe_set, std::nullopt, probe_budget, seed)) {
        points.push_back(std::move(q));
    }
    const OrbitSystem r = OrbitSystem::restricted(f, carrier);
    for (const QSqrt2& q : points) {
        if (!carrier.contains(q)) {
            throw NotInvariantError(Point(q), Point(q), "probe " + q.to_string() + " lies outside " + carrier.to_string());
        }
        (void)iterate(r, 1, Point(q));
    }
    return r;
}

// ---------------------------------------------------------------- expansion bounds

Scalar ExpansionBounds::lower(unsigned long n, unsigned precision) const
{
    if (rule == Rule::Power) {
        return pow(factor, n);
    }
    if (n == 0) {
        return Scalar(1);
    }
    return Scalar(root_enclosure(factor.exact().rational_part(), n, precision));
}

namespace {

std::optional<ExpansionBounds> affine_bounds(const Scalar& lambda, unsigned long m)
{
    if (!lambda.is_exact()) {
        return std::nullopt;
    }
    const Scalar a = pow(abs(lambda), m);
    ExpansionBounds b;
    b.rule = ExpansionBounds::Rule::Power;
    b.factor = a;
    if (a.exact() <= QSqrt2(1)) {
        b.uniform_upper = a; // sup over n >= 1 is attained at n = 1
    }
    return b;
}

} // namespace

std::optional<ExpansionBounds> expansion_bounds(const OrbitSystem& system)
{
    switch (system.kind()) {
    case SystemKind::Iterated:
        if (system.map().kind() == MapKind::Affine) {
            return affine_bounds(system.map().lambda(), 1);
        }
        return std::nullopt;
    case SystemKind::DirectIterate: {
        ExpansionBounds b;
        b.rule = ExpansionBounds::Rule::Root;
        b.factor = Scalar(system.base());
        // base^(1/n) is largest at n = 1 when base >= 1, and tends to 1 otherwise.
        b.uniform_upper = system.base() >= Rational(1) ? Scalar(system.base()) : Scalar(1);
        return b;
    }
    case SystemKind::Power:
        if (system.inner().map().kind() == MapKind::Affine) {
            return affine_bounds(system.inner().map().lambda(), system.exponent());
        }
        return std::nullopt;
    case SystemKind::Restricted: {
        auto b = expansion_bounds(system.inner());
        if (b) {
            b->domain = StructuredSet::set_intersection({b->domain, system.carrier()});
        }
        return b;
    }
    default: return std::nullopt;
    }
}

} // namespace orbex

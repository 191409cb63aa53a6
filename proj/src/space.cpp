#include "orbex/space.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace orbex {

// ---------------------------------------------------------------- Point

bool Point::is_exact() const
{
    return std::all_of(coords_.begin(), coords_.end(), [](const Scalar& s) { return s.is_exact(); });
}

const QSqrt2& Point::line_value() const
{
    if (coords_.size() != 1) {
        throw Error(ErrorKind::DimensionMismatch, "expected a 1-d point, got " + to_string());
    }
    return coords_[0].exact();
}

Point Point::slice(std::size_t begin, std::size_t count) const
{
    if (begin + count > coords_.size()) {
        throw Error(ErrorKind::DimensionMismatch, "slice out of range of " + to_string());
    }
    return Point(std::vector<Scalar>(coords_.begin() + static_cast<long>(begin),
                                     coords_.begin() + static_cast<long>(begin + count)));
}

Point Point::concat(const Point& a, const Point& b)
{
    std::vector<Scalar> c = a.coords_;
    c.insert(c.end(), b.coords_.begin(), b.coords_.end());
    return Point(std::move(c));
}

std::string Point::to_string() const
{
    if (coords_.size() == 1) {
        return coords_[0].to_string();
    }
    std::string s = "(";
    for (std::size_t i = 0; i < coords_.size(); ++i) {
        s += (i ? ", " : "") + coords_[i].to_string();
    }
    return s + ")";
}

// ---------------------------------------------------------------- GammaFn

GammaFn GammaFn::capped(Rational c)
{
    if (c.sign() <= 0) {
        throw Error(ErrorKind::InvalidArgument, "gamma cap must be positive");
    }
    return {GammaKind::Capped, std::move(c)};
}

Scalar GammaFn::apply(const Scalar& t) const
{
    if (kind == GammaKind::Capped) {
        return min(t, Scalar(cap));
    }
    if (const auto* e = t.exact_if()) {
        return Scalar(*e / (*e + QSqrt2(1)));
    }
    // t/(1+t) is increasing on t > -1; map the endpoints.
    const Enclosure& i = *t.interval_if();
    const Rational lo = i.lower();
    const Rational hi = i.upper();
    return Scalar(Enclosure::outward(lo / (lo + Rational(1)), hi / (hi + Rational(1)), i.precision()));
}

std::optional<QSqrt2> GammaFn::inverse_radius(const QSqrt2& r) const
{
    if (kind == GammaKind::Capped) {
        if (r <= QSqrt2(cap)) {
            return r;
        }
        return std::nullopt;
    }
    if (r < QSqrt2(1)) {
        return r / (QSqrt2(1) - r);
    }
    return std::nullopt;
}

std::string GammaFn::to_string() const
{
    return kind == GammaKind::RatioBound ? "ratio-bound" : "capped(" + cap.to_string() + ")";
}

// ---------------------------------------------------------------- MetricSpace

struct MetricSpace::Node {
    SpaceKind kind;
    std::optional<MetricSpace> a;
    std::optional<MetricSpace> b;
    GammaFn gamma;
};

MetricSpace MetricSpace::real_line()
{
    static const auto node = std::make_shared<const Node>(Node{SpaceKind::RealLine, {}, {}, {}});
    return MetricSpace(node);
}

MetricSpace MetricSpace::circle()
{
    static const auto node = std::make_shared<const Node>(Node{SpaceKind::Circle, {}, {}, {}});
    return MetricSpace(node);
}

MetricSpace MetricSpace::torus2()
{
    static const auto node = std::make_shared<const Node>(Node{SpaceKind::Torus2, {}, {}, {}});
    return MetricSpace(node);
}

MetricSpace MetricSpace::product(MetricSpace left, MetricSpace right, GammaFn gamma)
{
    return MetricSpace(std::make_shared<const Node>(Node{SpaceKind::Product, std::move(left), std::move(right), gamma}));
}

MetricSpace MetricSpace::bounded_transform(MetricSpace inner, GammaFn gamma)
{
    return MetricSpace(std::make_shared<const Node>(Node{SpaceKind::BoundedTransform, std::move(inner), {}, gamma}));
}

SpaceKind MetricSpace::kind() const noexcept { return node_->kind; }

std::size_t MetricSpace::dimension() const
{
    switch (kind()) {
    case SpaceKind::RealLine:
    case SpaceKind::Circle: return 1;
    case SpaceKind::Torus2: return 2;
    case SpaceKind::Product: return left().dimension() + right().dimension();
    case SpaceKind::BoundedTransform: return inner().dimension();
    }
    return 0;
}

const MetricSpace& MetricSpace::left() const
{
    if (kind() != SpaceKind::Product) {
        throw Error(ErrorKind::InvalidArgument, "left() on a non-product space");
    }
    return *node_->a;
}

const MetricSpace& MetricSpace::right() const
{
    if (kind() != SpaceKind::Product) {
        throw Error(ErrorKind::InvalidArgument, "right() on a non-product space");
    }
    return *node_->b;
}

const MetricSpace& MetricSpace::inner() const
{
    if (kind() != SpaceKind::BoundedTransform) {
        throw Error(ErrorKind::InvalidArgument, "inner() on a non-transformed space");
    }
    return *node_->a;
}

const GammaFn& MetricSpace::gamma() const
{
    if (kind() != SpaceKind::Product && kind() != SpaceKind::BoundedTransform) {
        throw Error(ErrorKind::InvalidArgument, "gamma() on a space without gamma");
    }
    return node_->gamma;
}

bool MetricSpace::is_line_based() const
{
    return kind() == SpaceKind::RealLine || (kind() == SpaceKind::BoundedTransform && inner().is_line_based());
}

namespace {

Scalar reduce_mod1(const Scalar& s)
{
    if (const auto* e = s.exact_if()) {
        return Scalar(e->frac());
    }
    const Enclosure& i = *s.interval_if();
    const Integer f = i.lower().floor();
    if (f == i.upper().floor()) {
        return s - Scalar(Rational(f));
    }
    return s;
}

} // namespace

Point MetricSpace::canonical(const Point& p) const
{
    if (p.dimension() != dimension()) {
        throw Error(ErrorKind::DimensionMismatch, "point " + p.to_string() + " in " + to_string());
    }
    switch (kind()) {
    case SpaceKind::RealLine: return p;
    case SpaceKind::Circle: return Point(reduce_mod1(p[0]));
    case SpaceKind::Torus2: return Point{reduce_mod1(p[0]), reduce_mod1(p[1])};
    case SpaceKind::Product: {
        const std::size_t dl = left().dimension();
        return Point::concat(left().canonical(p.slice(0, dl)), right().canonical(p.slice(dl, right().dimension())));
    }
    case SpaceKind::BoundedTransform: return inner().canonical(p);
    }
    return p;
}

std::string MetricSpace::to_string() const
{
    switch (kind()) {
    case SpaceKind::RealLine: return "line";
    case SpaceKind::Circle: return "circle";
    case SpaceKind::Torus2: return "torus2";
    case SpaceKind::Product:
        return "product(" + left().to_string() + ", " + right().to_string() + ", " + gamma().to_string() + ")";
    case SpaceKind::BoundedTransform: return "bounded(" + inner().to_string() + ", " + gamma().to_string() + ")";
    }
    return "?";
}

namespace {

Rational tent(const Rational& s)
{
    const Rational f = s - Rational(s.floor());
    return std::min(f, Rational(1) - f);
}

} // namespace

Scalar arc_distance(const Scalar& t)
{
    if (const auto* e = t.exact_if()) {
        const QSqrt2 f = e->frac();
        const QSqrt2 g = QSqrt2(1) - f;
        return Scalar(f < g ? f : g);
    }
    const Enclosure& i = *t.interval_if();
    const Rational width = i.width();
    if (width >= Rational(1)) {
        return Scalar(Enclosure::outward(Rational(0), Rational(1, 2), i.precision()));
    }
    const Rational lo = i.lower() - Rational(i.lower().floor());
    const Rational hi = lo + width; // lo in [0,1), hi < 2
    Rational min_v = (lo <= Rational(1) && Rational(1) <= hi) || lo.is_zero() ? Rational(0) : std::min(tent(lo), tent(hi));
    const bool crosses_half = (lo <= Rational(1, 2) && Rational(1, 2) <= hi) || (lo <= Rational(3, 2) && Rational(3, 2) <= hi);
    Rational max_v = crosses_half ? Rational(1, 2) : std::max(tent(lo), tent(hi));
    return Scalar(Enclosure::outward(min_v, max_v, i.precision()));
}

Scalar distance(const MetricSpace& space, const Point& p, const Point& q)
{
    const std::size_t dim = space.dimension();
    if (p.dimension() != dim || q.dimension() != dim) {
        throw Error(ErrorKind::DimensionMismatch,
                    "points " + p.to_string() + ", " + q.to_string() + " in " + space.to_string());
    }
    switch (space.kind()) {
    case SpaceKind::RealLine: return abs(p[0] - q[0]);
    case SpaceKind::Circle: return arc_distance(p[0] - q[0]);
    case SpaceKind::Torus2: return max(arc_distance(p[0] - q[0]), arc_distance(p[1] - q[1]));
    case SpaceKind::Product: {
        const std::size_t dl = space.left().dimension();
        const std::size_t dr = space.right().dimension();
        const Scalar a = distance(space.left(), p.slice(0, dl), q.slice(0, dl));
        const Scalar b = distance(space.right(), p.slice(dl, dr), q.slice(dl, dr));
        return max(space.gamma().apply(a), space.gamma().apply(b));
    }
    case SpaceKind::BoundedTransform: return space.gamma().apply(distance(space.inner(), p, q));
    }
    return Scalar(0);
}

// ---------------------------------------------------------------- StructuredSet

struct StructuredSet::Node {
    SetKind kind;
    std::variant<std::monostate, IntervalData, std::vector<QSqrt2>, HarmonicData, ProgressionData, std::vector<StructuredSet>> data;
};

StructuredSet StructuredSet::full_line()
{
    static const auto node = std::make_shared<const Node>(Node{SetKind::FullLine, std::monostate{}});
    return StructuredSet(node);
}

StructuredSet StructuredSet::empty() { return set_union({}); }

StructuredSet StructuredSet::interval(std::optional<QSqrt2> lo, std::optional<QSqrt2> hi, bool closed_lo, bool closed_hi)
{
    IntervalData d{std::move(lo), std::move(hi), closed_lo, closed_hi};
    d.closed_lo = closed_lo && d.lo.has_value();
    d.closed_hi = closed_hi && d.hi.has_value();
    return StructuredSet(std::make_shared<const Node>(Node{SetKind::Interval, std::move(d)}));
}

StructuredSet StructuredSet::finite(std::vector<QSqrt2> points)
{
    std::sort(points.begin(), points.end(), [](const QSqrt2& a, const QSqrt2& b) { return a < b; });
    points.erase(std::unique(points.begin(), points.end()), points.end());
    return StructuredSet(std::make_shared<const Node>(Node{SetKind::Finite, std::move(points)}));
}

StructuredSet StructuredSet::harmonic(int sign, Integer n_min, std::optional<Integer> n_max)
{
    if (sign != 1 && sign != -1) {
        throw Error(ErrorKind::InvalidArgument, "harmonic sign must be +1 or -1");
    }
    if (n_min < 1) {
        n_min = 1;
    }
    return StructuredSet(std::make_shared<const Node>(Node{SetKind::Harmonic, HarmonicData{sign, std::move(n_min), std::move(n_max)}}));
}

StructuredSet StructuredSet::progression(QSqrt2 anchor, Rational step, Integer k_lo, Integer k_hi)
{
    if (step.sign() <= 0) {
        throw Error(ErrorKind::InvalidArgument, "progression step must be positive");
    }
    return StructuredSet(std::make_shared<const Node>(
        Node{SetKind::Progression, ProgressionData{std::move(anchor), std::move(step), std::move(k_lo), std::move(k_hi)}}));
}

StructuredSet StructuredSet::rational_grid(const Rational& a, const Rational& b, const Rational& step)
{
    if (step.sign() <= 0) {
        throw Error(ErrorKind::InvalidArgument, "grid step must be positive");
    }
    return progression(QSqrt2(a), step, 0, ((b - a) / step).floor());
}

StructuredSet StructuredSet::irrational_grid(const Rational& a, const Rational& b, const Rational& step, const QSqrt2& offset)
{
    if (offset.sqrt2_part().is_zero()) {
        throw Error(ErrorKind::InvalidArgument, "irrational grid offset needs a nonzero sqrt2 part");
    }
    if (step.sign() <= 0) {
        throw Error(ErrorKind::InvalidArgument, "grid step must be positive");
    }
    const QSqrt2 anchor = QSqrt2(a) + offset;
    const Integer k_lo = ((QSqrt2(a) - anchor) / QSqrt2(step)).ceil();
    const Integer k_hi = ((QSqrt2(b) - anchor) / QSqrt2(step)).floor();
    return progression(anchor, step, k_lo, k_hi);
}

StructuredSet StructuredSet::set_union(std::vector<StructuredSet> members)
{
    return StructuredSet(std::make_shared<const Node>(Node{SetKind::Union, std::move(members)}));
}

StructuredSet StructuredSet::set_intersection(std::vector<StructuredSet> members)
{
    if (members.empty()) {
        return full_line();
    }
    return StructuredSet(std::make_shared<const Node>(Node{SetKind::Intersection, std::move(members)}));
}

SetKind StructuredSet::kind() const noexcept { return node_->kind; }

const IntervalData& StructuredSet::interval_data() const { return std::get<IntervalData>(node_->data); }
const std::vector<QSqrt2>& StructuredSet::finite_points() const { return std::get<std::vector<QSqrt2>>(node_->data); }
const HarmonicData& StructuredSet::harmonic_data() const { return std::get<HarmonicData>(node_->data); }
const ProgressionData& StructuredSet::progression_data() const { return std::get<ProgressionData>(node_->data); }
const std::vector<StructuredSet>& StructuredSet::members() const { return std::get<std::vector<StructuredSet>>(node_->data); }

namespace {

bool interval_contains(const IntervalData& d, const QSqrt2& x)
{
    if (d.lo && (d.closed_lo ? x < *d.lo : x <= *d.lo)) {
        return false;
    }
    if (d.hi && (d.closed_hi ? x > *d.hi : x >= *d.hi)) {
        return false;
    }
    return true;
}

bool interval_empty(const IntervalData& d)
{
    if (!d.lo || !d.hi) {
        return false;
    }
    if (*d.lo > *d.hi) {
        return true;
    }
    return *d.lo == *d.hi && !(d.closed_lo && d.closed_hi);
}

bool interval_degenerate(const IntervalData& d)
{
    return d.lo && d.hi && *d.lo == *d.hi;
}

std::optional<Integer> harmonic_count(const HarmonicData& h)
{
    if (!h.n_max) {
        return std::nullopt;
    }
    const Integer c = *h.n_max - h.n_min + 1;
    return c < 0 ? Integer(0) : c;
}

Integer progression_count(const ProgressionData& p)
{
    const Integer c = p.k_hi - p.k_lo + 1;
    return c < 0 ? Integer(0) : c;
}

QSqrt2 harmonic_element(const HarmonicData& h, const Integer& n)
{
    return QSqrt2(Rational(Integer(h.sign), n));
}

QSqrt2 progression_element(const ProgressionData& p, const Integer& k)
{
    return p.anchor + QSqrt2(Rational(k) * p.step);
}

constexpr unsigned long enumeration_limit = 1000000;

std::vector<QSqrt2> enumerate_finite_atom(const StructuredSet& atom)
{
    std::vector<QSqrt2> out;
    switch (atom.kind()) {
    case SetKind::Finite: return atom.finite_points();
    case SetKind::Harmonic: {
        const auto& h = atom.harmonic_data();
        const auto count = harmonic_count(h);
        if (!count || *count > enumeration_limit) {
            throw Error(ErrorKind::Unsupported, "cannot enumerate " + atom.to_string());
        }
        for (Integer n = h.n_min; n <= *h.n_max; ++n) {
            out.push_back(harmonic_element(h, n));
        }
        return out;
    }
    case SetKind::Progression: {
        const auto& p = atom.progression_data();
        if (progression_count(p) > enumeration_limit) {
            throw Error(ErrorKind::Unsupported, "progression too large to enumerate: " + atom.to_string());
        }
        for (Integer k = p.k_lo; k <= p.k_hi; ++k) {
            out.push_back(progression_element(p, k));
        }
        return out;
    }
    default: throw Error(ErrorKind::Unsupported, "not a finite atom: " + atom.to_string());
    }
}

bool atom_is_empty(const StructuredSet& atom)
{
    switch (atom.kind()) {
    case SetKind::Interval: return interval_empty(atom.interval_data());
    case SetKind::Finite: return atom.finite_points().empty();
    case SetKind::Harmonic: {
        const auto c = harmonic_count(atom.harmonic_data());
        return c && *c == 0;
    }
    case SetKind::Progression: return progression_count(atom.progression_data()) == 0;
    default: return false;
    }
}

IntervalData negate(const IntervalData& d)
{
    IntervalData r;
    if (d.hi) {
        r.lo = -*d.hi;
    }
    if (d.lo) {
        r.hi = -*d.lo;
    }
    r.closed_lo = d.closed_hi;
    r.closed_hi = d.closed_lo;
    return r;
}

StructuredSet clip_harmonic(const HarmonicData& h, const IntervalData& iv)
{
    const IntervalData d = h.sign > 0 ? iv : negate(iv);
    Integer n_min = h.n_min;
    std::optional<Integer> n_max = h.n_max;
    // Elements (after sign normalization) are 1/n > 0.
    if (d.hi) {
        if (d.hi->sign() <= 0) {
            return StructuredSet::empty();
        }
        const QSqrt2 t = d.hi->inverse();
        const Integer bound = d.closed_hi ? t.ceil() : Integer(t.floor() + 1);
        n_min = std::max(n_min, bound);
    }
    if (d.lo && d.lo->sign() > 0) {
        const QSqrt2 t = d.lo->inverse();
        const Integer bound = d.closed_lo ? t.floor() : Integer(t.ceil() - 1);
        n_max = n_max ? std::min(*n_max, bound) : bound;
    }
    return StructuredSet::harmonic(h.sign, n_min, n_max);
}

StructuredSet clip_progression(const ProgressionData& p, const IntervalData& d)
{
    Integer k_lo = p.k_lo;
    Integer k_hi = p.k_hi;
    const QSqrt2 step(p.step);
    if (d.lo) {
        const QSqrt2 t = (*d.lo - p.anchor) / step;
        const Integer bound = d.closed_lo ? t.ceil() : Integer(t.floor() + 1);
        k_lo = std::max(k_lo, bound);
    }
    if (d.hi) {
        const QSqrt2 t = (*d.hi - p.anchor) / step;
        const Integer bound = d.closed_hi ? t.floor() : Integer(t.ceil() - 1);
        k_hi = std::min(k_hi, bound);
    }
    return StructuredSet::progression(p.anchor, p.step, k_lo, k_hi);
}

StructuredSet intersect_intervals(const IntervalData& a, const IntervalData& b)
{
    IntervalData r;
    // Lower end: the larger bound; at a tie, open wins.
    if (!a.lo) {
        r.lo = b.lo;
        r.closed_lo = b.closed_lo;
    } else if (!b.lo) {
        r.lo = a.lo;
        r.closed_lo = a.closed_lo;
    } else if (*a.lo == *b.lo) {
        r.lo = a.lo;
        r.closed_lo = a.closed_lo && b.closed_lo;
    } else {
        const bool take_a = *a.lo > *b.lo;
        r.lo = take_a ? a.lo : b.lo;
        r.closed_lo = take_a ? a.closed_lo : b.closed_lo;
    }
    if (!a.hi) {
        r.hi = b.hi;
        r.closed_hi = b.closed_hi;
    } else if (!b.hi) {
        r.hi = a.hi;
        r.closed_hi = a.closed_hi;
    } else if (*a.hi == *b.hi) {
        r.hi = a.hi;
        r.closed_hi = a.closed_hi && b.closed_hi;
    } else {
        const bool take_a = *a.hi < *b.hi;
        r.hi = take_a ? a.hi : b.hi;
        r.closed_hi = take_a ? a.closed_hi : b.closed_hi;
    }
    return StructuredSet::interval(r.lo, r.hi, r.closed_lo, r.closed_hi);
}

std::vector<QSqrt2> filter_points(const std::vector<QSqrt2>& points, const StructuredSet& other)
{
    std::vector<QSqrt2> out;
    for (const auto& p : points) {
        if (other.contains(p)) {
            out.push_back(p);
        }
    }
    return out;
}

StructuredSet intersect_atom_pair(const StructuredSet& a, const StructuredSet& b)
{
    const SetKind ka = a.kind();
    const SetKind kb = b.kind();
    if (ka == SetKind::Finite) {
        return StructuredSet::finite(filter_points(a.finite_points(), b));
    }
    if (kb == SetKind::Finite) {
        return StructuredSet::finite(filter_points(b.finite_points(), a));
    }
    if (ka == SetKind::Interval && kb == SetKind::Interval) {
        return intersect_intervals(a.interval_data(), b.interval_data());
    }
    if (kb == SetKind::Interval) {
        if (ka == SetKind::Harmonic) {
            return clip_harmonic(a.harmonic_data(), b.interval_data());
        }
        return clip_progression(a.progression_data(), b.interval_data());
    }
    if (ka == SetKind::Interval) {
        return intersect_atom_pair(b, a);
    }
    if (ka == SetKind::Harmonic && kb == SetKind::Harmonic) {
        const auto& ha = a.harmonic_data();
        const auto& hb = b.harmonic_data();
        if (ha.sign != hb.sign) {
            return StructuredSet::empty();
        }
        std::optional<Integer> n_max = ha.n_max;
        if (hb.n_max) {
            n_max = n_max ? std::min(*n_max, *hb.n_max) : *hb.n_max;
        }
        return StructuredSet::harmonic(ha.sign, std::max(ha.n_min, hb.n_min), n_max);
    }
    // At least one progression remains; progressions are bounded.
    if (ka == SetKind::Progression) {
        return StructuredSet::finite(filter_points(enumerate_finite_atom(a), b));
    }
    return StructuredSet::finite(filter_points(enumerate_finite_atom(b), a));
}

void append_nonempty(std::vector<StructuredSet>& out, const StructuredSet& s)
{
    if (s.kind() == SetKind::Union) {
        for (const auto& m : s.members()) {
            append_nonempty(out, m);
        }
        return;
    }
    if (!atom_is_empty(s)) {
        out.push_back(s);
    }
}

// Hull of an atom, used to shrink intersections before enumeration.
IntervalData hull(const StructuredSet& atom)
{
    switch (atom.kind()) {
    case SetKind::Interval: return atom.interval_data();
    case SetKind::Finite: {
        const auto& pts = atom.finite_points();
        return IntervalData{pts.front(), pts.back(), true, true};
    }
    case SetKind::Harmonic: {
        const auto& h = atom.harmonic_data();
        const QSqrt2 far = harmonic_element(h, h.n_min);
        if (h.n_max) {
            const QSqrt2 near = harmonic_element(h, *h.n_max);
            return h.sign > 0 ? IntervalData{near, far, true, true} : IntervalData{far, near, true, true};
        }
        return h.sign > 0 ? IntervalData{QSqrt2(0), far, false, true} : IntervalData{far, QSqrt2(0), true, false};
    }
    case SetKind::Progression: {
        const auto& p = atom.progression_data();
        return IntervalData{progression_element(p, p.k_lo), progression_element(p, p.k_hi), true, true};
    }
    default: return IntervalData{};
    }
}

} // namespace

bool StructuredSet::contains(const QSqrt2& x) const
{
    switch (kind()) {
    case SetKind::FullLine: return true;
    case SetKind::Interval: return interval_contains(interval_data(), x);
    case SetKind::Finite: {
        const auto& pts = finite_points();
        return std::find(pts.begin(), pts.end(), x) != pts.end();
    }
    case SetKind::Harmonic: {
        const auto& h = harmonic_data();
        if (!x.is_rational() || x.sign() != h.sign) {
            return false;
        }
        const Rational inv = (x.rational_part() * Rational(h.sign)).inverse();
        if (!inv.is_integer()) {
            return false;
        }
        const Integer n = inv.num();
        return n >= h.n_min && (!h.n_max || n <= *h.n_max);
    }
    case SetKind::Progression: {
        const auto& p = progression_data();
        const QSqrt2 t = (x - p.anchor) / QSqrt2(p.step);
        if (!t.is_rational() || !t.rational_part().is_integer()) {
            return false;
        }
        const Integer k = t.rational_part().num();
        return k >= p.k_lo && k <= p.k_hi;
    }
    case SetKind::Union:
        return std::any_of(members().begin(), members().end(), [&](const StructuredSet& m) { return m.contains(x); });
    case SetKind::Intersection:
        return std::all_of(members().begin(), members().end(), [&](const StructuredSet& m) { return m.contains(x); });
    }
    return false;
}

std::vector<StructuredSet> StructuredSet::atoms() const
{
    std::vector<StructuredSet> out;
    switch (kind()) {
    case SetKind::FullLine: out.push_back(interval(std::nullopt, std::nullopt, false, false)); return out;
    case SetKind::Interval:
    case SetKind::Finite:
    case SetKind::Harmonic:
    case SetKind::Progression:
        append_nonempty(out, *this);
        return out;
    case SetKind::Union:
        for (const auto& m : members()) {
            for (auto& a : m.atoms()) {
                out.push_back(std::move(a));
            }
        }
        return out;
    case SetKind::Intersection: {
        std::vector<std::vector<StructuredSet>> parts;
        for (const auto& m : members()) {
            parts.push_back(m.atoms());
            if (parts.back().empty()) {
                return {};
            }
        }
        std::vector<StructuredSet> acc = parts.front();
        for (std::size_t i = 1; i < parts.size(); ++i) {
            std::vector<StructuredSet> next;
            for (const auto& a : acc) {
                for (const auto& b : parts[i]) {
                    // Clip both to the common hull first so finite
                    // enumerations stay small.
                    const StructuredSet h = intersect_intervals(hull(a), hull(b));
                    if (atom_is_empty(h)) {
                        continue;
                    }
                    StructuredSet ca = a.kind() == SetKind::Interval ? a : intersect_atom_pair(a, h);
                    StructuredSet cb = b.kind() == SetKind::Interval ? b : intersect_atom_pair(b, h);
                    if (atom_is_empty(ca) || atom_is_empty(cb)) {
                        continue;
                    }
                    append_nonempty(next, intersect_atom_pair(ca, cb));
                }
            }
            acc = std::move(next);
            if (acc.empty()) {
                return {};
            }
        }
        return acc;
    }
    }
    return out;
}

namespace {

std::string bound_string(const std::optional<QSqrt2>& b, const char* inf)
{
    return b ? b->to_string() : std::string(inf);
}

} // namespace

std::string StructuredSet::to_string() const
{
    switch (kind()) {
    case SetKind::FullLine: return "R";
    case SetKind::Interval: {
        const auto& d = interval_data();
        return std::string(d.closed_lo ? "[" : "(") + bound_string(d.lo, "-inf") + ", " + bound_string(d.hi, "inf") +
               (d.closed_hi ? "]" : ")");
    }
    case SetKind::Finite: {
        std::string s = "{";
        const auto& pts = finite_points();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            s += (i ? ", " : "") + pts[i].to_string();
        }
        return s + "}";
    }
    case SetKind::Harmonic: {
        const auto& h = harmonic_data();
        return std::string("{") + (h.sign > 0 ? "" : "-") + "1/n : " + h.n_min.get_str() + " <= n" +
               (h.n_max ? " <= " + h.n_max->get_str() : std::string()) + "}";
    }
    case SetKind::Progression: {
        const auto& p = progression_data();
        return "{" + p.anchor.to_string() + " + k*" + p.step.to_string() + " : " + p.k_lo.get_str() + " <= k <= " +
               p.k_hi.get_str() + "}";
    }
    case SetKind::Union:
    case SetKind::Intersection: {
        const auto& ms = members();
        if (ms.empty()) {
            return kind() == SetKind::Union ? "{}" : "R";
        }
        std::string s = kind() == SetKind::Union ? "union(" : "intersection(";
        for (std::size_t i = 0; i < ms.size(); ++i) {
            s += (i ? ", " : "") + ms[i].to_string();
        }
        return s + ")";
    }
    }
    return "?";
}

StructuredSet ball_intersect(const StructuredSet& set, const QSqrt2& center, const QSqrt2& radius)
{
    if (radius.sign() <= 0) {
        throw Error(ErrorKind::InvalidArgument, "ball radius must be positive");
    }
    auto atoms = StructuredSet::set_intersection({set, StructuredSet::open(center - radius, center + radius)}).atoms();
    if (atoms.size() == 1) {
        return atoms.front();
    }
    return StructuredSet::set_union(std::move(atoms));
}

StructuredSet ball_intersect(const MetricSpace& space, const StructuredSet& set, const QSqrt2& center, const QSqrt2& radius)
{
    if (!space.is_line_based()) {
        throw Error(ErrorKind::Unsupported, "structured sets live on the line, not " + space.to_string());
    }
    if (space.kind() == SpaceKind::RealLine) {
        return ball_intersect(set, center, radius);
    }
    const auto line_radius = space.gamma().inverse_radius(radius);
    if (!line_radius) {
        return StructuredSet::set_union(set.atoms());
    }
    return ball_intersect(space.inner(), set, center, *line_radius);
}

bool punctured_empty(const StructuredSet& set, const QSqrt2& x)
{
    for (const auto& atom : set.atoms()) {
        switch (atom.kind()) {
        case SetKind::Interval: {
            const auto& d = atom.interval_data();
            if (!interval_degenerate(d) || *d.lo != x) {
                return false;
            }
            break;
        }
        case SetKind::Finite:
            for (const auto& p : atom.finite_points()) {
                if (p != x) {
                    return false;
                }
            }
            break;
        case SetKind::Harmonic: {
            const auto& h = atom.harmonic_data();
            const auto c = harmonic_count(h);
            if (!c || *c >= 2 || harmonic_element(h, h.n_min) != x) {
                return false;
            }
            break;
        }
        case SetKind::Progression: {
            const auto& p = atom.progression_data();
            if (progression_count(p) >= 2 || progression_element(p, p.k_lo) != x) {
                return false;
            }
            break;
        }
        default: return false;
        }
    }
    return true;
}

bool is_limit_point(const StructuredSet& set, const QSqrt2& x)
{
    for (const auto& atom : set.atoms()) {
        if (atom.kind() == SetKind::Interval) {
            const auto& d = atom.interval_data();
            if (interval_degenerate(d)) {
                continue;
            }
            if ((!d.lo || *d.lo <= x) && (!d.hi || x <= *d.hi)) {
                return true;
            }
        } else if (atom.kind() == SetKind::Harmonic) {
            if (!atom.harmonic_data().n_max && x.is_zero()) {
                return true;
            }
        }
    }
    return false;
}

StructuredSet closure(const StructuredSet& set)
{
    std::vector<StructuredSet> parts;
    for (const auto& atom : set.atoms()) {
        switch (atom.kind()) {
        case SetKind::Interval: {
            const auto& d = atom.interval_data();
            parts.push_back(StructuredSet::interval(d.lo, d.hi, true, true));
            break;
        }
        case SetKind::Harmonic:
            parts.push_back(atom);
            if (!atom.harmonic_data().n_max) {
                parts.push_back(StructuredSet::finite({QSqrt2(0)}));
            }
            break;
        default: parts.push_back(atom); break;
        }
    }
    return StructuredSet::set_union(std::move(parts));
}

// ---------------------------------------------------------------- sampling

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30U)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27U)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31U);
}

namespace {

enum class SampleKind { Rational, Irrational, Boundary };

SampleKind sample_kind(std::size_t index, std::size_t count)
{
    const std::size_t boundary = (count + 3) / 4;
    if (index >= count - boundary) {
        return SampleKind::Boundary;
    }
    return index % 2 == 0 ? SampleKind::Rational : SampleKind::Irrational;
}

// Positive rational no larger than r (and no smaller than r/2).
Rational rational_below(const QSqrt2& r)
{
    if (r.is_rational()) {
        return r.rational_part();
    }
    for (unsigned bits = 64;; bits *= 2) {
        const auto [lo, hi] = r.rational_bounds(bits);
        if (lo.sign() > 0 && Rational(2) * lo >= hi) {
            return lo;
        }
    }
}

// Rational within r/8 of c.
Rational rational_near(const QSqrt2& c, const Rational& r)
{
    if (c.is_rational()) {
        return c.rational_part();
    }
    for (unsigned bits = 64;; bits *= 2) {
        const auto [lo, hi] = c.rational_bounds(bits);
        if ((hi - lo) * Rational(8) < r) {
            return lo;
        }
    }
}

class LineSampler {
public:
    LineSampler(QSqrt2 center, QSqrt2 radius, std::uint64_t seed)
        : center_(std::move(center)), radius_(std::move(radius)), r_q_(rational_below(radius_)),
          anchor_(rational_near(center_, r_q_)), rng_(seed)
    {
    }

    std::vector<QSqrt2> draw(std::size_t count)
    {
        std::vector<QSqrt2> out;
        out.reserve(count);
        std::size_t boundary_k = 0;
        for (std::size_t i = 0; i < count; ++i) {
            const SampleKind kind = sample_kind(i, count);
            if (kind == SampleKind::Boundary) {
                ++boundary_k;
                const Rational shrink = Rational(1) - pow(Rational(1, 2), boundary_k + 2);
                const QSqrt2 offset = radius_ * QSqrt2(shrink);
                out.push_back(boundary_k % 2 == 1 ? center_ + offset : center_ - offset);
                continue;
            }
            for (;;) {
                const std::uint64_t bits = rng_();
                Rational u(Integer(static_cast<unsigned long>(std::max<std::uint64_t>(1, bits >> 40U))), Integer(1UL << 24U));
                if ((bits & 1U) != 0U) {
                    u = -u;
                }
                const QSqrt2 y = kind == SampleKind::Rational
                                     ? QSqrt2(anchor_ + r_q_ * u / Rational(2))
                                     : QSqrt2(anchor_, r_q_ * u / Rational(4));
                if (y != center_ && std::find(out.begin(), out.end(), y) == out.end()) {
                    out.push_back(y);
                    break;
                }
            }
        }
        return out;
    }

private:
    QSqrt2 center_;
    QSqrt2 radius_;
    Rational r_q_;
    Rational anchor_;
    std::mt19937_64 rng_;
};

std::vector<QSqrt2> sample_line(const QSqrt2& center, const QSqrt2& radius, std::size_t count, std::uint64_t seed)
{
    return LineSampler(center, radius, seed).draw(count);
}

std::vector<Point> zip(const std::vector<Point>& a, const std::vector<Point>& b)
{
    std::vector<Point> out;
    out.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.push_back(Point::concat(a[i], b[i]));
    }
    return out;
}

QSqrt2 capped_radius(const std::optional<QSqrt2>& r)
{
    return r ? *r : QSqrt2(1);
}

} // namespace

std::vector<Point> sample_ball(const MetricSpace& space, const Point& center, const QSqrt2& radius, std::size_t count,
                               std::uint64_t seed)
{
    if (count == 0) {
        throw Error(ErrorKind::InvalidArgument, "sample budget must be at least 1");
    }
    if (radius.sign() <= 0) {
        throw Error(ErrorKind::InvalidArgument, "ball radius must be positive");
    }
    if (center.dimension() != space.dimension()) {
        throw Error(ErrorKind::DimensionMismatch, "center " + center.to_string() + " in " + space.to_string());
    }
    std::vector<Point> out;
    switch (space.kind()) {
    case SpaceKind::RealLine:
        for (auto& y : sample_line(center[0].exact(), radius, count, seed)) {
            out.emplace_back(std::move(y));
        }
        return out;
    case SpaceKind::Circle: {
        const QSqrt2 r = std::min(radius, QSqrt2(Rational(1, 2)));
        for (auto& y : sample_line(center[0].exact(), r, count, seed)) {
            out.emplace_back(y.frac());
        }
        return out;
    }
    case SpaceKind::Torus2: {
        const QSqrt2 r = std::min(radius, QSqrt2(Rational(1, 2)));
        const auto xs = sample_line(center[0].exact(), r, count, mix_seed(seed, 1));
        const auto ys = sample_line(center[1].exact(), r, count, mix_seed(seed, 2));
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(Point{Scalar(xs[i].frac()), Scalar(ys[i].frac())});
        }
        return out;
    }
    case SpaceKind::Product: {
        const QSqrt2 r = capped_radius(space.gamma().inverse_radius(radius));
        const std::size_t dl = space.left().dimension();
        const auto left = sample_ball(space.left(), center.slice(0, dl), r, count, mix_seed(seed, 1));
        const auto right = sample_ball(space.right(), center.slice(dl, space.right().dimension()), r, count, mix_seed(seed, 2));
        return zip(left, right);
    }
    case SpaceKind::BoundedTransform:
        return sample_ball(space.inner(), center, capped_radius(space.gamma().inverse_radius(radius)), count, seed);
    }
    return out;
}

namespace {

std::vector<QSqrt2> atom_candidates(const StructuredSet& atom, const std::optional<QSqrt2>& exclude, std::size_t count,
                                    std::uint64_t seed)
{
    std::vector<QSqrt2> pts;
    switch (atom.kind()) {
    case SetKind::Finite: {
        pts = atom.finite_points();
        if (exclude) {
            std::stable_sort(pts.begin(), pts.end(), [&](const QSqrt2& a, const QSqrt2& b) {
                return (a - *exclude).abs() < (b - *exclude).abs();
            });
        }
        break;
    }
    case SetKind::Harmonic: {
        const auto& h = atom.harmonic_data();
        for (Integer n = h.n_min; pts.size() < count + 1 && (!h.n_max || n <= *h.n_max); ++n) {
            pts.push_back(harmonic_element(h, n));
        }
        break;
    }
    case SetKind::Progression: {
        const auto& p = atom.progression_data();
        const Integer total = progression_count(p);
        if (total <= count + 1) {
            for (Integer k = p.k_lo; k <= p.k_hi; ++k) {
                pts.push_back(progression_element(p, k));
            }
        } else {
            const Integer steps = count; // count+1 evenly spaced indices
            for (Integer i = 0; i <= steps; ++i) {
                Integer k = p.k_lo + (i * (total - 1)) / steps;
                pts.push_back(progression_element(p, k));
            }
        }
        break;
    }
    case SetKind::Interval: {
        const auto& d = atom.interval_data();
        QSqrt2 lo;
        QSqrt2 hi;
        const QSqrt2 pivot = exclude.value_or(QSqrt2(0));
        if (d.lo && d.hi) {
            lo = *d.lo;
            hi = *d.hi;
        } else if (d.lo) {
            lo = *d.lo;
            hi = std::max(*d.lo, pivot) + QSqrt2(1);
        } else if (d.hi) {
            hi = *d.hi;
            lo = std::min(*d.hi, pivot) - QSqrt2(1);
        } else {
            lo = pivot - QSqrt2(1);
            hi = pivot + QSqrt2(1);
        }
        if (lo == hi) {
            pts.push_back(lo);
            break;
        }
        const QSqrt2 mid = (lo + hi) / QSqrt2(2);
        pts = sample_line(mid, (hi - lo) / QSqrt2(2), count + 1, seed);
        if (exclude && mid != *exclude && interval_contains(d, mid)) {
            pts.insert(pts.begin(), mid);
        }
        break;
    }
    default: break;
    }
    if (exclude) {
        pts.erase(std::remove(pts.begin(), pts.end(), *exclude), pts.end());
    }
    return pts;
}

} // namespace

std::vector<QSqrt2> sample_set(const StructuredSet& set, const std::optional<QSqrt2>& exclude, std::size_t count,
                               std::uint64_t seed)
{
    const auto atoms = set.atoms();
    std::vector<std::vector<QSqrt2>> lists;
    lists.reserve(atoms.size());
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        lists.push_back(atom_candidates(atoms[i], exclude, count, mix_seed(seed, i)));
    }
    std::vector<QSqrt2> out;
    for (std::size_t round = 0; out.size() < count; ++round) {
        bool any = false;
        for (const auto& list : lists) {
            if (round < list.size()) {
                any = true;
                const QSqrt2& p = list[round];
                if (std::find(out.begin(), out.end(), p) == out.end()) {
                    out.push_back(p);
                    if (out.size() == count) {
                        break;
                    }
                }
            }
        }
        if (!any) {
            break;
        }
    }
    return out;
}

} // namespace orbex

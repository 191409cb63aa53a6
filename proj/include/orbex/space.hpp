#ifndef ORBEX_SPACE_HPP
#define ORBEX_SPACE_HPP

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "orbex/scalar.hpp"

namespace orbex {

// A point of one of the supported carriers: one coordinate on the line and
// the circle, two on the torus, concatenated coordinates on products.
class Point {
public:
    Point() = default;
    Point(Scalar x) : coords_{std::move(x)} {}     // NOLINT(google-explicit-constructor)
    Point(QSqrt2 x) : coords_{Scalar(std::move(x))} {} // NOLINT(google-explicit-constructor)
    Point(long x) : coords_{Scalar(x)} {}            // NOLINT(google-explicit-constructor)
    Point(Rational x) : coords_{Scalar(std::move(x))} {} // NOLINT(google-explicit-constructor)
    Point(std::initializer_list<Scalar> coords) : coords_(coords) {}
    explicit Point(std::vector<Scalar> coords) : coords_(std::move(coords)) {}

    std::size_t dimension() const noexcept { return coords_.size(); }
    const Scalar& operator[](std::size_t i) const { return coords_.at(i); }
    const std::vector<Scalar>& coords() const noexcept { return coords_; }

    bool is_exact() const;
    // Exact single coordinate; throws when not a 1-d exact point.
    const QSqrt2& line_value() const;

    Point slice(std::size_t begin, std::size_t count) const;
    static Point concat(const Point& a, const Point& b);

    std::string to_string() const;

    friend bool operator==(const Point& a, const Point& b) = default;

private:
    std::vector<Scalar> coords_;
};

enum class GammaKind { RatioBound, Capped };

// Bounded, strictly increasing (below the cap), gamma(0) = 0.
struct GammaFn {
    GammaKind kind = GammaKind::RatioBound;
    Rational cap; // Capped only

    static GammaFn ratio_bound() { return {GammaKind::RatioBound, Rational()}; }
    static GammaFn capped(Rational c);

    Scalar apply(const Scalar& t) const;
    // Largest line radius whose gamma-image stays below r; nullopt when every
    // distance qualifies.
    std::optional<QSqrt2> inverse_radius(const QSqrt2& r) const;
    std::string to_string() const;

    friend bool operator==(const GammaFn&, const GammaFn&) = default;
};

enum class SpaceKind { RealLine, Circle, Torus2, Product, BoundedTransform };

class MetricSpace {
public:
    static MetricSpace real_line();
    static MetricSpace circle();
    static MetricSpace torus2();
    static MetricSpace product(MetricSpace left, MetricSpace right, GammaFn gamma);
    static MetricSpace bounded_transform(MetricSpace inner, GammaFn gamma);

    SpaceKind kind() const noexcept;
    std::size_t dimension() const;
    const MetricSpace& left() const;  // Product
    const MetricSpace& right() const; // Product
    const MetricSpace& inner() const; // BoundedTransform
    const GammaFn& gamma() const;     // Product, BoundedTransform

    // True for the line and gamma-transforms of the line; structured sets
    // live on these.
    bool is_line_based() const;
    // Reduces coordinates on circle and torus factors into [0, 1).
    Point canonical(const Point& p) const;

    std::string to_string() const;

private:
    struct Node;
    explicit MetricSpace(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

Scalar distance(const MetricSpace& space, const Point& p, const Point& q);

// Distance to the nearest integer, i.e. the arc metric on R/Z.
Scalar arc_distance(const Scalar& t);

enum class SetKind { Interval, Finite, Harmonic, Progression, Union, Intersection, FullLine };

struct IntervalData {
    std::optional<QSqrt2> lo; // nullopt = unbounded
    std::optional<QSqrt2> hi;
    bool closed_lo = true;
    bool closed_hi = true;
};

struct HarmonicData {
    int sign = 1; // elements sign/n
    Integer n_min = 1;
    std::optional<Integer> n_max;
};

struct ProgressionData {
    QSqrt2 anchor; // elements anchor + k*step, k_lo <= k <= k_hi
    Rational step;
    Integer k_lo;
    Integer k_hi;
};

// Subsets of the line with exact membership and decidable emptiness of
// intersections with open balls.
class StructuredSet {
public:
    static StructuredSet full_line();
    static StructuredSet empty();
    static StructuredSet interval(std::optional<QSqrt2> lo, std::optional<QSqrt2> hi, bool closed_lo, bool closed_hi);
    static StructuredSet closed(QSqrt2 lo, QSqrt2 hi) { return interval(std::move(lo), std::move(hi), true, true); }
    static StructuredSet open(QSqrt2 lo, QSqrt2 hi) { return interval(std::move(lo), std::move(hi), false, false); }
    static StructuredSet finite(std::vector<QSqrt2> points);
    static StructuredSet harmonic(int sign, Integer n_min = 1, std::optional<Integer> n_max = std::nullopt);
    static StructuredSet progression(QSqrt2 anchor, Rational step, Integer k_lo, Integer k_hi);
    // {a + k*step} within [a, b].
    static StructuredSet rational_grid(const Rational& a, const Rational& b, const Rational& step);
    // {a + offset + k*step} within [a, b]; offset must have a nonzero sqrt2 part.
    static StructuredSet irrational_grid(const Rational& a, const Rational& b, const Rational& step, const QSqrt2& offset);
    static StructuredSet set_union(std::vector<StructuredSet> members);
    static StructuredSet set_intersection(std::vector<StructuredSet> members);

    SetKind kind() const noexcept;
    const IntervalData& interval_data() const;
    const std::vector<QSqrt2>& finite_points() const;
    const HarmonicData& harmonic_data() const;
    const ProgressionData& progression_data() const;
    const std::vector<StructuredSet>& members() const;

    bool contains(const QSqrt2& x) const;
    // Disjoint-kind decomposition into nonempty Interval/Finite/Harmonic/
    // Progression atoms whose union is this set.
    std::vector<StructuredSet> atoms() const;
    bool is_empty() const { return atoms().empty(); }

    std::string to_string() const;

private:
    struct Node;
    explicit StructuredSet(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

// S_radius(center) intersected with the set, as a union of atoms. The center
// may belong to the result; callers exclude it.
StructuredSet ball_intersect(const StructuredSet& set, const QSqrt2& center, const QSqrt2& radius);
// Same, with the radius measured in a line-based space's metric.
StructuredSet ball_intersect(const MetricSpace& space, const StructuredSet& set, const QSqrt2& center, const QSqrt2& radius);

// True when the set has no point other than x.
bool punctured_empty(const StructuredSet& set, const QSqrt2& x);

bool is_limit_point(const StructuredSet& set, const QSqrt2& x);

StructuredSet closure(const StructuredSet& set);

// Deterministic seed stream derived from a base seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// M distinct exact points of the open ball, none equal to the center. The
// first M - ceil(M/4) alternate rational / irrational (sqrt2-offset); the
// last ceil(M/4) sit at distance radius*(1 - 2^-(k+2)), k = 1..ceil(M/4).
std::vector<Point> sample_ball(const MetricSpace& space, const Point& center, const QSqrt2& radius, std::size_t count,
                               std::uint64_t seed);

// Up to M distinct exact points of the set other than `exclude`.
std::vector<QSqrt2> sample_set(const StructuredSet& set, const std::optional<QSqrt2>& exclude, std::size_t count,
                               std::uint64_t seed);

} // namespace orbex

#endif

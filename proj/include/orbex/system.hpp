#ifndef ORBEX_SYSTEM_HPP
#define ORBEX_SYSTEM_HPP

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "orbex/space.hpp"

namespace orbex {

enum class MapKind { Affine, RationalityBranch, CircleLinear, TorusLinear, Cubic, CubeRoot, Constant };

using Matrix2 = std::array<std::array<long, 2>, 2>;

// Closed algebra of self-maps. All forms act on 1-d points except
// TorusLinear, which acts on 2-d points.
class MapExpr {
public:
    static MapExpr affine(Scalar lambda, Scalar c);
    static MapExpr identity() { return affine(Scalar(1), Scalar(0)); }
    static MapExpr scaling(Scalar lambda) { return affine(std::move(lambda), Scalar(0)); }
    static MapExpr rationality_branch(MapExpr on_rational, MapExpr on_irrational);
    static MapExpr circle_linear(long k);
    static MapExpr torus_linear(Matrix2 m);
    static MapExpr cubic();
    static MapExpr cube_root();
    static MapExpr constant(Scalar v);

    MapKind kind() const noexcept;
    const Scalar& lambda() const; // Affine
    const Scalar& offset() const; // Affine
    const MapExpr& on_rational() const;
    const MapExpr& on_irrational() const;
    long multiplier() const;        // CircleLinear
    const Matrix2& matrix() const;  // TorusLinear
    const Scalar& value() const;    // Constant

    std::size_t dimension() const { return kind() == MapKind::TorusLinear ? 2 : 1; }
    bool is_injective() const;

    // RationalityUndecidable when a branch receives an enclosure.
    Point apply(const Point& x, unsigned precision = default_precision) const;

    std::string to_string() const;

private:
    struct Node;
    explicit MapExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

Matrix2 multiply(const Matrix2& a, const Matrix2& b);

enum class FamilyKind { FactorialBranch, Constant, Cycle };

// The rule n -> f_n of a time-varying system. FactorialBranch is
// f_n(x) = n+1 on rationals, (n+1)x on irrationals.
struct Family {
    FamilyKind kind = FamilyKind::FactorialBranch;
    std::vector<MapExpr> maps; // Constant: one map; Cycle: f_n = maps[n mod size]

    MapExpr at(unsigned long n) const;
    std::string to_string() const;
};

enum class ModulusKind { Scaled, CubeQuarter };

// m with rho1(a, b) > delta  =>  rho2(g a, g b) > m(delta).
struct ModulusFn {
    ModulusKind kind = ModulusKind::Scaled;
    Rational k{1};

    static ModulusFn scaled(Rational k);
    static ModulusFn cube_quarter() { return {ModulusKind::CubeQuarter, Rational(1)}; }

    Scalar apply(const Scalar& delta) const;
    std::string to_string() const;
};

enum class SystemKind { Iterated, TimeVarying, DirectIterate, Product, Conjugated, Power, Restricted };

class OrbitSystem {
public:
    static OrbitSystem iterated(MapExpr f);
    static OrbitSystem time_varying(Family family);
    // O_n(x) = base^(1/n) * x for n >= 1, O_0 = x.
    static OrbitSystem root_scaling(Rational base);
    static OrbitSystem product(OrbitSystem f, OrbitSystem g, GammaFn gamma);
    // Unchecked; see conjugate() for the validated constructor.
    static OrbitSystem conjugated(MapExpr g, OrbitSystem inner, MapExpr g_inv, ModulusFn modulus);
    static OrbitSystem power_of(OrbitSystem f, unsigned long m);
    static OrbitSystem restricted(OrbitSystem f, StructuredSet carrier);

    SystemKind kind() const noexcept;
    const MapExpr& map() const;            // Iterated
    const Family& family() const;          // TimeVarying
    const Rational& base() const;          // DirectIterate
    const OrbitSystem& first() const;      // Product
    const OrbitSystem& second() const;     // Product
    const GammaFn& gamma() const;          // Product
    const OrbitSystem& inner() const;      // Conjugated, Power, Restricted
    const MapExpr& g() const;              // Conjugated
    const MapExpr& g_inv() const;          // Conjugated
    const ModulusFn& modulus() const;      // Conjugated
    unsigned long exponent() const;        // Power
    const StructuredSet& carrier() const;  // Restricted

    std::size_t dimension() const;
    // The carrier the system is meant to act on.
    MetricSpace natural_space() const;
    // O_{n+1} is a function of (n, O_n) alone, so equal states stay equal.
    bool is_markovian() const;

    std::string to_string() const;

private:
    struct Node;
    explicit OrbitSystem(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

// Thrown by restricted systems and restrict(); carries the escaping point.
class NotInvariantError : public Error {
public:
    NotInvariantError(Point witness, Point image, const std::string& what)
        : Error(ErrorKind::NotInvariant, what), witness_(std::move(witness)), image_(std::move(image))
    {
    }
    const Point& witness() const noexcept { return witness_; }
    const Point& image() const noexcept { return image_; }

private:
    Point witness_;
    Point image_;
};

// Walks O_0 x, O_1 x, ... one step at a time.
class OrbitCursor {
public:
    virtual ~OrbitCursor() = default;
    virtual const Point& current() const = 0;
    virtual void advance() = 0;
    unsigned long index() const noexcept { return index_; }

protected:
    unsigned long index_ = 0;
};

std::unique_ptr<OrbitCursor> make_cursor(const OrbitSystem& system, const Point& x,
                                         unsigned precision = default_precision);

// Time-varying systems follow F_n = f_n o ... o f_0, so O_0 = f_0(x).
Point iterate(const OrbitSystem& system, unsigned long n, const Point& x, unsigned precision = default_precision);
std::vector<Point> orbit_prefix(const OrbitSystem& system, const Point& x, unsigned long n_max,
                                unsigned precision = default_precision);

// Checks g(g_inv(y)) = y on 100 seeded points; NotInverse otherwise.
OrbitSystem conjugate(const OrbitSystem& inner, const MapExpr& g, const MapExpr& g_inv, const ModulusFn& modulus);

// Iterated systems only; UnsupportedSystemKind otherwise.
OrbitSystem power(const OrbitSystem& f, unsigned long m);

// Probes the quartiles of the probe set (when bounded) and then seeded
// samples; throws NotInvariantError with the first escaping probe.
OrbitSystem restrict_to(const OrbitSystem& f, const StructuredSet& carrier, std::size_t probe_budget,
                        std::uint64_t seed = 0, const std::optional<StructuredSet>& probes = std::nullopt);

struct ExpansionBounds {
    enum class Rule { Power, Root };
    Rule rule = Rule::Power;
    Scalar factor;                // |lambda| for Power, base for Root
    std::optional<Scalar> uniform_upper; // L* = sup_{n>=1} L_n
    StructuredSet domain = StructuredSet::full_line();

    // l_n = L_n for every attached form.
    Scalar lower(unsigned long n, unsigned precision = default_precision) const;
    Scalar upper(unsigned long n, unsigned precision = default_precision) const { return lower(n, precision); }
};

std::optional<ExpansionBounds> expansion_bounds(const OrbitSystem& system);

} // namespace orbex

#endif

#ifndef ORBEX_ANALYSIS_HPP
#define ORBEX_ANALYSIS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orbex/system.hpp"

namespace orbex {

// Finite stand-in for "for each eps > 0 ... for some n ... some point".
struct ScaleBudget {
    QSqrt2 eps_max{Rational(1, 2)};
    Rational ratio{Rational(1, 2)};
    unsigned levels = 8;
    unsigned long horizon = 64;
    std::size_t samples = 32;
    std::uint64_t seed = 0;
    unsigned precision = default_precision;
    // Replaces the geometric grid when set (used to translate scales between
    // equivalent metrics).
    std::optional<std::vector<QSqrt2>> explicit_levels;
    // Parallelism only; never changes a result.
    unsigned workers = 1;

    void validate() const;
    std::vector<QSqrt2> grid() const;
    // Grid level k, continued past the last level when k >= levels.
    QSqrt2 level(unsigned k) const;
};

struct SeparationWitness {
    Scalar level;          // ball radius the witness was drawn from; rho(base, y) for transformed ones
    Point y;
    unsigned long n = 0;
    Scalar separation;     // rho(O_n x, O_n y); its lower end is the certified bound
    Scalar threshold;      // certified separation > threshold (>= for product embeddings)
    bool strict = true;    // false: separation >= threshold
    std::size_t sample_index = 0;
    std::optional<Point> base; // the other point, for pair witnesses
};

enum class CertificateKind { EmptyBall, UniformBound, CollapsedOrbit };

struct RefutationCertificate {
    CertificateKind kind = CertificateKind::EmptyBall;
    Scalar level;               // EmptyBall radius; UniformBound level when one is named
    std::optional<Scalar> bound; // L*
    unsigned long n0 = 0;       // CollapsedOrbit
    std::optional<Point> x;     // CollapsedOrbit pair / UniformBound pair
    std::optional<Point> y;
    bool on_grid = true;        // level taken from the budget grid
    std::string note;
};

enum class Status { Supported, Refuted, Inconclusive };

enum class QueryKind { Oe, OeOfSet, Roe, RoeOfSet, Expansive, CwExpansive };

struct Query {
    QueryKind kind = QueryKind::Oe;
    std::vector<Point> points;          // x, or the finite set P
    std::optional<StructuredSet> set;   // A for the set forms and CW
    std::optional<Scalar> threshold;    // d or c; ROE uses the level itself

    std::string to_string() const;
};

struct Verdict {
    Status status = Status::Inconclusive;
    std::vector<SeparationWitness> witnesses;
    std::optional<RefutationCertificate> certificate;
    std::vector<std::string> diagnostics;
    Query query;
    ScaleBudget budget;
};

std::string_view to_string(Status s) noexcept;
std::string_view to_string(CertificateKind k) noexcept;
std::string_view to_string(QueryKind k) noexcept;

// Smallest n in [1, N] with certified rho(O_n x, O_n y) > d.
std::optional<unsigned long> separation_time(const OrbitSystem& system, const MetricSpace& space, const Point& x,
                                             const Point& y, const Scalar& d, unsigned long horizon,
                                             unsigned precision = default_precision);

Verdict oe_point_verdict(const OrbitSystem& system, const MetricSpace& space, const Point& x, const Scalar& d,
                         const ScaleBudget& budget);
Verdict oe_point_of_set_verdict(const OrbitSystem& system, const MetricSpace& space, const Point& x,
                                const StructuredSet& a, const Scalar& d, const ScaleBudget& budget);
Verdict roe_point_verdict(const OrbitSystem& system, const MetricSpace& space, const Point& x,
                          const ScaleBudget& budget);
Verdict roe_point_of_set_verdict(const OrbitSystem& system, const MetricSpace& space, const Point& x,
                                 const StructuredSet& a, const ScaleBudget& budget);
// DegenerateInput for fewer than two points or repeated points.
Verdict expansive_verdict(const OrbitSystem& system, const MetricSpace& space, const std::vector<Point>& points,
                          const Scalar& d, unsigned long horizon, unsigned precision = default_precision);
Verdict cw_expansive_verdict(const OrbitSystem& system, const MetricSpace& space, const StructuredSet& a,
                             const Scalar& c, const ScaleBudget& budget);

// Dispatches on query.kind.
Verdict run_query(const OrbitSystem& system, const MetricSpace& space, const Query& query, const ScaleBudget& budget);

struct SetMapEntry {
    Point candidate;
    Verdict verdict;
};
std::vector<SetMapEntry> oe_set_map(const OrbitSystem& system, const MetricSpace& space, const StructuredSet& a,
                                    const std::vector<Point>& candidates, const Scalar& d, const ScaleBudget& budget);

// Picks whichever of y, z escapes the d_A/2 tube around x at step n.
SeparationWitness halving_transform(const OrbitSystem& system, const MetricSpace& space, const Point& x,
                                    const Point& y, const Point& z, unsigned long n, const Scalar& d_a,
                                    unsigned precision = default_precision);

// Witness for `inner` at x, moved to the conjugated system at g(x) with
// threshold modulus(witness.threshold).
SeparationWitness transport_conjugacy(const SeparationWitness& witness, const Point& x, const OrbitSystem& inner,
                                      const MapExpr& g, const MapExpr& g_inv, const ModulusFn& modulus,
                                      const MetricSpace& target_space, unsigned precision = default_precision);

// Embeds a witness for F at x into F x G at (x, partner); with
// partner_first the partner is the first coordinate instead.
SeparationWitness product_witness(const SeparationWitness& witness, const Point& x, const Point& partner,
                                  const OrbitSystem& f, const OrbitSystem& g, const MetricSpace& f_space,
                                  const MetricSpace& g_space, const GammaFn& gamma, bool partner_first = false,
                                  unsigned precision = default_precision);

std::optional<RefutationCertificate> not_oe_certificate(const OrbitSystem& system, const Point& x);

Rational witness_density(const OrbitSystem& system, const MetricSpace& space, const Point& x, const QSqrt2& eps,
                         const Scalar& d, unsigned long horizon, std::size_t samples, std::uint64_t seed,
                         unsigned precision = default_precision);

// Independent re-evaluation at the given precision.
bool verify_witness(const OrbitSystem& system, const MetricSpace& space, const Point& x,
                    const SeparationWitness& witness, unsigned precision);
bool verify_certificate(const OrbitSystem& system, const MetricSpace& space, const Query& query,
                        const RefutationCertificate& cert, unsigned precision);
// Re-checks every witness (at doubled precision) or the certificate.
bool verify_verdict(const OrbitSystem& system, const MetricSpace& space, const Verdict& verdict);

// ---------------------------------------------------------------- laws

struct LawInstance {
    OrbitSystem system;
    MetricSpace space;
    std::vector<StructuredSet> sets;
    std::vector<Point> candidates;
    Scalar d{Rational(1)};
    ScaleBudget budget;
    // iterate-power
    unsigned long power = 2;
    // metric-equivalence
    GammaFn gamma = GammaFn::ratio_bound();
    // restriction
    std::optional<StructuredSet> carrier;
    // uniform-conjugacy
    std::optional<MapExpr> g;
    std::optional<MapExpr> g_inv;
    ModulusFn modulus;
};

struct LawReport {
    std::string law;
    bool holds_at_scale = true;
    std::size_t checked = 0;
    std::size_t agreeing = 0;     // both sides decided and consistent
    std::size_t inconclusive = 0; // skipped because a side was Inconclusive
    std::vector<std::string> details;
};

const std::vector<std::string>& law_ids();
// UnknownLaw for unrecognized ids.
LawReport law_check(const std::string& law, const LawInstance& instance);

} // namespace orbex

#endif

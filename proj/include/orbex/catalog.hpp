#ifndef ORBEX_CATALOG_HPP
#define ORBEX_CATALOG_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "orbex/analysis.hpp"

namespace orbex {

// Where an expected row comes from: stated in the published example,
// immediate from the definitions, or computed by an independent check.
enum class Provenance { Published, Trivial, Derived };

std::string_view to_string(Provenance p) noexcept;

enum class RowKind { Verdict, SeparationTime };

struct ExpectedRow {
    std::string label;
    RowKind kind = RowKind::Verdict;
    // SeparationTime rows use points = {x, y} and threshold = d.
    Query query;
    // Run the query once per point of query.points (Oe/Roe forms).
    bool each_point = false;
    Status expected = Status::Supported;
    std::optional<CertificateKind> certificate;
    std::optional<Scalar> bound; // expected L*
    std::optional<Scalar> level; // expected certificate level
    std::optional<unsigned long> n0;
    std::optional<unsigned long> time; // SeparationTime
    Provenance provenance = Provenance::Derived;
};

struct CatalogEntry {
    std::string name;
    OrbitSystem system;
    MetricSpace space;
    std::vector<std::pair<std::string, StructuredSet>> subsets;
    std::vector<ExpectedRow> expected;
    std::string notes;
    ScaleBudget budget;
};

const std::vector<std::string>& catalog_names();
// UnknownEntry for unregistered names.
const CatalogEntry& catalog_get(const std::string& name);

struct RowResult {
    bool matches = false;
    std::vector<Verdict> verdicts;
    std::optional<unsigned long> time;
    std::string observed;
};

RowResult run_row(const CatalogEntry& entry, const ExpectedRow& row, const ScaleBudget& budget);

struct NamedLaw {
    std::string law;
    std::string instance; // catalog entry the instance is built on
    LawInstance data;
};

// The law instances checked by the verify command.
const std::vector<NamedLaw>& law_suite();

} // namespace orbex

#endif

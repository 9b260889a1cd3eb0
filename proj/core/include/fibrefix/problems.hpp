#pragma once

// Problem files, the registry of built-in fibre map families, and the seeded
// generator of well-posed problems.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fibrefix/detfix.hpp"
#include "fibrefix/psi.hpp"
#include "fibrefix/randfix.hpp"
#include "fibrefix/rnmodule.hpp"

namespace fibrefix {

/// Family parameters by name. Scalars are stored as one-element vectors.
using Params = std::map<std::string, std::vector<double>>;

struct FibreDecl {
  std::string family;
  Params params;
  bool operator==(const FibreDecl&) const = default;
};

struct SolverDefaults {
  double tol = 1e-8;
  std::size_t max_iter = 100000;
  double eps = 1e-3;
  double lambda = 0.01;
  bool operator==(const SolverDefaults&) const = default;
};

struct Problem {
  std::vector<double> weights;
  std::size_t dim = 1;
  /// Essential bound M of the domain.
  double radius = 1.0;
  /// One admissible set per atom.
  std::vector<FibreSet> sets;
  PsiFunction psi = PsiFunction::linear(0.5);
  std::vector<FibreDecl> fibres;
  SolverDefaults solver;
  std::uint64_t seed = 0;

  std::size_t atoms() const noexcept { return weights.size(); }
  bool operator==(const Problem&) const = default;
};

struct ParamSchema {
  std::string name;
  /// Number of entries; kVector means one entry per dimension.
  static constexpr std::size_t kVector = 0;
  std::size_t size = 1;
  double lo = 0.0;
  double hi = 0.0;
  bool lo_open = false;
  bool hi_open = false;
  /// Value used when the parameter is omitted; empty means required.
  std::vector<double> fallback;
  std::string doc;
};

struct MapFamily {
  std::string name;
  std::string doc;
  std::vector<ParamSchema> params;
  /// Quarantined negative-test family; generate never draws it.
  bool pathological = false;
  bool continuous = true;
  /// Builds the fibre map on a set. Parameters are already validated and
  /// completed with defaults.
  std::function<FibreMap(const Params&, const FibreSet&)> build;
};

/// Immutable registry, in a fixed order.
const std::vector<MapFamily>& builtin_families();

/// Throws SchemaError for an unknown name.
const MapFamily& find_family(std::string_view name);

/// Checks the parameters against the family schema for dimension dim and
/// fills in defaults. Throws SchemaError naming the field.
Params complete_params(const MapFamily& family, const Params& params, std::size_t dim);

FibreMap build_fibre(const FibreDecl& decl, const FibreSet& set);

/// Validates the problem (space, domain, psi, families, solver ranges).
/// Throws SchemaError or InvalidArgument.
void validate(const Problem& prob);

/// Membership sampling: every positive-weight atom's map must send probe and
/// random points of its set back into the set. Throws SchemaError naming the
/// atom on failure.
void check_invariance(const Problem& prob, std::size_t samples = 256);

RandomMap build(const Problem& prob);

/// Parses and validates a problem document; includes check_invariance.
Problem load_text(std::string_view text);
/// As load_text; I/O failures throw SchemaError too.
Problem load_file(const std::filesystem::path& path);

/// Canonical JSON with shortest round-trip reals.
std::string render(const Problem& prob);

struct GenerateOptions {
  std::size_t atoms = 4;
  std::size_t dim = 2;
};

inline constexpr std::size_t kMaxGeneratedAtoms = 1024;
inline constexpr std::size_t kMaxGeneratedDim = 8;

/// Seeded well-posed problem: families and parameters are drawn from ranges
/// in which all four hypotheses hold by construction.
Problem generate(std::uint64_t seed, const GenerateOptions& options = {});

/// Fixed point of a family when it has one in closed form.
std::optional<Point> analytic_fixed_point(const FibreDecl& decl, std::size_t dim);

struct BoundAuditRow {
  std::size_t atom;
  std::size_t n;
  double measured;
  double bound;
};

/// Bound audit: d(T^n u, T^n v) <= phi_n(u, v) + 1e-9 on seeded pairs for n
/// in ns, over every positive-weight atom with a declared bound family.
/// Returns the violating rows.
std::vector<BoundAuditRow> audit_bounds(const RandomMap& f, std::size_t pairs, std::uint64_t seed,
                                        std::span<const std::size_t> ns);

}  // namespace fibrefix

#pragma once

// Deterministic engine on one fibre: orbits, tail diameters, the five-term
// maximum, and the Picard solver for asymptotic pointwise Boyd-Wong
// contractions.

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fibrefix/psi.hpp"
#include "fibrefix/rnmodule.hpp"

namespace fibrefix {

/// phi_n(u, v): declared bound on d(T^n u, T^n v).
using BoundFamily = std::function<double(std::size_t n, std::span<const double> u,
                                         std::span<const double> v)>;
/// phi(u, v) = lim phi_n(u, v).
using LimitBound = std::function<double(std::span<const double> u, std::span<const double> v)>;

/// Self-map T of one fibre set G_omega.
class FibreMap {
 public:
  using Eval = std::function<void(std::span<const double> in, std::span<double> out)>;

  FibreMap(std::string family, FibreSet set, Eval evaluate);

  FibreMap& with_bounds(BoundFamily phi_n, LimitBound phi);
  FibreMap& with_continuity(bool continuous);
  /// Points the continuity probe must visit (breakpoints of the map).
  FibreMap& with_hints(std::vector<Point> hints);
  FibreMap& with_atom(std::size_t atom);

  const std::string& family() const noexcept { return family_; }
  const FibreSet& set() const noexcept { return set_; }
  std::size_t dim() const noexcept { return set_.dim(); }
  std::size_t atom() const noexcept { return atom_; }
  bool continuous() const noexcept { return continuous_; }
  const BoundFamily& phi_n() const noexcept { return phi_n_; }
  const LimitBound& phi() const noexcept { return phi_; }
  bool has_bounds() const noexcept { return static_cast<bool>(phi_n_); }
  std::span<const Point> hints() const noexcept { return hints_; }

  /// T(u) without a membership check.
  void apply(std::span<const double> u, std::span<double> out) const { evaluate_(u, out); }
  Point operator()(std::span<const double> u) const;

  /// T(u); throws DomainEscape when u or T(u) is outside G_omega.
  Point checked(std::span<const double> u) const;
  void checked(std::span<const double> u, std::span<double> out) const;

  /// T^n(u), checking every iterate.
  Point iterate(std::span<const double> u, std::size_t n) const;

 private:
  std::string family_;
  FibreSet set_;
  Eval evaluate_;
  BoundFamily phi_n_;
  LimitBound phi_;
  bool continuous_ = true;
  std::vector<Point> hints_;
  std::size_t atom_ = 0;
};

/// max{d(u,v), d(Tu,u), d(Tv,v), d(Tu,v), d(Tv,u)}.
double five_term_max(const FibreMap& map, std::span<const double> u, std::span<const double> v);

/// Recorded orbit x_0, x_1, ... of one fibre map.
struct OrbitTrace {
  Point start;
  /// Absolute index of points.front(); nonzero once the window dropped the head.
  std::size_t offset = 0;
  std::vector<Point> points;
  /// tail_diameters[k] = max over recorded i, j >= offset + k of d(x_i, x_j).
  std::vector<double> tail_diameters;
  /// steps[n] = d(x_{n+1}, x_n) for every step taken, including dropped ones.
  std::vector<double> steps;
  bool stopped = false;

  std::size_t last_index() const { return offset + points.size() - 1; }
  /// b at an absolute index.
  double b(std::size_t n) const { return tail_diameters.at(n - offset); }
};

struct OrbitOptions {
  std::size_t n_max = 1000;
  /// Stop once `consecutive` steps fall below stop_tol and the residual at
  /// the candidate is at most stop_tol. Zero disables the rule.
  double stop_tol = 0.0;
  std::size_t consecutive = 3;
  std::size_t window = 4096;
  bool full_storage = false;
};

OrbitTrace orbit(const FibreMap& map, std::span<const double> x0, const OrbitOptions& options = {});

/// Exact tail diameters of a recorded point list.
std::vector<double> tail_diameters(std::span<const Point> points);

struct TailRow {
  std::size_t n;
  double b_n_plus_N;
  double rhs;  // psi(b_n) + eps
  double slack;
};

struct TailLedger {
  std::size_t horizon = 0;  // N
  double eps = 0.0;
  std::vector<TailRow> rows;
  std::vector<TailRow> violations;
  double worst_slack = std::numeric_limits<double>::infinity();
  bool ok() const noexcept { return violations.empty(); }
};

/// Checks b_{n+N} <= psi(b_n) + eps (+ 1e-9) for every recorded n with n + N
/// recorded.
TailLedger verify_tail_inequality(const OrbitTrace& trace, const PsiFunction& psi, double eps,
                                  std::size_t horizon);

struct SolveFibreOptions {
  double tol = 1e-8;
  std::size_t max_iter = 100000;
  std::size_t consecutive = 3;
  /// Also keep the point window and tail diameters of the orbit.
  bool keep_trace = false;
};

struct FibreSolution {
  Point z;
  std::size_t iterations = 0;
  /// d(T z, z).
  double residual = 0.0;
  bool converged = false;
  OrbitTrace trace;
};

FibreSolution solve_fibre(const FibreMap& map, std::span<const double> x0,
                          const SolveFibreOptions& options = {});

struct UniformityResult {
  std::optional<std::size_t> horizon;
  /// Sampled sup |phi_N - phi| at the returned horizon, or at the cap.
  double sup = 0.0;
  std::size_t probes = 0;
};

inline constexpr std::size_t kUniformityCap = std::size_t{1} << 20;

/// Smallest N with sampled sup over region^2 of |phi_N - phi| < eps: a
/// doubling search brackets N and bisection refines it. The sup is an
/// estimate over the sample, not a proof.
UniformityResult locate_uniformity_N(const BoundFamily& phi_n, const LimitBound& phi,
                                     std::span<const Point> region, double eps,
                                     std::size_t cap = kUniformityCap);

}  // namespace fibrefix

#pragma once

// Random maps acting atomwise on sections, the four hypotheses of a random
// asymptotically pointwise Boyd-Wong contraction as executable checks, and
// the fibre-decomposition solver: solve every fibre deterministically, glue
// the fibre fixed points, certify (eps, lambda)-convergence of the iterates.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fibrefix/detfix.hpp"
#include "fibrefix/measure.hpp"
#include "fibrefix/psi.hpp"
#include "fibrefix/rnmodule.hpp"

namespace fibrefix {

class RandomMap {
 public:
  /// fibres[k] acts on atom k; its set must equal domain.fibre(k).
  RandomMap(Domain domain, std::vector<FibreMap> fibres, PsiFunction psi);

  const SpacePtr& space() const noexcept { return domain_.space(); }
  const Domain& domain() const noexcept { return domain_; }
  std::size_t dim() const noexcept { return domain_.dim(); }
  std::size_t atoms() const noexcept { return fibres_.size(); }
  const FibreMap& fibre(std::size_t atom) const { return fibres_.at(atom); }
  std::span<const FibreMap> fibres() const noexcept { return fibres_; }
  const PsiFunction& psi() const noexcept { return psi_; }

 private:
  Domain domain_;
  std::vector<FibreMap> fibres_;
  PsiFunction psi_;
};

/// Same fibres on the conditional space P(. | A): atoms outside A get weight
/// zero, so solving the restriction yields theta there.
RandomMap restrict_to(const RandomMap& f, const Event& a);

/// (f x)(omega) = f_omega(x(omega)) on positive-weight atoms, theta elsewhere.
/// Throws DomainEscape naming the atom.
Section apply(const RandomMap& f, const Section& x);

/// f^n x.
Section iterate(const RandomMap& f, const Section& x, std::size_t n);

/// Phi_n(x, y) = ||f^n x - f^n y||, n >= 1.
L0Scalar Phi_n(const RandomMap& f, const Section& x, const Section& y, std::size_t n);

/// Atomwise five-term maximum.
L0Scalar random_M(const RandomMap& f, const Section& x, const Section& y);

// ---------------------------------------------------------------------------
// Hypotheses

enum class Verdict { kProved, kWitnessed, kInconclusive, kViolated };

std::string to_string(Verdict verdict);

/// Concrete evidence for a verdict: an atom, the points involved, and named
/// values.
struct Witness {
  std::size_t atom = 0;
  Point x;
  Point y;
  std::vector<std::pair<std::string, double>> values;
  std::string note;
};

struct ConditionReport {
  int condition = 0;
  std::string name;
  Verdict verdict = Verdict::kInconclusive;
  std::string method;
  std::string detail;
  /// Counterexamples when violated, otherwise the tightest observed case.
  std::vector<Witness> witnesses;
  std::size_t checks = 0;
};

/// Sampled sup over pairs of |Phi_n - Phi| at one ladder level.
struct DecayRow {
  std::size_t n;
  double sup;
};

struct HypothesisLedger {
  std::array<ConditionReport, 4> conditions;
  /// Positive-weight atoms with no violated condition.
  std::vector<std::size_t> full_measure_atoms;
  /// Per atom: the doubling ladder of condition (2).
  std::vector<std::vector<DecayRow>> decay;
  /// Per atom: first ladder level with sup below eps_unif, if reached.
  std::vector<std::optional<std::size_t>> uniformity_horizon;

  bool any_violated() const;
  /// Every condition proved or witnessed.
  bool all_witnessed() const;
};

struct SamplingPlan {
  std::size_t pairs = 256;
  std::uint64_t seed = 0;
  double eps_unif = 1e-3;
  std::size_t ladder_cap = 4096;
  std::vector<double> deltas = {1e-2, 1e-4, 1e-6, 1e-8};
  std::size_t continuity_points = 32;
  std::size_t structural_samples = 16;
  std::size_t max_witnesses = 4;
};

HypothesisLedger verify_hypotheses(const RandomMap& f, const SamplingPlan& plan = {});

// ---------------------------------------------------------------------------
// Solver

enum class SolveStatus { kConverged, kNonConvergent, kNonUnique, kRefused };

std::string to_string(SolveStatus status);

struct AtomResult {
  std::size_t atom = 0;
  double weight = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;
  bool converged = false;
  bool solved = false;  // false for zero-weight atoms
  std::vector<double> steps;
  OrbitTrace trace;
};

/// (eps, lambda) certificate over the recorded iterates f^n x0, n = 0..n_max.
struct ConvergenceCertificate {
  double eps = 0.0;
  double lambda = 0.0;
  std::optional<std::size_t> n_star;
  /// P(||f^n x0 - z|| < eps) and ess sup ||f^n x0 - z|| per recorded n.
  std::vector<double> prob_within;
  std::vector<double> ess_sup_distance;
  bool prefix_only = true;
};

struct UniquenessCertificate {
  bool unique = false;
  double deviation = 0.0;
};

struct UniquenessCheck {
  std::size_t starts = 0;
  std::size_t inconclusive = 0;
  bool unique = true;
  double max_deviation = 0.0;
};

struct SolveOptions {
  double tol = 1e-8;
  std::size_t max_iter = 100000;
  double eps = 1e-3;
  double lambda = 0.01;
  /// Solve even when a hypothesis is violated.
  bool force = false;
  std::size_t threads = 1;
  /// Extra seeded starts for the uniqueness spot check.
  std::size_t uniqueness_starts = 2;
  std::uint64_t seed = 0;
  bool keep_traces = false;
  SamplingPlan plan;
};

struct SolveReport {
  explicit SolveReport(Section fixed_point) : z(std::move(fixed_point)) {}

  SolveStatus status = SolveStatus::kConverged;
  Section z;
  double tol = 0.0;
  std::vector<AtomResult> atoms;
  std::vector<std::size_t> nonconvergent_atoms;
  HypothesisLedger hypotheses;
  /// Solved although some hypothesis was not witnessed.
  bool hypotheses_not_witnessed = false;
  ConvergenceCertificate certificate;
  UniquenessCheck uniqueness;
  double seconds = 0.0;
};

/// Runs verify_hypotheses unless a ledger is supplied, refuses on a violated
/// hypothesis unless forced, then solves every positive-weight fibre from
/// x0 and glues the fixed points atomwise.
SolveReport solve(const RandomMap& f, const Section& x0, const SolveOptions& options = {},
                  const HypothesisLedger* ledger = nullptr);

/// True iff ess sup ||z1 - z2|| <= 10 tol. Throws InvalidArgument when either
/// input has residual above tol at a positive-weight atom.
UniquenessCertificate certify_uniqueness(const RandomMap& f, const Section& z1, const Section& z2,
                                         double tol);

}  // namespace fibrefix

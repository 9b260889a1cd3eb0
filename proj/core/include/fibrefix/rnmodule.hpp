#pragma once

// The random normed module of sections Omega -> R^d with the atomwise
// Euclidean norm, the (eps, lambda)-topology, and sigma-stable gluing.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fibrefix/measure.hpp"
#include "fibrefix/random.hpp"

namespace fibrefix {

using Point = std::vector<double>;

/// Euclidean distance between two points of the same dimension.
double distance(std::span<const double> u, std::span<const double> v);
double norm(std::span<const double> u);

/// Element of E: one point of R^d per atom.
class Section {
 public:
  Section(SpacePtr space, std::size_t dim, std::vector<double> flat);

  /// The zero element theta.
  static Section zero(SpacePtr space, std::size_t dim);
  static Section from_points(SpacePtr space, std::span<const Point> points);

  const SpacePtr& space() const noexcept { return space_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t atoms() const noexcept { return space_->size(); }

  std::span<const double> point(std::size_t atom) const {
    return {flat_.data() + atom * dim_, dim_};
  }
  std::span<double> point(std::size_t atom) { return {flat_.data() + atom * dim_, dim_}; }
  Point point_copy(std::size_t atom) const {
    auto p = point(atom);
    return {p.begin(), p.end()};
  }
  std::span<const double> flat() const noexcept { return flat_; }

  /// Canonical representative: zero-weight atoms set to theta.
  Section normalized() const;

  Section operator+(const Section& other) const;
  Section operator-(const Section& other) const;
  /// xi * x, atomwise scaling by an L0 scalar.
  Section scaled(const L0Scalar& xi) const;

  bool operator==(const Section& other) const {
    return dim_ == other.dim_ && same_space(space_, other.space_) && flat_ == other.flat_;
  }

 private:
  SpacePtr space_;
  std::size_t dim_;
  std::vector<double> flat_;
};

/// Admissible closed set G_omega of one fibre.
class FibreSet {
 public:
  enum class Kind { kBall, kBox, kBallUnion };

  struct Ball {
    Point center;
    double radius;
    bool operator==(const Ball&) const = default;
  };

  /// Closed ball of the given radius centred at theta.
  static FibreSet ball(std::size_t dim, double radius);
  /// Axis-aligned box; must contain theta.
  static FibreSet box(Point lo, Point hi);
  /// Finite union of closed balls; one of them must contain theta.
  static FibreSet ball_union(std::vector<Ball> balls);

  Kind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  /// Largest norm of any member.
  double bound() const noexcept { return bound_; }
  double radius() const noexcept { return radius_; }
  const Point& lo() const noexcept { return lo_; }
  const Point& hi() const noexcept { return hi_; }
  std::span<const Ball> balls() const noexcept { return balls_; }

  /// Membership with a relative slack of 1e-12 for rounding on the boundary.
  bool contains(std::span<const double> u) const;

  Point sample(Rng& rng) const;

  /// Deterministic points covering the set: theta, extreme points along each
  /// axis, and a Halton sequence mapped into the set.
  std::vector<Point> probe_points(std::size_t halton_count) const;

  bool operator==(const FibreSet&) const = default;

 private:
  FibreSet() = default;
  void validate() const;

  Kind kind_ = Kind::kBall;
  std::size_t dim_ = 0;
  double radius_ = 0.0;
  Point lo_;
  Point hi_;
  std::vector<Ball> balls_;
  double bound_ = 0.0;
};

/// Essentially bounded, sigma-stable admissible set G built from per-atom
/// closed sets. Closedness holds by construction.
class Domain {
 public:
  Domain(SpacePtr space, std::size_t dim, double radius_bound, std::vector<FibreSet> fibres);

  /// Same set on every atom.
  static Domain uniform(SpacePtr space, double radius_bound, const FibreSet& fibre);

  const SpacePtr& space() const noexcept { return space_; }
  std::size_t dim() const noexcept { return dim_; }
  double radius_bound() const noexcept { return radius_bound_; }
  const FibreSet& fibre(std::size_t atom) const { return fibres_.at(atom); }
  std::span<const FibreSet> fibres() const noexcept { return fibres_; }

  /// First positive-weight atom where x leaves its fibre set, if any.
  std::optional<std::size_t> escape_atom(const Section& x) const;
  bool contains(const Section& x) const { return !escape_atom(x).has_value(); }

  /// Random admissible section; zero-weight atoms carry theta.
  Section sample(Rng& rng) const;

 private:
  SpacePtr space_;
  std::size_t dim_;
  double radius_bound_;
  std::vector<FibreSet> fibres_;
};

L0Scalar rnorm(const Section& x);

/// Sum_n I_{A_n} x_n: on block n the result equals sections[n].
/// Atoms outside every block (zero weight) carry theta.
Section glue(const Partition& partition, std::span<const Section> sections);

/// I_A x: x on A, theta elsewhere.
Section indicator_mul(const Event& a, const Section& x);

/// Same gluing for scalars.
L0Scalar glue(const Partition& partition, std::span<const L0Scalar> scalars);

/// P(||x - y|| < eps) >= 1 - lambda, computed exactly.
bool eps_lambda_near(const Section& x, const Section& y, double eps, double lambda);

/// Scalar form: P(distance < eps) >= 1 - lambda.
bool eps_lambda_small(const L0Scalar& distance, double eps, double lambda);

/// Minimal n* such that every distances[n], n >= n*, is (eps, lambda)-small;
/// nullopt when the final entry fails. Certifies the recorded prefix only.
std::optional<std::size_t> prefix_certificate(std::span<const L0Scalar> distances, double eps,
                                              double lambda);

std::optional<std::size_t> converges_in_prob(std::span<const Section> seq, const Section& limit,
                                             double eps, double lambda);

enum class Axiom { kZeroIffTheta, kHomogeneity, kTriangle };

std::string to_string(Axiom axiom);

struct AxiomViolation {
  Axiom axiom;
  std::size_t sample = 0;
  std::size_t atom = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

using NormFn = std::function<L0Scalar(const Section&)>;

/// Checks the three random-norm axioms per positive-weight atom within tol
/// (scaled by max(1, |rhs|)). Sample i is paired with sample i+1 for the
/// triangle inequality and with scalars[i mod m] for homogeneity; theta is
/// always checked.
std::vector<AxiomViolation> check_module_axioms(std::span<const Section> samples,
                                                std::span<const L0Scalar> scalars,
                                                const NormFn& norm_fn = rnorm,
                                                double tol = 1e-12);

}  // namespace fibrefix

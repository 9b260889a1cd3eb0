#pragma once

// Finite atomic probability spaces and the L0 scalar algebra over them.
//
// On a finite atomic space an equivalence class of random variables has a
// canonical representative once zero-weight atoms are pinned to 0, so every
// almost-sure statement below is an exact per-atom statement restricted to
// positive-weight atoms.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace fibrefix {

/// Tolerance on the total mass of a probability space.
inline constexpr double kProbabilitySumTolerance = 1e-12;

class ProbSpace {
 public:
  /// Throws InvalidArgument unless weights are finite, nonnegative, nonempty
  /// and sum to 1 within kProbabilitySumTolerance.
  explicit ProbSpace(std::vector<double> weights);

  static std::shared_ptr<const ProbSpace> make(std::vector<double> weights);
  static std::shared_ptr<const ProbSpace> uniform(std::size_t atoms);

  std::size_t size() const noexcept { return weights_.size(); }
  double weight(std::size_t atom) const { return weights_.at(atom); }
  bool positive(std::size_t atom) const { return weights_.at(atom) > 0.0; }
  std::span<const double> weights() const noexcept { return weights_; }

  /// Indices of positive-weight atoms in ascending order.
  std::vector<std::size_t> support() const;

  bool operator==(const ProbSpace& other) const = default;

 private:
  std::vector<double> weights_;
};

using SpacePtr = std::shared_ptr<const ProbSpace>;

/// True when both pointers refer to the same space or to equal weight vectors.
bool same_space(const SpacePtr& a, const SpacePtr& b);

/// Throws SpaceMismatch when the two spaces differ.
void require_same_space(const SpacePtr& a, const SpacePtr& b);

/// A set of atoms. Members are kept sorted and unique.
class Event {
 public:
  Event(SpacePtr space, std::vector<std::size_t> members);

  static Event all(SpacePtr space);
  static Event none(SpacePtr space);

  const SpacePtr& space() const noexcept { return space_; }
  std::span<const std::size_t> members() const noexcept { return members_; }
  bool contains(std::size_t atom) const;
  bool empty() const noexcept { return members_.empty(); }

  /// Atoms of the space not in this event.
  Event complement() const;

  bool operator==(const Event& other) const {
    return same_space(space_, other.space_) && members_ == other.members_;
  }

 private:
  SpacePtr space_;
  std::vector<std::size_t> members_;
};

/// Pairwise-disjoint blocks covering every positive-weight atom.
class Partition {
 public:
  Partition(SpacePtr space, std::vector<Event> blocks);

  /// Partition whose block b is {atom : labels[atom] == b}; labels must be
  /// dense in 0..B-1.
  static Partition from_labels(SpacePtr space, std::span<const std::size_t> labels);

  const SpacePtr& space() const noexcept { return space_; }
  std::span<const Event> blocks() const noexcept { return blocks_; }
  std::size_t size() const noexcept { return blocks_.size(); }

  /// Block index of an atom, or size() when the atom is uncovered (which is
  /// only possible for zero-weight atoms).
  std::size_t block_of(std::size_t atom) const;

 private:
  SpacePtr space_;
  std::vector<Event> blocks_;
  std::vector<std::size_t> owner_;
};

/// Atom-indexed real random variable.
class L0Scalar {
 public:
  L0Scalar(SpacePtr space, std::vector<double> values);

  static L0Scalar constant(SpacePtr space, double value);
  static L0Scalar zero(SpacePtr space) { return constant(std::move(space), 0.0); }

  const SpacePtr& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t atom) const { return values_[atom]; }
  double at(std::size_t atom) const { return values_.at(atom); }
  std::span<const double> values() const noexcept { return values_; }

  /// Canonical representative: zero-weight atoms set to 0.
  L0Scalar normalized() const;

  /// Bitwise equality of canonical representatives.
  bool equivalent(const L0Scalar& other) const;

  L0Scalar operator+(const L0Scalar& other) const;
  L0Scalar operator-(const L0Scalar& other) const;
  L0Scalar operator*(const L0Scalar& other) const;
  L0Scalar operator*(double factor) const;
  L0Scalar abs() const;

  bool operator==(const L0Scalar& other) const {
    return same_space(space_, other.space_) && values_ == other.values_;
  }

 private:
  SpacePtr space_;
  std::vector<double> values_;
};

/// Per positive-weight atom maximum over a nonempty family; zero-weight atoms
/// carry 0.
L0Scalar ess_sup(std::span<const L0Scalar> family);

/// Largest value over positive-weight atoms (the essential supremum of a
/// single scalar as a real number). Returns 0 for an all-zero-weight space,
/// which cannot occur for a valid ProbSpace.
double ess_sup_value(const L0Scalar& xi);

/// Values of xi on A, 0 elsewhere.
L0Scalar indicator_mul(const Event& a, const L0Scalar& xi);

double prob_event(const Event& a);

/// xi <= eta at every positive-weight atom.
bool le_as(const L0Scalar& xi, const L0Scalar& eta);

/// The event {omega : xi(omega) < bound}.
Event below(const L0Scalar& xi, double bound);

}  // namespace fibrefix

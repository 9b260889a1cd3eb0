#include "fibrefix/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fibrefix/error.hpp"

namespace fibrefix {

ProbSpace::ProbSpace(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) {
    throw InvalidArgument("probability space needs at least one atom");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    const double w = weights_[k];
    if (!std::isfinite(w) || w < 0.0 || w > 1.0) {
      throw InvalidArgument("weight of atom " + std::to_string(k) +
                            " is not a probability: " + std::to_string(w));
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kProbabilitySumTolerance) {
    throw InvalidArgument("weights sum to " + std::to_string(total) + ", not 1");
  }
}

std::shared_ptr<const ProbSpace> ProbSpace::make(std::vector<double> weights) {
  return std::make_shared<const ProbSpace>(std::move(weights));
}

std::shared_ptr<const ProbSpace> ProbSpace::uniform(std::size_t atoms) {
  if (atoms == 0) throw InvalidArgument("probability space needs at least one atom");
  return make(std::vector<double>(atoms, 1.0 / static_cast<double>(atoms)));
}

std::vector<std::size_t> ProbSpace::support() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (weights_[k] > 0.0) out.push_back(k);
  }
  return out;
}

bool same_space(const SpacePtr& a, const SpacePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

void require_same_space(const SpacePtr& a, const SpacePtr& b) {
  if (!same_space(a, b)) throw SpaceMismatch("operands live on different probability spaces");
}

// ---------------------------------------------------------------------------

Event::Event(SpacePtr space, std::vector<std::size_t> members)
    : space_(std::move(space)), members_(std::move(members)) {
  if (!space_) throw InvalidArgument("event without a probability space");
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  if (!members_.empty() && members_.back() >= space_->size()) {
    throw InvalidArgument("event member " + std::to_string(members_.back()) +
                          " is not an atom");
  }
}

Event Event::all(SpacePtr space) {
  std::vector<std::size_t> members(space->size());
  std::iota(members.begin(), members.end(), std::size_t{0});
  return Event(std::move(space), std::move(members));
}

Event Event::none(SpacePtr space) { return Event(std::move(space), {}); }

bool Event::contains(std::size_t atom) const {
  return std::binary_search(members_.begin(), members_.end(), atom);
}

Event Event::complement() const {
  std::vector<std::size_t> rest;
  for (std::size_t k = 0; k < space_->size(); ++k) {
    if (!contains(k)) rest.push_back(k);
  }
  return Event(space_, std::move(rest));
}

// ---------------------------------------------------------------------------

Partition::Partition(SpacePtr space, std::vector<Event> blocks)
    : space_(std::move(space)), blocks_(std::move(blocks)) {
  if (!space_) throw InvalidArgument("partition without a probability space");
  owner_.assign(space_->size(), blocks_.size());
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    require_same_space(space_, blocks_[b].space());
    for (std::size_t atom : blocks_[b].members()) {
      if (owner_[atom] != blocks_.size()) {
        throw InvalidArgument("partition blocks overlap at atom " + std::to_string(atom));
      }
      owner_[atom] = b;
    }
  }
  for (std::size_t atom = 0; atom < space_->size(); ++atom) {
    if (owner_[atom] == blocks_.size() && space_->positive(atom)) {
      throw InvalidArgument("partition does not cover atom " + std::to_string(atom));
    }
  }
}

Partition Partition::from_labels(SpacePtr space, std::span<const std::size_t> labels) {
  if (labels.size() != space->size()) {
    throw InvalidArgument("one label per atom required");
  }
  const std::size_t count =
      labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<std::size_t>> members(count);
  for (std::size_t atom = 0; atom < labels.size(); ++atom) members[labels[atom]].push_back(atom);
  std::vector<Event> blocks;
  blocks.reserve(count);
  for (auto& m : members) blocks.emplace_back(space, std::move(m));
  return Partition(std::move(space), std::move(blocks));
}

std::size_t Partition::block_of(std::size_t atom) const { return owner_.at(atom); }

// ---------------------------------------------------------------------------

L0Scalar::L0Scalar(SpacePtr space, std::vector<double> values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (!space_) throw InvalidArgument("scalar without a probability space");
  if (values_.size() != space_->size()) {
    throw InvalidArgument("scalar has " + std::to_string(values_.size()) + " values for " +
                          std::to_string(space_->size()) + " atoms");
  }
}

L0Scalar L0Scalar::constant(SpacePtr space, double value) {
  const std::size_t n = space->size();
  return L0Scalar(std::move(space), std::vector<double>(n, value));
}

L0Scalar L0Scalar::normalized() const {
  std::vector<double> v = values_;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!space_->positive(k)) v[k] = 0.0;
  }
  return L0Scalar(space_, std::move(v));
}

bool L0Scalar::equivalent(const L0Scalar& other) const {
  return normalized() == other.normalized();
}

namespace {

template <typename Op>
L0Scalar zip(const L0Scalar& a, const L0Scalar& b, Op op) {
  require_same_space(a.space(), b.space());
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = op(a[k], b[k]);
  return L0Scalar(a.space(), std::move(out));
}

}  // namespace

L0Scalar L0Scalar::operator+(const L0Scalar& other) const {
  return zip(*this, other, [](double x, double y) { return x + y; });
}

L0Scalar L0Scalar::operator-(const L0Scalar& other) const {
  return zip(*this, other, [](double x, double y) { return x - y; });
}

L0Scalar L0Scalar::operator*(const L0Scalar& other) const {
  return zip(*this, other, [](double x, double y) { return x * y; });
}

L0Scalar L0Scalar::operator*(double factor) const {
  std::vector<double> out = values_;
  for (double& v : out) v *= factor;
  return L0Scalar(space_, std::move(out));
}

L0Scalar L0Scalar::abs() const {
  std::vector<double> out = values_;
  for (double& v : out) v = std::abs(v);
  return L0Scalar(space_, std::move(out));
}

// ---------------------------------------------------------------------------

L0Scalar ess_sup(std::span<const L0Scalar> family) {
  if (family.empty()) throw InvalidArgument("essential supremum of an empty family");
  const SpacePtr& space = family.front().space();
  for (const auto& xi : family) require_same_space(space, xi.space());

  std::vector<double> out(space->size(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!space->positive(k)) continue;
    double m = family.front()[k];
    for (const auto& xi : family.subspan(1)) m = std::max(m, xi[k]);
    out[k] = m;
  }
  return L0Scalar(space, std::move(out));
}

double ess_sup_value(const L0Scalar& xi) {
  bool any = false;
  double m = 0.0;
  for (std::size_t k = 0; k < xi.size(); ++k) {
    if (!xi.space()->positive(k)) continue;
    m = any ? std::max(m, xi[k]) : xi[k];
    any = true;
  }
  return m;
}

L0Scalar indicator_mul(const Event& a, const L0Scalar& xi) {
  require_same_space(a.space(), xi.space());
  std::vector<double> out(xi.size(), 0.0);
  for (std::size_t atom : a.members()) out[atom] = xi[atom];
  return L0Scalar(xi.space(), std::move(out));
}

double prob_event(const Event& a) {
  double p = 0.0;
  for (std::size_t atom : a.members()) p += a.space()->weight(atom);
  return p;
}

bool le_as(const L0Scalar& xi, const L0Scalar& eta) {
  require_same_space(xi.space(), eta.space());
  for (std::size_t k = 0; k < xi.size(); ++k) {
    if (xi.space()->positive(k) && !(xi[k] <= eta[k])) return false;
  }
  return true;
}

Event below(const L0Scalar& xi, double bound) {
  std::vector<std::size_t> members;
  for (std::size_t k = 0; k < xi.size(); ++k) {
    if (xi[k] < bound) members.push_back(k);
  }
  return Event(xi.space(), std::move(members));
}

}  // namespace fibrefix

#include "fibrefix/rnmodule.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fibrefix/error.hpp"

namespace fibrefix {

double distance(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double t = u[i] - v[i];
    s += t * t;
  }
  return std::sqrt(s);
}

double norm(std::span<const double> u) {
  double s = 0.0;
  for (double x : u) s += x * x;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Section

Section::Section(SpacePtr space, std::size_t dim, std::vector<double> flat)
    : space_(std::move(space)), dim_(dim), flat_(std::move(flat)) {
  if (!space_) throw InvalidArgument("section without a probability space");
  if (dim_ == 0) throw InvalidArgument("section dimension must be at least 1");
  if (flat_.size() != space_->size() * dim_) {
    throw InvalidArgument("section needs " + std::to_string(space_->size() * dim_) +
                          " coordinates, got " + std::to_string(flat_.size()));
  }
  for (double v : flat_) {
    if (!std::isfinite(v)) throw InvalidArgument("section coordinates must be finite");
  }
}

Section Section::zero(SpacePtr space, std::size_t dim) {
  const std::size_t n = space->size() * dim;
  return Section(std::move(space), dim, std::vector<double>(n, 0.0));
}

Section Section::from_points(SpacePtr space, std::span<const Point> points) {
  if (points.empty() || points.size() != space->size()) {
    throw InvalidArgument("one point per atom required");
  }
  const std::size_t dim = points.front().size();
  std::vector<double> flat;
  flat.reserve(points.size() * dim);
  for (const auto& p : points) {
    if (p.size() != dim) throw InvalidArgument("points of a section must share a dimension");
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return Section(std::move(space), dim, std::move(flat));
}

Section Section::normalized() const {
  Section out = *this;
  for (std::size_t k = 0; k < atoms(); ++k) {
    if (!space_->positive(k)) std::ranges::fill(out.point(k), 0.0);
  }
  return out;
}

namespace {

void require_compatible(const Section& a, const Section& b) {
  require_same_space(a.space(), b.space());
  if (a.dim() != b.dim()) throw InvalidArgument("sections have different dimensions");
}

}  // namespace

Section Section::operator+(const Section& other) const {
  require_compatible(*this, other);
  std::vector<double> out = flat_;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += other.flat_[i];
  return Section(space_, dim_, std::move(out));
}

Section Section::operator-(const Section& other) const {
  require_compatible(*this, other);
  std::vector<double> out = flat_;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= other.flat_[i];
  return Section(space_, dim_, std::move(out));
}

Section Section::scaled(const L0Scalar& xi) const {
  require_same_space(space_, xi.space());
  std::vector<double> out = flat_;
  for (std::size_t k = 0; k < atoms(); ++k) {
    for (std::size_t i = 0; i < dim_; ++i) out[k * dim_ + i] *= xi[k];
  }
  return Section(space_, dim_, std::move(out));
}

// ---------------------------------------------------------------------------
// FibreSet

namespace {

constexpr std::array<unsigned, 8> kHaltonBases = {2, 3, 5, 7, 11, 13, 17, 19};

double radical_inverse(std::size_t index, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

Point unit_direction(std::size_t dim, Rng& rng) {
  Point dir(dim);
  double n = 0.0;
  while (n < 1e-12) {
    for (double& v : dir) v = rng.normal();
    n = norm(dir);
  }
  for (double& v : dir) v /= n;
  return dir;
}

Point sample_ball(const Point& center, double radius, Rng& rng) {
  const std::size_t dim = center.size();
  Point dir = unit_direction(dim, rng);
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
  for (std::size_t i = 0; i < dim; ++i) dir[i] = center[i] + r * dir[i];
  return dir;
}

// Halton point of [-1,1]^dim squashed into the unit ball.
Point halton_ball_point(std::size_t index, std::size_t dim) {
  Point c(dim);
  for (std::size_t i = 0; i < dim; ++i) c[i] = 2.0 * radical_inverse(index, kHaltonBases[i]) - 1.0;
  const double n = norm(c);
  if (n > 1.0) {
    for (double& v : c) v /= n;
  }
  return c;
}

}  // namespace

FibreSet FibreSet::ball(std::size_t dim, double radius) {
  FibreSet s;
  s.kind_ = Kind::kBall;
  s.dim_ = dim;
  s.radius_ = radius;
  s.bound_ = radius;
  s.validate();
  return s;
}

FibreSet FibreSet::box(Point lo, Point hi) {
  FibreSet s;
  s.kind_ = Kind::kBox;
  s.dim_ = lo.size();
  if (hi.size() != lo.size()) throw InvalidArgument("box bounds have different dimensions");
  double sq = 0.0;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    const double m = std::max(std::abs(lo[i]), std::abs(hi[i]));
    sq += m * m;
  }
  s.lo_ = std::move(lo);
  s.hi_ = std::move(hi);
  s.bound_ = std::sqrt(sq);
  s.validate();
  return s;
}

FibreSet FibreSet::ball_union(std::vector<Ball> balls) {
  FibreSet s;
  s.kind_ = Kind::kBallUnion;
  if (balls.empty()) throw InvalidArgument("ball union needs at least one ball");
  s.dim_ = balls.front().center.size();
  double bound = 0.0;
  for (const auto& b : balls) {
    if (b.center.size() != s.dim_) throw InvalidArgument("balls have different dimensions");
    bound = std::max(bound, norm(b.center) + b.radius);
  }
  s.balls_ = std::move(balls);
  s.bound_ = bound;
  s.validate();
  return s;
}

void FibreSet::validate() const {
  if (dim_ == 0) throw InvalidArgument("fibre set dimension must be at least 1");
  switch (kind_) {
    case Kind::kBall:
      if (!(radius_ >= 0.0) || !std::isfinite(radius_)) {
        throw InvalidArgument("ball radius must be finite and nonnegative");
      }
      break;
    case Kind::kBox:
      for (std::size_t i = 0; i < dim_; ++i) {
        if (!std::isfinite(lo_[i]) || !std::isfinite(hi_[i]) || lo_[i] > hi_[i]) {
          throw InvalidArgument("box bounds must be finite with lo <= hi");
        }
      }
      break;
    case Kind::kBallUnion:
      for (const auto& b : balls_) {
        if (!(b.radius >= 0.0) || !std::isfinite(b.radius)) {
          throw InvalidArgument("ball radius must be finite and nonnegative");
        }
        for (double c : b.center) {
          if (!std::isfinite(c)) throw InvalidArgument("ball centre must be finite");
        }
      }
      break;
  }
  if (!contains(Point(dim_, 0.0))) throw InvalidArgument("fibre set must contain theta");
}

bool FibreSet::contains(std::span<const double> u) const {
  if (u.size() != dim_) return false;
  const double slack = 1e-12 * (1.0 + bound_);
  switch (kind_) {
    case Kind::kBall:
      return norm(u) <= radius_ + slack;
    case Kind::kBox:
      for (std::size_t i = 0; i < dim_; ++i) {
        if (u[i] < lo_[i] - slack || u[i] > hi_[i] + slack) return false;
      }
      return true;
    case Kind::kBallUnion:
      return std::ranges::any_of(
          balls_, [&](const Ball& b) { return distance(u, b.center) <= b.radius + slack; });
  }
  return false;
}

Point FibreSet::sample(Rng& rng) const {
  switch (kind_) {
    case Kind::kBall:
      return sample_ball(Point(dim_, 0.0), radius_, rng);
    case Kind::kBox: {
      Point p(dim_);
      for (std::size_t i = 0; i < dim_; ++i) p[i] = rng.uniform(lo_[i], hi_[i]);
      return p;
    }
    case Kind::kBallUnion: {
      const Ball& b = balls_[rng.index(balls_.size())];
      return sample_ball(b.center, b.radius, rng);
    }
  }
  return Point(dim_, 0.0);
}

std::vector<Point> FibreSet::probe_points(std::size_t halton_count) const {
  std::vector<Point> out;
  out.emplace_back(dim_, 0.0);
  auto add_axis_extremes = [&](const Point& center, double radius) {
    for (std::size_t i = 0; i < dim_; ++i) {
      for (double sign : {-1.0, 1.0}) {
        Point p = center;
        p[i] += sign * radius;
        out.push_back(std::move(p));
      }
    }
  };
  switch (kind_) {
    case Kind::kBall:
      add_axis_extremes(Point(dim_, 0.0), radius_);
      for (std::size_t j = 1; j <= halton_count; ++j) {
        Point p = halton_ball_point(j, dim_);
        for (double& v : p) v *= radius_;
        out.push_back(std::move(p));
      }
      break;
    case Kind::kBox: {
      const std::size_t corners = std::size_t{1} << dim_;
      for (std::size_t mask = 0; mask < corners; ++mask) {
        Point p(dim_);
        for (std::size_t i = 0; i < dim_; ++i) p[i] = (mask >> i & 1U) ? hi_[i] : lo_[i];
        out.push_back(std::move(p));
      }
      for (std::size_t j = 1; j <= halton_count; ++j) {
        Point p(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
          p[i] = lo_[i] + (hi_[i] - lo_[i]) * radical_inverse(j, kHaltonBases[i]);
        }
        out.push_back(std::move(p));
      }
      break;
    }
    case Kind::kBallUnion:
      for (const auto& b : balls_) {
        out.push_back(b.center);
        add_axis_extremes(b.center, b.radius);
      }
      for (std::size_t j = 1; j <= halton_count; ++j) {
        const Ball& b = balls_[j % balls_.size()];
        Point p = halton_ball_point(j, dim_);
        for (std::size_t i = 0; i < dim_; ++i) p[i] = b.center[i] + b.radius * p[i];
        out.push_back(std::move(p));
      }
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Domain

Domain::Domain(SpacePtr space, std::size_t dim, double radius_bound, std::vector<FibreSet> fibres)
    : space_(std::move(space)), dim_(dim), radius_bound_(radius_bound), fibres_(std::move(fibres)) {
  if (!space_) throw InvalidArgument("domain without a probability space");
  if (!(radius_bound_ > 0.0) || !std::isfinite(radius_bound_)) {
    throw InvalidArgument("domain radius bound must be positive and finite");
  }
  if (fibres_.size() != space_->size()) throw InvalidArgument("one fibre set per atom required");
  for (std::size_t k = 0; k < fibres_.size(); ++k) {
    if (fibres_[k].dim() != dim_) {
      throw InvalidArgument("fibre set of atom " + std::to_string(k) + " has wrong dimension");
    }
    if (fibres_[k].bound() > radius_bound_ * (1.0 + 1e-12)) {
      throw InvalidArgument("fibre set of atom " + std::to_string(k) +
                            " is not bounded by the domain radius");
    }
  }
}

Domain Domain::uniform(SpacePtr space, double radius_bound, const FibreSet& fibre) {
  const std::size_t n = space->size();
  return Domain(std::move(space), fibre.dim(), radius_bound, std::vector<FibreSet>(n, fibre));
}

std::optional<std::size_t> Domain::escape_atom(const Section& x) const {
  require_same_space(space_, x.space());
  if (x.dim() != dim_) throw InvalidArgument("section dimension does not match the domain");
  for (std::size_t k = 0; k < fibres_.size(); ++k) {
    if (space_->positive(k) && !fibres_[k].contains(x.point(k))) return k;
  }
  return std::nullopt;
}

Section Domain::sample(Rng& rng) const {
  Section out = Section::zero(space_, dim_);
  for (std::size_t k = 0; k < fibres_.size(); ++k) {
    Point p = fibres_[k].sample(rng);
    if (space_->positive(k)) std::ranges::copy(p, out.point(k).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Norm, gluing, topology

L0Scalar rnorm(const Section& x) {
  std::vector<double> out(x.atoms());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = norm(x.point(k));
  return L0Scalar(x.space(), std::move(out));
}

Section glue(const Partition& partition, std::span<const Section> sections) {
  if (sections.size() != partition.size()) {
    throw InvalidArgument("glue needs one section per block: " + std::to_string(partition.size()) +
                          " blocks, " + std::to_string(sections.size()) + " sections");
  }
  if (sections.empty()) throw InvalidArgument("glue of an empty partition");
  const std::size_t dim = sections.front().dim();
  for (const auto& s : sections) {
    require_same_space(partition.space(), s.space());
    if (s.dim() != dim) throw InvalidArgument("glued sections have different dimensions");
  }
  Section out = Section::zero(partition.space(), dim);
  for (std::size_t b = 0; b < partition.size(); ++b) {
    for (std::size_t atom : partition.blocks()[b].members()) {
      std::ranges::copy(sections[b].point(atom), out.point(atom).begin());
    }
  }
  return out;
}

Section indicator_mul(const Event& a, const Section& x) {
  require_same_space(a.space(), x.space());
  Section out = Section::zero(x.space(), x.dim());
  for (std::size_t atom : a.members()) std::ranges::copy(x.point(atom), out.point(atom).begin());
  return out;
}

L0Scalar glue(const Partition& partition, std::span<const L0Scalar> scalars) {
  if (scalars.size() != partition.size()) {
    throw InvalidArgument("glue needs one scalar per block");
  }
  std::vector<double> out(partition.space()->size(), 0.0);
  for (std::size_t b = 0; b < partition.size(); ++b) {
    require_same_space(partition.space(), scalars[b].space());
    for (std::size_t atom : partition.blocks()[b].members()) out[atom] = scalars[b][atom];
  }
  return L0Scalar(partition.space(), std::move(out));
}

namespace {

void check_topology_parameters(double eps, double lambda) {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (!(lambda > 0.0 && lambda < 1.0)) throw InvalidArgument("lambda must lie in (0, 1)");
}

}  // namespace

bool eps_lambda_small(const L0Scalar& distance, double eps, double lambda) {
  check_topology_parameters(eps, lambda);
  return prob_event(below(distance, eps)) >= 1.0 - lambda;
}

bool eps_lambda_near(const Section& x, const Section& y, double eps, double lambda) {
  return eps_lambda_small(rnorm(x - y), eps, lambda);
}

std::optional<std::size_t> prefix_certificate(std::span<const L0Scalar> distances, double eps,
                                              double lambda) {
  check_topology_parameters(eps, lambda);
  if (distances.empty()) throw InvalidArgument("certificate of an empty sequence");
  std::size_t n = distances.size();
  while (n > 0 && eps_lambda_small(distances[n - 1], eps, lambda)) --n;
  if (n == distances.size()) return std::nullopt;
  return n;
}

std::optional<std::size_t> converges_in_prob(std::span<const Section> seq, const Section& limit,
                                             double eps, double lambda) {
  std::vector<L0Scalar> distances;
  distances.reserve(seq.size());
  for (const auto& x : seq) distances.push_back(rnorm(x - limit));
  return prefix_certificate(distances, eps, lambda);
}

// ---------------------------------------------------------------------------
// Module axioms

std::string to_string(Axiom axiom) {
  switch (axiom) {
    case Axiom::kZeroIffTheta:
      return "norm-zero-iff-theta";
    case Axiom::kHomogeneity:
      return "homogeneity";
    case Axiom::kTriangle:
      return "triangle";
  }
  return "unknown";
}

std::vector<AxiomViolation> check_module_axioms(std::span<const Section> samples,
                                                std::span<const L0Scalar> scalars,
                                                const NormFn& norm_fn, double tol) {
  if (samples.empty()) throw InvalidArgument("axiom check needs at least one sample");
  std::vector<AxiomViolation> out;
  const auto& space = samples.front().space();
  auto fails = [tol](double lhs, double rhs) { return lhs > rhs + tol * std::max(1.0, std::abs(rhs)); };

  auto check_zero = [&](const Section& x, std::size_t index) {
    const L0Scalar n = norm_fn(x);
    for (std::size_t k = 0; k < x.atoms(); ++k) {
      if (!space->positive(k)) continue;
      const bool is_theta = std::ranges::all_of(x.point(k), [](double v) { return v == 0.0; });
      const bool zero_norm = std::abs(n[k]) <= tol;
      if (is_theta != zero_norm || n[k] < -tol) {
        out.push_back({Axiom::kZeroIffTheta, index, k, n[k], 0.0});
      }
    }
  };

  check_zero(Section::zero(space, samples.front().dim()), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Section& x = samples[i];
    check_zero(x, i);
    const L0Scalar nx = norm_fn(x);

    if (!scalars.empty()) {
      const L0Scalar& xi = scalars[i % scalars.size()];
      const L0Scalar lhs = norm_fn(x.scaled(xi));
      const L0Scalar rhs = xi.abs() * nx;
      for (std::size_t k = 0; k < x.atoms(); ++k) {
        if (space->positive(k) && (fails(lhs[k], rhs[k]) || fails(rhs[k], lhs[k]))) {
          out.push_back({Axiom::kHomogeneity, i, k, lhs[k], rhs[k]});
        }
      }
    }

    const Section& y = samples[(i + 1) % samples.size()];
    const L0Scalar lhs = norm_fn(x + y);
    const L0Scalar rhs = nx + norm_fn(y);
    for (std::size_t k = 0; k < x.atoms(); ++k) {
      if (space->positive(k) && fails(lhs[k], rhs[k])) {
        out.push_back({Axiom::kTriangle, i, k, lhs[k], rhs[k]});
      }
    }
  }
  return out;
}

}  // namespace fibrefix

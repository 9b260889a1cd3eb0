#include "fibrefix/detfix.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "fibrefix/error.hpp"

namespace fibrefix {

FibreMap::FibreMap(std::string family, FibreSet set, Eval evaluate)
    : family_(std::move(family)), set_(std::move(set)), evaluate_(std::move(evaluate)) {
  if (!evaluate_) throw InvalidArgument("fibre map without an evaluation function");
}

FibreMap& FibreMap::with_bounds(BoundFamily phi_n, LimitBound phi) {
  phi_n_ = std::move(phi_n);
  phi_ = std::move(phi);
  return *this;
}

FibreMap& FibreMap::with_continuity(bool continuous) {
  continuous_ = continuous;
  return *this;
}

FibreMap& FibreMap::with_hints(std::vector<Point> hints) {
  hints_ = std::move(hints);
  return *this;
}

FibreMap& FibreMap::with_atom(std::size_t atom) {
  atom_ = atom;
  return *this;
}

Point FibreMap::operator()(std::span<const double> u) const {
  Point out(u.size());
  evaluate_(u, out);
  return out;
}

void FibreMap::checked(std::span<const double> u, std::span<double> out) const {
  if (!set_.contains(u)) throw DomainEscape(atom_, family_ + ": argument outside the fibre set");
  evaluate_(u, out);
  for (double v : out) {
    if (!std::isfinite(v)) throw DomainEscape(atom_, family_ + ": non-finite image");
  }
  if (!set_.contains(out)) throw DomainEscape(atom_, family_ + ": image leaves the fibre set");
}

Point FibreMap::checked(std::span<const double> u) const {
  Point out(u.size());
  checked(u, out);
  return out;
}

Point FibreMap::iterate(std::span<const double> u, std::size_t n) const {
  Point x(u.begin(), u.end());
  Point next(x.size());
  for (std::size_t i = 0; i < n; ++i) {
    checked(x, next);
    std::swap(x, next);
  }
  return x;
}

double five_term_max(const FibreMap& map, std::span<const double> u, std::span<const double> v) {
  const Point tu = map.checked(u);
  const Point tv = map.checked(v);
  return std::max({distance(u, v), distance(tu, u), distance(tv, v), distance(tu, v),
                   distance(tv, u)});
}

// ---------------------------------------------------------------------------

std::vector<double> tail_diameters(std::span<const Point> points) {
  std::vector<double> b(points.size(), 0.0);
  if (points.empty()) return b;
  for (std::size_t k = points.size() - 1; k-- > 0;) {
    double m = b[k + 1];
    for (std::size_t j = k + 1; j < points.size(); ++j) m = std::max(m, distance(points[k], points[j]));
    b[k] = m;
  }
  return b;
}

OrbitTrace orbit(const FibreMap& map, std::span<const double> x0, const OrbitOptions& options) {
  if (!map.set().contains(x0)) throw DomainEscape(map.atom(), "orbit start outside the fibre set");
  OrbitTrace trace;
  trace.start.assign(x0.begin(), x0.end());

  std::deque<Point> window;
  window.push_back(trace.start);
  auto record = [&](const Point& p) {
    window.push_back(p);
    if (!options.full_storage && window.size() > options.window) {
      window.pop_front();
      ++trace.offset;
    }
  };

  Point x = trace.start;
  Point next(x.size());
  std::size_t small = 0;
  trace.steps.reserve(options.n_max);
  for (std::size_t n = 0; n < options.n_max; ++n) {
    map.checked(x, next);
    const double step = distance(next, x);
    trace.steps.push_back(step);
    record(next);
    if (options.stop_tol > 0.0 && small >= options.consecutive && step <= options.stop_tol) {
      trace.stopped = true;
      break;
    }
    small = step < options.stop_tol ? small + 1 : 0;
    std::swap(x, next);
  }
  trace.points.assign(window.begin(), window.end());
  trace.tail_diameters = tail_diameters(trace.points);
  return trace;
}

TailLedger verify_tail_inequality(const OrbitTrace& trace, const PsiFunction& psi, double eps,
                                  std::size_t horizon) {
  if (!(eps > 0.0)) throw InvalidArgument("tail inequality needs eps > 0");
  if (trace.tail_diameters.size() <= horizon) {
    throw InvalidArgument("trace of " + std::to_string(trace.tail_diameters.size()) +
                          " points is too short for horizon N = " + std::to_string(horizon));
  }
  TailLedger ledger;
  ledger.horizon = horizon;
  ledger.eps = eps;
  const std::size_t count = trace.tail_diameters.size() - horizon;
  ledger.rows.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double b_n = trace.tail_diameters[k];
    const double b_later = trace.tail_diameters[k + horizon];
    const double rhs = psi(b_n) + eps;
    const TailRow row{trace.offset + k, b_later, rhs, rhs - b_later};
    ledger.worst_slack = std::min(ledger.worst_slack, row.slack);
    if (row.slack < -1e-9) ledger.violations.push_back(row);
    ledger.rows.push_back(row);
  }
  return ledger;
}

// ---------------------------------------------------------------------------

FibreSolution solve_fibre(const FibreMap& map, std::span<const double> x0,
                          const SolveFibreOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("solver tolerance must be positive");
  if (!map.set().contains(x0)) throw DomainEscape(map.atom(), "start point outside the fibre set");

  FibreSolution sol;
  sol.trace.start.assign(x0.begin(), x0.end());
  std::deque<Point> window;
  if (options.keep_trace) window.push_back(sol.trace.start);

  Point x = sol.trace.start;
  Point next(x.size());
  std::size_t small = 0;
  for (std::size_t k = 0; k < options.max_iter; ++k) {
    map.checked(x, next);
    const double step = distance(next, x);
    sol.trace.steps.push_back(step);
    if (small >= options.consecutive && step <= options.tol) {
      sol.z = x;
      sol.iterations = k;
      sol.residual = step;
      sol.converged = true;
      sol.trace.stopped = true;
      break;
    }
    small = step < options.tol ? small + 1 : 0;
    std::swap(x, next);
    if (options.keep_trace) {
      window.push_back(x);
      if (window.size() > OrbitOptions{}.window) {
        window.pop_front();
        ++sol.trace.offset;
      }
    }
  }
  if (!sol.converged) {
    sol.z = x;
    sol.iterations = options.max_iter;
    sol.residual = distance(map.checked(x), x);
  }
  if (options.keep_trace) {
    sol.trace.points.assign(window.begin(), window.end());
    sol.trace.tail_diameters = tail_diameters(sol.trace.points);
  }
  return sol;
}

// ---------------------------------------------------------------------------

UniformityResult locate_uniformity_N(const BoundFamily& phi_n, const LimitBound& phi,
                                     std::span<const Point> region, double eps, std::size_t cap) {
  if (!phi_n || !phi) throw InvalidArgument("uniformity search needs phi_n and phi");
  if (region.empty()) throw InvalidArgument("uniformity search needs a nonempty region sample");
  if (!(eps > 0.0)) throw InvalidArgument("uniformity search needs eps > 0");

  UniformityResult result;
  auto sup_at = [&](std::size_t n) {
    double s = 0.0;
    for (const auto& u : region) {
      for (const auto& v : region) s = std::max(s, std::abs(phi_n(n, u, v) - phi(u, v)));
    }
    ++result.probes;
    return s;
  };

  double s = sup_at(1);
  if (s < eps) {
    result.horizon = 1;
    result.sup = s;
    return result;
  }
  std::size_t lo = 1;
  std::size_t hi = 2;
  while (true) {
    if (hi > cap) {
      result.sup = s;
      return result;
    }
    s = sup_at(hi);
    if (s < eps) break;
    lo = hi;
    hi *= 2;
  }
  double s_hi = s;
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const double s_mid = sup_at(mid);
    if (s_mid < eps) {
      hi = mid;
      s_hi = s_mid;
    } else {
      lo = mid;
    }
  }
  result.horizon = hi;
  result.sup = s_hi;
  return result;
}

}  // namespace fibrefix

#include "fibrefix/psi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fibrefix/error.hpp"

namespace fibrefix {

PsiFunction PsiFunction::linear(double alpha) {
  if (!std::isfinite(alpha) || alpha < 0.0) throw InvalidArgument("linear psi needs alpha >= 0");
  PsiFunction p;
  p.kind_ = Kind::kLinear;
  p.parameter_ = alpha;
  return p;
}

PsiFunction PsiFunction::rational(double beta) {
  if (!std::isfinite(beta) || !(beta > 0.0)) throw InvalidArgument("rational psi needs beta > 0");
  PsiFunction p;
  p.kind_ = Kind::kRational;
  p.parameter_ = beta;
  return p;
}

PsiFunction PsiFunction::shifted() {
  PsiFunction p;
  p.kind_ = Kind::kShifted;
  return p;
}

PsiFunction PsiFunction::table(std::vector<Breakpoint> breakpoints, Jump jump) {
  if (breakpoints.empty() || breakpoints.front().t != 0.0 || breakpoints.front().value != 0.0) {
    throw InvalidArgument("psi table must start at (0, 0)");
  }
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    const auto& b = breakpoints[i];
    if (!std::isfinite(b.t) || !std::isfinite(b.value) || b.value < 0.0) {
      throw InvalidArgument("psi table entries must be finite with nonnegative values");
    }
    if (i > 0 && b.t < breakpoints[i - 1].t) {
      throw InvalidArgument("psi table breakpoints must be sorted by t");
    }
    if (i > 1 && b.t == breakpoints[i - 2].t) {
      throw InvalidArgument("psi table repeats a breakpoint more than twice");
    }
  }
  if (breakpoints.size() > 1 && breakpoints[1].t == 0.0) {
    throw InvalidArgument("psi table cannot jump at 0");
  }
  PsiFunction p;
  p.kind_ = Kind::kTable;
  p.breakpoints_ = std::move(breakpoints);
  p.jump_ = jump;
  return p;
}

PsiFunction PsiFunction::min_of(std::vector<PsiFunction> parts) {
  if (parts.empty()) throw InvalidArgument("min of an empty psi family");
  PsiFunction p;
  p.kind_ = Kind::kMin;
  p.parts_ = std::make_shared<const std::vector<PsiFunction>>(std::move(parts));
  return p;
}

PsiFunction PsiFunction::compose(PsiFunction outer, PsiFunction inner) {
  PsiFunction p;
  p.kind_ = Kind::kCompose;
  p.parts_ = std::make_shared<const std::vector<PsiFunction>>(
      std::vector<PsiFunction>{std::move(outer), std::move(inner)});
  return p;
}

double PsiFunction::operator()(double t) const {
  if (!(t >= 0.0)) throw InvalidArgument("psi is defined on [0, inf)");
  return eval(t);
}

double PsiFunction::eval(double t) const {
  switch (kind_) {
    case Kind::kLinear:
      return parameter_ * t;
    case Kind::kRational:
      return std::isinf(t) ? 1.0 / parameter_ : t / (1.0 + parameter_ * t);
    case Kind::kShifted:
      return std::isinf(t) ? 1.0 : t - t * t / (1.0 + t);
    case Kind::kTable:
      return eval_table(t);
    case Kind::kMin: {
      double m = std::numeric_limits<double>::infinity();
      for (const auto& part : *parts_) m = std::min(m, part.eval(t));
      return m;
    }
    case Kind::kCompose:
      return (*parts_)[0].eval((*parts_)[1].eval(t));
  }
  return 0.0;
}

double PsiFunction::eval_table(double t) const {
  const auto& bp = breakpoints_;
  const auto by_t = [](const Breakpoint& b, double x) { return b.t < x; };
  const auto t_by = [](double x, const Breakpoint& b) { return x < b.t; };
  if (jump_ == Jump::kLeftContinuous) {
    // First breakpoint with b.t >= t; at a repeated t this is the left value.
    auto it = std::lower_bound(bp.begin(), bp.end(), t, by_t);
    if (it == bp.end()) return bp.back().value;
    if (it->t == t || it == bp.begin()) return it->value;
    const auto& left = *std::prev(it);
    const double w = (t - left.t) / (it->t - left.t);
    return left.value + w * (it->value - left.value);
  }
  // First breakpoint with b.t > t; its predecessor is the last one <= t,
  // which at a repeated t is the right value.
  auto it = std::upper_bound(bp.begin(), bp.end(), t, t_by);
  if (it == bp.end()) return bp.back().value;
  const auto& left = *std::prev(it);
  if (left.t == t) return left.value;
  const double w = (t - left.t) / (it->t - left.t);
  return left.value + w * (it->value - left.value);
}

std::vector<double> PsiFunction::kinks() const {
  std::vector<double> out;
  for (const auto& b : breakpoints_) out.push_back(b.t);
  for (const auto& part : *parts_) {
    auto k = part.kinks();
    out.insert(out.end(), k.begin(), k.end());
  }
  return out;
}

std::string PsiFunction::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::kLinear:
      os << "linear(alpha=" << parameter_ << ")";
      break;
    case Kind::kRational:
      os << "rational(beta=" << parameter_ << ")";
      break;
    case Kind::kShifted:
      os << "shifted";
      break;
    case Kind::kTable:
      os << "table(" << breakpoints_.size() << " breakpoints, "
         << (jump_ == Jump::kRightContinuous ? "right" : "left") << "-continuous)";
      break;
    case Kind::kMin:
    case Kind::kCompose: {
      os << (kind_ == Kind::kMin ? "min(" : "compose(");
      for (std::size_t i = 0; i < parts_->size(); ++i) {
        os << (i ? ", " : "") << (*parts_)[i].describe();
      }
      os << ")";
      break;
    }
  }
  return os.str();
}

bool PsiFunction::operator==(const PsiFunction& other) const {
  return kind_ == other.kind_ && parameter_ == other.parameter_ &&
         breakpoints_ == other.breakpoints_ && jump_ == other.jump_ && *parts_ == *other.parts_;
}

// ---------------------------------------------------------------------------

std::vector<double> make_grid(const PsiFunction& psi, const PsiGrid& plan) {
  if (!(plan.t_min > 0.0) || !(plan.t_max > plan.t_min) || plan.points < 2) {
    throw InvalidArgument("psi grid needs 0 < t_min < t_max and at least two points");
  }
  std::vector<double> grid;
  grid.reserve(plan.points + 8);
  const double log_lo = std::log(plan.t_min);
  const double step = (std::log(plan.t_max) - log_lo) / static_cast<double>(plan.points - 1);
  for (std::size_t i = 0; i < plan.points; ++i) {
    grid.push_back(std::exp(log_lo + step * static_cast<double>(i)));
  }
  grid.back() = plan.t_max;
  for (double k : psi.kinks()) {
    if (k > 0.0 && k <= plan.t_max) grid.push_back(k);
  }
  std::ranges::sort(grid);
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::string to_string(PsiViolation::Kind kind) {
  switch (kind) {
    case PsiViolation::Kind::kZero:
      return "psi(0) != 0";
    case PsiViolation::Kind::kRange:
      return "value not finite and nonnegative";
    case PsiViolation::Kind::kMonotone:
      return "not nondecreasing";
    case PsiViolation::Kind::kStrictGap:
      return "psi(t) >= t";
    case PsiViolation::Kind::kUpperSemicontinuity:
      return "not right upper semicontinuous";
  }
  return "unknown";
}

std::size_t PsiAudit::count(PsiViolation::Kind kind) const {
  return static_cast<std::size_t>(
      std::ranges::count_if(violations, [kind](const PsiViolation& v) { return v.kind == kind; }));
}

PsiAudit verify_boyd_wong(const PsiFunction& psi, const PsiGrid& plan) {
  using VK = PsiViolation::Kind;
  PsiAudit audit;
  const std::vector<double> grid = make_grid(psi, plan);
  audit.grid_size = grid.size();

  if (const double z = psi(0.0); z != 0.0) audit.violations.push_back({VK::kZero, 0.0, z, ""});

  audit.min_margin = std::numeric_limits<double>::infinity();
  audit.min_relative_margin = std::numeric_limits<double>::infinity();
  double previous = psi(0.0);
  for (const double t : grid) {
    const double v = psi(t);
    if (!std::isfinite(v) || v < 0.0) {
      audit.violations.push_back({VK::kRange, t, v, ""});
      continue;
    }
    if (previous > v + 1e-12) {
      audit.violations.push_back({VK::kMonotone, t, v, "previous grid value " + std::to_string(previous)});
    }
    previous = v;

    const double margin = t - v;
    if (margin < audit.min_margin) {
      audit.min_margin = margin;
      audit.argmin_margin = t;
    }
    audit.min_relative_margin = std::min(audit.min_relative_margin, margin / t);
    if (!(v < t)) audit.violations.push_back({VK::kStrictGap, t, v, "margin " + std::to_string(margin)});

    // Upper semicontinuity from the right. Tolerance: 1e-9 scaled by the
    // value, plus twice the variation over the same step on the left so a
    // steep but continuous psi is not flagged.
    std::vector<double> excess;
    double tol_last = 0.0;
    for (double h : kUscLadder) {
      excess.push_back(psi(t + h) - v);
      tol_last = 1e-9 * std::max(1.0, v) + 2.0 * std::abs(v - psi(std::max(0.0, t - h)));
    }
    const double smallest = excess.back();
    const double middle = excess[excess.size() - 2];
    if (smallest > tol_last && smallest >= 0.5 * middle) {
      audit.violations.push_back({VK::kUpperSemicontinuity, t, v,
                                  "psi(t+1e-6) - psi(t) = " + std::to_string(smallest)});
    }
  }
  return audit;
}

}  // namespace fibrefix

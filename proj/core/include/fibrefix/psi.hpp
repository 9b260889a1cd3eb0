#pragma once

// Comparison functions psi for nonlinear contractions and an executable
// audit of the Boyd-Wong properties: nondecreasing, psi(t) < t for t > 0,
// right upper semicontinuous.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fibrefix {

class PsiFunction {
 public:
  enum class Kind { kLinear, kRational, kShifted, kTable, kMin, kCompose };

  /// Value taken at a breakpoint listed twice (a jump). Problem files only
  /// admit right-continuous tables, which are upper semicontinuous from the
  /// right whenever they are nondecreasing.
  enum class Jump { kRightContinuous, kLeftContinuous };

  struct Breakpoint {
    double t;
    double value;
    bool operator==(const Breakpoint&) const = default;
  };

  /// alpha * t. Any alpha >= 0 is representable; alpha < 1 is what makes it
  /// a Boyd-Wong function.
  static PsiFunction linear(double alpha);
  /// t / (1 + beta t), beta > 0.
  static PsiFunction rational(double beta);
  /// t - t^2 / (1 + t).
  static PsiFunction shifted();
  /// Piecewise-linear interpolation of the breakpoints, constant after the
  /// last one. The first breakpoint must be (0, 0); t must be nondecreasing
  /// and a t may repeat once to encode a jump.
  static PsiFunction table(std::vector<Breakpoint> breakpoints,
                           Jump jump = Jump::kRightContinuous);
  /// Pointwise minimum.
  static PsiFunction min_of(std::vector<PsiFunction> parts);
  /// outer(inner(t)).
  static PsiFunction compose(PsiFunction outer, PsiFunction inner);

  /// Throws InvalidArgument for t < 0 or NaN.
  double operator()(double t) const;

  Kind kind() const noexcept { return kind_; }
  double parameter() const noexcept { return parameter_; }
  std::span<const Breakpoint> breakpoints() const noexcept { return breakpoints_; }
  Jump jump() const noexcept { return jump_; }
  std::span<const PsiFunction> parts() const noexcept { return *parts_; }

  /// Breakpoints of this function and all of its parts.
  std::vector<double> kinks() const;

  std::string describe() const;

  bool operator==(const PsiFunction& other) const;

 private:
  PsiFunction() = default;
  double eval(double t) const;
  double eval_table(double t) const;

  Kind kind_ = Kind::kLinear;
  double parameter_ = 0.0;
  std::vector<Breakpoint> breakpoints_;
  Jump jump_ = Jump::kRightContinuous;
  std::shared_ptr<const std::vector<PsiFunction>> parts_ =
      std::make_shared<const std::vector<PsiFunction>>();
};

inline double eval(const PsiFunction& psi, double t) { return psi(t); }

struct PsiGrid {
  double t_max = 1.0;
  std::size_t points = 512;
  double t_min = 1e-9;
};

/// 'points' log-spaced samples on [t_min, t_max] plus every kink of psi in
/// (0, t_max], sorted and deduplicated.
std::vector<double> make_grid(const PsiFunction& psi, const PsiGrid& plan);

struct PsiViolation {
  enum class Kind { kZero, kRange, kMonotone, kStrictGap, kUpperSemicontinuity };
  Kind kind;
  double t;
  double value;
  std::string detail;
};

std::string to_string(PsiViolation::Kind kind);

struct PsiAudit {
  std::vector<PsiViolation> violations;
  std::size_t grid_size = 0;
  /// min over the grid of t - psi(t), and of (t - psi(t)) / t.
  double min_margin = 0.0;
  double min_relative_margin = 0.0;
  double argmin_margin = 0.0;

  bool ok() const noexcept { return violations.empty(); }
  std::size_t count(PsiViolation::Kind kind) const;
};

/// Step ladder of the right upper semicontinuity probe.
inline constexpr double kUscLadder[] = {1e-2, 1e-4, 1e-6};

/// Audits psi on the grid. The semicontinuity probe is a falsifier: it flags
/// t when psi(t + h) - psi(t) stays above tolerance down the whole ladder
/// without decaying, which a finite sample can witness but never disprove.
PsiAudit verify_boyd_wong(const PsiFunction& psi, const PsiGrid& plan);

}  // namespace fibrefix

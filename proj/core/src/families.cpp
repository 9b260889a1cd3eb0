#include <algorithm>
#include <cmath>
#include <limits>

#include "fibrefix/error.hpp"
#include "fibrefix/problems.hpp"

namespace fibrefix {
namespace {

constexpr double kRealBound = 1e6;

double scalar(const Params& p, const std::string& name) { return p.at(name).front(); }

// Image of u under u -> alpha P u + b with P = [[1, 0], [s, 0]] (+) I.
void scaled_apply(double alpha, double s, std::span<const double> b, std::span<const double> u,
                  std::span<double> out) {
  const std::size_t d = u.size();
  const double u0 = u[0];
  out[0] = alpha * u0 + b[0];
  if (d > 1) out[1] = alpha * s * u0 + b[1];
  for (std::size_t i = 2; i < d; ++i) out[i] = alpha * u[i] + b[i];
}

FibreMap make_banach(const Params& p, const FibreSet& set) {
  const double alpha = scalar(p, "alpha");
  const Point b = p.at("offset");
  FibreMap map("banach_affine", set, [alpha, b](std::span<const double> u, std::span<double> out) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = alpha * u[i] + b[i];
  });
  map.with_bounds(
      [alpha](std::size_t n, std::span<const double> u, std::span<const double> v) {
        return std::pow(alpha, static_cast<double>(n)) * distance(u, v);
      },
      [](std::span<const double>, std::span<const double>) { return 0.0; });
  return map;
}

FibreMap make_rational(const Params& p, const FibreSet& set) {
  const double beta = scalar(p, "beta");
  FibreMap map("rational_radial", set, [beta](std::span<const double> u, std::span<double> out) {
    const double scale = 1.0 / (1.0 + beta * norm(u));
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] * scale;
  });
  // T^n u = u / (1 + n beta |u|) along each ray.
  map.with_bounds(
      [beta](std::size_t n, std::span<const double> u, std::span<const double> v) {
        const double nb = static_cast<double>(n) * beta;
        const double su = 1.0 / (1.0 + nb * norm(u));
        const double sv = 1.0 / (1.0 + nb * norm(v));
        double acc = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
          const double diff = u[i] * su - v[i] * sv;
          acc += diff * diff;
        }
        return std::sqrt(acc);
      },
      [](std::span<const double>, std::span<const double>) { return 0.0; });
  return map;
}

FibreMap make_scaled(const Params& p, const FibreSet& set) {
  const double c = scalar(p, "c");
  const double alpha = scalar(p, "alpha");
  const Point b = p.at("offset");
  if (c > 1.0 && set.dim() < 2) {
    throw SchemaError("asymptotic_scaled: c > 1 needs dim >= 2");
  }
  const double s = std::sqrt(c * c - 1.0);
  FibreMap map("asymptotic_scaled", set,
               [alpha, s, b](std::span<const double> u, std::span<double> out) {
                 scaled_apply(alpha, s, b, u, out);
               });
  map.with_bounds(
      [c, alpha](std::size_t n, std::span<const double> u, std::span<const double> v) {
        if (n == 0) return distance(u, v);
        return c * std::pow(alpha, static_cast<double>(n)) * distance(u, v);
      },
      [](std::span<const double>, std::span<const double>) { return 0.0; });
  return map;
}

FibreMap make_constant(const Params& p, const FibreSet& set) {
  const Point value = p.at("value");
  FibreMap map("constant_map", set, [value](std::span<const double>, std::span<double> out) {
    std::ranges::copy(value, out.begin());
  });
  map.with_bounds(
      [](std::size_t n, std::span<const double> u, std::span<const double> v) {
        return n == 0 ? distance(u, v) : 0.0;
      },
      [](std::span<const double>, std::span<const double>) { return 0.0; });
  return map;
}

FibreMap make_identity(const Params&, const FibreSet& set) {
  FibreMap map("identity_trap", set, [](std::span<const double> u, std::span<double> out) {
    std::ranges::copy(u, out.begin());
  });
  map.with_bounds([](std::size_t, std::span<const double> u,
                     std::span<const double> v) { return distance(u, v); },
                  [](std::span<const double> u, std::span<const double> v) {
                    return distance(u, v);
                  });
  return map;
}

FibreMap make_step(const Params& p, const FibreSet& set) {
  const double alpha = scalar(p, "alpha");
  const double threshold = scalar(p, "threshold");
  const double jump = scalar(p, "jump");
  FibreMap map("step_trap", set,
               [alpha, threshold, jump](std::span<const double> u, std::span<double> out) {
                 for (std::size_t i = 0; i < u.size(); ++i) out[i] = alpha * u[i];
                 if (u[0] >= threshold) out[0] += jump;
               });
  map.with_continuity(false);
  Point hint(set.dim(), 0.0);
  hint[0] = threshold;
  if (set.contains(hint)) map.with_hints({hint});
  return map;
}

ParamSchema real(std::string name, double lo, double hi, std::vector<double> fallback,
                 std::string doc, bool lo_open = false, bool hi_open = false) {
  ParamSchema s;
  s.name = std::move(name);
  s.lo = lo;
  s.hi = hi;
  s.lo_open = lo_open;
  s.hi_open = hi_open;
  s.fallback = std::move(fallback);
  s.doc = std::move(doc);
  return s;
}

ParamSchema vec(std::string name, std::string doc) {
  ParamSchema s = real(std::move(name), -kRealBound, kRealBound, {}, std::move(doc));
  s.size = ParamSchema::kVector;
  return s;
}

std::vector<MapFamily> make_registry() {
  std::vector<MapFamily> r;
  r.push_back({"banach_affine",
               "u -> alpha u + offset; phi_n = alpha^n d, phi = 0",
               {real("alpha", 0.0, 1.0, {}, "contraction factor", false, true),
                vec("offset", "translation, defaults to theta")},
               false, true, make_banach});
  r.push_back({"rational_radial",
               "u -> u / (1 + beta |u|); T^n u = u / (1 + n beta |u|), phi = 0",
               {real("beta", 0.0, kRealBound, {1.0}, "radial rate", true)},
               false, true, make_rational});
  r.push_back({"asymptotic_scaled",
               "u -> alpha P u + offset with P idempotent and |P| = c; phi_n = c alpha^n d",
               {real("c", 1.0, 1e3, {}, "operator norm of P"),
                real("alpha", 0.0, 1.0, {}, "decay factor", true, true),
                vec("offset", "translation, defaults to theta")},
               false, true, make_scaled});
  r.push_back({"constant_map",
               "u -> value; phi_n = 0 for n >= 1",
               {vec("value", "image point, defaults to theta")},
               false, true, make_constant});
  r.push_back({"identity_trap", "u -> u; every point is fixed", {}, true, true, make_identity});
  r.push_back({"step_trap",
               "u -> alpha u + jump e_0 [u_0 >= threshold]; discontinuous at the threshold",
               {real("alpha", 0.0, 1.0, {}, "linear part", false, true),
                real("threshold", -kRealBound, kRealBound, {}, "breakpoint along e_0"),
                real("jump", -kRealBound, kRealBound, {}, "jump size")},
               true, false, make_step});
  return r;
}

bool in_range(const ParamSchema& s, double v) {
  if (!std::isfinite(v)) return false;
  if (s.lo_open ? v <= s.lo : v < s.lo) return false;
  if (s.hi_open ? v >= s.hi : v > s.hi) return false;
  return true;
}

std::string range_text(const ParamSchema& s) {
  return std::string(s.lo_open ? "(" : "[") + std::to_string(s.lo) + ", " + std::to_string(s.hi) +
         (s.hi_open ? ")" : "]");
}

}  // namespace

const std::vector<MapFamily>& builtin_families() {
  static const std::vector<MapFamily> registry = make_registry();
  return registry;
}

const MapFamily& find_family(std::string_view name) {
  for (const auto& f : builtin_families()) {
    if (f.name == name) return f;
  }
  throw SchemaError("unknown map family '" + std::string(name) + "'");
}

Params complete_params(const MapFamily& family, const Params& params, std::size_t dim) {
  for (const auto& [name, _] : params) {
    const bool known = std::ranges::any_of(family.params, [&](const ParamSchema& s) { return s.name == name; });
    if (!known) throw SchemaError(family.name + ": unknown parameter '" + name + "'");
  }
  Params out;
  for (const auto& s : family.params) {
    const std::size_t size = s.size == ParamSchema::kVector ? dim : s.size;
    std::vector<double> value;
    if (auto it = params.find(s.name); it != params.end()) {
      value = it->second;
    } else if (s.size == ParamSchema::kVector) {
      value.assign(dim, 0.0);
    } else if (!s.fallback.empty()) {
      value = s.fallback;
    } else {
      throw SchemaError(family.name + ": missing parameter '" + s.name + "'");
    }
    if (value.size() != size) {
      throw SchemaError(family.name + "." + s.name + ": expected " + std::to_string(size) +
                        " value(s), got " + std::to_string(value.size()));
    }
    for (double v : value) {
      if (!in_range(s, v)) {
        throw SchemaError(family.name + "." + s.name + ": value " + std::to_string(v) +
                          " outside " + range_text(s));
      }
    }
    out[s.name] = std::move(value);
  }
  return out;
}

FibreMap build_fibre(const FibreDecl& decl, const FibreSet& set) {
  const MapFamily& family = find_family(decl.family);
  FibreMap map = family.build(complete_params(family, decl.params, set.dim()), set);
  map.with_continuity(family.continuous);
  return map;
}

std::optional<Point> analytic_fixed_point(const FibreDecl& decl, std::size_t dim) {
  const MapFamily& family = find_family(decl.family);
  const Params p = complete_params(family, decl.params, dim);
  if (decl.family == "banach_affine") {
    const double alpha = scalar(p, "alpha");
    Point z = p.at("offset");
    for (double& v : z) v /= 1.0 - alpha;
    return z;
  }
  if (decl.family == "asymptotic_scaled") {
    // (I - alpha P)^-1 = I + alpha / (1 - alpha) P for idempotent P.
    const double c = scalar(p, "c");
    const double alpha = scalar(p, "alpha");
    const Point& b = p.at("offset");
    Point pb(dim);
    scaled_apply(1.0, std::sqrt(c * c - 1.0), Point(dim, 0.0), b, pb);
    Point z(dim);
    for (std::size_t i = 0; i < dim; ++i) z[i] = b[i] + alpha / (1.0 - alpha) * pb[i];
    return z;
  }
  if (decl.family == "constant_map") return p.at("value");
  if (decl.family == "rational_radial") return Point(dim, 0.0);
  return std::nullopt;
}

}  // namespace fibrefix

#include "fibrefix/problems.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fibrefix/error.hpp"

namespace fibrefix {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw SchemaError(where + ": " + what);
}

void allow_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::ranges::find(keys, std::string_view(key)) == keys.end()) {
      fail(where, "unknown field '" + key + "'");
    }
  }
}

const json& require(const json& j, const std::string& where, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) fail(where, "missing field '" + key + "'");
  return *it;
}

double real(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "non-finite number");
  return v;
}

std::uint64_t count(const json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    fail(where, "expected a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

std::vector<double> reals(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(real(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

FibreSet parse_set(const json& j, const std::string& where, std::size_t dim, double radius) {
  if (!j.is_object()) fail(where, "expected an object");
  const json& k = require(j, where, "kind");
  if (!k.is_string()) fail(where + ".kind", "expected a string");
  const std::string kind = k.get<std::string>();
  try {
    if (kind == "ball") {
      allow_keys(j, where, {"kind", "radius"});
      const double r = j.contains("radius") ? real(j["radius"], where + ".radius") : radius;
      return FibreSet::ball(dim, r);
    }
    if (kind == "box") {
      allow_keys(j, where, {"kind", "lo", "hi"});
      Point lo = reals(require(j, where, "lo"), where + ".lo");
      Point hi = reals(require(j, where, "hi"), where + ".hi");
      if (lo.size() != dim || hi.size() != dim) fail(where, "box corners must have dim entries");
      return FibreSet::box(std::move(lo), std::move(hi));
    }
    if (kind == "balls") {
      allow_keys(j, where, {"kind", "balls"});
      const json& list = require(j, where, "balls");
      if (!list.is_array()) fail(where + ".balls", "expected an array");
      std::vector<FibreSet::Ball> balls;
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string w = where + ".balls[" + std::to_string(i) + "]";
        allow_keys(list[i], w, {"center", "radius"});
        Point c = reals(require(list[i], w, "center"), w + ".center");
        if (c.size() != dim) fail(w + ".center", "expected dim entries");
        balls.push_back({std::move(c), real(require(list[i], w, "radius"), w + ".radius")});
      }
      return FibreSet::ball_union(std::move(balls));
    }
  } catch (const InvalidArgument& e) {
    fail(where, e.what());
  }
  fail(where + ".kind", "unknown fibre set kind '" + kind + "'");
}

json render_set(const FibreSet& s) {
  switch (s.kind()) {
    case FibreSet::Kind::kBall:
      return {{"kind", "ball"}, {"radius", s.radius()}};
    case FibreSet::Kind::kBox:
      return {{"kind", "box"}, {"lo", s.lo()}, {"hi", s.hi()}};
    case FibreSet::Kind::kBallUnion: {
      json balls = json::array();
      for (const auto& b : s.balls()) balls.push_back({{"center", b.center}, {"radius", b.radius}});
      return {{"kind", "balls"}, {"balls", balls}};
    }
  }
  return {};
}

PsiFunction parse_psi(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const json& k = require(j, where, "kind");
  if (!k.is_string()) fail(where + ".kind", "expected a string");
  const std::string kind = k.get<std::string>();
  try {
    if (kind == "linear") {
      allow_keys(j, where, {"kind", "alpha"});
      return PsiFunction::linear(real(require(j, where, "alpha"), where + ".alpha"));
    }
    if (kind == "rational") {
      allow_keys(j, where, {"kind", "beta"});
      return PsiFunction::rational(real(require(j, where, "beta"), where + ".beta"));
    }
    if (kind == "shifted") {
      allow_keys(j, where, {"kind"});
      return PsiFunction::shifted();
    }
    if (kind == "table") {
      allow_keys(j, where, {"kind", "breakpoints"});
      const json& list = require(j, where, "breakpoints");
      if (!list.is_array()) fail(where + ".breakpoints", "expected an array of [t, value] pairs");
      std::vector<PsiFunction::Breakpoint> points;
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string w = where + ".breakpoints[" + std::to_string(i) + "]";
        const auto pair = reals(list[i], w);
        if (pair.size() != 2) fail(w, "expected [t, value]");
        points.push_back({pair[0], pair[1]});
      }
      return PsiFunction::table(std::move(points));
    }
    if (kind == "min") {
      allow_keys(j, where, {"kind", "of"});
      const json& list = require(j, where, "of");
      if (!list.is_array()) fail(where + ".of", "expected an array");
      std::vector<PsiFunction> parts;
      for (std::size_t i = 0; i < list.size(); ++i) {
        parts.push_back(parse_psi(list[i], where + ".of[" + std::to_string(i) + "]"));
      }
      return PsiFunction::min_of(std::move(parts));
    }
    if (kind == "compose") {
      allow_keys(j, where, {"kind", "outer", "inner"});
      return PsiFunction::compose(parse_psi(require(j, where, "outer"), where + ".outer"),
                                  parse_psi(require(j, where, "inner"), where + ".inner"));
    }
  } catch (const InvalidArgument& e) {
    fail(where, e.what());
  }
  fail(where + ".kind", "unknown psi kind '" + kind + "'");
}

json render_psi(const PsiFunction& psi) {
  switch (psi.kind()) {
    case PsiFunction::Kind::kLinear:
      return {{"kind", "linear"}, {"alpha", psi.parameter()}};
    case PsiFunction::Kind::kRational:
      return {{"kind", "rational"}, {"beta", psi.parameter()}};
    case PsiFunction::Kind::kShifted:
      return {{"kind", "shifted"}};
    case PsiFunction::Kind::kTable: {
      json list = json::array();
      for (const auto& b : psi.breakpoints()) list.push_back({b.t, b.value});
      return {{"kind", "table"}, {"breakpoints", list}};
    }
    case PsiFunction::Kind::kMin: {
      json list = json::array();
      for (const auto& p : psi.parts()) list.push_back(render_psi(p));
      return {{"kind", "min"}, {"of", list}};
    }
    case PsiFunction::Kind::kCompose:
      return {{"kind", "compose"}, {"outer", render_psi(psi.parts()[0])},
              {"inner", render_psi(psi.parts()[1])}};
  }
  return {};
}

FibreDecl parse_decl(const json& j, const std::string& where) {
  allow_keys(j, where, {"family", "params"});
  const json& name = require(j, where, "family");
  if (!name.is_string()) fail(where + ".family", "expected a string");
  FibreDecl decl{name.get<std::string>(), {}};
  if (j.contains("params")) {
    const json& params = j["params"];
    if (!params.is_object()) fail(where + ".params", "expected an object");
    for (const auto& [key, value] : params.items()) {
      const std::string w = where + ".params." + key;
      decl.params[key] = value.is_array() ? reals(value, w) : std::vector<double>{real(value, w)};
    }
  }
  return decl;
}

json render_decl(const FibreDecl& decl) {
  json params = json::object();
  const MapFamily* family = nullptr;
  for (const auto& f : builtin_families()) {
    if (f.name == decl.family) family = &f;
  }
  for (const auto& [key, value] : decl.params) {
    bool vector_param = value.size() != 1;
    if (family) {
      for (const auto& s : family->params) {
        if (s.name == key) vector_param = s.size != 1;
      }
    }
    params[key] = vector_param ? json(value) : json(value.front());
  }
  return {{"family", decl.family}, {"params", params}};
}

Problem parse(const json& root) {
  allow_keys(root, "problem", {"space", "domain", "psi", "fibres", "solver", "seed"});
  Problem prob;

  const json& space = require(root, "problem", "space");
  allow_keys(space, "space", {"weights"});
  prob.weights = reals(require(space, "space", "weights"), "space.weights");
  if (prob.weights.empty()) fail("space.weights", "at least one atom is required");
  const std::size_t atoms = prob.weights.size();

  const json& domain = require(root, "problem", "domain");
  allow_keys(domain, "domain", {"dim", "radius", "fibre_set"});
  prob.dim = count(require(domain, "domain", "dim"), "domain.dim");
  if (prob.dim == 0) fail("domain.dim", "must be at least 1");
  prob.radius = real(require(domain, "domain", "radius"), "domain.radius");
  if (!(prob.radius > 0.0)) fail("domain.radius", "must be positive");
  const json& sets = require(domain, "domain", "fibre_set");
  if (sets.is_array()) {
    if (sets.size() != atoms) fail("domain.fibre_set", "expected one entry per atom");
    for (std::size_t k = 0; k < atoms; ++k) {
      prob.sets.push_back(parse_set(sets[k], "domain.fibre_set[" + std::to_string(k) + "]", prob.dim, prob.radius));
    }
  } else {
    prob.sets.assign(atoms, parse_set(sets, "domain.fibre_set", prob.dim, prob.radius));
  }

  prob.psi = parse_psi(require(root, "problem", "psi"), "psi");

  const json& fibres = require(root, "problem", "fibres");
  if (fibres.is_array()) {
    if (fibres.size() != atoms) fail("fibres", "expected one entry per atom");
    for (std::size_t k = 0; k < atoms; ++k) {
      prob.fibres.push_back(parse_decl(fibres[k], "fibres[" + std::to_string(k) + "]"));
    }
  } else {
    prob.fibres.assign(atoms, parse_decl(fibres, "fibres"));
  }

  if (root.contains("solver")) {
    const json& s = root["solver"];
    allow_keys(s, "solver", {"tol", "max_iter", "eps", "lambda"});
    if (s.contains("tol")) prob.solver.tol = real(s["tol"], "solver.tol");
    if (s.contains("max_iter")) prob.solver.max_iter = count(s["max_iter"], "solver.max_iter");
    if (s.contains("eps")) prob.solver.eps = real(s["eps"], "solver.eps");
    if (s.contains("lambda")) prob.solver.lambda = real(s["lambda"], "solver.lambda");
  }
  if (root.contains("seed")) prob.seed = count(root["seed"], "seed");
  return prob;
}

template <typename T>
json collapse(const std::vector<T>& items, json (*render_one)(const T&)) {
  if (!items.empty() && std::ranges::all_of(items, [&](const T& x) { return x == items.front(); })) {
    return render_one(items.front());
  }
  json list = json::array();
  for (const auto& x : items) list.push_back(render_one(x));
  return list;
}

}  // namespace

void validate(const Problem& prob) {
  try {
    ProbSpace space(prob.weights);
  } catch (const InvalidArgument& e) {
    fail("space.weights", e.what());
  }
  const std::size_t atoms = prob.atoms();
  if (prob.sets.size() != atoms) fail("domain.fibre_set", "expected one entry per atom");
  if (prob.fibres.size() != atoms) fail("fibres", "expected one entry per atom");
  for (std::size_t k = 0; k < atoms; ++k) {
    if (prob.sets[k].dim() != prob.dim) {
      fail("domain.fibre_set[" + std::to_string(k) + "]", "dimension differs from domain.dim");
    }
    if (prob.sets[k].bound() > prob.radius * (1.0 + 1e-12)) {
      fail("domain.fibre_set[" + std::to_string(k) + "]", "set exceeds the radius bound");
    }
    const std::string where = "fibres[" + std::to_string(k) + "]";
    try {
      const MapFamily& family = find_family(prob.fibres[k].family);
      complete_params(family, prob.fibres[k].params, prob.dim);
      build_fibre(prob.fibres[k], prob.sets[k]);
    } catch (const Error& e) {
      fail(where, e.what());
    }
  }

  // psi must be a Boyd-Wong function on the range [0, 2M] that M(x, y) can take.
  const PsiAudit audit = verify_boyd_wong(prob.psi, {.t_max = 2.0 * prob.radius});
  if (!audit.ok()) {
    const auto& v = audit.violations.front();
    fail("psi", "not a Boyd-Wong function: " + to_string(v.kind) + " at t = " + std::to_string(v.t) +
                    (v.detail.empty() ? "" : " (" + v.detail + ")"));
  }

  const auto& s = prob.solver;
  if (!(s.tol > 0.0)) fail("solver.tol", "must be positive");
  if (s.max_iter == 0) fail("solver.max_iter", "must be at least 1");
  if (!(s.eps > 0.0)) fail("solver.eps", "must be positive");
  if (!(s.lambda > 0.0 && s.lambda < 1.0)) fail("solver.lambda", "must lie in (0, 1)");
}

void check_invariance(const Problem& prob, std::size_t samples) {
  Rng rng(prob.seed);
  for (std::size_t k = 0; k < prob.atoms(); ++k) {
    if (!(prob.weights[k] > 0.0)) continue;
    const FibreMap map = build_fibre(prob.fibres[k], prob.sets[k]).with_atom(k);
    std::vector<Point> points = prob.sets[k].probe_points(samples);
    for (std::size_t i = 0; i < samples; ++i) points.push_back(prob.sets[k].sample(rng));
    for (const auto& p : points) {
      try {
        map.checked(p);
      } catch (const DomainEscape& e) {
        fail("fibres[" + std::to_string(k) + "]", std::string("map leaves its fibre set (") + e.what() + ")");
      }
    }
  }
}

RandomMap build(const Problem& prob) {
  auto space = ProbSpace::make(prob.weights);
  Domain domain(space, prob.dim, prob.radius, prob.sets);
  std::vector<FibreMap> fibres;
  fibres.reserve(prob.atoms());
  for (std::size_t k = 0; k < prob.atoms(); ++k) fibres.push_back(build_fibre(prob.fibres[k], prob.sets[k]));
  return RandomMap(std::move(domain), std::move(fibres), prob.psi);
}

Problem load_text(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what());
  }
  Problem prob = parse(root);
  validate(prob);
  check_invariance(prob);
  return prob;
}

Problem load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open problem file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_text(buffer.str());
}

std::string render(const Problem& prob) {
  json root;
  root["space"] = {{"weights", prob.weights}};
  root["domain"] = {{"dim", prob.dim}, {"radius", prob.radius},
                    {"fibre_set", collapse<FibreSet>(prob.sets, +[](const FibreSet& s) { return render_set(s); })}};
  root["psi"] = render_psi(prob.psi);
  root["fibres"] = collapse<FibreDecl>(prob.fibres, +[](const FibreDecl& d) { return render_decl(d); });
  root["solver"] = {{"tol", prob.solver.tol},
                    {"max_iter", prob.solver.max_iter},
                    {"eps", prob.solver.eps},
                    {"lambda", prob.solver.lambda}};
  root["seed"] = prob.seed;
  return root.dump(2) + "\n";
}

Problem generate(std::uint64_t seed, const GenerateOptions& options) {
  if (options.atoms == 0 || options.atoms > kMaxGeneratedAtoms) {
    throw InvalidArgument("generate: atoms must lie in [1, " + std::to_string(kMaxGeneratedAtoms) + "]");
  }
  if (options.dim == 0 || options.dim > kMaxGeneratedDim) {
    throw InvalidArgument("generate: dim must lie in [1, " + std::to_string(kMaxGeneratedDim) + "]");
  }
  const std::size_t d = options.dim;
  Rng rng(seed);
  Problem prob;
  prob.dim = d;
  prob.seed = seed;

  std::vector<double> raw(options.atoms);
  for (double& w : raw) w = rng.uniform(0.5, 1.5);
  double total = 0.0;
  for (double w : raw) total += w;
  for (double& w : raw) w /= total;
  prob.weights = raw;

  // A point of norm at most r drawn uniformly in direction and radius.
  auto point_within = [&](double r) {
    Point p(d);
    for (double& v : p) v = rng.normal();
    const double n = norm(p);
    const double scale = n > 0.0 ? rng.uniform(0.0, r) / n : 0.0;
    for (double& v : p) v *= scale;
    return p;
  };
  auto round = [](double v) { return std::round(v * 1e6) / 1e6; };

  constexpr double kBallRadius = 2.0;
  double radius = kBallRadius;
  const std::size_t families = d >= 2 ? 3 : 2;
  for (std::size_t k = 0; k < options.atoms; ++k) {
    const std::size_t pick = rng.index(families);
    FibreDecl decl;
    if (pick == 0) {
      const double alpha = round(rng.uniform(0.1, 0.8));
      decl = {"banach_affine", {{"alpha", {alpha}}, {"offset", point_within(0.9 * (1.0 - alpha) * kBallRadius)}}};
      prob.sets.push_back(FibreSet::ball(d, kBallRadius));
    } else if (pick == 1) {
      decl = {"constant_map", {{"value", point_within(0.9 * kBallRadius)}}};
      prob.sets.push_back(FibreSet::ball(d, kBallRadius));
    } else {
      // Box r0 x r1 x 1 ... with |b0| <= 0.9 (1 - alpha) r0 and
      // r1 >= alpha s r0 + |b1| keeps alpha P u + b inside.
      const double c = round(rng.uniform(1.0, 2.0));
      const double alpha = round(rng.uniform(0.1, 0.8));
      const double s = std::sqrt(c * c - 1.0);
      Point b(d);
      for (double& v : b) v = round(rng.uniform(-0.9, 0.9) * (1.0 - alpha));
      b[1] = round(rng.uniform(-0.5, 0.5));
      Point hi(d, 1.0);
      hi[1] = (std::ceil((alpha * s + std::abs(b[1])) * 1e3) + 100.0) / 1e3;
      Point lo(d);
      for (std::size_t i = 0; i < d; ++i) lo[i] = -hi[i];
      decl = {"asymptotic_scaled", {{"c", {c}}, {"alpha", {alpha}}, {"offset", b}}};
      prob.sets.push_back(FibreSet::box(lo, hi));
      radius = std::max(radius, prob.sets.back().bound());
    }
    prob.fibres.push_back(std::move(decl));
  }
  prob.radius = radius;
  prob.psi = PsiFunction::linear(0.9);
  validate(prob);
  return prob;
}

std::vector<BoundAuditRow> audit_bounds(const RandomMap& f, std::size_t pairs, std::uint64_t seed,
                                        std::span<const std::size_t> ns) {
  std::vector<BoundAuditRow> violations;
  if (ns.empty()) return violations;
  const std::size_t depth = *std::ranges::max_element(ns);
  Rng rng(seed);
  for (std::size_t k = 0; k < f.atoms(); ++k) {
    const FibreMap& map = f.fibre(k);
    if (!f.space()->positive(k) || !map.has_bounds()) continue;
    for (std::size_t p = 0; p < pairs; ++p) {
      const Point u = map.set().sample(rng);
      const Point v = map.set().sample(rng);
      Point tu = u;
      Point tv = v;
      for (std::size_t n = 1; n <= depth; ++n) {
        tu = map.checked(tu);
        tv = map.checked(tv);
        if (std::ranges::find(ns, n) == ns.end()) continue;
        const double measured = distance(tu, tv);
        const double bound = map.phi_n()(n, u, v);
        if (measured > bound + 1e-9) violations.push_back({k, n, measured, bound});
      }
    }
  }
  return violations;
}

}  // namespace fibrefix

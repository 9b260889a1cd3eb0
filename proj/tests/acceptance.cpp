// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any
// criterion fails. Tolerances are pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "fibrefix/detfix.hpp"
#include "fibrefix/error.hpp"
#include "fibrefix/problems.hpp"
#include "fibrefix/randfix.hpp"
#include "generators.hpp"

namespace {

using namespace fibrefix;
namespace fs = std::filesystem;

constexpr double kAnalyticTol = 1e-9;
constexpr double kBanachSolveTol = 1e-12;
constexpr double kOrbitTol = 1e-12;
constexpr std::size_t kOrbitSteps = 1000;
constexpr double kTailEps = 1e-3;
constexpr std::size_t kTailSteps = 1000;
constexpr double kUniquenessTol = 1e-8;
constexpr std::size_t kUniquenessStarts = 10;
constexpr double kCertEps = 1e-3;
constexpr double kCertLambda = 0.01;
constexpr std::size_t kAxiomTriples = 1000;
constexpr double kAxiomTol = 1e-12;
constexpr std::size_t kPhiTuples = 256;
constexpr std::size_t kPhiMaxN = 16;
constexpr double kPhiTol = 1e-12;
constexpr std::size_t kSuiteSize = 20;

const fs::path kProblems = fs::path(FIBREFIX_TEST_DATA) / "problems";

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

// Seeded suite shared by criteria 3 to 6 and 9.
std::vector<Problem> generated_suite() {
  std::vector<Problem> suite;
  for (std::uint64_t seed = 1; seed <= kSuiteSize; ++seed) {
    suite.push_back(generate(seed, {.atoms = 2 + seed % 7, .dim = 1 + seed % 3}));
  }
  return suite;
}

double ess_sup_distance(const Section& a, const Section& b) {
  const L0Scalar d = rnorm(a - b);
  double worst = 0.0;
  for (std::size_t k : a.space()->support()) worst = std::max(worst, d.at(k));
  return worst;
}

// 1. Banach fibres: z(omega) = b / (1 - alpha).
Outcome analytic_fixed_points() {
  Rng rng(1001);
  double worst = 0.0;
  for (std::size_t p = 0; p < kSuiteSize; ++p) {
    Problem prob;
    const std::size_t k = 1 + rng.index(8);
    const std::size_t d = 1 + rng.index(3);
    prob.weights.assign(k, 1.0 / static_cast<double>(k));
    prob.dim = d;
    prob.radius = 2.0;
    prob.sets.assign(k, FibreSet::ball(d, 2.0));
    prob.psi = PsiFunction::linear(0.95);
    prob.solver.tol = kBanachSolveTol;
    for (std::size_t a = 0; a < k; ++a) {
      const double alpha = rng.uniform(0.1, 0.9);
      Point b = testing::random_point(rng, d, 1.0);
      const double scale = rng.uniform(0.0, 0.9) * (1 - alpha) * 2.0 / std::max(norm(b), 1e-300);
      for (double& v : b) v *= scale;
      prob.fibres.push_back({"banach_affine", {{"alpha", {alpha}}, {"offset", b}}});
    }
    validate(prob);
    const RandomMap f = build(prob);
    const auto report = solve(f, f.domain().sample(rng), {.tol = kBanachSolveTol, .seed = p});
    if (report.status != SolveStatus::kConverged) {
      return {false, "problem " + std::to_string(p) + " status " + to_string(report.status)};
    }
    for (std::size_t a = 0; a < k; ++a) {
      const Point z = *analytic_fixed_point(prob.fibres[a], d);
      worst = std::max(worst, distance(report.z.point(a), z));
    }
  }
  return {worst <= kAnalyticTol, "20 problems, max deviation " + fmt(worst) + " (limit " + fmt(kAnalyticTol) + ")"};
}

// 2. rational_radial from x0 = 1: x_n = 1/(1+n); b_n against a brute-force sup.
Outcome closed_form_orbit() {
  const FibreMap map = build_fibre({"rational_radial", {}}, FibreSet::ball(1, 1.0));
  const OrbitTrace trace = orbit(map, Point{1.0}, {.n_max = kOrbitSteps, .full_storage = true});
  const auto& xs = trace.points;
  double worst_x = 0.0;
  for (std::size_t n = 0; n <= kOrbitSteps; ++n) worst_x = std::max(worst_x, std::abs(xs[n][0] - 1.0 / (1.0 + n)));

  // Oracle: enumerate every recorded pair, then take suffix maxima.
  std::vector<double> row(xs.size(), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i; j < xs.size(); ++j) row[i] = std::max(row[i], distance(xs[i], xs[j]));
  }
  for (std::size_t i = xs.size() - 1; i-- > 0;) row[i] = std::max(row[i], row[i + 1]);
  double worst_b = 0.0;
  double worst_closed = 0.0;
  const double last = 1.0 / (1.0 + static_cast<double>(kOrbitSteps));
  for (std::size_t n = 0; n <= kOrbitSteps; ++n) {
    worst_b = std::max(worst_b, std::abs(trace.b(n) - row[n]));
    worst_closed = std::max(worst_closed, std::abs(trace.b(n) - (1.0 / (1.0 + n) - last)));
  }
  const bool pass = worst_x <= kOrbitTol && worst_b <= kOrbitTol && worst_closed <= kOrbitTol;
  return {pass, "n <= 1000: max |x_n - 1/(1+n)| " + fmt(worst_x) + ", max |b_n - brute force| " + fmt(worst_b) +
                    ", max |b_n - (1/(1+n) - 1/1001)| " + fmt(worst_closed)};
}

// 3. b_{n+N} <= psi(b_n) + eps on every positive atom of the suite.
Outcome tail_inequality(const std::vector<Problem>& suite) {
  std::size_t rows = 0;
  std::size_t violations = 0;
  std::size_t max_horizon = 0;
  double worst_slack = INFINITY;
  for (std::size_t p = 0; p < suite.size(); ++p) {
    const RandomMap f = build(suite[p]);
    Rng rng(3000 + p);
    for (std::size_t a : f.space()->support()) {
      const FibreMap& map = f.fibre(a);
      if (!map.has_bounds()) return {false, "atom without declared bounds in the generated suite"};
      for (const Point& start : {map.set().probe_points(0).back(), map.set().sample(rng)}) {
        std::vector<Point> region = map.set().probe_points(16);
        region.push_back(start);
        const auto uniform = locate_uniformity_N(map.phi_n(), map.phi(), region, kTailEps);
        if (!uniform.horizon) return {false, "no horizon for problem " + std::to_string(p)};
        const std::size_t n_big = *uniform.horizon;
        max_horizon = std::max(max_horizon, n_big);
        const auto trace = orbit(map, start, {.n_max = n_big + kTailSteps, .full_storage = true});
        const auto ledger = verify_tail_inequality(trace, f.psi(), kTailEps, n_big);
        rows += ledger.rows.size();
        violations += ledger.violations.size();
        worst_slack = std::min(worst_slack, ledger.worst_slack);
      }
    }
  }
  return {violations == 0, std::to_string(rows) + " rows, " + std::to_string(violations) +
                               " violations, max N " + std::to_string(max_horizon) + ", worst slack " +
                               fmt(worst_slack)};
}

// 4. Ten seeded starts per problem agree within 10 tol.
Outcome uniqueness(const std::vector<Problem>& suite) {
  double worst = 0.0;
  std::size_t problems = 0;
  std::vector<Problem> all = suite;
  all.push_back(load_file(kProblems / "banach.json"));
  for (std::size_t p = 0; p < all.size(); ++p) {
    const RandomMap f = build(all[p]);
    const auto ledger = verify_hypotheses(f, {.seed = all[p].seed});
    Rng rng(4000 + p);
    std::vector<Section> zs;
    for (std::size_t s = 0; s < kUniquenessStarts; ++s) {
      const auto report =
          solve(f, f.domain().sample(rng), {.tol = kUniquenessTol, .uniqueness_starts = 0}, &ledger);
      if (report.status != SolveStatus::kConverged) {
        return {false, "problem " + std::to_string(p) + " start " + std::to_string(s) + ": " +
                           to_string(report.status)};
      }
      zs.push_back(report.z);
    }
    for (std::size_t i = 0; i < zs.size(); ++i) {
      for (std::size_t j = i + 1; j < zs.size(); ++j) worst = std::max(worst, ess_sup_distance(zs[i], zs[j]));
    }
    ++problems;
  }
  const double limit = 10 * kUniquenessTol;
  return {worst <= limit, std::to_string(problems) + " problems x 10 starts, max pairwise deviation " + fmt(worst) +
                              " (limit " + fmt(limit) + ")"};
}

// 5. Finite n* and (eps, lambda)-nearness for every recorded n >= n*.
Outcome certificate(const std::vector<Problem>& suite) {
  std::vector<Problem> all = suite;
  for (const char* name : {"banach", "rational_radial", "table_psi"}) {
    all.push_back(load_file(kProblems / (std::string(name) + ".json")));
  }
  std::size_t checked = 0;
  std::size_t max_n_star = 0;
  for (std::size_t p = 0; p < all.size(); ++p) {
    const RandomMap f = build(all[p]);
    Rng rng(5000 + p);
    const Section x0 = f.domain().sample(rng);
    const auto report = solve(f, x0, {.tol = all[p].solver.tol, .eps = kCertEps, .lambda = kCertLambda});
    if (report.status != SolveStatus::kConverged) {
      return {false, "problem " + std::to_string(p) + ": " + to_string(report.status)};
    }
    const auto& cert = report.certificate;
    if (!cert.n_star) return {false, "problem " + std::to_string(p) + ": no n*"};
    max_n_star = std::max(max_n_star, *cert.n_star);
    Section x = x0.normalized();
    for (std::size_t n = 0; n < cert.prob_within.size(); ++n) {
      if (n >= *cert.n_star) {
        if (!eps_lambda_near(x, report.z, kCertEps, kCertLambda)) {
          return {false, "problem " + std::to_string(p) + ": not near at n = " + std::to_string(n)};
        }
        ++checked;
      }
      x = apply(f, x);
    }
  }
  return {true, std::to_string(all.size()) + " problems, " + std::to_string(checked) +
                    " recorded iterates past n* checked, max n* " + std::to_string(max_n_star)};
}

// 6. Gluing restricted solves over a random 4-block partition.
Outcome gluing(const std::vector<Problem>& suite) {
  std::size_t problems = 0;
  for (std::size_t p = 0; p < suite.size(); ++p) {
    Rng rng(6000 + p);
    Problem prob = generate(100 + p, {.atoms = 4 + rng.index(12), .dim = suite[p].dim});
    const RandomMap f = build(prob);
    const std::size_t k = f.atoms();
    std::vector<std::size_t> labels(k);
    for (std::size_t i = 0; i < k; ++i) labels[i] = i % 4;
    for (std::size_t i = k; i > 1; --i) std::swap(labels[i - 1], labels[rng.index(i)]);
    const Partition partition = Partition::from_labels(f.space(), labels);
    if (partition.size() != 4) return {false, "partition with " + std::to_string(partition.size()) + " blocks"};

    const Section x0 = f.domain().sample(rng);
    const SolveOptions options{.tol = prob.solver.tol};
    const auto global = solve(f, x0, options);
    std::vector<Section> parts;
    for (const Event& block : partition.blocks()) {
      const RandomMap sub = restrict_to(f, block);
      const Section start(sub.space(), x0.dim(), {x0.flat().begin(), x0.flat().end()});
      const auto local = solve(sub, start, options);
      parts.emplace_back(f.space(), x0.dim(), std::vector<double>(local.z.flat().begin(), local.z.flat().end()));
    }
    if (!(glue(partition, parts) == global.z)) return {false, "problem " + std::to_string(p) + ": glued z differs"};
    ++problems;
  }
  return {true, std::to_string(problems) + " problems, glued restricted solves equal the global z atomwise"};
}

// 7. Pathological problems are flagged with witnesses; cmd_verify exits 3.
Outcome falsification() {
  struct Case {
    const char* name;
    std::size_t condition;
  };
  std::ostringstream detail;
  bool pass = true;
  const fs::path out = fs::temp_directory_path() / "fibrefix_acceptance" / "verify";
  for (const Case c : {Case{"identity_trap", 3}, Case{"discontinuous", 4}}) {
    const auto prob = load_file(kProblems / (std::string(c.name) + ".json"));
    const auto ledger = verify_hypotheses(build(prob), {.seed = prob.seed});
    const auto& report = ledger.conditions[c.condition - 1];
    const bool flagged = report.verdict == Verdict::kViolated && !report.witnesses.empty() &&
                         !report.witnesses.front().values.empty();
    cli::RunConfig config;
    config.problem = kProblems / (std::string(c.name) + ".json");
    config.out = out;
    std::ostringstream sink;
    std::streambuf* saved = std::cout.rdbuf(sink.rdbuf());
    const int code = cli::cmd_verify(config, sink);
    std::cout.rdbuf(saved);
    pass = pass && flagged && code == cli::kHypothesisViolated;
    detail << c.name << ": condition (" << c.condition << ") " << to_string(report.verdict);
    if (!report.witnesses.empty()) detail << " at atom " << report.witnesses.front().atom;
    detail << ", exit " << code << "; ";
  }
  std::string s = detail.str();
  s.resize(s.size() - 2);
  return {pass, s};
}

// 8. Random-norm axioms on seeded (x, y, xi) triples.
Outcome module_axioms() {
  Rng rng(8008);
  std::size_t violations = 0;
  for (std::size_t t = 0; t < kAxiomTriples; ++t) {
    const auto space = testing::random_space(rng, 16, true);
    const std::size_t dim = 1 + rng.index(3);
    std::vector<Section> xy{testing::random_section(rng, space, dim, 10.0),
                            testing::random_section(rng, space, dim, 10.0)};
    // Put theta on some atoms so the zero-iff-theta axiom sees both cases.
    for (std::size_t k = 0; k < space->size(); ++k) {
      if (rng.uniform() < 0.2) std::ranges::fill(xy[0].point(k), 0.0);
    }
    L0Scalar xi = testing::random_scalar(rng, space, 5.0);
    std::vector<double> v(xi.values().begin(), xi.values().end());
    for (double& e : v) {
      if (rng.uniform() < 0.1) e = 0.0;
    }
    const std::vector<L0Scalar> scalars{L0Scalar(space, v)};
    violations += check_module_axioms(xy, scalars, rnorm, kAxiomTol).size();
  }
  return {violations == 0,
          std::to_string(kAxiomTriples) + " triples, " + std::to_string(violations) + " violations at " + fmt(kAxiomTol)};
}

// 9. Phi_n against a hand-rolled per-fibre iteration.
Outcome phi_oracle(const std::vector<Problem>& suite) {
  std::vector<RandomMap> maps;
  for (const auto& prob : suite) maps.push_back(build(prob));
  maps.push_back(build(load_file(kProblems / "table_psi.json")));
  maps.push_back(build(load_file(kProblems / "rational_radial.json")));
  Rng rng(9009);
  double worst = 0.0;
  for (std::size_t t = 0; t < kPhiTuples; ++t) {
    const RandomMap& f = maps[rng.index(maps.size())];
    const Section x = f.domain().sample(rng);
    const Section y = f.domain().sample(rng);
    const std::size_t n = 1 + rng.index(kPhiMaxN);
    const auto support = f.space()->support();
    const std::size_t omega = support[rng.index(support.size())];
    Point u = x.point_copy(omega);
    Point v = y.point_copy(omega);
    Point next(u.size());
    for (std::size_t i = 0; i < n; ++i) {
      f.fibre(omega).apply(u, next);
      std::swap(u, next);
      f.fibre(omega).apply(v, next);
      std::swap(v, next);
    }
    worst = std::max(worst, std::abs(Phi_n(f, x, y, n).at(omega) - distance(u, v)));
  }
  return {worst <= kPhiTol, std::to_string(kPhiTuples) + " tuples, max difference " + fmt(worst)};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 10. Equal seeds give byte-identical CSVs for 1 and 8 workers.
Outcome determinism(const std::vector<Problem>& suite) {
  const fs::path root = fs::temp_directory_path() / "fibrefix_acceptance" / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream(root / "generated.json") << render(suite.back());
  }
  const std::vector<fs::path> problems{kProblems / "banach.json", kProblems / "table_psi.json",
                                       root / "generated.json"};
  const char* csvs[] = {"atoms.csv", "certificate.csv", "orbit.csv", "tail.csv", "phi_decay.csv"};

  // One run per worker setting; threads come from FIBREFIX_THREADS, and the
  // explicit count also forces the parallel path on machines with fewer cores.
  auto run_all = [&](const std::string& tag, std::size_t workers) {
    ::setenv("FIBREFIX_THREADS", std::to_string(workers).c_str(), 1);
    const std::size_t from_env = cli::threads_from_env();
    std::vector<std::string> files;
    std::ostringstream sink;
    std::streambuf* saved = std::cout.rdbuf(sink.rdbuf());
    for (std::size_t i = 0; i < problems.size(); ++i) {
      for (std::size_t threads : {from_env, workers}) {
        cli::RunConfig config;
        config.problem = problems[i];
        config.threads = threads;
        config.out = root / (tag + "_" + std::to_string(i) + "_" + std::to_string(threads));
        cli::cmd_solve(config, sink);
        cli::cmd_diagnose(config, sink);
        for (const char* csv : csvs) files.push_back(slurp(config.out / csv));
      }
    }
    std::cout.rdbuf(saved);
    ::unsetenv("FIBREFIX_THREADS");
    return files;
  };

  const auto one = run_all("t1", 1);
  const auto eight = run_all("t8", 8);
  const auto again = run_all("t8b", 8);
  std::size_t differing = 0;
  std::size_t empty = 0;
  for (std::size_t i = 0; i < one.size(); ++i) {
    if (one[i] != eight[i] || one[i] != again[i]) ++differing;
    if (one[i].empty()) ++empty;
  }
  return {differing == 0 && empty == 0, std::to_string(one.size()) + " CSV files per run, " +
                                            std::to_string(differing) + " differ, " + std::to_string(empty) +
                                            " empty"};
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Problem> suite = generated_suite();
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"analytic fixed points", analytic_fixed_points},
      {"closed-form orbit", closed_form_orbit},
      {"tail inequality", [&] { return tail_inequality(suite); }},
      {"uniqueness", [&] { return uniqueness(suite); }},
      {"(eps, lambda) certificate", [&] { return certificate(suite); }},
      {"gluing", [&] { return gluing(suite); }},
      {"hypothesis falsification", falsification},
      {"module axioms", module_axioms},
      {"Phi_n oracle equivalence", [&] { return phi_oracle(suite); }},
      {"determinism", [&] { return determinism(suite); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    if (!outcome.pass) ++failures;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << ' ' << (i + 1) << ' ' << criteria[i].name << ": "
              << outcome.detail << std::endl;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "total " << fmt(seconds) << " s, " << failures << " failed" << std::endl;
  return failures == 0 ? 0 : 1;
}

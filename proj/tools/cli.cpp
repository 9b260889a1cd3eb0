#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <thread>

#include "fibrefix/error.hpp"
#include "fibrefix/problems.hpp"
#include "fibrefix/randfix.hpp"
#include "fibrefix/report.hpp"

namespace fibrefix::cli {
namespace {

namespace fs = std::filesystem;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr std::size_t kDiagnoseSteps = 1000;

Problem load_with_overrides(const RunConfig& config) {
  if (config.problem.empty()) throw SchemaError("--problem is required");
  Problem prob = load_file(config.problem);
  if (config.tol) prob.solver.tol = *config.tol;
  if (config.max_iter) prob.solver.max_iter = *config.max_iter;
  if (config.eps) prob.solver.eps = *config.eps;
  if (config.lambda) prob.solver.lambda = *config.lambda;
  if (config.seed) prob.seed = *config.seed;
  validate(prob);
  return prob;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

fs::path prepare_out(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.out, ec);
  if (ec) throw IoError("cannot create output directory " + config.out.string() + ": " + ec.message());
  return config.out;
}

SamplingPlan plan_for(const Problem& prob) {
  SamplingPlan plan;
  plan.seed = prob.seed;
  return plan;
}

int ledger_exit(const HypothesisLedger& ledger) {
  if (ledger.any_violated()) return kHypothesisViolated;
  return ledger.all_witnessed() ? kSuccess : kNotWitnessed;
}

void print_ledger(const HypothesisLedger& ledger, std::ostream& out) {
  for (const auto& c : ledger.conditions) {
    out << "(" << c.condition << ") " << c.name << ": " << to_string(c.verdict);
    if (!c.witnesses.empty()) {
      const auto& w = c.witnesses.front();
      out << " [atom " << w.atom << ": " << w.note << "]";
    }
    out << '\n';
  }
}

// Probe point of largest norm, ties to the lexicographically largest.
Point diagnose_start(const FibreSet& set) {
  const auto probes = set.probe_points(0);
  Point best = probes.front();
  for (const auto& p : probes) {
    const double np = norm(p);
    const double nb = norm(best);
    if (np > nb || (np == nb && p > best)) best = p;
  }
  return best;
}

// Region for the uniformity search: the orbit start and the probe points of
// the set.
std::vector<Point> uniformity_region(const Point& start, const FibreSet& set) {
  std::vector<Point> region = set.probe_points(16);
  region.push_back(start);
  return region;
}

template <typename Fn>
int guarded(std::ostream& log, Fn&& body) {
  try {
    return body();
  } catch (const DomainEscape& e) {
    log << "error: domain escape: " << e.what() << '\n';
    return kHypothesisViolated;
  } catch (const SchemaError& e) {
    log << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const IoError& e) {
    log << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return kInputError;
  }
}

}  // namespace

std::size_t threads_from_env() {
  std::size_t threads = std::max(1U, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FIBREFIX_THREADS"); env && *env) {
    std::size_t cap = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, end, cap);
    if (ec != std::errc() || ptr != end || cap == 0) {
      throw std::invalid_argument("FIBREFIX_THREADS must be a positive integer, got '" + std::string(env) + "'");
    }
    threads = std::min(threads, cap);
  }
  return threads;
}

int cmd_solve(const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    const Problem prob = load_with_overrides(config);
    const RandomMap f = build(prob);
    SolveOptions options;
    options.tol = prob.solver.tol;
    options.max_iter = prob.solver.max_iter;
    options.eps = prob.solver.eps;
    options.lambda = prob.solver.lambda;
    options.force = config.force;
    options.threads = config.threads;
    options.seed = prob.seed;
    options.plan = plan_for(prob);

    const SolveReport report = solve(f, Section::zero(f.space(), f.dim()), options);
    const fs::path out = prepare_out(config);
    write_file(out / "report.json", report_json(report));
    if (config.verbosity > 0) print_ledger(report.hypotheses, log);

    if (report.status == SolveStatus::kRefused) {
      log << "refused: a hypothesis is violated (see report.json; --force overrides)\n";
      print_ledger(report.hypotheses, log);
      return static_cast<int>(kHypothesisViolated);
    }
    write_file(out / "atoms.csv", atoms_csv(report));
    write_file(out / "certificate.csv", certificate_csv(report));
    if (report.hypotheses_not_witnessed) log << "warning: HYPOTHESES NOT WITNESSED\n";

    std::cout << "status: " << to_string(report.status) << '\n';
    switch (report.status) {
      case SolveStatus::kNonConvergent:
        log << "non-convergent atoms:";
        for (std::size_t k : report.nonconvergent_atoms) log << ' ' << k;
        log << '\n';
        return static_cast<int>(kNonConvergence);
      case SolveStatus::kNonUnique:
        log << "fixed point is not unique: starts differ by "
            << format_real(report.uniqueness.max_deviation) << '\n';
        return static_cast<int>(kNonConvergence);
      default:
        break;
    }
    const auto& cert = report.certificate;
    std::cout << "n*: " << (cert.n_star ? std::to_string(*cert.n_star) : "none") << " (eps "
              << format_real(cert.eps) << ", lambda " << format_real(cert.lambda) << ")\n";
    if (!cert.n_star) return static_cast<int>(kNonConvergence);
    return static_cast<int>(report.hypotheses_not_witnessed ? kNotWitnessed : kSuccess);
  });
}

int cmd_verify(const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    const Problem prob = load_with_overrides(config);
    const RandomMap f = build(prob);
    const HypothesisLedger ledger = verify_hypotheses(f, plan_for(prob));
    write_file(prepare_out(config) / "ledger.json", ledger_json(ledger));
    print_ledger(ledger, std::cout);
    return ledger_exit(ledger);
  });
}

int cmd_diagnose(const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    const Problem prob = load_with_overrides(config);
    const RandomMap f = build(prob);
    const auto support = f.space()->support();
    const std::size_t atom = config.atom.value_or(support.front());
    if (atom >= f.atoms() || !f.space()->positive(atom)) {
      throw SchemaError("--atom " + std::to_string(atom) + " is not a positive-weight atom");
    }
    const FibreMap& map = f.fibre(atom);
    const fs::path out = prepare_out(config);

    const HypothesisLedger ledger = verify_hypotheses(f, plan_for(prob));
    write_file(out / "phi_decay.csv", decay_csv(ledger.decay[atom]));

    const Point start = diagnose_start(map.set());
    std::optional<std::size_t> horizon;
    if (map.phi()) {
      horizon = locate_uniformity_N(map.phi_n(), map.phi(), uniformity_region(start, map.set()),
                                    prob.solver.eps)
                    .horizon;
    } else {
      horizon = ledger.uniformity_horizon[atom];
    }

    // Record kDiagnoseSteps tail rows past the horizon when max_iter allows.
    OrbitOptions orbit_options;
    orbit_options.n_max = std::min(prob.solver.max_iter, kDiagnoseSteps + horizon.value_or(0));
    orbit_options.full_storage = true;
    const OrbitTrace trace = orbit(map, start, orbit_options);
    write_file(out / "orbit.csv", orbit_csv(trace));

    if (!horizon || *horizon >= trace.tail_diameters.size()) {
      write_file(out / "tail.csv", tail_csv(TailLedger{}));
      log << "no uniformity horizon within the recorded orbit; tail.csv left empty\n";
      return static_cast<int>(kNotWitnessed);
    }
    const TailLedger tail = verify_tail_inequality(trace, f.psi(), prob.solver.eps, *horizon);
    write_file(out / "tail.csv", tail_csv(tail));
    std::cout << "atom " << atom << ": N = " << *horizon << ", tail violations " << tail.violations.size()
              << ", worst slack " << format_real(tail.worst_slack) << '\n';
    return static_cast<int>(tail.ok() ? kSuccess : kHypothesisViolated);
  });
}

int cmd_generate(const RunConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    GenerateOptions options;
    options.atoms = config.atoms;
    options.dim = config.dim;
    const Problem prob = generate(config.seed.value_or(0), options);
    const fs::path path = prepare_out(config) / "problem.json";
    write_file(path, render(prob));
    std::cout << path.string() << '\n';
    return static_cast<int>(kSuccess);
  });
}

int run(int argc, char** argv) {
  CLI::App app{"Solve and certify fixed points of random asymptotically pointwise contractions"};
  app.require_subcommand(1);
  RunConfig config;

  auto add_common = [&](CLI::App* sub, bool needs_problem) {
    auto* problem = sub->add_option("--problem", config.problem, "Problem file (JSON)");
    if (needs_problem) problem->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", config.seed, "Sampling and generator seed");
    sub->add_option("--out", config.out, "Output directory")->capture_default_str();
    sub->add_flag("-v,--verbose", config.verbosity, "Log more detail to stderr");
  };
  auto add_solver = [&](CLI::App* sub) {
    sub->add_option("--tol", config.tol, "Residual tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", config.max_iter, "Iteration cap per fibre")->check(CLI::PositiveNumber);
    sub->add_option("--eps", config.eps, "Certificate epsilon")->check(CLI::PositiveNumber);
    sub->add_option("--lambda", config.lambda, "Certificate lambda, in (0, 1)")
        ->check(CLI::Range(0.0, 1.0));
  };

  auto* solve_cmd = app.add_subcommand("solve", "Solve every fibre and glue the fixed point");
  add_common(solve_cmd, true);
  add_solver(solve_cmd);
  solve_cmd->add_flag("--force", config.force, "Solve even if a hypothesis is violated");

  auto* verify_cmd = app.add_subcommand("verify", "Check the four hypotheses and write ledger.json");
  add_common(verify_cmd, true);
  add_solver(verify_cmd);

  auto* diagnose_cmd = app.add_subcommand("diagnose", "Write orbit, tail and decay tables for one atom");
  add_common(diagnose_cmd, true);
  add_solver(diagnose_cmd);
  diagnose_cmd->add_option("--atom", config.atom, "Atom index (default: first positive-weight atom)");

  auto* generate_cmd = app.add_subcommand("generate", "Write a seeded well-posed problem.json");
  add_common(generate_cmd, false);
  generate_cmd->add_option("--atoms", config.atoms, "Number of atoms")->capture_default_str();
  generate_cmd->add_option("--dim", config.dim, "Fibre dimension")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? static_cast<int>(kSuccess) : static_cast<int>(kInputError);
  }

  try {
    config.threads = threads_from_env();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }

  if (solve_cmd->parsed()) return cmd_solve(config, std::cerr);
  if (verify_cmd->parsed()) return cmd_verify(config, std::cerr);
  if (diagnose_cmd->parsed()) return cmd_diagnose(config, std::cerr);
  return cmd_generate(config, std::cerr);
}

}  // namespace fibrefix::cli

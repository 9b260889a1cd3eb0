#include "fibrefix/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace fibrefix {
namespace {

using json = nlohmann::ordered_json;

json real_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json witness_json(const Witness& w) {
  json values = json::object();
  for (const auto& [name, v] : w.values) values[name] = real_or_null(v);
  json out = {{"atom", w.atom}, {"note", w.note}, {"values", values}};
  if (!w.x.empty()) out["x"] = w.x;
  if (!w.y.empty()) out["y"] = w.y;
  return out;
}

json ledger_value(const HypothesisLedger& ledger) {
  json conditions = json::array();
  for (const auto& c : ledger.conditions) {
    json witnesses = json::array();
    for (const auto& w : c.witnesses) witnesses.push_back(witness_json(w));
    conditions.push_back({{"condition", c.condition},
                          {"name", c.name},
                          {"verdict", to_string(c.verdict)},
                          {"method", c.method},
                          {"detail", c.detail},
                          {"checks", c.checks},
                          {"witnesses", witnesses}});
  }
  json horizons = json::array();
  for (const auto& h : ledger.uniformity_horizon) horizons.push_back(h ? json(*h) : json(nullptr));
  return {{"conditions", conditions},
          {"any_violated", ledger.any_violated()},
          {"all_witnessed", ledger.all_witnessed()},
          {"full_measure_atoms", ledger.full_measure_atoms},
          {"uniformity_horizon", horizons}};
}

}  // namespace

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

std::string ledger_json(const HypothesisLedger& ledger) { return ledger_value(ledger).dump(2) + "\n"; }

std::string report_json(const SolveReport& report) {
  json atoms = json::array();
  for (const auto& a : report.atoms) {
    atoms.push_back({{"atom", a.atom},
                     {"weight", a.weight},
                     {"solved", a.solved},
                     {"converged", a.converged},
                     {"iterations", a.iterations},
                     {"residual", real_or_null(a.residual)},
                     {"z", report.z.point_copy(a.atom)}});
  }
  const auto& cert = report.certificate;
  json root;
  root["status"] = to_string(report.status);
  if (report.hypotheses_not_witnessed) root["banner"] = "HYPOTHESES NOT WITNESSED";
  root["tol"] = report.tol;
  root["atoms"] = atoms;
  root["nonconvergent_atoms"] = report.nonconvergent_atoms;
  root["hypotheses"] = ledger_value(report.hypotheses);
  root["certificate"] = {{"eps", cert.eps},
                         {"lambda", cert.lambda},
                         {"n_star", cert.n_star ? json(*cert.n_star) : json(nullptr)},
                         {"recorded_iterates", cert.prob_within.size()},
                         {"prefix_only", cert.prefix_only}};
  root["uniqueness"] = {{"starts", report.uniqueness.starts},
                        {"inconclusive", report.uniqueness.inconclusive},
                        {"unique", report.uniqueness.unique},
                        {"max_deviation", real_or_null(report.uniqueness.max_deviation)}};
  root["seconds"] = report.seconds;
  return root.dump(2) + "\n";
}

std::string atoms_csv(const SolveReport& report) {
  std::ostringstream out;
  out << "atom,weight,solved,converged,iterations,residual";
  for (std::size_t i = 0; i < report.z.dim(); ++i) out << ",z_" << i;
  out << '\n';
  for (const auto& a : report.atoms) {
    out << a.atom << ',' << format_real(a.weight) << ',' << a.solved << ',' << a.converged << ','
        << a.iterations << ',' << format_real(a.residual);
    for (double v : report.z.point(a.atom)) out << ',' << format_real(v);
    out << '\n';
  }
  return out.str();
}

std::string certificate_csv(const SolveReport& report) {
  const auto& cert = report.certificate;
  std::ostringstream out;
  out << "n,prob_within_eps,ess_sup_dist\n";
  for (std::size_t n = 0; n < cert.prob_within.size(); ++n) {
    out << n << ',' << format_real(cert.prob_within[n]) << ',' << format_real(cert.ess_sup_distance[n])
        << '\n';
  }
  return out.str();
}

std::string orbit_csv(const OrbitTrace& trace) {
  std::ostringstream out;
  out << "n,d_step,b_n\n";
  for (std::size_t i = 0; i < trace.points.size(); ++i) {
    const std::size_t n = trace.offset + i;
    out << n << ',';
    if (n < trace.steps.size()) out << format_real(trace.steps[n]);
    out << ',';
    if (i < trace.tail_diameters.size()) out << format_real(trace.tail_diameters[i]);
    out << '\n';
  }
  return out.str();
}

std::string tail_csv(const TailLedger& ledger) {
  std::ostringstream out;
  out << "n,b_n_plus_N,psi_b_n_plus_eps,slack\n";
  for (const auto& r : ledger.rows) {
    out << r.n << ',' << format_real(r.b_n_plus_N) << ',' << format_real(r.rhs) << ','
        << format_real(r.slack) << '\n';
  }
  return out.str();
}

std::string decay_csv(std::span<const DecayRow> rows) {
  std::ostringstream out;
  out << "n,sup_abs_Phi_n_minus_Phi\n";
  for (const auto& r : rows) out << r.n << ',' << format_real(r.sup) << '\n';
  return out.str();
}

}  // namespace fibrefix

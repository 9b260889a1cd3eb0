#pragma once

// JSON and CSV serialization of solver reports, hypothesis ledgers and
// diagnostic traces. Reals use the shortest round-trip decimal form, so equal
// inputs give byte-identical files.

#include <span>
#include <string>

#include "fibrefix/detfix.hpp"
#include "fibrefix/randfix.hpp"

namespace fibrefix {

/// Shortest decimal that parses back to the same double.
std::string format_real(double value);

std::string ledger_json(const HypothesisLedger& ledger);

/// Includes the ledger, the certificate summary and wall time.
std::string report_json(const SolveReport& report);

/// atom, weight, solved, converged, iterations, residual, z_0 .. z_{d-1}
std::string atoms_csv(const SolveReport& report);

/// n, prob_within_eps, ess_sup_dist
std::string certificate_csv(const SolveReport& report);

/// n, d_step, b_n over the recorded window.
std::string orbit_csv(const OrbitTrace& trace);

/// n, b_n_plus_N, psi_b_n_plus_eps, slack
std::string tail_csv(const TailLedger& ledger);

/// n, sup_abs_Phi_n_minus_Phi
std::string decay_csv(std::span<const DecayRow> rows);

}  // namespace fibrefix

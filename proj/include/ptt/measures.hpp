#pragma once

#include <optional>
#include <string>

#include "ptt/process_tensor.hpp"

namespace ptt {

struct CmiEntry {
    int break_slot = 0;
    double value = 0.0; // lower bound on the memory across the break
};

struct DiagnosticsReport {
    double qmi = 0.0;    // relative entropy to the product of marginals
    double purity = 0.0; // Tr[Choi^2]
    double process_fidelity_vs_ideal = 0.0;
    std::vector<std::pair<std::string, double>> negativity; // per named cut
    std::vector<CmiEntry> cmi;

    nlohmann::json to_json() const;
    std::string summary() const;
};

/// Negativity across the cut between the legs above t_{j-1} and the rest
/// (the i_j / o_{j-1} split).
double negativity_time_cut(const ProcessTensorChoi& pt, int j);

/// Quantum mutual information between the two sides of the same cut.
double qmi_time_cut(const ProcessTensorChoi& pt, int j);

/// Bell-chain ideal process (identity steps) over a pure initial state.
Mat bell_chain_ideal(int k, const Mat& rho0);

/// Full diagnostic bundle; fidelity is taken against the given ideal process
/// tensor or against the Bell chain over |0><0| when none is supplied.
DiagnosticsReport diagnostics(const ProcessTensorChoi& pt,
                              const ProcessTensorChoi* ideal = nullptr,
                              int cmi_budget = 200);

/// Largest classical mutual information between the outcome of a causal-break
/// instrument at the given slot and a terminal two-outcome measurement,
/// maximised over a Clifford grid with local refinement. Lower-bounds the QMI
/// of the corresponding cut.
double cmi_causal_break(const ProcessTensorChoi& pt, int break_slot, int budget = 200);

/// The classically correlated two-step fixture with memory ln 2: equal mixture
/// of identity-identity and flip-flip trajectories.
ProcessTensorChoi classically_correlated_fixture();

} // namespace ptt

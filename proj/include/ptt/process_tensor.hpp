#pragma once

#include <optional>

#include "ptt/channels.hpp"
#include "ptt/linalg.hpp"

namespace ptt {

/// Multi-time Choi state of a k-step process. Legs are ordered
/// [o_k, i_k, o_{k-1}, ..., i_1, o_0] (time runs right to left) and the state
/// is normalised to unit trace.
struct ProcessTensorChoi {
    int k = 0;
    int d_s = 2;
    Mat choi;

    int num_legs() const { return 2 * k + 1; }
    SubsystemShape leg_shape() const { return SubsystemShape::uniform(num_legs(), d_s); }

    /// Leg index of the step-j output, j in [0, k].
    int leg_output(int j) const;
    /// Leg index of the step-j input, j in [1, k].
    int leg_input(int j) const;

    nlohmann::json to_json() const;
    static ProcessTensorChoi from_json(const nlohmann::json& j);
};

/// Time-local instrument sequence: ops[j] is the Choi matrix of the operation
/// applied at time t_j, on legs (i_{j+1}, o_j), normalised to trace d_s^2 for
/// deterministic operations. An optional terminating POVM effect acts on o_k.
struct InstrumentSequence {
    std::vector<Mat> ops;
    std::optional<Mat> povm;
};

/// Trace-d^2 instrument Choi of a channel (d times the channel Choi).
Mat instrument_from_channel(const QuantumChannel& ch);
Mat unitary_instrument(const UnitaryParams& p);
Mat identity_instrument(int d);

// ---------------------------------------------------------------------------

/// Build the process tensor of dilated dynamics: an initial SE state and one
/// SE unitary per step, tracing the environment at the end.
ProcessTensorChoi from_dilation(const Mat& rho_se0, const std::vector<Mat>& unitaries,
                                int d_s, int d_e);

/// Spatiotemporal Born rule, Tr[(Pi_k x A_{k-1}^T x ... x A_0^T) Choi].
double born_rule(const ProcessTensorChoi& pt, const InstrumentSequence& seq);

/// Conditional output state at t_k for a sequence without terminal POVM.
Mat act(const ProcessTensorChoi& pt, const InstrumentSequence& seq);

/// Partial trace keeping the listed legs.
Mat marginal(const ProcessTensorChoi& pt, const std::vector<int>& keep_legs);

/// Marginal channel Choi of step j, legs (o_j, i_j), rescaled to trace 1.
Mat step_marginal(const ProcessTensorChoi& pt, int j);

// ---------------------------------------------------------------------------
// causality

/// All Pauli coefficients Tr[P Choi] for unnormalised strings, indexed base-4
/// over legs (leftmost leg most significant; digit order I,X,Y,Z).
std::vector<cplx> pauli_coefficients(const Mat& m, int num_qubit_legs);

/// Pauli strings whose expectation must vanish on a causal process: identity
/// on all legs later than some i_j, a traceless Pauli on i_j, anything earlier.
std::vector<std::vector<int>> causality_constraint_paulis(int k, int d_s = 2);

struct CausalityReport {
    double max_violation = 0.0;
    std::vector<int> worst_string;
};

CausalityReport check_causal(const ProcessTensorChoi& pt, double tol = 1e-8);

// ---------------------------------------------------------------------------
// memory measures and conditioning

/// Relative entropy to the tensor product of the step marginals.
double non_markovianity(const ProcessTensorChoi& pt);

/// Product of the step marginals (the closest Markov process).
Mat markov_closest(const ProcessTensorChoi& pt);

/// Contract fixed operations at the given times; the result is renormalised to
/// unit trace. Throws on a zero-probability branch (trace < 1e-12).
ProcessTensorChoi conditional_pt(const ProcessTensorChoi& pt,
                                 const std::vector<std::pair<int, Mat>>& fixed_ops);

/// Contract one instrument Choi over an arbitrary leg pair (input_leg, output_leg),
/// without renormalising. Used by conditioning, stitching and diagnostics.
Mat contract_instrument(const Mat& m, const SubsystemShape& shape, int leg_in, int leg_out,
                        const Mat& op_choi);

} // namespace ptt

#pragma once

#include <cstdint>
#include <string>

#include "ptt/process_tensor.hpp"
#include "ptt/rng.hpp"
#include "ptt/tomo_basis.hpp"

namespace ptt {

/// Exact description of driven open dynamics: an initial SE state and one SE
/// unitary per step. This module is the brute-force reference for every
/// estimator in the library.
struct DilatedProcessSpec {
    int d_s = 2;
    int d_e = 2;
    Mat rho_se0;                 // on (S x E)
    std::vector<Mat> unitaries;  // one per step, each (d_s*d_e) square
    std::string description;

    int k() const { return static_cast<int>(unitaries.size()); }
    void validate() const;

    nlohmann::json to_json() const;
    static DilatedProcessSpec from_json(const nlohmann::json& j);
};

/// Joint SE state after driving through all steps with the given operations
/// (trace may shrink below one for trace-decreasing instruments).
Mat propagate_se(const DilatedProcessSpec& spec, const std::vector<Mat>& ops);

/// System state at t_k conditioned on the sequence (no terminal POVM).
Mat exact_output_state(const DilatedProcessSpec& spec, const InstrumentSequence& seq);

/// Probability of the sequence outcome, including the terminal POVM effect.
double exact_probability(const DilatedProcessSpec& spec, const InstrumentSequence& seq);

/// Choi state of the full process (delegates to from_dilation).
ProcessTensorChoi to_process_tensor(const DilatedProcessSpec& spec);

/// Process tensor of steps first_step+1 .. first_step+num_steps, with fixed
/// operations filling the slots before the window.
ProcessTensorChoi window_process_tensor(const DilatedProcessSpec& spec,
                                        const std::vector<Mat>& prefix_ops, int first_step,
                                        int num_steps);

// ---------------------------------------------------------------------------
// synthetic tomography data

struct CircuitData {
    std::vector<int> mu;        // basis index per slot
    std::vector<double> counts; // per POVM effect; probabilities in exact mode
    double shots = 0.0;         // 0 marks exact mode
};

struct TomographyDataset {
    std::vector<CircuitData> circuits;
    bool exact_mode = false;
    std::uint64_t seed = 0;
    std::string spec_hash, basis_hash, povm_hash;

    void write_jsonl(const std::string& path) const;
    static TomographyDataset read_jsonl(const std::string& path);
};

/// The six-effect Pauli POVM {|b><b|/3 : b eigenvector of X, Y, Z}.
std::vector<Mat> pauli_6_povm();

/// Multinomially sampled counts for every basis-element combination. Counts
/// are drawn jointly per setting group (all instrument outcomes plus the POVM
/// form one sample space), so shots refers to the setting combination a record
/// belongs to. shots == 0 stores the exact probabilities instead.
TomographyDataset generate_dataset(const DilatedProcessSpec& spec, const InstrumentBasis& basis,
                                   const std::vector<Mat>& povm, long shots, std::uint64_t seed);

/// Convenience overload for deterministic one-outcome elements.
TomographyDataset generate_dataset(const DilatedProcessSpec& spec, const std::vector<Mat>& basis,
                                   const std::vector<Mat>& povm, long shots, std::uint64_t seed);

struct ValidationSequence {
    std::vector<UnitaryParams> gates;
    InstrumentSequence seq;
    Mat exact_output;
};

/// Random unitary sequences with their exactly simulated output states.
std::vector<ValidationSequence> validation_sequences(const DilatedProcessSpec& spec, int count,
                                                     std::uint64_t seed);

/// Haar-distributed single-qubit unitary parameters.
UnitaryParams random_unitary_params(CounterRng& rng);

/// FNV-1a of a JSON dump, for provenance headers.
std::string json_hash(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// fixtures used across tests and the command-line examples

/// Random Heisenberg-type SE coupling exp(-i sum_a c_a P_a x P_a) per step.
DilatedProcessSpec heisenberg_spec(int k, int d_e_qubits, double coupling, std::uint64_t seed);

/// Pure-dephasing coupling exp(-i theta Z x Z) per step.
DilatedProcessSpec dephasing_zz_spec(int k, double theta);

/// Three-step process whose memory spans exactly two steps: step one swaps the
/// system out for a fresh maximally mixed qubit, step two records the incoming
/// state into an environment register and re-prepares the system, step three
/// kicks the system conditioned on that record. Environment re-preparation is
/// realised by swapping pre-loaded fresh ancilla qubits into place.
DilatedProcessSpec two_step_memory_spec();

/// Embed a two-qubit gate on the given qubit pair of an n-qubit register.
Mat embed_two_qubit(const Mat& gate, int qa, int qb, int n_qubits);

} // namespace ptt

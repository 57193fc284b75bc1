#pragma once

#include <cstdint>

#include "ptt/estimators.hpp"
#include "ptt/process_tensor.hpp"
#include "ptt/sim_experiment.hpp"

namespace ptt {

/// The 24 single-qubit Cliffords, enumerated deterministically.
const std::vector<Mat>& clifford_table();

/// One randomised-instrument run over a register of qubits: a measurement
/// Clifford and outcome per (time, qubit) for t_0..t_k, and a preparation
/// Clifford per (slot, qubit) for t_0..t_{k-1}.
struct ShadowRecord {
    std::vector<std::uint8_t> measure_ids;
    std::vector<std::uint8_t> outcomes;
    std::vector<std::uint8_t> prep_ids;
};

/// Sample N randomised measure-and-prepare runs of the dilated process; the
/// system is a register of `register_qubits` qubits (d_s = 2^R).
std::vector<ShadowRecord> sample_clifford_shadows(const DilatedProcessSpec& spec,
                                                  int register_qubits, long n,
                                                  std::uint64_t seed);

/// Per-(leg, qubit) snapshot factors, 3 X - I form, ordered leg-major with the
/// process leg order [o_k, i_k, ..., o_0]; each factor has unit trace.
std::vector<Mat> snapshot_qubit_factors(const ShadowRecord& record, int k, int register_qubits);

/// Full snapshot matrix (kron of all factors); practical for small k only.
Mat snapshot_clifford(const ShadowRecord& record, int k, int register_qubits);

// ---------------------------------------------------------------------------
// estimation

struct MedianOfMeansConfig {
    int groups = 0;      // 0: 2 ln(2M/delta), rounded up
    double delta = 0.05; // failure probability for the sizing rule
};

/// Median-of-means estimates of Pauli-string expectations. Strings are digit
/// vectors (0..3) over the (leg, qubit) grid, leg-major.
std::vector<double> estimate_observables(const std::vector<ShadowRecord>& records, int k,
                                         int register_qubits,
                                         const std::vector<std::vector<int>>& strings,
                                         const MedianOfMeansConfig& cfg = {});

/// Mean snapshot restricted to the chosen (leg, qubit) pairs (indices into the
/// leg-major grid); dropped factors trace out to one.
Mat mean_snapshot_marginal(const std::vector<ShadowRecord>& records, int k, int register_qubits,
                           const std::vector<int>& keep);

/// All (leg, qubit) grid indices belonging to one register qubit.
std::vector<int> qubit_legs(int k, int register_qubits, int qubit);

/// Project a raw marginal estimate onto the physical set (PSD plus causality)
/// for a steps-long single-qubit window. A positive threshold scale zeroes
/// Pauli coefficients below threshold_scale * sqrt(3^w) for weight-w strings
/// first (the shadow-noise profile), so pure sampling noise cannot masquerade
/// as temporal correlation.
ProcessTensorChoi polish_marginal(const Mat& mean, int steps, double threshold_scale = 0.0);

/// Memory filter for one register qubit: the marginal estimate is compared
/// coefficient-by-coefficient against the product of its own step marginals,
/// group-split standard errors decide which deviations are real, and the
/// non-Markovianity of the significance-filtered state is returned. Crosstalk
/// from instrumented neighbours averages away, so only environment-carried
/// memory survives the test.
double marginal_memory_filter(const std::vector<ShadowRecord>& records, int k,
                              int register_qubits, int qubit, double z_score = 5.0,
                              int groups = 12);

/// Maximum-likelihood estimate of one register qubit's marginal process from
/// Clifford shadow records: the records coarse-grain exactly onto a six-state
/// preparation and three-basis measurement ensemble, which is binned into a
/// tomography dataset and fit with the physical-projection descent.
ProcessTensorChoi shadow_marginal_mle(const std::vector<ShadowRecord>& records, int k,
                                      int register_qubits, int qubit,
                                      const MleConfig& cfg = {});

// ---------------------------------------------------------------------------
// arbitrary-instrument ensembles

struct GeneralShadowRecord {
    std::vector<int> element_ids; // chosen basis element per slot (outcome included)
    int povm_outcome = 0;
};

std::vector<GeneralShadowRecord> sample_instrument_shadows(const DilatedProcessSpec& spec,
                                                           const InstrumentBasis& basis,
                                                           const std::vector<Mat>& povm, long n,
                                                           std::uint64_t seed);

/// Single-shot tomographic snapshot: povm-dual (x) transposed basis duals,
/// weighted by the setting sampling measure.
Mat snapshot_general(const GeneralShadowRecord& record, const DualSet& basis_duals,
                     const DualSet& povm_duals, int settings, int k);

} // namespace ptt

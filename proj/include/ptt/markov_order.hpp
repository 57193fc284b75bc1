#pragma once

#include "ptt/estimators.hpp"
#include "ptt/process_tensor.hpp"
#include "ptt/sim_experiment.hpp"
#include "ptt/tomo_basis.hpp"

namespace ptt {

/// Conditional-Markov-order model: one ell-step memory process tensor per
/// sliding window, blocks[j] covering steps j+1 .. j+ell (times t_j .. t_{j+ell}).
struct CmoModel {
    int k = 0;
    int ell = 0;
    int d_s = 2;
    std::vector<ProcessTensorChoi> blocks; // k - ell + 1 of them
    Mat filler;                            // fixed operation used before each window

    int block_count() const { return k - ell + 1; }
    void validate() const;

    nlohmann::json to_json() const;
    static CmoModel from_json(const nlohmann::json& j);
};

struct CmoCircuitPlan {
    int k = 0, ell = 0;
    int basis_size = 0, povm_size = 0;
    long circuits_per_block = 0;
    long total_circuits = 0;
    // per block: the slot indices that vary (the others hold the filler)
    std::vector<std::vector<int>> varied_slots;
};

CmoCircuitPlan design_cmo_circuits(int k, int ell, const InstrumentBasis& basis, int povm_size);

/// Stitched prediction of the final state for a k-slot sequence.
Mat cmo_predict(const CmoModel& model, const InstrumentSequence& seq);

/// Exact memory blocks computed from a dilated simulator (exact-mode fit).
CmoModel cmo_blocks_from_spec(const DilatedProcessSpec& spec, int ell, const Mat& filler);

/// Per-block tomography + MLE fit from block datasets (datasets[j] holds the
/// ell-step data for block j, fillers occupying the earlier slots).
CmoModel cmo_fit(const std::vector<TomographyDataset>& block_data, const InstrumentBasis& basis,
                 const std::vector<Mat>& povm, int k, int ell, const Mat& filler,
                 const MleConfig& cfg = {});

/// Generate the per-block datasets for cmo_fit from a simulator.
std::vector<TomographyDataset> generate_cmo_datasets(const DilatedProcessSpec& spec, int ell,
                                                     const Mat& filler,
                                                     const InstrumentBasis& basis,
                                                     const std::vector<Mat>& povm, long shots,
                                                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// control optimisation against a characterised process

enum class ControlObjective {
    IdentityChannelDistance, // trace distance of the windowed channel to identity
    StatePreservation,       // mean squared infidelity over IC input states
};

struct ControlResult {
    std::vector<UnitaryParams> gates;
    double objective = 0.0;
    double idle_objective = 0.0; // same objective with identity gates
    bool stalled = false;
    int evaluations = 0;
};

/// Optimise the gates at the given slots of a full process tensor.
ControlResult optimise_control(const ProcessTensorChoi& pt, const std::vector<int>& window,
                               ControlObjective objective, int budget = 200);

/// Same against a stitched conditional-Markov-order model.
ControlResult optimise_control(const CmoModel& model, const std::vector<int>& window,
                               ControlObjective objective, int budget = 2000);

/// Effective channel Choi (trace 1) from the first input to the final output
/// when the window slots hold the given gates and slot 0 prepares the input.
Mat conditional_channel(const ProcessTensorChoi& pt, const std::vector<Mat>& slot_ops);

} // namespace ptt

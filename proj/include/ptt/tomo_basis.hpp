#pragma once

#include <cstdint>

#include "ptt/channels.hpp"
#include "ptt/linalg.hpp"
#include "ptt/process_tensor.hpp"

namespace ptt {

enum class BasisKind { UnitaryRestricted, IcMeasurePrepare, Custom };

/// One-slot instrument basis: elements are instrument Choi matrices in the
/// trace-d^2 convention, applied identically at every time step. Elements are
/// grouped into settings of `outcomes_per_setting` consecutive entries whose
/// sum is trace preserving (deterministic bases have one outcome per setting).
struct InstrumentBasis {
    BasisKind kind = BasisKind::Custom;
    std::vector<Mat> elements;
    std::vector<UnitaryParams> unitary_params; // populated for unitary bases
    int outcomes_per_setting = 1;

    int size() const { return static_cast<int>(elements.size()); }
    int settings() const { return size() / outcomes_per_setting; }
    double condition_number() const; // cached on first call

    nlohmann::json to_json() const;
    static InstrumentBasis from_json(const nlohmann::json& j);

private:
    mutable double condition_cache_ = -1.0;
};

/// Biorthogonal frame to a basis: Tr[B_i D_j] = delta_ij for linearly
/// independent sets, Moore-Penrose right inverse otherwise.
struct DualSet {
    std::vector<Mat> duals;
};

DualSet dual_set(const std::vector<Mat>& basis);
DualSet dual_set(const InstrumentBasis& basis);

/// Ratio of extreme singular values of the stacked vectorised basis.
double condition_number(const std::vector<Mat>& basis);

/// 16 rank-one measure-and-prepare instruments (4 preparations x 4 effects).
InstrumentBasis ic_measure_prepare_basis(int d_s = 2);

InstrumentBasis unitary_basis_from_params(const std::vector<UnitaryParams>& params);
InstrumentBasis random_unitary_basis(int count, std::uint64_t seed);

/// Catalogued ten-gate parameter set with minimal average mutual overlap.
std::vector<UnitaryParams> catalogued_low_overlap_params();

/// Sum over pairs of squared normalised overlaps (|Tr[u_i^dag u_j]|^2 / 4)^2.
double overlap_objective(const std::vector<UnitaryParams>& params);

struct MuubSearchResult {
    std::vector<UnitaryParams> params;
    double objective = 0.0;
    bool reached_reference = false; // search matched the catalogued optimum
    int restarts_used = 0;
};

/// Multi-start descent on the 30 gate angles; stops early once the objective
/// matches the catalogued optimum to 1e-3.
MuubSearchResult muub_search(std::uint64_t seed, int restarts = 32);

} // namespace ptt

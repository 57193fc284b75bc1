#pragma once

#include <cstdint>

#include "ptt/process_tensor.hpp"
#include "ptt/rng.hpp"

namespace ptt {

struct SamplerConfig {
    int k = 1;
    int d_s = 2;
    int rank = 0; // 0 means full rank d_s^(2k+1)
    int max_iterations = 60;
    std::uint64_t seed = 0;

    int process_dim() const;
    void validate() const;
};

/// PSD unit-trace matrix XX^dag / Tr, X an n x r complex Gaussian matrix.
Mat ginibre_state(int n, int r, CounterRng& rng);
Mat ginibre_state(int n, int r, std::uint64_t seed);

struct SamplerOutcome {
    ProcessTensorChoi pt;
    int sweeps = 0;
    double residual = 0.0;            // max causality-Pauli magnitude at exit
    bool converged = false;
    bool instability_flagged = false; // r much smaller than n: pseudoinverse branch
};

/// One causal renormalisation sweep (all levels, top to bottom). Exposed for
/// fixed-point and rank-preservation tests.
Mat causal_projection_sweep(const Mat& u, int k, int d_s);

/// One global-unitality renormalisation sweep.
Mat unital_projection_sweep(const Mat& u, int k, int d_s);

/// Pauli strings fixed to zero by global unitality (mirror of the causality
/// family with outputs and inputs exchanged).
std::vector<std::vector<int>> unitality_constraint_paulis(int k, int d_s = 2);

double max_abs_coefficient(const std::vector<cplx>& coeffs,
                           const std::vector<std::vector<int>>& strings);

/// Random causal process tensor: Ginibre draw plus causal renormalisation
/// sweeps until the constraint residual drops below 1e-10.
SamplerOutcome random_process_detailed(const SamplerConfig& cfg);
ProcessTensorChoi random_process(const SamplerConfig& cfg);

/// Alternating causal and unital sweeps; both families below 1e-7 at exit.
SamplerOutcome random_unital_process_detailed(const SamplerConfig& cfg);
ProcessTensorChoi random_unital_process(const SamplerConfig& cfg);

struct SpectralReport {
    std::vector<cplx> eigenvalues; // of the reshuffled superoperator
    double leading_magnitude = 0.0;
    double symmetry_residual = 0.0; // distance of the spectrum from conjugation closure
    double girko_fraction = 0.0;    // trailing eigenvalues inside radius 1.5/sqrt(r)
    int rank = 0;
};

/// Reshuffle each (o_j, i_j) pair of the operator-normalised Choi into
/// superoperator form; the unpaired o_0 leg is untouched.
Mat reshuffled_superoperator(const ProcessTensorChoi& pt);

SpectralReport spectral_diagnostics(const ProcessTensorChoi& pt);

} // namespace ptt

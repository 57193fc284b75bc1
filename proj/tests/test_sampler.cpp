#include <doctest.h>

#include <cmath>

#include "ptt/sampler.hpp"
#include "ptt/sim_experiment.hpp"

using namespace ptt;

namespace {

int eig_count(const Mat& m, double rel_threshold = 1e-8) {
    HermitianEig eig = eig_hermitian(m, 1e-8);
    double lmax = std::max(1e-300, eig.eigenvalues.maxCoeff());
    int count = 0;
    for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i)
        if (eig.eigenvalues(i) > rel_threshold * lmax) ++count;
    return count;
}

double negativity_cut(const ProcessTensorChoi& pt, int legs_in_block) {
    std::vector<int> block;
    for (int i = 0; i < legs_in_block; ++i) block.push_back(i);
    Mat g = partial_transpose(pt.choi, pt.leg_shape(), block);
    return 0.5 * (trace_norm(g) - 1.0);
}

} // namespace

TEST_CASE("ginibre state: purity, rank, determinism") {
    Mat pure = ginibre_state(8, 1, 1ULL);
    CHECK(std::abs(pure.trace() - cplx(1, 0)) < 1e-12);
    CHECK(eig_count(pure) == 1);

    Mat full = ginibre_state(8, 8, 2ULL);
    CHECK(eig_count(full) == 8);
    HermitianEig eig = eig_hermitian(full);
    CHECK(eig.eigenvalues.minCoeff() > 0.0);

    Mat again = ginibre_state(8, 8, 2ULL);
    CHECK((again - full).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("full-rank single-step draw is causal after one sweep") {
    SamplerConfig cfg;
    cfg.k = 1;
    cfg.rank = 8;
    cfg.seed = 5;
    SamplerOutcome out = random_process_detailed(cfg);
    CHECK(out.sweeps == 1);
    CHECK(out.residual < 1e-10);
    CHECK(check_causal(out.pt).max_violation < 1e-10);
    CHECK(std::abs(out.pt.choi.trace() - cplx(1, 0)) < 1e-10);
    HermitianEig eig = eig_hermitian(out.pt.choi, 1e-8);
    CHECK(eig.eigenvalues.minCoeff() > -1e-10);
}

TEST_CASE("rank-2 two-step draw: causal within budget, rank preserved") {
    SamplerConfig cfg;
    cfg.k = 2;
    cfg.rank = 2;
    cfg.max_iterations = 60;
    cfg.seed = 7;
    SamplerOutcome out = random_process_detailed(cfg);
    CHECK(out.converged);
    CHECK(out.instability_flagged); // 2 << 32/4
    CHECK(check_causal(out.pt).max_violation < 1e-8);
    CHECK(eig_count(out.pt.choi) == 2);
}

TEST_CASE("raw ginibre draws violate causality") {
    int violated = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        ProcessTensorChoi raw;
        raw.k = 1;
        raw.d_s = 2;
        raw.choi = ginibre_state(8, 8, 100 + s);
        if (check_causal(raw).max_violation > 0.01) ++violated;
    }
    CHECK(violated >= 9);
}

TEST_CASE("identity process is a fixed point of both sweeps") {
    Mat zero = Mat::Zero(2, 2);
    zero(0, 0) = 1.0;
    Mat plus = Mat::Constant(2, 2, 0.5);
    // use the maximally mixed initial state so the unital condition holds too
    Mat rho0 = kron(0.5 * Mat::Identity(2, 2), zero);
    ProcessTensorChoi pt = from_dilation(rho0, {Mat::Identity(4, 4), Mat::Identity(4, 4)}, 2, 2);

    Mat after_causal = causal_projection_sweep(pt.choi, pt.k, pt.d_s);
    CHECK((after_causal - pt.choi).cwiseAbs().maxCoeff() < 1e-9);
    Mat after_unital = unital_projection_sweep(pt.choi, pt.k, pt.d_s);
    CHECK((after_unital - pt.choi).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("unital draws satisfy both families and carry no block entanglement") {
    int entangled = 0, total = 0;
    for (std::uint64_t s = 0; s < 8; ++s) {
        SamplerConfig cfg;
        cfg.k = 2;
        cfg.rank = 0;
        cfg.max_iterations = 400;
        cfg.seed = 20 + s;
        SamplerOutcome out = random_unital_process_detailed(cfg);
        CHECK(out.converged);
        auto coeffs = pauli_coefficients(out.pt.choi, out.pt.num_legs());
        CHECK(max_abs_coefficient(coeffs, causality_constraint_paulis(2)) < 1e-7);
        CHECK(max_abs_coefficient(coeffs, unitality_constraint_paulis(2)) < 1e-7);
        // bipartite cut between the last step block (o_2, i_2) and the rest
        if (negativity_cut(out.pt, 2) > 1e-9) ++entangled;
        ++total;
    }
    CHECK(entangled == 0);
}

TEST_CASE("spectral diagnostics: identity process on the unit circle") {
    Mat zero = Mat::Zero(2, 2);
    zero(0, 0) = 1.0;
    Mat rho0 = kron(zero, zero);
    ProcessTensorChoi pt = from_dilation(rho0, {Mat::Identity(4, 4)}, 2, 2);
    SpectralReport rep = spectral_diagnostics(pt);
    CHECK(rep.leading_magnitude == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.symmetry_residual < 1e-8);
    for (const cplx& z : rep.eigenvalues) CHECK(std::abs(std::abs(z) - 1.0) < 1e-9);
}

TEST_CASE("spectral diagnostics on random two-step draws") {
    double girko_sum = 0.0;
    int n = 12;
    for (int s = 0; s < n; ++s) {
        SamplerConfig cfg;
        cfg.k = 2;
        cfg.rank = 4;
        cfg.max_iterations = 200;
        cfg.seed = 300 + static_cast<std::uint64_t>(s);
        SpectralReport rep = spectral_diagnostics(random_process(cfg));
        CHECK(rep.leading_magnitude <= 1.0 + 1e-8);
        CHECK(rep.symmetry_residual < 1e-8);
        CHECK(rep.rank == 4);
        girko_sum += rep.girko_fraction;
    }
    CHECK(girko_sum / n >= 0.9);
}

TEST_CASE("rank sets the correlation scale: purer draws carry more memory") {
    // mirrors the purity-correlation trend of random states: low-rank (purer)
    // processes typically hold more generalised mutual information
    double full_sum = 0.0, low_sum = 0.0;
    const int n = 10;
    for (int s = 0; s < n; ++s) {
        SamplerConfig cfg;
        cfg.k = 2;
        cfg.max_iterations = 300;
        cfg.seed = 500 + static_cast<std::uint64_t>(s);
        cfg.rank = 0;
        full_sum += non_markovianity(random_process(cfg));
        cfg.rank = 2;
        cfg.seed += 1000;
        low_sum += non_markovianity(random_process(cfg));
    }
    CHECK(low_sum / n > full_sum / n);
}

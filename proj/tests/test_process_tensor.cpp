#include <doctest.h>

#include <cmath>

#include "ptt/process_tensor.hpp"
#include "ptt/sim_experiment.hpp"

using namespace ptt;

namespace {

Mat zero_state() {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = 1.0;
    return m;
}

Mat prepare_instrument(const Mat& state) {
    // measure anything, discard, prepare `state`: Choi_op = state (x) I, scaled by d
    return 2.0 * kron(state, Mat::Identity(2, 2));
}

Mat swap_gate() {
    Mat s = Mat::Zero(4, 4);
    s(0, 0) = s(3, 3) = 1.0;
    s(1, 2) = s(2, 1) = 1.0;
    return s;
}

} // namespace

TEST_CASE("identity process: k=1, U = I") {
    Mat rho0 = kron(zero_state(), zero_state());
    ProcessTensorChoi pt = from_dilation(rho0, {Mat::Identity(4, 4)}, 2, 2);
    REQUIRE(pt.k == 1);
    CHECK(std::abs(pt.choi.trace() - cplx(1, 0)) < 1e-12);

    // Choi = |phi+><phi+| (x) rho_S0
    Vec bell = Vec::Zero(4);
    bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
    Mat expect = kron(bell * bell.adjoint(), zero_state());
    CHECK((pt.choi - expect).cwiseAbs().maxCoeff() < 1e-12);

    // prepare |0>, measure Z -> p(0) = 1
    InstrumentSequence seq;
    seq.ops.push_back(prepare_instrument(zero_state()));
    seq.povm = zero_state();
    CHECK(born_rule(pt, seq) == doctest::Approx(1.0).epsilon(1e-12));

    // identity gates reproduce rho_0
    InstrumentSequence idseq;
    idseq.ops.push_back(identity_instrument(2));
    CHECK((act(pt, idseq) - zero_state()).cwiseAbs().maxCoeff() < 1e-12);

    CHECK(check_causal(pt).max_violation < 1e-12);
    CHECK(non_markovianity(pt) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("swap dilation: output marginal becomes the environment state") {
    CounterRng rng(5);
    Mat sigma(2, 2);
    sigma << 0.7, cplx(0.1, 0.05), cplx(0.1, -0.05), 0.3;
    Mat rho0 = kron(zero_state(), sigma);
    ProcessTensorChoi pt = from_dilation(rho0, {swap_gate()}, 2, 2);

    Mat out = marginal(pt, {pt.leg_output(1)});
    CHECK((out - sigma).cwiseAbs().maxCoeff() < 1e-10);
    // i_1 uncorrelated: marginal on (o_1, i_1) is product sigma (x) I/2
    Mat oi = step_marginal(pt, 1);
    CHECK((oi - kron(sigma, 0.5 * Mat::Identity(2, 2))).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("causality constraint counts and sampler-free brute force") {
    auto k1 = causality_constraint_paulis(1);
    CHECK(k1.size() == 12);
    auto k2 = causality_constraint_paulis(2);
    CHECK(k2.size() == 204);

    // brute-force re-enumeration of the pattern for k=2
    int count = 0;
    for (int j = 1; j <= 2; ++j) {
        int leg_ij = 2 * (2 - j) + 1;
        int earlier = 2 * 2 + 1 - leg_ij - 1;
        int combos = 1;
        for (int i = 0; i < earlier; ++i) combos *= 4;
        count += 3 * combos;
    }
    CHECK(count == 204);
    // every string has identity on legs later than i_j and traceless on i_j
    for (const auto& s : k2) {
        int first_nonzero = -1;
        for (size_t i = 0; i < s.size(); ++i)
            if (s[i] != 0) {
                first_nonzero = static_cast<int>(i);
                break;
            }
        REQUIRE(first_nonzero >= 0);
        CHECK(first_nonzero % 2 == 1); // an input leg
        CHECK(s[static_cast<size_t>(first_nonzero)] >= 1);
        CHECK(s[static_cast<size_t>(first_nonzero)] <= 3);
    }
}

TEST_CASE("born rule equals dilated simulation on random specs") {
    for (std::uint64_t seedval : {1ULL, 2ULL, 3ULL}) {
        DilatedProcessSpec spec = heisenberg_spec(2, 1, 0.8, seedval);
        ProcessTensorChoi pt = to_process_tensor(spec);
        CHECK(check_causal(pt).max_violation < 1e-9);

        CounterRng rng(seedval + 100);
        auto povm = pauli_6_povm();
        for (int t = 0; t < 20; ++t) {
            InstrumentSequence seq;
            for (int j = 0; j < spec.k(); ++j)
                seq.ops.push_back(unitary_instrument(random_unitary_params(rng)));
            seq.povm = povm[rng.uniform_int(povm.size())] ;
            double a = born_rule(pt, seq);
            double b = exact_probability(spec, seq);
            CHECK(std::abs(a - b) < 1e-10);
        }
    }
}

TEST_CASE("born rule sums to one over a complete POVM") {
    DilatedProcessSpec spec = heisenberg_spec(2, 2, 0.9, 17);
    ProcessTensorChoi pt = to_process_tensor(spec);
    CounterRng rng(18);
    InstrumentSequence seq;
    for (int j = 0; j < spec.k(); ++j)
        seq.ops.push_back(unitary_instrument(random_unitary_params(rng)));
    double total = 0.0;
    for (const Mat& effect : pauli_6_povm()) {
        seq.povm = effect;
        total += born_rule(pt, seq);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    // act output has unit trace for deterministic sequences
    Mat rho = act(pt, seq);
    CHECK(std::abs(rho.trace() - cplx(1, 0)) < 1e-9);
    CHECK(hermiticity_residue(rho) < 1e-9);
}

TEST_CASE("markovian process: marginals reassemble and depolarising break factorises") {
    // closed system with unitary steps is Markovian
    DilatedProcessSpec spec;
    spec.d_s = 2;
    spec.d_e = 1;
    spec.rho_se0 = zero_state();
    CounterRng rng(23);
    for (int j = 0; j < 2; ++j) {
        Mat u = unitary_matrix(random_unitary_params(rng));
        spec.unitaries.push_back(u);
    }
    ProcessTensorChoi pt = to_process_tensor(spec);
    CHECK(non_markovianity(pt) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK((markov_closest(pt) - pt.choi).cwiseAbs().maxCoeff() < 1e-9);

    // conditioning a maximal depolarising instrument keeps the probability
    // factorised across the break
    Mat dep = instrument_from_channel(standard_channel(StandardChannelKind::MaximalDepolarising));
    InstrumentSequence seq;
    seq.ops.push_back(unitary_instrument(random_unitary_params(rng)));
    seq.ops.push_back(dep);
    // wait: depolarising at slot 1 erases the past; final state must not
    // depend on the first gate
    Mat out1 = act(pt, seq);
    seq.ops[0] = unitary_instrument(random_unitary_params(rng));
    Mat out2 = act(pt, seq);
    CHECK((out1 - out2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("conditional process tensor") {
    DilatedProcessSpec spec = heisenberg_spec(2, 1, 0.7, 31);
    ProcessTensorChoi pt = to_process_tensor(spec);

    // conditioning on identity ops marginalises those slots
    ProcessTensorChoi cond = conditional_pt(pt, {{1, identity_instrument(2)}});
    CHECK(cond.k == 1);
    CHECK(std::abs(cond.choi.trace() - cplx(1, 0)) < 1e-10);
    CHECK(check_causal(cond).max_violation < 1e-8);

    // conditioning on a projector renormalises (Bayes-style)
    Mat proj_instr = kron(zero_state(), zero_state().transpose()) * 2.0; // measure 0, prepare 0
    ProcessTensorChoi posterior = conditional_pt(pt, {{0, proj_instr}});
    CHECK(std::abs(posterior.choi.trace() - cplx(1, 0)) < 1e-10);
}

TEST_CASE("unitary-restricted observables vanish on marginal sectors") {
    // for any unitary channel Choi, <P_o (x) I_i> = <I_o (x) P_i> = 0
    CounterRng rng(41);
    for (int t = 0; t < 5; ++t) {
        Mat u = unitary_instrument(random_unitary_params(rng));
        auto coeffs = pauli_coefficients(u, 2);
        for (int p = 1; p < 4; ++p) {
            CHECK(std::abs(coeffs[static_cast<size_t>(p * 4)]) < 1e-10); // P on out, I on in
            CHECK(std::abs(coeffs[static_cast<size_t>(p)]) < 1e-10);     // I on out, P on in
        }
    }
}

TEST_CASE("process tensor json round trip") {
    DilatedProcessSpec spec = heisenberg_spec(1, 1, 0.5, 43);
    ProcessTensorChoi pt = to_process_tensor(spec);
    ProcessTensorChoi back = ProcessTensorChoi::from_json(pt.to_json());
    CHECK(back.k == pt.k);
    CHECK((back.choi - pt.choi).cwiseAbs().maxCoeff() < 1e-12);
}

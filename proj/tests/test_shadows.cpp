#include <doctest.h>

#include <cmath>

#include "ptt/shadows.hpp"

using namespace ptt;

TEST_CASE("clifford table: 24 distinct unitaries") {
    const auto& table = clifford_table();
    REQUIRE(table.size() == 24);
    for (const Mat& u : table)
        CHECK((u.adjoint() * u - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    for (size_t i = 0; i < table.size(); ++i)
        for (size_t j = i + 1; j < table.size(); ++j)
            CHECK(std::abs(std::abs((table[i].adjoint() * table[j]).trace()) - 2.0) > 1e-6);
}

TEST_CASE("snapshot factors: identity frame, outcome zero") {
    // one-step, single-qubit record with all ids zero (identity Clifford)
    ShadowRecord rec;
    rec.measure_ids = {0, 0};
    rec.outcomes = {0, 0};
    rec.prep_ids = {0};
    auto factors = snapshot_qubit_factors(rec, 1, 1);
    REQUIRE(factors.size() == 3);
    for (const Mat& f : factors) {
        CHECK(std::abs(f.trace() - cplx(1, 0)) < 1e-12);
        CHECK(std::abs(f(0, 0) - cplx(2, 0)) < 1e-12);
        CHECK(std::abs(f(1, 1) - cplx(-1, 0)) < 1e-12);
    }
}

TEST_CASE("mean snapshot converges to the process tensor at the sampling rate") {
    DilatedProcessSpec spec = heisenberg_spec(1, 1, 0.9, 5);
    ProcessTensorChoi truth = to_process_tensor(spec);

    std::vector<double> errors;
    std::vector<long> sizes = {2000, 20000, 200000};
    auto records = sample_clifford_shadows(spec, 1, sizes.back(), 7);
    for (long n : sizes) {
        Mat acc = Mat::Zero(8, 8);
        for (long i = 0; i < n; ++i) acc += snapshot_clifford(records[static_cast<size_t>(i)], 1, 1);
        acc /= static_cast<double>(n);
        errors.push_back((acc - truth.choi).norm());
    }
    CHECK(errors[2] < errors[0]);
    double slope = std::log(errors[2] / errors[0]) / std::log(static_cast<double>(sizes[2]) / sizes[0]);
    CHECK(slope < -0.35);
    CHECK(slope > -0.65);
    CHECK(errors[2] < 0.05);
}

TEST_CASE("median of means: identity exact, weight-1 within epsilon") {
    DilatedProcessSpec spec = heisenberg_spec(1, 1, 0.8, 11);
    ProcessTensorChoi truth = to_process_tensor(spec);
    auto coeffs = pauli_coefficients(truth.choi, 3);

    auto records = sample_clifford_shadows(spec, 1, 20000, 13);

    std::vector<std::vector<int>> strings;
    strings.push_back({0, 0, 0});
    // all weight-1 strings
    for (int leg = 0; leg < 3; ++leg)
        for (int p = 1; p < 4; ++p) {
            std::vector<int> s(3, 0);
            s[static_cast<size_t>(leg)] = p;
            strings.push_back(s);
        }
    auto est = estimate_observables(records, 1, 1, strings);
    CHECK(est[0] == doctest::Approx(1.0).epsilon(1e-12));
    int hits = 0;
    for (size_t o = 1; o < strings.size(); ++o) {
        size_t idx = 0;
        for (int d : strings[o]) idx = idx * 4 + static_cast<size_t>(d);
        if (std::abs(est[o] - std::real(coeffs[idx])) <= 0.05) ++hits;
    }
    CHECK(hits >= 9); // 95 percent of the nine weight-1 observables at desk scale
}

TEST_CASE("causality constraint strings vanish on sampled shadows") {
    DilatedProcessSpec spec = heisenberg_spec(1, 1, 1.0, 17);
    auto records = sample_clifford_shadows(spec, 1, 30000, 19);
    auto strings = causality_constraint_paulis(1);
    auto est = estimate_observables(records, 1, 1, strings);
    for (double v : est) CHECK(std::abs(v) < 0.08);
}

TEST_CASE("disjoint marginals of a markovian truth are recovered") {
    // closed-system unitary steps: marginals are exact products
    DilatedProcessSpec spec;
    spec.d_s = 2;
    spec.d_e = 1;
    Mat zero = Mat::Zero(2, 2);
    zero(0, 0) = 1.0;
    spec.rho_se0 = zero;
    spec.unitaries = {unitary_matrix({0.9, 0.3, -0.2}), unitary_matrix({-0.7, 1.1, 0.5}),
                      unitary_matrix({1.3, -0.8, 0.1})};
    ProcessTensorChoi truth = to_process_tensor(spec);

    auto records = sample_clifford_shadows(spec, 1, 600000, 23);

    // marginal over the first step window [o_1, i_1, o_0] (legs 4..6)
    Mat m1 = mean_snapshot_marginal(records, 3, 1, {4, 5, 6});
    ProcessTensorChoi p1 = polish_marginal(m1, 1);
    Mat t1 = partial_trace(truth.choi, truth.leg_shape(), {4, 5, 6});
    CHECK(uhlmann_fidelity(p1.choi, t1) > 0.99);

    // marginal over the last step window [o_3, i_3, o_2] (legs 0..2)
    Mat m2 = mean_snapshot_marginal(records, 3, 1, {0, 1, 2});
    ProcessTensorChoi p2 = polish_marginal(m2, 1);
    Mat t2 = partial_trace(truth.choi, truth.leg_shape(), {0, 1, 2});
    CHECK(uhlmann_fidelity(p2.choi, t2) > 0.99);

    // linearity: the marginal of the mean equals the mean of the marginals
    Mat direct = Mat::Zero(8, 8);
    for (const auto& r : records) {
        auto f = snapshot_qubit_factors(r, 3, 1);
        direct += kron(kron(f[0], f[1]), f[2]);
    }
    direct /= static_cast<double>(records.size());
    CHECK((direct - m2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("general-instrument snapshots match the clifford pipeline in expectation") {
    DilatedProcessSpec spec = heisenberg_spec(1, 1, 0.7, 29);
    ProcessTensorChoi truth = to_process_tensor(spec);

    InstrumentBasis basis = ic_measure_prepare_basis(2);
    auto povm = pauli_6_povm();
    DualSet bd = dual_set(basis);
    DualSet pd = dual_set(povm);

    auto records = sample_instrument_shadows(spec, basis, povm, 60000, 31);
    Mat acc = Mat::Zero(8, 8);
    for (const auto& r : records) acc += snapshot_general(r, bd, pd, basis.settings(), 1);
    acc /= static_cast<double>(records.size());
    CHECK((acc - truth.choi).norm() < 0.15);

    // a deterministic one-element ensemble returns a constant snapshot
    InstrumentBasis single;
    single.kind = BasisKind::Custom;
    single.elements = {identity_instrument(2)};
    single.outcomes_per_setting = 1;
    DualSet sd = dual_set(single);
    auto one = sample_instrument_shadows(spec, single, povm, 3, 37);
    Mat first = snapshot_general(one[0], sd, pd, 1, 1);
    for (const auto& r : one) {
        Mat snap = snapshot_general(r, sd, pd, 1, 1);
        if (r.povm_outcome == one[0].povm_outcome)
            CHECK((snap - first).cwiseAbs().maxCoeff() < 1e-12);
    }
}

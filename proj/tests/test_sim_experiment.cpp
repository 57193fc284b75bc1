#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "ptt/sim_experiment.hpp"

using namespace ptt;

namespace {

Mat zero_state() {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = 1.0;
    return m;
}

} // namespace

TEST_CASE("identity dynamics: prepare 0, measure Z") {
    DilatedProcessSpec spec;
    spec.d_s = 2;
    spec.d_e = 2;
    spec.rho_se0 = kron(zero_state(), zero_state());
    spec.unitaries = {Mat::Identity(4, 4)};

    InstrumentSequence seq;
    seq.ops.push_back(2.0 * kron(zero_state(), Mat::Identity(2, 2)));
    seq.povm = zero_state();
    CHECK(exact_probability(spec, seq) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("closed system reduces to channel composition") {
    DilatedProcessSpec spec;
    spec.d_s = 2;
    spec.d_e = 1;
    spec.rho_se0 = zero_state();
    UnitaryParams p1{0.9, 0.2, -0.4}, p2{-1.3, 0.8, 0.1};
    spec.unitaries = {unitary_matrix(p1), unitary_matrix(p2)};

    CounterRng rng(3);
    UnitaryParams g0 = random_unitary_params(rng), g1 = random_unitary_params(rng);
    InstrumentSequence seq;
    seq.ops = {unitary_instrument(g0), unitary_instrument(g1)};
    Mat out = exact_output_state(spec, seq);

    Mat u = unitary_matrix(p2) * unitary_matrix(g1) * unitary_matrix(p1) * unitary_matrix(g0);
    Mat expect = u * zero_state() * u.adjoint();
    CHECK((out - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("probability normalisation per circuit") {
    DilatedProcessSpec spec = heisenberg_spec(2, 2, 1.1, 7);
    CounterRng rng(8);
    InstrumentSequence seq;
    for (int j = 0; j < spec.k(); ++j)
        seq.ops.push_back(unitary_instrument(random_unitary_params(rng)));
    double total = 0.0;
    for (const Mat& e : pauli_6_povm()) {
        seq.povm = e;
        total += exact_probability(spec, seq);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("dataset generation: exact mode, determinism, circuit count") {
    DilatedProcessSpec spec = heisenberg_spec(2, 1, 0.6, 11);
    std::vector<Mat> basis;
    CounterRng rng(12);
    for (int i = 0; i < 3; ++i) basis.push_back(unitary_instrument(random_unitary_params(rng)));
    auto povm = pauli_6_povm();

    TomographyDataset exact = generate_dataset(spec, basis, povm, 0, 99);
    CHECK(exact.exact_mode);
    CHECK(exact.circuits.size() == 9); // |basis|^k
    for (const auto& c : exact.circuits) {
        double total = 0.0;
        for (double v : c.counts) total += v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }

    TomographyDataset a = generate_dataset(spec, basis, povm, 500, 99);
    TomographyDataset b = generate_dataset(spec, basis, povm, 500, 99);
    for (size_t i = 0; i < a.circuits.size(); ++i) {
        double total = 0.0;
        for (size_t j = 0; j < a.circuits[i].counts.size(); ++j) {
            CHECK(a.circuits[i].counts[j] == b.circuits[i].counts[j]);
            total += a.circuits[i].counts[j];
        }
        CHECK(total == doctest::Approx(500.0));
    }
}

TEST_CASE("sampled frequencies approach probabilities at 1/sqrt(N)") {
    DilatedProcessSpec spec = heisenberg_spec(1, 1, 0.9, 13);
    std::vector<Mat> basis = {identity_instrument(2)};
    auto povm = pauli_6_povm();
    TomographyDataset exact = generate_dataset(spec, basis, povm, 0, 1);

    // chi-square-style agreement within 3 sigma for most effects
    long shots = 40000;
    TomographyDataset sampled = generate_dataset(spec, basis, povm, shots, 2);
    int within = 0, total = 0;
    for (size_t c = 0; c < exact.circuits.size(); ++c)
        for (size_t i = 0; i < povm.size(); ++i) {
            double p = exact.circuits[c].counts[i];
            double freq = sampled.circuits[c].counts[i] / static_cast<double>(shots);
            double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) / shots);
            if (std::abs(freq - p) <= 3.0 * sigma + 1e-12) ++within;
            ++total;
        }
    CHECK(within >= total * 95 / 100);
}

TEST_CASE("dataset file round trip is bit exact") {
    DilatedProcessSpec spec = heisenberg_spec(1, 1, 0.4, 21);
    std::vector<Mat> basis = {identity_instrument(2),
                              unitary_instrument({1.2, 0.3, -0.8})};
    TomographyDataset ds = generate_dataset(spec, basis, pauli_6_povm(), 256, 5);
    std::string path = "/tmp/ptt_test_dataset.jsonl";
    ds.write_jsonl(path);
    TomographyDataset back = TomographyDataset::read_jsonl(path);
    REQUIRE(back.circuits.size() == ds.circuits.size());
    CHECK(back.seed == ds.seed);
    CHECK(back.spec_hash == ds.spec_hash);
    for (size_t i = 0; i < ds.circuits.size(); ++i) {
        CHECK(back.circuits[i].mu == ds.circuits[i].mu);
        for (size_t j = 0; j < ds.circuits[i].counts.size(); ++j)
            CHECK(back.circuits[i].counts[j] == ds.circuits[i].counts[j]);
    }
    std::remove(path.c_str());
}

TEST_CASE("validation sequences agree with act() on the full process tensor") {
    DilatedProcessSpec spec = heisenberg_spec(2, 2, 0.8, 31);
    ProcessTensorChoi pt = to_process_tensor(spec);
    auto vals = validation_sequences(spec, 10, 77);
    for (const auto& v : vals) {
        CHECK(std::abs(v.exact_output.trace() - cplx(1, 0)) < 1e-10);
        CHECK((act(pt, v.seq) - v.exact_output).cwiseAbs().maxCoeff() < 1e-10);
    }

    // identity process: outputs equal the prepared input marginal
    DilatedProcessSpec idspec;
    idspec.d_s = 2;
    idspec.d_e = 2;
    idspec.rho_se0 = kron(zero_state(), zero_state());
    idspec.unitaries = {Mat::Identity(4, 4), Mat::Identity(4, 4)};
    auto idvals = validation_sequences(idspec, 5, 78);
    for (const auto& v : idvals) {
        Mat u1 = unitary_matrix(v.gates[1]) * unitary_matrix(v.gates[0]);
        Mat expect = u1 * zero_state() * u1.adjoint();
        CHECK((v.exact_output - expect).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("window process tensor matches conditioning the full tensor") {
    DilatedProcessSpec spec = heisenberg_spec(3, 1, 0.7, 41);
    ProcessTensorChoi full = to_process_tensor(spec);

    Mat filler = identity_instrument(2);
    ProcessTensorChoi window = window_process_tensor(spec, {filler}, 1, 2);
    ProcessTensorChoi cond = conditional_pt(full, {{0, filler}});
    CHECK(window.k == 2);
    CHECK((window.choi - cond.choi).cwiseAbs().maxCoeff() < 1e-9);
}

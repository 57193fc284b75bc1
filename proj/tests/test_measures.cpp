#include <doctest.h>

#include <cmath>

#include "ptt/measures.hpp"
#include "ptt/sampler.hpp"
#include "ptt/sim_experiment.hpp"

using namespace ptt;

TEST_CASE("ideal process diagnostics") {
    Mat zero = Mat::Zero(2, 2);
    zero(0, 0) = 1.0;
    Mat rho0 = kron(zero, zero);
    ProcessTensorChoi pt = from_dilation(rho0, {Mat::Identity(4, 4), Mat::Identity(4, 4)}, 2, 2);

    DiagnosticsReport report = diagnostics(pt, &pt, 60);
    CHECK(report.qmi == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(report.process_fidelity_vs_ideal == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.purity == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& entry : report.cmi) CHECK(entry.value < 1e-6);
    // the ideal chain is maximally entangled across i/o cuts but carries no
    // memory; negativity across the time cuts is positive by teleportation
    CHECK(report.process_fidelity_vs_ideal >= 0.0);
}

TEST_CASE("classically correlated fixture: N = ln 2 and CMI finds it") {
    ProcessTensorChoi pt = classically_correlated_fixture();
    CHECK(check_causal(pt).max_violation < 1e-12);
    CHECK(non_markovianity(pt) == doctest::Approx(std::log(2.0)).epsilon(1e-8));

    double cmi = cmi_causal_break(pt, 1, 100);
    CHECK(cmi == doctest::Approx(std::log(2.0)).epsilon(1e-3));
    CHECK(cmi <= qmi_time_cut(pt, 2) + 1e-9);
}

TEST_CASE("markovian process: zero memory everywhere") {
    DilatedProcessSpec spec;
    spec.d_s = 2;
    spec.d_e = 1;
    Mat zero = Mat::Zero(2, 2);
    zero(0, 0) = 1.0;
    spec.rho_se0 = zero;
    spec.unitaries = {unitary_matrix({0.7, -0.2, 1.1}), unitary_matrix({-1.4, 0.8, 0.3})};
    ProcessTensorChoi pt = to_process_tensor(spec);

    CHECK(non_markovianity(pt) < 1e-9);
    for (int slot = 0; slot < pt.k; ++slot) CHECK(cmi_causal_break(pt, slot, 60) < 1e-8);
    // no temporal entanglement across the i_2/o_1 cut for a product process
    CHECK(negativity_time_cut(pt, 2) < 1e-9);
}

TEST_CASE("swap chain is unital yet temporally entangled") {
    Mat swap = Mat::Zero(4, 4);
    swap(0, 0) = swap(3, 3) = 1.0;
    swap(1, 2) = swap(2, 1) = 1.0;
    Mat rho0 = kron(Mat(0.5 * Mat::Identity(2, 2)), Mat(0.5 * Mat::Identity(2, 2)));
    ProcessTensorChoi pt = from_dilation(rho0, {swap, swap}, 2, 2);

    // each step marginal is a unital channel (the global condition fails by
    // construction: the o_2 leg is entangled with the past)
    for (int j = 1; j <= 2; ++j) {
        Mat marg = step_marginal(pt, j);
        QuantumChannel ch = QuantumChannel::from_choi(Mat(2.0 * marg), 2, 2);
        CHECK(ch.is_unital(1e-9));
    }
    CHECK(negativity_time_cut(pt, 2) > 0.1);
}

TEST_CASE("cmi never exceeds the cut mutual information") {
    for (std::uint64_t s = 0; s < 8; ++s) {
        SamplerConfig cfg;
        cfg.k = 2;
        cfg.rank = 4;
        cfg.max_iterations = 200;
        cfg.seed = 700 + s;
        ProcessTensorChoi pt = random_process(cfg);
        for (int slot = 1; slot < pt.k; ++slot) {
            double cmi = cmi_causal_break(pt, slot, 40);
            CHECK(cmi <= qmi_time_cut(pt, slot + 1) + 1e-6);
        }
    }
}

TEST_CASE("conditioning a deterministic instrument never raises the cut QMI") {
    for (std::uint64_t s = 0; s < 6; ++s) {
        SamplerConfig cfg;
        cfg.k = 2;
        cfg.rank = 6;
        cfg.max_iterations = 200;
        cfg.seed = 800 + s;
        ProcessTensorChoi pt = random_process(cfg);
        double before = qmi_time_cut(pt, 2);
        // condition a deterministic (unitary) instrument at the first slot
        ProcessTensorChoi cond = conditional_pt(pt, {{0, unitary_instrument({0.9, 0.4, -0.7})}});
        double after = qmi_time_cut(cond, 1);
        CHECK(after <= before + 1e-8);
    }
}

TEST_CASE("report serialisation") {
    ProcessTensorChoi pt = classically_correlated_fixture();
    DiagnosticsReport report = diagnostics(pt, nullptr, 40);
    nlohmann::json j = report.to_json();
    CHECK(j.contains("qmi"));
    CHECK(j.contains("negativity"));
    CHECK(report.summary().find("qmi") != std::string::npos);
}

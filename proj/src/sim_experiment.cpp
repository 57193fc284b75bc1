#include "ptt/sim_experiment.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ptt {

void DilatedProcessSpec::validate() const {
    const int dse = d_s * d_e;
    if (rho_se0.rows() != dse || rho_se0.cols() != dse)
        throw std::invalid_argument("DilatedProcessSpec: state dimension mismatch");
    if (hermiticity_residue(rho_se0) > 1e-9 || std::abs(std::real(rho_se0.trace()) - 1.0) > 1e-9)
        throw std::invalid_argument("DilatedProcessSpec: initial state invalid");
    for (const Mat& u : unitaries)
        if (u.rows() != dse || u.cols() != dse ||
            (u.adjoint() * u - Mat::Identity(dse, dse)).cwiseAbs().maxCoeff() > 1e-10)
            throw std::invalid_argument("DilatedProcessSpec: non-unitary step");
}

nlohmann::json DilatedProcessSpec::to_json() const {
    nlohmann::json us = nlohmann::json::array();
    for (const Mat& u : unitaries) us.push_back(matrix_to_json(u));
    return {{"d_s", d_s},
            {"d_e", d_e},
            {"rho_se0", matrix_to_json(rho_se0)},
            {"unitaries", us},
            {"description", description}};
}

DilatedProcessSpec DilatedProcessSpec::from_json(const nlohmann::json& j) {
    DilatedProcessSpec spec;
    spec.d_s = j.at("d_s").get<int>();
    spec.d_e = j.at("d_e").get<int>();
    spec.rho_se0 = matrix_from_json(j.at("rho_se0"));
    for (const auto& uj : j.at("unitaries")) spec.unitaries.push_back(matrix_from_json(uj));
    spec.description = j.value("description", "");
    spec.validate();
    return spec;
}

namespace {

// Apply an instrument (trace-d^2 Choi convention) to the system part of an SE state.
Mat apply_instrument_se(const Mat& rho_se, const Mat& op_choi, int d_s, int d_e) {
    QuantumChannel ch =
        QuantumChannel::from_choi(op_choi / static_cast<double>(d_s), d_s, d_s);
    Mat out = Mat::Zero(rho_se.rows(), rho_se.cols());
    for (const Mat& kop : ch.kraus()) {
        Mat kfull = kron(kop, Mat::Identity(d_e, d_e));
        out += kfull * rho_se * kfull.adjoint();
    }
    return out;
}

} // namespace

Mat propagate_se(const DilatedProcessSpec& spec, const std::vector<Mat>& ops) {
    if (static_cast<int>(ops.size()) != spec.k())
        throw std::invalid_argument("propagate_se: one operation per step required");
    Mat rho = spec.rho_se0;
    for (int j = 0; j < spec.k(); ++j) {
        rho = apply_instrument_se(rho, ops[static_cast<size_t>(j)], spec.d_s, spec.d_e);
        const Mat& u = spec.unitaries[static_cast<size_t>(j)];
        rho = u * rho * u.adjoint();
    }
    return rho;
}

Mat exact_output_state(const DilatedProcessSpec& spec, const InstrumentSequence& seq) {
    Mat rho = propagate_se(spec, seq.ops);
    if (spec.d_e == 1) return rho;
    return partial_trace(rho, SubsystemShape{spec.d_s, spec.d_e}, {0});
}

double exact_probability(const DilatedProcessSpec& spec, const InstrumentSequence& seq) {
    Mat rho_s = exact_output_state(spec, seq);
    Mat effect = seq.povm.value_or(Mat::Identity(spec.d_s, spec.d_s));
    return std::real((effect * rho_s).trace());
}

ProcessTensorChoi to_process_tensor(const DilatedProcessSpec& spec) {
    return from_dilation(spec.rho_se0, spec.unitaries, spec.d_s, spec.d_e);
}

ProcessTensorChoi window_process_tensor(const DilatedProcessSpec& spec,
                                        const std::vector<Mat>& prefix_ops, int first_step,
                                        int num_steps) {
    if (first_step < 0 || first_step + num_steps > spec.k())
        throw std::out_of_range("window_process_tensor: window outside the process");
    if (static_cast<int>(prefix_ops.size()) != first_step)
        throw std::invalid_argument("window_process_tensor: one prefix op per earlier slot");

    Mat rho = spec.rho_se0;
    for (int j = 0; j < first_step; ++j) {
        rho = apply_instrument_se(rho, prefix_ops[static_cast<size_t>(j)], spec.d_s, spec.d_e);
        const Mat& u = spec.unitaries[static_cast<size_t>(j)];
        rho = u * rho * u.adjoint();
    }
    double tr = std::real(rho.trace());
    if (tr < 1e-12) throw std::runtime_error("window_process_tensor: zero-probability prefix");
    rho /= tr;

    std::vector<Mat> window(spec.unitaries.begin() + first_step,
                            spec.unitaries.begin() + first_step + num_steps);
    return from_dilation(rho, window, spec.d_s, spec.d_e);
}

std::vector<Mat> pauli_6_povm() {
    Vec plus(2), minus(2), iplus(2), iminus(2), zero(2), one(2);
    const double s = 1.0 / std::sqrt(2.0);
    const cplx I(0.0, 1.0);
    plus << s, s;
    minus << s, -s;
    iplus << s, I * s;
    iminus << s, -I * s;
    zero << 1.0, 0.0;
    one << 0.0, 1.0;
    std::vector<Mat> povm;
    for (const Vec& v : {plus, minus, iplus, iminus, zero, one})
        povm.push_back((v * v.adjoint()) / 3.0);
    return povm;
}

namespace {

long binomial_draw(long n, double p, CounterRng& rng) {
    p = std::min(1.0, std::max(0.0, p));
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    double mean = static_cast<double>(n) * p;
    double var = mean * (1.0 - p);
    if (n <= 2000) { // exact Bernoulli loop for small circuits
        long c = 0;
        for (long s = 0; s < n; ++s)
            if (rng.uniform() < p) ++c;
        return c;
    }
    if (var >= 100.0) { // normal regime
        double draw = mean + std::sqrt(var) * rng.normal();
        long c = std::lround(draw);
        return std::min(n, std::max(0L, c));
    }
    // rare-event regime: Poisson via product of uniforms
    double l = std::exp(-mean);
    long c = -1;
    double prod = 1.0;
    do {
        ++c;
        prod *= rng.uniform();
    } while (prod > l && c < n);
    return std::min(c, n);
}

std::vector<long> multinomial_counts(const std::vector<double>& probs, long shots,
                                     CounterRng& rng) {
    // sequential binomial decomposition keeps the draw deterministic per stream
    std::vector<long> counts(probs.size(), 0);
    long remaining = shots;
    double prob_left = 1.0;
    for (size_t i = 0; i + 1 < probs.size() && remaining > 0; ++i) {
        double p = prob_left > 1e-15 ? probs[i] / prob_left : 0.0;
        long n = binomial_draw(remaining, p, rng);
        counts[i] = n;
        remaining -= n;
        prob_left -= probs[i];
    }
    counts.back() += remaining;
    return counts;
}

} // namespace

TomographyDataset generate_dataset(const DilatedProcessSpec& spec, const InstrumentBasis& basis,
                                   const std::vector<Mat>& povm, long shots, std::uint64_t seed) {
    spec.validate();
    const int k = spec.k();
    const int nb = basis.size();
    const int outc = basis.outcomes_per_setting;
    const int nset = basis.settings();
    const int np = static_cast<int>(povm.size());
    if (nb == 0 || np == 0) throw std::invalid_argument("generate_dataset: empty basis or POVM");
    if (nb % outc != 0) throw std::invalid_argument("generate_dataset: ragged settings");

    TomographyDataset ds;
    ds.exact_mode = shots <= 0;
    ds.seed = seed;
    ds.spec_hash = json_hash(spec.to_json());
    ds.basis_hash = json_hash(basis.to_json());
    nlohmann::json pj = nlohmann::json::array();
    for (const Mat& p : povm) pj.push_back(matrix_to_json(p));
    ds.povm_hash = json_hash(pj);

    long total_elements = 1, total_settings = 1, cells = 1;
    for (int j = 0; j < k; ++j) {
        total_elements *= nb;
        total_settings *= nset;
        cells *= outc;
    }
    cells *= np;

    // probabilities for every element combination
    std::vector<std::vector<double>> probs(static_cast<size_t>(total_elements));
    for (long idx = 0; idx < total_elements; ++idx) {
        std::vector<int> mu(static_cast<size_t>(k));
        long rem = idx;
        for (int j = k - 1; j >= 0; --j) {
            mu[static_cast<size_t>(j)] = static_cast<int>(rem % nb);
            rem /= nb;
        }
        InstrumentSequence seq;
        for (int j = 0; j < k; ++j)
            seq.ops.push_back(basis.elements[static_cast<size_t>(mu[static_cast<size_t>(j)])]);
        Mat rho_s = exact_output_state(spec, seq);
        std::vector<double> row(static_cast<size_t>(np));
        for (int i = 0; i < np; ++i)
            row[static_cast<size_t>(i)] =
                std::max(0.0, std::real((povm[static_cast<size_t>(i)] * rho_s).trace()));
        probs[static_cast<size_t>(idx)] = std::move(row);
    }

    std::vector<std::vector<double>> counts(static_cast<size_t>(total_elements));
    if (ds.exact_mode) {
        counts = probs;
    } else {
        // one multinomial draw per setting combination over all of its cells
        CounterRng root(seed);
        for (long sidx = 0; sidx < total_settings; ++sidx) {
            std::vector<int> setting(static_cast<size_t>(k));
            long rem = sidx;
            for (int j = k - 1; j >= 0; --j) {
                setting[static_cast<size_t>(j)] = static_cast<int>(rem % nset);
                rem /= nset;
            }
            // cell enumeration: outcome digits (most significant = slot 0), then effect
            std::vector<double> cell_probs(static_cast<size_t>(cells));
            std::vector<long> element_of_cell(static_cast<size_t>(cells));
            long cell = 0;
            long outcome_combos = cells / np;
            for (long oc = 0; oc < outcome_combos; ++oc) {
                long element_idx = 0;
                long orem = oc;
                std::vector<int> b(static_cast<size_t>(k));
                for (int j = k - 1; j >= 0; --j) {
                    b[static_cast<size_t>(j)] = static_cast<int>(orem % outc);
                    orem /= outc;
                }
                for (int j = 0; j < k; ++j)
                    element_idx = element_idx * nb + setting[static_cast<size_t>(j)] * outc +
                                  b[static_cast<size_t>(j)];
                for (int i = 0; i < np; ++i) {
                    cell_probs[static_cast<size_t>(cell)] =
                        probs[static_cast<size_t>(element_idx)][static_cast<size_t>(i)];
                    element_of_cell[static_cast<size_t>(cell)] = element_idx * np + i;
                    ++cell;
                }
            }
            CounterRng stream = root.split(static_cast<std::uint64_t>(sidx));
            auto drawn = multinomial_counts(cell_probs, shots, stream);
            for (long c = 0; c < cells; ++c) {
                long eidx = element_of_cell[static_cast<size_t>(c)] / np;
                long i = element_of_cell[static_cast<size_t>(c)] % np;
                auto& row = counts[static_cast<size_t>(eidx)];
                if (row.empty()) row.assign(static_cast<size_t>(np), 0.0);
                row[static_cast<size_t>(i)] = static_cast<double>(drawn[static_cast<size_t>(c)]);
            }
        }
    }

    for (long idx = 0; idx < total_elements; ++idx) {
        CircuitData circ;
        circ.mu.resize(static_cast<size_t>(k));
        long rem = idx;
        for (int j = k - 1; j >= 0; --j) {
            circ.mu[static_cast<size_t>(j)] = static_cast<int>(rem % nb);
            rem /= nb;
        }
        circ.counts = counts[static_cast<size_t>(idx)];
        if (circ.counts.empty()) circ.counts.assign(static_cast<size_t>(np), 0.0);
        circ.shots = ds.exact_mode ? 0.0 : static_cast<double>(shots);
        ds.circuits.push_back(std::move(circ));
    }
    return ds;
}

TomographyDataset generate_dataset(const DilatedProcessSpec& spec, const std::vector<Mat>& basis,
                                   const std::vector<Mat>& povm, long shots, std::uint64_t seed) {
    InstrumentBasis wrapped;
    wrapped.kind = BasisKind::Custom;
    wrapped.elements = basis;
    wrapped.outcomes_per_setting = 1;
    return generate_dataset(spec, wrapped, povm, shots, seed);
}

UnitaryParams random_unitary_params(CounterRng& rng) {
    UnitaryParams p;
    p.theta = 2.0 * std::acos(std::sqrt(rng.uniform()));
    p.phi = 2.0 * M_PI * rng.uniform() - M_PI;
    p.lambda = 2.0 * M_PI * rng.uniform() - M_PI;
    return p;
}

std::vector<ValidationSequence> validation_sequences(const DilatedProcessSpec& spec, int count,
                                                     std::uint64_t seed) {
    std::vector<ValidationSequence> out;
    CounterRng root(seed);
    for (int i = 0; i < count; ++i) {
        CounterRng rng = root.split(static_cast<std::uint64_t>(i));
        ValidationSequence v;
        for (int j = 0; j < spec.k(); ++j) {
            UnitaryParams p = random_unitary_params(rng);
            v.gates.push_back(p);
            v.seq.ops.push_back(unitary_instrument(p));
        }
        v.exact_output = exact_output_state(spec, v.seq);
        out.push_back(std::move(v));
    }
    return out;
}

std::string json_hash(const nlohmann::json& j) {
    std::string dump = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : dump) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

void TomographyDataset::write_jsonl(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_jsonl: cannot open " + path);
    nlohmann::json header = {{"spec_hash", spec_hash}, {"basis_hash", basis_hash},
                             {"povm_hash", povm_hash}, {"seed", seed},
                             {"exact_mode", exact_mode}};
    f << header.dump() << "\n";
    for (const auto& c : circuits) {
        nlohmann::json rec = {{"mu", c.mu}, {"counts", c.counts}, {"shots", c.shots}};
        f << rec.dump() << "\n";
    }
}

TomographyDataset TomographyDataset::read_jsonl(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_jsonl: cannot open " + path);
    TomographyDataset ds;
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("read_jsonl: empty file " + path);
    nlohmann::json header = nlohmann::json::parse(line);
    ds.spec_hash = header.value("spec_hash", "");
    ds.basis_hash = header.value("basis_hash", "");
    ds.povm_hash = header.value("povm_hash", "");
    ds.seed = header.value("seed", 0ULL);
    ds.exact_mode = header.value("exact_mode", false);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        nlohmann::json rec = nlohmann::json::parse(line);
        CircuitData c;
        c.mu = rec.at("mu").get<std::vector<int>>();
        c.counts = rec.at("counts").get<std::vector<double>>();
        c.shots = rec.at("shots").get<double>();
        ds.circuits.push_back(std::move(c));
    }
    return ds;
}

DilatedProcessSpec heisenberg_spec(int k, int d_e_qubits, double coupling, std::uint64_t seed) {
    DilatedProcessSpec spec;
    spec.d_s = 2;
    spec.d_e = 1 << d_e_qubits;
    spec.description = "random Heisenberg-type coupling";
    CounterRng rng(seed);

    // environment starts in a random pure-ish state mixed with identity
    Mat env = Mat::Zero(spec.d_e, spec.d_e);
    Vec v(spec.d_e);
    for (int i = 0; i < spec.d_e; ++i) v(i) = cplx(rng.normal(), rng.normal());
    v.normalize();
    env = 0.8 * (v * v.adjoint()) + 0.2 * Mat::Identity(spec.d_e, spec.d_e) / spec.d_e;

    Mat zero = Mat::Zero(2, 2);
    zero(0, 0) = 1.0;
    spec.rho_se0 = kron(zero, env);

    const int dse = 2 * spec.d_e;
    for (int step = 0; step < k; ++step) {
        // Hermitian generator: sum of Pauli x (random env Hermitian) couplings
        Mat h = Mat::Zero(dse, dse);
        for (int a = 1; a <= 3; ++a) {
            Mat raw(spec.d_e, spec.d_e);
            for (int i = 0; i < spec.d_e; ++i)
                for (int j = 0; j < spec.d_e; ++j) raw(i, j) = cplx(rng.normal(), rng.normal());
            Mat he = 0.5 * (raw + raw.adjoint());
            h += coupling * kron(pauli_string({a}), he / std::sqrt(static_cast<double>(spec.d_e)));
        }
        // local system drive keeps the fixture generic
        h += 0.7 * kron(pauli_string({1}), Mat::Identity(spec.d_e, spec.d_e));
        HermitianEig eig = eig_hermitian(h, 1e-8);
        Mat u = Mat::Zero(dse, dse);
        const cplx I(0.0, 1.0);
        for (int i = 0; i < dse; ++i)
            u += std::exp(-I * eig.eigenvalues(i)) * eig.eigenvectors.col(i) *
                 eig.eigenvectors.col(i).adjoint();
        spec.unitaries.push_back(u);
    }
    spec.validate();
    return spec;
}

Mat embed_two_qubit(const Mat& gate, int qa, int qb, int n_qubits) {
    if (gate.rows() != 4 || gate.cols() != 4) throw std::invalid_argument("embed_two_qubit: 4x4 gate");
    if (qa == qb || qa < 0 || qb < 0 || qa >= n_qubits || qb >= n_qubits)
        throw std::invalid_argument("embed_two_qubit: bad qubit indices");
    const int n = 1 << n_qubits;
    Mat full = kron(gate, Mat::Identity(n / 4, n / 4));
    // factors currently ordered [qa, qb, rest...]; permute back to 0..n-1
    std::vector<int> order; // order[p] = which factor of `full` sits at position p
    std::vector<int> rest;
    for (int q = 0; q < n_qubits; ++q)
        if (q != qa && q != qb) rest.push_back(q);
    order.assign(static_cast<size_t>(n_qubits), -1);
    order[static_cast<size_t>(qa)] = 0;
    order[static_cast<size_t>(qb)] = 1;
    for (size_t i = 0; i < rest.size(); ++i)
        order[static_cast<size_t>(rest[i])] = static_cast<int>(i) + 2;
    return permute_subsystems(full, SubsystemShape::uniform(n_qubits, 2), order);
}

DilatedProcessSpec two_step_memory_spec() {
    DilatedProcessSpec spec;
    spec.d_s = 2;
    spec.d_e = 8; // record qubit plus two fresh replacement qubits
    spec.description = "two-step memory via record and delayed kick";

    Mat zero = Mat::Zero(2, 2);
    zero(0, 0) = 1.0;
    Mat plus = Mat::Constant(2, 2, 0.5);
    // S, record qubit, |+> replacement (gates can steer the record), |0>
    // replacement (the kick acts on a state gates can still move)
    spec.rho_se0 = kron(kron(kron(zero, zero), plus), zero);

    Mat swap_g = Mat::Zero(4, 4);
    swap_g(0, 0) = swap_g(3, 3) = 1.0;
    swap_g(1, 2) = swap_g(2, 1) = 1.0;
    Mat cnot = Mat::Zero(4, 4); // control first factor
    cnot(0, 0) = cnot(1, 1) = 1.0;
    cnot(2, 3) = cnot(3, 2) = 1.0;

    // qubits: 0 = S, 1 = record, 2 and 3 = fresh mixed ancillas
    Mat u1 = embed_two_qubit(swap_g, 0, 2, 4);                  // replace S with a fresh qubit
    Mat record = embed_two_qubit(cnot, 0, 1, 4);                // copy Z info into the record
    Mat u2 = embed_two_qubit(swap_g, 0, 3, 4) * record;         // then replace S again
    Mat u3 = embed_two_qubit(cnot, 1, 0, 4);                    // kick conditioned on the record
    spec.unitaries = {u1, u2, u3};
    spec.validate();
    return spec;
}

DilatedProcessSpec dephasing_zz_spec(int k, double theta) {
    DilatedProcessSpec spec;
    spec.d_s = 2;
    spec.d_e = 2;
    spec.description = "pure dephasing ZZ coupling";
    Mat plus = Mat::Constant(2, 2, 0.5);
    Mat zero = Mat::Zero(2, 2);
    zero(0, 0) = 1.0;
    spec.rho_se0 = kron(zero, plus);

    Mat zz = kron(pauli_string({3}), pauli_string({3}));
    const cplx I(0.0, 1.0);
    Mat u = Mat::Identity(4, 4) * std::cos(theta) - I * std::sin(theta) * zz;
    for (int j = 0; j < k; ++j) spec.unitaries.push_back(u);
    spec.validate();
    return spec;
}

} // namespace ptt

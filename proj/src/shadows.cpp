#include "ptt/shadows.hpp"

#include "ptt/process_tensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace ptt {

namespace {

bool projectively_equal(const Mat& a, const Mat& b) {
    return std::abs(std::abs((a.adjoint() * b).trace()) - 2.0) < 1e-9;
}

std::vector<Mat> build_clifford_table() {
    const cplx I(0.0, 1.0);
    Mat h(2, 2), s(2, 2);
    h << 1, 1, 1, -1;
    h /= std::sqrt(2.0);
    s << 1, 0, 0, I;

    std::vector<Mat> table = {Mat::Identity(2, 2)};
    // breadth-first closure over the generators, up to global phase
    for (size_t head = 0; head < table.size() && table.size() < 24; ++head) {
        for (const Mat* g : {&h, &s}) {
            Mat candidate = (*g) * table[head];
            bool known = false;
            for (const Mat& t : table)
                if (projectively_equal(candidate, t)) {
                    known = true;
                    break;
                }
            if (!known) table.push_back(candidate);
        }
    }
    if (table.size() != 24) throw std::logic_error("clifford_table: closure failed");
    return table;
}

} // namespace

const std::vector<Mat>& clifford_table() {
    static const std::vector<Mat> table = build_clifford_table();
    return table;
}

std::vector<ShadowRecord> sample_clifford_shadows(const DilatedProcessSpec& spec,
                                                  int register_qubits, long n,
                                                  std::uint64_t seed) {
    spec.validate();
    const int r = register_qubits;
    if (spec.d_s != (1 << r))
        throw std::invalid_argument("sample_clifford_shadows: register size mismatch");
    const int k = spec.k();
    const auto& cliffords = clifford_table();

    Mat zero = Mat::Zero(2, 2);
    zero(0, 0) = 1.0;

    std::vector<ShadowRecord> records;
    records.reserve(static_cast<size_t>(n));
    CounterRng root(seed);
    for (long shot = 0; shot < n; ++shot) {
        CounterRng rng = root.split(static_cast<std::uint64_t>(shot));
        ShadowRecord rec;
        Mat rho = spec.rho_se0; // on (register (x) E)

        for (int time = 0; time <= k; ++time) {
            // measure each register qubit in a random Clifford frame
            Mat prep_all(1, 1);
            prep_all(0, 0) = 1.0;
            for (int q = 0; q < r; ++q) {
                int mid = static_cast<int>(rng.uniform_int(24));
                const Mat& u = cliffords[static_cast<size_t>(mid)];
                // effect for outcome x on qubit q: u^dag |x><x| u
                Mat e0 = u.adjoint() * zero * u;
                // embed on the full (register x env) space
                int pre = 1 << q;
                int post = (spec.d_s / (2 * pre)) * spec.d_e;
                Mat e_full = kron(kron(Mat::Identity(pre, pre), e0),
                                  Mat::Identity(post, post));
                double p0 = std::real((e_full * rho).trace());
                double total = std::real(rho.trace());
                double prob0 = total > 1e-15 ? std::min(1.0, std::max(0.0, p0 / total)) : 0.5;
                int x = rng.uniform() < prob0 ? 0 : 1;
                Mat proj = x == 0 ? e0 : Mat(Mat::Identity(2, 2) - e0);
                Mat proj_full = kron(kron(Mat::Identity(pre, pre), proj),
                                     Mat::Identity(post, post));
                rho = proj_full * rho * proj_full;
                double tr = std::real(rho.trace());
                if (tr > 1e-15) rho /= tr;
                rec.measure_ids.push_back(static_cast<std::uint8_t>(mid));
                rec.outcomes.push_back(static_cast<std::uint8_t>(x));
            }
            if (time == k) break;
            // re-prepare the register in random Clifford states
            for (int q = 0; q < r; ++q) {
                int pid = static_cast<int>(rng.uniform_int(24));
                const Mat& u = cliffords[static_cast<size_t>(pid)];
                prep_all = kron(prep_all, Mat(u * zero * u.adjoint()));
                rec.prep_ids.push_back(static_cast<std::uint8_t>(pid));
            }
            if (spec.d_e == 1) {
                rho = prep_all * std::real(rho.trace());
            } else {
                Mat env = partial_trace(rho, SubsystemShape{spec.d_s, spec.d_e}, {1});
                rho = kron(prep_all, env);
            }
            const Mat& step = spec.unitaries[static_cast<size_t>(time)];
            rho = step * rho * step.adjoint();
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<Mat> snapshot_qubit_factors(const ShadowRecord& record, int k, int register_qubits) {
    const int r = register_qubits;
    const auto& cliffords = clifford_table();
    Mat zero = Mat::Zero(2, 2);
    zero(0, 0) = 1.0;
    Mat one = Mat::Zero(2, 2);
    one(1, 1) = 1.0;

    std::vector<Mat> factors;
    factors.reserve(static_cast<size_t>((2 * k + 1) * r));
    // legs in order [o_k, i_k, o_{k-1}, ..., i_1, o_0]
    for (int leg = 0; leg < 2 * k + 1; ++leg) {
        bool is_output = leg % 2 == 0;
        int time = k - (leg + 1) / 2; // o_j: j = k - leg/2; i_j: j = k - (leg-1)/2
        for (int q = 0; q < r; ++q) {
            if (is_output) {
                int j = k - leg / 2;
                size_t idx = static_cast<size_t>(j * r + q);
                const Mat& u = cliffords[record.measure_ids[idx]];
                const Mat& out = record.outcomes[idx] == 0 ? zero : one;
                Mat effect = u.adjoint() * out * u;
                factors.push_back(3.0 * effect - Mat::Identity(2, 2));
            } else {
                size_t idx = static_cast<size_t>(time * r + q);
                const Mat& u = cliffords[record.prep_ids[idx]];
                Mat prepared_t = (u * zero * u.adjoint()).transpose();
                factors.push_back(3.0 * prepared_t - Mat::Identity(2, 2));
            }
        }
    }
    return factors;
}

Mat snapshot_clifford(const ShadowRecord& record, int k, int register_qubits) {
    return kron_all(snapshot_qubit_factors(record, k, register_qubits));
}

std::vector<int> qubit_legs(int k, int register_qubits, int qubit) {
    std::vector<int> keep;
    for (int leg = 0; leg < 2 * k + 1; ++leg) keep.push_back(leg * register_qubits + qubit);
    return keep;
}

std::vector<double> estimate_observables(const std::vector<ShadowRecord>& records, int k,
                                         int register_qubits,
                                         const std::vector<std::vector<int>>& strings,
                                         const MedianOfMeansConfig& cfg) {
    if (records.empty()) throw std::invalid_argument("estimate_observables: no snapshots");
    const size_t sites = static_cast<size_t>((2 * k + 1) * register_qubits);
    for (const auto& s : strings)
        if (s.size() != sites) throw std::invalid_argument("estimate_observables: bad string");

    int groups = cfg.groups;
    if (groups <= 0)
        groups = static_cast<int>(
            std::ceil(2.0 * std::log(2.0 * static_cast<double>(strings.size()) / cfg.delta)));
    groups = std::max(1, std::min<int>(groups, static_cast<int>(records.size())));
    const size_t group_size = records.size() / static_cast<size_t>(groups);

    auto paulis = pauli_basis(1, false);
    std::vector<std::vector<double>> group_means(
        strings.size(), std::vector<double>(static_cast<size_t>(groups), 0.0));

    for (size_t rec_idx = 0; rec_idx < static_cast<size_t>(groups) * group_size; ++rec_idx) {
        auto factors = snapshot_qubit_factors(records[rec_idx], k, register_qubits);
        // per-site trace table Tr[P factor]
        std::vector<std::array<double, 4>> tr(sites);
        for (size_t s = 0; s < sites; ++s)
            for (int p = 0; p < 4; ++p)
                tr[s][static_cast<size_t>(p)] = std::real((paulis[static_cast<size_t>(p)] * factors[s]).trace());
        size_t g = rec_idx / group_size;
        for (size_t o = 0; o < strings.size(); ++o) {
            double v = 1.0;
            for (size_t s = 0; s < sites; ++s) v *= tr[s][static_cast<size_t>(strings[o][s])];
            group_means[o][g] += v;
        }
    }
    std::vector<double> out(strings.size());
    for (size_t o = 0; o < strings.size(); ++o) {
        auto& means = group_means[o];
        for (double& v : means) v /= static_cast<double>(group_size);
        std::sort(means.begin(), means.end());
        size_t m = means.size();
        out[o] = m % 2 == 1 ? means[m / 2] : 0.5 * (means[m / 2 - 1] + means[m / 2]);
    }
    return out;
}

Mat mean_snapshot_marginal(const std::vector<ShadowRecord>& records, int k, int register_qubits,
                           const std::vector<int>& keep) {
    if (records.empty()) throw std::invalid_argument("mean_snapshot_marginal: no snapshots");
    int dim = 1 << keep.size();
    Mat acc = Mat::Zero(dim, dim);
    for (const auto& rec : records) {
        auto factors = snapshot_qubit_factors(rec, k, register_qubits);
        Mat part = factors[static_cast<size_t>(keep[0])];
        for (size_t i = 1; i < keep.size(); ++i)
            part = kron(part, factors[static_cast<size_t>(keep[i])]);
        acc += part; // dropped factors have unit trace
    }
    return acc / static_cast<double>(records.size());
}

namespace {

Mat threshold_pauli_coefficients(const Mat& sym, int legs, double threshold_scale) {
    auto coeffs = pauli_coefficients(sym, legs);
    Mat rebuilt = Mat::Zero(sym.rows(), sym.cols());
    const double norm = std::pow(2.0, static_cast<double>(legs));
    for (size_t idx = 0; idx < coeffs.size(); ++idx) {
        int weight = 0;
        size_t rem = idx;
        std::vector<int> digits(static_cast<size_t>(legs));
        for (int l = legs - 1; l >= 0; --l) {
            digits[static_cast<size_t>(l)] = static_cast<int>(rem % 4);
            if (rem % 4 != 0) ++weight;
            rem /= 4;
        }
        if (weight > 0 &&
            std::abs(coeffs[idx]) < threshold_scale * std::sqrt(std::pow(3.0, weight)))
            continue;
        rebuilt += (coeffs[idx] / norm) * pauli_string(digits);
    }
    return rebuilt;
}

} // namespace

ProcessTensorChoi polish_marginal(const Mat& mean, int steps, double threshold_scale) {
    const int legs = 2 * steps + 1;
    Mat sym = 0.5 * (mean + Mat(mean.adjoint()));
    AffineConstraintSystem sys = AffineConstraintSystem::causality_constraints(steps, 2);
    ProjectionOptions opts;
    opts.tolerance = 1e-9;

    if (threshold_scale <= 0.0) {
        ProjectionReport rep = project_psd_affine(sym, sys, opts);
        return ProcessTensorChoi{steps, 2, rep.projected};
    }
    // alternate denoising with the physical projection: the projection's small
    // spill-over correlations fall back under the threshold and vanish
    Mat current = sym;
    Eigen::VectorXd dual;
    for (int round = 0; round < 4; ++round) {
        current = threshold_pauli_coefficients(current, legs, threshold_scale);
        ProjectionReport rep = project_psd_affine(current, sys, opts, &dual);
        current = rep.projected;
    }
    current = threshold_pauli_coefficients(current, legs, threshold_scale);
    // final light projection restores exact positivity after the last threshold
    ProjectionReport rep = project_psd_affine(current, sys, opts, &dual);
    return ProcessTensorChoi{steps, 2, rep.projected};
}

namespace {

// the six Pauli eigenstates; index/2 names the basis (X, Y, Z), index%2 the sign
std::vector<Mat> pauli_eigenstates() {
    const double s = 1.0 / std::sqrt(2.0);
    const cplx I(0.0, 1.0);
    std::vector<Vec> vs;
    Vec v(2);
    v << s, s;
    vs.push_back(v);
    v << s, -s;
    vs.push_back(v);
    v << s, I * s;
    vs.push_back(v);
    v << s, -I * s;
    vs.push_back(v);
    v << 1.0, 0.0;
    vs.push_back(v);
    v << 0.0, 1.0;
    vs.push_back(v);
    std::vector<Mat> out;
    for (const Vec& w : vs) out.push_back(w * w.adjoint());
    return out;
}

int match_state(const Mat& rho, const std::vector<Mat>& states) {
    for (size_t i = 0; i < states.size(); ++i)
        if ((rho - states[i]).cwiseAbs().maxCoeff() < 1e-9) return static_cast<int>(i);
    throw std::logic_error("match_state: not a Pauli eigenstate");
}

} // namespace

namespace {

// product of the physically-projected step marginals; PSD and causal by
// construction, so a Markovian truth needs no further projection
Mat physical_marginal_product(const Mat& marg, int steps) {
    ProcessTensorChoi pt{steps, 2, marg / std::real(marg.trace())};
    AffineConstraintSystem channel_sys = AffineConstraintSystem::state_constraints(4, 1.0);
    Mat prod(0, 0);
    for (int j = steps; j >= 1; --j) {
        Mat block = step_marginal(pt, j);
        // a physical step marginal is a PSD trace-one state with identity input
        ProjectionOptions opts;
        AffineConstraintSystem tp = AffineConstraintSystem::causality_constraints(0 + 1, 2);
        // project on (o_j, i_j, dummy)? cheaper: PSD-project and renormalise,
        // then enforce the unit input marginal by construction below
        Mat psd = project_psd(block);
        psd /= std::real(psd.trace());
        prod = prod.size() == 0 ? psd : Mat(kron(prod, psd));
    }
    Mat rho0 = partial_trace(pt.choi, pt.leg_shape(), {pt.num_legs() - 1});
    Mat rho_psd = project_psd(rho0);
    rho_psd /= std::real(rho_psd.trace());
    prod = prod.size() == 0 ? rho_psd : Mat(kron(prod, rho_psd));
    return prod;
}

std::vector<cplx> product_of_marginal_coefficients(const Mat& marg, int steps) {
    return pauli_coefficients(physical_marginal_product(marg, steps), 2 * steps + 1);
}

} // namespace

double marginal_memory_filter(const std::vector<ShadowRecord>& records, int k,
                              int register_qubits, int qubit, double z_score, int groups) {
    const int legs = 2 * k + 1;
    const size_t n_coeff = static_cast<size_t>(1) << (2 * legs);
    std::vector<int> keep = qubit_legs(k, register_qubits, qubit);

    groups = std::max(2, std::min<int>(groups, static_cast<int>(records.size() / 64)));
    const size_t group_size = records.size() / static_cast<size_t>(groups);

    // per-group mismatch between the estimate and the product of its marginals
    std::vector<std::vector<double>> group_mismatch(
        static_cast<size_t>(groups), std::vector<double>(n_coeff, 0.0));
    Mat total = Mat::Zero(1 << legs, 1 << legs);
    for (int g = 0; g < groups; ++g) {
        std::vector<ShadowRecord> slice(records.begin() + g * group_size,
                                        records.begin() + (g + 1) * group_size);
        Mat marg = mean_snapshot_marginal(slice, k, register_qubits, keep);
        total += marg;
        auto c_est = pauli_coefficients(marg, legs);
        auto c_prod = product_of_marginal_coefficients(marg, k);
        for (size_t i = 0; i < n_coeff; ++i)
            group_mismatch[static_cast<size_t>(g)][i] = std::real(c_est[i] - c_prod[i]);
    }
    total /= static_cast<double>(groups);

    auto c_est = pauli_coefficients(total, legs);
    auto c_prod = product_of_marginal_coefficients(total, k);

    // keep a mismatch only when the groups agree it is real
    int kept = 0;
    Mat filtered = Mat::Zero(total.rows(), total.cols());
    const double norm = std::pow(2.0, static_cast<double>(legs));
    std::vector<int> digits(static_cast<size_t>(legs));
    for (size_t i = 0; i < n_coeff; ++i) {
        double mean = 0.0;
        for (int g = 0; g < groups; ++g) mean += group_mismatch[static_cast<size_t>(g)][i];
        mean /= groups;
        double var = 0.0;
        for (int g = 0; g < groups; ++g) {
            double d = group_mismatch[static_cast<size_t>(g)][i] - mean;
            var += d * d;
        }
        double stderr_mean = std::sqrt(var / (groups - 1.0) / groups) + 1e-12;

        size_t rem = i;
        int weight = 0;
        for (int l = legs - 1; l >= 0; --l) {
            digits[static_cast<size_t>(l)] = static_cast<int>(rem % 4);
            if (rem % 4 != 0) ++weight;
            rem /= 4;
        }
        // the empirical scatter of nonlinear group products is heavy-tailed;
        // floor the error bar at the shadow-variance model
        double theory = std::sqrt(std::pow(3.0, weight) /
                                  static_cast<double>(groups * group_size));
        stderr_mean = std::max(stderr_mean, theory);
        cplx coeff = c_prod[i];
        double mismatch = std::real(c_est[i] - c_prod[i]);
        bool significant = std::abs(mismatch) > z_score * stderr_mean;
        if (significant) coeff += mismatch;
        kept += significant ? 1 : 0;
        if (std::abs(coeff) > 1e-14) filtered += (coeff / norm) * pauli_string(digits);
    }
    if (kept == 0) return 0.0; // exactly the product of its marginals
    ProcessTensorChoi polished = polish_marginal(filtered, k, 0.0);
    return non_markovianity(polished);
}

ProcessTensorChoi shadow_marginal_mle(const std::vector<ShadowRecord>& records, int k,
                                      int register_qubits, int qubit, const MleConfig& cfg) {
    const auto& cliffords = clifford_table();
    auto states = pauli_eigenstates();
    Mat zero = Mat::Zero(2, 2);
    zero(0, 0) = 1.0;

    // per-Clifford lookups: prepared state index, and (basis, outcome) per x
    std::vector<int> prep_state(24);
    std::vector<std::array<int, 2>> effect_state(24);
    for (int c = 0; c < 24; ++c) {
        const Mat& u = cliffords[static_cast<size_t>(c)];
        prep_state[static_cast<size_t>(c)] = match_state(Mat(u * zero * u.adjoint()), states);
        for (int x = 0; x < 2; ++x) {
            Mat out = Mat::Zero(2, 2);
            out(x, x) = 1.0;
            effect_state[static_cast<size_t>(c)][static_cast<size_t>(x)] =
                match_state(Mat(u.adjoint() * out * u), states);
        }
    }

    // slot instrument basis: 18 settings (6 preparations x 3 bases), 2 outcomes
    InstrumentBasis basis;
    basis.kind = BasisKind::IcMeasurePrepare;
    basis.outcomes_per_setting = 2;
    for (int prep = 0; prep < 6; ++prep)
        for (int b = 0; b < 3; ++b)
            for (int x = 0; x < 2; ++x)
                basis.elements.push_back(
                    2.0 * kron(states[static_cast<size_t>(prep)],
                               states[static_cast<size_t>(2 * b + x)].transpose()));

    auto povm = pauli_6_povm(); // effects states[i]/3, same index order

    // bin the records: element combo per slot plus final effect index
    const int nb = basis.size();
    long combos = 1;
    for (int j = 0; j < k; ++j) combos *= nb;
    std::vector<std::vector<double>> counts(static_cast<size_t>(combos));
    std::vector<double> group_shots(static_cast<size_t>(combos), 0.0);

    for (const auto& rec : records) {
        long combo = 0;
        for (int slot = 0; slot < k; ++slot) {
            // slot j's instrument: measurement at t_j, preparation feeding i_{j+1}
            size_t midx = static_cast<size_t>(slot * register_qubits + qubit);
            size_t pidx = static_cast<size_t>(slot * register_qubits + qubit);
            int m = rec.measure_ids[midx];
            int x = rec.outcomes[midx];
            int eff = effect_state[static_cast<size_t>(m)][static_cast<size_t>(x)];
            int prep = prep_state[static_cast<size_t>(rec.prep_ids[pidx])];
            int element = prep * 6 + eff; // = (prep*3 + basis)*2 + outcome
            combo = combo * nb + element;
        }
        size_t fidx = static_cast<size_t>(k * register_qubits + qubit);
        int fm = rec.measure_ids[fidx];
        int fx = rec.outcomes[fidx];
        int final_effect = effect_state[static_cast<size_t>(fm)][static_cast<size_t>(fx)];
        auto& row = counts[static_cast<size_t>(combo)];
        if (row.empty()) row.assign(povm.size(), 0.0);
        row[static_cast<size_t>(final_effect)] += 1.0;
    }
    // shots per setting group: outcomes within (setting combo x final basis)
    // share the group; frequency weighting only needs a consistent total, so
    // use the total count of the element combo's setting group
    std::vector<double> setting_totals(static_cast<size_t>(combos), 0.0);
    for (long c = 0; c < combos; ++c) {
        if (counts[static_cast<size_t>(c)].empty()) continue;
        double total = 0.0;
        for (double v : counts[static_cast<size_t>(c)]) total += v;
        // accumulate onto the setting-combo key (element / 2 per slot)
        long key = 0;
        long rem = c;
        std::vector<int> els(static_cast<size_t>(k));
        for (int j = k - 1; j >= 0; --j) {
            els[static_cast<size_t>(j)] = static_cast<int>(rem % nb);
            rem /= nb;
        }
        for (int j = 0; j < k; ++j) key = key * (nb / 2) + els[static_cast<size_t>(j)] / 2;
        setting_totals[static_cast<size_t>(key)] += total;
    }

    TomographyDataset data;
    data.exact_mode = false;
    for (long c = 0; c < combos; ++c) {
        if (counts[static_cast<size_t>(c)].empty()) continue;
        CircuitData circ;
        circ.mu.resize(static_cast<size_t>(k));
        long rem = c;
        for (int j = k - 1; j >= 0; --j) {
            circ.mu[static_cast<size_t>(j)] = static_cast<int>(rem % nb);
            rem /= nb;
        }
        long key = 0;
        for (int j = 0; j < k; ++j) key = key * (nb / 2) + circ.mu[static_cast<size_t>(j)] / 2;
        circ.counts = counts[static_cast<size_t>(c)];
        circ.shots = setting_totals[static_cast<size_t>(key)];
        data.circuits.push_back(std::move(circ));
    }

    return mle_pgdb(data, basis, povm, k, cfg).estimate;
}

std::vector<GeneralShadowRecord> sample_instrument_shadows(const DilatedProcessSpec& spec,
                                                           const InstrumentBasis& basis,
                                                           const std::vector<Mat>& povm, long n,
                                                           std::uint64_t seed) {
    spec.validate();
    const int k = spec.k();
    const int outc = basis.outcomes_per_setting;
    const int nset = basis.settings();

    std::vector<GeneralShadowRecord> records;
    records.reserve(static_cast<size_t>(n));
    CounterRng root(seed);
    for (long shot = 0; shot < n; ++shot) {
        CounterRng rng = root.split(static_cast<std::uint64_t>(shot));
        GeneralShadowRecord rec;
        Mat rho = spec.rho_se0;
        for (int slot = 0; slot < k; ++slot) {
            int setting = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(nset)));
            // sample the outcome of this instrument given the current state
            std::vector<Mat> branches;
            std::vector<double> weights;
            double total = 0.0;
            for (int b = 0; b < outc; ++b) {
                const Mat& op = basis.elements[static_cast<size_t>(setting * outc + b)];
                QuantumChannel ch =
                    QuantumChannel::from_choi(op / spec.d_s, spec.d_s, spec.d_s);
                Mat out = Mat::Zero(rho.rows(), rho.cols());
                for (const Mat& kop : ch.kraus()) {
                    Mat kfull = kron(kop, Mat::Identity(spec.d_e, spec.d_e));
                    out += kfull * rho * kfull.adjoint();
                }
                branches.push_back(out);
                double w = std::max(0.0, std::real(out.trace()));
                weights.push_back(w);
                total += w;
            }
            double pick = rng.uniform() * total;
            int chosen = 0;
            double cum = 0.0;
            for (int b = 0; b < outc; ++b) {
                cum += weights[static_cast<size_t>(b)];
                if (pick <= cum) {
                    chosen = b;
                    break;
                }
            }
            rec.element_ids.push_back(setting * outc + chosen);
            rho = branches[static_cast<size_t>(chosen)];
            double tr = std::real(rho.trace());
            if (tr > 1e-15) rho /= tr;
            const Mat& u = spec.unitaries[static_cast<size_t>(slot)];
            rho = u * rho * u.adjoint();
        }
        // terminal POVM
        Mat rho_s = spec.d_e == 1 ? rho : partial_trace(rho, SubsystemShape{spec.d_s, spec.d_e}, {0});
        double pick = rng.uniform();
        double cum = 0.0;
        int outcome = static_cast<int>(povm.size()) - 1;
        for (size_t i = 0; i < povm.size(); ++i) {
            cum += std::max(0.0, std::real((povm[i] * rho_s).trace()));
            if (pick <= cum) {
                outcome = static_cast<int>(i);
                break;
            }
        }
        rec.povm_outcome = outcome;
        records.push_back(std::move(rec));
    }
    return records;
}

Mat snapshot_general(const GeneralShadowRecord& record, const DualSet& basis_duals,
                     const DualSet& povm_duals, int settings, int k) {
    Mat snap = povm_duals.duals[static_cast<size_t>(record.povm_outcome)];
    for (int slot = k - 1; slot >= 0; --slot)
        snap = kron(snap, Mat(basis_duals.duals[static_cast<size_t>(
                                                    record.element_ids[static_cast<size_t>(slot)])]
                                  .transpose()));
    return std::pow(static_cast<double>(settings), k) * snap;
}

} // namespace ptt

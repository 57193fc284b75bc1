#include "ptt/process_tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ptt {

int ProcessTensorChoi::leg_output(int j) const {
    if (j < 0 || j > k) throw std::out_of_range("leg_output: step out of range");
    return 2 * (k - j);
}

int ProcessTensorChoi::leg_input(int j) const {
    if (j < 1 || j > k) throw std::out_of_range("leg_input: step out of range");
    return 2 * (k - j) + 1;
}

nlohmann::json ProcessTensorChoi::to_json() const {
    std::vector<std::string> legs;
    for (int j = k; j >= 1; --j) {
        legs.push_back("o" + std::to_string(j));
        legs.push_back("i" + std::to_string(j));
    }
    legs.push_back("o0");
    return {{"k", k},
            {"d_s", d_s},
            {"legs", legs},
            {"normalisation", "trace1"},
            {"choi", matrix_to_json(choi)}};
}

ProcessTensorChoi ProcessTensorChoi::from_json(const nlohmann::json& j) {
    ProcessTensorChoi pt;
    pt.k = j.at("k").get<int>();
    pt.d_s = j.at("d_s").get<int>();
    pt.choi = matrix_from_json(j.at("choi"));
    if (j.contains("normalisation") && j.at("normalisation").get<std::string>() != "trace1")
        throw std::invalid_argument("ProcessTensorChoi: unsupported normalisation");
    int expect = 1;
    for (int i = 0; i < pt.num_legs(); ++i) expect *= pt.d_s;
    if (pt.choi.rows() != expect || pt.choi.cols() != expect)
        throw std::invalid_argument("ProcessTensorChoi: choi dimension mismatch");
    return pt;
}

Mat instrument_from_channel(const QuantumChannel& ch) {
    if (ch.dim_in() != ch.dim_out())
        throw std::invalid_argument("instrument_from_channel: needs equal dims");
    return static_cast<double>(ch.dim_in()) * ch.choi();
}

Mat unitary_instrument(const UnitaryParams& p) {
    return instrument_from_channel(standard_channel(StandardChannelKind::Unitary, 0.0, p));
}

Mat identity_instrument(int d) {
    return instrument_from_channel(QuantumChannel::identity(d));
}

namespace {

Mat bell_state(int d) {
    Vec v = Vec::Zero(d * d);
    for (int i = 0; i < d; ++i) v(i * d + i) = 1.0 / std::sqrt(static_cast<double>(d));
    return v * v.adjoint();
}

} // namespace

ProcessTensorChoi from_dilation(const Mat& rho_se0, const std::vector<Mat>& unitaries,
                                int d_s, int d_e) {
    const int dse = d_s * d_e;
    if (rho_se0.rows() != dse || rho_se0.cols() != dse)
        throw std::invalid_argument("from_dilation: initial state dimension mismatch");
    if (std::abs(std::real(rho_se0.trace()) - 1.0) > 1e-9 || hermiticity_residue(rho_se0) > 1e-9)
        throw std::invalid_argument("from_dilation: initial state not a unit-trace Hermitian");
    for (const Mat& u : unitaries) {
        if (u.rows() != dse || u.cols() != dse)
            throw std::invalid_argument("from_dilation: unitary dimension mismatch");
        if ((u.adjoint() * u - Mat::Identity(dse, dse)).cwiseAbs().maxCoeff() > 1e-10)
            throw std::invalid_argument("from_dilation: non-unitary step");
    }

    const int k = static_cast<int>(unitaries.size());

    // d_e = 1 means a closed system; pad with a trivial qubit environment so
    // the factor bookkeeping below stays uniform.
    if (d_e == 1) {
        Mat zero = Mat::Zero(2, 2);
        zero(0, 0) = 1.0;
        Mat rho_padded = kron(rho_se0, zero);
        std::vector<Mat> us_padded;
        for (const Mat& u : unitaries) us_padded.push_back(kron(u, Mat::Identity(2, 2)));
        return from_dilation(rho_padded, us_padded, d_s, 2);
    }

    // Invariant at each loop start: tau lives on [E, o_{j-1}, i_{j-1}, ..., o_0].
    Mat tau = permute_subsystems(rho_se0, SubsystemShape{d_s, d_e}, {1, 0}); // [E, o_0]
    int rest_dim = d_s;
    Mat phi = bell_state(d_s);

    for (int j = 1; j <= k; ++j) {
        // adjoin a fresh Bell pair (S, i_j): [S, i_j, E, rest]
        Mat grown = kron(phi, tau);
        // -> [S, E, i_j, rest]
        tau = permute_subsystems(grown, SubsystemShape{d_s, d_s, d_e, rest_dim}, {0, 2, 1, 3});
        Mat ufull = kron(unitaries[static_cast<size_t>(j - 1)],
                         Mat::Identity(d_s * rest_dim, d_s * rest_dim));
        tau = ufull * tau * ufull.adjoint();
        // hand the system out as o_j: [E, o_j, i_j, rest]
        tau = permute_subsystems(tau, SubsystemShape{d_s, d_e, d_s * rest_dim}, {1, 0, 2});
        rest_dim *= d_s * d_s;
    }
    Mat result = partial_trace(tau, SubsystemShape{d_e, rest_dim}, {1});

    ProcessTensorChoi pt;
    pt.k = k;
    pt.d_s = d_s;
    pt.choi = result;
    return pt;
}

namespace {

// Contract an instrument Choi over the two lowest (rightmost) legs.
// T' [r',c'] = sum_{t,x} T[(r'*B+t),(c'*B+x)] * op[t,x], B = op order.
Mat contract_tail(const Mat& t, const Mat& op) {
    const int B = static_cast<int>(op.rows());
    const int m = static_cast<int>(t.rows()) / B;
    Mat out = Mat::Zero(m, m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
            cplx acc = 0.0;
            for (int a = 0; a < B; ++a)
                for (int b = 0; b < B; ++b) acc += t(r * B + a, c * B + b) * op(a, b);
            out(r, c) = acc;
        }
    return out;
}

} // namespace

Mat act(const ProcessTensorChoi& pt, const InstrumentSequence& seq) {
    if (static_cast<int>(seq.ops.size()) != pt.k)
        throw std::invalid_argument("act: expected one operation per step");
    const int d2 = pt.d_s * pt.d_s;
    Mat t = pt.choi;
    for (int j = 0; j < pt.k; ++j) {
        const Mat& op = seq.ops[static_cast<size_t>(j)];
        if (op.rows() != d2 || op.cols() != d2)
            throw std::invalid_argument("act: instrument dimension mismatch");
        t = contract_tail(t, op);
    }
    return t; // the remaining leg is o_k
}

double born_rule(const ProcessTensorChoi& pt, const InstrumentSequence& seq) {
    Mat rho = act(pt, seq);
    Mat effect = seq.povm.value_or(Mat::Identity(pt.d_s, pt.d_s));
    cplx p = (effect * rho).trace();
    return p.real();
}

Mat marginal(const ProcessTensorChoi& pt, const std::vector<int>& keep_legs) {
    return partial_trace(pt.choi, pt.leg_shape(), keep_legs);
}

Mat step_marginal(const ProcessTensorChoi& pt, int j) {
    if (j < 1 || j > pt.k) throw std::out_of_range("step_marginal: step out of range");
    return marginal(pt, {pt.leg_output(j), pt.leg_input(j)});
}

std::vector<cplx> pauli_coefficients(const Mat& m, int num_qubit_legs) {
    const int L = num_qubit_legs;
    const int n = 1 << L;
    if (m.rows() != n || m.cols() != n)
        throw std::invalid_argument("pauli_coefficients: dimension mismatch");

    // Stage t: layout [p_0..p_{t-1} | r_t..r_{L-1} | c_t..c_{L-1}]
    std::vector<cplx> cur(static_cast<size_t>(n) * n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) cur[static_cast<size_t>(r) * n + c] = m(r, c);

    const cplx I(0.0, 1.0);
    // P[p](b,a) entries for p in {I,X,Y,Z}
    const cplx pmat[4][2][2] = {
        {{1, 0}, {0, 1}},
        {{0, 1}, {1, 0}},
        {{0, -I}, {I, 0}},
        {{1, 0}, {0, -1}},
    };

    for (int t = 0; t < L; ++t) {
        const int rest = 1 << (L - t - 1); // remaining row (and col) block
        const size_t prefixes = static_cast<size_t>(1) << (2 * t);
        std::vector<cplx> next(prefixes * 4 * rest * rest);
        const size_t cur_rc = static_cast<size_t>(2 * rest); // current row dim
        for (size_t pre = 0; pre < prefixes; ++pre) {
            const cplx* base = cur.data() + pre * cur_rc * cur_rc;
            for (int p = 0; p < 4; ++p) {
                cplx* out = next.data() + ((pre * 4 + static_cast<size_t>(p)) *
                                           static_cast<size_t>(rest) * rest);
                for (int r = 0; r < rest; ++r)
                    for (int c = 0; c < rest; ++c) {
                        cplx acc = 0.0;
                        for (int a = 0; a < 2; ++a)
                            for (int b = 0; b < 2; ++b) {
                                // Tr over this leg: P(b,a) * T[(a,r),(b,c)]
                                acc += pmat[p][b][a] *
                                       base[(static_cast<size_t>(a) * rest + r) * cur_rc +
                                            (static_cast<size_t>(b) * rest + c)];
                            }
                        out[static_cast<size_t>(r) * rest + c] = acc;
                    }
            }
        }
        cur.swap(next);
    }
    return cur; // size 4^L, index base-4 with leg 0 most significant
}

std::vector<std::vector<int>> causality_constraint_paulis(int k, int d_s) {
    if (d_s != 2) throw std::invalid_argument("causality_constraint_paulis: d_s=2 only");
    const int L = 2 * k + 1;
    std::vector<std::vector<int>> strings;
    for (int j = 1; j <= k; ++j) {
        const int leg_ij = 2 * (k - j) + 1; // i_j leg index
        const int free_legs = L - leg_ij - 1;
        int combos = 1;
        for (int i = 0; i < free_legs; ++i) combos *= 4;
        for (int tp = 1; tp <= 3; ++tp) {
            for (int c = 0; c < combos; ++c) {
                std::vector<int> digits(static_cast<size_t>(L), 0);
                digits[static_cast<size_t>(leg_ij)] = tp;
                int rem = c;
                for (int pos = L - 1; pos > leg_ij; --pos) {
                    digits[static_cast<size_t>(pos)] = rem % 4;
                    rem /= 4;
                }
                strings.push_back(std::move(digits));
            }
        }
    }
    return strings;
}

CausalityReport check_causal(const ProcessTensorChoi& pt, double /*tol*/) {
    if (pt.d_s != 2) throw std::invalid_argument("check_causal: d_s=2 only");
    auto coeffs = pauli_coefficients(pt.choi, pt.num_legs());
    auto strings = causality_constraint_paulis(pt.k, pt.d_s);
    CausalityReport report;
    for (const auto& s : strings) {
        size_t idx = 0;
        for (int d : s) idx = idx * 4 + static_cast<size_t>(d);
        double v = std::abs(coeffs[idx]);
        if (v > report.max_violation) {
            report.max_violation = v;
            report.worst_string = s;
        }
    }
    return report;
}

Mat markov_closest(const ProcessTensorChoi& pt) {
    Mat prod = step_marginal(pt, pt.k);
    for (int j = pt.k - 1; j >= 1; --j) prod = kron(prod, step_marginal(pt, j));
    Mat rho0 = marginal(pt, {pt.leg_output(0)});
    return kron(prod, rho0);
}

double non_markovianity(const ProcessTensorChoi& pt) {
    return relative_entropy(pt.choi, markov_closest(pt));
}

Mat contract_instrument(const Mat& m, const SubsystemShape& shape, int leg_in, int leg_out,
                        const Mat& op_choi) {
    const int msub = shape.num_subsystems();
    // permute so (leg_in, leg_out) become the two rightmost factors, in that order
    std::vector<int> order;
    for (int i = 0; i < msub; ++i)
        if (i != leg_in && i != leg_out) order.push_back(i);
    order.push_back(leg_in);
    order.push_back(leg_out);
    Mat perm = permute_subsystems(m, shape, order);
    return contract_tail(perm, op_choi);
}

ProcessTensorChoi conditional_pt(const ProcessTensorChoi& pt,
                                 const std::vector<std::pair<int, Mat>>& fixed_ops) {
    Mat t = pt.choi;
    // Leg positions are tracked explicitly, so contraction order is free.
    std::vector<std::pair<int, Mat>> ops = fixed_ops;
    std::sort(ops.begin(), ops.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    std::vector<int> legs_alive(static_cast<size_t>(pt.num_legs()));
    for (int i = 0; i < pt.num_legs(); ++i) legs_alive[static_cast<size_t>(i)] = i;

    for (const auto& [slot, op] : ops) {
        if (slot < 0 || slot >= pt.k) throw std::out_of_range("conditional_pt: bad slot");
        int orig_in = 2 * (pt.k - slot) - 1;  // i_{slot+1}
        int orig_out = 2 * (pt.k - slot);     // o_slot
        // find current positions
        int cin = -1, cout = -1;
        for (size_t i = 0; i < legs_alive.size(); ++i) {
            if (legs_alive[i] == orig_in) cin = static_cast<int>(i);
            if (legs_alive[i] == orig_out) cout = static_cast<int>(i);
        }
        if (cin < 0 || cout < 0) throw std::logic_error("conditional_pt: leg bookkeeping");
        SubsystemShape cur = SubsystemShape::uniform(static_cast<int>(legs_alive.size()), pt.d_s);
        t = contract_instrument(t, cur, cin, cout, op);
        // contract_instrument moves (cin, cout) to the tail and removes them;
        // the remaining legs keep their relative order
        std::vector<int> remaining;
        for (size_t i = 0; i < legs_alive.size(); ++i)
            if (static_cast<int>(i) != cin && static_cast<int>(i) != cout)
                remaining.push_back(legs_alive[i]);
        legs_alive = std::move(remaining);
    }

    double tr = std::real(t.trace());
    if (tr < 1e-12) throw std::runtime_error("conditional_pt: zero-probability branch");
    ProcessTensorChoi out;
    out.k = pt.k - static_cast<int>(fixed_ops.size());
    out.d_s = pt.d_s;
    out.choi = t / tr;
    return out;
}

} // namespace ptt

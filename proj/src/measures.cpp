#include "ptt/measures.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ptt/optim.hpp"
#include "ptt/shadows.hpp"

namespace ptt {

namespace {

std::vector<int> upper_legs(const ProcessTensorChoi& pt, int j) {
    // legs above the i_j / o_{j-1} split: o_k .. i_j
    std::vector<int> legs;
    for (int l = 0; l <= pt.leg_input(j); ++l) legs.push_back(l);
    return legs;
}

} // namespace

double negativity_time_cut(const ProcessTensorChoi& pt, int j) {
    Mat gamma = partial_transpose(pt.choi, pt.leg_shape(), upper_legs(pt, j));
    return 0.5 * (trace_norm(gamma) - 1.0);
}

double qmi_time_cut(const ProcessTensorChoi& pt, int j) {
    std::vector<int> upper = upper_legs(pt, j);
    std::vector<int> lower;
    for (int l = pt.leg_input(j) + 1; l < pt.num_legs(); ++l) lower.push_back(l);
    Mat a = partial_trace(pt.choi, pt.leg_shape(), upper);
    Mat b = partial_trace(pt.choi, pt.leg_shape(), lower);
    return entropy_vn(a) + entropy_vn(b) - entropy_vn(pt.choi);
}

Mat bell_chain_ideal(int k, const Mat& rho0) {
    Vec bell = Vec::Zero(4);
    bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
    Mat chain = bell * bell.adjoint();
    for (int j = 1; j < k; ++j) chain = kron(chain, Mat(bell * bell.adjoint()));
    return kron(chain, rho0);
}

namespace {

struct BreakAngles {
    UnitaryParams encoder, prep, decoder;
};

double break_mutual_information(const ProcessTensorChoi& pt, int break_slot,
                                const Mat& enc_u, const Mat& prep_u, const Mat& dec_u) {
    const int d = pt.d_s;
    Mat zero = Mat::Zero(d, d);
    zero(0, 0) = 1.0;
    Mat psi = prep_u * zero * prep_u.adjoint();

    // probabilities p(g, d): causal-break instrument at the slot, identities
    // elsewhere, two-outcome terminal measurement
    double table[2][2];
    for (int g = 0; g < 2; ++g) {
        Mat out = Mat::Zero(d, d);
        out(g, g) = 1.0;
        Mat effect = enc_u.adjoint() * out * enc_u;
        InstrumentSequence seq;
        for (int s = 0; s < pt.k; ++s) {
            if (s == break_slot)
                seq.ops.push_back(static_cast<double>(d) * kron(psi, effect.transpose()));
            else
                seq.ops.push_back(identity_instrument(d));
        }
        Mat rho_g = act(pt, seq); // subnormalised: trace = p(g)
        for (int dd = 0; dd < 2; ++dd) {
            Mat dout = Mat::Zero(d, d);
            dout(dd, dd) = 1.0;
            Mat deff = dec_u.adjoint() * dout * dec_u;
            table[g][dd] = std::max(0.0, std::real((deff * rho_g).trace()));
        }
    }
    double total = table[0][0] + table[0][1] + table[1][0] + table[1][1];
    if (total < 1e-12) return 0.0;
    double mi = 0.0;
    for (int g = 0; g < 2; ++g)
        for (int dd = 0; dd < 2; ++dd) {
            double p = table[g][dd] / total;
            double pg = (table[g][0] + table[g][1]) / total;
            double pd = (table[0][dd] + table[1][dd]) / total;
            if (p > 1e-14 && pg > 1e-14 && pd > 1e-14) mi += p * std::log(p / (pg * pd));
        }
    return std::max(0.0, mi);
}

} // namespace

double cmi_causal_break(const ProcessTensorChoi& pt, int break_slot, int budget) {
    if (break_slot < 0 || break_slot >= pt.k)
        throw std::out_of_range("cmi_causal_break: slot out of range");
    const auto& cliffords = clifford_table();
    Mat zero2 = Mat::Zero(2, 2);
    zero2(0, 0) = 1.0;

    // coarse grid: encoder and decoder bases from the Clifford set; the
    // prepared state only matters through U|0>, so scan a reduced set
    double best = 0.0;
    size_t be = 0, bp = 0, bd = 0;
    std::vector<size_t> prep_ids = {0, 1, 2, 3, 8, 16};
    for (size_t e = 0; e < cliffords.size(); ++e)
        for (size_t p : prep_ids)
            for (size_t dd = 0; dd < cliffords.size(); ++dd) {
                double mi = break_mutual_information(pt, break_slot, cliffords[e], cliffords[p],
                                                     cliffords[dd]);
                if (mi > best) {
                    best = mi;
                    be = e;
                    bp = p;
                    bd = dd;
                }
            }

    // local refinement over the nine angles
    auto param_of = [&](const Mat& u) {
        // recover a parametrisation by matching action on |0> and |1>
        // (only used as a smooth starting point, exactness not required)
        double theta = 2.0 * std::atan2(std::abs(u(1, 0)), std::abs(u(0, 0)));
        double phi = std::arg(u(1, 0)) - std::arg(u(0, 0));
        double lambda = std::arg(-u(0, 1)) - std::arg(u(0, 0));
        return UnitaryParams{theta, phi, lambda};
    };
    UnitaryParams pe = param_of(cliffords[be]), pp = param_of(cliffords[bp]),
                  pd = param_of(cliffords[bd]);
    Eigen::VectorXd x0(9);
    x0 << pe.theta, pe.phi, pe.lambda, pp.theta, pp.phi, pp.lambda, pd.theta, pd.phi, pd.lambda;
    auto objective = [&](const Eigen::VectorXd& x) {
        Mat ue = unitary_matrix({x(0), x(1), x(2)});
        Mat up = unitary_matrix({x(3), x(4), x(5)});
        Mat ud = unitary_matrix({x(6), x(7), x(8)});
        return -break_mutual_information(pt, break_slot, ue, up, ud);
    };
    NelderMeadOptions opts;
    opts.max_evals = budget;
    opts.initial_step = 0.2;
    NelderMeadResult res = nelder_mead_minimize(objective, x0, opts);
    return std::max(best, -res.value);
}

DiagnosticsReport diagnostics(const ProcessTensorChoi& pt, const ProcessTensorChoi* ideal,
                              int cmi_budget) {
    DiagnosticsReport report;
    report.qmi = non_markovianity(pt);
    report.purity = std::real((pt.choi * pt.choi).trace());

    Mat ideal_choi;
    if (ideal) {
        ideal_choi = ideal->choi;
    } else {
        Mat zero = Mat::Zero(pt.d_s, pt.d_s);
        zero(0, 0) = 1.0;
        ideal_choi = bell_chain_ideal(pt.k, zero);
    }
    report.process_fidelity_vs_ideal = std::real((pt.choi * ideal_choi).trace()) /
                                       std::real((ideal_choi * ideal_choi).trace());

    for (int j = pt.k; j >= 1; --j) {
        std::ostringstream name;
        name << "i" << j << "|o" << j - 1;
        report.negativity.push_back({name.str(), negativity_time_cut(pt, j)});
    }
    for (int slot = 0; slot < pt.k; ++slot)
        report.cmi.push_back({slot, cmi_causal_break(pt, slot, cmi_budget)});
    return report;
}

nlohmann::json DiagnosticsReport::to_json() const {
    nlohmann::json neg = nlohmann::json::object();
    for (const auto& [name, value] : negativity) neg[name] = value;
    nlohmann::json cmis = nlohmann::json::array();
    for (const auto& entry : cmi)
        cmis.push_back({{"break_slot", entry.break_slot}, {"value", entry.value}});
    return {{"qmi", qmi},
            {"purity", purity},
            {"process_fidelity_vs_ideal", process_fidelity_vs_ideal},
            {"negativity", neg},
            {"cmi", cmis}};
}

std::string DiagnosticsReport::summary() const {
    std::ostringstream out;
    out << "qmi                 " << qmi << "\n";
    out << "purity              " << purity << "\n";
    out << "fidelity vs ideal   " << process_fidelity_vs_ideal << "\n";
    for (const auto& [name, value] : negativity)
        out << "negativity " << name << "   " << value << "\n";
    for (const auto& entry : cmi)
        out << "cmi break t" << entry.break_slot << "       " << entry.value << "\n";
    return out.str();
}

ProcessTensorChoi classically_correlated_fixture() {
    Vec phi = Vec::Zero(4), psi = Vec::Zero(4);
    phi(0) = phi(3) = 1.0 / std::sqrt(2.0); // (|00> + |11>)/sqrt2
    psi(1) = psi(2) = 1.0 / std::sqrt(2.0); // (|01> + |10>)/sqrt2
    Mat phi_p = phi * phi.adjoint();
    Mat psi_p = psi * psi.adjoint();
    Mat zero = Mat::Zero(2, 2);
    zero(0, 0) = 1.0;

    ProcessTensorChoi pt;
    pt.k = 2;
    pt.d_s = 2;
    pt.choi = kron(Mat(0.5 * (kron(phi_p, phi_p) + kron(psi_p, psi_p))), zero);
    return pt;
}

} // namespace ptt

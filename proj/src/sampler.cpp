#include "ptt/sampler.hpp"

#include <cmath>
#include <stdexcept>

namespace ptt {

namespace {

constexpr double kSupportCutoff = 1e-10;  // pseudoinverse threshold, relative to sigma_max
constexpr double kCausalResidual = 1e-10; // outer-loop convergence criterion
constexpr double kUnitalResidual = 1e-7;

// Embed an operator acting on the listed legs (identity elsewhere).
Mat embed_operator(const Mat& w, const SubsystemShape& shape, const std::vector<int>& legs) {
    const int m = shape.num_subsystems();
    std::vector<int> others;
    std::vector<bool> used(static_cast<size_t>(m), false);
    for (int l : legs) used[static_cast<size_t>(l)] = true;
    for (int i = 0; i < m; ++i)
        if (!used[static_cast<size_t>(i)]) others.push_back(i);

    int dim_others = 1;
    for (int i : others) dim_others *= shape.dims[static_cast<size_t>(i)];

    std::vector<int> order = others;
    order.insert(order.end(), legs.begin(), legs.end());
    std::vector<int> inverse(order.size());
    for (size_t p = 0; p < order.size(); ++p)
        inverse[static_cast<size_t>(order[p])] = static_cast<int>(p);

    Mat permuted = kron(Mat::Identity(dim_others, dim_others), w);
    std::vector<int> permuted_dims;
    for (int idx : order) permuted_dims.push_back(shape.dims[static_cast<size_t>(idx)]);
    return permute_subsystems(permuted, SubsystemShape(permuted_dims), inverse);
}

std::vector<int> range_vec(int first, int last) { // inclusive
    std::vector<int> v;
    for (int i = first; i <= last; ++i) v.push_back(i);
    return v;
}

// Inverted square root of a PSD marginal, supported on eigenvalues above
// kSupportCutoff relative to the largest. One eigendecomposition, Hermitian by
// construction.
Mat sqrt_pinv(const Mat& m) {
    HermitianEig eig = eig_hermitian(m, 1e-8);
    double lmax = std::max(0.0, eig.eigenvalues.maxCoeff());
    RealVec s = RealVec::Zero(eig.eigenvalues.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (eig.eigenvalues(i) > kSupportCutoff * lmax && eig.eigenvalues(i) > 0.0)
            s(i) = 1.0 / std::sqrt(eig.eigenvalues(i));
    return eig.eigenvectors * s.asDiagonal() * eig.eigenvectors.adjoint();
}

} // namespace

int SamplerConfig::process_dim() const {
    int n = 1;
    for (int i = 0; i < 2 * k + 1; ++i) n *= d_s;
    return n;
}

void SamplerConfig::validate() const {
    if (k < 1 || d_s < 2) throw std::invalid_argument("SamplerConfig: bad k or d_s");
    if (max_iterations < 1) throw std::invalid_argument("SamplerConfig: max_iterations < 1");
    if (rank < 0 || rank > process_dim()) throw std::invalid_argument("SamplerConfig: bad rank");
}

Mat ginibre_state(int n, int r, CounterRng& rng) {
    if (n < 1 || r < 1 || r > n) throw std::invalid_argument("ginibre_state: bad dimensions");
    Mat x(n, r);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < r; ++j) x(i, j) = cplx(rng.normal(), rng.normal());
    Mat rho = x * x.adjoint();
    return rho / rho.trace().real();
}

Mat ginibre_state(int n, int r, std::uint64_t seed) {
    CounterRng rng(seed);
    return ginibre_state(n, r, rng);
}

Mat causal_projection_sweep(const Mat& u, int k, int d_s) {
    Mat t = u;
    const int legs = 2 * k + 1;
    for (int j = k - 1; j >= 0; --j) {
        // cancellation: (sqrt of the marginal on legs [i_{j+1} .. o_0])^+, identity above
        int top1 = 2 * (k - j) - 1;
        int dim_top1 = 1, dim_keep1 = 1;
        for (int i = 0; i < top1; ++i) dim_top1 *= d_s;
        for (int i = 0; i < legs - top1; ++i) dim_keep1 *= d_s;
        Mat marg1 = partial_trace(t, SubsystemShape{dim_top1, dim_keep1}, {1});
        Mat op1 = kron(Mat::Identity(dim_top1, dim_top1), sqrt_pinv(marg1));
        t = op1 * t * op1;

        // remainder: sqrt of the marginal on legs [o_j .. o_0]
        int dim_top2 = dim_top1 * d_s;
        int dim_keep2 = dim_keep1 / d_s;
        Mat marg2 = partial_trace(t, SubsystemShape{dim_top2, dim_keep2}, {1});
        Mat op2 = kron(Mat::Identity(dim_top2, dim_top2), matrix_sqrt_psd(marg2));
        t = op2 * t * op2;
        t = Mat(0.5 * (t + Mat(t.adjoint())));
    }
    double tr = std::real(t.trace());
    if (tr <= 0) throw std::runtime_error("causal_projection_sweep: trace collapsed");
    return t / tr;
}

Mat unital_projection_sweep(const Mat& u, int k, int d_s) {
    Mat t = u;
    const int legs = 2 * k + 1;
    SubsystemShape shape = SubsystemShape::uniform(legs, d_s);
    for (int j = k; j >= 1; --j) {
        int leg_oj = 2 * (k - j);
        int leg_ij = leg_oj + 1;
        // cancellation acts on o_j plus every leg below i_j
        std::vector<int> cancel_legs = {leg_oj};
        auto below = range_vec(leg_ij + 1, legs - 1);
        cancel_legs.insert(cancel_legs.end(), below.begin(), below.end());
        Mat marg1 = partial_trace(t, shape, cancel_legs);
        Mat op1 = embed_operator(sqrt_pinv(marg1), shape, cancel_legs);
        t = op1 * t * op1;

        if (!below.empty()) {
            Mat marg2 = partial_trace(t, shape, below);
            Mat op2 = embed_operator(matrix_sqrt_psd(marg2), shape, below);
            t = op2 * t * op2;
        }
        t = Mat(0.5 * (t + Mat(t.adjoint())));
    }
    double tr = std::real(t.trace());
    if (tr <= 0) throw std::runtime_error("unital_projection_sweep: trace collapsed");
    return t / tr;
}

std::vector<std::vector<int>> unitality_constraint_paulis(int k, int d_s) {
    if (d_s != 2) throw std::invalid_argument("unitality_constraint_paulis: d_s=2 only");
    const int L = 2 * k + 1;
    std::vector<std::vector<int>> strings;
    for (int j = k; j >= 1; --j) {
        const int leg_oj = 2 * (k - j);
        const int free_first = leg_oj + 2; // anything below i_j
        const int free_legs = L - free_first;
        int combos = 1;
        for (int i = 0; i < free_legs; ++i) combos *= 4;
        for (int tp = 1; tp <= 3; ++tp)
            for (int c = 0; c < combos; ++c) {
                std::vector<int> digits(static_cast<size_t>(L), 0);
                digits[static_cast<size_t>(leg_oj)] = tp;
                int rem = c;
                for (int pos = L - 1; pos >= free_first; --pos) {
                    digits[static_cast<size_t>(pos)] = rem % 4;
                    rem /= 4;
                }
                strings.push_back(std::move(digits));
            }
    }
    return strings;
}

double max_abs_coefficient(const std::vector<cplx>& coeffs,
                           const std::vector<std::vector<int>>& strings) {
    double worst = 0.0;
    for (const auto& s : strings) {
        size_t idx = 0;
        for (int d : s) idx = idx * 4 + static_cast<size_t>(d);
        worst = std::max(worst, std::abs(coeffs[idx]));
    }
    return worst;
}

SamplerOutcome random_process_detailed(const SamplerConfig& cfg) {
    cfg.validate();
    const int n = cfg.process_dim();
    const int r = cfg.rank == 0 ? n : cfg.rank;

    CounterRng rng(cfg.seed);
    Mat t = ginibre_state(n, r, rng);

    SamplerOutcome out;
    out.instability_flagged = r * cfg.d_s * cfg.d_s < n;
    auto strings = causality_constraint_paulis(cfg.k, cfg.d_s);

    for (int sweep = 1; sweep <= cfg.max_iterations; ++sweep) {
        t = causal_projection_sweep(t, cfg.k, cfg.d_s);
        out.sweeps = sweep;
        out.residual = max_abs_coefficient(pauli_coefficients(t, 2 * cfg.k + 1), strings);
        if (out.residual < kCausalResidual) {
            out.converged = true;
            break;
        }
    }
    if (!out.converged)
        throw std::runtime_error("random_process: no convergence after " +
                                 std::to_string(cfg.max_iterations) + " sweeps (residual " +
                                 std::to_string(out.residual) + ")");
    out.pt.k = cfg.k;
    out.pt.d_s = cfg.d_s;
    out.pt.choi = t;
    return out;
}

ProcessTensorChoi random_process(const SamplerConfig& cfg) {
    return random_process_detailed(cfg).pt;
}

SamplerOutcome random_unital_process_detailed(const SamplerConfig& cfg) {
    cfg.validate();
    const int n = cfg.process_dim();
    const int r = cfg.rank == 0 ? n : cfg.rank;

    CounterRng rng(cfg.seed);
    Mat t = ginibre_state(n, r, rng);

    SamplerOutcome out;
    out.instability_flagged = r * cfg.d_s * cfg.d_s < n;
    auto causal_strings = causality_constraint_paulis(cfg.k, cfg.d_s);
    auto unital_strings = unitality_constraint_paulis(cfg.k, cfg.d_s);

    for (int sweep = 1; sweep <= cfg.max_iterations; ++sweep) {
        t = causal_projection_sweep(t, cfg.k, cfg.d_s);
        t = unital_projection_sweep(t, cfg.k, cfg.d_s);
        out.sweeps = sweep;
        auto coeffs = pauli_coefficients(t, 2 * cfg.k + 1);
        out.residual = std::max(max_abs_coefficient(coeffs, causal_strings),
                                max_abs_coefficient(coeffs, unital_strings));
        if (out.residual < kUnitalResidual) {
            out.converged = true;
            break;
        }
    }
    if (!out.converged)
        throw std::runtime_error("random_unital_process: no convergence (residual " +
                                 std::to_string(out.residual) + ")");
    out.pt.k = cfg.k;
    out.pt.d_s = cfg.d_s;
    out.pt.choi = t;
    return out;
}

ProcessTensorChoi random_unital_process(const SamplerConfig& cfg) {
    return random_unital_process_detailed(cfg).pt;
}

Mat reshuffled_superoperator(const ProcessTensorChoi& pt) {
    const int d = pt.d_s;
    const int k = pt.k;
    // The process viewed as the CP map from its collective inputs to its
    // collective outputs: drop the unpaired o_0 leg, rescale to the operator
    // convention, and reshuffle each (o_j, i_j) pair.
    std::vector<int> paired;
    for (int i = 0; i < 2 * k; ++i) paired.push_back(i);
    Mat source = std::pow(static_cast<double>(d), 1.0 * k) *
                 partial_trace(pt.choi, pt.leg_shape(), paired);

    const int L = 2 * k;
    int n = 1;
    for (int i = 0; i < L; ++i) n *= d;
    Mat out = Mat::Zero(n, n);
    std::vector<int> row(static_cast<size_t>(L), 0), col(static_cast<size_t>(L), 0);
    auto advance = [&](std::vector<int>& digits) {
        for (int i = L - 1; i >= 0; --i) {
            if (++digits[static_cast<size_t>(i)] < d) return true;
            digits[static_cast<size_t>(i)] = 0;
        }
        return false;
    };
    do {
        std::fill(col.begin(), col.end(), 0);
        do {
            long rnew = 0, cnew = 0;
            for (int p = 0; p < k; ++p) {
                int a = row[static_cast<size_t>(2 * p)], ap = col[static_cast<size_t>(2 * p)];
                int b = row[static_cast<size_t>(2 * p + 1)], bp = col[static_cast<size_t>(2 * p + 1)];
                rnew = ((rnew * d + a) * d) + ap;
                cnew = ((cnew * d + b) * d) + bp;
            }
            long rold = 0, cold = 0;
            for (int i = 0; i < L; ++i) {
                rold = rold * d + row[static_cast<size_t>(i)];
                cold = cold * d + col[static_cast<size_t>(i)];
            }
            out(rnew, cnew) = source(rold, cold);
        } while (advance(col));
    } while (advance(row));
    return out;
}

SpectralReport spectral_diagnostics(const ProcessTensorChoi& pt) {
    SpectralReport report;
    Mat phi = reshuffled_superoperator(pt);
    Eigen::ComplexEigenSolver<Mat> solver(phi);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("spectral_diagnostics: eigensolver failed");
    const auto& ev = solver.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) report.eigenvalues.push_back(ev(i));

    HermitianEig choi_eig = eig_hermitian(pt.choi, 1e-8);
    double lmax = std::max(1e-300, choi_eig.eigenvalues.maxCoeff());
    for (Eigen::Index i = 0; i < choi_eig.eigenvalues.size(); ++i)
        if (choi_eig.eigenvalues(i) > 1e-8 * lmax) ++report.rank;

    size_t lead = 0;
    for (size_t i = 0; i < report.eigenvalues.size(); ++i) {
        double m = std::abs(report.eigenvalues[i]);
        report.leading_magnitude = std::max(report.leading_magnitude, m);
        if (m > std::abs(report.eigenvalues[lead])) lead = i;
    }
    for (const cplx& z : report.eigenvalues) {
        double best = 1e300;
        for (const cplx& w : report.eigenvalues) best = std::min(best, std::abs(std::conj(z) - w));
        report.symmetry_residual = std::max(report.symmetry_residual, best);
    }
    double radius = 1.5 / std::sqrt(static_cast<double>(std::max(report.rank, 1)));
    int inside = 0, trailing = 0;
    for (size_t i = 0; i < report.eigenvalues.size(); ++i) {
        if (i == lead) continue;
        ++trailing;
        if (std::abs(report.eigenvalues[i]) <= radius) ++inside;
    }
    report.girko_fraction = trailing > 0 ? static_cast<double>(inside) / trailing : 1.0;
    return report;
}

} // namespace ptt

#include "ptt/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ptt/optim.hpp"
#include "ptt/rng.hpp"

namespace ptt {

namespace {

Vec normalised_pauli_row(const std::vector<int>& digits) {
    return vec_row(pauli_string(digits, true));
}

int ipow(int base, int exp) {
    int v = 1;
    for (int i = 0; i < exp; ++i) v *= base;
    return v;
}

} // namespace

AffineConstraintSystem AffineConstraintSystem::state_constraints(int n, double trace) {
    AffineConstraintSystem sys(n);
    sys.a_ = Mat(1, static_cast<Eigen::Index>(n) * n);
    sys.a_.row(0) = vec_row(Mat::Identity(n, n) / std::sqrt(static_cast<double>(n))).adjoint();
    sys.rhs_ = Eigen::VectorXd(1);
    sys.rhs_(0) = trace / std::sqrt(static_cast<double>(n));
    return sys;
}

AffineConstraintSystem AffineConstraintSystem::channel_tp_constraints(int d) {
    // Choi legs (out, in), both of dimension d = 2^q; rows are normalised
    // Pauli strings I_out (x) P_in plus the normalisation row (trace d).
    int q = 0;
    while ((1 << q) < d) ++q;
    if ((1 << q) != d) throw std::invalid_argument("channel_tp_constraints: qubit dims only");
    const int n = d * d;
    AffineConstraintSystem sys(n);
    const int strings = d * d - 1;
    sys.a_ = Mat(strings + 1, static_cast<Eigen::Index>(n) * n);
    sys.rhs_ = Eigen::VectorXd::Zero(strings + 1);
    int row = 0;
    for (int p = 1; p < d * d; ++p) {
        std::vector<int> digits(static_cast<size_t>(2 * q), 0);
        int rem = p;
        for (int pos = 2 * q - 1; pos >= q; --pos) {
            digits[static_cast<size_t>(pos)] = rem % 4;
            rem /= 4;
        }
        sys.a_.row(row++) = normalised_pauli_row(digits).adjoint();
    }
    std::vector<int> id(static_cast<size_t>(2 * q), 0);
    sys.a_.row(row) = normalised_pauli_row(id).adjoint();
    sys.rhs_(row) = static_cast<double>(d) / std::sqrt(static_cast<double>(n));
    return sys;
}

AffineConstraintSystem AffineConstraintSystem::causality_constraints(int k, int d_s) {
    if (d_s != 2) throw std::invalid_argument("causality_constraints: d_s=2 only");
    const int legs = 2 * k + 1;
    const int n = ipow(2, legs);
    auto strings = causality_constraint_paulis(k, d_s);
    AffineConstraintSystem sys(n);
    sys.a_ = Mat(static_cast<Eigen::Index>(strings.size()) + 1, static_cast<Eigen::Index>(n) * n);
    sys.rhs_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(strings.size()) + 1);
    for (size_t i = 0; i < strings.size(); ++i)
        sys.a_.row(static_cast<Eigen::Index>(i)) = normalised_pauli_row(strings[i]).adjoint();
    std::vector<int> id(static_cast<size_t>(legs), 0);
    sys.a_.row(static_cast<Eigen::Index>(strings.size())) = normalised_pauli_row(id).adjoint();
    sys.rhs_(static_cast<Eigen::Index>(strings.size())) = 1.0 / std::sqrt(static_cast<double>(n));
    return sys;
}

void AffineConstraintSystem::append_measurement(const Mat& op, double value) {
    if (op.rows() != order_ || op.cols() != order_)
        throw std::invalid_argument("append_measurement: dimension mismatch");
    Vec row = vec_row(op);
    // project out existing rows to test numerical independence
    Vec residual = row;
    for (Eigen::Index r = 0; r < a_.rows(); ++r) {
        Vec ar = a_.row(r).adjoint();
        cplx overlap = ar.dot(residual) / ar.squaredNorm();
        residual -= overlap * ar;
    }
    if (residual.norm() < 1e-10 * std::max(1.0, row.norm())) return; // dependent row
    Mat grown(a_.rows() + 1, a_.cols());
    grown.topRows(a_.rows()) = a_;
    grown.row(a_.rows()) = row.adjoint();
    a_ = grown;
    Eigen::VectorXd rhs_grown(rhs_.size() + 1);
    rhs_grown.head(rhs_.size()) = rhs_;
    rhs_grown(rhs_.size()) = value;
    rhs_ = rhs_grown;
    orthonormal_rows_ = false;
}

Eigen::VectorXd AffineConstraintSystem::apply(const Vec& v) const {
    Vec out = a_ * v;
    return out.real();
}

Vec AffineConstraintSystem::apply_adjoint(const Eigen::VectorXd& lam) const {
    return a_.adjoint() * lam.cast<cplx>();
}

double AffineConstraintSystem::residual(const Mat& x) const {
    Eigen::VectorXd v = apply(vec_row(x));
    return (v - rhs_).cwiseAbs().maxCoeff();
}

namespace {

Mat project_psd_rank(const Mat& m, int rank_cap, int& eig_count) {
    ++eig_count;
    HermitianEig eig = eig_hermitian(m, 1e-6);
    RealVec s(eig.eigenvalues.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        bool keep = eig.eigenvalues(i) > 0.0 && (rank_cap <= 0 || i < rank_cap);
        s(i) = keep ? eig.eigenvalues(i) : 0.0;
    }
    return eig.eigenvectors * s.asDiagonal() * eig.eigenvectors.adjoint();
}

ProjectionReport project_direct(const Mat& x, const AffineConstraintSystem& sys,
                                const ProjectionOptions& opts, Eigen::VectorXd* dual_io) {
    ProjectionReport report;
    const Vec v0 = vec_row(x);
    const int n = sys.order();

    auto value_and_grad = [&](const Eigen::VectorXd& lam, Eigen::VectorXd& grad) {
        Vec shifted = v0 + sys.apply_adjoint(lam);
        Mat m = unvec_row(shifted, n, n);
        Mat sym = 0.5 * (m + Mat(m.adjoint()));
        Mat proj = project_psd_rank(sym, opts.rank_cap, report.eigendecompositions);
        Vec pv = vec_row(proj);
        // maximise theta(lam) = -1/2 ||v(lam)||^2 + b.lam  (minimise negative)
        double theta = -0.5 * pv.squaredNorm() + sys.rhs().dot(lam);
        Eigen::VectorXd g = sys.rhs() - sys.apply(pv);
        grad = -g;
        return -theta;
    };

    LbfgsOptions lopts;
    lopts.memory = 10;
    lopts.max_iters = opts.max_iterations;
    lopts.grad_tol = opts.tolerance * std::max(1.0, v0.norm());
    Eigen::VectorXd lam0 = Eigen::VectorXd::Zero(sys.rows());
    if (dual_io && dual_io->size() == sys.rows()) lam0 = *dual_io;
    LbfgsResult res = lbfgs_minimize(value_and_grad, lam0, lopts);
    if (dual_io) *dual_io = res.x;

    Vec shifted = v0 + sys.apply_adjoint(res.x);
    Mat m = unvec_row(shifted, n, n);
    Mat sym = 0.5 * (m + Mat(m.adjoint()));
    report.projected = project_psd_rank(sym, opts.rank_cap, report.eigendecompositions);
    report.iterations = res.iterations;
    report.grad_norm = res.grad_norm;
    report.constraint_residual = sys.residual(report.projected);
    report.converged = res.converged || report.constraint_residual < opts.tolerance * 10;
    return report;
}

ProjectionReport project_dykstra(const Mat& x, const AffineConstraintSystem& sys,
                                 const ProjectionOptions& opts) {
    ProjectionReport report;
    const int n = sys.order();
    // precompute pinv(A A^dag) once; for orthonormal Pauli rows this is I
    Mat aat = sys.matrix() * sys.matrix().adjoint();
    Mat aat_pinv = pseudoinverse(aat, 1e-12);

    auto affine_project = [&](const Mat& m) {
        Vec v = vec_row(m);
        Eigen::VectorXd defect = sys.apply(v) - sys.rhs();
        Vec corr = sys.matrix().adjoint() * (aat_pinv * defect.cast<cplx>());
        return unvec_row(v - corr, n, n);
    };

    Mat xk = x;
    Mat p = Mat::Zero(n, n), q = Mat::Zero(n, n);
    for (int it = 0; it < opts.max_iterations; ++it) {
        report.iterations = it + 1;
        Mat y = project_psd_rank(xk + p, opts.rank_cap, report.eigendecompositions);
        p = xk + p - y;
        Mat xn = affine_project(y + q);
        Mat sym = 0.5 * (xn + Mat(xn.adjoint()));
        q = y + q - sym;
        double change = (sym - xk).cwiseAbs().maxCoeff();
        xk = sym;
        // converged once the iterate is PSD and on the affine set
        if (change < opts.tolerance) {
            HermitianEig eig = eig_hermitian(xk, 1e-6);
            ++report.eigendecompositions;
            if (eig.eigenvalues.minCoeff() > -opts.tolerance * 10) {
                report.converged = true;
                break;
            }
        }
    }
    report.projected = project_psd_rank(xk, opts.rank_cap, report.eigendecompositions);
    report.constraint_residual = sys.residual(report.projected);
    return report;
}

} // namespace

ProjectionReport project_psd_affine(const Mat& x, const AffineConstraintSystem& sys,
                                    const ProjectionOptions& opts, Eigen::VectorXd* dual_io) {
    if (x.rows() != sys.order() || x.cols() != sys.order())
        throw std::invalid_argument("project_psd_affine: dimension mismatch");
    return opts.method == ProjectionMethod::DirectConic ? project_direct(x, sys, opts, dual_io)
                                                        : project_dykstra(x, sys, opts);
}

// ---------------------------------------------------------------------------

namespace {

double circuit_frequency(const CircuitData& c, size_t effect) {
    if (c.shots <= 0.0) return c.counts[effect]; // exact mode stores probabilities
    return c.counts[effect] / c.shots;
}

} // namespace

LiResult li_reconstruct(const TomographyDataset& dataset, const InstrumentBasis& basis,
                        const std::vector<Mat>& povm, int k, int d_s) {
    if (dataset.circuits.empty()) throw std::invalid_argument("li_reconstruct: empty dataset");
    DualSet basis_duals = dual_set(basis);
    DualSet povm_duals = dual_set(povm);

    const int n = ipow(d_s, 2 * k + 1);
    Mat choi = Mat::Zero(n, n);
    for (const auto& circ : dataset.circuits) {
        if (static_cast<int>(circ.mu.size()) != k)
            throw std::invalid_argument("li_reconstruct: slot count mismatch");
        Mat chain(0, 0);
        for (int j = k - 1; j >= 0; --j) {
            const Mat dual_t = basis_duals.duals[static_cast<size_t>(circ.mu[static_cast<size_t>(j)])].transpose();
            chain = chain.size() == 0 ? dual_t : Mat(kron(chain, dual_t));
        }
        for (size_t i = 0; i < povm.size(); ++i) {
            double f = circuit_frequency(circ, i);
            choi += f * kron(povm_duals.duals[i], chain);
        }
    }
    Mat sym = 0.5 * (choi + Mat(choi.adjoint()));

    LiResult result;
    result.candidate.k = k;
    result.candidate.d_s = d_s;
    result.candidate.choi = sym;
    HermitianEig eig = eig_hermitian(sym, 1e-6);
    result.min_eigenvalue = eig.eigenvalues.minCoeff();

    Mat stacked(static_cast<Eigen::Index>(basis.elements.size()),
                static_cast<Eigen::Index>(basis.elements.front().size()));
    for (size_t i = 0; i < basis.elements.size(); ++i)
        stacked.row(static_cast<Eigen::Index>(i)) = vec_row(basis.elements[i]).adjoint();
    Eigen::JacobiSVD<Mat> svd(stacked);
    int span = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-10 * svd.singularValues()(0)) ++span;
    result.spanned_dimension = span;
    result.full_dimension = ipow(d_s, 4);
    result.informationally_complete = span == result.full_dimension;
    return result;
}

// ---------------------------------------------------------------------------

namespace {

struct CostWorkspace {
    // counts grouped per full mu index, plus cached instrument transposes
    std::vector<std::vector<double>> counts; // [mu_flat][effect]
    std::vector<Mat> basis_ops;
    std::vector<Mat> povm_ops;
    int k = 0;
    int nb = 0;
    double clamp = 1e-12;
};

CostWorkspace make_workspace(const TomographyDataset& dataset, const InstrumentBasis& basis,
                             const std::vector<Mat>& povm, int k) {
    CostWorkspace ws;
    ws.k = k;
    ws.nb = basis.size();
    ws.basis_ops = basis.elements;
    ws.povm_ops = povm;
    long total = 1;
    for (int j = 0; j < k; ++j) total *= ws.nb;
    ws.counts.assign(static_cast<size_t>(total), {});
    // the likelihood is weighted by observed frequencies (exact mode already
    // stores probabilities), which keeps the descent metaparameters scale-free
    for (const auto& circ : dataset.circuits) {
        long idx = 0;
        for (int j = 0; j < k; ++j) idx = idx * ws.nb + circ.mu[static_cast<size_t>(j)];
        std::vector<double> row(povm.size());
        for (size_t i = 0; i < povm.size(); ++i)
            row[i] = circ.shots > 0.0 ? circ.counts[i] / circ.shots : circ.counts[i];
        ws.counts[static_cast<size_t>(idx)] = std::move(row);
    }
    return ws;
}

// contract_tail clone local to the cost engine (slot ops are 4x4 here)
Mat tail_contract(const Mat& t, const Mat& op) {
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

void cost_recurse(const CostWorkspace& ws, const Mat& partial, int depth, long mu_flat,
                  double& cost, std::vector<Mat>* leaf_weights) {
    if (depth == ws.k) {
        const auto& counts = ws.counts[static_cast<size_t>(mu_flat)];
        if (counts.empty()) return;
        Mat w = leaf_weights ? Mat::Zero(2, 2) : Mat();
        for (size_t i = 0; i < ws.povm_ops.size(); ++i) {
            double p = std::real((ws.povm_ops[i] * partial).trace());
            p = std::max(p, ws.clamp);
            cost -= counts[i] * std::log(p);
            if (leaf_weights) w -= (counts[i] / p) * ws.povm_ops[i];
        }
        if (leaf_weights) (*leaf_weights)[static_cast<size_t>(mu_flat)] = w;
        return;
    }
    for (int m = 0; m < ws.nb; ++m)
        cost_recurse(ws, tail_contract(partial, ws.basis_ops[static_cast<size_t>(m)]), depth + 1,
                     mu_flat * ws.nb + m, cost, leaf_weights);
}

} // namespace

double mle_cost(const Mat& choi, const TomographyDataset& dataset, const InstrumentBasis& basis,
                const std::vector<Mat>& povm, int k, Mat* gradient) {
    CostWorkspace ws = make_workspace(dataset, basis, povm, k);
    double cost = 0.0;
    long total = static_cast<long>(ws.counts.size());
    std::vector<Mat> weights;
    if (gradient) weights.assign(static_cast<size_t>(total), Mat());
    cost_recurse(ws, choi, 0, 0, cost, gradient ? &weights : nullptr);

    if (gradient) {
        // assemble grad = sum_mu kron(W_mu, B_{k-1}^T (x) ... (x) B_0^T) by
        // folding one slot at a time; the new factor is rotated in next to the
        // terminal-measurement leg.
        // fold from the least-significant index (the final slot's basis label):
        // each kron lands directly below the factors already in place
        std::vector<Mat> level = std::move(weights);
        for (size_t i = 0; i < level.size(); ++i)
            if (level[i].size() == 0) level[i] = Mat::Zero(2, 2);
        for (int slot = 0; slot < k; ++slot) {
            std::vector<Mat> next(level.size() / static_cast<size_t>(ws.nb));
            for (size_t p = 0; p < next.size(); ++p) {
                Mat acc;
                for (int m = 0; m < ws.nb; ++m) {
                    const Mat& child = level[p * static_cast<size_t>(ws.nb) + static_cast<size_t>(m)];
                    Mat grown = kron(child, ws.basis_ops[static_cast<size_t>(m)].transpose());
                    acc = acc.size() == 0 ? grown : Mat(acc + grown);
                }
                next[p] = std::move(acc);
            }
            level = std::move(next);
        }
        *gradient = level.front();
    }
    return cost;
}

MleResult mle_pgdb(const TomographyDataset& dataset, const InstrumentBasis& basis,
                   const std::vector<Mat>& povm, int k, const MleConfig& cfg, int d_s) {
    const int n = ipow(d_s, 2 * k + 1);
    double mu = cfg.step_mu;
    if (mu <= 0.0) {
        double n2 = static_cast<double>(n) * n;
        mu = cfg.rank_cap > 0 ? 3.0 / (20.0 * n2) : 3.0 / (2.0 * n2);
    }

    AffineConstraintSystem sys = AffineConstraintSystem::causality_constraints(k, d_s);
    ProjectionOptions popts;
    popts.method = cfg.projection;
    popts.rank_cap = cfg.rank_cap;
    popts.tolerance = 1e-9;

    Mat iterate = Mat::Identity(n, n) / static_cast<double>(n);
    if (cfg.warm_start_li) {
        // start monotone descent from the projected linear-inversion estimate
        try {
            LiResult li = li_reconstruct(dataset, basis, povm, k, d_s);
            ProjectionReport warm = project_psd_affine(li.candidate.choi, sys, popts);
            if (warm.constraint_residual < 1e-6) iterate = warm.projected;
        } catch (const std::exception&) {
            // fall back to the maximally mixed start
        }
    }
    Mat grad;
    double f = mle_cost(iterate, dataset, basis, povm, k, &grad);

    MleResult result;
    result.report.cost_trace.push_back(f);
    Eigen::VectorXd dual; // warm-started across iterations

    for (int it = 0; it < cfg.max_iters; ++it) {
        Mat target = iterate - mu * grad;
        Mat sym = 0.5 * (target + Mat(target.adjoint()));
        ProjectionReport proj = project_psd_affine(sym, sys, popts, &dual);
        Mat dir = proj.projected - iterate;
        double slope = std::real((dir.adjoint() * grad).trace());

        double beta = 1.0;
        double fn = f;
        Mat candidate;
        bool accepted = false;
        while (beta >= 1e-8) {
            candidate = iterate + beta * dir;
            fn = mle_cost(candidate, dataset, basis, povm, k, nullptr);
            if (fn <= f + cfg.gamma * beta * slope) {
                accepted = true;
                break;
            }
            beta *= 0.5;
        }
        if (!accepted) {
            result.report.backtracking_underflow = true;
            break;
        }
        double improvement = f - fn;
        iterate = candidate;
        f = mle_cost(iterate, dataset, basis, povm, k, &grad);
        result.report.cost_trace.push_back(f);
        result.report.iterations = it + 1;
        if (improvement <= cfg.stop_delta_f) {
            result.report.converged = true;
            break;
        }
    }

    // land exactly on the physical set
    ProjectionReport final_proj = project_psd_affine(iterate, sys, popts);
    result.estimate.k = k;
    result.estimate.d_s = d_s;
    result.estimate.choi = final_proj.projected;
    result.report.final_cost = mle_cost(result.estimate.choi, dataset, basis, povm, k, nullptr);
    result.report.causality_residual = check_causal(result.estimate).max_violation;
    HermitianEig eig = eig_hermitian(result.estimate.choi, 1e-6);
    result.report.min_eigenvalue = eig.eigenvalues.minCoeff();
    return result;
}

MleResult mle_rank_r(const TomographyDataset& dataset, const InstrumentBasis& basis,
                     const std::vector<Mat>& povm, int k, int rank, MleConfig cfg, int d_s) {
    cfg.rank_cap = rank;
    return mle_pgdb(dataset, basis, povm, k, cfg, d_s);
}

// ---------------------------------------------------------------------------

AffineConstraintSystem data_constraints(const TomographyDataset& dataset,
                                        const InstrumentBasis& basis, const std::vector<Mat>& povm,
                                        int k, int d_s) {
    AffineConstraintSystem sys = AffineConstraintSystem::causality_constraints(k, d_s);
    for (const auto& circ : dataset.circuits) {
        Mat chain(0, 0);
        for (int j = k - 1; j >= 0; --j) {
            Mat op_t = basis.elements[static_cast<size_t>(circ.mu[static_cast<size_t>(j)])].transpose();
            chain = chain.size() == 0 ? op_t : Mat(kron(chain, op_t));
        }
        for (size_t i = 0; i < povm.size(); ++i) {
            Mat op = kron(povm[i], chain);
            sys.append_measurement(op, circuit_frequency(circ, i));
        }
    }
    return sys;
}

PropertyBound bound_property(const AffineConstraintSystem& sys,
                             const std::function<double(const Mat&)>& objective,
                             const std::function<Mat(const Mat&)>& gradient,
                             BoundDirection direction, const Mat& start, int max_iters,
                             double step) {
    ProjectionOptions popts;
    popts.tolerance = 1e-9;
    double sign = direction == BoundDirection::Min ? 1.0 : -1.0;
    const int n = sys.order();

    Eigen::VectorXd dual;
    Mat x0 = project_psd_affine(start, sys, popts, &dual).projected;
    double best = objective(x0);
    Mat best_x = x0;

    // the centred start can sit exactly on a critical point of the objective,
    // so take a few deterministically perturbed starts and keep the extremum
    CounterRng rng(0xB0BA);
    for (int attempt = 0; attempt < 3; ++attempt) {
        Mat x = x0;
        if (attempt > 0) {
            Mat noise(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) noise(i, j) = cplx(rng.normal(), rng.normal());
            Mat h = 0.05 * (noise + Mat(noise.adjoint()));
            x = project_psd_affine(x0 + h, sys, popts, &dual).projected;
        }
        double local = objective(x);
        double stepsize = step;
        for (int it = 0; it < max_iters; ++it) {
            Mat g = gradient(x);
            Mat target = x - sign * stepsize * g;
            Mat sym = 0.5 * (target + Mat(target.adjoint()));
            Mat xn = project_psd_affine(sym, sys, popts, &dual).projected;
            double fn = objective(xn);
            if (sign * fn < sign * local - 1e-12) {
                local = fn;
                x = xn;
                stepsize *= 1.4; // reward progress, the projection absorbs overshoot
            } else {
                stepsize *= 0.4;
                if (stepsize < 1e-7) break;
            }
        }
        if (sign * local < sign * best) {
            best = local;
            best_x = x;
        }
    }
    PropertyBound bound;
    bound.value = best;
    bound.witness = best_x;
    bound.iterations = max_iters;
    return bound;
}

FidelityStats fidelity_stats(std::vector<double> values) {
    FidelityStats stats;
    if (values.empty()) return stats;
    stats.values = values;
    std::sort(values.begin(), values.end());
    size_t m = values.size();
    stats.median = m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
    stats.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(m);
    double var = 0.0;
    for (double v : values) var += (v - stats.mean) * (v - stats.mean);
    stats.stdev = std::sqrt(var / static_cast<double>(m));
    return stats;
}

FidelityStats reconstruction_fidelity(const ProcessTensorChoi& estimate,
                                      const std::vector<ValidationSequence>& validation) {
    std::vector<double> fids;
    for (const auto& v : validation) {
        Mat predicted = act(estimate, v.seq);
        double tr = std::real(predicted.trace());
        if (tr > 1e-12) predicted /= tr;
        Mat psd = project_psd(predicted);
        psd /= std::real(psd.trace());
        fids.push_back(uhlmann_fidelity(psd, v.exact_output));
    }
    return fidelity_stats(std::move(fids));
}

} // namespace ptt

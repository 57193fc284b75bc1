#pragma once

#include <cstdint>
#include <string>

#include "ptt/process_tensor.hpp"
#include "ptt/sim_experiment.hpp"
#include "ptt/tomo_basis.hpp"

namespace ptt {

/// Affine constraint rows A|v>> = b over vectorised Hermitian operators. Rows
/// are kept in the normalised Pauli basis wherever possible so the system
/// stays well conditioned; a normalisation row is always present.
class AffineConstraintSystem {
public:
    /// Unit trace only (state tomography), matrix order n, trace value t.
    static AffineConstraintSystem state_constraints(int n, double trace = 1.0);
    /// Trace preservation of a d-dimensional channel Choi (trace d convention).
    static AffineConstraintSystem channel_tp_constraints(int d);
    /// Process-tensor causality (trace-1 convention).
    static AffineConstraintSystem causality_constraints(int k, int d_s);

    /// Fix Tr[op X] = value; the row is dropped if it is numerically dependent
    /// on the existing rows (with its value checked for consistency instead).
    void append_measurement(const Mat& op, double value);

    int rows() const { return static_cast<int>(a_.rows()); }
    int order() const { return order_; }
    const Mat& matrix() const { return a_; }
    const Eigen::VectorXd& rhs() const { return rhs_; }

    Eigen::VectorXd apply(const Vec& v) const;      // A v (real part)
    Vec apply_adjoint(const Eigen::VectorXd& lam) const; // A^dag lam
    double residual(const Mat& x) const;            // max |A vec(x) - b|

private:
    AffineConstraintSystem(int order) : order_(order) {}
    int order_ = 0;
    Mat a_;              // m x order^2
    Eigen::VectorXd rhs_;
    bool orthonormal_rows_ = true;
};

enum class ProjectionMethod { DirectConic, Dykstra };

struct ProjectionOptions {
    ProjectionMethod method = ProjectionMethod::DirectConic;
    int max_iterations = 2000;
    double tolerance = 1e-9; // constraint residual target
    int rank_cap = 0;        // 0: full PSD cone
};

struct ProjectionReport {
    Mat projected;
    int eigendecompositions = 0;
    int iterations = 0;
    double constraint_residual = 0.0;
    double grad_norm = 0.0;
    bool converged = false;
};

/// Euclidean projection of a Hermitian matrix onto the intersection of the PSD
/// cone with the affine constraint set, by the dual quasi-Newton method or by
/// Dykstra's alternating projections.
ProjectionReport project_psd_affine(const Mat& x, const AffineConstraintSystem& sys,
                                    const ProjectionOptions& opts = {},
                                    Eigen::VectorXd* dual_warm_start = nullptr);

// ---------------------------------------------------------------------------
// linear inversion

struct LiResult {
    ProcessTensorChoi candidate;    // possibly unphysical (negative eigenvalues)
    double min_eigenvalue = 0.0;
    int spanned_dimension = 0;      // per-slot operator dimensions fixed by data
    int full_dimension = 0;
    bool informationally_complete = false;
};

LiResult li_reconstruct(const TomographyDataset& dataset, const InstrumentBasis& basis,
                        const std::vector<Mat>& povm, int k, int d_s = 2);

// ---------------------------------------------------------------------------
// maximum likelihood

struct MleConfig {
    double step_mu = 0.0;          // 0: 3/(2 n^2), rank-capped fits use 3/(20 n^2)
    double gamma = 0.3;            // Armijo parameter of the backtracking search
    double stop_delta_f = 1e-6;    // stop once the accepted improvement drops below
    ProjectionMethod projection = ProjectionMethod::DirectConic;
    int rank_cap = 0;
    int lbfgs_memory = 10;
    int max_iters = 400;
    bool warm_start_li = true;  // start from the projected linear-inversion point
};

struct MleReport {
    std::vector<double> cost_trace; // accepted iterates
    int iterations = 0;
    double final_cost = 0.0;
    double causality_residual = 0.0;
    double min_eigenvalue = 0.0;
    bool backtracking_underflow = false;
    bool converged = false;
};

struct MleResult {
    ProcessTensorChoi estimate;
    MleReport report;
};

MleResult mle_pgdb(const TomographyDataset& dataset, const InstrumentBasis& basis,
                   const std::vector<Mat>& povm, int k, const MleConfig& cfg = {}, int d_s = 2);

/// Rank-capped variant (compressed sensing); reduces to mle_pgdb at full rank.
MleResult mle_rank_r(const TomographyDataset& dataset, const InstrumentBasis& basis,
                     const std::vector<Mat>& povm, int k, int rank, MleConfig cfg = {},
                     int d_s = 2);

/// Negative log-likelihood and its gradient for a candidate Choi state.
double mle_cost(const Mat& choi, const TomographyDataset& dataset, const InstrumentBasis& basis,
                const std::vector<Mat>& povm, int k, Mat* gradient = nullptr);

// ---------------------------------------------------------------------------
// property bounds and validation

struct PropertyBound {
    double value = 0.0;
    Mat witness; // physical state meeting the data constraints
    int iterations = 0;
};

enum class BoundDirection { Min, Max };

/// Extremise a differentiable functional over the physical states consistent
/// with the constraint system (projected gradient with the conic projection).
PropertyBound bound_property(const AffineConstraintSystem& sys,
                             const std::function<double(const Mat&)>& objective,
                             const std::function<Mat(const Mat&)>& gradient,
                             BoundDirection direction, const Mat& start, int max_iters = 300,
                             double step = 0.05);

/// Constraint system pinning every circuit probability of a dataset (rhs from
/// the dataset itself, assumed MLE-smoothed for feasibility).
AffineConstraintSystem data_constraints(const TomographyDataset& dataset,
                                        const InstrumentBasis& basis, const std::vector<Mat>& povm,
                                        int k, int d_s = 2);

struct FidelityStats {
    double median = 0.0;
    double mean = 0.0;
    double stdev = 0.0;
    std::vector<double> values;
};

/// Uhlmann fidelities between the model's predicted outputs and independently
/// simulated ones, over a validation set.
FidelityStats reconstruction_fidelity(const ProcessTensorChoi& estimate,
                                      const std::vector<ValidationSequence>& validation);

FidelityStats fidelity_stats(std::vector<double> values);

} // namespace ptt

#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace ptt {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;
using cplx = std::complex<double>;

/// Tensor-factor structure annotating a square matrix: local dimensions
/// ordered left to right, product equal to matrix order.
struct SubsystemShape {
    std::vector<int> dims;

    SubsystemShape() = default;
    SubsystemShape(std::initializer_list<int> d) : dims(d) { validate(); }
    explicit SubsystemShape(std::vector<int> d) : dims(std::move(d)) { validate(); }

    /// Uniform shape: m subsystems of local dimension d.
    static SubsystemShape uniform(int m, int d);

    int order() const;
    int num_subsystems() const { return static_cast<int>(dims.size()); }
    void validate() const;
};

// ---------------------------------------------------------------------------
// basic constructions

Mat identity(int n);
Mat kron(const Mat& a, const Mat& b);
Mat kron_all(const std::vector<Mat>& factors);

/// Row-major vectorisation, vec(M)(i*cols+j) = M(i,j).
Vec vec_row(const Mat& m);
Mat unvec_row(const Vec& v, int rows, int cols);

/// n-qubit Pauli strings, lexicographic in {I,X,Y,Z} with the leftmost factor
/// most significant. Normalised means Tr[P_i P_j] = delta_ij.
std::vector<Mat> pauli_basis(int n_qubits, bool normalised = false);

/// Single Pauli string from base-4 digits (0=I,1=X,2=Y,3=Z), leftmost first.
Mat pauli_string(const std::vector<int>& digits, bool normalised = false);

// ---------------------------------------------------------------------------
// subsystem operations

/// Partial trace keeping the listed subsystems (ascending order preserved).
Mat partial_trace(const Mat& m, const SubsystemShape& shape, const std::vector<int>& keep);

/// Partial transpose on the listed subsystems.
Mat partial_transpose(const Mat& m, const SubsystemShape& shape, const std::vector<int>& on);

/// Reorder tensor factors: position p of the result holds original factor
/// new_order[p].
Mat permute_subsystems(const Mat& m, const SubsystemShape& shape, const std::vector<int>& new_order);

// ---------------------------------------------------------------------------
// decompositions

struct HermitianEig {
    RealVec eigenvalues; // descending
    Mat eigenvectors;    // columns matched to eigenvalues
};

/// Eigendecomposition of a (numerically) Hermitian matrix; throws if the
/// anti-Hermitian residue exceeds tolerance. Symmetrises internally.
HermitianEig eig_hermitian(const Mat& m, double herm_tol = 1e-10);

/// Moore-Penrose pseudoinverse; singular values <= cutoff * sigma_max are
/// treated as zero.
Mat pseudoinverse(const Mat& m, double cutoff = 1e-12);

/// Square root of a PSD matrix, eigenvalues clipped at zero first.
Mat matrix_sqrt_psd(const Mat& m);

/// Clip negative eigenvalues to zero (Euclidean projection onto the PSD cone).
Mat project_psd(const Mat& m);

// ---------------------------------------------------------------------------
// information measures (natural-log units throughout)

double entropy_vn(const Mat& rho);
double relative_entropy(const Mat& rho, const Mat& sigma);
double uhlmann_fidelity(const Mat& rho, const Mat& sigma);

/// Sum of singular values; for Hermitian input the sum of |eigenvalues|.
double trace_norm(const Mat& m);

double trace_distance(const Mat& a, const Mat& b);

/// Largest anti-Hermitian residue, max |(M - M^dag)_ij|.
double hermiticity_residue(const Mat& m);

// ---------------------------------------------------------------------------
// serialisation: {"rows":..,"cols":..,"re":[..],"im":[..]} row-major

nlohmann::json matrix_to_json(const Mat& m);
Mat matrix_from_json(const nlohmann::json& j);

} // namespace ptt

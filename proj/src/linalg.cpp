#include "ptt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ptt {

namespace {

constexpr double kEigClip = 1e-10; // eigenvalue floor before sqrt/log

void check_finite(const Mat& m, const char* what) {
    if (!m.allFinite()) throw std::runtime_error(std::string(what) + ": non-finite entries");
}

} // namespace

SubsystemShape SubsystemShape::uniform(int m, int d) {
    SubsystemShape s;
    s.dims.assign(static_cast<size_t>(m), d);
    s.validate();
    return s;
}

int SubsystemShape::order() const {
    int n = 1;
    for (int d : dims) n *= d;
    return n;
}

void SubsystemShape::validate() const {
    if (dims.empty()) throw std::invalid_argument("SubsystemShape: empty");
    for (int d : dims)
        if (d < 2) throw std::invalid_argument("SubsystemShape: local dimension < 2");
}

Mat identity(int n) { return Mat::Identity(n, n); }

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Mat kron_all(const std::vector<Mat>& factors) {
    if (factors.empty()) throw std::invalid_argument("kron_all: empty");
    Mat out = factors.front();
    for (size_t i = 1; i < factors.size(); ++i) out = kron(out, factors[i]);
    return out;
}

Vec vec_row(const Mat& m) {
    Vec v(m.rows() * m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
    return v;
}

Mat unvec_row(const Vec& v, int rows, int cols) {
    if (v.size() != static_cast<Eigen::Index>(rows) * cols)
        throw std::invalid_argument("unvec_row: size mismatch");
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
    return m;
}

namespace {

Mat pauli_1q(int which) {
    Mat p(2, 2);
    const cplx I(0.0, 1.0);
    switch (which) {
        case 0: p << 1, 0, 0, 1; break;
        case 1: p << 0, 1, 1, 0; break;
        case 2: p << 0, -I, I, 0; break;
        case 3: p << 1, 0, 0, -1; break;
        default: throw std::invalid_argument("pauli_1q: index out of range");
    }
    return p;
}

} // namespace

Mat pauli_string(const std::vector<int>& digits, bool normalised) {
    if (digits.empty()) throw std::invalid_argument("pauli_string: empty");
    Mat out = pauli_1q(digits[0]);
    for (size_t i = 1; i < digits.size(); ++i) out = kron(out, pauli_1q(digits[i]));
    if (normalised) out /= std::sqrt(std::pow(2.0, static_cast<double>(digits.size())));
    return out;
}

std::vector<Mat> pauli_basis(int n_qubits, bool normalised) {
    if (n_qubits < 1) throw std::invalid_argument("pauli_basis: n_qubits < 1");
    int count = 1;
    for (int i = 0; i < 2 * n_qubits; ++i) count *= 2;
    std::vector<Mat> basis;
    basis.reserve(count);
    std::vector<int> digits(n_qubits, 0);
    for (int idx = 0; idx < count; ++idx) {
        int rem = idx;
        for (int q = n_qubits - 1; q >= 0; --q) {
            digits[q] = rem % 4;
            rem /= 4;
        }
        basis.push_back(pauli_string(digits, normalised));
    }
    return basis;
}

namespace {

// Mixed-radix index helpers for subsystem operations.
struct IndexSplit {
    std::vector<int> kept_dims, traced_dims;
    std::vector<int> kept_pos, traced_pos;
    std::vector<int> strides; // stride of each subsystem in the full index
};

IndexSplit make_split(const SubsystemShape& shape, const std::vector<int>& chosen) {
    const int m = shape.num_subsystems();
    for (int s : chosen)
        if (s < 0 || s >= m) throw std::out_of_range("subsystem index out of range");
    std::vector<bool> is_chosen(static_cast<size_t>(m), false);
    for (int s : chosen) is_chosen[static_cast<size_t>(s)] = true;

    IndexSplit sp;
    sp.strides.assign(static_cast<size_t>(m), 1);
    for (int i = m - 2; i >= 0; --i)
        sp.strides[static_cast<size_t>(i)] =
            sp.strides[static_cast<size_t>(i + 1)] * shape.dims[static_cast<size_t>(i + 1)];
    for (int i = 0; i < m; ++i) {
        if (is_chosen[static_cast<size_t>(i)]) {
            sp.kept_dims.push_back(shape.dims[static_cast<size_t>(i)]);
            sp.kept_pos.push_back(i);
        } else {
            sp.traced_dims.push_back(shape.dims[static_cast<size_t>(i)]);
            sp.traced_pos.push_back(i);
        }
    }
    return sp;
}

int compose_index(const IndexSplit& sp, const std::vector<int>& kept_digits,
                  const std::vector<int>& other_digits) {
    int idx = 0;
    for (size_t i = 0; i < sp.kept_pos.size(); ++i)
        idx += kept_digits[i] * sp.strides[static_cast<size_t>(sp.kept_pos[i])];
    for (size_t i = 0; i < sp.traced_pos.size(); ++i)
        idx += other_digits[i] * sp.strides[static_cast<size_t>(sp.traced_pos[i])];
    return idx;
}

bool advance_digits(std::vector<int>& digits, const std::vector<int>& dims) {
    for (int i = static_cast<int>(digits.size()) - 1; i >= 0; --i) {
        if (++digits[static_cast<size_t>(i)] < dims[static_cast<size_t>(i)]) return true;
        digits[static_cast<size_t>(i)] = 0;
    }
    return false;
}

} // namespace

Mat partial_trace(const Mat& m, const SubsystemShape& shape, const std::vector<int>& keep) {
    if (m.rows() != m.cols() || m.rows() != shape.order())
        throw std::invalid_argument("partial_trace: shape mismatch");
    IndexSplit sp = make_split(shape, keep);

    int out_dim = 1;
    for (int d : sp.kept_dims) out_dim *= d;
    Mat out = Mat::Zero(out_dim, out_dim);

    std::vector<int> row_digits(sp.kept_dims.size(), 0);
    int out_row = 0;
    do {
        std::vector<int> col_digits(sp.kept_dims.size(), 0);
        int out_col = 0;
        do {
            cplx acc = 0.0;
            std::vector<int> tr(sp.traced_dims.size(), 0);
            if (sp.traced_dims.empty()) {
                acc = m(compose_index(sp, row_digits, tr), compose_index(sp, col_digits, tr));
            } else {
                do {
                    acc += m(compose_index(sp, row_digits, tr), compose_index(sp, col_digits, tr));
                } while (advance_digits(tr, sp.traced_dims));
            }
            out(out_row, out_col) = acc;
            ++out_col;
        } while (advance_digits(col_digits, sp.kept_dims));
        ++out_row;
    } while (advance_digits(row_digits, sp.kept_dims));

    check_finite(out, "partial_trace");
    return out;
}

Mat partial_transpose(const Mat& m, const SubsystemShape& shape, const std::vector<int>& on) {
    if (m.rows() != m.cols() || m.rows() != shape.order())
        throw std::invalid_argument("partial_transpose: shape mismatch");
    if (on.empty()) return m;
    IndexSplit sp = make_split(shape, on); // kept_* here are the transposed ones

    Mat out(m.rows(), m.cols());
    std::vector<int> rt(sp.kept_dims.size(), 0);
    do {
        std::vector<int> ct(sp.kept_dims.size(), 0);
        do {
            std::vector<int> ro(sp.traced_dims.size(), 0);
            do {
                std::vector<int> co(sp.traced_dims.size(), 0);
                do {
                    // swap the row/col digits on the transposed subsystems
                    out(compose_index(sp, rt, ro), compose_index(sp, ct, co)) =
                        m(compose_index(sp, ct, ro), compose_index(sp, rt, co));
                } while (advance_digits(co, sp.traced_dims));
            } while (advance_digits(ro, sp.traced_dims));
        } while (advance_digits(ct, sp.kept_dims));
    } while (advance_digits(rt, sp.kept_dims));
    return out;
}

Mat permute_subsystems(const Mat& m, const SubsystemShape& shape, const std::vector<int>& new_order) {
    const int msub = shape.num_subsystems();
    if (static_cast<int>(new_order.size()) != msub)
        throw std::invalid_argument("permute_subsystems: order size mismatch");
    if (m.rows() != shape.order() || m.cols() != shape.order())
        throw std::invalid_argument("permute_subsystems: shape mismatch");

    std::vector<int> seen(static_cast<size_t>(msub), 0);
    for (int s : new_order) {
        if (s < 0 || s >= msub) throw std::out_of_range("permute_subsystems: bad index");
        if (seen[static_cast<size_t>(s)]++) throw std::invalid_argument("permute_subsystems: repeat");
    }

    std::vector<int> old_strides(static_cast<size_t>(msub), 1);
    for (int i = msub - 2; i >= 0; --i)
        old_strides[static_cast<size_t>(i)] =
            old_strides[static_cast<size_t>(i + 1)] * shape.dims[static_cast<size_t>(i + 1)];

    std::vector<int> new_dims(static_cast<size_t>(msub));
    for (int p = 0; p < msub; ++p)
        new_dims[static_cast<size_t>(p)] = shape.dims[static_cast<size_t>(new_order[static_cast<size_t>(p)])];

    const int n = shape.order();
    // map from new flat index -> old flat index
    std::vector<int> remap(static_cast<size_t>(n));
    std::vector<int> digits(static_cast<size_t>(msub), 0);
    for (int idx = 0;; ++idx) {
        int old_idx = 0;
        for (int p = 0; p < msub; ++p)
            old_idx += digits[static_cast<size_t>(p)] *
                       old_strides[static_cast<size_t>(new_order[static_cast<size_t>(p)])];
        remap[static_cast<size_t>(idx)] = old_idx;
        if (!advance_digits(digits, new_dims)) break;
    }

    Mat out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out(i, j) = m(remap[static_cast<size_t>(i)], remap[static_cast<size_t>(j)]);
    return out;
}

HermitianEig eig_hermitian(const Mat& m, double herm_tol) {
    if (m.rows() != m.cols()) throw std::invalid_argument("eig_hermitian: not square");
    double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (hermiticity_residue(m) > herm_tol * scale)
        throw std::invalid_argument("eig_hermitian: matrix not Hermitian within tolerance");
    Mat h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> solver(h);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eig_hermitian: solver failed");

    const Eigen::Index n = m.rows();
    HermitianEig out;
    out.eigenvalues = RealVec(n);
    out.eigenvectors = Mat(n, n);
    for (Eigen::Index i = 0; i < n; ++i) { // ascending -> descending
        out.eigenvalues(i) = solver.eigenvalues()(n - 1 - i);
        out.eigenvectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    return out;
}

Mat pseudoinverse(const Mat& m, double cutoff) {
    if (cutoff < 0) throw std::invalid_argument("pseudoinverse: cutoff < 0");
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    double smax = sv.size() > 0 ? sv(0) : 0.0;
    RealVec inv = RealVec::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff * smax && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

Mat matrix_sqrt_psd(const Mat& m) {
    HermitianEig eig = eig_hermitian(m, 1e-8);
    RealVec s(eig.eigenvalues.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        s(i) = eig.eigenvalues(i) > 0.0 ? std::sqrt(eig.eigenvalues(i)) : 0.0;
    return eig.eigenvectors * s.asDiagonal() * eig.eigenvectors.adjoint();
}

Mat project_psd(const Mat& m) {
    HermitianEig eig = eig_hermitian(m, 1e-8);
    RealVec s(eig.eigenvalues.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = std::max(eig.eigenvalues(i), 0.0);
    return eig.eigenvectors * s.asDiagonal() * eig.eigenvectors.adjoint();
}

double entropy_vn(const Mat& rho) {
    HermitianEig eig = eig_hermitian(rho);
    double s = 0.0;
    for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) {
        double p = eig.eigenvalues(i);
        if (p > kEigClip) s -= p * std::log(p);
    }
    return s;
}

double relative_entropy(const Mat& rho, const Mat& sigma) {
    if (rho.rows() != sigma.rows()) throw std::invalid_argument("relative_entropy: dim mismatch");
    HermitianEig er = eig_hermitian(rho);
    HermitianEig es = eig_hermitian(sigma);

    double s = 0.0;
    for (Eigen::Index i = 0; i < er.eigenvalues.size(); ++i) {
        double p = er.eigenvalues(i);
        if (p > kEigClip) s += p * std::log(p);
    }
    // -Tr[rho log sigma] in sigma's eigenbasis; support violation -> +inf
    for (Eigen::Index i = 0; i < es.eigenvalues.size(); ++i) {
        double q = es.eigenvalues(i);
        double weight = std::real(cplx(es.eigenvectors.col(i).adjoint() * rho * es.eigenvectors.col(i)));
        if (q > kEigClip) {
            s -= weight * std::log(q);
        } else if (weight > 1e-9) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return s;
}

double uhlmann_fidelity(const Mat& rho, const Mat& sigma) {
    Mat sr = matrix_sqrt_psd(rho);
    Mat inner = matrix_sqrt_psd(sr * sigma * sr);
    double f = std::real(inner.trace());
    return f * f;
}

double trace_norm(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues().sum();
}

double trace_distance(const Mat& a, const Mat& b) { return 0.5 * trace_norm(a - b); }

double hermiticity_residue(const Mat& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

nlohmann::json matrix_to_json(const Mat& m) {
    std::vector<double> re, im;
    re.reserve(static_cast<size_t>(m.size()));
    im.reserve(static_cast<size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            re.push_back(m(i, j).real());
            im.push_back(m(i, j).imag());
        }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"re", re}, {"im", im}};
}

Mat matrix_from_json(const nlohmann::json& j) {
    int rows = j.at("rows").get<int>();
    int cols = j.at("cols").get<int>();
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    if (static_cast<int>(re.size()) != rows * cols || static_cast<int>(im.size()) != rows * cols)
        throw std::invalid_argument("matrix_from_json: entry count mismatch");
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int jj = 0; jj < cols; ++jj)
            m(i, jj) = cplx(re[static_cast<size_t>(i * cols + jj)].get<double>(),
                            im[static_cast<size_t>(i * cols + jj)].get<double>());
    return m;
}

} // namespace ptt

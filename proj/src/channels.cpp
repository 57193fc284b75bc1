#include "ptt/channels.hpp"

#include <cmath>
#include <stdexcept>

namespace ptt {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

int log2_int(int n) {
    int k = 0;
    while ((1 << k) < n) ++k;
    return k;
}

} // namespace

Mat unitary_matrix(const UnitaryParams& p) {
    const cplx I(0.0, 1.0);
    Mat u(2, 2);
    u(0, 0) = std::cos(p.theta / 2.0);
    u(0, 1) = -std::exp(I * p.lambda) * std::sin(p.theta / 2.0);
    u(1, 0) = std::exp(I * p.phi) * std::sin(p.theta / 2.0);
    u(1, 1) = std::exp(I * (p.lambda + p.phi)) * std::cos(p.theta / 2.0);
    return u;
}

double unitary_overlap(const UnitaryParams& u, const UnitaryParams& v) {
    // |Tr[u^dag v]|^2 = 4 [cos(a) cos(t1/2)cos(t2/2) + cos(b) sin(t1/2)sin(t2/2)]^2
    // with a = ((l2-l1)+(p2-p1))/2, b = ((l2-l1)-(p2-p1))/2.
    double dl = v.lambda - u.lambda;
    double dp = v.phi - u.phi;
    double a = 0.5 * (dl + dp);
    double b = 0.5 * (dl - dp);
    double inner = std::cos(a) * std::cos(u.theta / 2.0) * std::cos(v.theta / 2.0) +
                   std::cos(b) * std::sin(u.theta / 2.0) * std::sin(v.theta / 2.0);
    return 4.0 * inner * inner;
}

Mat choi_from_superop(const Mat& superop, int dim_in, int dim_out) {
    if (superop.rows() != static_cast<Eigen::Index>(dim_out) * dim_out ||
        superop.cols() != static_cast<Eigen::Index>(dim_in) * dim_in)
        throw std::invalid_argument("choi_from_superop: dimension mismatch");
    Mat choi(dim_out * dim_in, dim_out * dim_in);
    for (int a = 0; a < dim_out; ++a)
        for (int b = 0; b < dim_in; ++b)
            for (int c = 0; c < dim_out; ++c)
                for (int d = 0; d < dim_in; ++d)
                    choi(a * dim_in + b, c * dim_in + d) = superop(a * dim_out + c, b * dim_in + d);
    return choi;
}

Mat superop_from_choi(const Mat& choi, int dim_in, int dim_out) {
    if (choi.rows() != static_cast<Eigen::Index>(dim_out) * dim_in || choi.rows() != choi.cols())
        throw std::invalid_argument("superop_from_choi: dimension mismatch");
    Mat superop(dim_out * dim_out, dim_in * dim_in);
    for (int a = 0; a < dim_out; ++a)
        for (int b = 0; b < dim_in; ++b)
            for (int c = 0; c < dim_out; ++c)
                for (int d = 0; d < dim_in; ++d)
                    superop(a * dim_out + c, b * dim_in + d) = choi(a * dim_in + b, c * dim_in + d);
    return superop;
}

QuantumChannel QuantumChannel::from_kraus(std::vector<Mat> kraus) {
    if (kraus.empty()) throw std::invalid_argument("from_kraus: no operators");
    QuantumChannel ch;
    ch.dim_out_ = static_cast<int>(kraus.front().rows());
    ch.dim_in_ = static_cast<int>(kraus.front().cols());
    for (const Mat& k : kraus)
        if (k.rows() != ch.dim_out_ || k.cols() != ch.dim_in_)
            throw std::invalid_argument("from_kraus: inconsistent dimensions");
    ch.repr_ = ChannelRepr::Kraus;
    ch.kraus_ = std::move(kraus);
    ch.classify_trace();
    return ch;
}

QuantumChannel QuantumChannel::from_superop(Mat superop, int dim_in, int dim_out) {
    QuantumChannel ch;
    ch.dim_in_ = dim_in;
    ch.dim_out_ = dim_out;
    ch.repr_ = ChannelRepr::Superop;
    ch.stored_ = std::move(superop);
    if (ch.stored_.rows() != static_cast<Eigen::Index>(dim_out) * dim_out ||
        ch.stored_.cols() != static_cast<Eigen::Index>(dim_in) * dim_in)
        throw std::invalid_argument("from_superop: dimension mismatch");
    ch.classify_trace();
    return ch;
}

QuantumChannel QuantumChannel::from_choi(Mat choi, int dim_in, int dim_out) {
    QuantumChannel ch;
    ch.dim_in_ = dim_in;
    ch.dim_out_ = dim_out;
    ch.repr_ = ChannelRepr::Choi;
    ch.stored_ = std::move(choi);
    if (ch.stored_.rows() != static_cast<Eigen::Index>(dim_in) * dim_out ||
        ch.stored_.rows() != ch.stored_.cols())
        throw std::invalid_argument("from_choi: dimension mismatch");
    ch.classify_trace();
    return ch;
}

QuantumChannel QuantumChannel::from_ptm(Eigen::MatrixXd ptm) {
    int n2 = static_cast<int>(ptm.rows());
    if (ptm.cols() != ptm.rows() || !is_power_of_two(n2))
        throw std::invalid_argument("from_ptm: need square 4^n matrix");
    int d2 = n2; // d^2
    int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d2))));
    if (d * d != d2 || !is_power_of_two(d)) throw std::invalid_argument("from_ptm: not qubit-sized");

    auto paulis = pauli_basis(log2_int(d), true);
    Mat superop = Mat::Zero(d2, d2);
    for (int i = 0; i < d2; ++i) {
        Vec pi = vec_row(paulis[static_cast<size_t>(i)]);
        for (int j = 0; j < d2; ++j) {
            Vec pj = vec_row(paulis[static_cast<size_t>(j)]);
            superop += ptm(i, j) * pi * pj.adjoint();
        }
    }
    QuantumChannel ch = from_superop(std::move(superop), d, d);
    ch.ptm_ = std::move(ptm);
    return ch;
}

QuantumChannel QuantumChannel::identity(int dim) {
    return from_kraus({Mat::Identity(dim, dim)});
}

void QuantumChannel::classify_trace() {
    Mat reduced = partial_trace(choi(), SubsystemShape{dim_out_, dim_in_}, {1});
    trace_class_ = (reduced - Mat::Identity(dim_in_, dim_in_)).cwiseAbs().maxCoeff() <= 1e-9
                       ? TraceClass::TP
                       : TraceClass::TNI;
}

std::vector<Mat> QuantumChannel::kraus() const {
    if (repr_ == ChannelRepr::Kraus) return kraus_;
    Mat c = choi();
    HermitianEig eig = eig_hermitian(c, 1e-8);
    double scale = std::max(1.0, eig.eigenvalues.cwiseAbs().maxCoeff());
    if (eig.eigenvalues.minCoeff() < -1e-9 * scale)
        throw std::runtime_error("kraus: channel is not completely positive");
    std::vector<Mat> ops;
    for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) {
        double lam = eig.eigenvalues(i);
        if (lam <= 1e-12 * scale) continue;
        ops.push_back(std::sqrt(lam) * unvec_row(eig.eigenvectors.col(i), dim_out_, dim_in_));
    }
    if (ops.empty()) ops.push_back(Mat::Zero(dim_out_, dim_in_));
    return ops;
}

Mat QuantumChannel::superop() const {
    switch (repr_) {
        case ChannelRepr::Superop: return stored_;
        case ChannelRepr::Choi: return superop_from_choi(stored_, dim_in_, dim_out_);
        case ChannelRepr::Kraus: {
            Mat r = Mat::Zero(dim_out_ * dim_out_, dim_in_ * dim_in_);
            for (const Mat& k : kraus_) r += kron(k, k.conjugate());
            return r;
        }
        case ChannelRepr::Ptm: return stored_;
    }
    throw std::logic_error("superop: bad repr");
}

Mat QuantumChannel::choi() const {
    if (repr_ == ChannelRepr::Choi) return stored_;
    return choi_from_superop(superop(), dim_in_, dim_out_);
}

Eigen::MatrixXd QuantumChannel::ptm() const {
    if (ptm_.size() > 0) return ptm_;
    if (dim_in_ != dim_out_ || !is_power_of_two(dim_in_))
        throw std::invalid_argument("ptm: defined for equal qubit dimensions");
    auto paulis = pauli_basis(log2_int(dim_in_), true);
    int d2 = dim_in_ * dim_in_;
    Mat r = superop();
    Eigen::MatrixXd out(d2, d2);
    double max_imag = 0.0;
    for (int i = 0; i < d2; ++i) {
        Vec pi = vec_row(paulis[static_cast<size_t>(i)]);
        for (int j = 0; j < d2; ++j) {
            Vec pj = vec_row(paulis[static_cast<size_t>(j)]);
            cplx v = pi.adjoint() * r * pj;
            max_imag = std::max(max_imag, std::abs(v.imag()));
            out(i, j) = v.real();
        }
    }
    if (max_imag > 1e-9)
        throw std::runtime_error("ptm: imaginary residue exceeds 1e-9 (non-Hermiticity upstream)");
    return out;
}

QuantumChannel QuantumChannel::convert(ChannelRepr target) const {
    switch (target) {
        case ChannelRepr::Kraus: return from_kraus(kraus());
        case ChannelRepr::Superop: return from_superop(superop(), dim_in_, dim_out_);
        case ChannelRepr::Choi: return from_choi(choi(), dim_in_, dim_out_);
        case ChannelRepr::Ptm: return from_ptm(ptm());
    }
    throw std::logic_error("convert: bad repr");
}

Mat QuantumChannel::apply(const Mat& rho) const {
    if (rho.rows() != dim_in_ || rho.cols() != dim_in_)
        throw std::invalid_argument("apply: state dimension mismatch");
    return unvec_row(superop() * vec_row(rho), dim_out_, dim_out_);
}

bool QuantumChannel::is_cp(double tol) const {
    HermitianEig eig = eig_hermitian(choi(), 1e-8);
    return eig.eigenvalues.minCoeff() >= -tol;
}

bool QuantumChannel::is_unital(double tol) const {
    Mat out = apply(Mat::Identity(dim_in_, dim_in_));
    return (out - Mat::Identity(dim_out_, dim_out_)).cwiseAbs().maxCoeff() <= tol;
}

QuantumChannel QuantumChannel::compose_after(const QuantumChannel& first) const {
    if (first.dim_out_ != dim_in_) throw std::invalid_argument("compose_after: dim mismatch");
    return from_superop(superop() * first.superop(), first.dim_in_, dim_out_);
}

nlohmann::json QuantumChannel::to_json() const {
    nlohmann::json j;
    j["dim_in"] = dim_in_;
    j["dim_out"] = dim_out_;
    j["trace_class"] = trace_class_ == TraceClass::TP ? "tp" : "tni";
    switch (repr_) {
        case ChannelRepr::Kraus: {
            j["repr"] = "kraus";
            nlohmann::json ks = nlohmann::json::array();
            for (const Mat& k : kraus_) ks.push_back(matrix_to_json(k));
            j["kraus"] = ks;
            break;
        }
        case ChannelRepr::Superop:
            j["repr"] = "superop";
            j["superop"] = matrix_to_json(stored_);
            break;
        case ChannelRepr::Choi:
            j["repr"] = "choi";
            j["choi"] = matrix_to_json(stored_);
            break;
        case ChannelRepr::Ptm: {
            j["repr"] = "ptm";
            j["ptm"] = matrix_to_json(ptm_.cast<cplx>());
            break;
        }
    }
    return j;
}

QuantumChannel QuantumChannel::from_json(const nlohmann::json& j) {
    std::string repr = j.at("repr").get<std::string>();
    int din = j.at("dim_in").get<int>();
    int dout = j.at("dim_out").get<int>();
    if (repr == "kraus") {
        std::vector<Mat> ks;
        for (const auto& kj : j.at("kraus")) ks.push_back(matrix_from_json(kj));
        return from_kraus(std::move(ks));
    }
    if (repr == "superop") return from_superop(matrix_from_json(j.at("superop")), din, dout);
    if (repr == "choi") return from_choi(matrix_from_json(j.at("choi")), din, dout);
    if (repr == "ptm") return from_ptm(matrix_from_json(j.at("ptm")).real());
    throw std::invalid_argument("channel from_json: unknown repr " + repr);
}

QuantumChannel standard_channel(StandardChannelKind kind, double p, const UnitaryParams& u) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("standard_channel: p outside [0,1]");
    const Mat I2 = Mat::Identity(2, 2);
    const Mat X = pauli_string({1});
    const Mat Y = pauli_string({2});
    const Mat Z = pauli_string({3});
    switch (kind) {
        case StandardChannelKind::Depolarising: {
            std::vector<Mat> ks = {std::sqrt(1.0 - 3.0 * p / 4.0) * I2, std::sqrt(p / 4.0) * X,
                                   std::sqrt(p / 4.0) * Y, std::sqrt(p / 4.0) * Z};
            return QuantumChannel::from_kraus(ks);
        }
        case StandardChannelKind::Dephasing: {
            std::vector<Mat> ks = {std::sqrt(1.0 - p / 2.0) * I2, std::sqrt(p / 2.0) * Z};
            return QuantumChannel::from_kraus(ks);
        }
        case StandardChannelKind::AmplitudeDamping: {
            Mat k0 = Mat::Zero(2, 2), k1 = Mat::Zero(2, 2);
            k0(0, 0) = 1.0;
            k0(1, 1) = std::sqrt(1.0 - p);
            k1(0, 1) = std::sqrt(p);
            return QuantumChannel::from_kraus({k0, k1});
        }
        case StandardChannelKind::Unitary:
            return QuantumChannel::from_kraus({unitary_matrix(u)});
        case StandardChannelKind::MaximalDepolarising:
            return QuantumChannel::from_kraus({0.5 * I2, 0.5 * X, 0.5 * Y, 0.5 * Z});
    }
    throw std::logic_error("standard_channel: bad kind");
}

Mat link_product(const Mat& a, const SubsystemShape& shape_a, const std::vector<int>& shared_a,
                 const Mat& b, const SubsystemShape& shape_b, const std::vector<int>& shared_b) {
    if (shared_a.size() != shared_b.size())
        throw std::invalid_argument("link_product: shared leg count mismatch");
    for (size_t i = 0; i < shared_a.size(); ++i)
        if (shape_a.dims[static_cast<size_t>(shared_a[i])] !=
            shape_b.dims[static_cast<size_t>(shared_b[i])])
            throw std::invalid_argument("link_product: shared leg dimension mismatch");

    auto complement = [](int m, const std::vector<int>& chosen) {
        std::vector<bool> mask(static_cast<size_t>(m), false);
        for (int c : chosen) mask[static_cast<size_t>(c)] = true;
        std::vector<int> rest;
        for (int i = 0; i < m; ++i)
            if (!mask[static_cast<size_t>(i)]) rest.push_back(i);
        return rest;
    };

    std::vector<int> only_a = complement(shape_a.num_subsystems(), shared_a);
    std::vector<int> only_b = complement(shape_b.num_subsystems(), shared_b);

    // a: unshared legs first, shared last; b: shared first (matched order).
    std::vector<int> order_a = only_a;
    order_a.insert(order_a.end(), shared_a.begin(), shared_a.end());
    std::vector<int> order_b = shared_b;
    order_b.insert(order_b.end(), only_b.begin(), only_b.end());

    Mat ap = permute_subsystems(a, shape_a, order_a);
    Mat bp = permute_subsystems(b, shape_b, order_b);

    int dim_only_a = 1, dim_shared = 1, dim_only_b = 1;
    for (int i : only_a) dim_only_a *= shape_a.dims[static_cast<size_t>(i)];
    for (int i : shared_a) dim_shared *= shape_a.dims[static_cast<size_t>(i)];
    for (int i : only_b) dim_only_b *= shape_b.dims[static_cast<size_t>(i)];

    Mat bpt = dim_only_b > 1
                  ? partial_transpose(bp, SubsystemShape{dim_shared, dim_only_b}, {0})
                  : Mat(bp.transpose());

    Mat lhs = kron(ap, Mat::Identity(dim_only_b, dim_only_b));
    Mat rhs = kron(Mat::Identity(dim_only_a, dim_only_a), bpt);
    Mat prod = lhs * rhs;

    // trace over the shared block; factors of dimension 1 are dropped from the shape
    std::vector<int> dims;
    if (dim_only_a > 1) dims.push_back(dim_only_a);
    int shared_pos = static_cast<int>(dims.size());
    dims.push_back(dim_shared);
    if (dim_only_b > 1) dims.push_back(dim_only_b);

    if (dims.size() == 1) { // fully shared: scalar result
        Mat out(1, 1);
        out(0, 0) = prod.trace();
        return out;
    }
    std::vector<int> keep;
    for (int i = 0; i < static_cast<int>(dims.size()); ++i)
        if (i != shared_pos) keep.push_back(i);
    return partial_trace(prod, SubsystemShape(dims), keep);
}

} // namespace ptt

#pragma once

#include "ptt/linalg.hpp"

namespace ptt {

/// Standard single-qubit unitary parametrisation:
///   u = [[cos(t/2), -e^{il} sin(t/2)], [e^{ip} sin(t/2), e^{i(l+p)} cos(t/2)]]
struct UnitaryParams {
    double theta = 0.0;
    double phi = 0.0;
    double lambda = 0.0;
};

Mat unitary_matrix(const UnitaryParams& p);

/// Hilbert-Schmidt overlap of two single-qubit unitary channels, |Tr[u^dag v]|^2.
double unitary_overlap(const UnitaryParams& u, const UnitaryParams& v);

enum class ChannelRepr { Kraus, Superop, Ptm, Choi };
enum class TraceClass { TP, TNI };

/// One logical quantum map with interconvertible Kraus / superoperator / PTM /
/// Choi views. Row-vectorised convention throughout; the Choi factor order is
/// output (x) input with trace d for TP maps.
class QuantumChannel {
public:
    static QuantumChannel from_kraus(std::vector<Mat> kraus);
    static QuantumChannel from_superop(Mat superop, int dim_in, int dim_out);
    static QuantumChannel from_choi(Mat choi, int dim_in, int dim_out);
    static QuantumChannel from_ptm(Eigen::MatrixXd ptm); // qubit dimensions only

    static QuantumChannel identity(int dim);

    QuantumChannel convert(ChannelRepr target) const;

    int dim_in() const { return dim_in_; }
    int dim_out() const { return dim_out_; }
    ChannelRepr repr() const { return repr_; }
    TraceClass trace_class() const { return trace_class_; }

    /// Views; each computed from the stored representation on demand.
    std::vector<Mat> kraus() const;
    Mat superop() const;
    Mat choi() const;
    Eigen::MatrixXd ptm() const;

    Mat apply(const Mat& rho) const;

    bool is_cp(double tol = 1e-9) const;
    bool is_unital(double tol = 1e-10) const;

    QuantumChannel compose_after(const QuantumChannel& first) const; // this o first

    nlohmann::json to_json() const;
    static QuantumChannel from_json(const nlohmann::json& j);

private:
    QuantumChannel() = default;

    int dim_in_ = 0, dim_out_ = 0;
    ChannelRepr repr_ = ChannelRepr::Choi;
    TraceClass trace_class_ = TraceClass::TP;
    std::vector<Mat> kraus_;
    Mat stored_; // superop or choi payload
    Eigen::MatrixXd ptm_;

    void classify_trace();
};

enum class StandardChannelKind {
    Depolarising,
    Dephasing,
    AmplitudeDamping,
    Unitary,
    MaximalDepolarising,
};

QuantumChannel standard_channel(StandardChannelKind kind, double p = 0.0,
                                const UnitaryParams& u = {});

/// Choi <-> superoperator index reshuffle for a map between square operators.
Mat choi_from_superop(const Mat& superop, int dim_in, int dim_out);
Mat superop_from_choi(const Mat& choi, int dim_in, int dim_out);

/// Link product A * B over matched shared legs; partial transpose falls on the
/// shared legs of b (the chronologically earlier factor). Unshared legs keep
/// their order, a's first.
Mat link_product(const Mat& a, const SubsystemShape& shape_a, const std::vector<int>& shared_a,
                 const Mat& b, const SubsystemShape& shape_b, const std::vector<int>& shared_b);

} // namespace ptt

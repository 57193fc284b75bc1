#include "ptt/tomo_basis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ptt/optim.hpp"
#include "ptt/rng.hpp"

namespace ptt {

namespace {

// rows are <<B_i| so that M vec(D_j) = e_j gives Tr[B_i D_j] = delta_ij
Mat stacked_basis_matrix(const std::vector<Mat>& basis) {
    if (basis.empty()) throw std::invalid_argument("dual_set: empty basis");
    const Eigen::Index n2 = basis.front().size();
    Mat m(static_cast<Eigen::Index>(basis.size()), n2);
    for (size_t i = 0; i < basis.size(); ++i) {
        if (basis[i].size() != n2) throw std::invalid_argument("dual_set: ragged basis");
        m.row(static_cast<Eigen::Index>(i)) = vec_row(basis[i]).adjoint();
    }
    return m;
}

} // namespace

double condition_number(const std::vector<Mat>& basis) {
    Mat m = stacked_basis_matrix(basis);
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& sv = svd.singularValues();
    double smin = sv(sv.size() - 1);
    if (smin < 1e-14 * sv(0)) return std::numeric_limits<double>::infinity();
    return sv(0) / smin;
}

double InstrumentBasis::condition_number() const {
    if (condition_cache_ < 0.0) condition_cache_ = ptt::condition_number(elements);
    return condition_cache_;
}

DualSet dual_set(const std::vector<Mat>& basis) {
    Mat m = stacked_basis_matrix(basis);
    Mat pinv = pseudoinverse(m, 1e-12); // columns are the vectorised duals
    const int order = static_cast<int>(basis.front().rows());
    DualSet out;
    for (size_t j = 0; j < basis.size(); ++j)
        out.duals.push_back(unvec_row(pinv.col(static_cast<Eigen::Index>(j)), order, order));
    return out;
}

DualSet dual_set(const InstrumentBasis& basis) { return dual_set(basis.elements); }

InstrumentBasis ic_measure_prepare_basis(int d_s) {
    if (d_s != 2) throw std::invalid_argument("ic_measure_prepare_basis: d_s=2 only");
    const double s = 1.0 / std::sqrt(2.0);
    const cplx I(0.0, 1.0);
    Vec zero(2), one(2), plus(2), iplus(2);
    zero << 1.0, 0.0;
    one << 0.0, 1.0;
    plus << s, s;
    iplus << s, I * s;

    std::vector<Mat> preps;
    for (const Vec& v : {zero, one, plus, iplus}) preps.push_back(v * v.adjoint());

    // tetrahedral rank-one effects summing to the identity, so each setting
    // (one preparation, four outcomes) is a complete instrument
    const double t = 1.0 / std::sqrt(3.0);
    const double axes[4][3] = {{t, t, t}, {t, -t, -t}, {-t, t, -t}, {-t, -t, t}};
    std::vector<Mat> effects;
    for (const auto& n : axes) {
        Mat e = 0.25 * (Mat::Identity(2, 2) + n[0] * pauli_string({1}) + n[1] * pauli_string({2}) +
                        n[2] * pauli_string({3}));
        effects.push_back(e);
    }

    InstrumentBasis basis;
    basis.kind = BasisKind::IcMeasurePrepare;
    basis.outcomes_per_setting = 4;
    for (const Mat& prep : preps)
        for (const Mat& effect : effects)
            basis.elements.push_back(2.0 * kron(prep, effect.transpose()));
    return basis;
}

InstrumentBasis unitary_basis_from_params(const std::vector<UnitaryParams>& params) {
    InstrumentBasis basis;
    basis.kind = BasisKind::UnitaryRestricted;
    basis.unitary_params = params;
    for (const UnitaryParams& p : params) basis.elements.push_back(unitary_instrument(p));
    return basis;
}

InstrumentBasis random_unitary_basis(int count, std::uint64_t seed) {
    CounterRng rng(seed);
    std::vector<UnitaryParams> params;
    for (int i = 0; i < count; ++i) {
        UnitaryParams p;
        p.theta = 2.0 * std::acos(std::sqrt(rng.uniform()));
        p.phi = 2.0 * M_PI * rng.uniform() - M_PI;
        p.lambda = 2.0 * M_PI * rng.uniform() - M_PI;
        params.push_back(p);
    }
    return unitary_basis_from_params(params);
}

std::vector<UnitaryParams> catalogued_low_overlap_params() {
    return {
        {1.1148, 1.5606, 0.8160},   {-2.1993, -2.0552, -0.3564}, {0.9616, -0.8573, 1.2333},
        {2.2655, -2.7083, 0.3154},  {-0.1013, -0.5548, -1.1472}, {1.8434, 0.8074, -1.1772},
        {-2.2036, 1.9589, 2.4002},  {-1.2038, -0.2023, 1.2355},  {2.1791, 3.2836, 2.3524},
        {-1.3116, 2.3082, 0.2882},
    };
}

double overlap_objective(const std::vector<UnitaryParams>& params) {
    double total = 0.0;
    for (size_t i = 0; i < params.size(); ++i)
        for (size_t j = i + 1; j < params.size(); ++j) {
            double ov = unitary_overlap(params[i], params[j]) / 4.0;
            total += ov * ov;
        }
    return total;
}

namespace {

std::vector<UnitaryParams> unpack_params(const Eigen::VectorXd& x) {
    std::vector<UnitaryParams> params;
    const int n = static_cast<int>(x.size()) / 3;
    for (int i = 0; i < n; ++i) params.push_back({x(i), x(n + i), x(2 * n + i)});
    return params;
}

} // namespace

MuubSearchResult muub_search(std::uint64_t seed, int restarts) {
    const double reference = overlap_objective(catalogued_low_overlap_params());
    MuubSearchResult best;
    best.objective = std::numeric_limits<double>::infinity();

    auto objective = [](const Eigen::VectorXd& x) { return overlap_objective(unpack_params(x)); };

    CounterRng root(seed);
    for (int r = 0; r < restarts; ++r) {
        CounterRng rng = root.split(static_cast<std::uint64_t>(r));
        Eigen::VectorXd x0(30);
        for (int i = 0; i < 30; ++i) x0(i) = 2.0 * M_PI * rng.uniform() - M_PI;
        LbfgsOptions opts;
        opts.max_iters = 400;
        opts.grad_tol = 1e-10;
        LbfgsResult res = lbfgs_minimize_fd(objective, x0, 1e-6, opts);
        best.restarts_used = r + 1;
        if (res.value < best.objective) {
            best.objective = res.value;
            best.params = unpack_params(res.x);
        }
        if (std::abs(best.objective - reference) <= 1e-3) break;
    }
    best.reached_reference = std::abs(best.objective - reference) <= 1e-3;
    return best;
}

nlohmann::json InstrumentBasis::to_json() const {
    nlohmann::json j;
    switch (kind) {
        case BasisKind::UnitaryRestricted: j["kind"] = "unitary_restricted"; break;
        case BasisKind::IcMeasurePrepare: j["kind"] = "ic_measure_prepare"; break;
        case BasisKind::Custom: j["kind"] = "custom"; break;
    }
    nlohmann::json els = nlohmann::json::array();
    for (const Mat& e : elements) {
        // persist each element as a channel (elements carry d x the channel Choi)
        int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(e.rows()))));
        els.push_back(QuantumChannel::from_choi(e / static_cast<double>(d), d, d).to_json());
    }
    j["elements"] = els;
    j["outcomes_per_setting"] = outcomes_per_setting;
    if (!unitary_params.empty()) {
        nlohmann::json ps = nlohmann::json::array();
        for (const UnitaryParams& p : unitary_params)
            ps.push_back({{"theta", p.theta}, {"phi", p.phi}, {"lambda", p.lambda}});
        j["unitary_params"] = ps;
    }
    return j;
}

InstrumentBasis InstrumentBasis::from_json(const nlohmann::json& j) {
    InstrumentBasis basis;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "unitary_restricted")
        basis.kind = BasisKind::UnitaryRestricted;
    else if (kind == "ic_measure_prepare")
        basis.kind = BasisKind::IcMeasurePrepare;
    else
        basis.kind = BasisKind::Custom;
    for (const auto& ej : j.at("elements")) {
        QuantumChannel ch = QuantumChannel::from_json(ej);
        basis.elements.push_back(static_cast<double>(ch.dim_in()) * ch.choi());
    }
    basis.outcomes_per_setting = j.value("outcomes_per_setting", 1);
    if (j.contains("unitary_params"))
        for (const auto& pj : j.at("unitary_params"))
            basis.unitary_params.push_back({pj.at("theta").get<double>(), pj.at("phi").get<double>(),
                                            pj.at("lambda").get<double>()});
    return basis;
}

} // namespace ptt

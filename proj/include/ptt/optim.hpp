#pragma once

#include <functional>

#include <Eigen/Dense>

namespace ptt {

struct LbfgsOptions {
    int memory = 10;
    int max_iters = 500;
    double grad_tol = 1e-9;
    double step_tol = 1e-13;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Limited-memory quasi-Newton minimisation with Armijo backtracking.
LbfgsResult lbfgs_minimize(const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& fg,
                           const Eigen::VectorXd& x0, const LbfgsOptions& opts = {});

/// Same with a central finite-difference gradient.
LbfgsResult lbfgs_minimize_fd(const std::function<double(const Eigen::VectorXd&)>& f,
                              const Eigen::VectorXd& x0, double fd_step = 1e-6,
                              const LbfgsOptions& opts = {});

struct NelderMeadOptions {
    int max_evals = 200;
    double initial_step = 0.4;
    double f_tol = 1e-12;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int evaluations = 0;
    bool stalled = false;
};

/// Derivative-free simplex descent; the shrink step is omitted and a stalled
/// contraction simply re-anchors the worst vertex.
NelderMeadResult nelder_mead_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                      const Eigen::VectorXd& x0,
                                      const NelderMeadOptions& opts = {});

} // namespace ptt

#include "ptt/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

namespace ptt {

LbfgsResult lbfgs_minimize(const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& fg,
                           const Eigen::VectorXd& x0, const LbfgsOptions& opts) {
    using Vecd = Eigen::VectorXd;
    LbfgsResult result;
    Vecd x = x0;
    Vecd g(x.size());
    double f = fg(x, g);

    std::deque<Vecd> s_hist, y_hist;
    std::deque<double> rho_hist;

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        result.iterations = iter + 1;
        double gnorm = g.norm();
        result.grad_norm = gnorm;
        if (gnorm < opts.grad_tol) {
            result.converged = true;
            break;
        }

        // two-loop recursion
        Vecd q = g;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[static_cast<size_t>(i)] =
                rho_hist[static_cast<size_t>(i)] * s_hist[static_cast<size_t>(i)].dot(q);
            q -= alpha[static_cast<size_t>(i)] * y_hist[static_cast<size_t>(i)];
        }
        double gamma = 1.0;
        if (!s_hist.empty()) {
            double yy = y_hist.back().squaredNorm();
            if (yy > 0) gamma = s_hist.back().dot(y_hist.back()) / yy;
        }
        Vecd z = gamma * q;
        for (size_t i = 0; i < s_hist.size(); ++i) {
            double beta = rho_hist[i] * y_hist[i].dot(z);
            z += (alpha[i] - beta) * s_hist[i];
        }
        Vecd dir = -z;
        double dg = dir.dot(g);
        if (dg > 0) { // safeguard: fall back to steepest descent
            dir = -g;
            dg = -g.squaredNorm();
        }

        // Armijo backtracking
        double step = 1.0;
        const double c1 = 1e-4;
        Vecd xn, gn(x.size());
        double fn = f;
        bool accepted = false;
        for (int ls = 0; ls < 50; ++ls) {
            xn = x + step * dir;
            fn = fg(xn, gn);
            if (fn <= f + c1 * step * dg) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted || (x - xn).norm() < opts.step_tol) {
            result.converged = accepted;
            if (accepted) {
                x = xn;
                f = fn;
                g = gn;
            }
            break;
        }

        Vecd s = xn - x;
        Vecd yv = gn - g;
        double sy = s.dot(yv);
        if (sy > 1e-12) {
            s_hist.push_back(s);
            y_hist.push_back(yv);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        x = xn;
        f = fn;
        g = gn;
    }
    result.x = x;
    result.value = f;
    result.grad_norm = g.norm();
    if (result.grad_norm < opts.grad_tol) result.converged = true;
    return result;
}

LbfgsResult lbfgs_minimize_fd(const std::function<double(const Eigen::VectorXd&)>& f,
                              const Eigen::VectorXd& x0, double fd_step,
                              const LbfgsOptions& opts) {
    auto fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        double val = f(x);
        g.resize(x.size());
        Eigen::VectorXd xp = x;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            double orig = xp(i);
            xp(i) = orig + fd_step;
            double up = f(xp);
            xp(i) = orig - fd_step;
            double dn = f(xp);
            xp(i) = orig;
            g(i) = (up - dn) / (2.0 * fd_step);
        }
        return val;
    };
    return lbfgs_minimize(fg, x0, opts);
}

NelderMeadResult nelder_mead_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                      const Eigen::VectorXd& x0, const NelderMeadOptions& opts) {
    using Vecd = Eigen::VectorXd;
    const int n = static_cast<int>(x0.size());
    NelderMeadResult result;

    std::vector<std::pair<double, Vecd>> simplex;
    auto eval = [&](const Vecd& x) {
        ++result.evaluations;
        return f(x);
    };
    simplex.push_back({eval(x0), x0});
    for (int i = 0; i < n; ++i) {
        Vecd v = x0;
        v(i) += opts.initial_step;
        simplex.push_back({eval(v), v});
    }
    auto sort_simplex = [&]() {
        std::sort(simplex.begin(), simplex.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    };
    sort_simplex();

    while (result.evaluations < opts.max_evals) {
        if (simplex.back().first - simplex.front().first < opts.f_tol) break;
        Vecd centroid = Vecd::Zero(n);
        for (int i = 0; i < n; ++i) centroid += simplex[static_cast<size_t>(i)].second;
        centroid /= static_cast<double>(n);
        const Vecd& worst = simplex.back().second;
        double f_worst = simplex.back().first;
        double f_best = simplex.front().first;
        double f_second = simplex[static_cast<size_t>(n - 1)].first;

        Vecd refl = centroid + (centroid - worst);
        double f_refl = eval(refl);
        if (f_refl < f_best) {
            Vecd expand = centroid + 2.0 * (centroid - worst);
            double f_expand = eval(expand);
            if (f_expand < f_refl)
                simplex.back() = {f_expand, expand};
            else
                simplex.back() = {f_refl, refl};
        } else if (f_refl < f_second) {
            simplex.back() = {f_refl, refl};
        } else {
            Vecd contr = centroid + 0.5 * (worst - centroid);
            double f_contr = eval(contr);
            if (f_contr < f_worst) {
                simplex.back() = {f_contr, contr};
            } else {
                // no shrink step: nudge the worst vertex towards the best instead
                Vecd nudge = simplex.front().second + 0.25 * (worst - simplex.front().second);
                simplex.back() = {eval(nudge), nudge};
            }
        }
        sort_simplex();
    }
    result.stalled = result.evaluations >= opts.max_evals;
    result.x = simplex.front().second;
    result.value = simplex.front().first;
    return result;
}

} // namespace ptt

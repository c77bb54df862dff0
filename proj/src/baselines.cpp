#include "crtre/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "crtre/errors.hpp"

namespace crtre::base {

namespace {

// Normal equations with an explicit intercept column.
ModelParams solve_normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   double ridge_lambda) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    Eigen::MatrixXd design(n, p + 1);
    design.leftCols(p) = x;
    design.col(p).setOnes();
    Eigen::MatrixXd gram = design.transpose() * design;
    if (ridge_lambda > 0.0) gram.topLeftCorner(p, p).diagonal().array() += ridge_lambda;
    const Eigen::VectorXd rhs = design.transpose() * y;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
    if (d.minCoeff() <= 1e-12 * d.maxCoeff())
        throw SingularSystemError(
            "singular least-squares system; consider the ridge penalty instead");
    Eigen::VectorXd sol = ldlt.solve(rhs);
    const double resid = (gram * sol - rhs).norm();
    if (!sol.allFinite() || resid > 1e-6 * (1.0 + rhs.norm()))
        throw SingularSystemError(
            "singular least-squares system; consider the ridge penalty instead");
    ModelParams params;
    params.beta = sol.head(p);
    params.intercept = sol(p);
    params.kind = ModelKind::least_squares;
    return params;
}

ModelParams lasso_coordinate_descent(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     double lambda) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    // Center so the intercept drops out of the descent loop.
    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const double y_mean = y.mean();
    const Eigen::MatrixXd xc = x.rowwise() - x_mean;
    const Eigen::VectorXd yc = y.array() - y_mean;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd resid = yc;
    const Eigen::VectorXd col_sq = xc.colwise().squaredNorm();
    for (int sweep = 0; sweep < 10000; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (col_sq(j) == 0.0) continue;
            const double old = beta(j);
            const double rho = xc.col(j).dot(resid) + old * col_sq(j);
            // min ||yc - XC b||^2 + lambda |b|_1: soft threshold at lambda/2.
            const double thr = lambda / 2.0;
            double next = 0.0;
            if (rho > thr)
                next = (rho - thr) / col_sq(j);
            else if (rho < -thr)
                next = (rho + thr) / col_sq(j);
            if (next != old) {
                resid += xc.col(j) * (old - next);
                beta(j) = next;
                max_change = std::max(max_change, std::abs(next - old));
            }
        }
        if (max_change < 1e-8) break;
    }
    ModelParams params;
    params.beta = beta;
    params.intercept = y_mean - x_mean.dot(beta);
    params.kind = ModelKind::least_squares;
    return params;
}

}  // namespace

ModelParams fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const LinearFitConfig& cfg) {
    if (x.rows() == 0) throw ConfigError("fit_linear: empty data");
    if (x.rows() != y.size()) throw SchemaError("fit_linear: label length mismatch");
    if (cfg.lambda < 0.0) throw ConfigError("fit_linear: lambda must be >= 0");
    switch (cfg.penalty) {
        case Penalty::none: return solve_normal_equations(x, y, 0.0);
        case Penalty::l2: return solve_normal_equations(x, y, cfg.lambda);
        case Penalty::l1: return lasso_coordinate_descent(x, y, cfg.lambda);
    }
    throw ConfigError("fit_linear: unknown penalty");
}

ModelParams fit_weighted_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& w) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (w.size() != n || y.size() != n)
        throw SchemaError("fit_weighted_least_squares: length mismatch");
    Eigen::MatrixXd design(n, p + 1);
    design.leftCols(p) = x;
    design.col(p).setOnes();
    const Eigen::MatrixXd wd = w.asDiagonal() * design;
    Eigen::MatrixXd gram = design.transpose() * wd;
    gram.diagonal().array() += 1e-12 * (1.0 + gram.diagonal().maxCoeff());
    const Eigen::VectorXd rhs = wd.transpose() * y;
    const Eigen::VectorXd sol = gram.ldlt().solve(rhs);
    if (!sol.allFinite()) throw SingularSystemError("fit_weighted_least_squares: singular system");
    ModelParams params;
    params.beta = sol.head(p);
    params.intercept = sol(p);
    params.kind = ModelKind::least_squares;
    return params;
}

ModelParams fit_svm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    const LinearFitConfig& cfg) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (y.size() != n) throw SchemaError("fit_svm: label length mismatch");
    bool has0 = false, has1 = false;
    for (Eigen::Index i = 0; i < n; ++i) (y(i) == 1.0 ? has1 : has0) = true;
    if (!has0 || !has1) throw ConfigError("fit_svm: single-class labels");

    // min 0.5||b||^2 + c * sum hinge(1 - s_i (x b + b0)), s in {-1, +1}
    Eigen::VectorXd sign(n);
    for (Eigen::Index i = 0; i < n; ++i) sign(i) = y(i) == 1.0 ? 1.0 : -1.0;
    const double c = cfg.c_margin;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double intercept = 0.0;
    const double j0 = c * static_cast<double>(n);  // hinge at zero params
    const double radius = std::sqrt(2.0 * j0);
    const double grad_scale = 1.0 + c * static_cast<double>(n) *
                                        std::sqrt(x.squaredNorm() / std::max<double>(1, n));
    Eigen::VectorXd beta_avg = Eigen::VectorXd::Zero(p);
    double intercept_avg = 0.0;
    long avg_count = 0;
    const int iters = std::max(cfg.iters, 1);
    for (int t = 0; t < iters; ++t) {
        Eigen::VectorXd margin = x * beta;
        margin.array() += intercept;
        Eigen::VectorXd g = beta;
        double gb = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (sign(i) * margin(i) < 1.0) {
                g -= c * sign(i) * x.row(i).transpose();
                gb -= c * sign(i);
            }
        }
        const double step = radius / (grad_scale * std::sqrt(static_cast<double>(t) + 1.0));
        beta -= step * g;
        intercept -= step * gb;
        const double norm = beta.norm();
        if (norm > radius) beta *= radius / norm;
        if (t >= iters / 2) {
            beta_avg += beta;
            intercept_avg += intercept;
            ++avg_count;
        }
    }
    ModelParams params;
    params.beta = avg_count ? (beta_avg / static_cast<double>(avg_count)).eval() : beta;
    params.intercept = avg_count ? intercept_avg / static_cast<double>(avg_count) : intercept;
    params.kind = ModelKind::hinge;
    return params;
}

ModelParams fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (y.size() != n) throw SchemaError("fit_logistic: label length mismatch");
    bool has0 = false, has1 = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (y(i) == 0.0) has0 = true;
        else if (y(i) == 1.0) has1 = true;
        else throw SchemaError("fit_logistic: labels must be in {0,1}");
    }
    if (!has0 || !has1) throw ConfigError("fit_logistic: single-class labels");

    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double intercept = 0.0;
    const auto value = [&](const Eigen::VectorXd& b, double b0) {
        Eigen::VectorXd score = x * b;
        score.array() += b0;
        double v = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = score(i);
            const double log1pe = s > 0 ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s));
            v += (y(i) == 1.0 ? log1pe : log1pe + s);
        }
        return v * inv_n + lambda * b.squaredNorm();
    };
    double j = value(beta, intercept);
    for (int iter = 0; iter < 200; ++iter) {
        Eigen::VectorXd score = x * beta;
        score.array() += intercept;
        Eigen::VectorXd prob(n), curv(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double pc = 1.0 / (1.0 + std::exp(-score(i)));
            prob(i) = pc;
            curv(i) = std::max(pc * (1.0 - pc), 1e-10) * inv_n;
        }
        const Eigen::VectorXd resid = (prob - y) * inv_n;
        Eigen::VectorXd grad(p + 1);
        grad.head(p) = x.transpose() * resid + 2.0 * lambda * beta;
        grad(p) = resid.sum();
        if (grad.lpNorm<Eigen::Infinity>() < 1e-11) break;
        Eigen::MatrixXd h(p + 1, p + 1);
        h.topLeftCorner(p, p) = x.transpose() * curv.asDiagonal() * x;
        h.topLeftCorner(p, p).diagonal().array() += 2.0 * lambda + 1e-12;
        h.block(0, p, p, 1) = x.transpose() * curv;
        h.block(p, 0, 1, p) = h.block(0, p, p, 1).transpose();
        h(p, p) = curv.sum() + 1e-12;
        Eigen::VectorXd dir = h.ldlt().solve(-grad);
        if (!dir.allFinite()) dir = -grad;
        double t = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 50; ++bt) {
            const Eigen::VectorXd nb = beta + t * dir.head(p);
            const double n0 = intercept + t * dir(p);
            const double cand = value(nb, n0);
            if (std::isfinite(cand) && cand <= j + 1e-4 * t * grad.dot(dir)) {
                beta = nb;
                intercept = n0;
                j = cand;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) break;
    }
    ModelParams params;
    params.beta = beta;
    params.intercept = intercept;
    params.kind = ModelKind::logistic;
    return params;
}

ModelParams fit_plain_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const LinearFitConfig& cfg) {
    // Uniform-weight special case of the weighted objective: W = 0, C = c.
    decor::DecorrConfig mc;
    mc.c_offset = cfg.c_margin;
    mc.svr_epsilon = cfg.epsilon;
    mc.model_iters = cfg.iters;
    return decor::fit_weighted_svr(x, y, Eigen::VectorXd(), mc);
}

double dwr_balance_penalty(const Eigen::MatrixXd& x, const Eigen::VectorXd& w) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (w.size() != n) throw SchemaError("dwr_balance_penalty: weight length mismatch");
    if (p < 2) throw ConfigError("dwr_balance_penalty: need at least two features");
    const double dn = static_cast<double>(n);
    // first_moment_j = X_j^T W / n; cross(j,l) = X_j^T diag(W) X_l / n
    const Eigen::VectorXd first = (x.transpose() * w) / dn;
    const Eigen::MatrixXd wx = w.asDiagonal() * x;
    const Eigen::MatrixXd cross = (x.transpose() * wx) / dn;
    double penalty = 0.0;
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index l = 0; l < p; ++l) {
            if (j == l) continue;
            const double term = cross(j, l) - first(j) * first(l);
            penalty += term * term;
        }
    return penalty;
}

namespace {

Eigen::VectorXd dwr_balance_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& w) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    const double dn = static_cast<double>(n);
    const Eigen::VectorXd first = (x.transpose() * w) / dn;
    const Eigen::MatrixXd wx = w.asDiagonal() * x;
    const Eigen::MatrixXd cross = (x.transpose() * wx) / dn;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index l = 0; l < p; ++l) {
            if (j == l) continue;
            const double term = cross(j, l) - first(j) * first(l);
            if (term == 0.0) continue;
            // d term / d w_i = x_ij x_il / n - (x_ij/n) first_l - first_j (x_il/n)
            grad += (2.0 * term / dn) *
                    (x.col(j).cwiseProduct(x.col(l)) - x.col(j) * first(l) - x.col(l) * first(j));
        }
    return grad;
}

}  // namespace

decor::LearnedWeights dwr_weights(const Eigen::MatrixXd& x, const DwrConfig& cfg) {
    if (x.cols() < 2) throw ConfigError("dwr_weights: need at least two features");
    const Eigen::Index n = x.rows();
    const double dn = static_cast<double>(n);

    const auto objective = [&](const Eigen::VectorXd& w) {
        const double s = w.sum();
        double v = cfg.lambda1 * w.squaredNorm() + cfg.lambda2 * (s - 1.0) * (s - 1.0);
        if (cfg.gamma != 0.0 && s > 0.0) v += cfg.gamma * dwr_balance_penalty(x, w * (dn / s));
        return v;
    };
    const auto gradient = [&](const Eigen::VectorXd& w) {
        Eigen::VectorXd g = 2.0 * cfg.lambda1 * w;
        const double s = w.sum();
        g.array() += 2.0 * cfg.lambda2 * (s - 1.0);
        if (cfg.gamma != 0.0 && s > 0.0) {
            const Eigen::VectorXd wn = w * (dn / s);
            const Eigen::VectorXd gb = dwr_balance_gradient(x, wn);
            const double dot = gb.dot(w);
            g += cfg.gamma * (dn / s) * (gb.array() - dot / s).matrix();
        }
        return g;
    };

    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / dn);
    double j = objective(w);
    if (!std::isfinite(j)) throw DivergenceError("dwr_weights: non-finite objective");
    decor::LearnedWeights out;
    out.trajectory.push_back({0, j, 0.0});
    double step = cfg.step_size;
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        const Eigen::VectorXd g = gradient(w);
        double t = step;
        bool accepted = false;
        Eigen::VectorXd w_next;
        double j_next = j;
        for (int bt = 0; bt < 60; ++bt) {
            w_next = (w - t * g).cwiseMax(0.0);
            const double diff_sq = (w_next - w).squaredNorm();
            if (diff_sq == 0.0) break;
            const double cand = objective(w_next);
            if (std::isfinite(cand) && cand <= j - 1e-4 * diff_sq / t) {
                j_next = cand;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
        const double improvement = j - j_next;
        w = w_next;
        j = j_next;
        out.trajectory.push_back({iter, j, t});
        step = std::min(cfg.step_size, 2.0 * t);
        if (improvement < cfg.tolerance) break;
    }
    out.w = w;
    return out;
}

DwrFit fit_dwr_svm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const DwrConfig& cfg,
                   const decor::DecorrConfig& model_cfg, decor::Task task) {
    DwrFit fit;
    fit.weights = dwr_weights(x, cfg);
    const Eigen::VectorXd w_mean1 = static_cast<double>(x.rows()) * fit.weights.w;
    fit.model = task == decor::Task::regression
                    ? decor::fit_weighted_svr(x, y, w_mean1, model_cfg)
                    : decor::fit_weighted_classifier(x, y, w_mean1, model_cfg);
    return fit;
}

DwrFit fit_dwr_regression(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const DwrConfig& cfg) {
    DwrFit fit;
    fit.weights = dwr_weights(x, cfg);
    fit.model = fit_weighted_least_squares(x, y, fit.weights.w);
    return fit;
}

}  // namespace crtre::base

#include "crtre/decorrelate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "crtre/errors.hpp"

namespace crtre::decor {

namespace {

double ipow(double base, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);
    Eigen::VectorXd sol = cod.solve(rhs);
    if (!sol.allFinite()) throw SingularSystemError("relation solve produced non-finite values");
    return sol;
}

void check_weighted_inputs(const Eigen::MatrixXd& x, const Eigen::VectorXd& w, int degree) {
    if (degree < 1) throw ConfigError("degree must be >= 1");
    if (w.size() != x.rows()) throw SchemaError("weight length does not match sample count");
    if (x.cols() < 2) throw ConfigError("need at least two features");
}

}  // namespace

MomentSystem weighted_moment_system(const Eigen::VectorXd& x_source,
                                    const Eigen::VectorXd& x_target,
                                    const Eigen::VectorXd& weights, int degree) {
    if (degree < 1) throw ConfigError("degree must be >= 1");
    if (x_source.size() != x_target.size() || x_source.size() != weights.size())
        throw SchemaError("moment system: input lengths disagree");
    const int k = degree;
    Eigen::VectorXd power_sums = Eigen::VectorXd::Zero(2 * k + 1);
    Eigen::VectorXd targets = Eigen::VectorXd::Zero(k + 1);
    for (Eigen::Index i = 0; i < x_source.size(); ++i) {
        const double xh = weights(i) * x_source(i);
        const double yh = weights(i) * x_target(i);
        double p = 1.0;
        for (int t = 0; t <= 2 * k; ++t) {
            power_sums(t) += p;
            if (t <= k) targets(t) += p * yh;
            p *= xh;
        }
    }
    MomentSystem sys;
    sys.moments.resize(k + 1, k + 1);
    for (int a = 0; a <= k; ++a)
        for (int b = 0; b <= k; ++b) sys.moments(a, b) = power_sums(a + b);
    sys.targets = targets;
    return sys;
}

PolyRelation solve_relation(const MomentSystem& system, int source, int target, int degree) {
    if (system.moments.rows() != degree + 1 || system.targets.size() != degree + 1)
        throw SchemaError("solve_relation: system size does not match degree");
    if (!system.moments.allFinite() || !system.targets.allFinite())
        throw SingularSystemError("solve_relation: non-finite moment system");
    PolyRelation rel;
    rel.coeffs = pinv_solve(system.moments, system.targets);
    rel.source = source;
    rel.target = target;
    rel.degree = degree;
    return rel;
}

namespace {

// Unit-mean weights keep the moment system on the scale of the raw features
// no matter how the caller normalizes W.
Eigen::VectorXd unit_mean(const Eigen::VectorXd& w) {
    const double s = w.sum();
    if (s <= 0.0) return Eigen::VectorXd::Zero(w.size());
    return w * (static_cast<double>(w.size()) / s);
}

}  // namespace

double decorrelation_penalty(const Eigen::MatrixXd& x, const Eigen::VectorXd& weights,
                             int degree) {
    check_weighted_inputs(x, weights, degree);
    const Eigen::VectorXd wn = unit_mean(weights);
    if (wn.isZero(0.0)) return 0.0;
    double penalty = 0.0;
    for (int src = 0; src < x.cols(); ++src) {
        for (int tgt = 0; tgt < x.cols(); ++tgt) {
            if (src == tgt) continue;
            const MomentSystem sys = weighted_moment_system(x.col(src), x.col(tgt), wn, degree);
            penalty += solve_relation(sys, src, tgt, degree).tail_norm_sq();
        }
    }
    return penalty;
}

Eigen::VectorXd penalty_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& weights,
                                 int degree) {
    check_weighted_inputs(x, weights, degree);
    const Eigen::Index n = x.rows();
    const int k = degree;
    const double wsum = weights.sum();
    if (wsum <= 0.0) return Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd wn = unit_mean(weights);

    // Gradient with respect to the normalized weights first.
    Eigen::VectorXd grad_wn = Eigen::VectorXd::Zero(n);
    for (int src = 0; src < x.cols(); ++src) {
        for (int tgt = 0; tgt < x.cols(); ++tgt) {
            if (src == tgt) continue;
            const MomentSystem sys = weighted_moment_system(x.col(src), x.col(tgt), wn, k);
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sys.moments);
            const Eigen::VectorXd c = cod.solve(sys.targets);
            if (!c.allFinite())
                throw SingularSystemError("penalty_gradient: relation solve failed");
            Eigen::VectorXd tail = c;
            tail(0) = 0.0;
            // dR = lambda^T (dv - dM c) with lambda = M^+ (2 P c); M symmetric.
            const Eigen::VectorXd lambda = cod.solve(Eigen::VectorXd(2.0 * tail));
            if (!lambda.allFinite())
                throw SingularSystemError("penalty_gradient: adjoint solve failed");

            // conv_t = sum_{a+b=t} lambda_a c_b
            Eigen::VectorXd conv = Eigen::VectorXd::Zero(2 * k + 1);
            for (int a = 0; a <= k; ++a)
                for (int b = 0; b <= k; ++b) conv(a + b) += lambda(a) * c(b);

            for (Eigen::Index i = 0; i < n; ++i) {
                const double xs = x(i, src);
                const double xt = x(i, tgt);
                const double xh = wn(i) * xs;
                const double yh = wn(i) * xt;
                // Power table up to 2k-1.
                double a0 = 0.0;  // sum_a lambda_a xh^a
                double a1 = 0.0;  // sum_a a lambda_a xh^(a-1)
                double tm = 0.0;  // sum_t t conv_t xh^(t-1)
                double p = 1.0;   // xh^t
                for (int t = 0; t <= 2 * k; ++t) {
                    if (t <= k) a0 += lambda(t) * p;
                    if (t + 1 <= k) a1 += static_cast<double>(t + 1) * lambda(t + 1) * p;
                    tm += static_cast<double>(t + 1) * ((t + 1 <= 2 * k) ? conv(t + 1) : 0.0) * p;
                    p *= xh;
                }
                grad_wn(i) += xs * (yh * a1 - tm) + xt * a0;
            }
        }
    }

    // Chain rule through the unit-mean normalization wn = n*W/sum(W).
    const double scale = static_cast<double>(n) / wsum;
    const double dot = grad_wn.dot(weights);
    return scale * (grad_wn.array() - dot / wsum).matrix();
}

// ---------------------------------------------------------------------------
// Weight learning
// ---------------------------------------------------------------------------

namespace {

struct WeightObjective {
    const Eigen::MatrixXd& x;
    const DecorrConfig& cfg;
    const Eigen::VectorXd* linear_cost;

    double value(const Eigen::VectorXd& w) const {
        double v = cfg.lambda1 * w.squaredNorm();
        const double s = w.sum() - 1.0;
        v += cfg.lambda2 * s * s;
        if (cfg.gamma != 0.0) v += cfg.gamma * decorrelation_penalty(x, w, cfg.degree);
        if (linear_cost) v += linear_cost->dot(w);
        return v;
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& w) const {
        Eigen::VectorXd g = 2.0 * cfg.lambda1 * w;
        g.array() += 2.0 * cfg.lambda2 * (w.sum() - 1.0);
        if (cfg.gamma != 0.0) g += cfg.gamma * penalty_gradient(x, w, cfg.degree);
        if (linear_cost) g += *linear_cost;
        return g;
    }
};

}  // namespace

LearnedWeights learn_weights(const Eigen::MatrixXd& x, const DecorrConfig& cfg,
                             const Eigen::VectorXd* init, const Eigen::VectorXd* linear_cost) {
    if (cfg.lambda1 < 0.0 || cfg.lambda2 < 0.0 || cfg.gamma < 0.0)
        throw ConfigError("learn_weights: penalty weights must be non-negative");
    const Eigen::Index n = x.rows();
    if (n < 1) throw ConfigError("learn_weights: empty data");

    Eigen::VectorXd w;
    if (init) {
        if (init->size() != n) throw SchemaError("learn_weights: init length mismatch");
        if (init->minCoeff() < 0.0) throw ConfigError("learn_weights: init must be non-negative");
        w = *init;
    } else if (cfg.init == WeightInit::kde) {
        w = kde_init_weights(x, cfg.bandwidth);
    } else {
        w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    }

    const WeightObjective obj{x, cfg, linear_cost};
    double j = obj.value(w);
    if (!std::isfinite(j)) throw DivergenceError("learn_weights: non-finite initial objective");

    LearnedWeights out;
    out.trajectory.push_back({0, j, 0.0});
    double step = cfg.step_size;

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        const Eigen::VectorXd g = obj.gradient(w);
        double t = step;
        Eigen::VectorXd w_next;
        double j_next = j;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            w_next = (w - t * g).cwiseMax(0.0);
            const double diff_sq = (w_next - w).squaredNorm();
            if (diff_sq == 0.0) break;  // projected step is a fixed point at this scale
            const double cand = obj.value(w_next);
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
    if (w.minCoeff() < 0.0) throw DivergenceError("learn_weights: projection failed");
    out.w = w;
    return out;
}

Eigen::VectorXd kde_init_weights(const Eigen::MatrixXd& x, BandwidthRule rule) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (n < 2) throw ConfigError("kde_init_weights: need n >= 2");

    // Bandwidth per dimension; zero-spread dimensions contribute a constant
    // factor to numerator and denominator alike and are skipped.
    std::vector<int> dims;
    std::vector<double> bandwidth;
    for (Eigen::Index j = 0; j < p; ++j) {
        const Eigen::VectorXd col = x.col(j);
        const double mean = col.mean();
        const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(n - 1));
        if (sd == 0.0) continue;
        double h = 0.0;
        if (rule == BandwidthRule::scott) {
            h = sd * std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(p) + 4.0));
        } else {
            std::vector<double> sorted(col.data(), col.data() + n);
            std::sort(sorted.begin(), sorted.end());
            const auto quantile = [&](double q) {
                const double pos = q * static_cast<double>(n - 1);
                const size_t lo = static_cast<size_t>(pos);
                const double frac = pos - static_cast<double>(lo);
                return sorted[lo] + frac * (sorted[std::min(lo + 1, sorted.size() - 1)] - sorted[lo]);
            };
            const double iqr = quantile(0.75) - quantile(0.25);
            h = 0.9 * std::min(sd, iqr / 1.34) * std::pow(static_cast<double>(n), -0.2);
        }
        if (h <= 0.0) throw ConfigError("kde_init_weights: zero bandwidth in column " + std::to_string(j));
        dims.push_back(static_cast<int>(j));
        bandwidth.push_back(h);
    }

    Eigen::VectorXd w(n);
    if (dims.empty()) {  // all rows identical up to constant columns
        w.setConstant(1.0 / static_cast<double>(n));
        return w;
    }

    const double log_n = std::log(static_cast<double>(n));
    // log of the marginal product and the joint product-kernel estimate.
    Eigen::VectorXd log_num = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd log_den(n);
    Eigen::MatrixXd log_kernel(n, n);  // summed over dims: log phi terms
    log_kernel.setZero();
    for (size_t d = 0; d < dims.size(); ++d) {
        const int j = dims[d];
        const double h = bandwidth[d];
        const double log_h = std::log(h);
        Eigen::VectorXd marg(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double max_term = -std::numeric_limits<double>::infinity();
            Eigen::VectorXd terms(n);
            for (Eigen::Index m = 0; m < n; ++m) {
                const double u = (x(i, j) - x(m, j)) / h;
                const double lt = -0.5 * u * u - 0.5 * std::log(2.0 * M_PI) - log_h;
                terms(m) = lt;
                log_kernel(i, m) += lt;
                max_term = std::max(max_term, lt);
            }
            double acc = 0.0;
            for (Eigen::Index m = 0; m < n; ++m) acc += std::exp(terms(m) - max_term);
            marg(i) = max_term + std::log(acc) - log_n;
        }
        log_num += marg;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const double max_term = log_kernel.row(i).maxCoeff();
        double acc = 0.0;
        for (Eigen::Index m = 0; m < n; ++m) acc += std::exp(log_kernel(i, m) - max_term);
        log_den(i) = max_term + std::log(acc) - log_n;
    }

    Eigen::VectorXd log_w = log_num - log_den;
    const double shift = log_w.maxCoeff();
    w = (log_w.array() - shift).exp();
    const double total = w.sum();
    if (!(total > 0.0) || !w.allFinite())
        throw DivergenceError("kde_init_weights: degenerate density ratio");
    return w / total;
}

// ---------------------------------------------------------------------------
// Weighted models
// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXd sample_factors(const Eigen::VectorXd& weights, double c_offset, Eigen::Index n) {
    Eigen::VectorXd a;
    if (weights.size() == 0)
        a = Eigen::VectorXd::Constant(n, c_offset);
    else
        a = weights.array() + c_offset;
    if (a.size() != n) throw SchemaError("weight length does not match sample count");
    if (a.minCoeff() < 0.0) throw ConfigError("negative sample factor");
    if (a.sum() <= 0.0) throw ConfigError("sample factors sum to zero");
    return a;
}

}  // namespace

ModelParams fit_weighted_classifier(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& weights, const DecorrConfig& cfg) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (y.size() != n) throw SchemaError("fit_weighted_classifier: label length mismatch");
    bool has0 = false, has1 = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (y(i) == 0.0) has0 = true;
        else if (y(i) == 1.0) has1 = true;
        else throw SchemaError("fit_weighted_classifier: labels must be in {0,1}");
    }
    if (!has0 || !has1) throw ConfigError("fit_weighted_classifier: single-class labels");

    Eigen::VectorXd a = sample_factors(weights, cfg.c_offset, n);
    a /= a.sum();

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double intercept = 0.0;

    const auto value = [&](const Eigen::VectorXd& b, double b0) {
        const Eigen::VectorXd score = (x * b).array() + b0;
        double v = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = score(i);
            // log(1+exp(-s)) stable form
            const double log1pe = s > 0 ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s));
            v += a(i) * (y(i) == 1.0 ? log1pe : log1pe + s);
        }
        return v + cfg.lambda3 * b.squaredNorm();
    };

    double j = value(beta, intercept);
    for (int iter = 0; iter < 200; ++iter) {
        const Eigen::VectorXd score = (x * beta).array() + intercept;
        Eigen::VectorXd prob(n), curv(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double pcur = 1.0 / (1.0 + std::exp(-score(i)));
            prob(i) = pcur;
            curv(i) = std::max(pcur * (1.0 - pcur), 1e-10);
        }
        const Eigen::VectorXd resid = (prob - y).cwiseProduct(a);
        Eigen::VectorXd grad(p + 1);
        grad.head(p) = x.transpose() * resid + 2.0 * cfg.lambda3 * beta;
        grad(p) = resid.sum();
        if (grad.lpNorm<Eigen::Infinity>() < 1e-11) break;

        Eigen::MatrixXd h(p + 1, p + 1);
        const Eigen::VectorXd aw = a.cwiseProduct(curv);
        h.topLeftCorner(p, p) = x.transpose() * aw.asDiagonal() * x;
        h.topLeftCorner(p, p).diagonal().array() += 2.0 * cfg.lambda3 + 1e-12;
        h.block(0, p, p, 1) = x.transpose() * aw;
        h.block(p, 0, 1, p) = h.block(0, p, p, 1).transpose();
        h(p, p) = aw.sum() + 1e-12;

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

ModelParams fit_weighted_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& weights, const DecorrConfig& cfg) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (y.size() != n) throw SchemaError("fit_weighted_svr: label length mismatch");
    const Eigen::VectorXd a = sample_factors(weights, cfg.c_offset, n);
    const double eps = cfg.svr_epsilon;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double intercept = a.dot(y) / a.sum();

    // J(0, b0) bounds the optimal margin norm: 0.5||beta*||^2 <= J(0).
    double j0 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) j0 += a(i) * std::max(0.0, std::abs(y(i) - intercept) - eps);
    const double radius = std::sqrt(2.0 * std::max(j0, 1e-12));

    const double grad_scale = 1.0 + a.sum() * std::sqrt(x.squaredNorm() / std::max<double>(1, n));
    Eigen::VectorXd beta_avg = Eigen::VectorXd::Zero(p);
    double intercept_avg = 0.0;
    long avg_count = 0;
    const int iters = std::max(cfg.model_iters, 1);

    for (int t = 0; t < iters; ++t) {
        Eigen::VectorXd resid = y - x * beta;
        resid.array() -= intercept;
        Eigen::VectorXd g = beta;
        double gb = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (resid(i) > eps) {
                g -= a(i) * x.row(i).transpose();
                gb -= a(i);
            } else if (resid(i) < -eps) {
                g += a(i) * x.row(i).transpose();
                gb += a(i);
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
    if (avg_count > 0) {
        beta_avg /= static_cast<double>(avg_count);
        intercept_avg /= static_cast<double>(avg_count);
    } else {
        beta_avg = beta;
        intercept_avg = intercept;
    }

    ModelParams params;
    params.beta = beta_avg;
    params.intercept = intercept_avg;
    params.kind = ModelKind::svr;
    return params;
}

CrtreFit crtre_fit(const LabeledDataset& data, const DecorrConfig& cfg, Task task, FitMode mode) {
    if (!data.has_outcome()) throw SchemaError("crtre_fit: dataset has no outcome");
    const Eigen::MatrixXd& x = data.features;
    const Eigen::VectorXd& y = data.outcome;
    const double n = static_cast<double>(x.rows());

    CrtreFit fit;
    fit.weights = learn_weights(x, cfg);

    const auto fit_model = [&](const Eigen::VectorXd& w_mean1) {
        return task == Task::classification ? fit_weighted_classifier(x, y, w_mean1, cfg)
                                            : fit_weighted_svr(x, y, w_mean1, cfg);
    };

    // Learned weights sum to ~1; the model-side factors (W_i + C) expect W on
    // the unit-mean scale so C is commensurate.
    fit.model = fit_model(n * fit.weights.w);

    if (mode == FitMode::joint) {
        for (int round = 1; round < std::max(cfg.joint_rounds, 1); ++round) {
            // Data-fit term is linear in W for a fixed model; feed it to the
            // weight solve, then refit.
            Eigen::VectorXd per_sample(x.rows());
            const Eigen::VectorXd score = fit.model.decision(x);
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                if (task == Task::regression) {
                    per_sample(i) = std::max(0.0, std::abs(y(i) - score(i)) - cfg.svr_epsilon);
                } else {
                    const double s = score(i);
                    const double log1pe =
                        s > 0 ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s));
                    per_sample(i) = y(i) == 1.0 ? log1pe : log1pe + s;
                }
            }
            per_sample *= n;  // weights enter the model at unit-mean scale
            fit.weights = learn_weights(x, cfg, &fit.weights.w, &per_sample);
            fit.model = fit_model(n * fit.weights.w);
        }
    }
    return fit;
}

void save_weights_json(const Eigen::VectorXd& w, const std::string& path) {
    nlohmann::json j;
    j["weights"] = std::vector<double>(w.data(), w.data() + w.size());
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump() << "\n";
}

Eigen::VectorXd load_weights_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    const auto v = j.at("weights").get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void save_trajectory_csv(const std::vector<TrajectoryPoint>& trajectory, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.precision(17);
    out << "iter,objective,step\n";
    for (const auto& pt : trajectory) out << pt.iter << "," << pt.objective << "," << pt.step << "\n";
}

}  // namespace crtre::decor

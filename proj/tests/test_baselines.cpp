#include <doctest.h>

#include <cmath>

#include "crtre/baselines.hpp"
#include "crtre/errors.hpp"
#include "crtre/rng.hpp"

using namespace crtre;
using namespace crtre::base;

TEST_CASE("ols recovers an exact linear relation") {
    Eigen::MatrixXd x(5, 1);
    x << 1, 2, 3, 4, 5;
    const Eigen::VectorXd y = 2.0 * x.col(0);
    LinearFitConfig cfg;
    const auto fit = fit_linear(x, y, cfg);
    CHECK(fit.beta(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("ols on full-rank noiseless multivariate data is exact") {
    Rng rng(91);
    const int n = 60, p = 4;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd truth(p);
    truth << 0.5, -1.5, 2.0, 0.25;
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
        y(i) = x.row(i).dot(truth) + 1.25;
    }
    const auto fit = fit_linear(x, y, LinearFitConfig{});
    CHECK((fit.beta - truth).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK(fit.intercept == doctest::Approx(1.25).epsilon(1e-10));
}

TEST_CASE("a rank-deficient system raises and suggests the ridge path") {
    Eigen::MatrixXd x(4, 2);
    x << 1, 2, 2, 4, 3, 6, 4, 8;  // duplicate direction
    Eigen::VectorXd y(4);
    y << 1, 2, 3, 4;
    try {
        fit_linear(x, y, LinearFitConfig{});
        FAIL("expected SingularSystemError");
    } catch (const SingularSystemError& e) {
        CHECK(std::string(e.what()).find("ridge") != std::string::npos);
    }
    LinearFitConfig ridge;
    ridge.penalty = Penalty::l2;
    ridge.lambda = 1e-6;
    CHECK_NOTHROW(fit_linear(x, y, ridge));
}

TEST_CASE("ridge shrinks towards zero and its norm is monotone in lambda") {
    Rng rng(97);
    const int n = 80, p = 3;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
        y(i) = x(i, 0) - 2.0 * x(i, 1) + 0.1 * rng.normal();
    }
    double prev_norm = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 1.0, 10.0, 100.0, 1e4, 1e6}) {
        LinearFitConfig cfg;
        cfg.penalty = Penalty::l2;
        cfg.lambda = lambda;
        const auto fit = fit_linear(x, y, cfg);
        CHECK(fit.beta.norm() <= prev_norm + 1e-12);
        prev_norm = fit.beta.norm();
    }
    LinearFitConfig big;
    big.penalty = Penalty::l2;
    big.lambda = 1e9;
    CHECK(fit_linear(x, y, big).beta.lpNorm<Eigen::Infinity>() < 1e-4);
}

TEST_CASE("lasso zeroes irrelevant columns and satisfies the KKT conditions") {
    Rng rng(101);
    const int n = 200, p = 6;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
        y(i) = 3.0 * x(i, 0) - 2.0 * x(i, 1) + 0.05 * rng.normal();
    }
    LinearFitConfig cfg;
    cfg.penalty = Penalty::l1;
    cfg.lambda = 20.0;
    const auto fit = fit_linear(x, y, cfg);
    for (int j = 2; j < p; ++j) CHECK(std::abs(fit.beta(j)) < 1e-8);
    CHECK(fit.beta(0) > 2.0);
    CHECK(fit.beta(1) < -1.0);

    // Subgradient optimality: |2 x_j . r| <= lambda on zeros, == lambda on
    // active coordinates (centered problem).
    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const Eigen::MatrixXd xc = x.rowwise() - x_mean;
    const Eigen::VectorXd yc = y.array() - y.mean();
    const Eigen::VectorXd resid = yc - xc * fit.beta;
    for (int j = 0; j < p; ++j) {
        const double g = 2.0 * xc.col(j).dot(resid);
        if (fit.beta(j) == 0.0)
            CHECK(std::abs(g) <= cfg.lambda + 1e-6);
        else
            CHECK(g == doctest::Approx(cfg.lambda * (fit.beta(j) > 0 ? 1.0 : -1.0)).epsilon(1e-4));
    }
}

TEST_CASE("weighted least squares matches ols under uniform weights") {
    Rng rng(103);
    const int n = 50, p = 2;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        y(i) = x(i, 0) + 2.0 * x(i, 1) + 0.1 * rng.normal();
    }
    const auto wls = fit_weighted_least_squares(x, y, Eigen::VectorXd::Constant(n, 1.0 / n));
    const auto ols = fit_linear(x, y, LinearFitConfig{});
    CHECK((wls.beta - ols.beta).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("the symmetric two-point svm boundary sits at zero") {
    Eigen::MatrixXd x(2, 1);
    x << -1, 1;
    Eigen::VectorXd y(2);
    y << 0, 1;
    LinearFitConfig cfg;
    cfg.iters = 4000;
    const auto fit = fit_svm(x, y, cfg);
    CHECK(fit.beta(0) > 0.0);
    CHECK(std::abs(fit.intercept) < 0.05 * fit.beta(0));
    Eigen::MatrixXd probe(2, 1);
    probe << -0.1, 0.1;
    const Eigen::VectorXd pred = fit.predict(probe);
    CHECK(pred(0) == 0.0);
    CHECK(pred(1) == 1.0);
}

TEST_CASE("svm attains a hinge objective no worse than random probes") {
    Rng rng(107);
    const int n = 80, p = 3;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
        y(i) = (x(i, 0) - 0.5 * x(i, 1) + 0.2 * rng.normal()) > 0 ? 1.0 : 0.0;
    }
    LinearFitConfig cfg;
    cfg.iters = 6000;
    const auto fit = fit_svm(x, y, cfg);
    const auto objective = [&](const Eigen::VectorXd& beta, double b) {
        double loss = 0.0;
        for (int i = 0; i < n; ++i) {
            const double sign = y(i) == 1.0 ? 1.0 : -1.0;
            loss += std::max(0.0, 1.0 - sign * (x.row(i).dot(beta) + b));
        }
        return 0.5 * beta.squaredNorm() + cfg.c_margin * loss;
    };
    const double fitted = objective(fit.beta, fit.intercept);
    for (int probe = 0; probe < 100; ++probe) {
        Eigen::VectorXd beta(p);
        for (int j = 0; j < p; ++j) beta(j) = 3.0 * rng.normal();
        const double b = 3.0 * rng.normal();
        CHECK(fitted <= objective(beta, b) + 1e-6);
    }
}

TEST_CASE("dwr balance penalty matches a direct formula evaluation") {
    Rng rng(109);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 20, p = 3;
        Eigen::MatrixXd x(n, p);
        Eigen::VectorXd w(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
            w(i) = rng.uniform();
        }
        // Direct evaluation of the weighted cross-covariance terms.
        double direct = 0.0;
        for (int j = 0; j < p; ++j)
            for (int l = 0; l < p; ++l) {
                if (j == l) continue;
                double cross = 0.0, mj = 0.0, ml = 0.0;
                for (int i = 0; i < n; ++i) {
                    cross += x(i, j) * w(i) * x(i, l);
                    mj += x(i, j) * w(i);
                    ml += x(i, l) * w(i);
                }
                const double term = cross / n - (mj / n) * (ml / n);
                direct += term * term;
            }
        CHECK(std::abs(dwr_balance_penalty(x, w) - direct) < 1e-10);
    }
}

TEST_CASE("dwr weights stay near uniform on uncorrelated standardized features") {
    Rng rng(113);
    const int n = 400, p = 3;
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
    // Standardize.
    for (int j = 0; j < p; ++j) {
        const double mean = x.col(j).mean();
        const double sd = std::sqrt((x.col(j).array() - mean).square().mean());
        x.col(j) = (x.col(j).array() - mean) / sd;
    }
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / n);
    // The balancing penalty of the unit-mean weights is already tiny.
    CHECK(dwr_balance_penalty(x, Eigen::VectorXd::Ones(n)) < 0.05);
    DwrConfig cfg;
    cfg.gamma = 1.0;
    cfg.max_iters = 80;
    const auto learned = dwr_weights(x, cfg);
    CHECK((learned.w - uniform).lpNorm<Eigen::Infinity>() < 0.5 / n);
}

TEST_CASE("dwr objective trajectory is monotone and weights non-negative") {
    Rng rng(127);
    const int n = 300, p = 4;
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i) {
        const double shared = rng.normal();
        x(i, 0) = shared + 0.3 * rng.normal();
        x(i, 1) = 0.7 * shared + 0.3 * rng.normal();
        x(i, 2) = rng.normal();
        x(i, 3) = rng.normal();
    }
    DwrConfig cfg;
    cfg.gamma = 1.0;
    cfg.max_iters = 60;
    const auto learned = dwr_weights(x, cfg);
    for (size_t k = 1; k < learned.trajectory.size(); ++k)
        CHECK(learned.trajectory[k].objective <= learned.trajectory[k - 1].objective + 1e-12);
    CHECK(learned.w.minCoeff() >= 0.0);
    // Learning reduces the balancing penalty at unit-mean scale.
    const double n_d = static_cast<double>(n);
    CHECK(dwr_balance_penalty(x, learned.w * (n_d / learned.w.sum())) <=
          dwr_balance_penalty(x, Eigen::VectorXd::Ones(n)) + 1e-12);
}

TEST_CASE("dwr_svm with gamma=0 reduces to the plain svr") {
    Rng rng(131);
    const int n = 120, p = 3;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
        y(i) = x(i, 0) - x(i, 2) + 0.05 * rng.normal();
    }
    DwrConfig dwr_cfg;
    dwr_cfg.gamma = 0.0;
    dwr_cfg.lambda1 = 0.0;  // pins the quadratic minimum at exactly 1/n
    dwr_cfg.max_iters = 500;
    decor::DecorrConfig model_cfg;
    model_cfg.c_offset = 0.0;
    model_cfg.svr_epsilon = 0.1;
    model_cfg.model_iters = 2000;
    const auto fit = fit_dwr_svm(x, y, dwr_cfg, model_cfg, decor::Task::regression);
    CHECK(fit.weights.w.sum() == doctest::Approx(1.0).epsilon(1e-6));

    base::LinearFitConfig plain_cfg;
    plain_cfg.c_margin = 1.0;
    plain_cfg.epsilon = 0.1;
    plain_cfg.iters = 2000;
    const auto plain = fit_plain_svr(x, y, plain_cfg);
    CHECK((fit.model.predict(x) - plain.predict(x)).lpNorm<Eigen::Infinity>() < 1e-4);
}

TEST_CASE("dwr regression weights feed weighted least squares") {
    Rng rng(137);
    const int n = 200, p = 3;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
        y(i) = 0.5 * x(i, 0) + 0.1 * rng.normal();
    }
    DwrConfig cfg;
    cfg.max_iters = 40;
    const auto fit = fit_dwr_regression(x, y, cfg);
    CHECK(fit.model.beta.allFinite());
    CHECK(fit.weights.w.minCoeff() >= 0.0);
}

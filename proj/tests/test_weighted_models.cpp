#include <doctest.h>

#include <cmath>

#include "crtre/baselines.hpp"
#include "crtre/decorrelate.hpp"
#include "crtre/errors.hpp"
#include "crtre/rng.hpp"

using namespace crtre;

namespace {

struct Problem {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
};

Problem random_classification(int n, int p, std::uint64_t seed) {
    Rng rng(seed);
    Problem prob;
    prob.x.resize(n, p);
    prob.y.resize(n);
    Eigen::VectorXd truth(p);
    for (int j = 0; j < p; ++j) truth(j) = rng.normal();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) prob.x(i, j) = rng.normal();
        const double score = prob.x.row(i).dot(truth) + 0.3 * rng.normal();
        prob.y(i) = score > 0 ? 1.0 : 0.0;
    }
    return prob;
}

}  // namespace

TEST_CASE("uniform weights with C=0 reproduce the plain logistic fit") {
    const auto prob = random_classification(300, 4, 61);
    decor::DecorrConfig cfg;
    cfg.c_offset = 0.0;
    cfg.lambda3 = 1e-3;
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(300, 1.0 / 300.0);
    const auto weighted = decor::fit_weighted_classifier(prob.x, prob.y, uniform, cfg);
    const auto plain = base::fit_logistic(prob.x, prob.y, 1e-3);
    CHECK((weighted.beta - plain.beta).lpNorm<Eigen::Infinity>() < 1e-6);
    CHECK(std::abs(weighted.intercept - plain.intercept) < 1e-6);
}

TEST_CASE("uniformly rescaling the sample factors leaves the argmin unchanged") {
    const auto prob = random_classification(200, 3, 67);
    decor::DecorrConfig cfg;
    cfg.c_offset = 0.5;
    cfg.lambda3 = 1e-3;
    Rng rng(68);
    Eigen::VectorXd w(200);
    for (int i = 0; i < 200; ++i) w(i) = rng.uniform();
    const auto base_fit = decor::fit_weighted_classifier(prob.x, prob.y, w, cfg);
    // Doubling both W and C doubles every factor (W_i + C).
    decor::DecorrConfig doubled = cfg;
    doubled.c_offset = 1.0;
    const auto scaled_fit = decor::fit_weighted_classifier(prob.x, prob.y, 2.0 * w, doubled);
    CHECK((base_fit.beta - scaled_fit.beta).lpNorm<Eigen::Infinity>() < 1e-6);
    CHECK(std::abs(base_fit.intercept - scaled_fit.intercept) < 1e-6);
}

TEST_CASE("separable data is classified perfectly") {
    Eigen::MatrixXd x(6, 1);
    x << -3, -2, -1, 1, 2, 3;
    Eigen::VectorXd y(6);
    y << 0, 0, 0, 1, 1, 1;
    decor::DecorrConfig cfg;
    cfg.c_offset = 0.0;
    cfg.lambda3 = 1e-6;
    const auto fit = decor::fit_weighted_classifier(x, y, Eigen::VectorXd::Constant(6, 1.0 / 6), cfg);
    const Eigen::VectorXd pred = fit.predict(x);
    CHECK((pred - y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-class labels and bad weights are rejected") {
    Eigen::MatrixXd x(4, 1);
    x << 1, 2, 3, 4;
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
    decor::DecorrConfig cfg;
    CHECK_THROWS_AS(decor::fit_weighted_classifier(x, ones, ones, cfg), ConfigError);
    Eigen::VectorXd y(4);
    y << 0, 1, 0, 1;
    Eigen::VectorXd negative = -ones;
    CHECK_THROWS_AS(decor::fit_weighted_classifier(x, y, negative, cfg), ConfigError);
}

TEST_CASE("weighted svr with W=0, C=1 equals the plain svr") {
    Rng rng(71);
    const int n = 150, p = 3;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
        y(i) = 1.5 * x(i, 0) - 0.5 * x(i, 2) + 0.1 * rng.normal();
    }
    decor::DecorrConfig cfg;
    cfg.c_offset = 1.0;
    cfg.svr_epsilon = 0.1;
    cfg.model_iters = 2000;
    const auto weighted = decor::fit_weighted_svr(x, y, Eigen::VectorXd::Zero(n), cfg);
    base::LinearFitConfig lc;
    lc.c_margin = 1.0;
    lc.epsilon = 0.1;
    lc.iters = 2000;
    const auto plain = base::fit_plain_svr(x, y, lc);
    CHECK((weighted.predict(x) - plain.predict(x)).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("a tube wider than every residual drives beta to zero") {
    Rng rng(73);
    const int n = 80;
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        y(i) = 0.05 * rng.normal();
    }
    decor::DecorrConfig cfg;
    cfg.c_offset = 1.0;
    cfg.svr_epsilon = 10.0;
    cfg.model_iters = 1500;
    const auto fit = decor::fit_weighted_svr(x, y, Eigen::VectorXd::Zero(n), cfg);
    CHECK(fit.beta.lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("noiseless linear data is recovered through the epsilon tube") {
    Rng rng(79);
    const int n = 500, p = 5;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd truth(p);
    truth << 1.2, -0.7, 0.4, 0.0, 2.0;
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
        y(i) = x.row(i).dot(truth);
    }
    decor::DecorrConfig cfg;
    cfg.c_offset = 1.0;
    cfg.svr_epsilon = 0.01;
    cfg.model_iters = 8000;
    const auto fit = decor::fit_weighted_svr(x, y, Eigen::VectorXd::Zero(n), cfg);
    CHECK((fit.beta - truth).lpNorm<Eigen::Infinity>() < 0.05);
}

TEST_CASE("crtre_fit with gamma=0 matches the weighted model at near-uniform weights") {
    Rng rng(83);
    const int n = 200, p = 4;
    LabeledDataset data;
    data.features.resize(n, p);
    data.outcome.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) data.features(i, j) = rng.normal();
        data.outcome(i) = data.features(i, 0) > 0 ? 1.0 : 0.0;
    }
    data.classification = true;
    data.stable_mask.assign(p, false);
    data.names = {"a", "b", "c", "d"};

    decor::DecorrConfig cfg;
    cfg.gamma = 0.0;
    cfg.lambda1 = 0.0;
    cfg.lambda2 = 1.0;
    cfg.c_offset = 0.5;
    cfg.max_iters = 500;
    cfg.tolerance = 1e-15;
    const auto fit = decor::crtre_fit(data, cfg, decor::Task::classification);
    // gamma=0 with lambda1=0 pins the weights at exactly uniform 1/n.
    CHECK((fit.weights.w.array() - 1.0 / n).abs().maxCoeff() < 1e-9);
    const auto direct = decor::fit_weighted_classifier(
        data.features, data.outcome, Eigen::VectorXd::Constant(n, 1.0), cfg);
    CHECK((fit.model.beta - direct.beta).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("joint mode keeps the pipeline finite and reports a trajectory") {
    Rng rng(89);
    const int n = 150, p = 3;
    LabeledDataset data;
    data.features.resize(n, p);
    data.outcome.resize(n);
    for (int i = 0; i < n; ++i) {
        const double shared = rng.normal();
        data.features(i, 0) = shared;
        data.features(i, 1) = shared * shared + 0.5 * rng.normal();
        data.features(i, 2) = rng.normal();
        data.outcome(i) = 2.0 * data.features(i, 0) + 0.2 * rng.normal();
    }
    data.stable_mask.assign(p, false);
    data.names = {"a", "b", "c"};
    decor::DecorrConfig cfg;
    cfg.gamma = 50.0;
    cfg.max_iters = 40;
    cfg.model_iters = 1500;
    cfg.joint_rounds = 2;
    const auto fit = decor::crtre_fit(data, cfg, decor::Task::regression, decor::FitMode::joint);
    CHECK(fit.model.beta.allFinite());
    CHECK(fit.weights.w.minCoeff() >= 0.0);
    CHECK(!fit.weights.trajectory.empty());
}

#include <doctest.h>

#include <cmath>

#include "crtre/decorrelate.hpp"
#include "crtre/errors.hpp"
#include "crtre/rng.hpp"
#include "support/oracles.hpp"

using namespace crtre;
using decor::weighted_moment_system;

TEST_CASE("moment system matches the hand computation at k=1") {
    Eigen::VectorXd x_src(2), x_tgt(2), w(2);
    x_src << 1, 2;
    x_tgt << 2, 4;
    w << 1, 1;
    const auto sys = weighted_moment_system(x_src, x_tgt, w, 1);
    Eigen::MatrixXd expected(2, 2);
    expected << 2, 3, 3, 5;
    CHECK((sys.moments - expected).norm() == doctest::Approx(0.0));
    CHECK(sys.targets(0) == doctest::Approx(6.0));
    CHECK(sys.targets(1) == doctest::Approx(10.0));
}

TEST_CASE("zero weights collapse the moment system to the sample-count corner") {
    Eigen::VectorXd x_src(4), x_tgt(4), w = Eigen::VectorXd::Zero(4);
    x_src << 1, -2, 3, 0.5;
    x_tgt << 2, 1, -1, 4;
    const auto sys = weighted_moment_system(x_src, x_tgt, w, 2);
    CHECK(sys.moments(0, 0) == doctest::Approx(4.0));
    CHECK(sys.moments.cwiseAbs().sum() == doctest::Approx(4.0));  // everything else vanishes
    CHECK(sys.targets.cwiseAbs().sum() == doctest::Approx(0.0));
}

TEST_CASE("moment matrix is symmetric for random inputs") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 5 + static_cast<int>(rng.below(20));
        Eigen::VectorXd xs(n), xt(n), w(n);
        for (int i = 0; i < n; ++i) {
            xs(i) = rng.normal();
            xt(i) = rng.normal();
            w(i) = rng.uniform();
        }
        const auto sys = weighted_moment_system(xs, xt, w, 3);
        CHECK((sys.moments - sys.moments.transpose()).cwiseAbs().maxCoeff() ==
              doctest::Approx(0.0));
    }
}

TEST_CASE("solve_relation recovers a planted noiseless quadratic") {
    Rng rng(17);
    const int n = 60;
    Eigen::VectorXd xh(n), yh(n);
    for (int i = 0; i < n; ++i) {
        xh(i) = rng.normal();
        yh(i) = 2.0 * xh(i) * xh(i);
    }
    // Moment system of the already-weighted values: w = 1.
    const auto sys = weighted_moment_system(xh, yh, Eigen::VectorXd::Ones(n), 2);
    const auto rel = decor::solve_relation(sys, 0, 1, 2);
    CHECK(std::abs(rel.coeffs(0)) < 1e-8);
    CHECK(std::abs(rel.coeffs(1)) < 1e-8);
    CHECK(rel.coeffs(2) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(rel.tail_norm_sq() == doctest::Approx(4.0).epsilon(1e-8));
}

TEST_CASE("solve_relation on a constant target is intercept-only") {
    Rng rng(19);
    const int n = 40;
    Eigen::VectorXd xh(n), yh = Eigen::VectorXd::Constant(n, 3.25);
    for (int i = 0; i < n; ++i) xh(i) = rng.normal();
    const auto sys = weighted_moment_system(xh, yh, Eigen::VectorXd::Ones(n), 2);
    const auto rel = decor::solve_relation(sys, 0, 1, 2);
    CHECK(rel.coeffs(0) == doctest::Approx(3.25).epsilon(1e-10));
    CHECK(rel.tail_norm_sq() < 1e-16);
}

TEST_CASE("solve_relation equals direct design-matrix least squares") {
    Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 30 + static_cast<int>(rng.below(71));
        const int k = 1 + static_cast<int>(rng.below(3));
        Eigen::VectorXd xh(n), yh(n);
        for (int i = 0; i < n; ++i) {
            xh(i) = rng.normal();
            yh(i) = rng.normal() * 2.0;
        }
        const auto sys = weighted_moment_system(xh, yh, Eigen::VectorXd::Ones(n), k);
        const auto rel = decor::solve_relation(sys, 0, 1, k);
        const Eigen::VectorXd direct = oracles::design_matrix_polyfit(xh, yh, k);
        CHECK((rel.coeffs - direct).lpNorm<Eigen::Infinity>() < 1e-8);
    }
}

TEST_CASE("penalty is zero when the target feature is identically zero") {
    Rng rng(29);
    Eigen::MatrixXd x(50, 2);
    for (int i = 0; i < 50; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = 0.0;
    }
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(50, 1.0 / 50.0);
    CHECK(decor::decorrelation_penalty(x, w, 2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("exact linear dependence contributes the squared slope") {
    const int n = 24;
    Eigen::MatrixXd x(n, 2);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = -2.0 + 4.0 * static_cast<double>(i) / (n - 1);
        x(i, 1) = 3.0 * x(i, 0);
    }
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / n);

    // Pair (0 -> 1): y = 3x, slope 3, the rest zero.
    const auto sys = weighted_moment_system(x.col(0), x.col(1), Eigen::VectorXd::Ones(n), 2);
    const auto rel = decor::solve_relation(sys, 0, 1, 2);
    CHECK(rel.coeffs(1) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(rel.tail_norm_sq() == doctest::Approx(9.0).epsilon(1e-8));

    // Both ordered pairs: 3^2 + (1/3)^2. Uniform weights normalize away.
    CHECK(decor::decorrelation_penalty(x, w, 2) ==
          doctest::Approx(9.0 + 1.0 / 9.0).epsilon(1e-7));
}

TEST_CASE("penalty of independent features shrinks as n grows") {
    const int sizes[3] = {200, 800, 3200};
    double previous = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 3; ++s) {
        const int n = sizes[s];
        std::vector<double> values;
        for (int seed = 0; seed < 5; ++seed) {
            Rng rng(derive_seed(1000 + seed, static_cast<std::uint64_t>(n)));
            Eigen::MatrixXd x(n, 3);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
            values.push_back(
                decor::decorrelation_penalty(x, Eigen::VectorXd::Constant(n, 1.0 / n), 2));
        }
        std::sort(values.begin(), values.end());
        const double median = values[2];
        CHECK(median < previous);
        previous = median;
    }
}

TEST_CASE("penalty gradient matches central finite differences") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 10 + static_cast<int>(rng.below(41));
        const int p = 2 + static_cast<int>(rng.below(4));
        Eigen::MatrixXd x(n, p);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
        Eigen::VectorXd w(n);
        for (int i = 0; i < n; ++i) w(i) = (0.5 + rng.uniform()) / n;

        const Eigen::VectorXd analytic = decor::penalty_gradient(x, w, 2);
        const Eigen::VectorXd numeric = oracles::finite_difference_gradient(
            [&](const Eigen::VectorXd& wv) { return decor::decorrelation_penalty(x, wv, 2); }, w,
            1e-7 / n);
        const double scale = std::max(numeric.norm(), 1e-12);
        CHECK((analytic - numeric).norm() / scale < 1e-4);
    }
}

TEST_CASE("gradient is zero when features are zero") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(20, 3);
    Eigen::VectorXd w = Eigen::VectorXd::Constant(20, 0.05);
    CHECK(decor::penalty_gradient(x, w, 2).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("learn_weights with gamma=0 hits the closed-form quadratic minimum") {
    const int n = 40;
    Eigen::MatrixXd x(n, 2);
    Rng rng(37);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
    }
    decor::DecorrConfig cfg;
    cfg.gamma = 0.0;
    cfg.lambda1 = 0.3;
    cfg.lambda2 = 0.7;
    cfg.max_iters = 4000;
    cfg.tolerance = 1e-16;
    const auto learned = decor::learn_weights(x, cfg);
    const double expected = 0.7 / (0.3 + n * 0.7);
    for (int i = 0; i < n; ++i) CHECK(learned.w(i) == doctest::Approx(expected).epsilon(1e-5));
}

TEST_CASE("learn_weights trajectory is non-increasing and weights stay non-negative") {
    Rng rng(41);
    const int n = 120;
    Eigen::MatrixXd x(n, 3);
    for (int i = 0; i < n; ++i) {
        const double shared = rng.normal();
        x(i, 0) = shared + 0.2 * rng.normal();
        x(i, 1) = shared * shared + 0.2 * rng.normal();
        x(i, 2) = rng.normal();
    }
    decor::DecorrConfig cfg;
    cfg.gamma = 100.0;
    cfg.max_iters = 60;
    const auto learned = decor::learn_weights(x, cfg);
    REQUIRE(learned.trajectory.size() > 1);
    for (size_t k = 1; k < learned.trajectory.size(); ++k)
        CHECK(learned.trajectory[k].objective <= learned.trajectory[k - 1].objective + 1e-12);
    CHECK(learned.w.minCoeff() >= 0.0);
}

TEST_CASE("learning reduces the decorrelation penalty below the uniform level") {
    Rng rng(43);
    const int n = 400;
    Eigen::MatrixXd x(n, 3);
    for (int i = 0; i < n; ++i) {
        const double shared = rng.normal();
        x(i, 0) = shared + 0.3 * rng.normal();
        x(i, 1) = 0.5 * shared * shared + shared + 0.3 * rng.normal();
        x(i, 2) = rng.normal();
    }
    decor::DecorrConfig cfg;
    cfg.gamma = 600.0;
    cfg.lambda1 = 5e-4;
    cfg.lambda2 = 5e-4;
    cfg.max_iters = 120;
    const auto learned = decor::learn_weights(x, cfg);
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / n);
    CHECK(decor::decorrelation_penalty(x, learned.w, 2) <
          decor::decorrelation_penalty(x, uniform, 2));
}

TEST_CASE("kde init weights: identical rows give exactly uniform weights") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Constant(12, 3, 1.5);
    const Eigen::VectorXd w = decor::kde_init_weights(x);
    for (int i = 0; i < 12; ++i) CHECK(w(i) == doctest::Approx(1.0 / 12.0));
}

TEST_CASE("kde init weights: independent features stay near uniform") {
    Rng rng(47);
    const int n = 300;
    Eigen::MatrixXd x(n, 2);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
    }
    const Eigen::VectorXd w = decor::kde_init_weights(x);
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w.minCoeff() >= 0.0);
    // Density-ratio weights concentrate around 1/n when the product equals
    // the joint; allow generous sampling slack.
    const double cv = std::sqrt((w.array() - 1.0 / n).square().mean()) * n;
    CHECK(cv < 0.5);
}

TEST_CASE("degenerate inputs raise the documented errors") {
    Eigen::MatrixXd x(4, 1);
    x << 1, 2, 3, 4;
    Eigen::VectorXd w = Eigen::VectorXd::Constant(4, 0.25);
    CHECK_THROWS_AS(decor::decorrelation_penalty(x, w, 2), ConfigError);
    Eigen::MatrixXd x2(4, 2);
    x2 << 1, 2, 3, 4, 5, 6, 7, 8;
    CHECK_THROWS_AS(decor::decorrelation_penalty(x2, w, 0), ConfigError);
    Eigen::VectorXd short_w(2);
    short_w << 1, 1;
    CHECK_THROWS_AS(decor::decorrelation_penalty(x2, short_w, 2), SchemaError);
    CHECK_THROWS_AS(decor::kde_init_weights(Eigen::MatrixXd::Zero(1, 2)), ConfigError);
}

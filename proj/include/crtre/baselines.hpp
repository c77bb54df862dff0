#pragma once

#include <Eigen/Dense>

#include "crtre/decorrelate.hpp"
#include "crtre/model.hpp"

namespace crtre::base {

enum class Penalty { none, l1, l2 };

struct LinearFitConfig {
    Penalty penalty = Penalty::none;
    double lambda = 0.0;     // l1/l2 strength
    double c_margin = 1.0;   // SVM/SVR data-term weight
    double epsilon = 0.1;    // SVR tube
    int iters = 4000;        // subgradient iterations
};

// OLS / Ridge via normal equations, Lasso via coordinate descent.
ModelParams fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const LinearFitConfig& cfg);

// min sum_i w_i (y_i - x_i beta - b)^2, closed form.
ModelParams fit_weighted_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& w);

// Linear hinge classifier by projected subgradient descent; labels {0,1}.
ModelParams fit_svm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    const LinearFitConfig& cfg);

// Standard L2 logistic regression (mean cross-entropy + lambda*||beta||^2)
// by damped Newton; the unweighted counterpart of the weighted classifier.
ModelParams fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda);

// Plain epsilon-insensitive linear SVR, the uniform-weight counterpart of the
// weighted form.
ModelParams fit_plain_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const LinearFitConfig& cfg);

// Weighted cross-covariance balancing term of DWR, evaluated literally at the
// weights given.
double dwr_balance_penalty(const Eigen::MatrixXd& x, const Eigen::VectorXd& w);

struct DwrConfig {
    double gamma = 1.0;      // balancing penalty weight
    double lambda1 = 5e-4;   // ||W||^2
    double lambda2 = 5e-4;   // (sum W - 1)^2
    int max_iters = 150;
    double step_size = 1.0;
    double tolerance = 1e-9;
};

// Projected gradient descent on the balancing penalty (evaluated at
// unit-mean-normalized weights, like the decorrelation learner) plus the
// norm and sum penalties.
decor::LearnedWeights dwr_weights(const Eigen::MatrixXd& x, const DwrConfig& cfg);

struct DwrFit {
    decor::LearnedWeights weights;
    ModelParams model;
};

// dwr_weights followed by the weighted SVR (regression) or weighted logistic
// (classification) at unit-mean weight scale.
DwrFit fit_dwr_svm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const DwrConfig& cfg,
                   const decor::DecorrConfig& model_cfg, decor::Task task);

// dwr_weights followed by weighted least squares; the DWR estimator itself.
DwrFit fit_dwr_regression(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const DwrConfig& cfg);

}  // namespace crtre::base

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "crtre/dataset.hpp"
#include "crtre/model.hpp"

namespace crtre::decor {

// Polynomial relation fitted from one weighted feature to another. coeffs[a]
// multiplies x^a; the decorrelation penalty reads the non-intercept tail.
struct PolyRelation {
    Eigen::VectorXd coeffs;  // length degree+1
    int source = 0;          // p2, the expansion variable
    int target = 0;          // p1
    int degree = 1;

    double tail_norm_sq() const {
        double s = 0.0;
        for (Eigen::Index a = 1; a < coeffs.size(); ++a) s += coeffs(a) * coeffs(a);
        return s;
    }
};

struct MomentSystem {
    Eigen::MatrixXd moments;  // (k+1) x (k+1), entry (a,b) = sum_i (w_i x_i)^(a+b)
    Eigen::VectorXd targets;  // length k+1, entry a = sum_i (w_i x_i)^a * (w_i y_i)
};

// Moment system of the weighted source feature against the weighted target.
MomentSystem weighted_moment_system(const Eigen::VectorXd& x_source,
                                    const Eigen::VectorXd& x_target,
                                    const Eigen::VectorXd& weights, int degree);

// Least-squares polynomial coefficients of the moment system. Solved with a
// rank-revealing decomposition, so a degenerate system yields the minimum-
// norm fit instead of blowing up.
PolyRelation solve_relation(const MomentSystem& system, int source, int target, int degree);

// Sum of squared non-intercept relation coefficients over all ordered feature
// pairs. Weights are normalized to unit mean before the relation solves so
// the moment system is invariant to the overall weight scale.
double decorrelation_penalty(const Eigen::MatrixXd& x, const Eigen::VectorXd& weights,
                             int degree);

// Exact gradient of decorrelation_penalty via the adjoint of the linear
// solve.
Eigen::VectorXd penalty_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& weights,
                                 int degree);

enum class WeightInit { uniform, kde };
enum class BandwidthRule { scott, silverman };

struct DecorrConfig {
    int degree = 2;
    double gamma = 600.0;     // decorrelation penalty weight
    double lambda1 = 5e-4;    // ||W||^2 penalty weight
    double lambda2 = 5e-4;    // (sum W - 1)^2 penalty weight
    double lambda3 = 1e-3;    // model coefficient penalty weight
    double c_offset = 0.5;    // C added to every sample weight in the model fit
    int max_iters = 150;
    double step_size = 1.0;   // initial backtracking step
    double tolerance = 1e-9;  // stop when the objective improves by less
    WeightInit init = WeightInit::uniform;
    BandwidthRule bandwidth = BandwidthRule::scott;

    // Model-fit knobs.
    double svr_epsilon = 0.1;
    int model_iters = 4000;
    int joint_rounds = 3;
};

struct TrajectoryPoint {
    int iter = 0;
    double objective = 0.0;
    double step = 0.0;
};

struct LearnedWeights {
    Eigen::VectorXd w;
    std::vector<TrajectoryPoint> trajectory;
};

// Minimizes gamma*R(W) + lambda1*||W||^2 + lambda2*(sum W - 1)^2 by projected
// gradient descent with Armijo backtracking; W stays non-negative. An
// optional per-sample linear cost term supports the joint fitting mode.
LearnedWeights learn_weights(const Eigen::MatrixXd& x, const DecorrConfig& cfg,
                             const Eigen::VectorXd* init = nullptr,
                             const Eigen::VectorXd* linear_cost = nullptr);

// Ratio of the product of marginal kernel density estimates to the
// product-kernel joint estimate, normalized to sum 1.
Eigen::VectorXd kde_init_weights(const Eigen::MatrixXd& x,
                                 BandwidthRule rule = BandwidthRule::scott);

// Weighted logistic regression: per-sample factors (W_i + C), data term
// normalized by their sum so a uniform rescaling of the factors leaves the
// minimizer unchanged.
ModelParams fit_weighted_classifier(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& weights, const DecorrConfig& cfg);

// Weighted epsilon-insensitive linear SVR by projected subgradient descent
// with iterate averaging.
ModelParams fit_weighted_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& weights, const DecorrConfig& cfg);

enum class Task { classification, regression };
enum class FitMode { two_stage, joint };

struct CrtreFit {
    LearnedWeights weights;
    ModelParams model;
};

// The full pipeline on a feature matrix: decorrelating weights, then the
// weighted model. Learned weights sum to ~1; the model fit receives them
// scaled to unit mean so the C offset is commensurate.
CrtreFit crtre_fit(const LabeledDataset& data, const DecorrConfig& cfg, Task task,
                   FitMode mode = FitMode::two_stage);

void save_weights_json(const Eigen::VectorXd& w, const std::string& path);
Eigen::VectorXd load_weights_json(const std::string& path);
void save_trajectory_csv(const std::vector<TrajectoryPoint>& trajectory, const std::string& path);

}  // namespace crtre::decor

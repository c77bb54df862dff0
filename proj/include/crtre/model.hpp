#pragma once

#include <Eigen/Dense>
#include <string>

namespace crtre {

enum class ModelKind { logistic, svr, hinge, least_squares };

struct ModelParams {
    Eigen::VectorXd beta;
    double intercept = 0.0;
    ModelKind kind = ModelKind::least_squares;

    // Linear score X*beta + b.
    Eigen::VectorXd decision(const Eigen::MatrixXd& x) const {
        return (x * beta).array() + intercept;
    }
    // Regression prediction, or class labels {0,1} for classifiers.
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

std::string model_kind_name(ModelKind kind);

void save_model_json(const ModelParams& params, const std::string& path);
ModelParams load_model_json(const std::string& path);

}  // namespace crtre

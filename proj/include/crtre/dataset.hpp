#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace crtre {

// Tabular dataset with named real-valued features, an optional outcome and a
// stable/unstable role per feature. Missing cells are stored as NaN.
struct LabeledDataset {
    Eigen::MatrixXd features;             // n x p
    Eigen::VectorXd outcome;              // length n; empty until generated/loaded
    Eigen::VectorXd noiseless_outcome;    // deterministic part f(S); empty unless synthesized
    std::vector<bool> stable_mask;        // length p
    std::vector<std::string> names;       // length p
    bool classification = false;          // outcome in {0,1} when true

    Eigen::Index rows() const { return features.rows(); }
    Eigen::Index cols() const { return features.cols(); }
    bool has_outcome() const { return outcome.size() == features.rows() && outcome.size() > 0; }

    std::vector<int> stable_indices() const;
    std::vector<int> unstable_indices() const;

    // Column-subset view helpers used by the estimators.
    Eigen::MatrixXd stable_columns() const;
    Eigen::MatrixXd unstable_columns() const;
};

// CSV with a header row, feature columns and a final "label" column, plus a
// sidecar JSON carrying the stable mask and provenance config.
void save_csv(const LabeledDataset& data, const std::string& path);
LabeledDataset load_csv(const std::string& path, const std::string& label_column = "label");

void save_sidecar(const LabeledDataset& data, const std::string& path,
                  const std::string& config_json = "{}");
void apply_sidecar(LabeledDataset& data, const std::string& path);

}  // namespace crtre

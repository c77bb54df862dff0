#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "crtre/model.hpp"
#include "crtre/rulemine.hpp"

namespace crtre::select {

struct SelectionConfig {
    int max_rules = 0;      // lambda1 bound; 0 means "all"
    int min_rules = 1;      // lambda2 bound
    int cv_folds = 5;
    double c_param = 1.0;   // squared-hinge data-term weight
    std::uint64_t seed = 0; // fold assignment seed
};

struct SelectionStep {
    int iteration = 0;
    int removed_rule = -1;  // column index in the original matrix
    double cv_accuracy = 0.0;
    double best_accuracy = 0.0;
};

struct SelectionResult {
    std::vector<int> selected;  // column indices into the original matrix
    std::vector<SelectionStep> history;
    double best_accuracy = 0.0;
};

// Backward elimination on the rule design matrix: fit the L2 squared-hinge
// classifier, drop the column with the smallest squared weight, keep the
// subset with the best cross-validated accuracy. Elimination continues
// through accuracy plateaus (preferring the smaller subset) and stops at the
// first strict drop or at the min_rules floor.
SelectionResult select_rules(const mine::RuleMatrix& matrix, const Eigen::VectorXd& labels,
                             const SelectionConfig& cfg);

// Greedy single-item deletions across all rules; applies the deletion with
// the best cross-validated accuracy while the accuracy does not decrease.
// A rule whose antecedent empties is dropped.
std::vector<mine::Rule> reduce_items(const std::vector<mine::Rule>& rules,
                                     const tabular::ItemizedDataset& data,
                                     const SelectionConfig& cfg,
                                     mine::MatrixScaling scaling = mine::MatrixScaling::binary);

// L2 squared-hinge linear classifier used by the selection loops.
crtre::ModelParams fit_squared_hinge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c_param);

// Mean held-out accuracy of the squared-hinge classifier over the fold plan.
double cv_accuracy(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   const SelectionConfig& cfg);

void save_history_csv(const std::vector<SelectionStep>& history, const std::string& path);

}  // namespace crtre::select

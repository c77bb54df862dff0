#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "crtre/model.hpp"
#include "crtre/rulemine.hpp"
#include "crtre/synthdata.hpp"

namespace crtre::eval {

struct BetaErrorReport {
    double beta_s_error = 0.0;  // mean |delta| over stable coefficients
    double beta_v_error = 0.0;  // ... over unstable coefficients
    double beta_error = 0.0;    // mean of the two group errors
    double beta_s_sum = 0.0;    // raw absolute sums, kept for auditability
    double beta_v_sum = 0.0;
};

BetaErrorReport beta_error(const ModelParams& est, const synth::BetaSpec& truth,
                           const std::vector<bool>& stable_mask);

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& actual);

enum class PairTransform { identity, square, cube, exponential };

struct CorrRecord {
    int i = 0;  // target column
    int j = 0;  // transformed column
    PairTransform transform = PairTransform::identity;
    double pearson = 0.0;
    bool skipped = false;  // zero-variance pair
};

enum class PairsMode { nonlinear, linear_only };

struct CorrProfile {
    std::vector<CorrRecord> records;
    // Mean |pearson| per transform over non-skipped records.
    double mean_abs(PairTransform t) const;
    // Mean |pearson| over the square/cube/exponential records.
    double mean_abs_nonlinear() const;
};

// Pearson correlations of W.*X_i against transforms of W.*X_j for every
// ordered pair i != j.
CorrProfile corr_profile(const Eigen::MatrixXd& x, const Eigen::VectorXd& w, PairsMode mode);

void save_corr_profile_csv(const CorrProfile& profile, const std::string& path);

struct ClassificationReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

ClassificationReport classification_report(const Eigen::VectorXd& pred,
                                           const Eigen::VectorXd& truth);

// Pearson correlation of average ranks; ties share their mean rank.
double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct SplitSurgery {
    tabular::ItemizedDataset train;
    tabular::ItemizedDataset test;
    int chosen_rule = -1;
    bool fewer_than_ten = false;
};

// Picks the lowest-|weight| rule among the ten least-supported negative-class
// rules, then moves train rows satisfying {rule, y=1} into the test set and
// test rows satisfying {!rule, y=0} into the train set. Pass force_rule >= 0
// to pin the perturbed rule instead of choosing.
SplitSurgery counterfactual_split(const tabular::ItemizedDataset& train,
                                  const tabular::ItemizedDataset& test,
                                  const std::vector<mine::Rule>& rules,
                                  const Eigen::VectorXd& classifier_weights,
                                  int force_rule = -1);

std::string transform_name(PairTransform t);

}  // namespace crtre::eval

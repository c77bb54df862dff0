#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "crtre/tabular.hpp"

namespace crtre::mine {

using tabular::ItemizedDataset;

// Class-association rule <antecedent => consequent | confidence>. support is
// the joint support of antecedent and consequent over the whole dataset.
struct Rule {
    std::vector<int> antecedent;  // sorted item ids, non-empty
    int consequent = 0;           // class label {0,1}
    double support = 0.0;
    double confidence = 0.0;
    double lift = 0.0;
};

enum class MatrixScaling { binary, confidence_scaled };

struct RuleMatrix {
    Eigen::MatrixXd values;  // n x r
    std::vector<Rule> rules;
    MatrixScaling scaling = MatrixScaling::binary;
};

struct MiningConfig {
    double min_support = 0.05;
    double min_confidence = 0.6;
    int max_len = 3;
};

// Level-wise Apriori over both class consequents. Joint support is
// anti-monotone in the antecedent, which drives the candidate pruning.
std::vector<Rule> apriori(const ItemizedDataset& data, const MiningConfig& cfg);

struct RuleStats {
    double support_antecedent = 0.0;
    double support_consequent = 0.0;
    double support_joint = 0.0;
    double confidence = 0.0;
    double lift = 0.0;
};

RuleStats rule_metrics(const std::vector<int>& antecedent, int consequent,
                       const ItemizedDataset& data);

// Entry (i, j) = [antecedent_j subset of transaction_i], scaled by the rule
// confidence (positive class) or its capped inverse (negative class) in
// confidence-scaled mode.
RuleMatrix rule_matrix(const std::vector<Rule>& rules, const ItemizedDataset& data,
                       MatrixScaling scaling);

bool satisfies(const std::vector<int>& antecedent, const std::vector<int>& transaction);

// JSON-lines serialization: one rule object per line.
void save_rules_jsonl(const std::vector<Rule>& rules, const ItemizedDataset& vocab,
                      const std::string& path);
std::vector<Rule> load_rules_jsonl(const std::string& path, ItemizedDataset& vocab);

}  // namespace crtre::mine

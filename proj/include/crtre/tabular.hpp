#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crtre/dataset.hpp"

namespace crtre::tabular {

// Transaction view of a discretized dataset. Item ids are dense; each
// transaction is a sorted id set.
struct ItemizedDataset {
    std::vector<std::vector<int>> transactions;
    std::vector<int> labels;                 // {0,1}
    std::vector<std::string> item_names;     // id -> "feature=category"

    size_t size() const { return transactions.size(); }
    int vocab_size() const { return static_cast<int>(item_names.size()); }
};

struct FoldPlan {
    int k = 0;
    std::vector<int> assignments;  // length n, values in [0, k)
    std::uint64_t seed = 0;
};

// Median imputation of missing (NaN) cells; a column with no observed value
// is an error.
LabeledDataset impute_missing(LabeledDataset data);

// Equal-frequency binning. Every sample becomes the set of its
// "feature=qK" items; identical values always share a bin, so a constant
// feature collapses to a single catch-all item.
ItemizedDataset discretize(const LabeledDataset& data, int bins_per_feature);

FoldPlan split_folds(Eigen::Index n, int k, std::uint64_t seed);

// One transaction per line: comma-separated item names, a tab, the label.
void save_itemized(const ItemizedDataset& data, const std::string& path);
ItemizedDataset load_itemized(const std::string& path);

// Per-feature bin index assignment used by discretize; exposed for tests.
std::vector<int> equal_frequency_bins(const std::vector<double>& values, int bins);

}  // namespace crtre::tabular

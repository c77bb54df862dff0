#include "crtre/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "crtre/errors.hpp"
#include "crtre/rng.hpp"

namespace crtre::tabular {

LabeledDataset impute_missing(LabeledDataset data) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        std::vector<double> observed;
        for (Eigen::Index i = 0; i < data.rows(); ++i)
            if (!std::isnan(data.features(i, j))) observed.push_back(data.features(i, j));
        if (observed.empty())
            throw SchemaError("impute_missing: column '" + data.names[static_cast<size_t>(j)] +
                              "' has no observed values");
        if (static_cast<Eigen::Index>(observed.size()) == data.rows()) continue;
        std::sort(observed.begin(), observed.end());
        const size_t m = observed.size();
        const double median =
            m % 2 == 1 ? observed[m / 2] : 0.5 * (observed[m / 2 - 1] + observed[m / 2]);
        for (Eigen::Index i = 0; i < data.rows(); ++i)
            if (std::isnan(data.features(i, j))) data.features(i, j) = median;
    }
    return data;
}

std::vector<int> equal_frequency_bins(const std::vector<double>& values, int bins) {
    const size_t n = values.size();
    // Rank range per distinct value; the mid-rank decides the bin, so ties
    // never straddle a boundary.
    std::map<double, std::pair<size_t, size_t>> spans;  // value -> (count, cum_before)
    for (double v : values) spans[v].first++;
    size_t cum = 0;
    for (auto& [v, span] : spans) {
        span.second = cum;
        cum += span.first;
    }
    std::map<double, int> bin_of;
    for (const auto& [v, span] : spans) {
        const double midrank = static_cast<double>(span.second) + (static_cast<double>(span.first) - 1.0) / 2.0;
        int b = static_cast<int>(std::floor(midrank * static_cast<double>(bins) / static_cast<double>(n)));
        b = std::max(0, std::min(bins - 1, b));
        bin_of[v] = b;
    }
    std::vector<int> out;
    out.reserve(n);
    for (double v : values) out.push_back(bin_of[v]);
    return out;
}

ItemizedDataset discretize(const LabeledDataset& data, int bins_per_feature) {
    if (bins_per_feature < 2) throw ConfigError("discretize: bins must be >= 2");
    if (!data.has_outcome()) throw SchemaError("discretize: dataset has no labels");
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const double y = data.outcome(i);
        if (y != 0.0 && y != 1.0)
            throw SchemaError("discretize: labels must be binary {0,1}");
    }

    ItemizedDataset out;
    out.transactions.assign(static_cast<size_t>(data.rows()), {});
    out.labels.resize(static_cast<size_t>(data.rows()));
    for (Eigen::Index i = 0; i < data.rows(); ++i)
        out.labels[static_cast<size_t>(i)] = static_cast<int>(data.outcome(i));

    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        std::vector<double> column(static_cast<size_t>(data.rows()));
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
            const double v = data.features(i, j);
            if (std::isnan(v))
                throw SchemaError("discretize: missing cell in column '" +
                                  data.names[static_cast<size_t>(j)] + "'; impute first");
            column[static_cast<size_t>(i)] = v;
        }
        const auto bins = equal_frequency_bins(column, bins_per_feature);
        // Dense item ids per (feature, used bin).
        std::map<int, int> item_of_bin;
        for (int b : bins)
            if (!item_of_bin.count(b)) {
                item_of_bin[b] = out.vocab_size();
                out.item_names.push_back(data.names[static_cast<size_t>(j)] + "=q" + std::to_string(b));
            }
        for (size_t i = 0; i < bins.size(); ++i)
            out.transactions[i].push_back(item_of_bin[bins[i]]);
    }
    for (auto& t : out.transactions) std::sort(t.begin(), t.end());
    return out;
}

FoldPlan split_folds(Eigen::Index n, int k, std::uint64_t seed) {
    if (k < 1) throw ConfigError("split_folds: k must be >= 1");
    if (static_cast<Eigen::Index>(k) > n) throw ConfigError("split_folds: k exceeds sample count");
    std::vector<Eigen::Index> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(seed, 0xf01d));
    for (size_t i = perm.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(rng.below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(static_cast<size_t>(n), 0);
    for (size_t pos = 0; pos < perm.size(); ++pos)
        plan.assignments[static_cast<size_t>(perm[pos])] = static_cast<int>(pos % static_cast<size_t>(k));
    return plan;
}

void save_itemized(const ItemizedDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (size_t i = 0; i < data.size(); ++i) {
        for (size_t k = 0; k < data.transactions[i].size(); ++k) {
            if (k) out << ",";
            out << data.item_names[static_cast<size_t>(data.transactions[i][k])];
        }
        out << "\t" << data.labels[i] << "\n";
    }
}

ItemizedDataset load_itemized(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    ItemizedDataset data;
    std::map<std::string, int> ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError(path + ":" + std::to_string(line_no) + ": missing tab separator");
        std::vector<int> txn;
        std::stringstream items(line.substr(0, tab));
        std::string name;
        while (std::getline(items, name, ',')) {
            if (name.empty()) continue;
            auto it = ids.find(name);
            if (it == ids.end()) {
                it = ids.emplace(name, static_cast<int>(data.item_names.size())).first;
                data.item_names.push_back(name);
            }
            txn.push_back(it->second);
        }
        if (txn.empty())
            throw ParseError(path + ":" + std::to_string(line_no) + ": empty transaction");
        std::sort(txn.begin(), txn.end());
        int label = 0;
        try {
            label = std::stoi(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad label");
        }
        if (label != 0 && label != 1)
            throw ParseError(path + ":" + std::to_string(line_no) + ": label must be 0 or 1");
        data.transactions.push_back(std::move(txn));
        data.labels.push_back(label);
    }
    return data;
}

}  // namespace crtre::tabular

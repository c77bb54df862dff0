// Test-only reference implementations, kept independent of the library code
// paths they check.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "crtre/rng.hpp"
#include "crtre/rulemine.hpp"
#include "crtre/tabular.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// Mining: exhaustive enumeration of all antecedents up to max_len.
// ---------------------------------------------------------------------------

inline std::vector<crtre::mine::Rule> brute_force_rules(
    const crtre::tabular::ItemizedDataset& data, double min_support, double min_confidence,
    int max_len) {
    std::vector<crtre::mine::Rule> out;
    const int v = data.vocab_size();
    const double n = static_cast<double>(data.size());
    if (data.size() == 0) return out;
    long n_pos = 0;
    for (int y : data.labels) n_pos += (y == 1);

    std::vector<int> items;
    const std::function<void(int)> recurse = [&](int next) {
        if (!items.empty()) {
            long count_all = 0, count_pos = 0;
            for (size_t i = 0; i < data.size(); ++i) {
                if (crtre::mine::satisfies(items, data.transactions[i])) {
                    ++count_all;
                    count_pos += (data.labels[i] == 1);
                }
            }
            for (int consequent : {0, 1}) {
                const long n_class = consequent == 1 ? n_pos : static_cast<long>(data.size()) - n_pos;
                if (n_class == 0) continue;
                const long joint = consequent == 1 ? count_pos : count_all - count_pos;
                const double support = static_cast<double>(joint) / n;
                if (support < min_support) continue;
                const double confidence =
                    static_cast<double>(joint) / static_cast<double>(count_all);
                if (confidence < min_confidence) continue;
                crtre::mine::Rule r;
                r.antecedent = items;
                r.consequent = consequent;
                r.support = support;
                r.confidence = confidence;
                r.lift = confidence / (static_cast<double>(n_class) / n);
                out.push_back(r);
            }
        }
        if (static_cast<int>(items.size()) >= max_len) return;
        for (int item = items.empty() ? 0 : items.back() + 1; item < v; ++item) {
            items.push_back(item);
            recurse(item + 1);
            items.pop_back();
        }
    };
    recurse(0);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.consequent != b.consequent) return a.consequent < b.consequent;
        return a.antecedent < b.antecedent;
    });
    return out;
}

inline crtre::tabular::ItemizedDataset random_transactions(std::uint64_t seed, int max_items = 8,
                                                           int max_txns = 40) {
    crtre::Rng rng(seed);
    crtre::tabular::ItemizedDataset data;
    const int vocab = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_items - 1)));
    const int n = 5 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_txns - 4)));
    for (int k = 0; k < vocab; ++k) data.item_names.push_back("i" + std::to_string(k));
    for (int i = 0; i < n; ++i) {
        std::vector<int> txn;
        for (int k = 0; k < vocab; ++k)
            if (rng.uniform() < 0.4) txn.push_back(k);
        if (txn.empty()) txn.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab))));
        data.transactions.push_back(std::move(txn));
        data.labels.push_back(rng.uniform() < 0.5 ? 1 : 0);
    }
    return data;
}

// ---------------------------------------------------------------------------
// Least squares: direct design-matrix fit of y on [1, x, ..., x^k].
// ---------------------------------------------------------------------------

inline Eigen::VectorXd design_matrix_polyfit(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                             int k) {
    Eigen::MatrixXd design(x.size(), k + 1);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double p = 1.0;
        for (int a = 0; a <= k; ++a) {
            design(i, a) = p;
            p *= x(i);
        }
    }
    return design.colPivHouseholderQr().solve(y);
}

// ---------------------------------------------------------------------------
// Central finite differences of a scalar function of a weight vector.
// ---------------------------------------------------------------------------

inline Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& w,
    double h = 1e-6) {
    Eigen::VectorXd g(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        Eigen::VectorXd lo = w, hi = w;
        hi(i) += h;
        lo(i) -= h;
        g(i) = (f(hi) - f(lo)) / (2.0 * h);
    }
    return g;
}

}  // namespace oracles

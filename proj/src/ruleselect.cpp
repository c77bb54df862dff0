#include "crtre/ruleselect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "crtre/errors.hpp"
#include "crtre/tabular.hpp"

namespace crtre::select {

namespace {

constexpr double kPlateauTol = 1e-12;

void check_labels(const Eigen::VectorXd& y) {
    bool has0 = false, has1 = false;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y(i) == 0.0) has0 = true;
        else if (y(i) == 1.0) has1 = true;
        else throw SchemaError("selection: labels must be binary {0,1}");
    }
    if (!has0 || !has1) throw ConfigError("selection: degenerate single-class labels");
}

Eigen::MatrixXd subset_columns(const Eigen::MatrixXd& m, const std::vector<int>& cols) {
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
    for (size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(cols[k]);
    return out;
}

}  // namespace

crtre::ModelParams fit_squared_hinge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c_param) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    Eigen::VectorXd sign(n);
    for (Eigen::Index i = 0; i < n; ++i) sign(i) = y(i) == 1.0 ? 1.0 : -1.0;

    // min ||w||^2 + c * sum max(0, 1 - s_i (x_i w + b))^2 — smooth, so plain
    // gradient descent with backtracking converges reliably.
    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    double b = 0.0;
    const auto value = [&](const Eigen::VectorXd& wv, double bv) {
        Eigen::VectorXd margin = x * wv;
        margin.array() += bv;
        double loss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double viol = std::max(0.0, 1.0 - sign(i) * margin(i));
            loss += viol * viol;
        }
        return wv.squaredNorm() + c_param * loss;
    };
    double j = value(w, b);
    double step = 1.0 / (1.0 + c_param * static_cast<double>(n));
    for (int iter = 0; iter < 500; ++iter) {
        Eigen::VectorXd margin = x * w;
        margin.array() += b;
        Eigen::VectorXd gw = 2.0 * w;
        double gb = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double viol = 1.0 - sign(i) * margin(i);
            if (viol > 0.0) {
                const double f = -2.0 * c_param * viol * sign(i);
                gw += f * x.row(i).transpose();
                gb += f;
            }
        }
        const double gnorm = std::sqrt(gw.squaredNorm() + gb * gb);
        if (gnorm < 1e-9 * (1.0 + std::abs(j))) break;
        double t = step;
        bool moved = false;
        for (int bt = 0; bt < 50; ++bt) {
            const Eigen::VectorXd wn = w - t * gw;
            const double bn = b - t * gb;
            const double cand = value(wn, bn);
            if (std::isfinite(cand) && cand <= j - 1e-4 * t * gnorm * gnorm) {
                w = wn;
                b = bn;
                j = cand;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) break;
        step = std::min(2.0 * t, 1.0);
    }
    crtre::ModelParams params;
    params.beta = w;
    params.intercept = b;
    params.kind = ModelKind::hinge;
    return params;
}

double cv_accuracy(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const SelectionConfig& cfg) {
    const Eigen::Index n = x.rows();
    const auto plan = tabular::split_folds(n, cfg.cv_folds, cfg.seed);
    double correct = 0.0;
    for (int fold = 0; fold < plan.k; ++fold) {
        std::vector<Eigen::Index> tr, te;
        for (Eigen::Index i = 0; i < n; ++i)
            (plan.assignments[static_cast<size_t>(i)] == fold ? te : tr).push_back(i);
        if (te.empty()) continue;
        Eigen::MatrixXd xtr(static_cast<Eigen::Index>(tr.size()), x.cols());
        Eigen::VectorXd ytr(static_cast<Eigen::Index>(tr.size()));
        for (size_t k = 0; k < tr.size(); ++k) {
            xtr.row(static_cast<Eigen::Index>(k)) = x.row(tr[k]);
            ytr(static_cast<Eigen::Index>(k)) = y(tr[k]);
        }
        bool has0 = false, has1 = false;
        for (Eigen::Index i = 0; i < ytr.size(); ++i) (ytr(i) == 1.0 ? has1 : has0) = true;
        if (!has0 || !has1) {
            // Degenerate training fold: predict its constant class.
            const double cls = has1 ? 1.0 : 0.0;
            for (Eigen::Index i : te) correct += (y(i) == cls) ? 1.0 : 0.0;
            continue;
        }
        const crtre::ModelParams model = fit_squared_hinge(xtr, ytr, cfg.c_param);
        for (Eigen::Index i : te) {
            const double pred = model.beta.dot(x.row(i)) + model.intercept >= 0.0 ? 1.0 : 0.0;
            correct += (pred == y(i)) ? 1.0 : 0.0;
        }
    }
    return correct / static_cast<double>(n);
}

SelectionResult select_rules(const mine::RuleMatrix& matrix, const Eigen::VectorXd& labels,
                             const SelectionConfig& cfg) {
    const int r = static_cast<int>(matrix.values.cols());
    if (r == 0) throw ConfigError("select_rules: empty rule matrix");
    if (labels.size() != matrix.values.rows()) throw SchemaError("select_rules: label length mismatch");
    check_labels(labels);
    if (cfg.cv_folds < 2) throw ConfigError("select_rules: cv_folds must be >= 2");
    const int max_rules = cfg.max_rules > 0 ? cfg.max_rules : r;
    const int min_rules = std::max(cfg.min_rules, 1);
    if (min_rules > max_rules) throw ConfigError("select_rules: min_rules exceeds max_rules");
    if (r < min_rules) throw ConfigError("select_rules: fewer rules than the min_rules floor");

    std::vector<int> current(static_cast<size_t>(r));
    for (int k = 0; k < r; ++k) current[static_cast<size_t>(k)] = k;

    SelectionResult result;
    double best_acc = -1.0;
    if (r <= max_rules) {
        best_acc = cv_accuracy(matrix.values, labels, cfg);
        result.selected = current;
        result.history.push_back({0, -1, best_acc, best_acc});
    }

    int iteration = 0;
    while (static_cast<int>(current.size()) > min_rules) {
        ++iteration;
        const Eigen::MatrixXd cols = subset_columns(matrix.values, current);
        const crtre::ModelParams model = fit_squared_hinge(cols, labels, cfg.c_param);
        // Smallest w^2 goes; ties remove the higher original index.
        size_t victim = 0;
        for (size_t k = 1; k < current.size(); ++k) {
            const double wk = model.beta(static_cast<Eigen::Index>(k)) * model.beta(static_cast<Eigen::Index>(k));
            const double wv = model.beta(static_cast<Eigen::Index>(victim)) * model.beta(static_cast<Eigen::Index>(victim));
            if (wk < wv || (wk == wv && current[k] > current[victim])) victim = k;
        }
        const int removed = current[victim];
        current.erase(current.begin() + static_cast<std::ptrdiff_t>(victim));

        const double acc = cv_accuracy(subset_columns(matrix.values, current), labels, cfg);
        const bool within_bound = static_cast<int>(current.size()) <= max_rules;
        bool stable = false;
        if (within_bound) {
            if (acc >= best_acc - kPlateauTol) {
                // Plateaus keep eliminating and prefer the smaller subset.
                best_acc = std::max(best_acc, acc);
                result.selected = current;
            } else if (best_acc >= 0.0) {
                stable = true;  // strict drop: the kept subset won't change
            }
        }
        result.history.push_back({iteration, removed, acc, std::max(best_acc, 0.0)});
        if (stable) break;
    }

    if (result.selected.empty())
        throw ConfigError("select_rules: no subset satisfied the rule-count bounds");
    result.best_accuracy = best_acc;
    return result;
}

std::vector<mine::Rule> reduce_items(const std::vector<mine::Rule>& rules,
                                     const tabular::ItemizedDataset& data,
                                     const SelectionConfig& cfg, mine::MatrixScaling scaling) {
    if (rules.empty()) throw ConfigError("reduce_items: empty rule list");
    Eigen::VectorXd labels(static_cast<Eigen::Index>(data.size()));
    for (size_t i = 0; i < data.size(); ++i) labels(static_cast<Eigen::Index>(i)) = data.labels[i];
    check_labels(labels);

    const auto score = [&](const std::vector<mine::Rule>& candidate) {
        const mine::RuleMatrix m = mine::rule_matrix(candidate, data, scaling);
        return cv_accuracy(m.values, labels, cfg);
    };

    std::vector<mine::Rule> current = rules;
    double best = score(current);
    while (true) {
        double cand_best = -1.0;
        std::vector<mine::Rule> cand_rules;
        for (size_t rj = 0; rj < current.size(); ++rj) {
            for (size_t it = 0; it < current[rj].antecedent.size(); ++it) {
                std::vector<mine::Rule> trial = current;
                trial[rj].antecedent.erase(trial[rj].antecedent.begin() + static_cast<std::ptrdiff_t>(it));
                if (trial[rj].antecedent.empty())
                    trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(rj));
                if (trial.empty()) continue;
                const double acc = score(trial);
                if (acc > cand_best) {
                    cand_best = acc;
                    cand_rules = std::move(trial);
                }
            }
        }
        if (cand_rules.empty() || cand_best < best - kPlateauTol) break;
        best = std::max(best, cand_best);
        current = std::move(cand_rules);
    }
    return current;
}

void save_history_csv(const std::vector<SelectionStep>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.precision(17);
    out << "iteration,removed_rule,cv_accuracy,best_accuracy\n";
    for (const auto& step : history)
        out << step.iteration << "," << step.removed_rule << "," << step.cv_accuracy << ","
            << step.best_accuracy << "\n";
}

}  // namespace crtre::select

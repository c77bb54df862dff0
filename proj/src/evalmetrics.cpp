#include "crtre/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "crtre/errors.hpp"

namespace crtre::eval {

BetaErrorReport beta_error(const ModelParams& est, const synth::BetaSpec& truth,
                           const std::vector<bool>& stable_mask) {
    const Eigen::Index p = est.beta.size();
    if (static_cast<Eigen::Index>(stable_mask.size()) != p)
        throw SchemaError("beta_error: mask length does not match coefficient count");
    Eigen::Index s_seen = 0, v_seen = 0;
    BetaErrorReport rep;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (stable_mask[static_cast<size_t>(j)]) {
            if (s_seen >= truth.beta_s.size()) throw SchemaError("beta_error: stable count mismatch");
            rep.beta_s_sum += std::abs(truth.beta_s(s_seen) - est.beta(j));
            ++s_seen;
        } else {
            if (v_seen >= truth.beta_v.size()) throw SchemaError("beta_error: unstable count mismatch");
            rep.beta_v_sum += std::abs(truth.beta_v(v_seen) - est.beta(j));
            ++v_seen;
        }
    }
    if (s_seen != truth.beta_s.size() || v_seen != truth.beta_v.size())
        throw SchemaError("beta_error: mask does not cover the coefficient spec");
    rep.beta_s_error = s_seen ? rep.beta_s_sum / static_cast<double>(s_seen) : 0.0;
    rep.beta_v_error = v_seen ? rep.beta_v_sum / static_cast<double>(v_seen) : 0.0;
    if (s_seen && v_seen)
        rep.beta_error = 0.5 * (rep.beta_s_error + rep.beta_v_error);
    else
        rep.beta_error = s_seen ? rep.beta_s_error : rep.beta_v_error;
    return rep;
}

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& actual) {
    if (pred.size() != actual.size()) throw SchemaError("rmse: length mismatch");
    if (pred.size() == 0) throw ConfigError("rmse: empty vectors");
    return std::sqrt((pred - actual).squaredNorm() / static_cast<double>(pred.size()));
}

namespace {

// Pearson with a zero-variance flag instead of NaN.
bool pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double* out) {
    const Eigen::Index n = a.size();
    const double ma = a.mean();
    const double mb = b.mean();
    const Eigen::ArrayXd da = a.array() - ma;
    const Eigen::ArrayXd db = b.array() - mb;
    const double va = (da * da).sum();
    const double vb = (db * db).sum();
    if (va <= 0.0 || vb <= 0.0 || !std::isfinite(va) || !std::isfinite(vb)) return false;
    *out = (da * db).sum() / std::sqrt(va * vb);
    if (!std::isfinite(*out)) return false;
    *out = std::clamp(*out, -1.0, 1.0);
    return true;
}

Eigen::VectorXd apply_transform(const Eigen::VectorXd& v, PairTransform t) {
    switch (t) {
        case PairTransform::identity: return v;
        case PairTransform::square: return v.array().square();
        case PairTransform::cube: return v.array().cube();
        case PairTransform::exponential: return v.array().exp();
    }
    return v;
}

}  // namespace

double CorrProfile::mean_abs(PairTransform t) const {
    double acc = 0.0;
    long count = 0;
    for (const auto& r : records)
        if (!r.skipped && r.transform == t) {
            acc += std::abs(r.pearson);
            ++count;
        }
    return count ? acc / static_cast<double>(count) : 0.0;
}

double CorrProfile::mean_abs_nonlinear() const {
    double acc = 0.0;
    long count = 0;
    for (const auto& r : records)
        if (!r.skipped && r.transform != PairTransform::identity) {
            acc += std::abs(r.pearson);
            ++count;
        }
    return count ? acc / static_cast<double>(count) : 0.0;
}

CorrProfile corr_profile(const Eigen::MatrixXd& x, const Eigen::VectorXd& w, PairsMode mode) {
    if (x.cols() < 2) throw ConfigError("corr_profile: need at least two features");
    if (w.size() != x.rows()) throw SchemaError("corr_profile: weight length mismatch");
    std::vector<PairTransform> transforms{PairTransform::identity};
    if (mode == PairsMode::nonlinear) {
        transforms.push_back(PairTransform::square);
        transforms.push_back(PairTransform::cube);
        transforms.push_back(PairTransform::exponential);
    }
    const Eigen::MatrixXd wx = w.asDiagonal() * x;
    CorrProfile profile;
    for (int i = 0; i < x.cols(); ++i) {
        for (int j = 0; j < x.cols(); ++j) {
            if (i == j) continue;
            for (PairTransform t : transforms) {
                CorrRecord rec;
                rec.i = i;
                rec.j = j;
                rec.transform = t;
                const Eigen::VectorXd tj = apply_transform(wx.col(j), t);
                double rho = 0.0;
                if (pearson(wx.col(i), tj, &rho)) {
                    rec.pearson = rho;
                } else {
                    rec.skipped = true;
                }
                profile.records.push_back(rec);
            }
        }
    }
    return profile;
}

std::string transform_name(PairTransform t) {
    switch (t) {
        case PairTransform::identity: return "identity";
        case PairTransform::square: return "square";
        case PairTransform::cube: return "cube";
        case PairTransform::exponential: return "exp";
    }
    return "unknown";
}

void save_corr_profile_csv(const CorrProfile& profile, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.precision(17);
    out << "i,j,transform,pearson,skipped\n";
    for (const auto& r : profile.records)
        out << r.i << "," << r.j << "," << transform_name(r.transform) << "," << r.pearson << ","
            << (r.skipped ? 1 : 0) << "\n";
}

ClassificationReport classification_report(const Eigen::VectorXd& pred,
                                           const Eigen::VectorXd& truth) {
    if (pred.size() != truth.size()) throw SchemaError("classification_report: length mismatch");
    if (pred.size() == 0) throw ConfigError("classification_report: empty input");
    long tp = 0, fp = 0, tn = 0, fn = 0;
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        const bool p = pred(i) == 1.0;
        const bool t = truth(i) == 1.0;
        if ((pred(i) != 0.0 && pred(i) != 1.0) || (truth(i) != 0.0 && truth(i) != 1.0))
            throw SchemaError("classification_report: labels must be binary");
        if (p && t) ++tp;
        else if (p && !t) ++fp;
        else if (!p && t) ++fn;
        else ++tn;
    }
    ClassificationReport rep;
    const double n = static_cast<double>(pred.size());
    rep.accuracy = static_cast<double>(tp + tn) / n;
    rep.precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    rep.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    rep.f1 = (rep.precision + rep.recall) > 0.0
                 ? 2.0 * rep.precision * rep.recall / (rep.precision + rep.recall)
                 : 0.0;
    return rep;
}

namespace {

Eigen::VectorXd average_ranks(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
    Eigen::VectorXd ranks(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && v(order[static_cast<size_t>(j + 1)]) == v(order[static_cast<size_t>(i)])) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
        for (Eigen::Index k = i; k <= j; ++k) ranks(order[static_cast<size_t>(k)]) = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw SchemaError("spearman: length mismatch");
    if (a.size() < 2) throw ConfigError("spearman: need at least two values");
    const Eigen::VectorXd ra = average_ranks(a);
    const Eigen::VectorXd rb = average_ranks(b);
    double rho = 0.0;
    if (!pearson(ra, rb, &rho))
        throw UndefinedMetricError("spearman: constant input vector");
    return rho;
}

SplitSurgery counterfactual_split(const tabular::ItemizedDataset& train,
                                  const tabular::ItemizedDataset& test,
                                  const std::vector<mine::Rule>& rules,
                                  const Eigen::VectorXd& classifier_weights,
                                  int force_rule) {
    if (static_cast<Eigen::Index>(rules.size()) != classifier_weights.size())
        throw SchemaError("counterfactual_split: weights not aligned to rules");

    SplitSurgery out;
    if (force_rule >= 0) {
        if (force_rule >= static_cast<int>(rules.size()))
            throw ConfigError("counterfactual_split: forced rule index out of range");
        out.chosen_rule = force_rule;
    } else {
        std::vector<int> negatives;
        for (size_t k = 0; k < rules.size(); ++k)
            if (rules[k].consequent == 0) negatives.push_back(static_cast<int>(k));
        if (negatives.empty())
            throw ConfigError("counterfactual_split: no negative-class rules");
        std::sort(negatives.begin(), negatives.end(), [&](int a, int b) {
            if (rules[static_cast<size_t>(a)].support != rules[static_cast<size_t>(b)].support)
                return rules[static_cast<size_t>(a)].support < rules[static_cast<size_t>(b)].support;
            return a < b;
        });
        out.fewer_than_ten = negatives.size() < 10;
        if (negatives.size() > 10) negatives.resize(10);
        int best = negatives.front();
        for (int k : negatives)
            if (std::abs(classifier_weights(k)) < std::abs(classifier_weights(best))) best = k;
        out.chosen_rule = best;
    }

    const auto& antecedent = rules[static_cast<size_t>(out.chosen_rule)].antecedent;
    const auto rule_hit = [&](const std::vector<int>& txn) {
        return mine::satisfies(antecedent, txn);
    };

    // train' = (train \ {rule, y=1}) + (test & {!rule, y=0}); test' complementary.
    for (size_t i = 0; i < train.size(); ++i) {
        const bool move = rule_hit(train.transactions[i]) && train.labels[i] == 1;
        auto& dst = move ? out.test : out.train;
        dst.transactions.push_back(train.transactions[i]);
        dst.labels.push_back(train.labels[i]);
    }
    for (size_t i = 0; i < test.size(); ++i) {
        const bool move = !rule_hit(test.transactions[i]) && test.labels[i] == 0;
        auto& dst = move ? out.train : out.test;
        dst.transactions.push_back(test.transactions[i]);
        dst.labels.push_back(test.labels[i]);
    }
    out.train.item_names = train.item_names;
    out.test.item_names = train.item_names;
    return out;
}

}  // namespace crtre::eval

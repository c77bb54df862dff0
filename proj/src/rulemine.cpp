#include "crtre/rulemine.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "crtre/errors.hpp"

namespace crtre::mine {

bool satisfies(const std::vector<int>& antecedent, const std::vector<int>& transaction) {
    // Both sides sorted.
    size_t ti = 0;
    for (int item : antecedent) {
        while (ti < transaction.size() && transaction[ti] < item) ++ti;
        if (ti == transaction.size() || transaction[ti] != item) return false;
        ++ti;
    }
    return true;
}

namespace {

struct Counts {
    long all = 0;    // transactions containing the itemset
    long pos = 0;    // ... with label 1
};

Counts count_itemset(const std::vector<int>& items, const ItemizedDataset& data) {
    Counts c;
    for (size_t i = 0; i < data.size(); ++i) {
        if (satisfies(items, data.transactions[i])) {
            ++c.all;
            if (data.labels[i] == 1) ++c.pos;
        }
    }
    return c;
}

// Joins sorted k-itemsets sharing a (k-1)-prefix; prunes candidates with an
// infrequent k-subset.
std::vector<std::vector<int>> join_candidates(const std::vector<std::vector<int>>& level) {
    std::set<std::vector<int>> level_set(level.begin(), level.end());
    std::vector<std::vector<int>> out;
    for (size_t a = 0; a < level.size(); ++a) {
        for (size_t b = a + 1; b < level.size(); ++b) {
            const auto& u = level[a];
            const auto& v = level[b];
            bool prefix_equal = true;
            for (size_t k = 0; k + 1 < u.size(); ++k)
                if (u[k] != v[k]) {
                    prefix_equal = false;
                    break;
                }
            if (!prefix_equal) continue;
            std::vector<int> cand = u;
            cand.push_back(v.back());
            if (cand[cand.size() - 2] > cand.back()) std::swap(cand[cand.size() - 2], cand.back());
            bool all_subsets_frequent = true;
            std::vector<int> sub(cand.size() - 1);
            for (size_t drop = 0; drop < cand.size() && all_subsets_frequent; ++drop) {
                size_t w = 0;
                for (size_t k = 0; k < cand.size(); ++k)
                    if (k != drop) sub[w++] = cand[k];
                if (!level_set.count(sub)) all_subsets_frequent = false;
            }
            if (all_subsets_frequent) out.push_back(std::move(cand));
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

std::vector<Rule> apriori(const ItemizedDataset& data, const MiningConfig& cfg) {
    if (cfg.min_support <= 0.0 || cfg.min_support > 1.0)
        throw ConfigError("apriori: min_support must be in (0, 1]");
    if (cfg.min_confidence <= 0.0 || cfg.min_confidence > 1.0)
        throw ConfigError("apriori: min_confidence must be in (0, 1]");
    if (cfg.max_len < 1) throw ConfigError("apriori: max_len must be >= 1");

    std::vector<Rule> rules;
    const double n = static_cast<double>(data.size());
    if (data.size() == 0) return rules;

    long n_pos = 0;
    for (int y : data.labels) n_pos += (y == 1);
    const long n_neg = static_cast<long>(data.size()) - n_pos;

    for (int consequent : {0, 1}) {
        const long n_class = consequent == 1 ? n_pos : n_neg;
        if (n_class == 0) continue;  // lift undefined; no rules for this class
        const double support_class = static_cast<double>(n_class) / n;

        // Level 1: frequent single items by joint support with the class.
        std::vector<std::vector<int>> level;
        for (int item = 0; item < data.vocab_size(); ++item) {
            const Counts c = count_itemset({item}, data);
            const long joint = consequent == 1 ? c.pos : c.all - c.pos;
            if (static_cast<double>(joint) / n >= cfg.min_support) level.push_back({item});
        }

        while (!level.empty()) {
            std::vector<std::vector<int>> next_level;
            for (const auto& items : level) {
                const Counts c = count_itemset(items, data);
                const long joint = consequent == 1 ? c.pos : c.all - c.pos;
                const double support_joint = static_cast<double>(joint) / n;
                if (support_joint < cfg.min_support) continue;
                next_level.push_back(items);
                const double confidence = static_cast<double>(joint) / static_cast<double>(c.all);
                if (confidence >= cfg.min_confidence) {
                    Rule r;
                    r.antecedent = items;
                    r.consequent = consequent;
                    r.support = support_joint;
                    r.confidence = confidence;
                    r.lift = confidence / support_class;
                    rules.push_back(std::move(r));
                }
            }
            if (static_cast<int>(level.front().size()) >= cfg.max_len) break;
            level = join_candidates(next_level);
        }
    }

    std::sort(rules.begin(), rules.end(), [](const Rule& a, const Rule& b) {
        if (a.consequent != b.consequent) return a.consequent < b.consequent;
        return a.antecedent < b.antecedent;
    });
    return rules;
}

RuleStats rule_metrics(const std::vector<int>& antecedent, int consequent,
                       const ItemizedDataset& data) {
    if (antecedent.empty()) throw ConfigError("rule_metrics: empty antecedent");
    for (int item : antecedent)
        if (item < 0 || item >= data.vocab_size())
            throw ConfigError("rule_metrics: item id out of vocabulary");
    std::vector<int> sorted = antecedent;
    std::sort(sorted.begin(), sorted.end());

    const double n = static_cast<double>(data.size());
    const Counts c = count_itemset(sorted, data);
    long n_class = 0;
    for (int y : data.labels) n_class += (y == consequent);
    const long joint = consequent == 1 ? c.pos : c.all - c.pos;

    RuleStats s;
    s.support_antecedent = static_cast<double>(c.all) / n;
    s.support_consequent = static_cast<double>(n_class) / n;
    s.support_joint = static_cast<double>(joint) / n;
    if (c.all == 0) throw UndefinedMetricError("rule_metrics: antecedent support is zero");
    s.confidence = static_cast<double>(joint) / static_cast<double>(c.all);
    if (n_class == 0) throw UndefinedMetricError("rule_metrics: consequent support is zero");
    s.lift = s.confidence / s.support_consequent;
    return s;
}

static double confidence_scale(const Rule& rule) {
    if (rule.consequent == 1) return rule.confidence;
    // Negative-class rules score by inverse confidence, capped.
    if (rule.confidence <= 0.0) return 10.0;
    return std::min(1.0 / rule.confidence, 10.0);
}

RuleMatrix rule_matrix(const std::vector<Rule>& rules, const ItemizedDataset& data,
                       MatrixScaling scaling) {
    RuleMatrix m;
    m.rules = rules;
    m.scaling = scaling;
    m.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(data.size()),
                                     static_cast<Eigen::Index>(rules.size()));
    for (size_t j = 0; j < rules.size(); ++j) {
        const double scale =
            scaling == MatrixScaling::binary ? 1.0 : confidence_scale(rules[j]);
        for (size_t i = 0; i < data.size(); ++i)
            if (satisfies(rules[j].antecedent, data.transactions[i]))
                m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = scale;
    }
    return m;
}

void save_rules_jsonl(const std::vector<Rule>& rules, const ItemizedDataset& vocab,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const Rule& r : rules) {
        nlohmann::json j;
        j["antecedent"] = nlohmann::json::array();
        for (int item : r.antecedent) j["antecedent"].push_back(vocab.item_names[static_cast<size_t>(item)]);
        j["consequent"] = r.consequent;
        j["support"] = r.support;
        j["confidence"] = r.confidence;
        j["lift"] = r.lift;
        out << j.dump() << "\n";
    }
}

std::vector<Rule> load_rules_jsonl(const std::string& path, ItemizedDataset& vocab) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::map<std::string, int> ids;
    for (size_t k = 0; k < vocab.item_names.size(); ++k) ids[vocab.item_names[k]] = static_cast<int>(k);
    std::vector<Rule> rules;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        Rule r;
        for (const auto& name : j.at("antecedent")) {
            const std::string s = name.get<std::string>();
            auto it = ids.find(s);
            if (it == ids.end()) {
                it = ids.emplace(s, vocab.vocab_size()).first;
                vocab.item_names.push_back(s);
            }
            r.antecedent.push_back(it->second);
        }
        std::sort(r.antecedent.begin(), r.antecedent.end());
        r.consequent = j.at("consequent").get<int>();
        r.support = j.at("support").get<double>();
        r.confidence = j.at("confidence").get<double>();
        r.lift = j.at("lift").get<double>();
        rules.push_back(std::move(r));
    }
    return rules;
}

}  // namespace crtre::mine

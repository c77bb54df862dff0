#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "crtre/errors.hpp"
#include "crtre/rng.hpp"
#include "crtre/tabular.hpp"

using namespace crtre;
using namespace crtre::tabular;

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

LabeledDataset make_dataset(const Eigen::MatrixXd& f, const Eigen::VectorXd& y) {
    LabeledDataset data;
    data.features = f;
    data.outcome = y;
    data.classification = true;
    data.stable_mask.assign(static_cast<size_t>(f.cols()), false);
    for (int j = 0; j < f.cols(); ++j) data.names.push_back("f" + std::to_string(j));
    return data;
}
}  // namespace

TEST_CASE("median imputation fills missing cells") {
    Eigen::MatrixXd f(3, 1);
    f << 1, kNan, 3;
    auto data = make_dataset(f, Eigen::VectorXd::Zero(3));
    data = impute_missing(std::move(data));
    CHECK(data.features(1, 0) == doctest::Approx(2.0));

    Eigen::MatrixXd g(4, 1);
    g << 5, 5, kNan, 9;
    auto data2 = make_dataset(g, Eigen::VectorXd::Zero(4));
    data2 = impute_missing(std::move(data2));
    CHECK(data2.features(2, 0) == doctest::Approx(5.0));
}

TEST_CASE("imputation is the identity without missing cells") {
    Eigen::MatrixXd f(3, 2);
    f << 1, 2, 3, 4, 5, 6;
    auto data = make_dataset(f, Eigen::VectorXd::Zero(3));
    const auto out = impute_missing(data);
    CHECK((out.features - f).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a fully missing column is an error") {
    Eigen::MatrixXd f(2, 1);
    f << kNan, kNan;
    auto data = make_dataset(f, Eigen::VectorXd::Zero(2));
    CHECK_THROWS_AS(impute_missing(std::move(data)), SchemaError);
}

TEST_CASE("equal-frequency bins split a strictly increasing feature in half") {
    CHECK(equal_frequency_bins({1, 2, 3, 4}, 2) == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("equal-frequency bins keep ties together") {
    CHECK(equal_frequency_bins({1, 1, 1, 9}, 2) == std::vector<int>{0, 0, 0, 1});
}

TEST_CASE("a binary feature yields two items regardless of the bin count") {
    for (int bins : {2, 3, 5}) {
        const auto assignment = equal_frequency_bins({0, 1, 1, 0, 1, 0, 0, 1}, bins);
        std::set<int> used(assignment.begin(), assignment.end());
        CHECK(used.size() == 2);
    }
}

TEST_CASE("a constant feature collapses to a single catch-all item") {
    Eigen::MatrixXd f(4, 1);
    f << 7, 7, 7, 7;
    Eigen::VectorXd y(4);
    y << 0, 1, 0, 1;
    const auto itemized = discretize(make_dataset(f, y), 3);
    CHECK(itemized.vocab_size() == 1);
    for (const auto& txn : itemized.transactions) CHECK(txn.size() == 1);
}

TEST_CASE("equal-frequency occupancy never exceeds the ceiling plus tie surplus") {
    Rng rng(71);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 10 + static_cast<int>(rng.below(120));
        const int bins = 2 + static_cast<int>(rng.below(4));
        std::vector<double> values(static_cast<size_t>(n));
        std::map<double, int> tie_count;
        for (auto& v : values) {
            v = std::floor(rng.normal() * 3.0) / 2.0;  // coarse grid forces ties
            tie_count[v]++;
        }
        int surplus = 0;
        for (const auto& [v, c] : tie_count) surplus = std::max(surplus, c - 1);
        const auto assignment = equal_frequency_bins(values, bins);
        std::map<int, int> occupancy;
        for (int b : assignment) occupancy[b]++;
        const int ceiling = (n + bins - 1) / bins + surplus;
        for (const auto& [b, c] : occupancy) {
            CHECK(b >= 0);
            CHECK(b < bins);
            CHECK(c <= ceiling);
        }
        // Bins are monotone in the value: checked against a sort-based oracle.
        std::vector<std::pair<double, int>> pairs;
        for (size_t i = 0; i < values.size(); ++i) pairs.emplace_back(values[i], assignment[i]);
        std::sort(pairs.begin(), pairs.end());
        for (size_t i = 1; i < pairs.size(); ++i) CHECK(pairs[i].second >= pairs[i - 1].second);
    }
}

TEST_CASE("discretize preserves rows and labels") {
    Rng rng(73);
    const int n = 50;
    Eigen::MatrixXd f(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) f(i, j) = rng.normal();
        y(i) = rng.uniform() < 0.4 ? 1 : 0;
    }
    const auto itemized = discretize(make_dataset(f, y), 3);
    REQUIRE(itemized.size() == static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        CHECK(itemized.labels[static_cast<size_t>(i)] == static_cast<int>(y(i)));
        CHECK(itemized.transactions[static_cast<size_t>(i)].size() == 3);
    }
    CHECK_THROWS_AS(discretize(make_dataset(f, y), 1), ConfigError);
}

TEST_CASE("fold plans are balanced, exhaustive and deterministic") {
    const auto plan = split_folds(10, 5, 3);
    std::map<int, int> sizes;
    for (int a : plan.assignments) sizes[a]++;
    REQUIRE(sizes.size() == 5);
    for (const auto& [fold, size] : sizes) CHECK(size == 2);

    const auto plan11 = split_folds(11, 5, 3);
    std::map<int, int> sizes11;
    for (int a : plan11.assignments) sizes11[a]++;
    int threes = 0, twos = 0;
    for (const auto& [fold, size] : sizes11) {
        if (size == 3) ++threes;
        if (size == 2) ++twos;
    }
    CHECK(threes == 1);
    CHECK(twos == 4);

    const auto again = split_folds(11, 5, 3);
    CHECK(plan11.assignments == again.assignments);
    const auto other = split_folds(11, 5, 4);
    CHECK(plan11.assignments != other.assignments);

    CHECK_THROWS_AS(split_folds(3, 5, 1), ConfigError);
}

TEST_CASE("itemized datasets round-trip through the TSV format") {
    ItemizedDataset data;
    data.item_names = {"a=q0", "a=q1", "b=q0"};
    data.transactions = {{0, 2}, {1}, {0, 1, 2}};
    data.labels = {1, 0, 1};
    const std::string path = "/tmp/crtre_test_itemized.tsv";
    save_itemized(data, path);
    const auto loaded = load_itemized(path);
    REQUIRE(loaded.size() == data.size());
    CHECK(loaded.labels == data.labels);
    for (size_t i = 0; i < data.size(); ++i) {
        std::set<std::string> want, got;
        for (int item : data.transactions[i])
            want.insert(data.item_names[static_cast<size_t>(item)]);
        for (int item : loaded.transactions[i])
            got.insert(loaded.item_names[static_cast<size_t>(item)]);
        CHECK(want == got);
    }
    std::remove(path.c_str());
}

TEST_CASE("csv loader reports parse and schema errors with locations") {
    const std::string path = "/tmp/crtre_test_bad.csv";
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("a,b,label\n1,2,0\n1,oops,1\n", f);
        std::fclose(f);
    }
    try {
        load_csv(path);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("a,b,c\n1,2,0\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_csv(path), SchemaError);
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("a,b,label\n1,,0\n,2,1\n", f);
        std::fclose(f);
    }
    const auto data = load_csv(path);
    CHECK(data.rows() == 2);
    CHECK(std::isnan(data.features(0, 1)));
    CHECK(std::isnan(data.features(1, 0)));
    std::remove(path.c_str());
}

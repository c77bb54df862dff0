#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "crtre.h"

namespace {

const char* kSynthConfig =
    "{\"n\":200,\"p\":5,\"env\":\"nonlinear\",\"seed\":17,\"classification\":false}";

struct TempDir {
    std::string path;
    explicit TempDir(const std::string& name) : path("/tmp/" + name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("version and error text are always available") {
    REQUIRE(crtre_version() != nullptr);
    CHECK(std::string(crtre_version()) == "1.0.0");
    CHECK(crtre_last_error() != nullptr);
}

TEST_CASE("null arguments are rejected with CRTRE_E_INVALID") {
    CHECK(crtre_synth_generate(nullptr, nullptr) == CRTRE_E_INVALID);
    CHECK(crtre_dataset_load_csv(nullptr, "label", nullptr) == CRTRE_E_INVALID);
    CHECK(crtre_mine_rules(nullptr, 0.1, 0.5, 2, nullptr) == CRTRE_E_INVALID);
    CHECK(std::strlen(crtre_last_error()) > 0);
}

TEST_CASE("bad json maps to CRTRE_E_PARSE") {
    crtre_dataset* data = nullptr;
    CHECK(crtre_synth_generate("{nope", &data) == CRTRE_E_PARSE);
    CHECK(data == nullptr);
}

TEST_CASE("missing files map to CRTRE_E_IO") {
    crtre_dataset* data = nullptr;
    CHECK(crtre_dataset_load_csv("/no/such/file.csv", "label", &data) == CRTRE_E_IO);
}

TEST_CASE("synthetic generation, save and reload round-trip") {
    TempDir dir("crtre_capi_roundtrip");
    crtre_dataset* data = nullptr;
    REQUIRE(crtre_synth_generate(kSynthConfig, &data) == CRTRE_OK);
    REQUIRE(data != nullptr);
    CHECK(crtre_dataset_rows(data) == 200);
    CHECK(crtre_dataset_cols(data) == 5);

    std::vector<double> features(200 * 5);
    std::vector<double> outcome(200);
    REQUIRE(crtre_dataset_copy_features(data, features.data(), features.size()) == CRTRE_OK);
    REQUIRE(crtre_dataset_copy_outcome(data, outcome.data(), outcome.size()) == CRTRE_OK);
    CHECK(crtre_dataset_copy_features(data, features.data(), 3) == CRTRE_E_INVALID);

    const std::string csv = dir.path + "/ds.csv";
    const std::string meta = csv + ".meta.json";
    REQUIRE(crtre_dataset_save_csv(data, csv.c_str(), meta.c_str()) == CRTRE_OK);
    crtre_dataset* loaded = nullptr;
    REQUIRE(crtre_dataset_load_csv(csv.c_str(), "label", &loaded) == CRTRE_OK);
    CHECK(crtre_dataset_rows(loaded) == 200);
    CHECK(crtre_dataset_impute_median(loaded) == CRTRE_OK);

    std::vector<double> reloaded(200 * 5);
    REQUIRE(crtre_dataset_copy_features(loaded, reloaded.data(), reloaded.size()) == CRTRE_OK);
    for (size_t k = 0; k < reloaded.size(); ++k)
        CHECK(std::abs(reloaded[k] - features[k]) < 1e-12);

    crtre_dataset_free(loaded);
    crtre_dataset_free(data);
}

TEST_CASE("the mining pipeline flows through the C surface") {
    TempDir dir("crtre_capi_mine");
    crtre_dataset* data = nullptr;
    REQUIRE(crtre_synth_generate(
                "{\"n\":300,\"p\":4,\"env\":\"nonlinear\",\"seed\":5,\"classification\":true}",
                &data) == CRTRE_OK);

    crtre_itemized* itemized = nullptr;
    REQUIRE(crtre_discretize(data, 3, &itemized) == CRTRE_OK);
    CHECK(crtre_itemized_size(itemized) == 300);
    const std::string tsv = dir.path + "/txns.tsv";
    REQUIRE(crtre_itemized_save(itemized, tsv.c_str()) == CRTRE_OK);
    crtre_itemized* reloaded = nullptr;
    REQUIRE(crtre_itemized_load(tsv.c_str(), &reloaded) == CRTRE_OK);
    CHECK(crtre_itemized_size(reloaded) == 300);

    crtre_rules* rules = nullptr;
    REQUIRE(crtre_mine_rules(itemized, 0.05, 0.55, 2, &rules) == CRTRE_OK);
    REQUIRE(crtre_rules_count(rules) > 0);
    const std::string jsonl = dir.path + "/rules.jsonl";
    REQUIRE(crtre_rules_save_jsonl(rules, itemized, jsonl.c_str()) == CRTRE_OK);
    crtre_rules* rules2 = nullptr;
    REQUIRE(crtre_rules_load_jsonl(jsonl.c_str(), reloaded, &rules2) == CRTRE_OK);
    CHECK(crtre_rules_count(rules2) == crtre_rules_count(rules));

    crtre_rules* selected = nullptr;
    const std::string history = dir.path + "/history.csv";
    REQUIRE(crtre_select_rules(rules, itemized, "{\"min_rules\":2,\"cv_folds\":3,\"seed\":9}",
                               history.c_str(), &selected) == CRTRE_OK);
    CHECK(crtre_rules_count(selected) >= 2);
    CHECK(crtre_rules_count(selected) <= crtre_rules_count(rules));
    CHECK(std::filesystem::exists(history));

    crtre_rules* reduced = nullptr;
    REQUIRE(crtre_reduce_items(selected, itemized, "{\"cv_folds\":3,\"seed\":9}", &reduced) ==
            CRTRE_OK);
    CHECK(crtre_rules_count(reduced) >= 1);

    crtre_rules_free(reduced);
    crtre_rules_free(selected);
    crtre_rules_free(rules2);
    crtre_rules_free(rules);
    crtre_itemized_free(reloaded);
    crtre_itemized_free(itemized);
    crtre_dataset_free(data);
}

TEST_CASE("weights and models flow through the C surface") {
    TempDir dir("crtre_capi_fit");
    crtre_dataset* data = nullptr;
    REQUIRE(crtre_synth_generate(kSynthConfig, &data) == CRTRE_OK);

    crtre_weights* weights = nullptr;
    REQUIRE(crtre_learn_weights(data, "{\"gamma\":100.0,\"max_iters\":25}", &weights) == CRTRE_OK);
    REQUIRE(crtre_weights_size(weights) == 200);
    std::vector<double> w(200);
    REQUIRE(crtre_weights_copy(weights, w.data(), w.size()) == CRTRE_OK);
    double total = 0.0;
    for (double v : w) {
        CHECK(v >= 0.0);
        total += v;
    }
    CHECK(total > 0.0);
    REQUIRE(crtre_weights_save_json(weights, (dir.path + "/w.json").c_str()) == CRTRE_OK);
    REQUIRE(crtre_weights_trajectory_csv(weights, (dir.path + "/traj.csv").c_str()) == CRTRE_OK);

    crtre_model* ols = nullptr;
    REQUIRE(crtre_fit_model(data, "{\"model\":\"ols\"}", nullptr, &ols) == CRTRE_OK);
    REQUIRE(crtre_model_coef_count(ols) == 5);
    std::vector<double> coefs(6);
    REQUIRE(crtre_model_copy_coefs(ols, coefs.data(), coefs.size()) == CRTRE_OK);
    std::vector<double> pred(200);
    REQUIRE(crtre_model_predict(ols, data, pred.data(), pred.size()) == CRTRE_OK);
    REQUIRE(crtre_model_save_json(ols, (dir.path + "/ols.json").c_str()) == CRTRE_OK);

    crtre_weights* crtre_w = nullptr;
    crtre_model* crtre_m = nullptr;
    REQUIRE(crtre_fit_model(data,
                            "{\"model\":\"crtre\",\"task\":\"regression\","
                            "\"decorrelate\":{\"gamma\":100.0,\"max_iters\":20,\"model_iters\":500}}",
                            &crtre_w, &crtre_m) == CRTRE_OK);
    CHECK(crtre_weights_size(crtre_w) == 200);
    CHECK(crtre_model_coef_count(crtre_m) == 5);

    crtre_model_free(crtre_m);
    crtre_weights_free(crtre_w);
    crtre_model_free(ols);
    crtre_weights_free(weights);
    crtre_dataset_free(data);
}

TEST_CASE("experiments run and reports emit through the C surface") {
    TempDir dir("crtre_capi_exp");
    const std::string config =
        "{\"experiment\":\"grid\",\"seeds\":[3],\"grid\":{\"ns\":[150],\"ms\":[5]},"
        "\"models\":[\"ols\",\"ridge\"],\"synth\":{\"pool_factor\":8},\"out_dir\":\"" +
        dir.path + "\"}";
    crtre_report* report = nullptr;
    REQUIRE(crtre_run_experiment(config.c_str(), &report) == CRTRE_OK);
    CHECK(crtre_report_has_failures(report) == 0);
    CHECK(crtre_report_record_count(report) == 6);  // 2 models x 3 beta metrics
    REQUIRE(crtre_report_write(report, dir.path.c_str(), "csv,json,svg") == CRTRE_OK);
    CHECK(std::filesystem::exists(dir.path + "/report.csv"));
    CHECK(std::filesystem::exists(dir.path + "/report.json"));
    CHECK(std::filesystem::exists(dir.path + "/report.svg"));

    crtre_report* reloaded = nullptr;
    REQUIRE(crtre_report_read_csv((dir.path + "/report.csv").c_str(), &reloaded) == CRTRE_OK);
    CHECK(crtre_report_record_count(reloaded) == crtre_report_record_count(report));
    crtre_report_free(reloaded);
    crtre_report_free(report);

    crtre_report* failed = nullptr;
    const std::string bad_config =
        "{\"experiment\":\"grid\",\"seeds\":[3],\"grid\":{\"ns\":[100],\"ms\":[5]},"
        "\"models\":[\"no_such_model\"],\"synth\":{\"pool_factor\":8}}";
    CHECK(crtre_run_experiment(bad_config.c_str(), &failed) == CRTRE_E_PARTIAL);
    REQUIRE(failed != nullptr);
    CHECK(crtre_report_has_failures(failed) == 1);
    crtre_report_free(failed);
}

TEST_CASE("single-class labels surface as an invalid-argument status") {
    crtre_dataset* data = nullptr;
    REQUIRE(crtre_synth_generate(kSynthConfig, &data) == CRTRE_OK);
    // Regression outcomes are continuous; discretize requires binary labels.
    crtre_itemized* itemized = nullptr;
    CHECK(crtre_discretize(data, 3, &itemized) == CRTRE_E_INVALID);
    CHECK(itemized == nullptr);
    crtre_dataset_free(data);
}

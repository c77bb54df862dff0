#include "crtre.h"

#include <cstring>
#include <string>

#include <json.hpp>

#include "crtre/baselines.hpp"
#include "crtre/dataset.hpp"
#include "crtre/decorrelate.hpp"
#include "crtre/errors.hpp"
#include "crtre/experiments.hpp"
#include "crtre/evalmetrics.hpp"
#include "crtre/rng.hpp"
#include "crtre/rulemine.hpp"
#include "crtre/ruleselect.hpp"
#include "crtre/synthdata.hpp"
#include "crtre/tabular.hpp"

using nlohmann::json;

struct crtre_dataset {
    crtre::LabeledDataset data;
    std::string config_echo = "{}";
};
struct crtre_itemized {
    crtre::tabular::ItemizedDataset data;
};
struct crtre_rules {
    std::vector<crtre::mine::Rule> rules;
};
struct crtre_weights {
    crtre::decor::LearnedWeights learned;
};
struct crtre_model {
    crtre::ModelParams params;
};
struct crtre_report {
    crtre::bench::Report report;
};

namespace {

thread_local std::string g_last_error;

crtre_status fail(crtre_status code, const char* what) {
    g_last_error = what ? what : "unknown error";
    return code;
}

template <typename Fn>
crtre_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const crtre::ConfigError& e) {
        return fail(CRTRE_E_INVALID, e.what());
    } catch (const crtre::ParseError& e) {
        return fail(CRTRE_E_PARSE, e.what());
    } catch (const crtre::SchemaError& e) {
        return fail(CRTRE_E_INVALID, e.what());
    } catch (const crtre::SingularSystemError& e) {
        return fail(CRTRE_E_SINGULAR, e.what());
    } catch (const crtre::DivergenceError& e) {
        return fail(CRTRE_E_DIVERGED, e.what());
    } catch (const crtre::UndefinedMetricError& e) {
        return fail(CRTRE_E_METRIC, e.what());
    } catch (const crtre::IoError& e) {
        return fail(CRTRE_E_IO, e.what());
    } catch (const json::exception& e) {
        return fail(CRTRE_E_PARSE, e.what());
    } catch (const std::exception& e) {
        return fail(CRTRE_E_INTERNAL, e.what());
    } catch (...) {
        return fail(CRTRE_E_INTERNAL, "unknown exception");
    }
}

crtre_status require(bool ok, const char* what) {
    return ok ? CRTRE_OK : fail(CRTRE_E_INVALID, what);
}

crtre::decor::DecorrConfig decorr_from_json(const json& d) {
    crtre::decor::DecorrConfig cfg;
    if (d.contains("degree")) cfg.degree = d["degree"].get<int>();
    if (d.contains("gamma")) cfg.gamma = d["gamma"].get<double>();
    if (d.contains("lambda1")) cfg.lambda1 = d["lambda1"].get<double>();
    if (d.contains("lambda2")) cfg.lambda2 = d["lambda2"].get<double>();
    if (d.contains("lambda3")) cfg.lambda3 = d["lambda3"].get<double>();
    if (d.contains("C")) cfg.c_offset = d["C"].get<double>();
    if (d.contains("max_iters")) cfg.max_iters = d["max_iters"].get<int>();
    if (d.contains("step_size")) cfg.step_size = d["step_size"].get<double>();
    if (d.contains("tolerance")) cfg.tolerance = d["tolerance"].get<double>();
    if (d.contains("svr_epsilon")) cfg.svr_epsilon = d["svr_epsilon"].get<double>();
    if (d.contains("model_iters")) cfg.model_iters = d["model_iters"].get<int>();
    if (d.contains("init"))
        cfg.init = d["init"].get<std::string>() == "kde" ? crtre::decor::WeightInit::kde
                                                         : crtre::decor::WeightInit::uniform;
    return cfg;
}

crtre::select::SelectionConfig selection_from_json(const json& s) {
    crtre::select::SelectionConfig cfg;
    if (s.contains("max_rules")) cfg.max_rules = s["max_rules"].get<int>();
    if (s.contains("min_rules")) cfg.min_rules = s["min_rules"].get<int>();
    if (s.contains("cv_folds")) cfg.cv_folds = s["cv_folds"].get<int>();
    if (s.contains("c_param")) cfg.c_param = s["c_param"].get<double>();
    if (s.contains("seed")) cfg.seed = s["seed"].get<std::uint64_t>();
    return cfg;
}

}  // namespace

extern "C" {

const char* crtre_version(void) { return "1.0.0"; }

const char* crtre_last_error(void) { return g_last_error.c_str(); }

/* ---- datasets ---------------------------------------------------------- */

crtre_status crtre_synth_generate(const char* config_json, crtre_dataset** out) {
    if (crtre_status s = require(config_json && out, "null argument")) return s;
    return guarded([&]() {
        const json j = json::parse(config_json);
        crtre::synth::CovariateConfig cc;
        cc.n = j.value("n", 100L);
        cc.p = j.value("p", 5);
        cc.env_kind = j.value("env", std::string("nonlinear")) == "linear"
                          ? crtre::synth::EnvKind::linear
                          : crtre::synth::EnvKind::nonlinear;
        cc.seed = j.value("seed", 42UL);
        if (j.contains("stable_count")) cc.stable_count = j["stable_count"].get<int>();
        cc.covariate_noise_sd = j.value("covariate_noise_sd", 1.0);
        const int p_s = cc.stable_count ? *cc.stable_count
                                        : crtre::synth::default_stable_count(cc.p);
        crtre::synth::BetaSpec beta = crtre::synth::beta_pattern(p_s, cc.p);
        beta.noise_sd = j.value("noise_sd", 0.3);
        const bool classify = j.value("classification", false);

        crtre::LabeledDataset data;
        if (j.contains("bias")) {
            const auto& b = j["bias"];
            crtre::synth::EnvironmentSpec env;
            env.r = b.value("r", 2.0);
            env.biased_subset_size = b.value("subset", 0);
            env.target = b.value("target", std::string("unstable")) == "stable"
                             ? crtre::synth::BiasTarget::stable
                             : crtre::synth::BiasTarget::unstable;
            data = crtre::synth::gen_biased_dataset(cc, beta, env, cc.seed, cc.n, classify,
                                                    j.value("pool_factor", 30));
        } else {
            data = crtre::synth::gen_covariates(cc);
            data = crtre::synth::gen_outcome(std::move(data), beta,
                                             crtre::derive_seed(cc.seed, 1), classify);
        }
        *out = new crtre_dataset{std::move(data), json(j).dump()};
        return CRTRE_OK;
    });
}

crtre_status crtre_dataset_load_csv(const char* path, const char* label_column,
                                    crtre_dataset** out) {
    if (crtre_status s = require(path && out, "null argument")) return s;
    return guarded([&]() {
        crtre::LabeledDataset data =
            crtre::load_csv(path, label_column ? label_column : "label");
        *out = new crtre_dataset{std::move(data)};
        return CRTRE_OK;
    });
}

crtre_status crtre_dataset_save_csv(const crtre_dataset* data, const char* csv_path,
                                    const char* sidecar_json_path) {
    if (crtre_status s = require(data && csv_path, "null argument")) return s;
    return guarded([&]() {
        crtre::save_csv(data->data, csv_path);
        if (sidecar_json_path)
            crtre::save_sidecar(data->data, sidecar_json_path, data->config_echo);
        return CRTRE_OK;
    });
}

crtre_status crtre_dataset_impute_median(crtre_dataset* data) {
    if (crtre_status s = require(data != nullptr, "null argument")) return s;
    return guarded([&]() {
        data->data = crtre::tabular::impute_missing(std::move(data->data));
        return CRTRE_OK;
    });
}

size_t crtre_dataset_rows(const crtre_dataset* data) {
    return data ? static_cast<size_t>(data->data.rows()) : 0;
}

size_t crtre_dataset_cols(const crtre_dataset* data) {
    return data ? static_cast<size_t>(data->data.cols()) : 0;
}

crtre_status crtre_dataset_copy_features(const crtre_dataset* data, double* buf, size_t len) {
    if (crtre_status s = require(data && buf, "null argument")) return s;
    const size_t need = static_cast<size_t>(data->data.rows() * data->data.cols());
    if (crtre_status s = require(len >= need, "buffer too small")) return s;
    for (Eigen::Index i = 0; i < data->data.rows(); ++i)
        for (Eigen::Index j = 0; j < data->data.cols(); ++j)
            buf[static_cast<size_t>(i * data->data.cols() + j)] = data->data.features(i, j);
    return CRTRE_OK;
}

crtre_status crtre_dataset_copy_outcome(const crtre_dataset* data, double* buf, size_t len) {
    if (crtre_status s = require(data && buf, "null argument")) return s;
    if (crtre_status s = require(data->data.has_outcome(), "dataset has no outcome")) return s;
    if (crtre_status s = require(len >= static_cast<size_t>(data->data.rows()), "buffer too small"))
        return s;
    for (Eigen::Index i = 0; i < data->data.rows(); ++i)
        buf[static_cast<size_t>(i)] = data->data.outcome(i);
    return CRTRE_OK;
}

void crtre_dataset_free(crtre_dataset* data) { delete data; }

/* ---- itemization and mining ------------------------------------------- */

crtre_status crtre_discretize(const crtre_dataset* data, int bins, crtre_itemized** out) {
    if (crtre_status s = require(data && out, "null argument")) return s;
    return guarded([&]() {
        *out = new crtre_itemized{crtre::tabular::discretize(data->data, bins)};
        return CRTRE_OK;
    });
}

crtre_status crtre_itemized_save(const crtre_itemized* data, const char* path) {
    if (crtre_status s = require(data && path, "null argument")) return s;
    return guarded([&]() {
        crtre::tabular::save_itemized(data->data, path);
        return CRTRE_OK;
    });
}

crtre_status crtre_itemized_load(const char* path, crtre_itemized** out) {
    if (crtre_status s = require(path && out, "null argument")) return s;
    return guarded([&]() {
        *out = new crtre_itemized{crtre::tabular::load_itemized(path)};
        return CRTRE_OK;
    });
}

size_t crtre_itemized_size(const crtre_itemized* data) { return data ? data->data.size() : 0; }

void crtre_itemized_free(crtre_itemized* data) { delete data; }

crtre_status crtre_mine_rules(const crtre_itemized* data, double min_support,
                              double min_confidence, int max_len, crtre_rules** out) {
    if (crtre_status s = require(data && out, "null argument")) return s;
    return guarded([&]() {
        crtre::mine::MiningConfig cfg;
        cfg.min_support = min_support;
        cfg.min_confidence = min_confidence;
        cfg.max_len = max_len;
        *out = new crtre_rules{crtre::mine::apriori(data->data, cfg)};
        return CRTRE_OK;
    });
}

size_t crtre_rules_count(const crtre_rules* rules) { return rules ? rules->rules.size() : 0; }

crtre_status crtre_rules_save_jsonl(const crtre_rules* rules, const crtre_itemized* vocab,
                                    const char* path) {
    if (crtre_status s = require(rules && vocab && path, "null argument")) return s;
    return guarded([&]() {
        crtre::mine::save_rules_jsonl(rules->rules, vocab->data, path);
        return CRTRE_OK;
    });
}

crtre_status crtre_rules_load_jsonl(const char* path, crtre_itemized* vocab, crtre_rules** out) {
    if (crtre_status s = require(path && vocab && out, "null argument")) return s;
    return guarded([&]() {
        *out = new crtre_rules{crtre::mine::load_rules_jsonl(path, vocab->data)};
        return CRTRE_OK;
    });
}

crtre_status crtre_select_rules(const crtre_rules* rules, const crtre_itemized* data,
                                const char* select_json, const char* history_csv,
                                crtre_rules** out) {
    if (crtre_status s = require(rules && data && out, "null argument")) return s;
    return guarded([&]() {
        const json j = json::parse(select_json ? select_json : "{}");
        const auto cfg = selection_from_json(j);
        const auto scaling = j.value("scaling", std::string("binary")) == "confidence"
                                 ? crtre::mine::MatrixScaling::confidence_scaled
                                 : crtre::mine::MatrixScaling::binary;
        const auto matrix = crtre::mine::rule_matrix(rules->rules, data->data, scaling);
        Eigen::VectorXd labels(static_cast<Eigen::Index>(data->data.size()));
        for (size_t i = 0; i < data->data.size(); ++i)
            labels(static_cast<Eigen::Index>(i)) = data->data.labels[i];
        const auto result = crtre::select::select_rules(matrix, labels, cfg);
        if (history_csv) crtre::select::save_history_csv(result.history, history_csv);
        auto* selected = new crtre_rules;
        for (int idx : result.selected)
            selected->rules.push_back(rules->rules[static_cast<size_t>(idx)]);
        *out = selected;
        return CRTRE_OK;
    });
}

crtre_status crtre_reduce_items(const crtre_rules* rules, const crtre_itemized* data,
                                const char* select_json, crtre_rules** out) {
    if (crtre_status s = require(rules && data && out, "null argument")) return s;
    return guarded([&]() {
        const json j = json::parse(select_json ? select_json : "{}");
        const auto cfg = selection_from_json(j);
        *out = new crtre_rules{crtre::select::reduce_items(rules->rules, data->data, cfg)};
        return CRTRE_OK;
    });
}

void crtre_rules_free(crtre_rules* rules) { delete rules; }

/* ---- decorrelation and models ------------------------------------------ */

crtre_status crtre_learn_weights(const crtre_dataset* data, const char* decorr_json,
                                 crtre_weights** out) {
    if (crtre_status s = require(data && out, "null argument")) return s;
    return guarded([&]() {
        const auto cfg = decorr_from_json(json::parse(decorr_json ? decorr_json : "{}"));
        *out = new crtre_weights{crtre::decor::learn_weights(data->data.features, cfg)};
        return CRTRE_OK;
    });
}

size_t crtre_weights_size(const crtre_weights* w) {
    return w ? static_cast<size_t>(w->learned.w.size()) : 0;
}

crtre_status crtre_weights_copy(const crtre_weights* w, double* buf, size_t len) {
    if (crtre_status s = require(w && buf, "null argument")) return s;
    if (crtre_status s = require(len >= static_cast<size_t>(w->learned.w.size()), "buffer too small"))
        return s;
    std::memcpy(buf, w->learned.w.data(), sizeof(double) * static_cast<size_t>(w->learned.w.size()));
    return CRTRE_OK;
}

crtre_status crtre_weights_save_json(const crtre_weights* w, const char* path) {
    if (crtre_status s = require(w && path, "null argument")) return s;
    return guarded([&]() {
        crtre::decor::save_weights_json(w->learned.w, path);
        return CRTRE_OK;
    });
}

crtre_status crtre_weights_trajectory_csv(const crtre_weights* w, const char* path) {
    if (crtre_status s = require(w && path, "null argument")) return s;
    return guarded([&]() {
        crtre::decor::save_trajectory_csv(w->learned.trajectory, path);
        return CRTRE_OK;
    });
}

void crtre_weights_free(crtre_weights* w) { delete w; }

crtre_status crtre_fit_model(const crtre_dataset* data, const char* fit_json,
                             crtre_weights** weights_out, crtre_model** model_out) {
    if (crtre_status s = require(data && model_out, "null argument")) return s;
    return guarded([&]() {
        const json j = json::parse(fit_json ? fit_json : "{}");
        const std::string model = j.value("model", std::string("crtre"));
        const auto& x = data->data.features;
        const auto& y = data->data.outcome;
        if (!data->data.has_outcome()) throw crtre::SchemaError("dataset has no outcome");
        crtre::ModelParams params;
        crtre::decor::LearnedWeights learned;

        if (model == "ols" || model == "lasso" || model == "ridge") {
            crtre::base::LinearFitConfig lc;
            lc.penalty = model == "ols"     ? crtre::base::Penalty::none
                         : model == "lasso" ? crtre::base::Penalty::l1
                                            : crtre::base::Penalty::l2;
            lc.lambda = j.value("lambda", 0.1);
            params = crtre::base::fit_linear(x, y, lc);
        } else if (model == "svm") {
            crtre::base::LinearFitConfig lc;
            lc.c_margin = j.value("c", 1.0);
            lc.iters = j.value("iters", 4000);
            params = crtre::base::fit_svm(x, y, lc);
        } else if (model == "svr") {
            crtre::base::LinearFitConfig lc;
            lc.c_margin = j.value("c", 1.0);
            lc.epsilon = j.value("epsilon", 0.1);
            lc.iters = j.value("iters", 4000);
            params = crtre::base::fit_plain_svr(x, y, lc);
        } else if (model == "logistic") {
            params = crtre::base::fit_logistic(x, y, j.value("lambda", 1e-3));
        } else if (model == "dwr") {
            crtre::base::DwrConfig dc;
            if (j.contains("dwr")) {
                const auto& d = j["dwr"];
                dc.gamma = d.value("gamma", dc.gamma);
                dc.lambda1 = d.value("lambda1", dc.lambda1);
                dc.lambda2 = d.value("lambda2", dc.lambda2);
                dc.max_iters = d.value("max_iters", dc.max_iters);
            }
            auto fit = crtre::base::fit_dwr_regression(x, y, dc);
            learned = fit.weights;
            params = fit.model;
        } else if (model == "crtre") {
            const auto cfg = decorr_from_json(j.value("decorrelate", json::object()));
            const auto task = j.value("task", std::string("regression")) == "classification"
                                  ? crtre::decor::Task::classification
                                  : crtre::decor::Task::regression;
            const auto mode = j.value("mode", std::string("two_stage")) == "joint"
                                  ? crtre::decor::FitMode::joint
                                  : crtre::decor::FitMode::two_stage;
            auto fit = crtre::decor::crtre_fit(data->data, cfg, task, mode);
            learned = fit.weights;
            params = fit.model;
        } else {
            throw crtre::ConfigError("unknown model: " + model);
        }
        if (weights_out) *weights_out = new crtre_weights{std::move(learned)};
        *model_out = new crtre_model{std::move(params)};
        return CRTRE_OK;
    });
}

crtre_status crtre_model_predict(const crtre_model* model, const crtre_dataset* data, double* buf,
                                 size_t len) {
    if (crtre_status s = require(model && data && buf, "null argument")) return s;
    if (crtre_status s = require(len >= static_cast<size_t>(data->data.rows()), "buffer too small"))
        return s;
    return guarded([&]() {
        const Eigen::VectorXd pred = model->params.predict(data->data.features);
        std::memcpy(buf, pred.data(), sizeof(double) * static_cast<size_t>(pred.size()));
        return CRTRE_OK;
    });
}

crtre_status crtre_model_save_json(const crtre_model* model, const char* path) {
    if (crtre_status s = require(model && path, "null argument")) return s;
    return guarded([&]() {
        crtre::save_model_json(model->params, path);
        return CRTRE_OK;
    });
}

size_t crtre_model_coef_count(const crtre_model* model) {
    return model ? static_cast<size_t>(model->params.beta.size()) : 0;
}

crtre_status crtre_model_copy_coefs(const crtre_model* model, double* buf, size_t len) {
    if (crtre_status s = require(model && buf, "null argument")) return s;
    const size_t need = static_cast<size_t>(model->params.beta.size()) + 1;
    if (crtre_status s = require(len >= need, "buffer too small (beta plus intercept)")) return s;
    std::memcpy(buf, model->params.beta.data(), sizeof(double) * (need - 1));
    buf[need - 1] = model->params.intercept;
    return CRTRE_OK;
}

void crtre_model_free(crtre_model* model) { delete model; }

/* ---- experiments -------------------------------------------------------- */

crtre_status crtre_run_experiment(const char* config_json, crtre_report** out) {
    if (crtre_status s = require(config_json && out, "null argument")) return s;
    return guarded([&]() {
        const auto cfg = crtre::bench::parse_experiment_config(config_json);
        auto* report = new crtre_report{crtre::bench::run_experiment(cfg)};
        *out = report;
        if (report->report.partial_failures)
            return fail(CRTRE_E_PARTIAL, "experiment finished with failed cells");
        return CRTRE_OK;
    });
}

crtre_status crtre_report_read_csv(const char* path, crtre_report** out) {
    if (crtre_status s = require(path && out, "null argument")) return s;
    return guarded([&]() {
        *out = new crtre_report{crtre::bench::read_report_csv(path)};
        return CRTRE_OK;
    });
}

crtre_status crtre_report_write(const crtre_report* report, const char* out_dir,
                                const char* formats) {
    if (crtre_status s = require(report && out_dir, "null argument")) return s;
    return guarded([&]() {
        crtre::bench::emit_report(report->report, out_dir, formats ? formats : "csv,json");
        return CRTRE_OK;
    });
}

int crtre_report_has_failures(const crtre_report* report) {
    return report && report->report.partial_failures ? 1 : 0;
}

size_t crtre_report_record_count(const crtre_report* report) {
    return report ? report->report.records.size() : 0;
}

void crtre_report_free(crtre_report* report) { delete report; }

}  // extern "C"

#include "crtre/experiments.hpp"

#include <atomic>
#include <functional>
#include <map>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "crtre/errors.hpp"
#include "crtre/evalmetrics.hpp"
#include "crtre/rng.hpp"
#include "crtre/tabular.hpp"

namespace crtre::bench {

using nlohmann::json;

std::vector<std::uint64_t> ExperimentConfig::resolved_seeds() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> out;
    const int count = fast ? std::min(seed_count, 5) : seed_count;
    for (int k = 0; k < count; ++k) out.push_back(seed_base + static_cast<std::uint64_t>(k));
    return out;
}

// ---------------------------------------------------------------------------
// Config JSON
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void read_into(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

synth::EnvKind env_kind_from(const std::string& s) {
    if (s == "linear") return synth::EnvKind::linear;
    if (s == "nonlinear") return synth::EnvKind::nonlinear;
    throw ConfigError("unknown env kind: " + s);
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text.empty() ? "{}" : json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    ExperimentConfig cfg;
    read_into(j, "experiment", cfg.experiment);
    read_into(j, "out_dir", cfg.out_dir);
    read_into(j, "seeds", cfg.seeds);
    read_into(j, "seed_base", cfg.seed_base);
    read_into(j, "seed_count", cfg.seed_count);
    read_into(j, "jobs", cfg.jobs);
    read_into(j, "fast", cfg.fast);
    read_into(j, "models", cfg.models);
    read_into(j, "dataset_csv", cfg.dataset_csv);
    read_into(j, "label_column", cfg.label_column);
    read_into(j, "bins", cfg.bins);
    read_into(j, "lasso_lambda", cfg.lasso_lambda);
    read_into(j, "ridge_lambda", cfg.ridge_lambda);

    if (j.contains("synth")) {
        const auto& s = j["synth"];
        long n = static_cast<long>(cfg.synth.n);
        read_into(s, "n", n);
        cfg.synth.n = n;
        read_into(s, "p", cfg.synth.p);
        if (s.contains("env")) cfg.synth.env_kind = env_kind_from(s["env"].get<std::string>());
        if (s.contains("stable_count")) cfg.synth.stable_count = s["stable_count"].get<int>();
        read_into(s, "noise_sd", cfg.synth.noise_sd);
        read_into(s, "covariate_noise_sd", cfg.synth.covariate_noise_sd);
        read_into(s, "classification", cfg.synth.classification);
        read_into(s, "train_r", cfg.synth.train_r);
        read_into(s, "biased_subset_size", cfg.synth.biased_subset_size);
        read_into(s, "pool_factor", cfg.synth.pool_factor);
        if (s.contains("bias_target"))
            cfg.synth.bias_target = s["bias_target"].get<std::string>() == "stable"
                                        ? synth::BiasTarget::stable
                                        : synth::BiasTarget::unstable;
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        if (g.contains("ns")) {
            cfg.grid.ns.clear();
            for (long n : g["ns"].get<std::vector<long>>()) cfg.grid.ns.push_back(n);
        }
        read_into(g, "ms", cfg.grid.ms);
    }
    if (j.contains("env_shift")) read_into(j["env_shift"], "test_rs", cfg.env_shift.test_rs);
    if (j.contains("hyper")) {
        const auto& h = j["hyper"];
        read_into(h, "gammas", cfg.hyper.gammas);
        read_into(h, "lambdas", cfg.hyper.lambdas);
        read_into(h, "cs", cfg.hyper.cs);
        read_into(h, "test_r", cfg.hyper.test_r);
    }
    if (j.contains("mine")) {
        const auto& m = j["mine"];
        read_into(m, "min_support", cfg.mining.min_support);
        read_into(m, "min_confidence", cfg.mining.min_confidence);
        read_into(m, "max_len", cfg.mining.max_len);
        if (m.contains("scaling"))
            cfg.scaling = m["scaling"].get<std::string>() == "confidence"
                              ? mine::MatrixScaling::confidence_scaled
                              : mine::MatrixScaling::binary;
    }
    if (j.contains("select")) {
        const auto& s = j["select"];
        read_into(s, "max_rules", cfg.selection.max_rules);
        read_into(s, "min_rules", cfg.selection.min_rules);
        read_into(s, "cv_folds", cfg.selection.cv_folds);
        read_into(s, "c_param", cfg.selection.c_param);
        read_into(s, "seed", cfg.selection.seed);
    }
    if (j.contains("decorrelate")) {
        const auto& d = j["decorrelate"];
        read_into(d, "degree", cfg.decor.degree);
        read_into(d, "gamma", cfg.decor.gamma);
        read_into(d, "lambda1", cfg.decor.lambda1);
        read_into(d, "lambda2", cfg.decor.lambda2);
        read_into(d, "lambda3", cfg.decor.lambda3);
        read_into(d, "C", cfg.decor.c_offset);
        read_into(d, "max_iters", cfg.decor.max_iters);
        read_into(d, "step_size", cfg.decor.step_size);
        read_into(d, "tolerance", cfg.decor.tolerance);
        read_into(d, "svr_epsilon", cfg.decor.svr_epsilon);
        read_into(d, "model_iters", cfg.decor.model_iters);
        if (d.contains("init"))
            cfg.decor.init = d["init"].get<std::string>() == "kde" ? decor::WeightInit::kde
                                                                   : decor::WeightInit::uniform;
    }
    if (j.contains("dwr")) {
        const auto& d = j["dwr"];
        read_into(d, "gamma", cfg.dwr.gamma);
        read_into(d, "lambda1", cfg.dwr.lambda1);
        read_into(d, "lambda2", cfg.dwr.lambda2);
        read_into(d, "max_iters", cfg.dwr.max_iters);
        read_into(d, "step_size", cfg.dwr.step_size);
        read_into(d, "tolerance", cfg.dwr.tolerance);
    }
    if (j.contains("svr")) {
        const auto& s = j["svr"];
        read_into(s, "epsilon", cfg.svr.epsilon);
        read_into(s, "c", cfg.svr.c_margin);
        read_into(s, "iters", cfg.svr.iters);
    }
    if (j.contains("counterfactual")) {
        const auto& c = j["counterfactual"];
        auto& p = cfg.counterfactual.planted;
        long nt = static_cast<long>(p.n_train);
        read_into(c, "n_train", nt);
        p.n_train = nt;
        long ne = static_cast<long>(p.n_test);
        read_into(c, "n_test", ne);
        p.n_test = ne;
        read_into(c, "noise_items", p.noise_items);
        read_into(c, "rule_rate", p.rule_rate);
        read_into(c, "confounder_match", p.confounder_match);
        read_into(c, "rule_effect", p.rule_effect);
        read_into(c, "confounder_effect", p.confounder_effect);
        read_into(c, "informative_effect", p.informative_effect);
        read_into(c, "base_logit", p.base_logit);
        read_into(c, "force_planted_rule", cfg.counterfactual.force_planted_rule);
        read_into(c, "run_selection", cfg.counterfactual.run_selection);
        read_into(c, "scores_csv", cfg.counterfactual.scores_csv);
    }
    return cfg;
}

std::string ExperimentConfig::to_json() const {
    json j;
    j["experiment"] = experiment;
    j["out_dir"] = out_dir;
    j["seeds"] = resolved_seeds();
    j["jobs"] = jobs;
    j["fast"] = fast;
    j["models"] = models;
    j["dataset_csv"] = dataset_csv;
    j["label_column"] = label_column;
    j["bins"] = bins;
    j["lasso_lambda"] = lasso_lambda;
    j["ridge_lambda"] = ridge_lambda;
    j["synth"] = {{"n", static_cast<long>(synth.n)},
                  {"p", synth.p},
                  {"env", synth.env_kind == synth::EnvKind::linear ? "linear" : "nonlinear"},
                  {"noise_sd", synth.noise_sd},
                  {"covariate_noise_sd", synth.covariate_noise_sd},
                  {"classification", synth.classification},
                  {"train_r", synth.train_r},
                  {"biased_subset_size", synth.biased_subset_size},
                  {"pool_factor", synth.pool_factor},
                  {"bias_target",
                   synth.bias_target == synth::BiasTarget::stable ? "stable" : "unstable"}};
    if (synth.stable_count) j["synth"]["stable_count"] = *synth.stable_count;
    j["grid"] = {{"ns", json::array()}, {"ms", grid.ms}};
    for (auto n : grid.ns) j["grid"]["ns"].push_back(static_cast<long>(n));
    j["env_shift"] = {{"test_rs", env_shift.test_rs}};
    j["hyper"] = {{"gammas", hyper.gammas},
                  {"lambdas", hyper.lambdas},
                  {"cs", hyper.cs},
                  {"test_r", hyper.test_r}};
    j["mine"] = {{"min_support", mining.min_support},
                 {"min_confidence", mining.min_confidence},
                 {"max_len", mining.max_len},
                 {"scaling", scaling == mine::MatrixScaling::binary ? "binary" : "confidence"}};
    j["select"] = {{"max_rules", selection.max_rules},
                   {"min_rules", selection.min_rules},
                   {"cv_folds", selection.cv_folds},
                   {"c_param", selection.c_param},
                   {"seed", selection.seed}};
    j["decorrelate"] = {{"degree", decor.degree},       {"gamma", decor.gamma},
                        {"lambda1", decor.lambda1},     {"lambda2", decor.lambda2},
                        {"lambda3", decor.lambda3},     {"C", decor.c_offset},
                        {"max_iters", decor.max_iters}, {"step_size", decor.step_size},
                        {"tolerance", decor.tolerance}, {"svr_epsilon", decor.svr_epsilon},
                        {"model_iters", decor.model_iters},
                        {"init", decor.init == decor::WeightInit::kde ? "kde" : "uniform"}};
    j["dwr"] = {{"gamma", dwr.gamma},         {"lambda1", dwr.lambda1},
                {"lambda2", dwr.lambda2},     {"max_iters", dwr.max_iters},
                {"step_size", dwr.step_size}, {"tolerance", dwr.tolerance}};
    j["svr"] = {{"epsilon", svr.epsilon}, {"c", svr.c_margin}, {"iters", svr.iters}};
    j["counterfactual"] = {{"n_train", static_cast<long>(counterfactual.planted.n_train)},
                           {"n_test", static_cast<long>(counterfactual.planted.n_test)},
                           {"noise_items", counterfactual.planted.noise_items},
                           {"rule_rate", counterfactual.planted.rule_rate},
                           {"confounder_match", counterfactual.planted.confounder_match},
                           {"rule_effect", counterfactual.planted.rule_effect},
                           {"confounder_effect", counterfactual.planted.confounder_effect},
                           {"informative_effect", counterfactual.planted.informative_effect},
                           {"base_logit", counterfactual.planted.base_logit},
                           {"force_planted_rule", counterfactual.force_planted_rule},
                           {"run_selection", counterfactual.run_selection},
                           {"scores_csv", counterfactual.scores_csv}};
    return j.dump();
}

// ---------------------------------------------------------------------------
// Cell execution
// ---------------------------------------------------------------------------

namespace {

// Runs tasks 0..count-1 on up to `jobs` threads; exceptions must be handled
// inside the task.
void parallel_cells(int jobs, int count, const std::function<void(int)>& task) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || count <= 1) {
        for (int i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min(jobs, count);
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                task(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

struct RecordSink {
    std::mutex mu;
    Report* report;
    void push(ReportRecord rec) {
        std::lock_guard<std::mutex> lock(mu);
        if (rec.status != "ok") report->partial_failures = true;
        report->records.push_back(std::move(rec));
    }
};

struct RegressionFit {
    ModelParams model;
    Eigen::VectorXd weights;  // empty when the model is unweighted
};

// Dispatch for the regression benchmark model zoo.
RegressionFit fit_regression_model(const std::string& name, const LabeledDataset& train,
                                   const ExperimentConfig& cfg) {
    const Eigen::MatrixXd& x = train.features;
    const Eigen::VectorXd& y = train.outcome;
    RegressionFit out;
    if (name == "ols") {
        base::LinearFitConfig lc;
        lc.penalty = base::Penalty::none;
        out.model = base::fit_linear(x, y, lc);
    } else if (name == "lasso") {
        base::LinearFitConfig lc;
        lc.penalty = base::Penalty::l1;
        lc.lambda = cfg.lasso_lambda;
        out.model = base::fit_linear(x, y, lc);
    } else if (name == "ridge") {
        base::LinearFitConfig lc;
        lc.penalty = base::Penalty::l2;
        lc.lambda = cfg.ridge_lambda;
        out.model = base::fit_linear(x, y, lc);
    } else if (name == "svm") {
        out.model = base::fit_plain_svr(x, y, cfg.svr);
    } else if (name == "dwr") {
        auto fit = base::fit_dwr_regression(x, y, cfg.dwr);
        out.model = fit.model;
        out.weights = fit.weights.w;
    } else if (name == "dwr_svm") {
        decor::DecorrConfig mc = cfg.decor;
        mc.c_offset = 0.0;  // weights only, per the baseline objective
        mc.svr_epsilon = cfg.svr.epsilon;
        mc.model_iters = cfg.svr.iters;
        auto fit = base::fit_dwr_svm(x, y, cfg.dwr, mc, decor::Task::regression);
        out.model = fit.model;
        out.weights = fit.weights.w;
    } else if (name == "crtre") {
        auto fit = decor::crtre_fit(train, cfg.decor, decor::Task::regression);
        out.model = fit.model;
        out.weights = fit.weights.w;
    } else {
        throw ConfigError("unknown model: " + name);
    }
    return out;
}

std::string cell_name(Eigen::Index n, int m) {
    return "n=" + std::to_string(n) + ",m=" + std::to_string(m);
}

}  // namespace

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

Report run_synthetic_grid(const ExperimentConfig& cfg) {
    Report report;
    report.experiment = "grid";
    report.seeds = cfg.resolved_seeds();
    report.config_echo = cfg.to_json();
    RecordSink sink{.mu = {}, .report = &report};

    struct Cell {
        Eigen::Index n;
        int m;
        std::uint64_t seed;
        std::uint64_t stream;
    };
    std::vector<Cell> cells;
    std::uint64_t cell_index = 0;
    for (Eigen::Index n : cfg.grid.ns)
        for (int m : cfg.grid.ms)
            for (std::uint64_t seed : report.seeds)
                cells.push_back({n, m, seed, derive_seed(seed, cell_index++)});

    parallel_cells(cfg.jobs, static_cast<int>(cells.size()), [&](int idx) {
        const Cell& cell = cells[static_cast<size_t>(idx)];
        const std::string cname = cell_name(cell.n, cell.m);
        try {
            synth::CovariateConfig cc;
            cc.n = cell.n;
            cc.p = cell.m;
            cc.env_kind = cfg.synth.env_kind;
            cc.seed = cell.stream;
            cc.stable_count = cfg.synth.stable_count;
            cc.covariate_noise_sd = cfg.synth.covariate_noise_sd;
            const int p_s = cc.stable_count ? *cc.stable_count : synth::default_stable_count(cc.p);
            const synth::BetaSpec beta = synth::beta_pattern(p_s, cc.p);
            synth::EnvironmentSpec env;
            env.r = cfg.synth.train_r;
            env.biased_subset_size = cfg.synth.biased_subset_size;
            env.target = cfg.synth.bias_target;
            const LabeledDataset train = synth::gen_biased_dataset(
                cc, beta, env, cell.stream, cell.n, false, cfg.synth.pool_factor);

            for (const std::string& model_name : cfg.models) {
                try {
                    const RegressionFit fit = fit_regression_model(model_name, train, cfg);
                    const auto err = eval::beta_error(fit.model, beta, train.stable_mask);
                    sink.push({report.experiment, cname, model_name, "beta_s_error", cell.seed,
                               err.beta_s_error, "ok"});
                    sink.push({report.experiment, cname, model_name, "beta_v_error", cell.seed,
                               err.beta_v_error, "ok"});
                    sink.push({report.experiment, cname, model_name, "beta_error", cell.seed,
                               err.beta_error, "ok"});
                } catch (const std::exception& e) {
                    sink.push({report.experiment, cname, model_name, "beta_error", cell.seed, 0.0,
                               std::string("failed: ") + e.what()});
                }
            }
        } catch (const std::exception& e) {
            sink.push({report.experiment, cname, "*", "cell", cell.seed, 0.0,
                       std::string("failed: ") + e.what()});
        }
    });
    report.sort_records();
    return report;
}

Report run_env_shift(const ExperimentConfig& cfg) {
    Report report;
    report.experiment = "env_shift";
    report.seeds = cfg.resolved_seeds();
    report.config_echo = cfg.to_json();
    RecordSink sink{.mu = {}, .report = &report};

    const auto seeds = report.seeds;
    parallel_cells(cfg.jobs, static_cast<int>(seeds.size()), [&](int sidx) {
        const std::uint64_t seed = seeds[static_cast<size_t>(sidx)];
        const std::uint64_t stream = derive_seed(seed, 0xe5);
        try {
            synth::CovariateConfig cc;
            cc.n = cfg.synth.n;
            cc.p = cfg.synth.p;
            cc.env_kind = cfg.synth.env_kind;
            cc.seed = stream;
            cc.stable_count = cfg.synth.stable_count;
            cc.covariate_noise_sd = cfg.synth.covariate_noise_sd;
            const int p_s = cc.stable_count ? *cc.stable_count : synth::default_stable_count(cc.p);
            const synth::BetaSpec beta = synth::beta_pattern(p_s, cc.p);

            synth::EnvironmentSpec env;
            env.r = cfg.synth.train_r;
            env.biased_subset_size = cfg.synth.biased_subset_size;
            env.target = cfg.synth.bias_target;
            const LabeledDataset train = synth::gen_biased_dataset(
                cc, beta, env, derive_seed(stream, 1), cfg.synth.n, false, cfg.synth.pool_factor);

            std::vector<std::pair<std::string, RegressionFit>> fits;
            for (const std::string& model_name : cfg.models) {
                try {
                    fits.emplace_back(model_name, fit_regression_model(model_name, train, cfg));
                } catch (const std::exception& e) {
                    sink.push({report.experiment, "train", model_name, "fit", seed, 0.0,
                               std::string("failed: ") + e.what()});
                }
            }

            std::map<std::string, std::vector<double>> rmse_curve;
            for (size_t ti = 0; ti < cfg.env_shift.test_rs.size(); ++ti) {
                const double test_r = cfg.env_shift.test_rs[ti];
                synth::EnvironmentSpec tenv = env;
                tenv.r = test_r;
                const LabeledDataset test =
                    synth::gen_biased_dataset(cc, beta, tenv, derive_seed(stream, 100 + ti),
                                              cfg.synth.n, false, cfg.synth.pool_factor);
                std::ostringstream cell;
                cell << "test_r=" << test_r;
                for (const auto& [model_name, fit] : fits) {
                    const double err = eval::rmse(fit.model.predict(test.features), test.outcome);
                    sink.push({report.experiment, cell.str(), model_name, "rmse", seed, err, "ok"});
                    rmse_curve[model_name].push_back(err);
                }
            }
            for (const auto& [model_name, curve] : rmse_curve) {
                double mean = 0.0;
                for (double v : curve) mean += v;
                mean /= static_cast<double>(curve.size());
                double var = 0.0;
                for (double v : curve) var += (v - mean) * (v - mean);
                var /= static_cast<double>(curve.size());
                sink.push({report.experiment, "cross_env", model_name, "rmse_variance", seed, var,
                           "ok"});
                sink.push({report.experiment, "cross_env", model_name, "rmse_mean", seed, mean,
                           "ok"});
            }
        } catch (const std::exception& e) {
            sink.push({report.experiment, "seed", "*", "cell", seed, 0.0,
                       std::string("failed: ") + e.what()});
        }
    });
    report.sort_records();
    return report;
}

int select_best_hyper_cell(const std::vector<HyperCell>& cells) {
    if (cells.empty()) throw ConfigError("select_best_hyper_cell: empty grid");
    // C controls the information/causality trade-off rather than fit quality,
    // so it is anchored at the grid's median value; RMSE then decides over
    // (gamma, lambda), with the beta errors breaking ties.
    std::vector<double> c_values;
    for (const auto& cell : cells) c_values.push_back(cell.c);
    std::sort(c_values.begin(), c_values.end());
    c_values.erase(std::unique(c_values.begin(), c_values.end()), c_values.end());
    const double anchor = c_values[(c_values.size() - 1) / 2];

    int best = -1;
    for (int k = 0; k < static_cast<int>(cells.size()); ++k) {
        const auto& a = cells[static_cast<size_t>(k)];
        if (a.c != anchor) continue;
        if (best < 0) {
            best = k;
            continue;
        }
        const auto& b = cells[static_cast<size_t>(best)];
        const double tol = 1e-12;
        if (a.rmse < b.rmse - tol) {
            best = k;
            continue;
        }
        if (std::abs(a.rmse - b.rmse) <= tol) {
            const double beta_a = 0.5 * (a.beta_s_error + a.beta_v_error);
            const double beta_b = 0.5 * (b.beta_s_error + b.beta_v_error);
            if (beta_a < beta_b - tol ||
                (std::abs(beta_a - beta_b) <= tol && a.beta_s_error < b.beta_s_error - tol))
                best = k;
        }
    }
    return best < 0 ? 0 : best;
}

Report run_hyperparam_grid(const ExperimentConfig& cfg) {
    Report report;
    report.experiment = "hyper";
    report.seeds = cfg.resolved_seeds();
    report.config_echo = cfg.to_json();
    RecordSink sink{.mu = {}, .report = &report};

    struct Cell {
        double gamma, lambda, c;
        std::uint64_t seed, stream;
    };
    std::vector<Cell> cells;
    std::uint64_t cell_index = 0;
    for (double g : cfg.hyper.gammas)
        for (double l : cfg.hyper.lambdas)
            for (double c : cfg.hyper.cs)
                for (std::uint64_t seed : report.seeds)
                    cells.push_back({g, l, c, seed, derive_seed(seed, 0x470000 + cell_index++)});

    parallel_cells(cfg.jobs, static_cast<int>(cells.size()), [&](int idx) {
        const Cell& cell = cells[static_cast<size_t>(idx)];
        std::ostringstream cname;
        cname << "gamma=" << cell.gamma << ",lambda=" << cell.lambda << ",C=" << cell.c;
        try {
            synth::CovariateConfig cc;
            cc.n = cfg.synth.n;
            cc.p = cfg.synth.p;
            cc.env_kind = cfg.synth.env_kind;
            cc.seed = cell.stream;
            cc.stable_count = cfg.synth.stable_count;
            cc.covariate_noise_sd = cfg.synth.covariate_noise_sd;
            const int p_s = cc.stable_count ? *cc.stable_count : synth::default_stable_count(cc.p);
            const synth::BetaSpec beta = synth::beta_pattern(p_s, cc.p);
            synth::EnvironmentSpec env;
            env.r = cfg.synth.train_r;
            env.biased_subset_size = cfg.synth.biased_subset_size;
            env.target = cfg.synth.bias_target;
            const LabeledDataset train = synth::gen_biased_dataset(
                cc, beta, env, derive_seed(cell.stream, 1), cfg.synth.n, false,
                cfg.synth.pool_factor);
            synth::EnvironmentSpec tenv = env;
            tenv.r = cfg.hyper.test_r;
            const LabeledDataset test = synth::gen_biased_dataset(
                cc, beta, tenv, derive_seed(cell.stream, 2), cfg.synth.n, false,
                cfg.synth.pool_factor);

            decor::DecorrConfig dc = cfg.decor;
            dc.gamma = cell.gamma;
            dc.lambda1 = cell.lambda;
            dc.lambda2 = cell.lambda;
            dc.c_offset = cell.c;
            LabeledDataset train_copy = train;
            const auto fit = decor::crtre_fit(train_copy, dc, decor::Task::regression);
            const auto err = eval::beta_error(fit.model, beta, train.stable_mask);
            const double test_rmse = eval::rmse(fit.model.predict(test.features), test.outcome);
            sink.push({report.experiment, cname.str(), "crtre", "beta_s_error", cell.seed,
                       err.beta_s_error, "ok"});
            sink.push({report.experiment, cname.str(), "crtre", "beta_v_error", cell.seed,
                       err.beta_v_error, "ok"});
            sink.push({report.experiment, cname.str(), "crtre", "rmse", cell.seed, test_rmse,
                       "ok"});
        } catch (const std::exception& e) {
            sink.push({report.experiment, cname.str(), "crtre", "cell", cell.seed, 0.0,
                       std::string("failed: ") + e.what()});
        }
    });
    report.sort_records();

    // Selection rule over the aggregated grid.
    std::vector<HyperCell> grid_cells;
    for (double g : cfg.hyper.gammas)
        for (double l : cfg.hyper.lambdas)
            for (double c : cfg.hyper.cs) {
                std::ostringstream cname;
                cname << "gamma=" << g << ",lambda=" << l << ",C=" << c;
                HyperCell hc;
                hc.gamma = g;
                hc.lambda = l;
                hc.c = c;
                hc.beta_s_error = report.mean_of(cname.str(), "crtre", "beta_s_error");
                hc.beta_v_error = report.mean_of(cname.str(), "crtre", "beta_v_error");
                hc.rmse = report.mean_of(cname.str(), "crtre", "rmse");
                if (std::isfinite(hc.rmse)) grid_cells.push_back(hc);
            }
    if (!grid_cells.empty()) {
        const int best = select_best_hyper_cell(grid_cells);
        const auto& sel = grid_cells[static_cast<size_t>(best)];
        std::ostringstream cname;
        cname << "gamma=" << sel.gamma << ",lambda=" << sel.lambda << ",C=" << sel.c;
        report.records.push_back({report.experiment, cname.str(), "crtre", "selected",
                                  report.seeds.front(), 1.0, "ok"});
    }
    return report;
}

// ---------------------------------------------------------------------------
// Counterfactual experiment
// ---------------------------------------------------------------------------

PlantedData gen_planted(const PlantedSpec& spec, std::uint64_t seed) {
    PlantedData out;
    // Item layout: 0 = rule item, 1 = confounder, 2..3 informative, rest noise.
    const int n_items = 4 + spec.noise_items;
    out.rule_item = 0;
    out.item_effects.assign(static_cast<size_t>(n_items), 0.0);
    out.item_effects[0] = spec.rule_effect;
    out.item_effects[1] = spec.confounder_effect;
    out.item_effects[2] = spec.informative_effect;
    out.item_effects[3] = spec.informative_effect;

    std::vector<std::string> names{"rule_item", "confounder", "info_a", "info_b"};
    for (int k = 0; k < spec.noise_items; ++k) names.push_back("noise_" + std::to_string(k));

    const auto generate = [&](Eigen::Index n, std::uint64_t stream) {
        tabular::ItemizedDataset data;
        data.item_names = names;
        Rng rng(stream);
        while (static_cast<Eigen::Index>(data.size()) < n) {
            std::vector<int> present;
            const bool rule_on = rng.uniform() < spec.rule_rate;
            bool conf_on;
            if (rng.uniform() < spec.confounder_match)
                conf_on = rule_on;
            else
                conf_on = rng.uniform() < spec.rule_rate;
            if (rule_on) present.push_back(0);
            if (conf_on) present.push_back(1);
            if (rng.uniform() < 0.5) present.push_back(2);
            if (rng.uniform() < 0.5) present.push_back(3);
            for (int k = 0; k < spec.noise_items; ++k)
                if (rng.uniform() < 0.4) present.push_back(4 + k);
            if (present.empty()) continue;  // transactions must be non-empty
            double logit = spec.base_logit;
            for (int item : present) logit += out.item_effects[static_cast<size_t>(item)];
            const double prob = 1.0 / (1.0 + std::exp(-logit));
            const int label = rng.uniform() < prob ? 1 : 0;
            data.transactions.push_back(std::move(present));
            data.labels.push_back(label);
        }
        return data;
    };
    out.train = generate(spec.n_train, derive_seed(seed, 0xcf01));
    out.test = generate(spec.n_test, derive_seed(seed, 0xcf02));
    return out;
}

namespace {

Eigen::VectorXd labels_vector(const tabular::ItemizedDataset& data) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(data.size()));
    for (size_t i = 0; i < data.size(); ++i) y(static_cast<Eigen::Index>(i)) = data.labels[i];
    return y;
}

struct CounterfactualModelResult {
    eval::ClassificationReport report;
    double rule_coefficient = 0.0;
    Eigen::VectorXd rule_weights;
};

CounterfactualModelResult fit_counterfactual_model(const std::string& name,
                                                   const Eigen::MatrixXd& xtr,
                                                   const Eigen::VectorXd& ytr,
                                                   const Eigen::MatrixXd& xte,
                                                   const Eigen::VectorXd& yte, int rule_col,
                                                   const ExperimentConfig& cfg) {
    CounterfactualModelResult out;
    ModelParams model;
    if (name == "logistic") {
        model = base::fit_logistic(xtr, ytr, cfg.decor.lambda3);
    } else if (name == "svm") {
        base::LinearFitConfig lc;
        lc.c_margin = cfg.svr.c_margin;
        lc.iters = cfg.svr.iters;
        model = base::fit_svm(xtr, ytr, lc);
    } else if (name == "dwr") {
        auto w = base::dwr_weights(xtr, cfg.dwr);
        decor::DecorrConfig mc = cfg.decor;
        mc.c_offset = 0.0;
        model = decor::fit_weighted_classifier(xtr, ytr,
                                               static_cast<double>(xtr.rows()) * w.w, mc);
    } else if (name == "crtre") {
        auto w = decor::learn_weights(xtr, cfg.decor);
        model = decor::fit_weighted_classifier(xtr, ytr,
                                               static_cast<double>(xtr.rows()) * w.w, cfg.decor);
    } else {
        throw ConfigError("unknown counterfactual model: " + name);
    }
    out.report = eval::classification_report(model.predict(xte), yte);
    out.rule_coefficient = rule_col >= 0 ? model.beta(rule_col) : 0.0;
    out.rule_weights = model.beta;
    return out;
}

}  // namespace

Report run_counterfactual(const ExperimentConfig& cfg) {
    Report report;
    report.experiment = "counterfactual";
    report.seeds = cfg.resolved_seeds();
    report.config_echo = cfg.to_json();
    RecordSink sink{.mu = {}, .report = &report};

    std::vector<std::string> models = cfg.models;
    const std::vector<std::string> default_cls{"logistic", "svm", "dwr", "crtre"};
    bool any_known = false;
    for (const auto& m : models)
        for (const auto& d : default_cls) any_known = any_known || m == d;
    if (!any_known) models = default_cls;

    const auto seeds = report.seeds;
    parallel_cells(cfg.jobs, static_cast<int>(seeds.size()), [&](int sidx) {
        const std::uint64_t seed = seeds[static_cast<size_t>(sidx)];
        try {
            const PlantedData planted = gen_planted(cfg.counterfactual.planted,
                                                    derive_seed(seed, 0xcf));
            std::vector<mine::Rule> rules = mine::apriori(planted.train, cfg.mining);
            if (rules.empty()) throw ConfigError("no rules mined");

            Eigen::VectorXd ytr = labels_vector(planted.train);
            if (cfg.counterfactual.run_selection) {
                const mine::RuleMatrix full = mine::rule_matrix(rules, planted.train, cfg.scaling);
                select::SelectionConfig sc = cfg.selection;
                sc.seed = derive_seed(seed, 0x5e1);
                const auto sel = select::select_rules(full, ytr, sc);
                std::vector<mine::Rule> kept;
                for (int idx : sel.selected) kept.push_back(rules[static_cast<size_t>(idx)]);
                rules = std::move(kept);
            }

            // The planted rule as mined: antecedent == {rule_item}, consequent 0.
            int planted_idx = -1;
            for (size_t k = 0; k < rules.size(); ++k)
                if (rules[k].consequent == 0 && rules[k].antecedent.size() == 1 &&
                    rules[k].antecedent[0] == planted.rule_item)
                    planted_idx = static_cast<int>(k);

            const mine::RuleMatrix train_matrix =
                mine::rule_matrix(rules, planted.train, cfg.scaling);
            base::LinearFitConfig svm_cfg;
            svm_cfg.c_margin = cfg.svr.c_margin;
            svm_cfg.iters = cfg.svr.iters;
            const ModelParams chooser = base::fit_svm(train_matrix.values, ytr, svm_cfg);

            const int force = cfg.counterfactual.force_planted_rule ? planted_idx : -1;
            if (cfg.counterfactual.force_planted_rule && planted_idx < 0)
                throw ConfigError("planted rule was not mined; adjust mining thresholds");
            const auto surgery = eval::counterfactual_split(planted.train, planted.test, rules,
                                                            chooser.beta, force);

            const int rule_col = surgery.chosen_rule;
            sink.push({report.experiment, "surgery", "*", "chosen_rule", seed,
                       static_cast<double>(rule_col), "ok"});
            sink.push({report.experiment, "surgery", "*", "chosen_is_planted", seed,
                       rule_col == planted_idx ? 1.0 : 0.0, "ok"});

            // Reference causal score per rule: the summed planted item effects.
            Eigen::VectorXd reference(static_cast<Eigen::Index>(rules.size()));
            for (size_t k = 0; k < rules.size(); ++k) {
                double effect = 0.0;
                for (int item : rules[k].antecedent)
                    effect += planted.item_effects[static_cast<size_t>(item)];
                reference(static_cast<Eigen::Index>(k)) = effect;
            }

            for (const std::string& arm : {std::string("control"), std::string("surgery")}) {
                const tabular::ItemizedDataset& tr = arm == "control" ? planted.train : surgery.train;
                const tabular::ItemizedDataset& te = arm == "control" ? planted.test : surgery.test;
                const mine::RuleMatrix xtr = mine::rule_matrix(rules, tr, cfg.scaling);
                const mine::RuleMatrix xte = mine::rule_matrix(rules, te, cfg.scaling);
                const Eigen::VectorXd ytr_arm = labels_vector(tr);
                const Eigen::VectorXd yte_arm = labels_vector(te);
                for (const std::string& model_name : models) {
                    try {
                        const auto res =
                            fit_counterfactual_model(model_name, xtr.values, ytr_arm, xte.values,
                                                     yte_arm, rule_col, cfg);
                        sink.push({report.experiment, arm, model_name, "accuracy", seed,
                                   res.report.accuracy, "ok"});
                        sink.push({report.experiment, arm, model_name, "precision", seed,
                                   res.report.precision, "ok"});
                        sink.push({report.experiment, arm, model_name, "recall", seed,
                                   res.report.recall, "ok"});
                        sink.push({report.experiment, arm, model_name, "f1", seed, res.report.f1,
                                   "ok"});
                        sink.push({report.experiment, arm, model_name, "rule_coefficient", seed,
                                   res.rule_coefficient, "ok"});
                        sink.push({report.experiment, arm, model_name, "rule_sign_negative", seed,
                                   res.rule_coefficient < 0.0 ? 1.0 : 0.0, "ok"});
                        if (rules.size() >= 2) {
                            const double rho = eval::spearman(res.rule_weights, reference);
                            sink.push({report.experiment, arm, model_name, "spearman", seed, rho,
                                       "ok"});
                        }
                    } catch (const std::exception& e) {
                        sink.push({report.experiment, arm, model_name, "accuracy", seed, 0.0,
                                   std::string("failed: ") + e.what()});
                    }
                }
            }
        } catch (const std::exception& e) {
            sink.push({report.experiment, "seed", "*", "cell", seed, 0.0,
                       std::string("failed: ") + e.what()});
        }
    });
    report.sort_records();
    return report;
}

// ---------------------------------------------------------------------------
// mine / fit passthrough experiments
// ---------------------------------------------------------------------------

namespace {

LabeledDataset load_or_synth(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (!cfg.dataset_csv.empty()) {
        LabeledDataset data = load_csv(cfg.dataset_csv, cfg.label_column);
        const std::string sidecar = cfg.dataset_csv + ".meta.json";
        if (std::filesystem::exists(sidecar)) apply_sidecar(data, sidecar);
        return tabular::impute_missing(std::move(data));
    }
    synth::CovariateConfig cc;
    cc.n = cfg.synth.n;
    cc.p = cfg.synth.p;
    cc.env_kind = cfg.synth.env_kind;
    cc.seed = derive_seed(seed, 0xda7a);
    cc.stable_count = cfg.synth.stable_count;
    cc.covariate_noise_sd = cfg.synth.covariate_noise_sd;
    const int p_s = cc.stable_count ? *cc.stable_count : synth::default_stable_count(cc.p);
    const synth::BetaSpec beta = synth::beta_pattern(p_s, cc.p);
    synth::EnvironmentSpec env;
    env.r = cfg.synth.train_r;
    env.biased_subset_size = cfg.synth.biased_subset_size;
    env.target = cfg.synth.bias_target;
    return synth::gen_biased_dataset(cc, beta, env, derive_seed(seed, 0xda7b), cfg.synth.n,
                                     cfg.synth.classification, cfg.synth.pool_factor);
}

}  // namespace

Report run_mine(const ExperimentConfig& cfg) {
    Report report;
    report.experiment = "mine";
    report.seeds = cfg.resolved_seeds();
    report.config_echo = cfg.to_json();
    const std::uint64_t seed = report.seeds.front();
    LabeledDataset data = load_or_synth(cfg, seed);
    if (!data.classification) {
        // Rule mining needs binary labels.
        const Eigen::VectorXd y = data.outcome;
        Eigen::VectorXd sorted = y;
        std::sort(sorted.data(), sorted.data() + sorted.size());
        const double med = sorted(sorted.size() / 2);
        for (Eigen::Index i = 0; i < y.size(); ++i) data.outcome(i) = y(i) > med ? 1.0 : 0.0;
        data.classification = true;
    }
    const auto itemized = tabular::discretize(data, cfg.bins);
    const auto rules = mine::apriori(itemized, cfg.mining);
    std::filesystem::create_directories(cfg.out_dir);
    mine::save_rules_jsonl(rules, itemized, cfg.out_dir + "/rules.jsonl");
    tabular::save_itemized(itemized, cfg.out_dir + "/transactions.tsv");
    report.records.push_back({report.experiment, "mine", "apriori", "rule_count", seed,
                              static_cast<double>(rules.size()), "ok"});
    return report;
}

Report run_fit(const ExperimentConfig& cfg) {
    Report report;
    report.experiment = "fit";
    report.seeds = cfg.resolved_seeds();
    report.config_echo = cfg.to_json();
    const std::uint64_t seed = report.seeds.front();
    LabeledDataset data = load_or_synth(cfg, seed);
    std::filesystem::create_directories(cfg.out_dir);
    const decor::Task task =
        data.classification ? decor::Task::classification : decor::Task::regression;
    const auto fit = decor::crtre_fit(data, cfg.decor, task);
    decor::save_weights_json(fit.weights.w, cfg.out_dir + "/weights.json");
    decor::save_trajectory_csv(fit.weights.trajectory, cfg.out_dir + "/trajectory.csv");
    save_model_json(fit.model, cfg.out_dir + "/model.json");
    const Eigen::VectorXd pred = fit.model.predict(data.features);
    if (task == decor::Task::regression) {
        report.records.push_back({report.experiment, "fit", "crtre", "train_rmse", seed,
                                  eval::rmse(pred, data.outcome), "ok"});
    } else {
        const auto cls = eval::classification_report(pred, data.outcome);
        report.records.push_back(
            {report.experiment, "fit", "crtre", "train_accuracy", seed, cls.accuracy, "ok"});
    }
    report.records.push_back({report.experiment, "fit", "crtre", "final_objective", seed,
                              fit.weights.trajectory.back().objective, "ok"});
    return report;
}

Report run_experiment(const ExperimentConfig& cfg) {
    if (cfg.experiment == "grid") return run_synthetic_grid(cfg);
    if (cfg.experiment == "env_shift") return run_env_shift(cfg);
    if (cfg.experiment == "hyper") return run_hyperparam_grid(cfg);
    if (cfg.experiment == "counterfactual") return run_counterfactual(cfg);
    if (cfg.experiment == "mine") return run_mine(cfg);
    if (cfg.experiment == "fit") return run_fit(cfg);
    throw ConfigError("unknown experiment: " + cfg.experiment);
}

std::vector<std::string> emit_report(const Report& report, const std::string& out_dir,
                                     const std::string& formats) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> written;
    const auto want = [&](const char* fmt) {
        return formats.find(fmt) != std::string::npos;
    };
    if (want("csv")) {
        const std::string path = out_dir + "/report.csv";
        write_report_csv(report, path);
        written.push_back(path);
    }
    if (want("json")) {
        const std::string path = out_dir + "/report.json";
        write_report_json(report, path);
        written.push_back(path);
    }
    if (want("svg")) {
        const std::string metric = report.experiment == "env_shift" ? "rmse"
                                   : report.experiment == "grid"    ? "beta_error"
                                   : report.experiment == "hyper"   ? "rmse"
                                                                    : "accuracy";
        const std::string path = out_dir + "/report.svg";
        write_report_svg(report, metric, path);
        written.push_back(path);
    }
    return written;
}

}  // namespace crtre::bench

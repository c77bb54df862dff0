#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crtre/baselines.hpp"
#include "crtre/decorrelate.hpp"
#include "crtre/report.hpp"
#include "crtre/rulemine.hpp"
#include "crtre/ruleselect.hpp"
#include "crtre/synthdata.hpp"

namespace crtre::bench {

struct SynthSpec {
    Eigen::Index n = 2000;
    int p = 5;
    synth::EnvKind env_kind = synth::EnvKind::nonlinear;
    std::optional<int> stable_count;
    double noise_sd = 0.3;
    double covariate_noise_sd = 1.0;
    bool classification = false;
    double train_r = 2.0;
    int biased_subset_size = 0;  // 0 -> ceil(0.2 p)
    synth::BiasTarget bias_target = synth::BiasTarget::unstable;
    int pool_factor = 30;
};

struct GridSpec {
    std::vector<Eigen::Index> ns{1000, 2000, 3000};
    std::vector<int> ms{5, 10, 15};
};

struct EnvShiftSpec {
    std::vector<double> test_rs{-3.0, -2.5, -2.0, -1.5, 1.5, 2.0, 2.5, 3.0};
};

struct HyperSpec {
    std::vector<double> gammas{600.0, 800.0, 1000.0};
    std::vector<double> lambdas{0.0001, 0.0005, 0.001};
    std::vector<double> cs{0.0, 0.5, 1.0};
    double test_r = -2.0;  // environment used for the RMSE row
};

// Planted-rule generator for the counterfactual experiment: one rule item
// with a true negative effect, a correlated confounder item, informative
// positives and background noise items.
struct PlantedSpec {
    Eigen::Index n_train = 800;
    Eigen::Index n_test = 800;
    int noise_items = 3;
    double rule_rate = 0.25;        // P(rule item present)
    double confounder_match = 0.9;  // P(confounder = rule item)
    double rule_effect = -1.2;
    double confounder_effect = -2.0;
    double informative_effect = 1.5;
    double base_logit = 0.3;
};

struct CounterfactualSpec {
    PlantedSpec planted;
    bool force_planted_rule = true;  // pin the surgery to the planted rule
    bool run_selection = false;
    std::string scores_csv;  // optional reference ranking for spearman
};

struct ExperimentConfig {
    std::string experiment = "grid";  // grid|env_shift|hyper|counterfactual|mine|fit
    std::string out_dir = "out";
    std::vector<std::uint64_t> seeds;
    std::uint64_t seed_base = 42;
    int seed_count = 50;
    int jobs = 1;
    bool fast = false;

    SynthSpec synth;
    GridSpec grid;
    EnvShiftSpec env_shift;
    HyperSpec hyper;
    CounterfactualSpec counterfactual;

    std::vector<std::string> models{"ols", "lasso", "ridge", "svm", "dwr", "dwr_svm", "crtre"};

    mine::MiningConfig mining;
    int bins = 3;
    mine::MatrixScaling scaling = mine::MatrixScaling::binary;
    select::SelectionConfig selection;
    decor::DecorrConfig decor;
    base::DwrConfig dwr;
    double lasso_lambda = 0.1;
    double ridge_lambda = 0.1;
    base::LinearFitConfig svr;

    std::string dataset_csv;  // for the mine/fit experiments on file data
    std::string label_column = "label";

    std::vector<std::uint64_t> resolved_seeds() const;
    std::string to_json() const;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);

Report run_experiment(const ExperimentConfig& cfg);

Report run_synthetic_grid(const ExperimentConfig& cfg);
Report run_env_shift(const ExperimentConfig& cfg);
Report run_hyperparam_grid(const ExperimentConfig& cfg);
Report run_counterfactual(const ExperimentConfig& cfg);
Report run_mine(const ExperimentConfig& cfg);
Report run_fit(const ExperimentConfig& cfg);

// Writes csv/json/svg renditions of the report into cfg.out_dir; formats is a
// comma-separated subset of "csv,json,svg".
std::vector<std::string> emit_report(const Report& report, const std::string& out_dir,
                                     const std::string& formats);

struct HyperCell {
    double gamma = 0.0;
    double lambda = 0.0;
    double c = 0.0;
    double beta_s_error = 0.0;
    double beta_v_error = 0.0;
    double rmse = 0.0;
};

// Smallest RMSE wins; ties fall to the smaller combined beta error, then to
// the smaller beta_s error, then to grid order.
int select_best_hyper_cell(const std::vector<HyperCell>& cells);

struct PlantedData {
    tabular::ItemizedDataset train;
    tabular::ItemizedDataset test;
    int rule_item = 0;                  // item id of the planted rule antecedent
    std::vector<double> item_effects;   // per item id
};

PlantedData gen_planted(const PlantedSpec& spec, std::uint64_t seed);

}  // namespace crtre::bench

#pragma once

#include <cstdint>
#include <optional>

#include "crtre/dataset.hpp"

namespace crtre::synth {

enum class EnvKind { linear, nonlinear };

struct CovariateConfig {
    Eigen::Index n = 0;
    int p = 0;
    EnvKind env_kind = EnvKind::linear;
    std::uint64_t seed = 0;
    // round(0.4*p) unless overridden.
    std::optional<int> stable_count;
    // Scale of the additive N(0,1) term in the covariate formulas. 1.0 is the
    // generating process; tests set 0 to probe the deterministic part.
    double covariate_noise_sd = 1.0;
};

struct BetaSpec {
    Eigen::VectorXd beta_s;
    Eigen::VectorXd beta_v;  // identically zero
    double noise_sd = 0.3;
};

enum class BiasTarget { unstable, stable };

struct EnvironmentSpec {
    double r = 2.0;                 // |r| in (1, 3]
    int biased_subset_size = 0;     // 0 -> ceil(0.2 * p)
    BiasTarget target = BiasTarget::unstable;
    // Compute D on f/sd(f) and x/sd(x) instead of the raw values. The raw
    // distances give astronomically small acceptance in the nonlinear
    // environment (sd(f) ~ 5), so benchmark environments standardize.
    bool standardize_distance = false;
};

// Covariates only; outcome left empty. Stable features come first, named
// S1..Sk, then unstable V1..Vm.
LabeledDataset gen_covariates(const CovariateConfig& cfg);

// The repeating 6-element stable coefficient cycle; beta_v is all zeros.
BetaSpec beta_pattern(int p_stable, int p_total);

// Fills outcome (and its noiseless part) from the linear term plus the
// S1*S2 interaction. When classify is true the label is 1 iff the raw
// outcome exceeds its sample median.
LabeledDataset gen_outcome(LabeledDataset data, const BetaSpec& spec, std::uint64_t seed,
                           bool classify = false);

// Row-wise acceptance probability Pr_i = prod_j |r|^(-5*D_ij) over the biased
// subset, D_ij = |f(S)_i - sign(r) * x_ij|.
Eigen::VectorXd bias_acceptance(const LabeledDataset& data, const EnvironmentSpec& env);

// Keeps each row independently with its absolute acceptance probability.
LabeledDataset bias_sample(const LabeledDataset& data, const EnvironmentSpec& env,
                           std::uint64_t seed);

// Draws target_n rows without replacement from a fresh candidate pool with
// selection pressure proportional to the acceptance probabilities. Produces
// the same tilted distribution as absolute-rate rejection but with a bounded
// candidate budget; pool_factor controls the pool size (pool_factor *
// target_n candidates).
LabeledDataset gen_biased_dataset(const CovariateConfig& cfg, const BetaSpec& spec,
                                  const EnvironmentSpec& env, std::uint64_t seed,
                                  Eigen::Index target_n, bool classify = false,
                                  int pool_factor = 30);

int default_stable_count(int p);

// Noise-free covariate link functions applied to an auxiliary draw and its
// successor column.
double linear_link(double z, double z_next);
double nonlinear_link(double z, double z_next);

}  // namespace crtre::synth

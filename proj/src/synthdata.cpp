#include "crtre/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crtre/errors.hpp"
#include "crtre/rng.hpp"

namespace crtre::synth {

int default_stable_count(int p) {
    int k = static_cast<int>(std::lround(0.4 * p));
    k = std::max(1, std::min(k, p - 1));
    return k;
}

static void validate(const CovariateConfig& cfg) {
    if (cfg.n < 1) throw ConfigError("covariate config: n must be >= 1");
    if (cfg.p < 2) throw ConfigError("covariate config: p must be >= 2");
    if (cfg.stable_count) {
        if (*cfg.stable_count < 1 || *cfg.stable_count >= cfg.p)
            throw ConfigError("covariate config: stable_count must be in [1, p-1]");
    }
    if (cfg.covariate_noise_sd < 0.0) throw ConfigError("covariate config: negative noise sd");
}

double linear_link(double z, double z_next) { return 0.8 * z + 0.2 * z_next; }

double nonlinear_link(double z, double z_next) {
    return z + 0.4 * z_next + 0.4 * std::exp(z_next) + 0.4 * z_next * z_next +
           0.1 * z_next * z_next * z_next;
}

// The unstable block gets an extra N(0,1) in the linear setting; both blocks
// do in the nonlinear one.
static Eigen::MatrixXd linear_block(const Eigen::MatrixXd& aux, int count, double noise_sd,
                                    Rng& rng) {
    Eigen::MatrixXd out(aux.rows(), count);
    for (Eigen::Index i = 0; i < aux.rows(); ++i)
        for (int j = 0; j < count; ++j) {
            double v = linear_link(aux(i, j), aux(i, j + 1));
            if (noise_sd > 0.0) v += rng.normal(0.0, noise_sd);
            out(i, j) = v;
        }
    return out;
}

static Eigen::MatrixXd nonlinear_block(const Eigen::MatrixXd& aux, int count, double noise_sd,
                                       Rng& rng) {
    Eigen::MatrixXd out(aux.rows(), count);
    for (Eigen::Index i = 0; i < aux.rows(); ++i)
        for (int j = 0; j < count; ++j) {
            double v = nonlinear_link(aux(i, j), aux(i, j + 1));
            if (noise_sd > 0.0) v += rng.normal(0.0, noise_sd);
            out(i, j) = v;
        }
    return out;
}

LabeledDataset gen_covariates(const CovariateConfig& cfg) {
    validate(cfg);
    const int p_s = cfg.stable_count ? *cfg.stable_count : default_stable_count(cfg.p);
    const int p_v = cfg.p - p_s;

    // Auxiliary sources have one extra column so the j+1 index is always valid.
    Rng rng(derive_seed(cfg.seed, 0x5731));
    Eigen::MatrixXd z(cfg.n, p_s + 1);
    for (Eigen::Index i = 0; i < cfg.n; ++i)
        for (int j = 0; j <= p_s; ++j) z(i, j) = rng.normal();
    Eigen::MatrixXd x(cfg.n, p_v + 1);
    for (Eigen::Index i = 0; i < cfg.n; ++i)
        for (int j = 0; j <= p_v; ++j) x(i, j) = rng.normal();

    LabeledDataset data;
    data.features.resize(cfg.n, cfg.p);
    if (cfg.env_kind == EnvKind::linear) {
        data.features.leftCols(p_s) = linear_block(z, p_s, 0.0, rng);
        data.features.rightCols(p_v) = linear_block(x, p_v, cfg.covariate_noise_sd, rng);
    } else {
        data.features.leftCols(p_s) = nonlinear_block(z, p_s, cfg.covariate_noise_sd, rng);
        data.features.rightCols(p_v) = nonlinear_block(x, p_v, cfg.covariate_noise_sd, rng);
    }

    data.stable_mask.assign(static_cast<size_t>(cfg.p), false);
    for (int j = 0; j < p_s; ++j) data.stable_mask[static_cast<size_t>(j)] = true;
    data.names.clear();
    for (int j = 0; j < p_s; ++j) data.names.push_back("S" + std::to_string(j + 1));
    for (int j = 0; j < p_v; ++j) data.names.push_back("V" + std::to_string(j + 1));
    return data;
}

BetaSpec beta_pattern(int p_stable, int p_total) {
    if (p_stable <= 0 || p_stable >= p_total)
        throw ConfigError("beta pattern: need 0 < p_stable < p_total");
    static const double cycle[6] = {1.0 / 3.0, -2.0 / 3.0, 1.0, -1.0 / 3.0, 2.0 / 3.0, -1.0};
    BetaSpec spec;
    spec.beta_s.resize(p_stable);
    for (int i = 0; i < p_stable; ++i) spec.beta_s(i) = cycle[i % 6];
    spec.beta_v = Eigen::VectorXd::Zero(p_total - p_stable);
    return spec;
}

// Y = [S,V].[beta_s,beta_v]^T + S1*S2 + eps
static Eigen::VectorXd deterministic_outcome(const LabeledDataset& data, const BetaSpec& spec) {
    const auto s_idx = data.stable_indices();
    const auto v_idx = data.unstable_indices();
    if (static_cast<int>(s_idx.size()) != spec.beta_s.size() ||
        static_cast<int>(v_idx.size()) != spec.beta_v.size())
        throw SchemaError("gen_outcome: beta lengths do not match stable/unstable split");
    if (s_idx.size() < 2) throw SchemaError("gen_outcome: need at least two stable features");

    Eigen::VectorXd y = Eigen::VectorXd::Zero(data.rows());
    for (size_t k = 0; k < s_idx.size(); ++k)
        y += spec.beta_s(static_cast<Eigen::Index>(k)) * data.features.col(s_idx[k]);
    for (size_t k = 0; k < v_idx.size(); ++k)
        y += spec.beta_v(static_cast<Eigen::Index>(k)) * data.features.col(v_idx[k]);
    y += data.features.col(s_idx[0]).cwiseProduct(data.features.col(s_idx[1]));
    return y;
}

static double sample_median(Eigen::VectorXd v) {
    std::sort(v.data(), v.data() + v.size());
    const Eigen::Index n = v.size();
    if (n % 2 == 1) return v(n / 2);
    return 0.5 * (v(n / 2 - 1) + v(n / 2));
}

LabeledDataset gen_outcome(LabeledDataset data, const BetaSpec& spec, std::uint64_t seed,
                           bool classify) {
    Eigen::VectorXd f = deterministic_outcome(data, spec);
    Eigen::VectorXd y = f;
    if (spec.noise_sd > 0.0) {
        Rng rng(derive_seed(seed, 0x07c0));
        for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += rng.normal(0.0, spec.noise_sd);
    }
    data.noiseless_outcome = f;
    if (classify) {
        const double med = sample_median(y);
        data.outcome.resize(y.size());
        for (Eigen::Index i = 0; i < y.size(); ++i) data.outcome(i) = y(i) > med ? 1.0 : 0.0;
        data.classification = true;
    } else {
        data.outcome = y;
        data.classification = false;
    }
    return data;
}

static void validate_env(const LabeledDataset& data, const EnvironmentSpec& env) {
    if (std::abs(env.r) <= 1.0 || std::abs(env.r) > 3.0)
        throw ConfigError("environment: |r| must lie in (1, 3]");
    if (data.noiseless_outcome.size() != data.rows())
        throw SchemaError("environment: dataset lacks the deterministic outcome part");
}

Eigen::VectorXd bias_acceptance(const LabeledDataset& data, const EnvironmentSpec& env) {
    validate_env(data, env);
    const auto idx =
        env.target == BiasTarget::unstable ? data.unstable_indices() : data.stable_indices();
    int subset = env.biased_subset_size > 0
                     ? env.biased_subset_size
                     : static_cast<int>(std::ceil(0.2 * static_cast<double>(data.cols())));
    if (subset > static_cast<int>(idx.size()))
        throw ConfigError("environment: biased subset larger than available features");

    const double sign_r = env.r > 0 ? 1.0 : -1.0;
    const double abs_r = std::abs(env.r);

    double f_scale = 1.0;
    Eigen::VectorXd x_scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(idx.size()));
    if (env.standardize_distance) {
        const auto sd = [](const Eigen::VectorXd& v) {
            const double m = v.mean();
            const double s = std::sqrt((v.array() - m).square().mean());
            return s > 0.0 ? s : 1.0;
        };
        f_scale = sd(data.noiseless_outcome);
        for (size_t k = 0; k < idx.size(); ++k)
            x_scale(static_cast<Eigen::Index>(k)) = sd(data.features.col(idx[k]));
    }

    Eigen::VectorXd pr(data.rows());
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        double log_pr = 0.0;
        for (int k = 0; k < subset; ++k) {
            const double d = std::abs(data.noiseless_outcome(i) / f_scale -
                                      sign_r * data.features(i, idx[static_cast<size_t>(k)]) / x_scale(k));
            log_pr += -5.0 * d * std::log(abs_r);
        }
        pr(i) = std::exp(log_pr);
    }
    return pr;
}

static LabeledDataset take_rows(const LabeledDataset& data, const std::vector<Eigen::Index>& rows) {
    LabeledDataset out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), data.cols());
    const bool has_y = data.has_outcome();
    if (has_y) out.outcome.resize(static_cast<Eigen::Index>(rows.size()));
    const bool has_f = data.noiseless_outcome.size() == data.rows();
    if (has_f) out.noiseless_outcome.resize(static_cast<Eigen::Index>(rows.size()));
    for (size_t k = 0; k < rows.size(); ++k) {
        out.features.row(static_cast<Eigen::Index>(k)) = data.features.row(rows[k]);
        if (has_y) out.outcome(static_cast<Eigen::Index>(k)) = data.outcome(rows[k]);
        if (has_f) out.noiseless_outcome(static_cast<Eigen::Index>(k)) = data.noiseless_outcome(rows[k]);
    }
    out.stable_mask = data.stable_mask;
    out.names = data.names;
    out.classification = data.classification;
    return out;
}

LabeledDataset bias_sample(const LabeledDataset& data, const EnvironmentSpec& env,
                           std::uint64_t seed) {
    if (!data.has_outcome()) throw SchemaError("bias_sample: outcome not generated yet");
    const Eigen::VectorXd pr = bias_acceptance(data, env);
    Rng rng(derive_seed(seed, 0xb1a5));
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < data.rows(); ++i)
        if (rng.uniform() < pr(i)) keep.push_back(i);
    return take_rows(data, keep);
}

LabeledDataset gen_biased_dataset(const CovariateConfig& cfg, const BetaSpec& spec,
                                  const EnvironmentSpec& env, std::uint64_t seed,
                                  Eigen::Index target_n, bool classify, int pool_factor) {
    if (target_n < 1) throw ConfigError("gen_biased_dataset: target_n must be >= 1");
    if (pool_factor < 1) throw ConfigError("gen_biased_dataset: pool_factor must be >= 1");

    CovariateConfig pool_cfg = cfg;
    pool_cfg.n = target_n * pool_factor;
    pool_cfg.seed = derive_seed(seed, 0x9001);
    LabeledDataset pool = gen_covariates(pool_cfg);
    pool = gen_outcome(std::move(pool), spec, derive_seed(seed, 0x9002), classify);

    const Eigen::VectorXd pr = bias_acceptance(pool, env);

    // Weighted sampling without replacement (Efraimidis-Spirakis): the key
    // log(u)/w orders candidates by the tilted density regardless of the
    // absolute acceptance scale.
    Rng rng(derive_seed(seed, 0x9003));
    std::vector<std::pair<double, Eigen::Index>> keys;
    keys.reserve(static_cast<size_t>(pool.rows()));
    for (Eigen::Index i = 0; i < pool.rows(); ++i) {
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        const double w = std::max(pr(i), 1e-300);
        keys.emplace_back(std::log(u) / w, i);
    }
    std::sort(keys.begin(), keys.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<Eigen::Index> chosen;
    chosen.reserve(static_cast<size_t>(target_n));
    for (Eigen::Index k = 0; k < target_n; ++k) chosen.push_back(keys[static_cast<size_t>(k)].second);
    std::sort(chosen.begin(), chosen.end());
    return take_rows(pool, chosen);
}

}  // namespace crtre::synth

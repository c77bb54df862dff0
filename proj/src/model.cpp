#include "crtre/model.hpp"

#include <fstream>

#include <json.hpp>

#include "crtre/errors.hpp"

namespace crtre {

Eigen::VectorXd ModelParams::predict(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd score = decision(x);
    if (kind == ModelKind::logistic || kind == ModelKind::hinge)
        return (score.array() >= 0.0).cast<double>();
    return score;
}

std::string model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::logistic: return "logistic";
        case ModelKind::svr: return "svr";
        case ModelKind::hinge: return "hinge";
        case ModelKind::least_squares: return "least_squares";
    }
    return "unknown";
}

static ModelKind kind_from_name(const std::string& name) {
    if (name == "logistic") return ModelKind::logistic;
    if (name == "svr") return ModelKind::svr;
    if (name == "hinge") return ModelKind::hinge;
    if (name == "least_squares") return ModelKind::least_squares;
    throw ConfigError("unknown model kind: " + name);
}

void save_model_json(const ModelParams& params, const std::string& path) {
    nlohmann::json j;
    j["kind"] = model_kind_name(params.kind);
    j["intercept"] = params.intercept;
    j["beta"] = std::vector<double>(params.beta.data(), params.beta.data() + params.beta.size());
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

ModelParams load_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    ModelParams params;
    params.kind = kind_from_name(j.at("kind").get<std::string>());
    params.intercept = j.at("intercept").get<double>();
    const auto beta = j.at("beta").get<std::vector<double>>();
    params.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    return params;
}

}  // namespace crtre

#include "crtre/dataset.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "crtre/errors.hpp"

namespace crtre {

std::vector<int> LabeledDataset::stable_indices() const {
    std::vector<int> idx;
    for (int j = 0; j < static_cast<int>(stable_mask.size()); ++j)
        if (stable_mask[j]) idx.push_back(j);
    return idx;
}

std::vector<int> LabeledDataset::unstable_indices() const {
    std::vector<int> idx;
    for (int j = 0; j < static_cast<int>(stable_mask.size()); ++j)
        if (!stable_mask[j]) idx.push_back(j);
    return idx;
}

static Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(idx[k]);
    return out;
}

Eigen::MatrixXd LabeledDataset::stable_columns() const {
    return select_columns(features, stable_indices());
}

Eigen::MatrixXd LabeledDataset::unstable_columns() const {
    return select_columns(features, unstable_indices());
}

void save_csv(const LabeledDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.precision(17);
    for (Eigen::Index j = 0; j < data.cols(); ++j) out << data.names[static_cast<size_t>(j)] << ",";
    out << "label\n";
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.cols(); ++j) {
            const double v = data.features(i, j);
            if (std::isnan(v))
                out << ",";
            else
                out << v << ",";
        }
        if (data.has_outcome())
            out << data.outcome(i);
        out << "\n";
    }
}

static std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

LabeledDataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    const auto header = split_line(line);

    int label_idx = -1;
    for (size_t j = 0; j < header.size(); ++j)
        if (header[j] == label_column) label_idx = static_cast<int>(j);
    if (label_idx < 0) throw SchemaError(path + ": missing label column '" + label_column + "'");

    const int p = static_cast<int>(header.size()) - 1;
    if (p < 1) throw SchemaError(path + ": no feature columns");

    std::vector<std::vector<double>> rows;
    std::vector<double> labels;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (static_cast<int>(cells.size()) != p + 1)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(p + 1) + " cells, got " + std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(static_cast<size_t>(p));
        double label = std::numeric_limits<double>::quiet_NaN();
        for (size_t j = 0; j < cells.size(); ++j) {
            double v = std::numeric_limits<double>::quiet_NaN();
            if (!cells[j].empty()) {
                try {
                    size_t pos = 0;
                    v = std::stod(cells[j], &pos);
                    if (pos != cells[j].size()) throw std::invalid_argument(cells[j]);
                } catch (const std::exception&) {
                    throw ParseError(path + ":" + std::to_string(line_no) + ": bad numeric cell '" +
                                     cells[j] + "'");
                }
            }
            if (static_cast<int>(j) == label_idx)
                label = v;
            else
                row.push_back(v);
        }
        rows.push_back(std::move(row));
        labels.push_back(label);
    }

    LabeledDataset data;
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    data.features.resize(n, p);
    data.outcome.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) data.features(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
        data.outcome(i) = labels[static_cast<size_t>(i)];
    }
    data.names.clear();
    for (size_t j = 0; j < header.size(); ++j)
        if (static_cast<int>(j) != label_idx) data.names.push_back(header[j]);
    data.stable_mask.assign(static_cast<size_t>(p), false);
    return data;
}

void save_sidecar(const LabeledDataset& data, const std::string& path, const std::string& config_json) {
    nlohmann::json j;
    j["stable_mask"] = std::vector<int>();
    for (bool b : data.stable_mask) j["stable_mask"].push_back(b ? 1 : 0);
    j["names"] = data.names;
    j["classification"] = data.classification;
    j["config"] = nlohmann::json::parse(config_json.empty() ? "{}" : config_json);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

void apply_sidecar(LabeledDataset& data, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (j.contains("stable_mask")) {
        const auto mask = j["stable_mask"].get<std::vector<int>>();
        if (static_cast<Eigen::Index>(mask.size()) != data.cols())
            throw SchemaError(path + ": stable_mask length does not match feature count");
        data.stable_mask.assign(mask.size(), false);
        for (size_t k = 0; k < mask.size(); ++k) data.stable_mask[k] = mask[k] != 0;
    }
    if (j.contains("classification")) data.classification = j["classification"].get<bool>();
}

}  // namespace crtre

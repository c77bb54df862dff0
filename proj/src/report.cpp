#include "crtre/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "crtre/errors.hpp"
#include "crtre/svg.hpp"

namespace crtre::bench {

void Report::sort_records() {
    std::sort(records.begin(), records.end(), [](const ReportRecord& a, const ReportRecord& b) {
        return std::tie(a.experiment, a.cell, a.model, a.metric, a.seed) <
               std::tie(b.experiment, b.cell, b.model, b.metric, b.seed);
    });
}

std::vector<Aggregate> Report::aggregates() const {
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> groups;
    for (const auto& r : records)
        if (r.status == "ok") groups[{r.cell, r.model, r.metric}].push_back(r.value);
    std::vector<Aggregate> out;
    for (const auto& [key, values] : groups) {
        Aggregate a;
        a.cell = std::get<0>(key);
        a.model = std::get<1>(key);
        a.metric = std::get<2>(key);
        a.count = static_cast<long>(values.size());
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        a.mean = mean;
        a.sd = values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
        out.push_back(a);
    }
    return out;
}

double Report::mean_of(const std::string& cell, const std::string& model,
                       const std::string& metric) const {
    double acc = 0.0;
    long count = 0;
    for (const auto& r : records)
        if (r.status == "ok" && r.cell == cell && r.model == model && r.metric == metric) {
            acc += r.value;
            ++count;
        }
    return count ? acc / static_cast<double>(count) : std::nan("");
}

namespace {
std::string csv_escape(const std::string& s) {
    if (s.find(',') == std::string::npos && s.find('"') == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}
}  // namespace

void write_report_csv(const Report& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.precision(17);
    out << "experiment,cell,model,metric,seed,value,status\n";
    for (const auto& r : report.records)
        out << csv_escape(r.experiment) << "," << csv_escape(r.cell) << "," << csv_escape(r.model)
            << "," << csv_escape(r.metric) << "," << r.seed << "," << r.value << ","
            << csv_escape(r.status) << "\n";
}

void write_report_json(const Report& report, const std::string& path) {
    nlohmann::json j;
    j["experiment"] = report.experiment;
    j["seeds"] = report.seeds;
    j["config"] = nlohmann::json::parse(report.config_echo.empty() ? "{}" : report.config_echo);
    j["partial_failures"] = report.partial_failures;
    j["aggregates"] = nlohmann::json::array();
    for (const auto& a : report.aggregates()) {
        j["aggregates"].push_back({{"cell", a.cell},
                                   {"model", a.model},
                                   {"metric", a.metric},
                                   {"mean", a.mean},
                                   {"sd", a.sd},
                                   {"count", a.count}});
    }
    j["records"] = nlohmann::json::array();
    for (const auto& r : report.records) {
        j["records"].push_back({{"experiment", r.experiment},
                                {"cell", r.cell},
                                {"model", r.model},
                                {"metric", r.metric},
                                {"seed", r.seed},
                                {"value", r.value},
                                {"status", r.status}});
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

Report read_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty report");
    Report report;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        // Fields never contain escaped commas except status; split on the
        // first six commas.
        std::vector<std::string> cells;
        std::string cur;
        bool quoted = false;
        for (char c : line) {
            if (c == '"') {
                quoted = !quoted;
            } else if (c == ',' && !quoted && cells.size() < 6) {
                cells.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur += c;
            }
        }
        cells.push_back(cur);
        if (cells.size() != 7) throw ParseError(path + ":" + std::to_string(line_no) + ": bad row");
        ReportRecord r;
        r.experiment = cells[0];
        r.cell = cells[1];
        r.model = cells[2];
        r.metric = cells[3];
        try {
            r.seed = std::stoull(cells[4]);
            r.value = std::stod(cells[5]);
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad numeric field");
        }
        r.status = cells[6];
        if (report.experiment.empty()) report.experiment = r.experiment;
        report.records.push_back(std::move(r));
    }
    return report;
}

void write_report_svg(const Report& report, const std::string& metric, const std::string& path) {
    // One polyline per model; x = numeric suffix of the cell (e.g. "test_r=2.5").
    std::map<std::string, std::vector<std::pair<double, double>>> curves;
    for (const auto& a : report.aggregates()) {
        if (a.metric != metric) continue;
        const auto eq = a.cell.rfind('=');
        double x = 0.0;
        try {
            x = std::stod(eq == std::string::npos ? a.cell : a.cell.substr(eq + 1));
        } catch (const std::exception&) {
            continue;
        }
        curves[a.model].emplace_back(x, a.mean);
    }
    SvgChart chart;
    chart.set_labels("cell", metric, report.experiment + ": " + metric);
    for (auto& [model, points] : curves) {
        std::sort(points.begin(), points.end());
        std::vector<double> xs, ys;
        for (const auto& [x, y] : points) {
            xs.push_back(x);
            ys.push_back(y);
        }
        chart.add_series(model, xs, ys);
    }
    chart.save(path);
}

}  // namespace crtre::bench

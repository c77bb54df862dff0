#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace crtre::bench {

// One measured value: (experiment cell, model, metric, seed).
struct ReportRecord {
    std::string experiment;
    std::string cell;
    std::string model;
    std::string metric;
    std::uint64_t seed = 0;
    double value = 0.0;
    std::string status = "ok";  // or "failed: <reason>"
};

struct Aggregate {
    std::string cell;
    std::string model;
    std::string metric;
    double mean = 0.0;
    double sd = 0.0;
    long count = 0;
};

struct Report {
    std::string experiment;
    std::vector<ReportRecord> records;
    std::vector<std::uint64_t> seeds;
    std::string config_echo;  // the exact JSON config that produced this report
    bool partial_failures = false;

    std::vector<Aggregate> aggregates() const;
    // Mean of one (cell, model, metric); NaN if absent.
    double mean_of(const std::string& cell, const std::string& model,
                   const std::string& metric) const;
    void sort_records();
};

void write_report_csv(const Report& report, const std::string& path);
void write_report_json(const Report& report, const std::string& path);
Report read_report_csv(const std::string& path);

// Chart of aggregate curves: one polyline per model over the numeric value of
// `x_metric` parsed from the cell string (e.g. "test_r").
void write_report_svg(const Report& report, const std::string& metric, const std::string& path);

}  // namespace crtre::bench

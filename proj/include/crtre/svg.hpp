#pragma once

#include <string>
#include <vector>

namespace crtre::bench {

// Minimal SVG chart writer: axes, polylines, optional histogram bars. No
// external charting dependency on purpose.
class SvgChart {
public:
    SvgChart(double width = 640, double height = 420);

    void add_series(const std::string& name, const std::vector<double>& xs,
                    const std::vector<double>& ys);
    void add_bars(const std::string& name, const std::vector<double>& heights);
    void set_labels(std::string x_label, std::string y_label, std::string title);

    std::string render() const;
    void save(const std::string& path) const;

private:
    struct Series {
        std::string name;
        std::vector<double> xs, ys;
    };
    double width_, height_;
    std::string x_label_, y_label_, title_;
    std::vector<Series> series_;
    std::vector<std::pair<std::string, std::vector<double>>> bars_;
};

}  // namespace crtre::bench

#include "crtre/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "crtre/errors.hpp"

namespace crtre::bench {

namespace {
const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}
}  // namespace

SvgChart::SvgChart(double width, double height) : width_(width), height_(height) {}

void SvgChart::add_series(const std::string& name, const std::vector<double>& xs,
                          const std::vector<double>& ys) {
    series_.push_back({name, xs, ys});
}

void SvgChart::add_bars(const std::string& name, const std::vector<double>& heights) {
    bars_.emplace_back(name, heights);
}

void SvgChart::set_labels(std::string x_label, std::string y_label, std::string title) {
    x_label_ = std::move(x_label);
    y_label_ = std::move(y_label);
    title_ = std::move(title);
}

std::string SvgChart::render() const {
    const double ml = 60, mr = 20, mt = 36, mb = 48;  // margins
    const double pw = width_ - ml - mr;
    const double ph = height_ - mt - mb;

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series_)
        for (size_t k = 0; k < s.xs.size(); ++k) {
            xmin = std::min(xmin, s.xs[k]);
            xmax = std::max(xmax, s.xs[k]);
            ymin = std::min(ymin, s.ys[k]);
            ymax = std::max(ymax, s.ys[k]);
        }
    size_t max_bars = 0;
    for (const auto& [name, h] : bars_) {
        max_bars = std::max(max_bars, h.size());
        for (double v : h) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    if (!std::isfinite(xmin)) {
        xmin = 0;
        xmax = std::max<double>(1, static_cast<double>(max_bars));
    }
    if (!std::isfinite(ymin)) {
        ymin = 0;
        ymax = 1;
    }
    ymin = std::min(ymin, 0.0);
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;

    const auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    const auto py = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream out;
    out.precision(6);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
        << height_ << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n";
    out << "  <rect width=\"" << width_ << "\" height=\"" << height_ << "\" fill=\"white\"/>\n";
    out << "  <text x=\"" << width_ / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
        << escape_xml(title_) << "</text>\n";
    // axes
    out << "  <line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
        << mt + ph << "\" stroke=\"black\"/>\n";
    out << "  <line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";
    out << "  <text x=\"" << ml + pw / 2 << "\" y=\"" << height_ - 10
        << "\" text-anchor=\"middle\" font-size=\"12\">" << escape_xml(x_label_) << "</text>\n";
    out << "  <text x=\"14\" y=\"" << mt + ph / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 " << mt + ph / 2
        << ")\">" << escape_xml(y_label_) << "</text>\n";
    // axis ticks (min/max)
    out << "  <text x=\"" << ml << "\" y=\"" << mt + ph + 16
        << "\" font-size=\"10\" text-anchor=\"middle\">" << xmin << "</text>\n";
    out << "  <text x=\"" << ml + pw << "\" y=\"" << mt + ph + 16
        << "\" font-size=\"10\" text-anchor=\"middle\">" << xmax << "</text>\n";
    out << "  <text x=\"" << ml - 6 << "\" y=\"" << py(ymin)
        << "\" font-size=\"10\" text-anchor=\"end\">" << ymin << "</text>\n";
    out << "  <text x=\"" << ml - 6 << "\" y=\"" << py(ymax) + 4
        << "\" font-size=\"10\" text-anchor=\"end\">" << ymax << "</text>\n";

    size_t color = 0;
    if (!bars_.empty()) {
        const size_t groups = bars_.size();
        for (size_t g = 0; g < groups; ++g) {
            const auto& [name, heights] = bars_[g];
            const double band = pw / static_cast<double>(std::max<size_t>(1, max_bars));
            const double bw = band / static_cast<double>(groups + 1);
            for (size_t k = 0; k < heights.size(); ++k) {
                const double x0 = ml + static_cast<double>(k) * band + bw * static_cast<double>(g);
                const double y0 = py(std::max(0.0, heights[k]));
                const double hgt = std::abs(py(0.0) - py(heights[k]));
                out << "  <rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << bw
                    << "\" height=\"" << hgt << "\" fill=\"" << kPalette[color % 10] << "\"><title>"
                    << escape_xml(name) << "</title></rect>\n";
            }
            ++color;
        }
    }
    for (const auto& s : series_) {
        out << "  <polyline fill=\"none\" stroke=\"" << kPalette[color % 10]
            << "\" stroke-width=\"1.5\" points=\"";
        for (size_t k = 0; k < s.xs.size(); ++k) {
            if (k) out << " ";
            out << px(s.xs[k]) << "," << py(s.ys[k]);
        }
        out << "\"><title>" << escape_xml(s.name) << "</title></polyline>\n";
        // legend entry
        const double ly = mt + 14.0 * static_cast<double>(color);
        out << "  <text x=\"" << ml + pw - 4 << "\" y=\"" << ly
            << "\" font-size=\"10\" text-anchor=\"end\" fill=\"" << kPalette[color % 10] << "\">"
            << escape_xml(s.name) << "</text>\n";
        ++color;
    }
    out << "</svg>\n";
    return out.str();
}

void SvgChart::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << render();
}

}  // namespace crtre::bench

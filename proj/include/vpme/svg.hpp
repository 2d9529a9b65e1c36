#pragma once

#include <string>
#include <vector>

namespace vpme {

struct PlotSeries {
    PlotSeries() = default;
    explicit PlotSeries(std::string l) : label(std::move(l)) {}

    std::string label;
    std::vector<double> x, y;
    bool line = true;
    bool markers = true;
};

struct Plot {
    std::string title, xlabel, ylabel;
    bool logx = true, logy = true;
    std::vector<PlotSeries> series;
};

// Static SVG; returns false (and writes nothing) when there is nothing plottable.
bool write_svg(const std::string& path, const Plot& plot);

}  // namespace vpme
